import sys
import numpy as np
import pytest

from besovlab.besov import make_dyadic_partition
from besovlab.grid import GridFunction, GridSpec


def random_bandlimited(spec, rng, cutoff):
    """Real lattice function whose spectrum vanishes above ``cutoff``."""
    freq = spec.frequency_grid()
    coef = rng.standard_normal(spec.shape) + 1j * rng.standard_normal(spec.shape)
    coef[freq.modulus > cutoff] = 0.0
    vals = np.fft.ifftn(coef).real
    return GridFunction(spec, vals / np.abs(vals).max())


def localized_bandlimited(spec, rng, cutoff, width):
    """Band-limited function concentrated near the origin (Gaussian-windowed spectrum)."""
    freq = spec.frequency_grid()
    phase = sum(rng.uniform(-width, width) * w for w in freq.frequencies)
    coef = np.exp(-freq.modulus ** 2 * (0.5 / cutoff) ** 2 * 8) * np.exp(1j * phase)
    coef = coef * (1 + 0.5 * rng.standard_normal(spec.shape))
    coef[freq.modulus > cutoff] = 0.0
    vals = np.fft.ifftn(coef).real
    return GridFunction(spec, vals / np.abs(vals).max())


@pytest.fixture(scope="session")
def grid1d():
    return GridSpec(1, 16.0, 4096)


@pytest.fixture(scope="session")
def part1d(grid1d):
    return make_dyadic_partition(grid1d)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(lines):
        terminalreporter.write_line(lines[n])
