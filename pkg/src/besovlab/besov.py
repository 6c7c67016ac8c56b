"""Dyadic resolution of unity and Besov norms on lattice functions.

The partition is built from a radial cutoff ``phi_0`` equal to one on
``|xi| <= 1`` and zero on ``|xi| >= 3/2``; the k-th multiplier is
``phi_0(2**-k xi) - phi_0(2**(1-k) xi)``, which makes the partial sums
telescope exactly.
"""

import csv
import io
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import DomainError, ParameterError, ResolutionError, TruncationError
from .grid import FrequencyGrid, GridFunction, GridSpec, fft, ifft, lp_values

INF = math.inf
IMAG_TOL = 1e-10
ROUNDOFF = 1e-13
TAIL_TOL = 1e-8


def _glue(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C-infinity step: 1 for t <= 0, 0 for t >= 1."""
    a = _glue(1.0 - np.asarray(t, dtype=float))
    b = _glue(t)
    return a / (a + b)


def _bump_profile(r):
    return smooth_step((np.asarray(r, dtype=float) - 1.0) / 0.5)


def _cosine_profile(r):
    return np.sin(0.5 * np.pi * smooth_step((np.asarray(r, dtype=float) - 1.0) / 0.5)) ** 2


PROFILES = {"bump": _bump_profile, "cosine": _cosine_profile}


@dataclass(frozen=True)
class BesovParams:
    s: float
    p: float
    q: float
    d: int = 1

    def __post_init__(self):
        if not (self.p >= 1):
            raise ParameterError(f"p must lie in [1, inf], got {self.p}")
        if not (self.q >= 1):
            raise ParameterError(f"q must lie in [1, inf], got {self.q}")
        if self.d not in (1, 2):
            raise ParameterError(f"d must be 1 or 2, got {self.d}")
        if not math.isfinite(self.s):
            raise ParameterError("s must be finite")

    def replace(self, **kw) -> "BesovParams":
        data = {"s": self.s, "p": self.p, "q": self.q, "d": self.d}
        data.update(kw)
        return BesovParams(**data)

    def to_dict(self) -> dict:
        enc = lambda v: "inf" if v == INF else v
        return {"s": self.s, "p": enc(self.p), "q": enc(self.q), "d": self.d}

    @classmethod
    def from_dict(cls, data: dict) -> "BesovParams":
        return cls(float(data["s"]), float(data["p"]), float(data["q"]), int(data.get("d", 1)))


class DyadicPartition:
    """Sampled multipliers phi_0..phi_kmax on the frequency lattice of ``spec``.

    Multipliers are computed on demand; ``k_max`` is the largest index whose
    annulus ``[2**(k-1), 3*2**(k-1)]`` still fits below the Nyquist cutoff.
    """

    def __init__(self, spec: GridSpec, profile: str = "bump"):
        if profile not in PROFILES:
            raise ParameterError(f"unknown cutoff profile {profile!r}")
        self.spec = spec
        self.freq = FrequencyGrid(spec)
        nyq = self.freq.nyquist
        if nyq < 3.0:
            raise ResolutionError(f"Nyquist cutoff {nyq:.3g} < 3: grid too coarse for one annulus")
        self.k_max = int(math.floor(math.log2(nyq / 3.0))) + 1
        self.mother_cutoff = profile
        self._phi0 = PROFILES[profile]

    def phi0(self, r):
        return self._phi0(r)

    def multiplier(self, k: int) -> np.ndarray:
        if not 0 <= k <= self.k_max:
            raise ParameterError(f"block index {k} outside [0, {self.k_max}]")
        r = self.freq.modulus
        if k == 0:
            return self._phi0(r)
        return self._phi0(r * 2.0 ** -k) - self._phi0(r * 2.0 ** (1 - k))

    @cached_property
    def multipliers(self) -> np.ndarray:
        return np.stack([self.multiplier(k) for k in range(self.k_max + 1)])

    def radial_value(self, k: int, r) -> np.ndarray:
        r = np.asarray(r, dtype=float)
        if k == 0:
            return self._phi0(r)
        return self._phi0(r * 2.0 ** -k) - self._phi0(r * 2.0 ** (1 - k))

    @property
    def band_limit(self) -> float:
        """Frequencies above this radius count as truncation tail."""
        return 2.0 ** (self.k_max - 1)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "xi_norm", "phi_k"])
        axis = np.sort(np.unique(np.round(self.freq.modulus.ravel(), 12)))
        for k in range(self.k_max + 1):
            vals = self.radial_value(k, axis)
            for r, v in zip(axis, vals):
                w.writerow([k, repr(float(r)), repr(float(v))])
        return buf.getvalue()


def make_dyadic_partition(spec: GridSpec, profile: str = "bump") -> DyadicPartition:
    return DyadicPartition(spec, profile)


def spectral_tail_mass(f: GridFunction, part: DyadicPartition, spectrum=None) -> float:
    """Share of squared spectral mass at ``|xi| > 2**(k_max-1)``."""
    F = fft(f.values) if spectrum is None else spectrum
    power = np.abs(F) ** 2
    total = float(power.sum())
    if total == 0.0:
        return 0.0
    return float(power[part.freq.modulus > part.band_limit].sum()) / total


def _check_tail(f, part, F, tail_tol):
    if tail_tol is None:
        return
    tail = spectral_tail_mass(f, part, F)
    if tail > tail_tol:
        raise TruncationError(
            f"spectral mass above 2^(k_max-1)={part.band_limit:g} is {tail:.3e} > {tail_tol:g}",
            tail_mass=tail)


def _check_part(f, part):
    if f.spec != part.spec:
        raise ParameterError("function and partition use different grids")


def _check_imag(blk, k, input_norm):
    """Imaginary residual must be below 1e-10 of the block (or at roundoff level of the input)."""
    resid = float(np.linalg.norm(blk.imag))
    scale = float(np.linalg.norm(blk.real))
    if resid > IMAG_TOL * scale and resid > ROUNDOFF * input_norm:
        raise DomainError(f"block {k} has imaginary residual {resid:.3e} (norm {scale:.3e})")


def lp_block(f: GridFunction, part: DyadicPartition, k: int) -> GridFunction:
    """Littlewood-Paley block ``F^-1(phi_k F f)`` (real part; imaginary residual is checked)."""
    _check_part(f, part)
    out = ifft(part.multiplier(k) * fft(f.values))
    _check_imag(out, k, float(np.linalg.norm(f.values)))
    return GridFunction(f.spec, out.real)


def block_norms(f: GridFunction, part: DyadicPartition, p: float, tail_tol=TAIL_TOL) -> np.ndarray:
    """``||F^-1(phi_k F f)||_p`` for k = 0..k_max.

    For p = 2 the norms come from the discrete Parseval identity, which is exact
    for the real blocks of a real input.
    """
    _check_part(f, part)
    F = fft(f.values)
    _check_tail(f, part, F, tail_tol)
    h = f.spec.cell_volume
    out = np.empty(part.k_max + 1)
    if p == 2:
        power = np.abs(F) ** 2
        scale = h / f.spec.size
        for k in range(part.k_max + 1):
            out[k] = math.sqrt(float(np.sum(part.multiplier(k) ** 2 * power)) * scale)
        return out
    fnorm = float(np.linalg.norm(f.values))
    for k in range(part.k_max + 1):
        blk = ifft(part.multiplier(k) * F)
        _check_imag(blk, k, fnorm)
        out[k] = lp_values(blk.real, p, h)
    return out


def aggregate(block_vals: np.ndarray, s: float, q: float) -> float:
    """l^q aggregation of ``2**(k s) * block_vals[k]``; sup for q = inf."""
    terms = block_vals * 2.0 ** (s * np.arange(len(block_vals)))
    if q == INF:
        return float(terms.max())
    top = float(terms.max())
    if top == 0.0:
        return 0.0
    return top * float(np.sum((terms / top) ** q)) ** (1.0 / q)


def besov_norm(f: GridFunction, params: BesovParams, part: DyadicPartition, tail_tol=TAIL_TOL) -> float:
    return aggregate(block_norms(f, part, params.p, tail_tol), params.s, params.q)


def weighted_b0_norm(f: GridFunction, gamma: float, q: float, part: DyadicPartition,
                     tail_tol=TAIL_TOL) -> float:
    """B^0_{2,q} norm of ``f * <x>^-gamma`` (product formed on the lattice)."""
    g = GridFunction(f.spec, f.values * f.spec.weight(-gamma))
    return aggregate(block_norms(g, part, 2, tail_tol), 0.0, q)


def translate(f: GridFunction, shift, support_tol: float = 1e-10) -> GridFunction:
    """Cyclic lattice shift by an integer vector (in grid steps)."""
    shift = tuple(int(v) for v in np.atleast_1d(shift))
    if len(shift) != f.spec.d:
        raise ParameterError("shift dimension does not match the grid")
    moved = GridFunction(f.spec, np.roll(f.values, shift, axis=tuple(range(f.spec.d))))
    if moved.mass_outside(0.5) > support_tol:
        raise DomainError("translated support leaves [-L/2, L/2]^d")
    return moved


def lattice_shift(spec: GridSpec, vector) -> tuple:
    """Convert a real displacement into lattice units, requiring an exact multiple of the step."""
    v = np.atleast_1d(np.asarray(vector, dtype=float)) / spec.step
    r = np.rint(v)
    if np.any(np.abs(v - r) > 1e-9):
        raise ParameterError("shift is not a multiple of the lattice step")
    return tuple(int(x) for x in r)


def norm_equivalence_ratio(fs, part_a: DyadicPartition, part_b: DyadicPartition,
                           params: BesovParams):
    """Extremes of ``besov_norm_a / besov_norm_b`` over a set of functions."""
    fs = list(fs)
    if not fs:
        raise ParameterError("need at least one function")
    ratios = []
    for f in fs:
        a = besov_norm(f, params, part_a)
        b = besov_norm(f, params, part_b)
        if a == 0.0 and b == 0.0:
            continue
        ratios.append(a / b)
    if not ratios:
        raise ParameterError("all functions have zero norm")
    return min(ratios), max(ratios)
