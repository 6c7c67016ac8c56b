"""Uniform lattice functions on [-L, L]^d, their discrete Fourier transform and L^r norms."""

import io
import math
import struct
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ParameterError, ShapeError

BGF_MAGIC = b"BGF1"
_BGF_HEADER = struct.Struct("<4sIId")


@dataclass(frozen=True)
class GridSpec:
    d: int
    half_width: float
    points_per_axis: int

    def __post_init__(self):
        n = self.points_per_axis
        if self.d not in (1, 2):
            raise ParameterError(f"dimension must be 1 or 2, got {self.d}")
        if not self.half_width > 0:
            raise ParameterError("half_width must be positive")
        if n < 16 or n & (n - 1):
            raise ParameterError(f"points_per_axis must be a power of two >= 16, got {n}")

    @property
    def step(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def cell_volume(self) -> float:
        return self.step ** self.d

    @property
    def shape(self):
        return (self.points_per_axis,) * self.d

    @property
    def size(self) -> int:
        return self.points_per_axis ** self.d

    @property
    def nyquist(self) -> float:
        return math.pi * self.points_per_axis / (2.0 * self.half_width)

    @cached_property
    def axis(self) -> np.ndarray:
        n = self.points_per_axis
        return -self.half_width + self.step * np.arange(n)

    @cached_property
    def coords(self) -> tuple:
        """Coordinate arrays, one per axis, each of shape ``self.shape``."""
        if self.d == 1:
            return (self.axis,)
        return tuple(np.meshgrid(self.axis, self.axis, indexing="ij"))

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(sum(c * c for c in self.coords))

    def weight(self, gamma: float) -> np.ndarray:
        """``<x>^gamma`` sampled on the lattice."""
        return (1.0 + self.radius ** 2) ** (gamma / 2.0)

    def frequency_grid(self) -> "FrequencyGrid":
        return FrequencyGrid(self)

    def inner_mask(self, fraction: float = 0.5) -> np.ndarray:
        """Lattice points inside the cube [-fraction*L, fraction*L]^d."""
        lim = fraction * self.half_width + 1e-12 * self.half_width
        mask = np.ones(self.shape, dtype=bool)
        for c in self.coords:
            mask &= np.abs(c) <= lim
        return mask

    def index_of(self, point) -> tuple:
        """Nearest lattice index of a point (clipped to the grid)."""
        pt = np.atleast_1d(np.asarray(point, dtype=float))
        idx = np.rint((pt + self.half_width) / self.step).astype(int)
        idx = np.clip(idx, 0, self.points_per_axis - 1)
        return tuple(int(i) for i in idx)

    def to_dict(self) -> dict:
        return {"d": self.d, "half_width": self.half_width, "points_per_axis": self.points_per_axis}

    @classmethod
    def from_dict(cls, data: dict) -> "GridSpec":
        return cls(int(data["d"]), float(data["half_width"]), int(data["points_per_axis"]))


class FrequencyGrid:
    """The discrete dual lattice of a GridSpec, in FFT ordering.

    Frequencies are angular, ``xi = 2*pi*k / (N*h)``, so that the sampled transform
    ``sum_j f(x_j) exp(-i xi x_j) h^d`` is the Riemann sum of the continuous one.
    """

    def __init__(self, spec: GridSpec):
        self.spec = spec
        n = spec.points_per_axis
        self.axis = 2.0 * math.pi * np.fft.fftfreq(n, d=spec.step)
        if spec.d == 1:
            self.frequencies = (self.axis,)
        else:
            self.frequencies = tuple(np.meshgrid(self.axis, self.axis, indexing="ij"))
        self.modulus = np.sqrt(sum(w * w for w in self.frequencies))
        self.nyquist = spec.nyquist
        self.cell_volume = (2.0 * math.pi / (n * spec.step)) ** spec.d


@dataclass(frozen=True, eq=False)
class GridFunction:
    spec: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.size != self.spec.size:
            raise ShapeError(f"expected {self.spec.size} samples, got {vals.size}")
        vals = vals.reshape(self.spec.shape).copy()
        if not np.all(np.isfinite(vals)):
            raise ParameterError("grid function values must be finite")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @classmethod
    def from_callable(cls, spec: GridSpec, fn) -> "GridFunction":
        return cls(spec, fn(*spec.coords))

    @classmethod
    def zeros(cls, spec: GridSpec) -> "GridFunction":
        return cls(spec, np.zeros(spec.shape))

    def _check(self, other: "GridFunction"):
        if other.spec != self.spec:
            raise ShapeError("grid functions live on different grids")

    def __add__(self, other):
        self._check(other)
        return GridFunction(self.spec, self.values + other.values)

    def __sub__(self, other):
        self._check(other)
        return GridFunction(self.spec, self.values - other.values)

    def __mul__(self, c):
        if isinstance(c, GridFunction):
            self._check(c)
            return GridFunction(self.spec, self.values * c.values)
        return GridFunction(self.spec, self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return GridFunction(self.spec, -self.values)

    def fourier(self) -> np.ndarray:
        """Sampled Fourier transform up to a unimodular phase (FFT ordering)."""
        return fft(self.values) * self.spec.cell_volume

    def evaluate(self, points) -> np.ndarray:
        """Cellwise-constant evaluation: each point takes the value of its nearest lattice point."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.spec.d)
        idx = np.rint((pts + self.spec.half_width) / self.spec.step).astype(int)
        idx = np.clip(idx, 0, self.spec.points_per_axis - 1)
        return self.values[tuple(idx.T)]

    def mass_outside(self, fraction: float = 0.5) -> float:
        """Fraction of squared L2 mass outside [-fraction*L, fraction*L]^d."""
        total = float(np.sum(self.values ** 2))
        if total == 0.0:
            return 0.0
        out = float(np.sum(self.values[~self.spec.inner_mask(fraction)] ** 2))
        return out / total

    # serialization
    def to_csv(self) -> str:
        buf = io.StringIO()
        names = ["x"] if self.spec.d == 1 else ["x1", "x2"]
        buf.write(",".join(["index", *names, "value"]) + "\n")
        flat = self.values.ravel()
        coords = [c.ravel() for c in self.spec.coords]
        for i in range(flat.size):
            row = [str(i)] + [repr(float(c[i])) for c in coords] + [repr(float(flat[i]))]
            buf.write(",".join(row) + "\n")
        return buf.getvalue()

    def to_bytes(self) -> bytes:
        head = _BGF_HEADER.pack(BGF_MAGIC, self.spec.d, self.spec.points_per_axis, self.spec.half_width)
        return head + self.values.astype("<f8").tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "GridFunction":
        magic, d, n, half = _BGF_HEADER.unpack_from(blob)
        if magic != BGF_MAGIC:
            raise ParameterError("not a BGF1 dump")
        spec = GridSpec(d, half, n)
        vals = np.frombuffer(blob, dtype="<f8", offset=_BGF_HEADER.size)
        return cls(spec, vals)

    @classmethod
    def from_csv(cls, text: str, spec: GridSpec) -> "GridFunction":
        rows = text.strip().splitlines()[1:]
        vals = np.array([float(r.rsplit(",", 1)[1]) for r in rows])
        return cls(spec, vals)


def fft(values: np.ndarray) -> np.ndarray:
    return np.fft.fftn(values) if values.ndim > 1 else np.fft.fft(values)


def ifft(values: np.ndarray) -> np.ndarray:
    return np.fft.ifftn(values) if values.ndim > 1 else np.fft.ifft(values)


def _check_r(r: float):
    if not (r >= 1 or r == math.inf):
        raise ParameterError(f"integrability exponent must lie in [1, inf], got {r}")


def lp_values(values: np.ndarray, r: float, cell_volume: float) -> float:
    _check_r(r)
    a = np.abs(values)
    if r == math.inf:
        return float(a.max()) if a.size else 0.0
    if r == 1:
        return float(a.sum() * cell_volume)
    if r == 2:
        return math.sqrt(float(np.vdot(a, a).real) * cell_volume)
    top = float(a.max())
    if top == 0.0:
        return 0.0
    return top * float(np.sum((a / top) ** r) * cell_volume) ** (1.0 / r)


def lp_norm(f: GridFunction, r: float) -> float:
    """Riemann-sum L^r(lambda) norm; ``r = math.inf`` gives the maximum modulus."""
    return lp_values(f.values, r, f.spec.cell_volume)


def weight_eval(x, gamma: float) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    return float((1.0 + np.dot(x, x)) ** (gamma / 2.0))


def weighted_l2_distance(f: GridFunction, g: GridFunction, gamma: float) -> float:
    f._check(g)
    diff = (f.values - g.values) * f.spec.weight(-gamma)
    return lp_values(diff, 2, f.spec.cell_volume)
