"""Probability measures on the lattice: densities, normalization, moments, integration and sampling."""

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as sint

from .errors import DomainError, ParameterError, ShapeError
from .grid import GridFunction, GridSpec

TAIL_TOL = 1e-4
DIVERGENCE_GROWTH = 0.10


@dataclass(frozen=True, eq=False)
class MeasureSpec:
    """A density on the grid plus the recipe that produced it.

    ``density`` is normalized by the full-space normalizer ``Z`` so that its
    quadrature equals ``1 - tail_mass``.  ``recipe`` rebuilds the measure on a
    different grid (used by the domain-doubling divergence test).
    """
    kind: str
    spec: GridSpec
    density: np.ndarray = field(repr=False)
    normalizer: float
    tail_mass: float
    recipe: dict
    weight_bound: float = math.inf
    lower_bound: float = 0.0

    def __post_init__(self):
        dens = np.asarray(self.density, dtype=float).reshape(self.spec.shape).copy()
        if np.any(dens < 0) or not np.all(np.isfinite(dens)):
            raise ParameterError("density must be finite and nonnegative")
        dens.setflags(write=False)
        object.__setattr__(self, "density", dens)

    @property
    def cell_mass(self) -> np.ndarray:
        return self.density * self.spec.cell_volume

    def total_mass(self) -> float:
        return float(self.cell_mass.sum())

    def rebuild(self, spec: GridSpec) -> "MeasureSpec":
        return from_descriptor({**self.recipe, "grid": spec.to_dict()})

    def to_dict(self) -> dict:
        return {**self.recipe, "grid": self.spec.to_dict()}


_RADIAL_BREAKS = (0.0, 1.0, 10.0, 100.0, 1000.0, 10000.0)


def _radial_total(d, fn):
    """Integral over R^d of a radial function ``fn(r)``, split at decades of the radius.

    The last piece ``[10^4, inf)`` is mapped to ``(0, 10^-4]`` by ``r = 1/t``.
    """
    g = fn if d == 1 else (lambda r: 2.0 * math.pi * r * fn(r))
    val = sum(sint.quad(g, a, b, limit=400)[0] for a, b in zip(_RADIAL_BREAKS, _RADIAL_BREAKS[1:]))
    val += sint.quad(lambda t: g(1.0 / t) / (t * t), 0.0, 1.0 / _RADIAL_BREAKS[-1], limit=400)[0]
    return 2.0 * val if d == 1 else val


def _finish(kind, spec, unnorm, Z, recipe, tail_tol, **kw):
    dens = unnorm / Z
    tail = max(0.0, 1.0 - float(dens.sum()) * spec.cell_volume)
    if tail > tail_tol:
        raise DomainError(f"{kind} measure leaves tail mass {tail:.3e} > {tail_tol:g} outside the grid")
    return MeasureSpec(kind, spec, dens, Z, tail, recipe, **kw)


BASES = {"const": lambda r: np.ones_like(np.asarray(r, dtype=float))}


def make_theorem4_measure(delta: float, spec: GridSpec, base="const", base_bounds=None,
                          tail_tol: float = TAIL_TOL) -> MeasureSpec:
    """Density ``phi(x) <x>^(-d-2 delta) / Z`` with a radial profile ``phi`` bounded above and below.

    ``base`` is ``"const"`` or a callable of the radius; ``base_bounds = (c, C)`` is
    required for callables.  ``Z`` is the integral over all of R^d.
    """
    if not delta > 0:
        raise ParameterError("delta must be positive")
    if isinstance(base, str):
        if base not in BASES:
            raise ParameterError(f"unknown base profile {base!r}")
        fn, bounds, label = BASES[base], (1.0, 1.0), base
    else:
        if base_bounds is None:
            raise ParameterError("callable bases need explicit (lower, upper) bounds")
        fn, bounds, label = base, tuple(base_bounds), "callable"
    c, C = bounds
    if not 0 < c <= C < math.inf:
        raise ParameterError("base must satisfy 0 < c <= phi <= C < inf")
    d = spec.d
    expo = -(d + 2.0 * delta) / 2.0
    Z = _radial_total(d, lambda r: float(fn(r)) * (1.0 + r * r) ** expo)
    unnorm = fn(spec.radius) * spec.weight(-(d + 2.0 * delta))
    recipe = {"kind": "thm4", "delta": delta, "base": label}
    m = _finish("thm4", spec, unnorm, Z, recipe, tail_tol, lower_bound=c)
    object.__setattr__(m, "base_bounds", (c, C))
    return m


def gaussian_measure(spec: GridSpec, sigma: float = 1.0, tail_tol: float = TAIL_TOL) -> MeasureSpec:
    """Centred isotropic Gaussian; ``sup density <x>^d`` is finite."""
    if not sigma > 0:
        raise ParameterError("sigma must be positive")
    d = spec.d
    Z = (2.0 * math.pi * sigma ** 2) ** (d / 2.0)
    unnorm = np.exp(-spec.radius ** 2 / (2.0 * sigma ** 2))
    # exp(-(u-1)/(2 sigma^2)) u^(d/2) with u = 1 + r^2 peaks at u = max(1, d sigma^2)
    u = max(1.0, d * sigma ** 2)
    wb = math.exp(-(u - 1.0) / (2.0 * sigma ** 2)) * u ** (d / 2.0) / Z
    recipe = {"kind": "gaussian", "sigma": sigma}
    return _finish("bounded_density", spec, unnorm, Z, recipe, tail_tol, weight_bound=wb)


def uniform_measure(spec: GridSpec, radius: float, tail_tol: float = TAIL_TOL) -> MeasureSpec:
    """Uniform law on the lattice cells inside ``[-radius, radius]^d``, normalized by quadrature."""
    if not 0 < radius <= spec.half_width:
        raise ParameterError("radius must lie in (0, L]")
    mask = spec.inner_mask(radius / spec.half_width)
    count = int(mask.sum())
    if count == 0:
        raise DomainError("no lattice cell inside the support")
    Z = count * spec.cell_volume
    dens_val = 1.0 / Z
    r_far = math.sqrt(spec.d) * radius
    wb = dens_val * (1.0 + r_far ** 2) ** (spec.d / 2.0)
    recipe = {"kind": "uniform", "radius": radius}
    return _finish("bounded_density", spec, mask.astype(float), Z, recipe, tail_tol,
                   weight_bound=wb, lower_bound=dens_val)


def lebesgue_reference(spec: GridSpec) -> MeasureSpec:
    """Unit density (not a probability measure); used as a reference for plain L^2."""
    return MeasureSpec("lebesgue_reference", spec, np.ones(spec.shape), 1.0, 0.0,
                       {"kind": "lebesgue_reference"})


def from_descriptor(desc: dict) -> MeasureSpec:
    """Build a measure from its JSON descriptor."""
    if "grid" not in desc:
        raise ParameterError("measure descriptor needs a grid")
    spec = GridSpec.from_dict(desc["grid"])
    kind = desc.get("kind")
    tail_tol = float(desc.get("tail_tol", TAIL_TOL))
    if kind == "thm4":
        base = desc.get("base", "const")
        if base not in BASES:
            raise ParameterError("only named bases can be rebuilt from a descriptor")
        return make_theorem4_measure(float(desc["delta"]), spec, base, tail_tol=tail_tol)
    if kind == "gaussian":
        return gaussian_measure(spec, float(desc.get("sigma", 1.0)), tail_tol)
    if kind == "uniform":
        return uniform_measure(spec, float(desc["radius"]), tail_tol)
    if kind == "lebesgue_reference":
        return lebesgue_reference(spec)
    raise ParameterError(f"unknown measure kind {kind!r}")


@dataclass(frozen=True)
class MomentResult:
    value: float
    doubled_value: float
    divergent: bool


def moment(m: MeasureSpec, gamma: float) -> MomentResult:
    """Quadrature of ``|x|**(2 gamma)``; divergent if doubling L raises it by more than 10%."""
    def q(meas):
        return float(np.sum(meas.spec.radius ** (2.0 * gamma) * meas.cell_mass))

    v = q(m)
    big = GridSpec(m.spec.d, 2.0 * m.spec.half_width, 2 * m.spec.points_per_axis)
    v2 = q(m.rebuild(big))
    div = v2 > (1.0 + DIVERGENCE_GROWTH) * v if v > 0 else v2 > 0
    return MomentResult(v, v2, bool(div))


def integrate(m: MeasureSpec, f: GridFunction) -> float:
    if f.spec != m.spec:
        raise ShapeError("function and measure use different grids")
    return float(np.sum(f.values * m.cell_mass))


def _cell_index(cdf, u):
    return np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)


def sample_points(m: MeasureSpec, n: int, seed) -> np.ndarray:
    """I.i.d. draws, shape ``(n, d)``: a lattice cell by inverse CDF, then uniform inside it.

    The law is the grid density conditioned on the truncated domain.  For d = 2
    the row is drawn from the marginal and the column from the conditional.
    """
    if n < 1:
        raise ParameterError("n must be >= 1")
    rng = np.random.default_rng(seed)
    spec = m.spec
    h = spec.step
    mass = m.cell_mass
    if spec.d == 1:
        cdf = np.cumsum(mass)
        cdf /= cdf[-1]
        idx = _cell_index(cdf, rng.uniform(size=n))
        pts = spec.axis[idx] + h * (rng.uniform(size=n) - 0.5)
        return pts[:, None]
    rows = mass.sum(axis=1)
    rcdf = np.cumsum(rows)
    rcdf /= rcdf[-1]
    i = _cell_index(rcdf, rng.uniform(size=n))
    ccdf = np.cumsum(mass, axis=1)
    ccdf /= ccdf[:, -1:]
    u = rng.uniform(size=n)
    j = np.array([_cell_index(ccdf[a], b) for a, b in zip(i, u)])
    jit = h * (rng.uniform(size=(n, 2)) - 0.5)
    return np.column_stack([spec.axis[i], spec.axis[j]]) + jit


def sample_cells(m: MeasureSpec, n: int, seed) -> np.ndarray:
    """Flat lattice indices of the cells containing ``sample_points(m, n, seed)``."""
    pts = sample_points(m, n, seed)
    spec = m.spec
    idx = np.rint((pts + spec.half_width) / spec.step).astype(int)
    idx = np.clip(idx, 0, spec.points_per_axis - 1)
    return np.ravel_multi_index(tuple(idx.T), spec.shape)


def quadrature_cdf(m: MeasureSpec, x) -> np.ndarray:
    """Distribution function of the sampler's law (d = 1), piecewise linear in each cell."""
    if m.spec.d != 1:
        raise ParameterError("distribution function only for d = 1")
    spec = m.spec
    mass = m.cell_mass / m.cell_mass.sum()
    edges = np.concatenate([spec.axis - spec.step / 2, [spec.axis[-1] + spec.step / 2]])
    cum = np.concatenate([[0.0], np.cumsum(mass)])
    return np.interp(np.asarray(x, dtype=float), edges, cum)


def points_to_csv(points) -> str:
    pts = np.asarray(points, dtype=float)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    names = ["x"] if pts.shape[1] == 1 else [f"x{i + 1}" for i in range(pts.shape[1])]
    w.writerow(["index", *names])
    for i, row in enumerate(pts):
        w.writerow([i, *[repr(float(v)) for v in row]])
    return buf.getvalue()
