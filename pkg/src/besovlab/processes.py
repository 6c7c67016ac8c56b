"""Monte Carlo for the Brownian bridge and the empirical process indexed by a finite net.

All expectations use the measure's grid law renormalized to total mass one, which
is exactly the law ``sample_points`` draws from; constants are then centred to zero.
"""

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .entropy import _farthest_point_packing, _greedy_packing, canonical_order
from .errors import DegeneracyError, ParameterError
from .measures import MeasureSpec, sample_cells

EIG_FLOOR = 1e-10
CLIP_LIMIT = 1e-6
JITTERS = (1e-12, 1e-11, 1e-10, 1e-9, 1e-8)
CHUNK = 250


def grid_law(m: MeasureSpec) -> np.ndarray:
    mass = m.cell_mass.ravel()
    return mass / mass.sum()


def _check(net, m):
    if net.spec != m.spec:
        raise ParameterError("net and measure use different grids")
    if len(net) == 0:
        raise ParameterError("empty net")


def means(net, m: MeasureSpec) -> np.ndarray:
    _check(net, m)
    return net.matrix() @ grid_law(m)


ROUNDOFF = 1e-13


def _centered(net, m):
    """Members minus their means; entries at roundoff level of the member scale are zeroed
    so constant members are exactly zero."""
    X = net.matrix()
    mu = X @ grid_law(m)
    Xc = X - mu[:, None]
    scale = np.maximum(np.abs(X).max(axis=1), 1.0)
    Xc[np.abs(Xc) <= ROUNDOFF * scale[:, None]] = 0.0
    return Xc, mu


def _raw_covariance(net, m):
    _check(net, m)
    Xc, mu = _centered(net, m)
    C = (Xc * grid_law(m)) @ Xc.T
    return 0.5 * (C + C.T), mu


def covariance_matrix(net, m: MeasureSpec) -> np.ndarray:
    """``P[(f - Pf)(g - Pg)]`` over the net; negative eigenvalues are clipped to zero."""
    key = ("cov", id(m))
    hit = net._cache.get(key)
    if hit is not None and hit[0] is m:
        return hit[1]
    C, _ = _raw_covariance(net, m)
    lam, V = np.linalg.eigh(C)
    scale = max(1.0, float(np.abs(np.diag(C)).max()))
    neg = lam < -EIG_FLOOR * scale
    trace = float(np.trace(C))
    clipped = float(-lam[lam < 0].sum())
    if neg.any() and clipped > CLIP_LIMIT * max(trace, 1e-300):
        raise DegeneracyError(f"covariance has negative mass {clipped:.3e} against trace {trace:.3e}")
    if (lam < 0).any():
        C = (V * np.maximum(lam, 0.0)) @ V.T
        C = 0.5 * (C + C.T)
    C.setflags(write=False)
    net._cache[key] = (m, C)
    return C


def rho_semimetric(net, m: MeasureSpec) -> np.ndarray:
    """Intrinsic distance ``sqrt(C_ii + C_jj - 2 C_ij)`` of the bridge."""
    C, _ = _raw_covariance(net, m)
    dg = np.diag(C)
    R2 = dg[:, None] + dg[None, :] - 2.0 * C
    tol = EIG_FLOOR * max(1.0, float(np.abs(dg).max()))
    if R2.min() < -tol:
        raise DegeneracyError(f"negative squared distance {R2.min():.3e}")
    R = np.sqrt(np.maximum(R2, 0.0))
    R = 0.5 * (R + R.T)
    np.fill_diagonal(R, 0.0)
    return R


def cholesky_factor(C: np.ndarray) -> np.ndarray:
    """Lower factor of ``C + j*mean(diag)*I``, with ``j`` escalating from 1e-12 to 1e-8."""
    scale = float(np.mean(np.diag(C)))
    if scale <= 0:
        return np.zeros_like(C)
    eye = np.eye(len(C))
    for j in JITTERS:
        try:
            return np.linalg.cholesky(C + j * scale * eye)
        except np.linalg.LinAlgError:
            continue
    raise DegeneracyError("covariance factorization failed after jitter escalation")


def _chunks(reps: int):
    return [(a, min(reps, a + CHUNK)) for a in range(0, reps, CHUNK)]


def _run_chunks(fn, reps, seed, threads):
    """Evaluate ``fn(rng, count)`` on fixed-size chunks with spawned seeds; order is by chunk."""
    bounds = _chunks(reps)
    seqs = np.random.SeedSequence(seed).spawn(len(bounds))
    jobs = [(np.random.default_rng(sq), b - a) for sq, (a, b) in zip(seqs, bounds)]
    if threads == 1 or len(jobs) == 1:
        parts = [fn(*j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads or None) as ex:
            parts = list(ex.map(lambda j: fn(*j), jobs))
    return np.concatenate(parts)


def gaussian_draws(net, m: MeasureSpec, reps: int, seed, variant: str = "G", threads: int = 1):
    """``reps`` draws of the process vector over the net, shape ``(reps, M)``."""
    if variant not in ("G", "L"):
        raise ParameterError("variant must be 'G' (bridge) or 'L' (bridge plus Z Pf)")
    C = covariance_matrix(net, m)
    Lc = cholesky_factor(C)
    mu = means(net, m)

    def one(rng, k):
        z = rng.standard_normal((k, len(C))) @ Lc.T
        if variant == "L":
            z = z + rng.standard_normal((k, 1)) * mu[None, :]
        return z

    return _run_chunks(one, reps, seed, threads)


def sample_gaussian_sup(net, m: MeasureSpec, reps: int, seed, variant: str = "G",
                        threads: int = 1) -> tuple:
    """Monte Carlo mean of ``sup_f |process(f)|`` and its standard error."""
    if reps < 100:
        raise ParameterError("reps must be >= 100")
    sups = np.abs(gaussian_draws(net, m, reps, seed, variant, threads)).max(axis=1)
    return float(sups.mean()), float(sups.std(ddof=1) / math.sqrt(reps))


def sudakov_value(net, m: MeasureSpec, eps_grid, order=None) -> float:
    """``max_eps eps * sqrt(log N_pack(eps))`` under the intrinsic distance."""
    R = rho_semimetric(net, m)
    if order is None:
        order = canonical_order(net, R)
    R = R[np.ix_(order, order)]
    order = np.arange(len(R))
    best = 0.0
    for e in eps_grid:
        if not e > 0:
            raise ParameterError("eps values must be positive")
        n = max(_greedy_packing(R, e, order), _farthest_point_packing(R, e, int(order[0])))
        best = max(best, e * math.sqrt(math.log(n)))
    return best


def empirical_draws(net, m: MeasureSpec, n: int, reps: int, seed, threads: int = 1) -> np.ndarray:
    """``nu_n(f)`` for every member in each replication, shape ``(reps, M)``.

    Replication r draws its sample with ``sample_points`` under the r-th child of
    ``SeedSequence(seed)``, so results do not depend on ``threads``.
    """
    _check(net, m)
    if n < 1:
        raise ParameterError("n must be >= 1")
    X = net.matrix()
    w = grid_law(m)
    seqs = np.random.SeedSequence(seed).spawn(reps)
    G = net.spec.size

    def chunk(a, b):
        counts = np.empty((G, b - a))
        for j, r in enumerate(range(a, b)):
            cells = sample_cells(m, n, seqs[r])
            counts[:, j] = np.bincount(cells, minlength=G)
        return ((X @ (counts - n * w[:, None])) / math.sqrt(n)).T

    bounds = _chunks(reps)
    if threads == 1 or len(bounds) == 1:
        parts = [chunk(a, b) for a, b in bounds]
    else:
        with ThreadPoolExecutor(max_workers=threads or None) as ex:
            parts = list(ex.map(lambda ab: chunk(*ab), bounds))
    return np.concatenate(parts)


@dataclass(frozen=True)
class QuantileSummary:
    median: float
    median_se: float
    q90: float
    q90_se: float
    mean: float
    mean_se: float
    reps: int


def empirical_process_sup(net, m: MeasureSpec, n: int, reps: int, seed, threads: int = 1,
                          boot: int = 200) -> QuantileSummary:
    """Median and 0.9-quantile of ``sup_f |nu_n(f)|`` with bootstrap standard errors."""
    if reps < 100:
        raise ParameterError("reps must be >= 100")
    sups = np.abs(empirical_draws(net, m, n, reps, seed, threads)).max(axis=1)
    rng = np.random.default_rng(np.random.SeedSequence(seed).spawn(reps + 1)[-1])
    idx = rng.integers(0, reps, size=(boot, reps))
    bs = sups[idx]
    return QuantileSummary(float(np.median(sups)), float(np.median(bs, axis=1).std(ddof=1)),
                           float(np.quantile(sups, 0.9)), float(np.quantile(bs, 0.9, axis=1).std(ddof=1)),
                           float(sups.mean()), float(sups.std(ddof=1) / math.sqrt(reps)), reps)


def envelope_values(net, m: MeasureSpec, n_probe: int, seed) -> np.ndarray:
    """``max_f |f(X) - Pf|`` at ``n_probe`` points drawn from ``m``."""
    _check(net, m)
    cells = sample_cells(m, n_probe, seed)
    Xc, _ = _centered(net, m)
    return np.abs(Xc[:, cells]).max(axis=0)


def envelope_tail(net, m: MeasureSpec, t_grid, n_probe: int, seed) -> list:
    t = np.asarray(t_grid, dtype=float)
    if np.any(t <= 0) or np.any(np.diff(t) <= 0):
        raise ParameterError("t grid must be positive and increasing")
    env = envelope_values(net, m, n_probe, seed)
    return [(float(ti), float(ti * ti * np.mean(env > ti))) for ti in t]


@dataclass
class ProcessReport:
    rows: list = field(default_factory=list)
    config: dict = field(default_factory=dict)

    def add(self, level, estimator, value, stderr=0.0):
        self.rows.append((int(level), str(estimator), float(value), float(stderr)))

    def series(self, estimator) -> list:
        return [(lv, v, se) for lv, e, v, se in self.rows if e == estimator]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["level", "estimator", "value", "stderr"])
        for lv, e, v, se in self.rows:
            w.writerow([lv, e, repr(v), repr(se)])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"config": self.config,
                           "rows": [dict(zip(("level", "estimator", "value", "stderr"), r))
                                    for r in self.rows]}, indent=2, sort_keys=True)
