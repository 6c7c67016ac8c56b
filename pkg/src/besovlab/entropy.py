"""Covering and packing numbers of nets, entropy-exponent fits and predicted exponents."""

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .besov import BesovParams
from .errors import BoundaryError, FitError, HypothesisError, ParameterError
from .measures import MeasureSpec


@dataclass(frozen=True, eq=False)
class MetricSpec:
    """L^2 pseudometric ``||(f - g) w||_2`` for a pointwise weight ``w >= 0``.

    kinds: ``plain_l2``; ``weighted_l2`` (``w = <x>^-gamma``); ``l2_measure``
    (``w = sqrt(density)``); ``l2_restricted`` (indicator of a ball).
    """
    kind: str
    gamma: float = 0.0
    measure: MeasureSpec = None
    center: tuple = (0.0,)
    radius: float = 1.0

    def __post_init__(self):
        if self.kind not in ("plain_l2", "weighted_l2", "l2_measure", "l2_restricted"):
            raise ParameterError(f"unknown metric kind {self.kind!r}")
        if self.kind == "l2_measure" and self.measure is None:
            raise ParameterError("l2_measure needs a measure")
        if self.kind == "l2_restricted" and not self.radius > 0:
            raise ParameterError("restriction radius must be positive")

    def weight(self, spec) -> np.ndarray:
        if self.kind == "plain_l2":
            return np.ones(spec.shape)
        if self.kind == "weighted_l2":
            return spec.weight(-self.gamma)
        if self.kind == "l2_measure":
            if self.measure.spec != spec:
                raise ParameterError("measure and net use different grids")
            return np.sqrt(self.measure.density)
        c = np.broadcast_to(np.atleast_1d(np.asarray(self.center, dtype=float)), (spec.d,))
        r2 = sum((x - ci) ** 2 for x, ci in zip(spec.coords, c))
        return (r2 <= self.radius ** 2).astype(float)

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "weighted_l2":
            out["gamma"] = self.gamma
        elif self.kind == "l2_measure":
            out["measure"] = self.measure.to_dict()
        elif self.kind == "l2_restricted":
            out.update(center=list(np.atleast_1d(self.center).astype(float)), radius=self.radius)
        return out


def _gram(net, metric: MetricSpec) -> np.ndarray:
    w = metric.weight(net.spec).ravel()
    h = net.spec.cell_volume
    if net.linear:
        bw = net.basis * w
        gb = (bw @ bw.T) * h
        return net.coeffs @ gb @ net.coeffs.T
    vw = net.values * w
    return (vw @ vw.T) * h


def distance_matrix(net, metric: MetricSpec) -> np.ndarray:
    """Pairwise distances, cached on the net per metric object."""
    key = ("dist", id(metric))
    hit = net._cache.get(key)
    if hit is not None and hit[0] is metric:
        return hit[1]
    G = _gram(net, metric)
    dg = np.diag(G)
    D2 = dg[:, None] + dg[None, :] - 2.0 * G
    D = np.sqrt(np.maximum(D2, 0.0))
    D = 0.5 * (D + D.T)
    np.fill_diagonal(D, 0.0)
    D.setflags(write=False)
    # the metric is kept alive with the entry so its id cannot be reused
    net._cache[key] = (metric, D)
    return D


def canonical_order(net, D: np.ndarray) -> np.ndarray:
    """Storage-independent ordering: by distance-row sum, ties broken by member content."""
    keys = net.canonical_keys()
    probe = np.random.default_rng(12345).standard_normal(keys.shape[1])
    content = np.round(keys @ probe, 8) + 0.0
    rowsum = np.round(D.sum(axis=1), 9)
    return np.lexsort((content, rowsum))


def _canonical_matrix(net, D: np.ndarray) -> np.ndarray:
    """``D`` reindexed in canonical order, so argmax tie-breaks do not depend on storage."""
    order = canonical_order(net, D)
    return D[np.ix_(order, order)]


def _greedy_set_cover(A: np.ndarray) -> int:
    n = len(A)
    uncovered = np.ones(n, dtype=bool)
    counts = A.sum(axis=1).astype(np.int64)
    used = 0
    while uncovered.any():
        c = int(np.argmax(counts))
        new = A[c] & uncovered
        uncovered &= ~new
        counts -= A[new].sum(axis=0)
        used += 1
    return used


def _farthest_point_cover(D: np.ndarray, eps: float, start: int) -> int:
    dist = D[start].copy()
    used = 1
    while True:
        j = int(np.argmax(dist))
        if dist[j] <= eps:
            return used
        dist = np.minimum(dist, D[j])
        used += 1


def _greedy_packing(D: np.ndarray, eps: float, order) -> int:
    mind = np.full(len(D), np.inf)
    count = 0
    for j in order:
        if mind[j] > eps:
            count += 1
            mind = np.minimum(mind, D[j])
    return count


def _farthest_point_packing(D: np.ndarray, eps: float, start: int) -> int:
    dist = D[start].copy()
    count = 1
    while True:
        j = int(np.argmax(dist))
        if dist[j] <= eps:
            return count
        count += 1
        dist = np.minimum(dist, D[j])


def cover_pack_counts(D: np.ndarray, eps: float, order) -> tuple:
    """``(N_cover, N_pack)`` on a distance matrix; closed balls, strict packing separation.

    Each count is the best of several valid heuristics.  Farthest-point runs start both
    at the first canonical member and at the member farthest from it (a peripheral one).
    """
    order = np.asarray(order)
    start = int(order[0])
    edge = int(np.argmax(D[start]))
    A = D <= eps
    n_cover = min(_greedy_set_cover(A), _farthest_point_cover(D, eps, start),
                  _farthest_point_cover(D, eps, edge))
    n_pack = max(_greedy_packing(D, eps, order), _greedy_packing(D, eps, order[::-1]),
                 _farthest_point_packing(D, eps, start), _farthest_point_packing(D, eps, edge))
    return n_cover, n_pack


def covering_packing(net, metric: MetricSpec, eps: float) -> tuple:
    if len(net) == 0:
        raise ParameterError("empty net")
    if not eps > 0:
        raise ParameterError("eps must be positive")
    D = _canonical_matrix(net, distance_matrix(net, metric))
    return cover_pack_counts(D, eps, np.arange(len(D)))


@dataclass
class EntropyCurve:
    epsilon: np.ndarray
    n_cover: np.ndarray
    n_pack: np.ndarray
    alpha_hat: float
    intercept: float
    window: tuple
    residual: float
    fit_mode: str = "count"
    net_size: int = 0
    extra: dict = field(default_factory=dict)

    @property
    def points(self) -> list:
        return list(zip(self.epsilon.tolist(), self.n_cover.tolist(), self.n_pack.tolist()))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epsilon", "n_cover", "n_pack"])
        for e, c, p in self.points:
            w.writerow([repr(float(e)), int(c), int(p)])
        return buf.getvalue()

    def fit_record(self, predicted=None, regime=None) -> dict:
        return {"alpha_hat": self.alpha_hat, "intercept": self.intercept,
                "window": list(self.window), "residual": self.residual,
                "fit_mode": self.fit_mode, "predicted_alpha": predicted, "regime": regime,
                "net_size": self.net_size}

    def to_json(self, predicted=None, regime=None) -> str:
        return json.dumps(self.fit_record(predicted, regime), indent=2, sort_keys=True)


def fit_exponent(eps, counts, lo=4, hi=None, mode="count"):
    """Least squares slope of ``log N`` (mode "count") or ``log log N`` (mode "entropy")
    against ``log(1/eps)`` over points with ``lo <= N <= hi``."""
    eps = np.asarray(eps, dtype=float)
    counts = np.asarray(counts, dtype=float)
    sel = (counts >= lo) & (counts <= (np.inf if hi is None else hi))
    if mode == "entropy":
        sel &= counts > 1
    if sel.sum() < 3:
        raise FitError(f"only {int(sel.sum())} usable points in the fit window")
    x = np.log(1.0 / eps[sel])
    y = np.log(counts[sel]) if mode == "count" else np.log(np.log(counts[sel]))
    A = np.column_stack([x, np.ones_like(x)])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = float(np.sqrt(np.mean((A @ coef - y) ** 2)))
    window = (float(eps[sel].min()), float(eps[sel].max()))
    return float(coef[0]), float(coef[1]), window, res


def entropy_curve(net, metric: MetricSpec, eps_grid, fit: str = "count") -> EntropyCurve:
    """Covering/packing counts over ``eps_grid`` and the exponent fit.

    N_cover is reported as the running minimum from small to large eps (a cover at
    a smaller radius also covers at a larger one), which keeps it monotone.
    """
    eps = np.sort(np.asarray(eps_grid, dtype=float))[::-1]
    if np.any(eps <= 0):
        raise ParameterError("eps values must be positive")
    if eps[0] / eps[-1] < 10.0 * (1 - 1e-12):
        raise ParameterError("eps grid must span at least one decade")
    if len(net) == 0:
        raise ParameterError("empty net")
    D = _canonical_matrix(net, distance_matrix(net, metric))
    order = np.arange(len(D))
    cov = np.empty(len(eps), dtype=int)
    pack = np.empty(len(eps), dtype=int)
    for i, e in enumerate(eps):
        cov[i], pack[i] = cover_pack_counts(D, e, order)
    cov = np.minimum.accumulate(cov[::-1])[::-1]
    alpha, b, window, res = fit_exponent(eps, cov, 4, len(net) / 4, mode=fit)
    return EntropyCurve(eps, cov, pack, alpha, b, window, res, fit, len(net))


def entropy_numbers(D: np.ndarray, kmax: int, order=None) -> np.ndarray:
    """``e(k)``: smallest pairwise distance at which ``2**(k-1)`` closed balls centred in the
    set suffice (greedy internal cover), found by bisection over the sorted distances."""
    order = np.arange(len(D)) if order is None else np.asarray(order)
    D = D[np.ix_(order, order)]
    idx = np.arange(len(D))
    radii = np.concatenate([[0.0], np.unique(D[np.triu_indices(len(D), 1)])])
    memo = {}

    def count(i):
        if i not in memo:
            memo[i] = len(D) if i == 0 else cover_pack_counts(D, radii[i], idx)[0]
        return memo[i]

    out = np.empty(kmax)
    for k in range(1, kmax + 1):
        lo, hi = 0, len(radii) - 1
        while lo < hi:
            mid = (lo + hi) // 2
            if count(mid) <= 2 ** (k - 1):
                hi = mid
            else:
                lo = mid + 1
        out[k - 1] = radii[lo]
    return out


def predicted_alpha(params: BesovParams, regime) -> float:
    """Entropy exponent for ``regime`` in ``("weighted", gamma)``, ``("thm4", delta)``, ``("restricted",)``."""
    kind = regime[0] if isinstance(regime, (tuple, list)) else regime
    s, p, d = params.s, params.p, params.d
    inv_p = 0.0 if p == math.inf else 1.0 / p
    if kind == "weighted":
        gamma = float(regime[1])
        thr = s - d * inv_p + d / 2.0
        if thr <= 0:
            raise HypothesisError("weighted regime needs s - d/p + d/2 > 0")
        if not gamma > 0:
            raise ParameterError("gamma must be positive")
        if abs(gamma - thr) <= 1e-12 * max(1.0, abs(thr)):
            raise BoundaryError("gamma = s - d/p + d/2 is not covered by the rate formula")
        if gamma > thr:
            return d / s
        return 1.0 / (gamma / d + inv_p - 0.5)
    if kind == "thm4":
        delta = float(regime[1])
        if not delta > 0:
            raise ParameterError("delta must be positive")
        return 1.0 / (delta / d + inv_p)
    if kind == "restricted":
        if not s > 0:
            raise ParameterError("restricted regime needs s > 0")
        return d / s
    raise ParameterError(f"unknown regime {regime!r}")


def lemma10_convert(rate: float, direction: str = "entropy_numbers_to_metric_entropy") -> float:
    """Decay exponent ``1/alpha`` of entropy numbers <-> metric entropy exponent ``alpha``."""
    if direction not in ("entropy_numbers_to_metric_entropy", "metric_entropy_to_entropy_numbers"):
        raise ParameterError(f"unknown direction {direction!r}")
    if not rate > 0:
        raise ParameterError("rate must be positive")
    return 1.0 / rate
