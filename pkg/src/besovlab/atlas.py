"""Test functions: bump atoms, random ball elements, finite nets of the Besov unit ball,
the log-log witness and its translate family."""

import itertools
import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .besov import (INF, TAIL_TOL, BesovParams, DyadicPartition, aggregate, besov_norm,
                    block_norms, smooth_step, translate)
from .errors import BudgetError, DomainError, ParameterError
from .grid import GridFunction, GridSpec, fft, ifft

CERT_TOL = 1e-6
DEFAULT_CAP = 4096


class FunctionNet:
    """Finite subset of the Besov unit ball surrogate.

    Members are stored either explicitly (``values``, shape ``(M, N**d)``) or as
    linear combinations ``coeffs @ basis`` so that large-grid nets never have to
    be materialized; metrics then act on the small basis Gram matrix.
    """

    def __init__(self, spec: GridSpec, params: BesovParams, level: int, certificates,
                 values=None, basis=None, coeffs=None, meta=None):
        if (values is None) == (basis is None):
            raise ParameterError("give exactly one of values or basis/coeffs")
        self.spec = spec
        self.params = params
        self.level = int(level)
        if values is not None:
            values = np.asarray(values, dtype=float).reshape(-1, spec.size)
            values.setflags(write=False)
            self.values = values
            self.basis = self.coeffs = None
            n = values.shape[0]
        else:
            basis = np.asarray(basis, dtype=float).reshape(-1, spec.size)
            coeffs = np.asarray(coeffs, dtype=float)
            if coeffs.ndim != 2 or coeffs.shape[1] != basis.shape[0]:
                raise ParameterError("coefficient matrix does not match the basis")
            basis.setflags(write=False)
            coeffs.setflags(write=False)
            self.basis, self.coeffs, self.values = basis, coeffs, None
            n = coeffs.shape[0]
        self.norm_certificates = np.asarray(certificates, dtype=float).reshape(n)
        self.meta = dict(meta or {})
        self._cache = {}

    def __len__(self):
        return len(self.norm_certificates)

    @property
    def linear(self) -> bool:
        return self.basis is not None

    def member_values(self, i: int) -> np.ndarray:
        if self.values is not None:
            return self.values[i]
        return self.coeffs[i] @ self.basis

    def matrix(self) -> np.ndarray:
        """All members as rows (materializes linear nets)."""
        if self.values is not None:
            return self.values
        return self.coeffs @ self.basis

    @property
    def members(self) -> list:
        return [GridFunction(self.spec, self.member_values(i)) for i in range(len(self))]

    def canonical_keys(self) -> np.ndarray:
        """Rows that identify members independently of storage order."""
        return self.coeffs if self.linear else self.values

    def check_distinct(self, decimals: int = 12):
        keys = np.round(self.canonical_keys(), decimals) + 0.0
        if len(np.unique(keys, axis=0)) != len(self):
            raise ParameterError("net members are not pairwise distinct")

    def subset(self, idx) -> "FunctionNet":
        idx = np.asarray(idx, dtype=int)
        if self.linear:
            return FunctionNet(self.spec, self.params, self.level, self.norm_certificates[idx],
                               basis=self.basis, coeffs=self.coeffs[idx], meta=self.meta)
        return FunctionNet(self.spec, self.params, self.level, self.norm_certificates[idx],
                           values=self.values[idx], meta=self.meta)

    def scaled(self, c: float) -> "FunctionNet":
        if self.linear:
            return FunctionNet(self.spec, self.params, self.level, abs(c) * self.norm_certificates,
                               basis=self.basis, coeffs=c * self.coeffs, meta=self.meta)
        return FunctionNet(self.spec, self.params, self.level, abs(c) * self.norm_certificates,
                           values=c * self.values, meta=self.meta)

    def recertify(self, part: DyadicPartition, tail_tol=TAIL_TOL) -> np.ndarray:
        """Besov norms recomputed from scratch for every member."""
        return np.array([besov_norm(GridFunction(self.spec, self.member_values(i)), self.params,
                                    part, tail_tol) for i in range(len(self))])

    @classmethod
    def from_functions(cls, fs, params, level, part=None, certificates=None, meta=None):
        fs = list(fs)
        if not fs:
            raise ParameterError("a net needs at least one member")
        spec = fs[0].spec
        vals = np.stack([f.values.ravel() for f in fs])
        if certificates is None:
            if part is None:
                raise ParameterError("need a partition to certify members")
            certificates = [besov_norm(f, params, part) for f in fs]
        return cls(spec, params, level, certificates, values=vals, meta=meta)

    # serialization: directory of BGF1 dumps plus a JSON manifest
    def save(self, path: str):
        os.makedirs(path, exist_ok=True)
        for i in range(len(self)):
            with open(os.path.join(path, f"member_{i:05d}.bgf"), "wb") as fh:
                fh.write(GridFunction(self.spec, self.member_values(i)).to_bytes())
        manifest = {
            "grid": self.spec.to_dict(), "params": self.params.to_dict(), "level": self.level,
            "count": len(self), "certificates": [float(c) for c in self.norm_certificates],
            "meta": self.meta,
        }
        with open(os.path.join(path, "manifest.json"), "w") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path: str) -> "FunctionNet":
        with open(os.path.join(path, "manifest.json")) as fh:
            man = json.load(fh)
        spec = GridSpec.from_dict(man["grid"])
        vals = []
        for i in range(man["count"]):
            with open(os.path.join(path, f"member_{i:05d}.bgf"), "rb") as fh:
                vals.append(GridFunction.from_bytes(fh.read()).values.ravel())
        return cls(spec, BesovParams.from_dict(man["params"]), man["level"], man["certificates"],
                   values=np.stack(vals), meta=man.get("meta"))


def union_net(a: FunctionNet, b: FunctionNet, level=None) -> FunctionNet:
    """Members of ``a`` followed by the members of ``b`` not already in ``a``."""
    va, vb = a.matrix(), b.matrix()
    seen = {row.tobytes() for row in np.round(va, 12) + 0.0}
    keep = [i for i, row in enumerate(np.round(vb, 12) + 0.0) if row.tobytes() not in seen]
    vals = np.vstack([va, vb[keep]])
    certs = np.concatenate([a.norm_certificates, b.norm_certificates[keep]])
    return FunctionNet(a.spec, a.params, b.level if level is None else level, certs,
                       values=vals, meta=b.meta)


# atoms --------------------------------------------------------------------

def bump_atom(spec: GridSpec, center, scale: float) -> GridFunction:
    """``exp(1 - 1/(1 - r^2))`` with ``r = |x - center| / scale``: peak 1, support radius ``scale``."""
    if not scale > 0:
        raise ParameterError("scale must be positive")
    c = np.broadcast_to(np.atleast_1d(np.asarray(center, dtype=float)), (spec.d,))
    if np.any(np.abs(c) + scale > 0.5 * spec.half_width * (1 + 1e-12)):
        raise DomainError("bump support leaves [-L/2, L/2]^d")
    r2 = sum((x - ci) ** 2 for x, ci in zip(spec.coords, c)) / scale ** 2
    out = np.zeros(spec.shape)
    inside = r2 < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - r2[inside]))
    return GridFunction(spec, out)


def block_kernel(part: DyadicPartition, k: int) -> np.ndarray:
    """Inverse transform of the k-th multiplier, periodic and centred at index 0."""
    return ifft(part.multiplier(k)).real


def top_block(part: DyadicPartition) -> int:
    """Highest block whose annulus stays below the band limit ``2**(k_max-1)``."""
    return max(part.k_max - 2, 0)


def _spike_block(part, k, spikes):
    """Sum of block-k kernels placed at the nonzero entries of ``spikes``."""
    return ifft(fft(spikes) * part.multiplier(k)).real


def sample_ball_element(params: BesovParams, part: DyadicPartition, seed: int, blocks=None,
                        window: float = 0.25, tail_tol=TAIL_TOL) -> GridFunction:
    """Random element of the unit ball with norm certified to be at most one.

    Block k carries Gaussian coefficients on a lattice of spacing ~2**-k inside
    ``[-window*L, window*L]^d``, convolved with the block kernel.  Block sizes are
    ``2**(-k s) w_k`` for a random point ``w`` of the l^q unit sphere.
    """
    spec = part.spec
    rng = np.random.default_rng(seed)
    blocks = list(range(top_block(part) + 1)) if blocks is None else list(blocks)
    if not blocks:
        return GridFunction.zeros(spec)
    g = rng.standard_normal(len(blocks))
    w = np.abs(g) / (np.linalg.norm(g, params.q) if params.q != INF else np.abs(g).max())
    mask = spec.inner_mask(window)
    total = np.zeros(spec.shape)
    for wk, k in zip(w, blocks):
        stride = max(1, int(round(math.pi * 2.0 ** -k / spec.step)))
        spikes = np.zeros(spec.shape)
        sl = tuple(slice(0, None, stride) for _ in range(spec.d))
        sub = spikes[sl]
        sub[...] = rng.standard_normal(sub.shape)
        spikes[sl] = sub
        spikes[~mask] = 0.0
        b = _spike_block(part, k, spikes)
        nb = block_norms(GridFunction(spec, b), part, params.p, tail_tol=None)[k]
        if nb > 0:
            total += (2.0 ** (-k * params.s)) * wk * b / nb
    f = GridFunction(spec, total)
    nrm = besov_norm(f, params, part, tail_tol)
    if nrm == 0.0:
        return f
    f = GridFunction(spec, total / nrm)
    nrm = besov_norm(f, params, part, tail_tol)
    if nrm > 1.0:
        f = GridFunction(spec, f.values / nrm)
    return f


# lattice nets -------------------------------------------------------------

def _templates(params: BesovParams, part: DyadicPartition, blocks, per_block: int,
               window: float) -> list:
    """Per block, ``per_block`` atoms at evenly spread centres, scaled so ``2**(ks)||t||_p = 1``."""
    spec = part.spec
    out = []
    lim = window * spec.half_width
    for k in blocks:
        n = min(2 ** k, per_block)
        ker = block_kernel(part, k)
        centres = np.linspace(-lim, lim, n + 2)[1:-1] if n > 1 else np.array([0.0])
        row = []
        for c in centres:
            shift = [int(round((c + spec.half_width) / spec.step))] + \
                    [spec.points_per_axis // 2] * (spec.d - 1)
            t = np.roll(ker, shift, axis=tuple(range(spec.d)))
            nb = block_norms(GridFunction(spec, t), part, params.p, tail_tol=None)
            sc = aggregate(nb, params.s, params.q)
            row.append(t / sc)
        out.append(row)
    return out


def _budget(coeffs_by_block, p, q):
    """Mixed l^p/l^q budget of a coefficient vector split into blocks."""
    parts = []
    for c in coeffs_by_block:
        c = np.abs(np.asarray(c, dtype=float))
        parts.append(c.max() if p == INF else float(np.sum(c ** p)) ** (1.0 / p) if c.size else 0.0)
    parts = np.array(parts)
    if q == INF:
        return float(parts.max()) if parts.size else 0.0
    return float(np.sum(parts ** q)) ** (1.0 / q)


def _enumerate_lattice(sizes, step, p, q, limit):
    """Lattice points (step ``step``) inside the unit mixed-norm budget; stops after ``limit``."""
    dim = sum(sizes)
    bounds = np.cumsum([0] + list(sizes))
    levels = np.arange(-int(round(1 / step)), int(round(1 / step)) + 1) * step
    out = []
    cur = np.zeros(dim)

    def split(v):
        return [v[bounds[i]:bounds[i + 1]] for i in range(len(sizes))]

    def rec(j):
        if len(out) > limit:
            return
        if j == dim:
            out.append(cur.copy())
            return
        for v in sorted(levels, key=abs):
            cur[j] = v
            if _budget(split(cur), p, q) > 1.0 + 1e-12:
                break  # budget is monotone in |v|; both signs fail from here on
            rec(j + 1)
        cur[j] = 0.0

    rec(0)
    return out


def _random_lattice_points(rng, sizes, step, p, q, count):
    dim = sum(sizes)
    bounds = np.cumsum([0] + list(sizes))
    y = rng.standard_normal((count, dim)) * rng.exponential(1.0, (count, len(sizes))).repeat(sizes, axis=1)
    out = []
    for row in y:
        b = _budget([row[bounds[i]:bounds[i + 1]] for i in range(len(sizes))], p, q)
        if b == 0:
            continue
        x = row / b * rng.uniform() ** (1.0 / dim)
        out.append(np.trunc(x / step) * step + 0.0)
    return out


def build_net(params: BesovParams, part: DyadicPartition, level: int, cap: int = DEFAULT_CAP,
              seed: int = 0, subsample: bool = True, per_block: int = 4, window: float = 0.25,
              growth: int = 4, tail_tol=TAIL_TOL) -> FunctionNet:
    """Nested lattice net of the unit ball at refinement ``level``.

    Level j uses blocks ``k <= j`` with ``min(2**k, per_block)`` template atoms each
    and block coefficients on the lattice ``2**-j Z`` inside the budget
    ``sum_k (2**(ks) ||block_k||_p)**q <= 1``.  Level j keeps at most
    ``min(cap, growth**(j+1))`` members: all lattice points when they fit, otherwise
    a seeded subsample.  Net at level j is the union of levels 1..j, so nets are
    nested.  Members whose recomputed norm exceeds one are scaled back onto the
    unit sphere.
    """
    if level < 1:
        raise ParameterError("level must be >= 1")
    spec = part.spec
    rng = np.random.default_rng(seed)
    k_hi = top_block(part)
    blocks_all = list(range(min(level, k_hi) + 1))
    temps = _templates(params, part, blocks_all, per_block, window)
    rows, keys = [], set()
    certs = []
    for j in range(1, level + 1):
        blocks = blocks_all[: min(j, k_hi) + 1]
        sizes = [len(temps[k]) for k in blocks]
        step = 2.0 ** -j
        quota = min(cap, growth ** (j + 1))
        room = quota - len(rows)
        pts = _enumerate_lattice(sizes, step, params.p, params.q, limit=max(room, 0) + len(rows))
        if len(pts) > quota:
            if not subsample:
                raise BudgetError(f"level {j} lattice has more than {quota} points; enable subsampling")
            pool = [pt for pt in pts if (np.round(pt, 12) + 0.0).tobytes() not in keys]
            extra = _random_lattice_points(rng, sizes, step, params.p, params.q, 8 * quota)
            cand = pool[:1] + extra
            rng.shuffle(pool)
            cand += pool
        else:
            cand = pts
        dim_total = sum(len(temps[k]) for k in blocks_all)
        for pt in cand:
            if len(rows) >= quota:
                break
            full = np.zeros(dim_total)
            full[: pt.size] = pt
            key = (np.round(full, 12) + 0.0).tobytes()
            if key in keys:
                continue
            keys.add(key)
            rows.append(full)
    flat = [t for k in blocks_all for t in temps[k]]
    basis = np.stack([t.ravel() for t in flat])
    coeffs = np.stack(rows)
    vals = coeffs @ basis
    for i in range(len(vals)):
        c = besov_norm(GridFunction(spec, vals[i]), params, part, tail_tol)
        if c > 1.0:
            vals[i] /= c
            c = 1.0
        certs.append(c)
    meta = {"builder": "lattice", "seed": seed, "cap": cap, "per_block": per_block,
            "window": window, "growth": growth, "blocks": blocks_all}
    return FunctionNet(spec, params, level, certs, values=vals, meta=meta)


def nested_nets(params, part, levels, **kw) -> list:
    """``build_net`` at each level; prefix-nested by construction."""
    return [build_net(params, part, lv, **kw) for lv in levels]


# entropy nets --------------------------------------------------------------

def band_cube_net(params: BesovParams, part: DyadicPartition, metric_weight: np.ndarray,
                  bands: int = 12, rank_offset: int = 1, seed: int = 0, region: float = 0.4,
                  blocks=None, tail_tol=TAIL_TOL) -> FunctionNet:
    """Sign-cube net built from dyadic bands of ranked atoms.

    Atoms are block kernels at lattice positions; they are ranked by the ratio of
    their metric norm (weight ``metric_weight``) to their Besov norm.  Band i
    collects ranks ``[b(2**i - 1), b(2**(i+1) - 1))`` with random signs, normalized to
    Besov norm one.  Members are ``sum_i theta_i band_i`` over all sign vectors
    theta, uniformly rescaled so every certificate is at most one.  When atom
    ratios decay like ``rank**(-1/alpha)`` the band metric radii decay like
    ``2**(-i/alpha)`` and the covering count of the cube follows ``eps**(-alpha)``.
    """
    spec = part.spec
    rng = np.random.default_rng(seed)
    blocks = list(range(top_block(part) + 1)) if blocks is None else list(blocks)
    w2 = np.asarray(metric_weight, dtype=float).reshape(spec.shape) ** 2
    lim = region * spec.half_width
    need = rank_offset * (2 ** bands - 1)
    cand_k, cand_idx, cand_r = [], [], []
    besov_k = {}
    for k in blocks:
        ker = block_kernel(part, k)
        besov_k[k] = besov_norm(GridFunction(spec, np.roll(ker, spec.points_per_axis // 2,
                                                          axis=tuple(range(spec.d)))),
                                params, part, tail_tol)
        # metric norm of the atom centred at every lattice point (cross-correlation)
        m2 = ifft(fft(w2) * np.conj(fft(ker ** 2))).real * spec.cell_volume
        stride = max(1, int(round(math.pi * 2.0 ** -k / spec.step)))
        c0 = spec.points_per_axis // 2
        ax = np.arange(spec.points_per_axis)
        ok = (np.abs(ax - c0) % stride == 0) & (np.abs(spec.axis) <= lim)
        ok_nd = ok if spec.d == 1 else ok[:, None] & ok[None, :]
        sel = np.argwhere(ok_nd)
        idx = tuple(sel.T)
        r = np.sqrt(np.maximum(m2[idx], 0.0)) / besov_k[k]
        cand_k.append(np.full(len(r), k))
        cand_idx.append(sel)
        cand_r.append(r)
    ks = np.concatenate(cand_k)
    locs = np.concatenate(cand_idx)
    ratios = np.concatenate(cand_r)
    if len(ratios) < need:
        raise BudgetError(f"only {len(ratios)} atoms available, {need} needed for {bands} bands")
    order = np.lexsort((locs[:, 0], ks, -np.round(ratios, 14)))
    basis = []
    radii = []
    for i in range(bands):
        lo, hi = rank_offset * (2 ** i - 1), rank_offset * (2 ** (i + 1) - 1)
        band = order[lo:hi]
        v = np.zeros(spec.shape)
        for k in set(ks[band].tolist()):
            spikes = np.zeros(spec.shape)
            sel = band[ks[band] == k]
            spikes[tuple(locs[sel].T)] = rng.choice([-1.0, 1.0], size=len(sel)) / besov_k[k]
            v += _spike_block(part, k, spikes)
        v /= besov_norm(GridFunction(spec, v), params, part, tail_tol)
        basis.append(v.ravel())
        radii.append(math.sqrt(float(np.sum(v.ravel() ** 2 * w2.ravel())) * spec.cell_volume))
    basis = np.stack(basis)
    coeffs = np.array(list(itertools.product([-1.0, 1.0], repeat=bands)))
    certs = _linear_certificates(basis, coeffs, params, part, spec)
    top = float(certs.max())
    basis = basis / top
    certs = certs / top
    meta = {"builder": "band_cube", "seed": seed, "bands": bands, "rank_offset": rank_offset,
            "region": region, "blocks": blocks, "band_radii": [r / top for r in radii]}
    return FunctionNet(spec, params, bands, certs, basis=basis, coeffs=coeffs, meta=meta)


def _linear_certificates(basis, coeffs, params, part, spec, chunk=64):
    """Besov norms of ``coeffs @ basis``; quadratic forms per block when p = 2."""
    K = part.k_max + 1
    if params.p == 2:
        F = np.stack([fft(b.reshape(spec.shape)).ravel() for b in basis])
        scale = spec.cell_volume / spec.size
        blocks = np.empty((len(coeffs), K))
        for k in range(K):
            Fk = F * part.multiplier(k).ravel()
            G = (Fk @ Fk.conj().T).real * scale
            blocks[:, k] = np.sqrt(np.maximum(np.einsum("ij,jk,ik->i", coeffs, G, coeffs), 0.0))
        return np.array([aggregate(b, params.s, params.q) for b in blocks])
    out = np.empty(len(coeffs))
    for a in range(0, len(coeffs), chunk):
        vals = coeffs[a:a + chunk] @ basis
        for i, v in enumerate(vals):
            out[a + i] = besov_norm(GridFunction(spec, v), params, part, tail_tol=None)
    return out


# log-log witness ----------------------------------------------------------

def plateau_profile(r):
    """Radial bump equal to 1 on ``r <= 1/2`` and 0 on ``r >= 1``."""
    return smooth_step((np.asarray(r, dtype=float) - 0.5) / 0.5)


WITNESS_PROFILES = {"plateau": plateau_profile}


@dataclass(frozen=True)
class WitnessSpec:
    base_index: int
    depth: int
    profile: str = "plateau"
    coefficient_law: str = field(default="1/k")

    def __post_init__(self):
        if self.base_index < 1:
            raise ParameterError("base index must be >= 1")
        if self.depth < self.base_index:
            raise ParameterError("depth must be >= base index")
        if self.profile not in WITNESS_PROFILES:
            raise ParameterError(f"unknown witness profile {self.profile!r}")

    def check_grid(self, spec: GridSpec):
        if self.depth > math.log2(spec.points_per_axis / 4):
            raise ParameterError(f"depth {self.depth} exceeds log2(N/4) for N={spec.points_per_axis}")
        if 2.0 ** -self.base_index > 0.5 * spec.half_width:
            raise DomainError("witness support 2^-k0 leaves [-L/2, L/2]^d")

    def probe_radii(self) -> np.ndarray:
        return 2.0 ** -np.arange(self.base_index + 1, self.depth + 1, dtype=float)


def lacunary_sum(ws: WitnessSpec, spec: GridSpec) -> GridFunction:
    """``sum_{k=k0}^{K} g(2**k |x|) / k`` with no hypothesis checks."""
    ws.check_grid(spec)
    g = WITNESS_PROFILES[ws.profile]
    r = spec.radius
    out = np.zeros(spec.shape)
    for k in range(ws.base_index, ws.depth + 1):
        out += g(r * 2.0 ** k) / k
    return GridFunction(spec, out)


def build_log_log_witness(ws: WitnessSpec, spec: GridSpec, params: BesovParams) -> GridFunction:
    if params.q <= 1:
        raise ParameterError("the witness needs q > 1 (the coefficient series diverges for q = 1)")
    if abs(params.s - params.d / params.p) > 1e-12:
        raise ParameterError("the witness lives at s = d/p")
    if params.d != spec.d:
        raise ParameterError("params and grid disagree on dimension")
    return lacunary_sum(ws, spec)


def witness_probe_values(psi: GridFunction, ws: WitnessSpec) -> np.ndarray:
    """``psi`` at the probe points ``(2**-m, 0, ...)`` for ``k0 < m <= K``."""
    pts = np.zeros((len(ws.probe_radii()), psi.spec.d))
    pts[:, 0] = ws.probe_radii()
    return psi.evaluate(pts)


def translate_offsets(spec: GridSpec, count: int, reach: float) -> list:
    """``count`` lattice offsets ``2 a j / n`` for ``j = -n//2 .. ceil(n/2)-1``; nested under doubling."""
    if count < 1:
        raise ParameterError("count must be >= 1")
    js = np.arange(-(count // 2), count - count // 2)
    steps = np.rint(2.0 * reach * js / count / spec.step).astype(int)
    if len(set(steps.tolist())) < count:
        raise DomainError(f"only {len(set(steps.tolist()))} distinct lattice shifts for {count} translates")
    return steps.tolist()


def build_translate_family(psi: GridFunction, count: int, params: BesovParams,
                           part: DyadicPartition, support: float, tail_tol=TAIL_TOL) -> FunctionNet:
    """Translates of ``psi`` (support radius ``support``) spread over ``[-a, a]``,
    ``a = L/2 - support``, each certified by a fresh norm computation."""
    spec = psi.spec
    reach = 0.5 * spec.half_width - support
    if reach < 0:
        raise DomainError("no admissible shifts: support exceeds L/2")
    if count > 1 and reach <= 0:
        raise DomainError("no room for distinct shifts")
    shifts = translate_offsets(spec, count, reach) if count > 1 else [0]
    members, certs = [], []
    for z in shifts:
        sh = [z] + [0] * (spec.d - 1)
        f = translate(psi, sh, support_tol=1e-10)
        members.append(f.values.ravel())
        certs.append(besov_norm(f, params, part, tail_tol))
    meta = {"builder": "translates", "shifts": shifts, "support": support}
    return FunctionNet(spec, params, int(math.log2(count)) if count > 0 else 0, certs,
                       values=np.stack(members), meta=meta)
