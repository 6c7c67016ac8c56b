"""Command line entry point: experiment pipelines driven by JSON configs."""

import argparse
import csv
import filecmp
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from . import atlas, besov, classify as cls, entropy, measures, processes
from .besov import BesovParams
from .errors import BesovLabError, ParameterError
from .grid import GridFunction, GridSpec

SCHEMA = 1
COMMANDS = ("norm", "partition", "net", "entropy", "witness", "gp", "emp", "envelope",
            "classify", "replay")


@dataclass
class ExperimentConfig:
    command: str
    besov: BesovParams
    grid: GridSpec = None
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls_, data: dict) -> "ExperimentConfig":
        if data.get("bpl_schema") != SCHEMA:
            raise ParameterError(f"config needs \"bpl_schema\": {SCHEMA}")
        if "besov" not in data:
            raise ParameterError("config needs a besov block")
        grid = GridSpec.from_dict(data["grid"]) if "grid" in data else None
        return cls_(data.get("command", ""), BesovParams.from_dict(data["besov"]), grid, data)

    def get(self, key, default=None):
        return self.raw.get(key, default)

    def partition(self):
        return besov.make_dyadic_partition(self.need_grid(), self.get("profile", "bump"))

    def need_grid(self) -> GridSpec:
        if self.grid is None:
            raise ParameterError("this command needs a grid block")
        return self.grid

    def measure(self):
        desc = dict(self.get("measure") or {})
        if not desc:
            raise ParameterError("this command needs a measure block")
        desc.setdefault("grid", self.need_grid().to_dict())
        return measures.from_descriptor(desc)

    def measure_class(self):
        if self.get("measure_class") is not None:
            return self.get("measure_class")
        return cls.default_measure_class(self.get("measure") or {})

    def levels(self):
        lv = self.get("levels", [1])
        return list(range(lv[0], lv[1] + 1)) if isinstance(lv, dict) else list(lv)


# output helpers -----------------------------------------------------------

def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


class Writer:
    def __init__(self, out: str):
        self.out = out
        os.makedirs(out, exist_ok=True)
        self.files = []

    def text(self, name: str, content: str):
        path = os.path.join(self.out, name)
        with open(path, "w", newline="\n") as fh:
            fh.write(content)
        self.files.append(name)

    def json(self, name: str, obj):
        self.text(name, json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")


def _jsonable(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def _verdict(cfg: ExperimentConfig) -> dict:
    try:
        return cls.classify(cfg.besov, cfg.measure_class()).to_dict()
    except BesovLabError as exc:
        return {"error": str(exc)}


def _trend(ratio: float, lo: float = 0.10, hi: float = 0.30) -> str:
    if ratio <= 1 + lo:
        return "consistent with stabilization"
    if ratio >= 1 + hi:
        return "consistent with sustained growth"
    return "inconclusive between stabilization and growth"


# pipelines ------------------------------------------------------------------

def _named_function(spec, part, params, item):
    kind = item.get("kind")
    if kind == "gaussian_bump":
        w = float(item.get("width", 1.0))
        return GridFunction.from_callable(spec, lambda *xs: np.exp(-sum(x * x for x in xs) / w ** 2))
    if kind == "bump":
        return atlas.bump_atom(spec, item.get("center", 0.0), float(item.get("scale", 1.0)))
    if kind == "ball":
        return atlas.sample_ball_element(params, part, int(item.get("seed", 0)))
    raise ParameterError(f"unknown function kind {kind!r}")


def run_norm(cfg, wr, args):
    spec = cfg.need_grid()
    part = cfg.partition()
    rows, blocks = [], []
    for item in cfg.get("functions", [{"kind": "gaussian_bump"}]):
        f = _named_function(spec, part, cfg.besov, item)
        name = item.get("name", item.get("kind"))
        bn = besov.block_norms(f, part, cfg.besov.p)
        nrm = besov.aggregate(bn, cfg.besov.s, cfg.besov.q)
        rows.append((name, cfg.besov.s, cfg.besov.p, cfg.besov.q, nrm,
                     besov.spectral_tail_mass(f, part)))
        blocks += [(name, k, v) for k, v in enumerate(bn)]
    wr.text("norms.csv", _csv(rows, ["name", "s", "p", "q", "norm", "tail_mass"]))
    wr.text("blocks.csv", _csv(blocks, ["name", "k", "block_norm"]))
    return {"norms": {r[0]: r[4] for r in rows}}


def run_partition(cfg, wr, args):
    part = cfg.partition()
    wr.text("partition.csv", part.to_csv())
    return {"k_max": part.k_max, "band_limit": part.band_limit}


def _metric(cfg, spec):
    desc = cfg.get("metric") or {"kind": "plain_l2"}
    kind = desc["kind"]
    if kind == "weighted_l2":
        return entropy.MetricSpec(kind, gamma=float(desc["gamma"]))
    if kind == "l2_measure":
        return entropy.MetricSpec(kind, measure=cfg.measure())
    if kind == "l2_restricted":
        return entropy.MetricSpec(kind, center=tuple(desc.get("center", [0.0] * spec.d)),
                                  radius=float(desc.get("radius", 1.0)))
    return entropy.MetricSpec(kind)


def _build_net(cfg, args, part, metric=None, level=None):
    nd = dict(cfg.get("net") or {})
    builder = nd.get("builder", "lattice")
    seed = _seed(cfg, args)
    cap = args.cap if getattr(args, "cap", None) else nd.get("cap", atlas.DEFAULT_CAP)
    if builder == "band_cube":
        bands = int(nd.get("bands", 12))
        if 2 ** bands > cap:
            bands = int(math.floor(math.log2(cap)))
        weight = metric.weight(part.spec) if metric is not None else np.ones(part.spec.shape)
        return atlas.band_cube_net(cfg.besov, part, weight, bands=bands,
                                   rank_offset=int(nd.get("rank_offset", 1)), seed=seed,
                                   region=float(nd.get("region", 0.4)),
                                   tail_tol=float(nd.get("tail_tol", besov.TAIL_TOL)))
    lv = level if level is not None else max(cfg.levels())
    return atlas.build_net(cfg.besov, part, lv, cap=cap, seed=seed,
                           subsample=bool(nd.get("subsample", True)),
                           per_block=int(nd.get("per_block", 4)),
                           window=float(nd.get("window", 0.25)), growth=int(nd.get("growth", 4)))


def _seed(cfg, args):
    return int(args.seed) if getattr(args, "seed", None) is not None else int(cfg.get("seed", 0))


def run_net(cfg, wr, args):
    part = cfg.partition()
    metric = _metric(cfg, part.spec) if cfg.get("metric") else None
    net = _build_net(cfg, args, part, metric)
    net.save(os.path.join(wr.out, "net"))
    wr.text("certificates.csv", _csv([(i, c) for i, c in enumerate(net.norm_certificates)],
                                     ["member", "certificate"]))
    return {"members": len(net), "max_certificate": float(net.norm_certificates.max())}


def _eps_grid(cfg, net, D):
    g = cfg.get("eps_grid", {"auto": 30})
    if isinstance(g, list):
        return np.array(g, dtype=float)
    count = int(g.get("auto", 30))
    if "band_radii" in net.meta:
        r = net.meta["band_radii"]
        hi, lo = 2.0 * r[0], 0.5 * r[-1]
    else:
        pos = D[D > 0]
        hi, lo = float(pos.max()), float(pos.min())
    lo = min(lo, hi / 10.0)
    return np.geomspace(hi, lo, count)


def run_entropy(cfg, wr, args):
    part = cfg.partition()
    metric = _metric(cfg, part.spec)
    net = _build_net(cfg, args, part, metric)
    D = entropy.distance_matrix(net, metric)
    curve = entropy.entropy_curve(net, metric, _eps_grid(cfg, net, D), fit=cfg.get("fit", "count"))
    regime = cfg.get("regime")
    pred = entropy.predicted_alpha(cfg.besov, regime) if regime else None
    wr.text("entropy.csv", curve.to_csv())
    wr.json("fit.json", curve.fit_record(pred, regime))
    diag = {"alpha_hat": curve.alpha_hat, "predicted_alpha": pred, "window": list(curve.window),
            "net_size": len(net)}
    if pred:
        rel = abs(curve.alpha_hat - pred) / pred
        diag["summary"] = (f"fitted exponent {curve.alpha_hat:.3f} vs predicted {pred:.3f}: "
                           + ("consistent with" if rel <= 0.25 else "not consistent with")
                           + " the predicted rate (25% tolerance)")
    return diag


def run_witness(cfg, wr, args):
    spec = cfg.need_grid()
    part = cfg.partition()
    wd = cfg.get("witness") or {}
    k0, K = int(wd.get("base_index", 2)), int(wd.get("depth", 6))
    qs = wd.get("q_values", [cfg.besov.q, 1.0])
    rows, norms = [], {}
    for depth in (K, 2 * K):
        ws = atlas.WitnessSpec(k0, depth)
        psi = atlas.lacunary_sum(ws, spec)
        bn = besov.block_norms(psi, part, cfg.besov.p)
        for q in qs:
            nrm = besov.aggregate(bn, cfg.besov.s, float(q))
            norms[(depth, float(q))] = nrm
            rows.append((depth, float(q), nrm))
    ws = atlas.WitnessSpec(k0, K)
    psi = atlas.build_log_log_witness(ws, spec, cfg.besov)
    vals = atlas.witness_probe_values(psi, ws)
    ms = np.arange(k0 + 1, K + 1)
    probes = [(int(m), 2.0 ** -m, float(v), float(v / math.log(m / k0))) for m, v in zip(ms, vals)]
    wr.text("witness_norms.csv", _csv(rows, ["depth", "q", "norm"]))
    wr.text("witness_probes.csv", _csv(probes, ["m", "radius", "value", "ratio_to_log"]))
    growth = {str(q): norms[(2 * K, float(q))] / norms[(K, float(q))] for q in qs}
    return {"depth_doubling_ratio": growth, "min_probe_ratio": min(p[3] for p in probes),
            "summary": "; ".join(f"q={q}: norm ratio {g:.3f} under depth doubling, "
                                 + _trend(g) for q, g in growth.items())}


def _gp_eps(R):
    top = float(R.max())
    return np.geomspace(top, top / 100.0, 20) if top > 0 else [1.0]


def run_gp(cfg, wr, args):
    part = cfg.partition()
    m = cfg.measure()
    reps = int(cfg.get("reps", 2000))
    seed = _seed(cfg, args)
    rep = processes.ProcessReport(config=cfg.raw)
    for lv in cfg.levels():
        net = _build_net(cfg, args, part, level=lv)
        g, gse = processes.sample_gaussian_sup(net, m, reps, seed, "G", args.threads)
        l, lse = processes.sample_gaussian_sup(net, m, reps, seed + 1, "L", args.threads)
        sud = processes.sudakov_value(net, m, _gp_eps(processes.rho_semimetric(net, m)))
        rep.add(lv, "members", len(net))
        rep.add(lv, "mean_sup_G", g, gse)
        rep.add(lv, "mean_sup_L", l, lse)
        rep.add(lv, "sudakov_value", sud)
    wr.text("process.csv", rep.to_csv())
    ser = rep.series("mean_sup_G")
    ratios = [b[1] / a[1] for a, b in zip(ser, ser[1:])]
    return {"growth_ratios": ratios,
            "summary": f"last-level growth {ratios[-1]:.3f}: " + _trend(ratios[-1]) if ratios else ""}


def run_emp(cfg, wr, args):
    part = cfg.partition()
    m = cfg.measure()
    reps, n = int(cfg.get("reps", 200)), int(cfg.get("n", 1000))
    rows = []
    for lv in cfg.levels():
        net = _build_net(cfg, args, part, level=lv)
        qs = processes.empirical_process_sup(net, m, n, reps, _seed(cfg, args), args.threads)
        rows += [(lv, "median_sup_nu", qs.median, qs.median_se),
                 (lv, "q90_sup_nu", qs.q90, qs.q90_se),
                 (lv, "mean_sup_nu", qs.mean, qs.mean_se)]
    wr.text("empirical.csv", _csv(rows, ["level", "estimator", "value", "stderr"]))
    return {"levels": cfg.levels()}


def envelope_families(cfg, part):
    """Translate families for the envelope experiment, in increasing size."""
    spec = part.spec
    ed = cfg.get("envelope") or {}
    sizes = [int(v) for v in ed.get("sizes", [16, 32, 64, 128, 256])]
    if ed.get("family", "witness") == "witness":
        ws = atlas.WitnessSpec(int(ed.get("base_index", 2)), int(ed.get("depth", 6)))
        psi = atlas.lacunary_sum(ws, spec)
        support = 2.0 ** -ws.base_index
    else:
        scale = float(ed.get("scale", 0.25))
        psi = atlas.bump_atom(spec, 0.0, scale)
        support = scale
    psi = psi * (1.0 / besov.besov_norm(psi, cfg.besov, part))
    return sizes, [atlas.build_translate_family(psi, n, cfg.besov, part, support) for n in sizes]


def run_envelope(cfg, wr, args):
    part = cfg.partition()
    m = cfg.measure()
    ed = cfg.get("envelope") or {}
    n_probe, seed = int(ed.get("n_probe", 20000)), _seed(cfg, args)
    sizes, fams = envelope_families(cfg, part)
    t0 = float(np.quantile(processes.envelope_values(fams[0], m, n_probe, seed), 0.99))
    t_grid = t0 * 2.0 ** np.arange(int(ed.get("t_steps", 6)))
    rows, at_t0 = [], []
    for n, fam in zip(sizes, fams):
        curve = processes.envelope_tail(fam, m, t_grid, n_probe, seed)
        rows += [(n, t, v) for t, v in curve]
        at_t0.append(curve[0][1])
    wr.text("envelope.csv", _csv(rows, ["family_size", "t", "tail_stat"]))
    last = [v for n, t, v in rows if n == sizes[-1]]
    return {"t0": t0, "stat_at_t0": at_t0,
            "nondecreasing_in_size": bool(all(b >= a for a, b in zip(at_t0, at_t0[1:]))),
            "largest_family_decay": last[-1] / last[0] if last[0] > 0 else 0.0}


def run_classify(cfg, wr, args):
    v = cls.classify(cfg.besov, cfg.measure_class())
    b = cfg.besov
    wr.text("classification.csv", _csv(
        [(b.s, b.p, b.q, b.d, v.donsker_verdict, v.pregaussian_verdict,
          "" if v.gamma_required is None else v.gamma_required, ";".join(v.citations))],
        ["s", "p", "q", "d", "donsker_verdict", "pregaussian_verdict", "gamma_required", "citations"]))
    return {"verdict": v.to_dict()}


PIPELINES = {"norm": run_norm, "partition": run_partition, "net": run_net, "entropy": run_entropy,
             "witness": run_witness, "gp": run_gp, "emp": run_emp, "envelope": run_envelope,
             "classify": run_classify}


def run_experiment(cfg: ExperimentConfig, out: str, args=None) -> dict:
    args = args or argparse.Namespace(seed=None, cap=None, threads=1)
    if cfg.command not in PIPELINES:
        raise ParameterError(f"unknown command {cfg.command!r}")
    wr = Writer(out)
    diag = PIPELINES[cfg.command](cfg, wr, args)
    report = {"command": cfg.command, "config": cfg.raw, "seed": _seed(cfg, args),
              "verdict": _verdict(cfg), "diagnostics": diag,
              "note": "measured trends are reported as consistent with a verdict, never as proofs"}
    wr.json("report.json", report)
    return report


def load_config(path: str, command=None, args=None) -> ExperimentConfig:
    with open(path) as fh:
        data = json.load(fh)
    if command:
        data["command"] = command
    if args is not None and getattr(args, "levels", None):
        lv = data.get("levels", [1])
        start = lv[0] if lv else 1
        data["levels"] = list(range(min(start, args.levels), args.levels + 1))
    return ExperimentConfig.from_dict(data)


def replay(path: str, prior: str, args) -> bool:
    """Rerun a config into a scratch directory and compare CSV bytes with ``prior``."""
    cfg = load_config(path, args=args)
    with tempfile.TemporaryDirectory() as tmp:
        run_experiment(cfg, tmp, args)
        names = sorted(f for f in os.listdir(tmp) if f.endswith(".csv"))
        ok = bool(names)
        for name in names:
            same = os.path.exists(os.path.join(prior, name)) and \
                filecmp.cmp(os.path.join(tmp, name), os.path.join(prior, name), shallow=False)
            print(f"{name}: {'identical' if same else 'DIFFERS'}")
            ok &= same
    return ok


def _origin(exc) -> str:
    tb = exc.__traceback__
    name = "besovlab"
    while tb is not None:
        mod = tb.tb_frame.f_globals.get("__name__", "")
        if mod.startswith("besovlab."):
            name = mod
        tb = tb.tb_next
    return name


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="besovlab", description=__doc__)
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON experiment config")
    ap.add_argument("--out", default="out", help="output directory (for replay: the prior output)")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--levels", type=int, default=None, help="highest refinement level")
    ap.add_argument("--cap", type=int, default=None, help="maximum net size")
    ap.add_argument("--threads", type=int, default=1, help="worker threads (0 = auto)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            ok = replay(args.config, args.out, args)
            print("replay: byte-identical" if ok else "replay: outputs differ")
            return 0 if ok else 1
        cfg = load_config(args.config, args.command, args)
        report = run_experiment(cfg, args.out, args)
    except BesovLabError as exc:
        print(f"{_origin(exc)}: {exc}", file=sys.stderr)
        return exc.exit_code
    print(json.dumps({"verdict": report["verdict"], "diagnostics": report["diagnostics"]},
                     indent=2, sort_keys=True, default=_jsonable))
    return 0


if __name__ == "__main__":
    sys.exit(main())
