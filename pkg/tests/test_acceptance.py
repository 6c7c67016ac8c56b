"""Acceptance criteria 1-12, each at its stated tolerance; one PASS/FAIL line per criterion."""

import json
import math
import pathlib
import time

import numpy as np
import pytest

from besovlab import cli
from besovlab.atlas import bump_atom
from besovlab.classify import classify
from besovlab.besov import (BesovParams, aggregate, besov_norm, block_norms, make_dyadic_partition,
                            translate)
from besovlab.grid import GridFunction, GridSpec, lp_norm

from conftest import random_bandlimited
from test_besov import sobolev_quadrature
from test_classify import REGRESSION, WORKED, _check_invariants, _random_case

CONFIGS = pathlib.Path(__file__).resolve().parent.parent / "configs"
RESULTS = {}


def record(n, ok, detail):
    RESULTS[n] = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(RESULTS[n])
    assert ok, RESULTS[n]


@pytest.fixture(scope="session")
def shipped(tmp_path_factory):
    """Every shipped config run once through the CLI: name -> (output dir, report, seconds)."""
    root = tmp_path_factory.mktemp("shipped")
    runs = {}
    for path in sorted(CONFIGS.glob("*.json")):
        cfg = cli.load_config(str(path))
        t = time.perf_counter()
        report = cli.run_experiment(cfg, str(root / path.stem))
        runs[path.stem] = (root / path.stem, report, time.perf_counter() - t)
    return runs


def test_criterion_01_partition_of_unity():
    t = time.perf_counter()
    part = make_dyadic_partition(GridSpec(1, 16.0, 4096))
    total = part.multipliers.sum(axis=0)
    err = float(np.abs(total[part.freq.modulus <= part.band_limit] - 1.0).max())
    dt = time.perf_counter() - t
    record(1, err <= 1e-10 and dt < 1.0, f"max |sum phi_k - 1| = {err:.2e} (<= 1e-10), {dt:.2f} s (< 1 s)")


def test_criterion_02_norm_sandwich():
    t = time.perf_counter()
    spec = GridSpec(1, 16.0, 4096)
    part = make_dyadic_partition(spec)
    rng = np.random.default_rng(20)
    worst = 0.0
    for _ in range(100):
        f = random_bandlimited(spec, rng, rng.uniform(1.0, part.band_limit))
        bn = block_norms(f, part, 2)
        l2 = lp_norm(f, 2)
        worst = max(worst, bn.max() / l2 - 1, l2 / bn.sum() - 1)
    dt = time.perf_counter() - t
    record(2, worst <= 1e-8 and dt < 10, f"largest relative violation {worst:.2e} (<= 1e-8), {dt:.2f} s (< 10 s)")


def test_criterion_03_monotonicity():
    t = time.perf_counter()
    spec = GridSpec(1, 16.0, 4096)
    part = make_dyadic_partition(spec)
    rng = np.random.default_rng(30)
    worst = -np.inf
    for _ in range(100):
        f = random_bandlimited(spec, rng, part.band_limit)
        p = float(rng.choice([1.0, 2.0, 3.0, math.inf]))
        bn = block_norms(f, part, p)
        s_lo = rng.uniform(-1, 2)
        s_hi = s_lo + rng.uniform(0, 2)
        q_lo = rng.uniform(1, 3)
        q_hi = float(rng.choice([q_lo + rng.uniform(0, 3), math.inf]))
        q = rng.uniform(1, 4)
        worst = max(worst, aggregate(bn, s_lo, q) / aggregate(bn, s_hi, q) - 1,
                    aggregate(bn, s_lo, q_hi) / aggregate(bn, s_lo, q_lo) - 1)
    dt = time.perf_counter() - t
    record(3, worst <= 1e-12 and dt < 10, f"largest relative violation {worst:.2e} (<= 1e-12), {dt:.2f} s (< 10 s)")


def test_criterion_04_translation_invariance():
    spec = GridSpec(1, 16.0, 4096)
    part = make_dyadic_partition(spec)
    rng = np.random.default_rng(40)
    dev = 0.0
    for _ in range(20):
        scale = rng.uniform(1.0, 2.0)
        f = bump_atom(spec, rng.uniform(-1, 1), scale)
        params = BesovParams(rng.uniform(0.2, 2.5), float(rng.choice([1.0, 2.0, 4.0])), float(rng.choice([1.0, 2.0, math.inf])))
        shift = int(rng.integers(-600, 600))
        dev = max(dev, abs(besov_norm(translate(f, shift), params, part) / besov_norm(f, params, part) - 1))
    record(4, dev <= 1e-8, f"max |ratio - 1| = {dev:.2e} over 20 functions (<= 1e-8)")


def test_criterion_05_sobolev_oracle():
    ok, parts = True, []
    for s in (1, 2):
        ratios = []
        for n in (2048, 4096):
            spec = GridSpec(1, 16.0, n)
            f = GridFunction.from_callable(spec, lambda x: np.exp(-x * x))
            ratios.append(besov_norm(f, BesovParams(s, 2, 2), make_dyadic_partition(spec)) / sobolev_quadrature(f, s))
        drift = abs(ratios[1] / ratios[0] - 1)
        ok &= 0.25 <= min(ratios) and max(ratios) <= 4 and drift <= 0.2
        parts.append(f"s={s}: ratio {ratios[1]:.4f}, drift {drift:.1e}")
    record(5, ok, "; ".join(parts) + " (bracket [1/4, 4], drift <= 20%)")


def _entropy_check(shipped, name, lo, hi):
    out, report, dt = shipped[name]
    d = report["diagnostics"]
    eps = [float(line.split(",")[0]) for line in (out / "entropy.csv").read_text().splitlines()[1:]]
    span = max(eps) / min(eps)
    w = d["window"]
    ok = lo <= d["alpha_hat"] <= hi and d["net_size"] <= 4096 and span >= 10 and dt <= 600
    text = (f"{name}: alpha_hat {d['alpha_hat']:.3f} in [{lo}, {hi}] (predicted {d['predicted_alpha']:.3f}), "
            f"eps grid spans {span:.0f}x, fit window {w[1] / w[0]:.1f}x, {d['net_size']} members, {dt:.0f} s")
    return ok, text


def test_criterion_06_entropy_exponents(shipped):
    a_ok, a = _entropy_check(shipped, "entropy_weighted_decay", 1.5, 2.5)
    b_ok, b = _entropy_check(shipped, "entropy_weighted_smoothness", 2.6, 4.1)
    record(6, a_ok and b_ok, f"{a}; {b}")


def test_criterion_07_heavy_tail_exponent(shipped):
    ok, text = _entropy_check(shipped, "entropy_heavy_tail", 2.1, 3.3)
    record(7, ok, text)


def test_criterion_08_witness(shipped):
    d = shipped["witness"][1]["diagnostics"]
    r2, r1 = d["depth_doubling_ratio"]["2"], d["depth_doubling_ratio"]["1"]
    probe = d["min_probe_ratio"]
    ok = r2 <= 1.1 and probe >= 0.9 and r1 >= 1.5
    record(8, ok, f"q=2 depth-doubling norm ratio {r2:.3f} (<= 1.1); min probe ratio {probe:.3f} (>= 0.9); "
                  f"q=1 ratio {r1:.3f} (>= 1.5)")


def test_criterion_09_dichotomy_trend(shipped):
    rough_dir, rough, t_rough = shipped["gp_rough_uniform"]
    smooth_dir, smooth, t_smooth = shipped["gp_smooth_gaussian"]
    gr = rough["diagnostics"]["growth_ratios"]
    gs = smooth["diagnostics"]["growth_ratios"]
    has_se = all(float(line.split(",")[3]) > 0 for line in (rough_dir / "process.csv").read_text().splitlines()
                 if ",mean_sup_G," in line)
    # ratios are levels 2->3, 3->4, 4->5; growth "beyond level 3" means 3->4 and 4->5
    ok = all(r >= 1.3 for r in gr[1:]) and gs[-1] <= 1.1 and has_se and t_rough + t_smooth <= 900
    record(9, ok, f"rough growth per level {', '.join(f'{r:.3f}' for r in gr)} (>= 1.3 beyond level 3); "
                  f"smooth last growth {gs[-1]:.3f} (<= 1.1); reps 2000 with standard errors; "
                  f"{t_rough + t_smooth:.0f} s")


def test_criterion_10_envelope(shipped):
    w = shipped["envelope_witness"][1]["diagnostics"]
    s = shipped["envelope_smooth"][1]["diagnostics"]
    ok = w["nondecreasing_in_size"] and s["largest_family_decay"] < 0.5
    record(10, ok, "witness family t0^2 P(M > t0) by size "
                   + ", ".join(f"{v:.4f}" for v in w["stat_at_t0"])
                   + f" (nondecreasing); smooth family decay over t {s['largest_family_decay']:.3f} (< 0.5)")


def test_criterion_11_classification():
    t = time.perf_counter()
    bad = []
    for params, mclass, dv, pv in WORKED:
        c = classify(BesovParams(*params), mclass)
        if (c.donsker_verdict, c.pregaussian_verdict) != (dv, pv):
            bad.append(params)
    opens = 0
    for params, mclass, dv, pv, gamma in REGRESSION:
        c = classify(BesovParams(*params), mclass)
        if (c.donsker_verdict, c.pregaussian_verdict) != (dv, pv):
            bad.append(params)
        opens += dv == pv == "open"
    rng = np.random.default_rng(11)
    for _ in range(10 ** 4):
        _check_invariants(*_random_case(rng))
    dt = time.perf_counter() - t
    record(11, not bad and opens == 3 and dt < 5,
           f"4 worked examples + 12-tuple grid ({opens} open), {len(bad)} mismatches; 10^4 invariant draws; {dt:.2f} s (< 5 s)")


def test_criterion_12_replay(shipped, capsys):
    args = cli.build_parser().parse_args(["replay", "--config", "x"])
    bad = []
    for name, (out, _, _) in shipped.items():
        if not cli.replay(str(CONFIGS / f"{name}.json"), str(out), args):
            bad.append(name)
    capsys.readouterr()
    record(12, not bad, f"{len(shipped)} shipped configs replayed, byte-identical CSV: "
                        + ("all" if not bad else "differs for " + ", ".join(bad)))
