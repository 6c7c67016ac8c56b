import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from besovlab.atlas import FunctionNet
from besovlab.besov import BesovParams, smooth_step
from besovlab.errors import DegeneracyError, ParameterError
from besovlab.grid import GridSpec
from besovlab.measures import uniform_measure
from besovlab.processes import (ProcessReport, cholesky_factor, covariance_matrix, empirical_draws,
                                empirical_process_sup, envelope_tail, gaussian_draws, grid_law, means,
                                rho_semimetric, sample_gaussian_sup, sudakov_value)

SPEC = GridSpec(1, 4.0, 512)
UNIF = uniform_measure(SPEC, 2.0)
X = SPEC.axis


def net_of(rows):
    rows = np.atleast_2d(rows)
    return FunctionNet(SPEC, BesovParams(1, 2, 2), 1, np.zeros(len(rows)), values=rows)


def standardized(f):
    w = grid_law(UNIF)
    f = f - f @ w
    return f / math.sqrt(f ** 2 @ w)


def test_covariance_examples():
    const = net_of([np.full(SPEC.size, 3.0)])
    assert covariance_matrix(const, UNIF)[0, 0] == pytest.approx(0.0, abs=1e-12)
    unit = net_of([standardized(X)])
    assert covariance_matrix(unit, UNIF)[0, 0] == pytest.approx(1.0, rel=1e-12)
    f = ((X > -1.5) & (X < -0.5)).astype(float)
    g = ((X > 0.5) & (X < 1.5)).astype(float)
    net = net_of([f, g])
    a, b = means(net, UNIF)
    assert covariance_matrix(net, UNIF)[0, 1] == pytest.approx(-a * b, rel=1e-10)
    assert a == pytest.approx(0.25, abs=0.01)


def test_covariance_grid_mismatch():
    with pytest.raises(ParameterError):
        covariance_matrix(net_of([X]), uniform_measure(GridSpec(1, 4.0, 256), 2.0))


def test_rho_examples():
    rng = np.random.default_rng(0)
    f, g = rng.standard_normal((2, SPEC.size))
    R = rho_semimetric(net_of([f, g, f + 5.0]), UNIF)
    assert np.all(np.diag(R) == 0.0)
    assert R[0, 2] == pytest.approx(0.0, abs=1e-7)
    w = grid_law(UNIF)
    h = f - g
    assert R[0, 1] ** 2 == pytest.approx(h ** 2 @ w - (h @ w) ** 2, rel=1e-10)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31))
def test_rho_pseudometric(seed):
    rows = np.random.default_rng(seed).standard_normal((12, SPEC.size))
    R = rho_semimetric(net_of(rows), UNIF)
    assert np.array_equal(R, R.T)
    viol = R[:, None, :] - R[:, :, None] - R[None, :, :].transpose(0, 2, 1)
    assert viol.max() <= 1e-8
    w = grid_law(UNIF)
    l2p = np.sqrt(((rows[:, None, :] - rows[None, :, :]) ** 2) @ w)
    assert np.all(R <= l2p * (1 + 1e-10) + 1e-12)


def test_half_normal_mean():
    sigma = 1.7
    net = net_of([sigma * standardized(X)])
    mean, se = sample_gaussian_sup(net, UNIF, 10 ** 4, 3)
    assert abs(mean - sigma * math.sqrt(2 / math.pi)) <= 3 * se


def test_constant_net_has_zero_sup():
    net = net_of([np.ones(SPEC.size), np.full(SPEC.size, -2.0)])
    assert sample_gaussian_sup(net, UNIF, 200, 1) == (0.0, 0.0)
    assert empirical_process_sup(net, UNIF, 50, 100, 1).q90 == pytest.approx(0.0, abs=1e-12)


def test_reps_floor_and_variant():
    net = net_of([X])
    with pytest.raises(ParameterError):
        sample_gaussian_sup(net, UNIF, 99, 0)
    with pytest.raises(ParameterError):
        gaussian_draws(net, UNIF, 100, 0, variant="Q")


def _moment_z(draws, target):
    prods = draws[:, :, None] * draws[:, None, :]
    se = prods.std(axis=0, ddof=1) / math.sqrt(len(draws))
    return np.abs(prods.mean(axis=0) - target) / se


def test_gaussian_covariance_moments():
    rows = [smooth_step(X - 0.5), np.cos(X), 1 + 0.3 * X]
    net = net_of(rows)
    C = covariance_matrix(net, UNIF)
    assert _moment_z(gaussian_draws(net, UNIF, 10 ** 4, 8), C).max() <= 4
    w = grid_law(UNIF)
    V = np.array(rows)
    assert _moment_z(gaussian_draws(net, UNIF, 10 ** 4, 9, variant="L"), (V * w) @ V.T).max() <= 4


def test_draws_independent_of_threads():
    net = net_of([np.cos(X), np.sin(X)])
    a = gaussian_draws(net, UNIF, 1000, 5, threads=1)
    b = gaussian_draws(net, UNIF, 1000, 5, threads=3)
    assert np.array_equal(a, b)
    assert np.array_equal(empirical_draws(net, UNIF, 20, 600, 5, threads=1),
                          empirical_draws(net, UNIF, 20, 600, 5, threads=2))


def test_cholesky_jitter_and_failure():
    C = np.ones((3, 3))
    Lc = cholesky_factor(C)
    assert np.allclose(Lc @ Lc.T, C, atol=1e-6)
    with pytest.raises(DegeneracyError):
        cholesky_factor(np.diag([2.0, -1.0]))


def test_sudakov_examples():
    assert sudakov_value(net_of([X]), UNIF, [0.1, 1.0]) == 0.0
    m = 6
    rows = np.zeros((m, SPEC.size))
    for i in range(m):
        rows[i, 160 + 30 * i: 170 + 30 * i] = 1.0
    R = rho_semimetric(net_of(rows), UNIF)
    r = R[0, 1]
    assert np.allclose(R[~np.eye(m, dtype=bool)], r, rtol=1e-9)
    eps = r * (1 - 1e-6)
    assert sudakov_value(net_of(rows), UNIF, [eps]) == pytest.approx(eps * math.sqrt(math.log(m)), rel=1e-12)
    grid = np.geomspace(0.01, 1.0, 10)
    vals = [sudakov_value(net_of(rows[:k]), UNIF, grid) for k in range(1, m + 1)]
    assert np.all(np.diff(vals) >= 0)


def test_empirical_single_function_variance():
    sigma = 0.8
    net = net_of([sigma * standardized(X)])
    nu = empirical_draws(net, UNIF, 200, 4000, 2)[:, 0]
    sq = nu ** 2
    assert abs(sq.mean() - sigma ** 2) <= 3.5 * sq.std(ddof=1) / math.sqrt(len(sq))


def test_empirical_half_line_variance():
    t = 0.5
    f = smooth_step((X - t) / 0.01)
    net = net_of([f])
    F = means(net, UNIF)[0]
    assert F == pytest.approx((t + 2) / 4, abs=0.01)
    nu = empirical_draws(net, UNIF, 300, 4000, 6)[:, 0]
    var = nu.var(ddof=1)
    se = var * math.sqrt(2 / (len(nu) - 1))
    assert abs(var - F * (1 - F)) <= 3.5 * se


def test_empirical_clt_normality():
    f = np.cos(X) + X
    net = net_of([f])
    rho0 = math.sqrt(covariance_matrix(net, UNIF)[0, 0])
    nu = empirical_draws(net, UNIF, 10 ** 4, 1000, 12)[:, 0]
    assert stats.kstest(nu / rho0, "norm").pvalue > 0.01


def test_empirical_sup_summary():
    net = net_of([np.cos(X), np.sin(X)])
    q = empirical_process_sup(net, UNIF, 100, 300, 4)
    assert 0 < q.median <= q.q90 and q.median_se > 0 and q.reps == 300
    with pytest.raises(ParameterError):
        empirical_process_sup(net, UNIF, 0, 300, 4)


def test_sup_monotone_on_nested_nets():
    rows = np.random.default_rng(1).standard_normal((8, SPEC.size))
    small, big = gaussian_draws(net_of(rows[:4]), UNIF, 500, 3), None
    nu_small = np.abs(empirical_draws(net_of(rows[:4]), UNIF, 30, 200, 3)).max(axis=1)
    nu_big = np.abs(empirical_draws(net_of(rows), UNIF, 30, 200, 3)).max(axis=1)
    assert np.all(nu_big >= nu_small)
    assert small.shape == (500, 4)


def test_envelope_examples():
    f = np.sin(X)
    net = net_of([f])
    top = np.abs(f - means(net, UNIF)[0]).max()
    assert envelope_tail(net, UNIF, [top * 1.01, top * 2], 1000, 3) == [(top * 1.01, 0.0), (top * 2, 0.0)]
    with pytest.raises(ParameterError):
        envelope_tail(net, UNIF, [1.0, 0.5], 100, 0)


def test_envelope_scaling():
    rows = np.random.default_rng(2).standard_normal((5, SPEC.size))
    t = np.array([0.5, 1.0, 1.5])
    old = envelope_tail(net_of(rows), UNIF, t, 2000, 7)
    new = envelope_tail(net_of(2 * rows), UNIF, 2 * t, 2000, 7)
    for (t0, v0), (t1, v1) in zip(old, new):
        assert t1 == 2 * t0 and v1 == pytest.approx(4 * v0, rel=1e-12)


def test_envelope_grows_with_family():
    rows = np.random.default_rng(3).standard_normal((16, SPEC.size))
    t = [1.0, 2.0]
    curves = [envelope_tail(net_of(rows[:k]), UNIF, t, 3000, 9) for k in (2, 4, 8, 16)]
    for a, b in zip(curves, curves[1:]):
        assert all(vb >= va for (_, va), (_, vb) in zip(a, b))


def test_process_report_csv_json():
    rep = ProcessReport(config={"seed": 1})
    rep.add(2, "mean_sup_G", 0.5, 0.01)
    rep.add(3, "mean_sup_G", 0.6, 0.01)
    assert rep.to_csv().splitlines() == ["level,estimator,value,stderr", "2,mean_sup_G,0.5,0.01",
                                         "3,mean_sup_G,0.6,0.01"]
    assert rep.series("mean_sup_G")[1] == (3, 0.6, 0.01)
    assert '"seed": 1' in rep.to_json()
