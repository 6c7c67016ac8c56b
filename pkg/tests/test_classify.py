import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from besovlab.besov import BesovParams
from besovlab.classify import (DONSKER, MEASURE_CLASSES, PREGAUSSIAN, classify, consistent,
                               default_measure_class, parse_descriptor)
from besovlab.errors import DescriptorError

WORKED = [
    ((2.0, 1.0, 1.0, 1), "any", "universal_donsker", "pregaussian"),
    ((0.8, 4.0, 2.0, 2), "bounded_density_lower_bounded", "not_donsker", "not_pregaussian"),
    ((0.6, 1.5, 3.0, 1), "weight_bounded_density", "not_donsker", "pregaussian"),
    ((0.5, 2.0, 2.0, 1), "bounded_density", "not_donsker", "open"),
]

# (s, p, q, d), measure class, donsker, pregaussian, gamma_required; derived rule by rule
REGRESSION = [
    ((2.0, 1.0, 1.0, 1), "any", "universal_donsker", "pregaussian", None),
    ((0.8, 4.0, 2.0, 2), "bounded_density_lower_bounded", "not_donsker", "not_pregaussian", None),
    ((0.6, 1.5, 3.0, 1), "weight_bounded_density", "not_donsker", "pregaussian", None),
    ((0.5, 2.0, 2.0, 1), "bounded_density", "not_donsker", "open", None),
    ((0.5, 2.0, 2.0, 1), "any", "open", "open", None),                 # p = 2, s = d/2
    ((1.0, 2.0, 1.0, 2), "bounded_density", "open", "open", None),     # p = 2, s = d/2 = d/p, q = 1
    ((2.0, 1.0, 1.0, 2), "bounded_density", "open", "open", None),     # s = d/p, q = 1, d > 1
    ((2 / 3, 1.5, 1.0, 1), "any", "universal_donsker", "pregaussian", None),
    ((1.0, 4.0, 2.0, 1), "any", "donsker_under_moment", "open", 0.25),
    ((1.0, 4.0, 2.0, 1), ("thm4", 0.125), "not_donsker", "not_pregaussian", None),
    ((0.5, 3.0, 2.0, 2), "bounded_density", "not_donsker", "open", None),
    ((1.0, 4.0, 2.0, 1), "bounded_density_lower_bounded", "donsker_under_moment", "open", 0.25),
]


@pytest.mark.parametrize("params, mclass, donsker, pg", WORKED)
def test_worked_examples(params, mclass, donsker, pg):
    c = classify(BesovParams(*params), mclass)
    assert (c.donsker_verdict, c.pregaussian_verdict) == (donsker, pg)


@pytest.mark.parametrize("params, mclass, donsker, pg, gamma", REGRESSION)
def test_regression_grid(params, mclass, donsker, pg, gamma):
    c = classify(BesovParams(*params), mclass)
    assert (c.donsker_verdict, c.pregaussian_verdict) == (donsker, pg)
    if gamma is None:
        assert c.gamma_required is None
    else:
        assert c.gamma_required == pytest.approx(gamma)
    if donsker == pg == "open":
        assert c.citations == ("no_rule",)


def test_descriptor_errors():
    with pytest.raises(DescriptorError):
        classify(BesovParams(1.0, 2.0, 2.0), ("thm4", 0.1))
    with pytest.raises(DescriptorError):
        classify(BesovParams(1.0, 4.0, 2.0), ("thm4", 0.3))
    with pytest.raises(DescriptorError):
        classify(BesovParams(1.0, 4.0, 2.0), "thm4")
    with pytest.raises(DescriptorError):
        parse_descriptor("lognormal")
    with pytest.raises(DescriptorError):
        parse_descriptor(42)
    assert parse_descriptor({"class": "thm4", "delta": 0.1}) == ("thm4", 0.1)


def test_default_measure_class():
    assert default_measure_class({"kind": "gaussian"}) == "weight_bounded_density"
    assert default_measure_class({"kind": "uniform"}) == "bounded_density_lower_bounded"
    assert default_measure_class({"kind": "thm4", "delta": 0.2}) == ("thm4", 0.2)
    assert default_measure_class({"kind": "lebesgue_reference"}) == "any"


def _random_case(rng):
    d = int(rng.integers(1, 3))
    p = float(rng.choice([1.0, 1.5, 2.0, 3.0, 4.0, math.inf, rng.uniform(1, 6)]))
    q = float(rng.choice([1.0, 2.0, math.inf, rng.uniform(1, 4)]))
    crit = 0.0 if p == math.inf else d / p
    s = float(rng.choice([crit, d / 2, rng.uniform(0.01, 4), rng.uniform(-1, 0)]))
    name = str(rng.choice(MEASURE_CLASSES))
    if name == "thm4":
        top = d / 2 - crit
        if not (p > 2 and top > 0):
            name = "bounded_density"
            return BesovParams(s, p, q, d), name
        return BesovParams(s, p, q, d), ("thm4", float(rng.uniform(0, 1)) * top or top)
    return BesovParams(s, p, q, d), name


def _check_invariants(params, mclass):
    c = classify(params, mclass)
    assert consistent(c)
    assert c.donsker_verdict in DONSKER and c.pregaussian_verdict in PREGAUSSIAN
    negative = {"heavy_tail_counterexample", "low_smoothness_lower_bound", "envelope_blowup"}
    if c.donsker_verdict == "universal_donsker":
        # universal results are never overridden and never meet a negative rule
        assert not negative & set(c.citations)
    if c.donsker_verdict == "donsker_under_moment":
        assert c.gamma_required == pytest.approx(params.d / 2 - (0 if params.p == math.inf else params.d / params.p))
    assert c.citations


def test_invariants_on_random_draws():
    rng = np.random.default_rng(2024)
    for _ in range(10 ** 4):
        _check_invariants(*_random_case(rng))


@settings(max_examples=300, deadline=None)
@given(st.sampled_from([1, 2]), st.floats(1, 8), st.floats(1, 8), st.floats(-2, 5),
       st.sampled_from([m for m in MEASURE_CLASSES if m != "thm4"]))
def test_invariants_property(d, p, q, s, mclass):
    _check_invariants(BesovParams(s, p, q, d), mclass)


@settings(max_examples=200, deadline=None)
@given(st.sampled_from([1, 2]), st.floats(2.01, 8), st.floats(1, 8), st.floats(0.01, 5), st.floats(0.01, 1))
def test_thm4_property(d, p, q, s, frac):
    top = d / 2 - d / p
    _check_invariants(BesovParams(s, p, q, d), ("thm4", frac * top))
