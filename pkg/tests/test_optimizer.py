import json
from fractions import Fraction as F

import jsonschema
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from couponlab import dist_engine as de, exact, optimizer as opt
from couponlab.cli import load_schema
from couponlab.errors import BudgetExceededError, InvalidParameterError

from oracles import simplex_bisect


@pytest.mark.parametrize("v, expect", [([0.5, 0.5], [0.5, 0.5]), ([2, 0], [1, 0]), ([0.6, 0.6], [0.5, 0.5])])
def test_projection_examples(v, expect):
    assert np.allclose(opt.project_to_simplex(v), expect, atol=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=30))
def test_projection_matches_bisection(v):
    p = opt.project_to_simplex(v)
    assert p.min() >= 0 and abs(p.sum() - 1) <= 1e-12
    assert np.allclose(p, simplex_bisect(v), atol=1e-9)


def test_projection_rejects_empty():
    with pytest.raises(InvalidParameterError):
        opt.project_to_simplex([])
    with pytest.raises(InvalidParameterError):
        opt.project_to_simplex([np.nan, 1.0])


def test_decomposition_optimum_4_2():
    res = opt.optimize_distribution(4, 2, seed=1)
    assert F(3) - F(1, 10**9) <= res.best_value <= 3 + F(1, 1000)
    assert res.improved and res.uniform_value == F(19, 5)


def test_uniform_optimal_4_3():
    res = opt.optimize_distribution(4, 3, seed=2)
    assert abs(res.best_value - res.uniform_value) <= F(1, 10**6)
    assert res.uniform_value == 1 + F(4, 3)
    assert not res.improved


def test_improves_6_2():
    res = opt.optimize_distribution(6, 2, seed=3)
    assert res.improved and res.best_value <= F(11, 2)


@pytest.mark.parametrize("n, s", [(4, 2), (6, 2), (6, 3), (8, 4)])
def test_never_beats_decomposition_when_s_divides_n(n, s):
    res = opt.optimize_distribution(n, s, restarts=6, iters=60, seed=5)
    assert res.best_value >= exact.near_decomposition_expectation(n, s)


@pytest.mark.parametrize("n, s", [(5, 2), (6, 4), (7, 3)])
def test_monotone_safety_and_consistency(n, s):
    res = opt.optimize_distribution(n, s, restarts=5, iters=40, seed=11)
    for d in opt.named_challengers(n, s).values():
        assert res.best_value <= de.expected_rounds(d, "exact")
    assert res.best_value <= res.uniform_value
    assert abs(res.float_value - float(res.best_value)) <= 1e-9
    assert de.expected_rounds(de.PackageDistribution.from_json(res.to_json()), "exact") == res.best_value


def test_deterministic_in_seed():
    a = opt.optimize_distribution(5, 2, restarts=6, iters=30, seed=9)
    b = opt.optimize_distribution(5, 2, restarts=6, iters=30, seed=9)
    assert a.to_json() == b.to_json()


def test_caps():
    with pytest.raises(BudgetExceededError):
        opt.optimize_distribution(12, 6)
    with pytest.raises(BudgetExceededError):
        opt.optimize_distribution(13, 2)
    with pytest.raises(InvalidParameterError):
        opt.optimize_distribution(4, 2, restarts=-1)


def test_rationalize_grid_sums_to_one():
    pk = [(1, 2), (3, 4), (1, 3)]
    d = opt.rationalize(pk, [1 / 3, 1 / 3, 1 / 3], 4, 2)
    assert sum(d.probs) == 1 and all(p.denominator <= 10**6 for p in d.probs)
    assert opt.rationalize(pk, [0.0, 0.0, 1.0], 4, 2) is None


@pytest.mark.parametrize("n, s, src, value", [
    (10, 3, "near_decomposition", F(25, 3)),
    (10, 5, "arcs", F(13, 3)),
    (10, 7, "rotation", F(5, 2)),
])
def test_certificate_examples(n, s, src, value):
    res = opt.improvement_certificate(n, s)
    assert (res.source, res.best_value) == (src, value)
    assert res.improved
    doc = res.to_certificate()
    jsonschema.validate(doc, load_schema("certificate"))
    assert opt.verify_certificate(doc).ok


def test_certificate_rotation_beats_arcs_10_7():
    assert exact.arcs_expectation(10, 7) == 1 + F(100, 56)
    assert opt.improvement_certificate(10, 7).best_value < exact.arcs_expectation(10, 7)


def test_certificate_rejects_n_minus_1():
    with pytest.raises(InvalidParameterError):
        opt.improvement_certificate(8, 7)


def test_certificates_for_all_small_cases():
    for n in range(4, 13):
        for s in range(2, n - 1):
            assert opt.improvement_certificate(n, s).improved, (n, s)


def test_verify_detects_tampering():
    doc = opt.improvement_certificate(10, 3).to_certificate()
    doc["value"] = "8/1"
    res = opt.verify_certificate(json.dumps(doc))
    assert not res.ok and res.value == F(25, 3)
