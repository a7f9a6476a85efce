import math
import warnings
from fractions import Fraction as F

import pytest
from hypothesis import given, settings, strategies as st

from couponlab import exact
from couponlab.errors import InvalidParameterError, StateCollapseError, TruncationWarning

from oracles import uniform_ie


# --- harmonic and classical ---------------------------------------------------

@pytest.mark.parametrize("n, value", [(1, F(1)), (4, F(25, 12)), (10, F(7381, 2520))])
def test_harmonic(n, value):
    assert exact.harmonic(n, "exact") == value
    assert exact.harmonic(n, "float") == pytest.approx(float(value), rel=1e-15)


@pytest.mark.parametrize("n, value", [(1, F(1)), (3, F(11, 2)), (10, F(7381, 252))])
def test_classical(n, value):
    assert exact.classical_expectation(n) == value


def test_harmonic_rejects_zero():
    with pytest.raises(InvalidParameterError):
        exact.harmonic(0)


def test_auto_mode_switches_at_64():
    assert isinstance(exact.harmonic(64), F)
    assert isinstance(exact.harmonic(65), float)


# --- uniform ------------------------------------------------------------------

def test_uniform_examples():
    assert exact.uniform_expectation(4, 2) == F(19, 5)
    assert exact.uniform_expectation(7, 7) == 1
    assert exact.uniform_recursion(10, 5, "exact")[2] == F(19, 7)


def test_uniform_recursion_a2_formula():
    for n in range(6, 30):
        for s in range(n // 2, n - 1):
            a2 = exact.uniform_recursion(n, s, "exact")[2]
            assert a2 == F(n * (3 * n - 2 * s - 1), s * (2 * n - s - 1))


@pytest.mark.parametrize("n, s", [(4, 2), (3, 2), (2, 1)])
def test_ie_examples(n, s):
    assert exact.uniform_expectation_ie(n, s) == {(4, 2): F(19, 5), (3, 2): F(5, 2), (2, 1): F(3)}[(n, s)]


def test_uniform_matches_brute_force_oracle():
    # frozen from the brute-force subset inclusion-exclusion in tests/oracles.py
    assert exact.uniform_expectation(6, 3) == F(327, 76)
    assert exact.uniform_expectation(8, 3) == F(974651, 148005)
    for n in range(2, 8):
        for s in range(1, n):
            assert exact.uniform_expectation(n, s) == uniform_ie(n, s)


def test_recursion_equals_ie_up_to_40():
    for n in range(3, 41):
        for s in range(1, n):
            assert exact.uniform_expectation(n, s) == exact.uniform_expectation_ie(n, s)


def test_float_matches_exact_to_1e12():
    worst = 0.0
    for n in range(3, 41):
        for s in range(1, n):
            e = float(exact.uniform_expectation(n, s, "exact"))
            for f in (exact.uniform_expectation(n, s, "float"), exact.uniform_expectation_ie(n, s, "float")):
                worst = max(worst, abs(f - e) / e)
    assert worst <= 1e-12


def test_ie_rejects_full_package():
    with pytest.raises(InvalidParameterError):
        exact.uniform_expectation_ie(5, 5)


@pytest.mark.parametrize("n, s", [(4, 0), (4, 5), (0, 0)])
def test_uniform_rejects_bad_sizes(n, s):
    with pytest.raises(InvalidParameterError):
        exact.uniform_expectation(n, s)


def test_exact_values_are_reduced():
    v = exact.uniform_expectation(12, 5)
    assert v.denominator > 0 and math.gcd(v.numerator, v.denominator) == 1


# --- arcs ---------------------------------------------------------------------

def test_arcs_examples():
    assert exact.arcs_expectation(10, 5) == F(13, 3)
    assert exact.arcs_closed_form(10, 5) == F(13, 3)
    assert exact.arcs_closed_form(4, 2) == F(11, 3)
    assert exact.arcs_closed_form(10, 9) == F(19, 9)


def test_arcs_recursion_intermediates():
    for n in range(4, 41):
        for s in range(n // 2, n):
            t = exact.arcs_recursion(n, s, "exact")
            assert t[1] == F(n, s)
            assert all(t[k] == F(n * (s + k), s * (s + 1)) for k in range(1, n - s + 1))


def test_arcs_equals_uniform_at_n_minus_1():
    for n in range(4, 41):
        v = exact.arcs_expectation(n, n - 1)
        assert v == 1 + F(n, n - 1) == exact.uniform_expectation(n, n - 1)


def test_arcs_state_collapse_rejected():
    with pytest.raises(StateCollapseError, match="state collapse"):
        exact.arcs_expectation(10, 4)
    with pytest.raises(StateCollapseError):
        exact.arcs_closed_form(10, 4)


# --- near-decomposition, rotation, bounds ------------------------------------

def test_near_decomposition():
    assert exact.near_decomposition_expectation(10, 3) == F(25, 3)
    assert exact.near_decomposition_expectation(10, 2) == F(137, 12)
    for n in range(4, 30, 2):
        assert exact.near_decomposition_expectation(n, n // 2) == 3
    with pytest.raises(InvalidParameterError):
        exact.near_decomposition_expectation(5, 5)


def test_rotation():
    assert exact.rotation_expectation(10, 7) == F(5, 2)
    assert exact.rotation_expectation(12, 8) == F(5, 2)
    for n in range(4, 30, 2):
        assert exact.rotation_expectation(n, n // 2) == 3
    with pytest.raises(InvalidParameterError):
        exact.rotation_expectation(10, 4)


def test_bounds_examples():
    b = exact.expectation_bounds(4, 2)
    assert (b.lower, b.upper) == (F(25, 7), F(29, 7))
    assert b.contains(F(19, 5))
    assert exact.expectation_bounds(3, 2).lower == F(11, 5)
    for n in range(4, 12):
        Hn = exact.harmonic(n)
        assert exact.expectation_bounds(n, n - 1).lower == Hn / (Hn - 1)


def test_bounds_range():
    with pytest.raises(InvalidParameterError):
        exact.expectation_bounds(5, 1)
    with pytest.raises(InvalidParameterError):
        exact.expectation_bounds(5, 5)


@settings(max_examples=60, deadline=None)
@given(st.integers(4, 40).flatmap(lambda n: st.tuples(st.just(n), st.integers(2, n - 1))))
def test_bounds_strict_property(ns):
    n, s = ns
    b = exact.expectation_bounds(n, s)
    assert b.lower < exact.uniform_expectation(n, s) < b.upper


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 40).flatmap(lambda n: st.tuples(st.just(n), st.integers(1, n - 1))))
def test_uniform_monotone_in_s(ns):
    n, s = ns
    assert exact.uniform_expectation(n, s + 1) < exact.uniform_expectation(n, s)


# --- missing-count chain --------------------------------------------------------

@pytest.mark.filterwarnings("ignore::couponlab.errors.TruncationWarning")
def test_missing_row1_point_mass():
    for n, s in [(4, 2), (10, 3), (50, 49)]:
        pm = exact.missing_count_pmf(n, s, kmax=3)
        row = pm.row(1)
        assert row[n - s] == 1.0 and sum(row) == 1.0


def test_missing_count_expectation_4_2():
    pm = exact.missing_count_pmf(4, 2, mode="exact")
    assert pm.within_tolerance
    assert abs(float(pm.expected_rounds() - F(19, 5))) <= pm.truncation_bound
    pf = exact.missing_count_pmf(4, 2, mode="float")
    assert abs(pf.expected_rounds() - 3.8) <= pf.truncation_bound + 1e-15


def test_missing_rows_are_distributions():
    pm = exact.missing_count_pmf(30, 7)
    mass0 = pm.completion_cdf()
    assert all(b >= a - 1e-15 for a, b in zip(mass0, mass0[1:]))
    for k in range(pm.kmax + 1):
        row = pm.row(k)
        assert abs(sum(row) - 1.0) <= 1e-12
        if k >= 1:
            assert max(row[30 - 7 + 1:], default=0.0) == 0.0
    ex = exact.missing_count_pmf(8, 3, mode="exact")
    assert all(sum(r) == 1 for r in ex.rows)


def test_missing_truncation_flagged():
    with pytest.warns(TruncationWarning):
        pm = exact.missing_count_pmf(20, 3, kmax=5)
    assert not pm.within_tolerance
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert exact.missing_count_pmf(20, 3).within_tolerance


def test_missing_count_matches_recursion_float():
    for n, s in [(40, 17), (100, 50), (64, 3)]:
        pm = exact.missing_count_pmf(n, s)
        assert pm.expected_rounds() == pytest.approx(float(exact.uniform_expectation(n, s, "float")), rel=1e-11)


def test_union_tail_bound_zero_at_full():
    assert exact.union_tail_bound(5, 5, 1) == 0.0
