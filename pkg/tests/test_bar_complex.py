import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import corpus
from kothedim.bar_complex import (
    BOUNDED,
    DIVERGING,
    ArityError,
    Chain,
    diagonal_image,
    diagonal_invariance,
    differential,
    diverging_trace,
    openness_ratio,
    seminorm_bound_factor,
    verify_d_squared,
)
from kothedim.kothe_ops import AnalysisOptions, power_series
from kothedim.weights import AlphaRule, Constant, IndexSet, PowerLaw, tensor_seminorm


def test_small_examples():
    assert differential(Chain.basis((1, 2))).is_zero()
    assert differential(Chain.basis((3, 3))) == Chain.basis((3,))
    assert differential(Chain.basis((1, 1, 2))) == Chain.basis((1, 2))
    # e_{122} -> -e_{12}
    assert differential(Chain.basis((1, 2, 2))) == Chain.basis((1, 2)).scale(-1)
    with pytest.raises(ArityError):
        differential(Chain.basis((1,)))


def test_chain_drops_zeros_and_checks_arity():
    c = Chain(2, {(1, 2): 0, (2, 2): 3})
    assert c.terms == {(2, 2): 3}
    with pytest.raises(ArityError):
        Chain(2, {(1,): 1})


chains = st.integers(2, 5).flatmap(lambda a: st.dictionaries(
    st.tuples(*[st.integers(1, 4)] * a), st.fractions(-5, 5, max_denominator=9), max_size=10
).map(lambda d: Chain(a, d)))


@settings(max_examples=150)
@given(chains)
def test_differential_matches_slot_multiplication(c):
    assert differential(c).terms == oracles.bar_differential(c.terms)


@given(chains)
def test_fractions_stay_exact(c):
    for v in differential(c).terms.values():
        assert isinstance(v, (int, Fraction))


@pytest.mark.parametrize("N,arity,count", [(3, 3, 3 + 9 + 27), (5, 4, 5 + 25 + 125 + 625), (2, 5, 62)])
def test_d_squared_small(N, arity, count):
    r = verify_d_squared(N, arity)
    assert r.ok and r.checked == count


@given(st.integers(1, 100), st.integers(1, 4))
def test_diagonal_images(i, n):
    want = Chain.diagonal(i, n) if n % 2 else Chain.zero(n)
    assert diagonal_image(i, n) == want


@pytest.mark.parametrize("arity", [2, 3, 4])
def test_diagonal_invariance(arity):
    r = diagonal_invariance(4, arity)
    assert r.ok and r.checked == 4 ** arity


def test_diagonal_example():
    image = differential(Chain.basis((1, 1, 2)))
    assert image.in_diagonal_kernel(1)


N64 = IndexSet.naturals(64)


@settings(max_examples=80)
@given(chains, st.sampled_from([PowerLaw(1), PowerLaw(0), Constant(0.1), Constant(3.0)]))
def test_seminorm_compatibility(c, w):
    lhs = tensor_seminorm(differential(c), w, c.arity - 1, N64)
    rhs = (c.arity - 1) * seminorm_bound_factor(c, w, N64) * tensor_seminorm(c, w, c.arity, N64)
    assert lhs <= rhs * (1 + 1e-12)


def test_unguarded_bound_fails_below_one():
    # w = 0.1 on e_11: |d e_11| = 0.1 but |e_11| = 0.01; the factor 1/w is needed
    c = Chain.basis((1, 1))
    w = Constant(0.1)
    lhs = tensor_seminorm(differential(c), w, 1, N64)
    assert lhs > 2 * tensor_seminorm(c, w, 2, N64)
    assert seminorm_bound_factor(c, w, N64) == pytest.approx(10.0)


# openness diagnostic ---------------------------------------------------------

def test_trace_rule():
    assert diverging_trace([1, 2, 3, 5])
    assert not diverging_trace([1, 2, 3, 3.9])
    assert not diverging_trace([1, 2, 2, 8])
    assert not diverging_trace([-1, 2, 3, 8])


@pytest.mark.parametrize("name", ["l1", "s", "h_entire", "h_d1", "matrix_example", "cn"])
def test_bounded_families(name):
    r = openness_ratio(corpus()[name], 1)
    assert r.status == BOUNDED
    assert r.certificate.verify() == []
    assert r.consistent


def test_l1_ratio_identically_zero():
    r = openness_ratio(corpus()["l1"], 1)
    assert all(v == 0 for per in r.traces.values() for t in per.values() for v in t)


def test_disk_of_radius_two_diverges():
    r = openness_ratio(corpus()["h_d2"], 1)
    assert r.status == DIVERGING
    assert r.per_source[3] == DIVERGING  # r_3 = 1.5 and 1.5^2 > 2
    for trace in r.traces[3].values():
        assert trace[-1] / trace[0] > 4
    assert r.b_status == "Fails" and r.consistent
    assert r.csv().splitlines()[0] == "N',k,m,R"


def test_higher_odd_degree_needs_more_sources():
    P = power_series(2.0, AlphaRule("linear"), IndexSet.naturals(1024))
    # r_k^4 < 2^3 for r_k <= 1.5: the first three sources cannot see the failure
    r = openness_ratio(P, 3)
    assert r.status == BOUNDED and r.consistent is False
    r = openness_ratio(P, 3, AnalysisOptions(generators=8))
    assert r.status == DIVERGING and r.per_source[6] == DIVERGING
    with pytest.raises(ValueError):
        openness_ratio(corpus()["l1"], 2)


def test_entire_functions_target():
    r = openness_ratio(corpus()["h_entire"], 1)
    assert {e.k: e.m for e in r.certificate.entries} == {1: 1, 2: 4, 3: 9}
    assert math.isfinite(r.certificate.entries[-1].log_c)
