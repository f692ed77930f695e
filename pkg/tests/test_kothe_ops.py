import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import corpus
from kothedim.kothe_ops import (
    AnalysisOptions,
    CertificateEntry,
    CertificateError,
    DominationCertificate,
    IndexSetMismatch,
    MissingPrerequisite,
    NonDirectedError,
    bar_set,
    check_directed,
    compose,
    dominates,
    equivalent,
    explicit,
    make_entry,
    numeric_certificate,
    pbar_certificate,
    pbar_check,
    pbar_product_equiv,
    power_reduction,
    power_series,
    power_set,
    product_set,
    reduction_steps,
    sources,
    targets,
)
from kothedim.weights import AlphaRule, IndexSet, LogTable

SMALL = IndexSet.naturals(256)


def ps(R, alpha="linear", n=256, grid="linear"):
    return power_series(R, AlphaRule(alpha), IndexSet.naturals(n), grid)


def test_search_window():
    P = ps(math.inf)
    assert list(sources(P)) == [1, 2, 3]
    assert list(targets(P, 2)) == list(range(2, 11))
    E = explicit([LogTable((0.0,) * 8)] * 4, IndexSet.naturals(8))
    assert list(sources(E)) == [1, 2, 3, 4]
    assert list(targets(E, 3)) == [3, 4]


def test_power_series_grid_values():
    P = ps(2.0)
    for k in (1, 3, 7):
        lw = P.log_weights(k)
        for n in (1, 5, 40):
            assert lw[n - 1] == pytest.approx(math.log(oracles.power_series_weight(2.0, n, k)), rel=1e-12)
    s = ps(math.inf, "log_n", grid="exp")
    assert math.exp(s.log_weights(2)[4]) == pytest.approx(25.0)


def test_directedness_enforced():
    bad = explicit([LogTable((1.0, 1.0)), LogTable((0.0, 2.0))], IndexSet.naturals(2))
    with pytest.raises(NonDirectedError):
        check_directed(bad, 2)
    with pytest.raises(NonDirectedError):
        dominates(bad, bad)


def test_index_set_mismatch():
    with pytest.raises(IndexSetMismatch):
        dominates(ps(2.0, n=64), ps(2.0, n=128))


# closed-form power-series domination ------------------------------------

RADII = [1.0, 1.5, 2.0, 3.0, math.inf]
EXPONENTS = [0.5, 1.0, 2.0, 3.0]


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(RADII), st.sampled_from(EXPONENTS), st.sampled_from(EXPONENTS))
def test_closed_form_agrees_with_scan(R, a, b):
    P = ps(R, n=2048)
    A, B = power_set(P, a), power_set(P, b)
    v = dominates(A, B)
    assert v.exact
    if v.holds:
        cert = v.certificate()
        assert cert.verify() == []
        for e in cert.entries:
            got = oracles.sup_log_ratio(A.log_weights(e.k), B.log_weights(e.m))
            assert e.log_c >= got - 1e-9
    else:
        k = v.evidence["witness_source"]
        # every candidate target is beaten by a growing ratio
        for trace in v.evidence["traces"].values():
            assert all(y > x for x, y in zip(trace, trace[1:]))
        assert k >= 1


def test_closed_form_failure_message():
    P = ps(2.0)
    v = dominates(power_set(P, 2), P)
    assert v.fails and v.exact
    assert "r_3 = 1.5" in v.reason and "2.25 > 2" in v.reason


def test_closed_form_target_can_sit_below_source():
    # (p^(k))^(1/2) is bounded by an earlier weight on the r_k = k grid
    P = ps(math.inf)
    v = dominates(power_set(P, 0.5), P)
    ms = {e.k: e.m for e in v.certificate().entries}
    assert ms == {1: 1, 2: 2, 3: 2}


def test_algebra_targets_for_entire_functions():
    P = ps(math.inf)
    v = dominates(P, power_set(P, 2))
    assert {e.k: e.m for e in v.certificate().entries} == {1: 1, 2: 2, 3: 2}
    v = dominates(power_set(P, 2), P)
    assert {e.k: e.m for e in v.certificate().entries} == {1: 1, 2: 4, 3: 9}


# numeric domination ----------------------------------------------------------

walks = st.lists(st.lists(st.floats(-2.0, 2.0), min_size=32, max_size=32), min_size=2, max_size=4)


def walk_family(rows, n=32):
    """Log-weights from random walks in i, made directed in k by running maxima."""
    tables, prev = [], None
    for row in rows:
        lw = np.cumsum(row)
        if prev is not None:
            lw = np.maximum(lw, prev + 0.25)
        prev = lw
        tables.append(LogTable(tuple(lw.tolist())))
    return explicit(tables, IndexSet.naturals(n))


@settings(max_examples=40, deadline=None)
@given(walks)
def test_numeric_certificate_constants_match_oracle(rows):
    P = walk_family(rows)
    cert, traces = numeric_certificate(P, P)
    assert cert is not None, traces
    assert cert.verify() == []
    for e in cert.entries:
        assert e.m == e.k
        want = oracles.sup_log_ratio(P.log_weights(e.k), P.log_weights(e.m))
        assert e.log_c == pytest.approx(max(want, 0.0) if e.log_c >= 0 else want, abs=1e-12)


def test_unstable_domination_is_unknown_with_traces():
    P = ps(2.0, n=512)
    A = power_set(P, 2)
    # hide the closed form by copying the weights into tables
    tab = explicit([LogTable(tuple(A.log_weights(k).tolist())) for k in range(1, 6)], P.index_set)
    tabP = explicit([LogTable(tuple(P.log_weights(k).tolist())) for k in range(1, 6)], P.index_set)
    v = dominates(tab, tabP)
    assert v.unknown
    assert set(v.evidence["traces"]) >= {"3"}
    assert len(v.evidence["sample_points"]) == 4


def test_tampered_certificate_detected(families):
    v = dominates(families["h_entire"], power_set(families["h_entire"], 2))
    cert = v.certificate()
    e = cert.entries[-1]
    bad = replace(cert, entries=cert.entries[:-1] + (replace(e, m=1),))
    assert bad.verify()
    assert not bad.sound


def test_settle_rejects_wrong_constant():
    P = ps(math.inf)
    with pytest.raises(CertificateError):
        make_entry(power_set(P, 2), P, 3, 3, 0.0)


def test_compose_adds_constants():
    P = ps(math.inf)
    P2, P4 = power_set(P, 2), power_set(P, 4)
    c1 = dominates(P, P2).certificate()
    c2 = dominates(P2, P4).certificate()
    c = compose(c1, c2)
    assert c.verify() == []
    for e in c.entries:
        e1 = c1.entry(e.k)
        assert e.log_c >= e1.log_c + c2.covering(e1.m).log_c - 1e-12


def test_equivalence_records_both_directions(families):
    s = families["s"]
    v = equivalent(s, power_set(s, 2))
    assert v.holds and v.exact
    assert v.certificate("forward") is not None and v.certificate("backward") is not None


# certificate transformers ----------------------------------------------------

@given(st.lists(st.tuples(st.floats(1e-6, 1e6), st.floats(1e-6, 1e6)), min_size=1, max_size=30),
       st.floats(1.0, 100.0))
def test_pbar_implication_elementwise(pairs, C):
    p = np.array([a for a, _ in pairs])
    q = np.array([b for _, b in pairs])
    q = np.maximum(q, p)  # p <= q
    hyp = p <= C * q * q
    if hyp.all():
        _, _, ok = pbar_check(p, q, C)
        assert ok


ALGEBRAS = ["l1", "cn", "s", "h_entire", "h_d1", "h_d2"]


@pytest.mark.parametrize("name", ALGEBRAS)
def test_pbar_certificate_verifies(name):
    P = corpus()[name]
    base = dominates(P, power_set(P, 2)).certificate()
    cert = pbar_certificate(P, base)
    assert cert.verify() == []
    assert cert.source == bar_set(P)


@pytest.mark.parametrize("name", ["l1", "cn", "s", "h_entire", "h_d1"])
def test_pbar_product_equivalence(name):
    P = corpus()[name]
    fwd, rev = pbar_product_equiv(P)
    assert fwd.verify() == [] and rev.verify() == []
    assert fwd.source == product_set(bar_set(P), P)


def test_pbar_product_equivalence_needs_b():
    with pytest.raises(MissingPrerequisite):
        pbar_product_equiv(corpus()["h_d2"])


def test_reduction_steps():
    assert reduction_steps(1, 3) == (3.0, 1)
    assert reduction_steps(2, 3) == (1.5, 2)
    assert reduction_steps(4, 5)[1] == 4  # 1.25^3 < 2 <= 1.25^4


@pytest.mark.parametrize("k,l", [(1, 2), (1, 3), (2, 3), (3, 4)])
@pytest.mark.parametrize("name", ["s", "h_entire", "h_d1", "l1"])
def test_power_reduction_verifies(name, k, l):
    P = corpus()[name]
    opts = AnalysisOptions(generators=3, search_depth=40)
    v = dominates(power_set(P, l), power_set(P, k), opts)
    assert v.holds
    out = power_reduction(P, k, l, v.certificate())
    assert out.verify() == []
    assert out.source == power_set(P, 2) and out.target == P


def test_thread_pool_preserves_results(monkeypatch, families):
    P = families["matrix_example"]
    serial = dominates(P, power_set(P, 2), AnalysisOptions(generators=4)).certificate()
    monkeypatch.setenv("KOTHEDIM_THREADS", "4")
    threaded = dominates(P, power_set(P, 2), AnalysisOptions(generators=4)).certificate()
    assert serial.entries == threaded.entries
