import itertools
import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import corpus
from kothedim.classify import (
    BAR,
    SUP,
    TRIVIAL,
    classify_dimensions,
    classify_power_series,
    classify_verdicts,
    determinate_tuples,
    global_row,
    render_table,
    weak_row,
)
from kothedim.conditions import NotAnAlgebra
from kothedim.kothe_ops import AnalysisOptions, fails, holds, power_series, unknown
from kothedim.weights import AlphaRule, IndexSet

INF = math.inf


def verdict(flag, exact=True):
    if flag is None:
        return unknown("?")
    return holds("h", exact) if flag else fails("f")


def verdicts(U, N, B, M, exact=True, alg=True):
    return {"algebra": verdict(alg), "U": verdict(U, exact), "N": verdict(N, exact),
            "B": verdict(B, exact), "M": verdict(M, exact)}


EXPECTED = {
    "l1": (2, 2, 2, 2),
    "cn": (0, 0, 0, 0),
    "s": (1, 1, 1, 1),
    "h_entire": (1, 1, 1, 1),
    "h_d1": (0, 0, 0, 0),
    "h_d2": (INF, INF, INF, INF),
    "matrix_example": (2, 2, 1, 1),
}


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_corpus_dimensions(name):
    r = classify_dimensions(corpus()[name])
    assert r.dims == EXPECTED[name]
    assert r.soundness.value == "Exact"


def test_witness_modules():
    c = corpus()
    assert classify_dimensions(c["l1"]).witness == SUP
    assert classify_dimensions(c["s"]).weak_witness == TRIVIAL
    r = classify_dimensions(c["matrix_example"])
    assert r.witness == BAR and r.weak_witness == TRIVIAL
    assert any("ℓ¹" in n for n in r.notes)


def test_table_exhaustive_and_single_valued():
    rows = determinate_tuples()
    assert len(rows) == 9  # (U) forces the other three
    for U, N, B, M in rows:
        r = classify_verdicts(verdicts(U, N, B, M))
        assert r.determined
        assert r.dg == global_row(U, N, B, M)[0]
        assert r.wdg == weak_row(U, N, B)[0]
        assert r.wdg <= r.dg
        if B:
            assert r.dg <= 2
        assert (r.dg == 0) == U


def test_unknown_blocks_only_needed_branches():
    r = classify_verdicts(verdicts(False, None, True, True))
    assert r.dg is None and r.dg_range == (1, 2)
    assert r.wdg is None and r.wdg_range == (1, 2)
    assert r.blocking == ("N",)
    # (M) is irrelevant once (B) fails
    r = classify_verdicts(verdicts(False, None, False, None))
    assert r.dims == (INF,) * 4
    # (M) matters for dg only
    r = classify_verdicts(verdicts(False, True, True, None))
    assert r.wdg == 1 and r.dg is None and r.dg_range == (1, 2)


@given(st.tuples(*[st.sampled_from([True, False, None])] * 4))
def test_unknown_ranges_cover_completions(states):
    U, N, B, M = states
    r = classify_verdicts(verdicts(U, N, B, M))
    fill = [[s] if s is not None else [True, False] for s in states]
    possible = {global_row(*t)[0] for t in itertools.product(*fill) if not t[0] or all(t[1:])}
    if not possible:
        return
    assert set(r.dg_range) == possible
    assert (r.dg is not None) == (len(possible) == 1)
    if r.determined:
        assert r.wdg <= r.dg


def test_numeric_holds_downgrades_and_strict_blocks():
    r = classify_verdicts(verdicts(False, True, True, True, exact=False))
    assert r.dims == (1, 1, 1, 1) and r.soundness.value == "Numeric"
    r = classify_verdicts(verdicts(False, True, True, True, exact=False), strict=True)
    assert not r.determined


def test_not_an_algebra():
    with pytest.raises(NotAnAlgebra):
        classify_verdicts(verdicts(False, False, False, False, alg=False))
    with pytest.raises(NotAnAlgebra):
        classify_dimensions(power_series(0.5, AlphaRule("linear"), IndexSet.naturals(256)))


@pytest.mark.parametrize("R,alpha,dim", [
    (INF, "log_n", 1), (1.0, "linear", 0), (INF, "sqrt_log_n", 2), (2.0, "linear", INF),
    (INF, "linear", 1), (1.0, "log_n", 2), (5.0, "sqrt_log_n", INF),
])
def test_power_series_symbolic_and_cross_check(R, alpha, dim):
    sym = classify_power_series(R, AlphaRule(alpha))
    assert sym.dims == (dim,) * 4
    full = classify_dimensions(power_series(R, AlphaRule(alpha), IndexSet.naturals(2048)))
    assert full.dims == sym.dims


def test_power_series_symbolic_rejects_small_radius():
    with pytest.raises(NotAnAlgebra):
        classify_power_series(0.9, AlphaRule("linear"))


def test_strict_option_keeps_exact_reports():
    r = classify_dimensions(corpus()["s"], AnalysisOptions(strict=True))
    assert r.dims == (1, 1, 1, 1)


def test_render_marks_selected_row():
    text = render_table(classify_dimensions(corpus()["matrix_example"]))
    marked = [line for line in text.splitlines() if line.endswith("<-")]
    assert len(marked) == 1 and "not (M)" in marked[0]
