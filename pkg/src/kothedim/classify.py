"""Condition verdicts to the four homological dimensions dg, db, w.dg, w.db.

Decision tables (top-down, for a metrizable Köthe algebra A = lambda(P)):

    w.dg A:  (U) -> 0;  (B),(N) -> 1;  (B),not (N) -> 2;  not (B) -> inf
    dg A:    (U) -> 0;  (B),(N),(M) -> 1;  (B),(N),not (M) -> 2;
             (B),not (N) -> 2;  not (B) -> inf

with db = dg and w.db = w.dg.  Unknown verdicts are resolved by enumerating
every completion consistent with (U) => (B),(N),(M); a dimension is
determined when all completions agree, otherwise the report carries the set
of possible values and the conditions that block it.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass, replace
from typing import Optional

from .conditions import (
    NotAnAlgebra,
    _lim_log_ratio_zero,
    _sup_log_ratio_finite,
    all_weights_at_least_one,
    check_algebra,
    check_biprojective,
    check_matrix,
    check_nuclear,
    check_unital,
)
from .kothe_ops import (
    DEFAULT_OPTIONS,
    AnalysisOptions,
    KotheSet,
    Soundness,
    Status,
    Verdict,
    check_directed,
    fails,
    holds,
    power_form,
    sources,
    unknown,
)
from .weights import AlphaRule

INF = math.inf
CONDITIONS = ("U", "N", "B", "M")

TRIVIAL = "TrivialModule ℂ"
BAR = "BarModule λ(P̄)"
SUP = "SupModule λ^∞(P)"


def weak_row(U: bool, N: bool, B: bool) -> tuple:
    """(w.dg, witness) for determinate verdicts."""
    if U:
        return 0, None
    if not B:
        return INF, TRIVIAL
    return (1, TRIVIAL) if N else (2, SUP)


def global_row(U: bool, N: bool, B: bool, M: bool) -> tuple:
    """(dg, witness) for determinate verdicts."""
    if U:
        return 0, None
    if not B:
        return INF, TRIVIAL
    if not N:
        return 2, SUP
    return (1, TRIVIAL) if M else (2, BAR)


def consistent(U: bool, N: bool, B: bool, M: bool) -> bool:
    return not U or (N and B and M)


def determinate_tuples():
    """All verdict 4-tuples (U, N, B, M) the theory allows."""
    return [t for t in itertools.product((True, False), repeat=4) if consistent(*t)]


TABLE_ROWS = (
    ("(U)", 0, 0, {"U": True}),
    ("(B), (N), (M), not (U)", 1, 1, {"U": False, "B": True, "N": True, "M": True}),
    ("(B), (N), not (M)", 1, 2, {"U": False, "B": True, "N": True, "M": False}),
    ("(B), not (N)", 2, 2, {"U": False, "B": True, "N": False}),
    ("not (B)", INF, INF, {"B": False}),
)


def fmt_dim(d) -> str:
    if d is None:
        return "Unknown"
    return "∞" if d == INF else str(int(d))


def _dim_json(d):
    return None if d is None else ("inf" if d == INF else int(d))


@dataclass(frozen=True)
class DimensionReport:
    dg: Optional[float]
    wdg: Optional[float]
    verdicts: dict  # name -> Verdict, names "algebra", "U", "N", "B", "M"
    witness: Optional[str] = None
    weak_witness: Optional[str] = None
    soundness: Soundness = Soundness.EXACT
    dg_range: tuple = ()
    wdg_range: tuple = ()
    blocking: tuple = ()
    notes: tuple = ()
    family: str = ""

    @property
    def db(self):
        return self.dg

    @property
    def wdb(self):
        return self.wdg

    @property
    def dims(self) -> tuple:
        return (self.dg, self.db, self.wdg, self.wdb)

    @property
    def determined(self) -> bool:
        return self.dg is not None and self.wdg is not None

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "dimensions": {"dg": _dim_json(self.dg), "db": _dim_json(self.db),
                           "wdg": _dim_json(self.wdg), "wdb": _dim_json(self.wdb)},
            "ranges": {"dg": [_dim_json(d) for d in self.dg_range],
                       "wdg": [_dim_json(d) for d in self.wdg_range]},
            "witness": {"dg": self.witness, "wdg": self.weak_witness},
            "soundness": self.soundness.value,
            "blocking": list(self.blocking),
            "verdicts": {k: v.to_json() for k, v in self.verdicts.items()},
            "notes": list(self.notes),
        }


def strictify(v: Verdict) -> Verdict:
    """Numeric Holds counts as Unknown in strict mode."""
    if v.holds and not v.exact:
        return replace(v, status=Status.UNKNOWN, reason="strict: numeric only; " + v.reason)
    return v


def _completions(states: dict):
    free = [c for c in CONDITIONS if states[c] is None]
    for bits in itertools.product((True, False), repeat=len(free)):
        t = dict(states)
        t.update(zip(free, bits))
        if consistent(t["U"], t["N"], t["B"], t["M"]):
            yield t


def _sorted_dims(ds) -> tuple:
    return tuple(sorted(set(ds)))


def _used(U, N, B, M, weak: bool) -> list:
    if U:
        return ["U"]
    if not B:
        return ["U", "B"]
    if weak or not N:
        return ["U", "B", "N"]
    return ["U", "B", "N", "M"]


def decide(verdicts: dict) -> dict:
    """Apply both tables to verdicts (Unknown-aware)."""
    states = {c: (None if verdicts[c].unknown else verdicts[c].holds) for c in CONDITIONS}
    comps = list(_completions(states))
    out = {}
    for key, weak in (("dg", False), ("wdg", True)):
        rows = [(weak_row(t["U"], t["N"], t["B"]) if weak else global_row(t["U"], t["N"], t["B"], t["M"]), t)
                for t in comps]
        dims = _sorted_dims(r[0][0] for r in rows)
        blocking = set()
        for c in CONDITIONS:
            if states[c] is None:
                per = {flag: {r[0][0] for r in rows if r[1][c] is flag} for flag in (True, False)}
                if per[True] and per[False] and per[True] != per[False]:
                    blocking.add(c)
        if len(dims) == 1:
            dim, wit = rows[0][0]
            used = set().union(*(_used(t["U"], t["N"], t["B"], t["M"], weak) for _, t in rows))
            wits = {r[0][1] for r in rows}
            out[key] = (dim, wit if len(wits) == 1 else None, dims, used, blocking)
        else:
            out[key] = (None, None, dims, set(states), blocking)
    return out


def classify_verdicts(verdicts: dict, strict: bool = False, notes: tuple = (), family: str = "") -> DimensionReport:
    """Report from precomputed verdicts (keys algebra, U, N, B, M)."""
    if strict:
        verdicts = {k: strictify(v) for k, v in verdicts.items()}
    alg = verdicts["algebra"]
    if alg.fails:
        raise NotAnAlgebra(f"not a Köthe algebra: {alg.reason}")
    if alg.unknown:
        return DimensionReport(None, None, verdicts, soundness=Soundness.NUMERIC,
                               dg_range=(0, 1, 2, INF), wdg_range=(0, 1, 2, INF),
                               blocking=("algebra",), notes=notes, family=family)
    res = decide(verdicts)
    dg, wit, dg_range, dg_used, dg_block = res["dg"]
    wdg, wwit, wdg_range, wdg_used, wdg_block = res["wdg"]
    used = ["algebra"] + sorted(dg_used | wdg_used)
    determinate = [verdicts[c] for c in used if not verdicts[c].unknown]
    exact = dg is not None and wdg is not None and all(v.exact for v in determinate)
    return DimensionReport(
        dg=dg, wdg=wdg, verdicts=verdicts, witness=wit, weak_witness=wwit,
        soundness=Soundness.EXACT if exact else Soundness.NUMERIC,
        dg_range=dg_range, wdg_range=wdg_range,
        blocking=tuple(sorted(dg_block | wdg_block)), notes=notes, family=family,
    )


def certificate_digest(v: Verdict) -> list:
    out = []
    for label, cert in v.certificates:
        blob = json.dumps(cert.to_json(), sort_keys=True).encode()
        out.append(f"{label}:{hashlib.sha256(blob).hexdigest()[:12]}")
    return out


def _notes(P: KotheSet, verdicts: dict, witness: Optional[str]) -> tuple:
    notes = []
    pf = power_form(P)
    if pf:
        fam, a = pf
        radius = "∞" if fam.R == INF else format(fam.R, "g")
        scale = "" if a == 1 else f", exponent {a:g}"
        notes.append(f"closed form: power series R = {radius}, alpha = {fam.alpha.label()}{scale}")
        notes.append(f"grid: {fam.grid_label()}")
    if witness == BAR and all_weights_at_least_one(P):
        notes.append("λ(P̄) = ℓ¹ (every weight is >= 1, so p̄ = 1)")
    for name, v in verdicts.items():
        for d in certificate_digest(v):
            notes.append(f"certificate {name}/{d}")
    return tuple(notes)


def classify_dimensions(P: KotheSet, opts: AnalysisOptions = DEFAULT_OPTIONS) -> DimensionReport:
    """Evaluate all conditions on P and apply the decision tables."""
    check_directed(P, max(sources(P, opts)) + opts.search_depth)
    alg = check_algebra(P, opts)
    if alg.fails:
        raise NotAnAlgebra(f"{P.describe()} is not a Köthe algebra: {alg.reason}")
    verdicts = {"algebra": alg, "U": check_unital(P, opts), "N": check_nuclear(P, opts),
                "B": check_biprojective(P, opts, algebra=alg), "M": check_matrix(P, opts=opts)}
    base = classify_verdicts(verdicts, strict=opts.strict, family=P.describe())
    return replace(base, notes=_notes(P, base.verdicts, base.witness))


def classify_power_series(R: float, alpha: AlphaRule) -> DimensionReport:
    """Symbolic dimensions of the power series space Lambda_R(alpha)."""
    if not alpha.closed_form:
        raise ValueError("closed-form classification needs a log_n, linear or sqrt_log_n rule")
    if not R >= 1:
        raise NotAnAlgebra(f"R = {R:g}: power series spaces are algebras only for R >= 1")
    tag = f"Λ_{fmt_dim(R) if R == INF else format(R, 'g')}({alpha.label()})"
    alg = holds("R >= 1", True)
    if R == INF:
        n_ok = _sup_log_ratio_finite(alpha)
        U = fails("R = ∞")
        N = holds("sup (log n)/alpha_n < ∞", True) if n_ok else fails("sup (log n)/alpha_n = ∞")
        B = holds("R = ∞", True)
        M = holds("nondecreasing weights with (B)", True)
    elif R == 1:
        ok = _lim_log_ratio_zero(alpha)
        U = holds("lim (log n)/alpha_n = 0", True) if ok else fails("lim (log n)/alpha_n != 0")
        N = holds("lim (log n)/alpha_n = 0", True) if ok else fails("lim (log n)/alpha_n != 0")
        B = holds("R = 1", True)
        M = holds("(U) implies (M)", True) if ok else unknown("not needed")
    else:
        U = fails("R > 1")
        ok = _lim_log_ratio_zero(alpha)
        N = holds("lim (log n)/alpha_n = 0", True) if ok else fails("lim (log n)/alpha_n != 0")
        B = fails("1 < R < ∞: P^[2] not dominated by P")
        M = unknown("not needed")
    return classify_verdicts({"algebra": alg, "U": U, "N": N, "B": B, "M": M}, family=tag,
                             notes=("symbolic",))


def render_table(report: DimensionReport) -> str:
    """Plain-text layout: the case rows in the order of the decision tables."""
    v = report.verdicts

    def st(c):
        return v[c].short() + ("" if v[c].exact or not v[c].holds else "*")

    lines = [f"family: {report.family}" if report.family else "family: -",
             "conditions: " + "  ".join(f"{c}={st(c)}" for c in ("algebra",) + CONDITIONS),
             "",
             f"{'case':<28}{'w.dg = w.db':<14}{'dg = db':<10}"]
    for label, w, d, want in TABLE_ROWS:
        mark = "  <-" if _row_matches(report, want) else ""
        lines.append(f"{label:<28}{fmt_dim(w):<14}{fmt_dim(d):<10}{mark}")
    lines += ["",
              f"dg = db = {fmt_dim(report.dg)}   w.dg = w.db = {fmt_dim(report.wdg)}   "
              f"soundness: {report.soundness.value}"]
    if report.witness or report.weak_witness:
        lines.append(f"witness: dg {report.witness or '-'}; w.dg {report.weak_witness or '-'}")
    if not report.determined:
        lines.append("ranges: dg " + ",".join(fmt_dim(d) for d in report.dg_range)
                     + "; w.dg " + ",".join(fmt_dim(d) for d in report.wdg_range)
                     + "; blocked by " + (", ".join(report.blocking) or "-"))
    for n in report.notes:
        lines.append(f"note: {n}")
    return "\n".join(lines)


def _row_matches(report, want: dict) -> bool:
    v = report.verdicts
    return all(not v[c].unknown and v[c].holds == w for c, w in want.items())
