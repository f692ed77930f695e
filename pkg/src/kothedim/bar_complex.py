"""Truncated bar complex of lambda(P) on basis tuples.

A chain of arity a lives in the position holding A^(tensor a); its terms map
index tuples of length a to coefficients.  The differential to arity a-1 is

    d e_(i0..in) = sum_{k=0}^{n-1} (-1)^k delta(i_k, i_{k+1}) e_(i0..^ik..in)

(slots k and k+1 multiplied in the Köthe algebra, where e_i e_j = delta_ij e_i).
Coefficients are never converted, so int and Fraction inputs stay exact.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional

from .conditions import NotAnAlgebra, check_biprojective
from .kothe_ops import (
    DEFAULT_OPTIONS,
    STABILITY_TOL,
    AnalysisOptions,
    DominationCertificate,
    KotheSet,
    _masked_max,
    check_directed,
    log_ratio,
    make_entry,
    parallel_map,
    power_set,
    sources,
    targets,
)
from .weights import IndexSet, Weight, log_values


class ArityError(ValueError):
    pass


@dataclass(frozen=True)
class Chain:
    arity: int
    terms: Mapping[tuple, object] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for idx, c in dict(self.terms).items():
            idx = tuple(int(i) for i in idx)
            if len(idx) != self.arity:
                raise ArityError(f"tuple {idx} has length {len(idx)}, chain arity is {self.arity}")
            if c != 0:
                clean[idx] = c
        object.__setattr__(self, "terms", clean)

    @classmethod
    def basis(cls, idx) -> "Chain":
        idx = tuple(idx)
        return cls(len(idx), {idx: 1})

    @classmethod
    def diagonal(cls, i: int, arity: int) -> "Chain":
        """e_i^arity = e_(i..i)."""
        return cls.basis((i,) * arity)

    @classmethod
    def zero(cls, arity: int) -> "Chain":
        return cls(arity, {})

    def __add__(self, other: "Chain") -> "Chain":
        if other.arity != self.arity:
            raise ArityError("cannot add chains of different arity")
        out = dict(self.terms)
        for k, v in other.terms.items():
            out[k] = out.get(k, 0) + v
        return Chain(self.arity, out)

    def scale(self, c) -> "Chain":
        return Chain(self.arity, {k: c * v for k, v in self.terms.items()})

    def __sub__(self, other: "Chain") -> "Chain":
        return self + other.scale(-1)

    def __eq__(self, other) -> bool:
        return isinstance(other, Chain) and self.arity == other.arity and self.terms == other.terms

    def __hash__(self):
        return hash((self.arity, frozenset(self.terms.items())))

    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, idx) -> object:
        return self.terms.get(tuple(idx), 0)

    def in_diagonal_kernel(self, i: int) -> bool:
        """Membership in E^i: coefficient at (i..i) is exactly zero."""
        return self.coefficient((i,) * self.arity) == 0

    def support(self) -> set:
        return {i for idx in self.terms for i in idx}


def _d_basis(idx: tuple) -> dict:
    out = {}
    for k in range(len(idx) - 1):
        if idx[k] == idx[k + 1]:
            face = idx[:k] + idx[k + 1:]
            out[face] = out.get(face, 0) + (-1) ** k
    return out


def differential(c: Chain) -> Chain:
    """The bar differential, arity a -> a-1, for a >= 2."""
    if c.arity < 2:
        raise ArityError(f"differential needs arity >= 2, got {c.arity}")
    out = {}
    for idx, coeff in c.terms.items():
        for face, sign in _d_basis(idx).items():
            out[face] = out.get(face, 0) + sign * coeff
    return Chain(c.arity - 1, out)


def d_squared(c: Chain) -> Chain:
    """d(d c); the map A -> C at the bottom of the complex is zero."""
    if c.arity <= 2:
        return Chain.zero(max(c.arity - 2, 0))
    return differential(differential(c))


@dataclass(frozen=True)
class ScanReport:
    checked: int
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_json(self):
        return {"checked": self.checked, "violations": [list(v) for v in self.violations]}


def _leading(n: int, arity: int, lead: int, fn) -> tuple:
    count, bad = 0, []
    for rest in itertools.product(range(1, n + 1), repeat=arity - 1):
        idx = (lead,) + rest
        count += 1
        v = fn(idx)
        if v is not None:
            bad.append(v)
    return count, bad


def _scan(n: int, arity: int, fn) -> tuple:
    parts = parallel_map(lambda lead: _leading(n, arity, lead, fn), range(1, n + 1))
    return sum(p[0] for p in parts), [v for p in parts for v in p[1]]


def verify_d_squared(trunc: int, max_arity: int) -> ScanReport:
    """Exhaustive d(d e) = 0 over basis tuples with entries <= trunc and arity 1..max_arity."""
    if max_arity < 3:
        raise ArityError("max_arity must be >= 3")
    checked, bad = 0, []
    for arity in range(1, max_arity + 1):
        def probe(idx):
            return None if d_squared(Chain.basis(idx)).is_zero() else idx
        c, b = _scan(trunc, arity, probe)
        checked += c
        bad += b
    return ScanReport(checked, tuple(bad))


def diagonal_invariance(trunc: int, arity: int) -> ScanReport:
    """Every basis tuple off the (i..i) diagonal maps into E^i, for every i <= trunc."""
    if arity < 2:
        raise ArityError("arity must be >= 2")

    def probe(idx):
        image = differential(Chain.basis(idx))
        for i in range(1, trunc + 1):
            if idx != (i,) * arity and not image.in_diagonal_kernel(i):
                return idx + (i,)
        return None

    c, b = _scan(trunc, arity, probe)
    return ScanReport(c, tuple(b))


def diagonal_image(i: int, n: int) -> Chain:
    """d(e_i^(n+1)), which is e_i^n for odd n and 0 for even n."""
    return differential(Chain.diagonal(i, n + 1))


def seminorm_bound_factor(c: Chain, w: Weight, index_set: IndexSet) -> float:
    """max(1, max_i 1/w_i) over the chain's support.

    Multiplying two equal slots turns w_i^2 into w_i, which can grow a tensor
    seminorm by 1/w_i when w_i < 1; this is the honest constant in
    ``|d c|_w <= (arity-1) * factor * |c|_w``.
    """
    lw = log_values(w, index_set)
    worst = max([0.0] + [-float(lw[index_set.position(i)]) for i in c.support()])
    return math.exp(worst)


# ---------------------------------------------------------------------------
# openness diagnostic


BOUNDED = "Bounded"
DIVERGING = "Diverging"
UNKNOWN = "Unknown"


@dataclass(frozen=True)
class OpennessReport:
    n: int
    status: str
    certificate: Optional[DominationCertificate]
    traces: dict  # k -> {m: [R(N') ...]}
    sample_points: tuple
    per_source: dict  # k -> status
    b_status: str = ""
    consistent: Optional[bool] = None
    note: str = ""

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N'", "k", "m", "R"])
        for k, per_m in sorted(self.traces.items()):
            for m, trace in sorted(per_m.items()):
                for npt, r in zip(self.sample_points, trace):
                    w.writerow([npt, k, m, repr(r)])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "n": self.n, "status": self.status,
            "certificate": self.certificate.to_json() if self.certificate else None,
            "sample_points": list(self.sample_points),
            "per_source": {str(k): s for k, s in self.per_source.items()},
            "traces": {str(k): {str(m): t for m, t in v.items()} for k, v in self.traces.items()},
            "biprojective": self.b_status, "consistent": self.consistent, "note": self.note,
        }


def _stable(full: float, part: float) -> bool:
    return full == part or abs(full - part) <= STABILITY_TOL * max(1.0, abs(full))


def diverging_trace(trace) -> bool:
    """Strictly increasing over all sample points, positive start, final/initial > 4."""
    if not all(math.isfinite(t) for t in trace):
        return False
    up = all(b > a for a, b in zip(trace, trace[1:]))
    return up and trace[0] > 0 and trace[-1] / trace[0] > 4


def _openness_source(hi: KotheSet, lo: KotheSet, k: int, opts):
    idx = hi.index_set
    masks = [idx.prefix_mask(n) for n in idx.sample_points()]
    lp = hi.log_weights(k)
    traces, chosen = {}, None
    for m in targets(lo, k, opts):
        d = log_ratio(lp, lo.log_weights(m))
        trace = [_masked_max(d, mk) for mk in masks]
        traces[m] = trace
        if chosen is None and math.isfinite(trace[-1]) and _stable(trace[-1], trace[-2]):
            chosen = m
    if chosen is not None:
        entry = make_entry(hi, lo, k, chosen, max(traces[chosen][-1], 0.0))
        return BOUNDED, entry, traces
    if all(diverging_trace(t) for t in traces.values()):
        return DIVERGING, None, traces
    return UNKNOWN, None, traces


def openness_ratio(P: KotheSet, n: int = 1, opts: AnalysisOptions = DEFAULT_OPTIONS,
                   cross_check: bool = True) -> OpennessReport:
    """Scan R(N') = max_{i <= N'} [(n+1) ln p^(k)_i - n ln q^(m)_i] for odd n.

    Bounded: every source has a stable target; the constants certify
    P^[n+1] ≺ P^[n].  Diverging: some source grows for every target.
    """
    if n < 1 or n % 2 == 0:
        raise ValueError(f"openness diagnostic needs odd n >= 1, got {n}")
    check_directed(P, max(sources(P, opts)) + opts.search_depth)
    hi, lo = power_set(P, n + 1), power_set(P, n)
    ks = list(sources(P, opts))
    results = parallel_map(lambda k: _openness_source(hi, lo, k, opts), ks)
    per_source = {k: r[0] for k, r in zip(ks, results)}
    traces = {k: r[2] for k, r in zip(ks, results)}
    if all(s == BOUNDED for s in per_source.values()):
        status = BOUNDED
        cert = DominationCertificate(hi, lo, tuple(r[1] for r in results),
                                     notes=(("diagnostic", f"openness n={n}"),))
    else:
        status = DIVERGING if any(s == DIVERGING for s in per_source.values()) else UNKNOWN
        cert = None
    b_status, consistent, note = "", None, ""
    if cross_check:
        try:
            b = check_biprojective(P, opts)
            b_status = b.status.value
            if status == DIVERGING:
                consistent = not b.holds
            elif status == BOUNDED:
                consistent = not b.fails
            if status == BOUNDED:
                note = "bounded on the examined sources; a bound for every source gives " \
                       "P^[n+1] ≺ P^[n], hence P^[2] ≺ P and (B)"
            elif status == DIVERGING:
                note = "(B) forces a bounded ratio, so (B) fails"
        except NotAnAlgebra as exc:
            b_status, note = "NotAnAlgebra", str(exc)
    return OpennessReport(n, status, cert, traces, P.index_set.sample_points(), per_source,
                          b_status, consistent, note)
