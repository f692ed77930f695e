"""Köthe sets as directed weight families, domination with certificates, and
the constructive domination arguments as certificate transformers.

A family is described by its generator; the k-th weight (k = 1, 2, ...) is
produced lazily.  Every family handled here is assumed directed: weights are
pointwise nondecreasing in k, so ``max{p, q}`` is dominated by a later member
and products may pair the k-th weight with the k-th weight.

``dominates(P, Q)`` answers ``P ≺ Q``.  Power-series families and their powers
and products are decided exactly by comparing exponents of ``ln r``; everything
else goes through a bounded search whose positive answers carry a
:class:`DominationCertificate` verified by an exhaustive scan of the
truncation.  A scan can never refute ``∀p ∃q``, so the numeric path returns
``Unknown`` (with the growth trace of the best constant) instead of ``Fails``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum
from functools import lru_cache
from typing import Callable, Iterable, Optional

import numpy as np

from .weights import (
    BOTTOM,
    NATURALS,
    PAIRS,
    AlphaRule,
    BarOf,
    FiniteSupport,
    Geometric,
    IndexSet,
    MatrixExample,
    Power,
    Product,
    Weight,
    log_values,
)

STABILITY_TOL = 1e-9
ROUNDING_SLACK = 1e-12


class KotheError(ValueError):
    pass


class IndexSetMismatch(KotheError):
    pass


class NonDirectedError(KotheError):
    pass


class MissingPrerequisite(KotheError):
    pass


class CertificateError(RuntimeError):
    """A certificate failed its own verification scan (unsound input or a bug)."""


@dataclass(frozen=True)
class AnalysisOptions:
    search_depth: int = 8
    generators: int = 3  # sources k = 1..generators for unbounded families
    strict: bool = False

    def __post_init__(self):
        if self.search_depth < 0 or self.generators < 1:
            raise ValueError("search_depth must be >= 0 and generators >= 1")


DEFAULT_OPTIONS = AnalysisOptions()


# ---------------------------------------------------------------------------
# generators


@dataclass(frozen=True)
class SingleWeight:
    weight: Weight

    def weight_at(self, k: int, index_set: IndexSet) -> Weight:
        return self.weight


@dataclass(frozen=True)
class FiniteSupportFamily:
    """k-th weight is the indicator of ``{1..k}``; lambda(P) = C^N."""

    def weight_at(self, k, index_set):
        if index_set.kind != NATURALS:
            raise KotheError("FiniteSupportFamily is implemented on the naturals")
        return FiniteSupport(tuple((i, 1.0) for i in range(1, k + 1)))


@dataclass(frozen=True)
class PowerSeriesFamily:
    """Weights ``r_k^{alpha_n}`` along an increasing grid ``r_k -> R``.

    ``grid="linear"``: r_k = R k/(k+1) for finite R, r_k = k for R = inf.
    ``grid="exp"`` (R = inf only): r_k = e^k, i.e. weights n^k for alpha = log n.
    """

    R: float
    alpha: AlphaRule
    grid: str = "linear"

    def __post_init__(self):
        if not self.R > 0:
            raise KotheError("power series radius must be positive")
        if self.grid not in ("linear", "exp"):
            raise KotheError(f"unknown grid {self.grid!r}")
        if self.grid == "exp" and self.R != math.inf:
            raise KotheError("the exp grid is only defined for R = inf")

    def log_radius(self, k: int) -> float:
        if self.R == math.inf:
            return float(k) if self.grid == "exp" else math.log(k)
        return math.log(self.R) + math.log(k) - math.log(k + 1)

    def weight_at(self, k, index_set):
        return Geometric(self.log_radius(k), self.alpha)

    def grid_label(self) -> str:
        if self.R == math.inf:
            return "r_k = e^k" if self.grid == "exp" else "r_k = k"
        return "r_k = R*k/(k+1)"


@dataclass(frozen=True)
class MatrixExampleFamily:
    def weight_at(self, k, index_set):
        if index_set.kind != PAIRS:
            raise KotheError("MatrixExampleFamily lives on pairs of naturals")
        return MatrixExample(k)


@dataclass(frozen=True)
class ExplicitFamily:
    weights: tuple

    def __post_init__(self):
        if not self.weights:
            raise KotheError("explicit family needs at least one weight")
        object.__setattr__(self, "weights", tuple(self.weights))

    def weight_at(self, k, index_set):
        if not 1 <= k <= len(self.weights):
            raise KotheError(f"explicit family has {len(self.weights)} weights, asked for {k}")
        return self.weights[k - 1]


@dataclass(frozen=True)
class DerivedProduct:
    left: "KotheSet"
    right: "KotheSet"

    def weight_at(self, k, index_set):
        return Product(self.left.weight(k), self.right.weight(k))


@dataclass(frozen=True)
class DerivedPower:
    base: "KotheSet"
    exponent: float

    def weight_at(self, k, index_set):
        return Power(self.base.weight(k), self.exponent)


@dataclass(frozen=True)
class DerivedBar:
    base: "KotheSet"

    def weight_at(self, k, index_set):
        return BarOf(self.base.weight(k))


@dataclass(frozen=True)
class KotheSet:
    generator: object
    index_set: IndexSet = field(default_factory=IndexSet.naturals)
    name: str = ""

    def weight(self, k: int) -> Weight:
        if k < 1:
            raise KotheError("generator indices start at 1")
        return self.generator.weight_at(k, self.index_set)

    def log_weights(self, k: int) -> np.ndarray:
        return log_values(self.weight(k), self.index_set)

    @property
    def count(self) -> Optional[int]:
        """Number of generators, or None for an unbounded sequence."""
        g = self.generator
        if isinstance(g, ExplicitFamily):
            return len(g.weights)
        if isinstance(g, DerivedProduct):
            counts = [c for c in (g.left.count, g.right.count) if c is not None]
            return min(counts) if counts else None
        if isinstance(g, (DerivedPower, DerivedBar)):
            return g.base.count
        return None

    @property
    def is_explicit(self) -> bool:
        g = self.generator
        if isinstance(g, ExplicitFamily):
            return True
        if isinstance(g, DerivedProduct):
            return g.left.is_explicit or g.right.is_explicit
        if isinstance(g, (DerivedPower, DerivedBar)):
            return g.base.is_explicit
        if isinstance(g, PowerSeriesFamily):
            return not g.alpha.closed_form
        return False

    def describe(self) -> str:
        if self.name:
            return self.name
        g = self.generator
        if isinstance(g, SingleWeight):
            return f"single({g.weight.label()})"
        if isinstance(g, FiniteSupportFamily):
            return "finite_support"
        if isinstance(g, PowerSeriesFamily):
            R = "inf" if g.R == math.inf else f"{g.R:g}"
            return f"power_series(R={R}, alpha={g.alpha.label()})"
        if isinstance(g, MatrixExampleFamily):
            return "matrix_example"
        if isinstance(g, ExplicitFamily):
            return f"explicit[{len(g.weights)}]"
        if isinstance(g, DerivedProduct):
            return f"({g.left.describe()})*({g.right.describe()})"
        if isinstance(g, DerivedPower):
            return f"({g.base.describe()})^[{g.exponent:g}]"
        if isinstance(g, DerivedBar):
            return f"bar({g.base.describe()})"
        return type(g).__name__


def l1(index_set: Optional[IndexSet] = None) -> KotheSet:
    from .weights import Constant

    return KotheSet(SingleWeight(Constant(1.0)), index_set or IndexSet.naturals(), "l1")


def finite_support(index_set: Optional[IndexSet] = None) -> KotheSet:
    return KotheSet(FiniteSupportFamily(), index_set or IndexSet.naturals(), "C^N")


def power_series(R: float, alpha, index_set: Optional[IndexSet] = None, grid: str = "linear") -> KotheSet:
    if isinstance(alpha, str):
        alpha = AlphaRule(alpha)
    return KotheSet(PowerSeriesFamily(float(R), alpha, grid), index_set or IndexSet.naturals())


def matrix_example(index_set: Optional[IndexSet] = None) -> KotheSet:
    return KotheSet(MatrixExampleFamily(), index_set or IndexSet.pairs(), "matrix_example")


def explicit(weights: Iterable[Weight], index_set: Optional[IndexSet] = None) -> KotheSet:
    return KotheSet(ExplicitFamily(tuple(weights)), index_set or IndexSet.naturals())


def product_set(P: KotheSet, Q: KotheSet) -> KotheSet:
    _same_index_set(P, Q)
    return KotheSet(DerivedProduct(P, Q), P.index_set)


def power_set(P: KotheSet, a: float) -> KotheSet:
    if not a > 0:
        raise KotheError("power exponent must be positive")
    return KotheSet(DerivedPower(P, float(a)), P.index_set)


def bar_set(P: KotheSet) -> KotheSet:
    return KotheSet(DerivedBar(P), P.index_set)


def _same_index_set(P: KotheSet, Q: KotheSet):
    if P.index_set != Q.index_set:
        raise IndexSetMismatch(f"index sets differ: {P.index_set} vs {Q.index_set}")


def sources(P: KotheSet, opts: AnalysisOptions = DEFAULT_OPTIONS) -> range:
    c = P.count
    return range(1, (c if c is not None else opts.generators) + 1)


def targets(Q: KotheSet, k: int, opts: AnalysisOptions = DEFAULT_OPTIONS) -> range:
    hi = k + opts.search_depth
    if Q.count is not None:
        hi = min(hi, Q.count)
    return range(min(k, hi), hi + 1)


@lru_cache(maxsize=256)
def check_directed(P: KotheSet, upto: int) -> None:
    """Raise NonDirectedError unless p^(k) <= p^(k+1) on the truncation for k < upto."""
    if P.count is not None:
        upto = min(upto, P.count)
    prev = P.log_weights(1)
    for k in range(2, upto + 1):
        cur = P.log_weights(k)
        bad = np.flatnonzero(prev > cur)
        if bad.size:
            i = P.index_set.index_at(int(bad[0]))
            raise NonDirectedError(f"{P.describe()}: weight {k - 1} exceeds weight {k} at index {i}")
        prev = cur


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("KOTHEDIM_THREADS", "1")))
    except ValueError:
        return 1


def parallel_map(fn: Callable, items: Iterable) -> list:
    """Map preserving input order; parallel when KOTHEDIM_THREADS > 1."""
    items = list(items)
    n = _threads()
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# certificates


def log_ratio(lp: np.ndarray, lq: np.ndarray) -> np.ndarray:
    """``ln p - ln q`` with ``0/anything -> bottom`` and ``positive/0 -> +inf``."""
    with np.errstate(invalid="ignore"):
        d = lp - lq
    d[lp == BOTTOM] = BOTTOM
    return d


def _masked_max(a: np.ndarray, mask: Optional[np.ndarray] = None) -> float:
    if mask is not None:
        a = a[mask]
    return float(np.max(a)) if a.size else BOTTOM


def scan_margin(lp: np.ndarray, lq: np.ndarray, log_c: float) -> float:
    """``min_i (ln C + ln q_i - ln p_i)`` over indices with ``p_i > 0``."""
    live = lp != BOTTOM
    if not live.any():
        return math.inf
    with np.errstate(invalid="ignore"):
        return float(np.min(log_c + lq[live] - lp[live]))


def _settle(lp, lq, log_c: float) -> float:
    """Absorb floating rounding in ``ln C`` so the recorded constant passes its own
    scan; anything beyond rounding size is an error."""
    margin = scan_margin(lp, lq, log_c)
    if margin >= 0:
        return log_c
    live = lp[lp != BOTTOM]
    scale = max(1.0, float(np.max(np.abs(live))) if live.size else 1.0, abs(log_c))
    if -margin > ROUNDING_SLACK * scale or math.isnan(margin):
        raise CertificateError(f"constant ln C = {log_c!r} misses by {-margin!r}")
    c = log_c
    for _ in range(64):
        c = math.nextafter(c - margin, math.inf)
        margin = scan_margin(lp, lq, c)
        if margin >= 0:
            return c
    raise CertificateError("could not settle rounding in certificate constant")


@dataclass(frozen=True)
class CertificateEntry:
    k: int
    m: int
    log_c: float
    verified_up_to: int
    margin: float

    def to_json(self) -> dict:
        return {"k": self.k, "m": self.m, "lnC": self.log_c,
                "verified_up_to": self.verified_up_to, "margin": self.margin}


@dataclass(frozen=True)
class DominationCertificate:
    """Witnesses ``p^(k) <= C q^(m)`` for each listed source k."""

    source: KotheSet
    target: KotheSet
    entries: tuple
    notes: tuple = ()

    def entry(self, k: int) -> CertificateEntry:
        for e in self.entries:
            if e.k == k:
                return e
        raise KeyError(k)

    def covering(self, k: int) -> CertificateEntry:
        """Entry with the smallest source >= k; valid for k by directedness."""
        best = None
        for e in self.entries:
            if e.k >= k and (best is None or e.k < best.k):
                best = e
        if best is None:
            raise MissingPrerequisite(f"certificate has no entry covering source {k}")
        return best

    def verify(self) -> list:
        """Exhaustive re-scan; returns a list of violation messages."""
        out = []
        for e in self.entries:
            margin = scan_margin(self.source.log_weights(e.k), self.target.log_weights(e.m), e.log_c)
            if not margin >= 0:
                out.append(f"k={e.k} m={e.m}: margin {margin!r} < 0")
        return out

    @property
    def sound(self) -> bool:
        return not self.verify()

    def to_json(self) -> dict:
        return {"source": self.source.describe(), "target": self.target.describe(),
                "entries": [e.to_json() for e in self.entries], "notes": dict(self.notes)}


def make_entry(P: KotheSet, Q: KotheSet, k: int, m: int, log_c: float) -> CertificateEntry:
    lp, lq = P.log_weights(k), Q.log_weights(m)
    log_c = _settle(lp, lq, float(log_c))
    return CertificateEntry(k, m, log_c, P.index_set.truncation, scan_margin(lp, lq, log_c))


def compose(first: DominationCertificate, second: DominationCertificate) -> DominationCertificate:
    """``P ≺ Q`` and ``Q ≺ R`` give ``P ≺ R`` with ``ln C = ln C1 + ln C2``."""
    P, R = first.source, second.target
    entries = []
    for e1 in first.entries:
        e2 = second.covering(e1.m)
        entries.append(make_entry(P, R, e1.k, e2.m, e1.log_c + e2.log_c))
    return DominationCertificate(P, R, tuple(entries))


# ---------------------------------------------------------------------------
# verdicts


class Status(str, Enum):
    HOLDS = "Holds"
    FAILS = "Fails"
    UNKNOWN = "Unknown"


class Soundness(str, Enum):
    EXACT = "Exact"
    NUMERIC = "Numeric"


@dataclass(frozen=True)
class Verdict:
    status: Status
    soundness: Soundness = Soundness.NUMERIC
    reason: str = ""
    criterion: Optional[str] = None
    certificates: tuple = ()  # (label, DominationCertificate)
    evidence: dict = field(default_factory=dict, hash=False, compare=False)

    @property
    def holds(self) -> bool:
        return self.status is Status.HOLDS

    @property
    def fails(self) -> bool:
        return self.status is Status.FAILS

    @property
    def unknown(self) -> bool:
        return self.status is Status.UNKNOWN

    @property
    def exact(self) -> bool:
        return self.soundness is Soundness.EXACT

    def certificate(self, label: Optional[str] = None) -> Optional[DominationCertificate]:
        for lab, cert in self.certificates:
            if label is None or lab == label:
                return cert
        return None

    def short(self) -> str:
        return "H" if self.holds else "F" if self.fails else "U"

    def to_json(self) -> dict:
        out = {"status": self.status.value, "soundness": self.soundness.value, "reason": self.reason}
        if self.criterion:
            out["criterion"] = self.criterion
        if self.certificates:
            out["certificates"] = {lab: c.to_json() for lab, c in self.certificates}
        if self.evidence:
            out["evidence"] = self.evidence
        return out


def holds(reason: str, exact: bool, **kw) -> Verdict:
    return Verdict(Status.HOLDS, Soundness.EXACT if exact else Soundness.NUMERIC, reason, **kw)


def fails(reason: str, **kw) -> Verdict:
    return Verdict(Status.FAILS, Soundness.EXACT, reason, **kw)


def unknown(reason: str, **kw) -> Verdict:
    return Verdict(Status.UNKNOWN, Soundness.NUMERIC, reason, **kw)


def weakest(*vs: Verdict) -> Soundness:
    return Soundness.EXACT if all(v.exact for v in vs) else Soundness.NUMERIC


# ---------------------------------------------------------------------------
# closed forms for power series families


def power_form(P: KotheSet):
    """``(PowerSeriesFamily, a)`` if P's k-th weight is ``r_k^{a alpha}``, else None."""
    g = P.generator
    if isinstance(g, PowerSeriesFamily):
        return (g, 1.0) if g.alpha.closed_form else None
    if isinstance(g, DerivedPower):
        f = power_form(g.base)
        return (f[0], f[1] * g.exponent) if f else None
    if isinstance(g, DerivedProduct):
        a, b = power_form(g.left), power_form(g.right)
        if a and b and a[0] == b[0]:
            return (a[0], a[1] + b[1])
    return None


def _power_dominance_holds(R: float, a: float, b: float) -> bool:
    # {r^a : r < R} sits inside {r^b : r < R} up to constants iff R^{a/b} <= R (alpha -> inf)
    if R == math.inf or R == 1.0:
        return True
    return a <= b if R > 1 else a >= b


def _closed_target(fam: PowerSeriesFamily, a: float, b: float, k: int) -> int:
    """Smallest m with ``b ln r_m >= a ln r_k`` (grid is increasing in m)."""
    want = a * fam.log_radius(k)
    tol = ROUNDING_SLACK * max(1.0, abs(want))

    def ok(m):
        return b * fam.log_radius(m) >= want - tol

    hi = 1
    while not ok(hi):
        hi *= 2
        if hi > 1 << 40:
            raise KotheError("closed-form target search did not terminate")
    lo = hi // 2 + 1 if hi > 1 else 1
    while lo < hi:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid + 1
    return lo


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def _closed_dominates(P, Q, fp, fq, opts) -> Verdict:
    fam, a = fp
    b = fq[1]
    R = fam.R
    crit = "power series: P^[a] < P^[b] iff R^(a/b) <= R"
    if _power_dominance_holds(R, a, b):
        entries = []
        for k in sources(P, opts):
            m = _closed_target(fam, a, b, k)
            lnc = max(0.0, _masked_max(log_ratio(P.log_weights(k), Q.log_weights(m))))
            entries.append(make_entry(P, Q, k, m, lnc))
        cert = DominationCertificate(P, Q, tuple(entries), (("grid", fam.grid_label()),))
        return holds(f"exponent comparison a={a:g} <= b={b:g} admissible for R={_fmt(R)}", True,
                     criterion=crit, certificates=(("domination", cert),))
    # a witness source: r_k^a >= R^b means r_k^a > r^b for every r < R
    k = 1
    while a * fam.log_radius(k) < b * math.log(R):
        k += 1
    r = math.exp(fam.log_radius(k))
    reason = f"r_{k} = {_fmt(r)}: {_fmt(r)}^{a:g} = {_fmt(r ** a)} > {_fmt(R ** b)} = {_fmt(R)}^{b:g}"
    trace = _trace_for_source(P, Q, k, opts)
    return fails(reason, criterion=crit,
                 evidence={"witness_source": k, "sample_points": list(P.index_set.sample_points()),
                           "traces": trace, "grid": fam.grid_label()})


# ---------------------------------------------------------------------------
# numeric domination search


def _masks(index_set: IndexSet) -> list:
    return [index_set.prefix_mask(n) for n in index_set.sample_points()]


def _trace_for_source(P, Q, k, opts) -> dict:
    lp = P.log_weights(k)
    masks = _masks(P.index_set)
    out = {}
    for m in targets(Q, k, opts):
        d = log_ratio(lp, Q.log_weights(m))
        out[str(m)] = [_masked_max(d, mk) for mk in masks]
    return out


def _search_source(P, Q, k, opts):
    lp = P.log_weights(k)
    half = P.index_set.prefix_mask(max(1, P.index_set.truncation // 2))
    for m in targets(Q, k, opts):
        d = log_ratio(lp, Q.log_weights(m))
        full, part = _masked_max(d), _masked_max(d, half)
        if full == math.inf:
            continue
        if full == part or abs(full - part) <= STABILITY_TOL:
            return make_entry(P, Q, k, m, full if full > BOTTOM else 0.0)
    return None


def numeric_certificate(P: KotheSet, Q: KotheSet, opts: AnalysisOptions = DEFAULT_OPTIONS):
    """(certificate or None, traces of the sources that found no stable target)."""
    ks = list(sources(P, opts))
    found = parallel_map(lambda k: _search_source(P, Q, k, opts), ks)
    missing = [k for k, e in zip(ks, found) if e is None]
    if missing:
        return None, {str(k): _trace_for_source(P, Q, k, opts) for k in missing}
    return DominationCertificate(P, Q, tuple(found)), {}


def _check_pair(P, Q, opts):
    _same_index_set(P, Q)
    span = max(sources(P, opts)) + opts.search_depth
    check_directed(P, span)
    check_directed(Q, span)


def dominates(P: KotheSet, Q: KotheSet, opts: AnalysisOptions = DEFAULT_OPTIONS) -> Verdict:
    """Decide ``P ≺ Q``: for each p in P some q in Q and C > 0 with p <= C q."""
    _check_pair(P, Q, opts)
    fp, fq = power_form(P), power_form(Q)
    if fp and fq and fp[0] == fq[0]:
        return _closed_dominates(P, Q, fp, fq, opts)
    cert, traces = numeric_certificate(P, Q, opts)
    if cert is not None:
        return holds("stable constants on the truncation", False, certificates=(("domination", cert),))
    return unknown("no stable constant within the search window",
                   evidence={"sample_points": list(P.index_set.sample_points()), "traces": traces})


def equivalent(P: KotheSet, Q: KotheSet, opts: AnalysisOptions = DEFAULT_OPTIONS) -> Verdict:
    fwd, back = dominates(P, Q, opts), dominates(Q, P, opts)
    certs = tuple(("forward", c) for _, c in fwd.certificates) + \
        tuple(("backward", c) for _, c in back.certificates)
    if fwd.fails or back.fails:
        bad = fwd if fwd.fails else back
        return fails(bad.reason, criterion=bad.criterion, evidence=bad.evidence)
    if fwd.holds and back.holds:
        return Verdict(Status.HOLDS, weakest(fwd, back), "mutual domination", certificates=certs)
    return unknown("one direction undetermined", certificates=certs,
                   evidence={"forward": fwd.to_json(), "backward": back.to_json()})


# ---------------------------------------------------------------------------
# certificate transformers


def pbar_check(p, q, C: float):
    """Elementwise ``bar p <= C q bar q`` on plain arrays: (bar p, C q bar q, ok)."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    pbar = np.minimum(p, 1.0)
    rhs = C * q * np.minimum(q, 1.0)
    return pbar, rhs, bool(np.all(pbar <= rhs))


def _require_sound(cert: DominationCertificate, what: str):
    bad = cert.verify()
    if bad:
        raise CertificateError(f"unsound {what} certificate: {bad[0]}")


def _upgrade_square(P: KotheSet, cert: DominationCertificate) -> list:
    """From ``p <= C q^2`` to a single target with ``p <= C q^2``, ``p <= q``, ``C >= 1``."""
    out = []
    for e in cert.entries:
        out.append((e.k, max(e.m, e.k), max(e.log_c, 0.0)))
    return out


def _exact_entry(P, Q, k, m, log_c) -> CertificateEntry:
    try:
        return make_entry(P, Q, k, m, log_c)
    except CertificateError as exc:
        raise CertificateError(f"transformed certificate failed verification at k={k}: {exc}") from exc


def pbar_certificate(P: KotheSet, cert: DominationCertificate) -> DominationCertificate:
    """``P ≺ P^[2]`` to ``bar P ≺ P · bar P`` with the same targets and constants.

    If q < 1 at i then p < 1 and bar p = p <= C q^2 = C q bar q; otherwise
    bar p <= 1 <= C q = C q bar q.
    """
    _require_sound(cert, "algebra")
    src, tgt = bar_set(P), product_set(P, bar_set(P))
    entries = tuple(_exact_entry(src, tgt, k, m, c) for k, m, c in _upgrade_square(P, cert))
    return DominationCertificate(src, tgt, entries)


def pbar_product_equiv(P: KotheSet, algebra_cert: Optional[DominationCertificate] = None,
                       square_cert: Optional[DominationCertificate] = None,
                       opts: AnalysisOptions = DEFAULT_OPTIONS):
    """Certificates for ``bar P · P ≺ P`` and ``P ≺ bar P · P``.

    Forward: bar p · p <= p^2 <= C q from ``P^[2] ≺ P``.  Reverse: with
    ``p <= C q^2``, ``p <= q``, ``C >= 1``, one gets p <= C bar q q in both
    cases q_i < 1 and q_i >= 1.
    """
    P2 = power_set(P, 2)
    if algebra_cert is None:
        v = dominates(P, P2, opts)
        if not v.holds:
            raise MissingPrerequisite("P ≺ P^[2] is not established")
        algebra_cert = v.certificate()
    if square_cert is None:
        v = dominates(P2, P, opts)
        if not v.holds:
            raise MissingPrerequisite("P^[2] ≺ P is not established (condition (B))")
        square_cert = v.certificate()
    _require_sound(algebra_cert, "algebra")
    _require_sound(square_cert, "square")
    barp = product_set(bar_set(P), P)
    fwd = []
    for k in sources(P, opts):
        e = square_cert.covering(k)
        fwd.append(_exact_entry(barp, P, k, e.m, e.log_c))
    rev = tuple(_exact_entry(P, barp, k, m, c) for k, m, c in _upgrade_square(P, algebra_cert))
    return DominationCertificate(barp, P, tuple(fwd)), DominationCertificate(P, barp, rev)


def reduction_steps(k: float, l: float) -> tuple:
    """``(r, n)`` with r = l/k and n minimal such that r^n >= 2."""
    if not 0 < k < l:
        raise KotheError("power reduction needs 0 < k < l")
    r = l / k
    n = 1
    while r ** n < 2:
        n += 1
    return r, n


def power_reduction(P: KotheSet, k: float, l: float, cert: DominationCertificate,
                    opts: AnalysisOptions = DEFAULT_OPTIONS) -> DominationCertificate:
    """``P^[l] ≺ P^[k]`` (0 < k < l) to ``P^[2] ≺ P``.

    The input gives ``p^r <= C^{1/k} q`` with r = l/k.  Chaining it n times
    (r^n >= 2) bounds ``p^{r^n}`` by a later weight; the case split p_i >= 1
    versus p_i < 1 with C >= 1 and p <= q then gives p^2 <= C q.  Sources the
    chain reaches beyond the input certificate are certified on demand.
    """
    r, n = reduction_steps(k, l)
    _require_sound(cert, "input")
    if cert.source.index_set != P.index_set:
        raise IndexSetMismatch("certificate lives on a different index set")
    P2 = power_set(P, 2)
    extra = {}

    def step(s):
        try:
            return cert.covering(s)
        except MissingPrerequisite:
            # the chain left the certified sources: certify the input claim there too
            if s not in extra:
                v = dominates(cert.source, cert.target, replace(opts, generators=s))
                if not v.holds:
                    raise
                extra[s] = v.certificate().entry(s)
            return extra[s]

    entries = []
    for e0 in cert.entries:
        s, total = e0.k, 0.0
        for _ in range(n):
            e = step(s)
            total = total * r + e.log_c / k
            s = e.m
        entries.append(_exact_entry(P2, P, e0.k, max(s, e0.k), max(total, 0.0)))
    notes = (("r", r), ("n", n)) + ((("extended_sources", sorted(extra)),) if extra else ())
    return DominationCertificate(P2, P, tuple(entries), notes)
