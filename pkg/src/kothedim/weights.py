"""Weights on countable index sets and the seminorms built from them.

A weight is a rule ``index -> nonnegative real``.  Values are carried as
natural logarithms; ``ln 0`` is the bottom element ``-inf`` which absorbs
under products and is dominated by everything.  Plain values are only formed
when an l1-type sum has to be accumulated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Mapping, Union

import numpy as np

BOTTOM = -math.inf

NATURALS = "naturals"
PAIRS = "pairs"

DEFAULT_TRUNCATION = {NATURALS: 4096, PAIRS: 64}

Index = Union[int, tuple]


class IndexRangeError(IndexError):
    pass


class ShapeError(ValueError):
    pass


class WeightError(ValueError):
    pass


def _log(v: float) -> float:
    if v < 0 or not math.isfinite(v):
        raise WeightError(f"weight values must be finite and nonnegative, got {v!r}")
    return math.log(v) if v > 0 else BOTTOM


@dataclass(frozen=True)
class IndexSet:
    """``{1..N}`` or ``{1..N} x {1..N}``; ``truncation`` is the per-side bound N."""

    kind: str = NATURALS
    truncation: int = 0

    def __post_init__(self):
        if self.kind not in (NATURALS, PAIRS):
            raise ValueError(f"unknown index-set kind {self.kind!r}")
        if self.truncation == 0:
            object.__setattr__(self, "truncation", DEFAULT_TRUNCATION[self.kind])
        if int(self.truncation) != self.truncation or self.truncation < 1:
            raise ValueError("truncation must be a positive integer")

    @classmethod
    def naturals(cls, n: int = 0) -> "IndexSet":
        return cls(NATURALS, n)

    @classmethod
    def pairs(cls, n: int = 0) -> "IndexSet":
        return cls(PAIRS, n)

    @property
    def arity(self) -> int:
        return 1 if self.kind == NATURALS else 2

    @property
    def size(self) -> int:
        return self.truncation ** self.arity

    def restrict(self, n: int) -> "IndexSet":
        return IndexSet(self.kind, n)

    def coordinates(self) -> tuple:
        """1-based coordinate arrays in enumeration order (row-major for pairs)."""
        return _coordinates(self.kind, self.truncation)

    def enumerate(self) -> list:
        coords = self.coordinates()
        if self.kind == NATURALS:
            return [int(i) for i in coords[0]]
        return [(int(i), int(j)) for i, j in zip(*coords)]

    def position(self, index: Index) -> int:
        n = self.truncation
        if self.kind == NATURALS:
            if isinstance(index, tuple) or not 1 <= index <= n:
                raise IndexRangeError(f"index {index!r} outside 1..{n}")
            return int(index) - 1
        if not (isinstance(index, tuple) and len(index) == 2):
            raise IndexRangeError(f"index {index!r} is not a pair")
        i, j = index
        if not (1 <= i <= n and 1 <= j <= n):
            raise IndexRangeError(f"index {index!r} outside 1..{n} squared")
        return (int(i) - 1) * n + (int(j) - 1)

    def index_at(self, pos: int) -> Index:
        if self.kind == NATURALS:
            return pos + 1
        return (pos // self.truncation + 1, pos % self.truncation + 1)

    def prefix_mask(self, n: int) -> np.ndarray:
        """Entries whose coordinates are all ``<= n``."""
        mask = np.ones(self.size, dtype=bool)
        for c in self.coordinates():
            mask &= c <= n
        return mask

    def sample_points(self) -> tuple:
        n = self.truncation
        return tuple(max(1, n // d) for d in (8, 4, 2)) + (n,)


@lru_cache(maxsize=None)
def _coordinates(kind: str, n: int) -> tuple:
    if kind == NATURALS:
        i = np.arange(1, n + 1, dtype=np.float64)
        i.setflags(write=False)
        return (i,)
    i, j = np.meshgrid(np.arange(1, n + 1, dtype=np.float64),
                       np.arange(1, n + 1, dtype=np.float64), indexing="ij")
    i, j = i.ravel(), j.ravel()
    i.setflags(write=False)
    j.setflags(write=False)
    return (i, j)


@dataclass(frozen=True)
class AlphaRule:
    """Exponent sequence of a power series space."""

    kind: str  # "log_n" | "linear" | "sqrt_log_n" | "explicit"
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("log_n", "linear", "sqrt_log_n", "explicit"):
            raise ValueError(f"unknown alpha rule {self.kind!r}")
        if self.kind == "explicit":
            vals = tuple(float(v) for v in self.values)
            if not vals or any(not math.isfinite(v) or v < 0 for v in vals):
                raise ValueError("explicit alpha needs a nonempty list of finite values >= 0")
            if any(b < a for a, b in zip(vals, vals[1:])):
                raise ValueError("explicit alpha must be nondecreasing")
            object.__setattr__(self, "values", vals)

    def __call__(self, n: np.ndarray) -> np.ndarray:
        if self.kind == "log_n":
            return np.log(n)
        if self.kind == "linear":
            return np.asarray(n, dtype=np.float64)
        if self.kind == "sqrt_log_n":
            return np.sqrt(np.log(n))
        top = int(np.max(n)) if np.size(n) else 0
        if top > len(self.values):
            raise IndexRangeError(f"explicit alpha has {len(self.values)} terms, index {top} requested")
        return np.asarray(self.values, dtype=np.float64)[np.asarray(n, dtype=np.int64) - 1]

    @property
    def closed_form(self) -> bool:
        return self.kind != "explicit"

    def label(self) -> str:
        return self.kind if self.kind != "explicit" else f"explicit[{len(self.values)}]"


class Weight:
    """Base class for weight rules; subclasses are frozen dataclasses."""

    def _log_eval(self, index_set: IndexSet) -> np.ndarray:
        raise NotImplementedError

    def label(self) -> str:
        return type(self).__name__


@dataclass(frozen=True)
class Constant(Weight):
    c: float

    def __post_init__(self):
        _log(self.c)

    def _log_eval(self, index_set):
        return np.full(index_set.size, _log(self.c))

    def label(self):
        return f"{self.c:g}"


@dataclass(frozen=True)
class PowerLaw(Weight):
    """``p_i = i^k`` on the naturals."""

    k: float

    def _log_eval(self, index_set):
        if index_set.kind != NATURALS:
            raise ShapeError("PowerLaw is defined on the naturals only")
        (i,) = index_set.coordinates()
        return self.k * np.log(i)

    def label(self):
        return f"n^{self.k:g}"


@dataclass(frozen=True)
class Geometric(Weight):
    """``p_n = r^{alpha_n}``, stored by ``log_r = ln r``."""

    log_r: float
    alpha: AlphaRule

    @classmethod
    def from_ratio(cls, r: float, alpha: AlphaRule) -> "Geometric":
        if not r > 0:
            raise WeightError("Geometric needs r > 0")
        return cls(math.log(r), alpha)

    def _log_eval(self, index_set):
        if index_set.kind != NATURALS:
            raise ShapeError("Geometric weights are defined on the naturals only")
        (n,) = index_set.coordinates()
        return self.alpha(n) * self.log_r

    def label(self):
        return f"exp({self.log_r:.6g})^alpha"


@dataclass(frozen=True)
class FiniteSupport(Weight):
    """Sparse table of ``(index, value)``; zero elsewhere."""

    entries: tuple

    def __post_init__(self):
        norm = []
        for idx, v in self.entries:
            idx = tuple(idx) if isinstance(idx, (list, tuple)) else int(idx)
            norm.append((idx, float(v)))
            _log(float(v))
        object.__setattr__(self, "entries", tuple(norm))

    def _log_eval(self, index_set):
        out = np.full(index_set.size, BOTTOM)
        for idx, v in self.entries:
            try:
                pos = index_set.position(idx)
            except IndexRangeError:
                continue
            out[pos] = _log(v)
        return out

    def label(self):
        return f"finite[{len(self.entries)}]"


@dataclass(frozen=True)
class LogTable(Weight):
    """Dense table of log-values at ``1..len`` (bottom beyond); for explicit data
    whose plain values would overflow."""

    log_values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.log_values)
        if any(math.isnan(v) or v == math.inf for v in vals):
            raise WeightError("log-values must be < +inf")
        object.__setattr__(self, "log_values", vals)

    def _log_eval(self, index_set):
        if index_set.kind != NATURALS:
            raise ShapeError("LogTable is defined on the naturals only")
        out = np.full(index_set.size, BOTTOM)
        n = min(len(self.log_values), index_set.size)
        out[:n] = self.log_values[:n]
        return out

    def label(self):
        return f"table[{len(self.log_values)}]"


@dataclass(frozen=True)
class MatrixExample(Weight):
    """``2^{(kj)^i} (i+j)^k`` for ``i <= k`` and ``(i+j)^k`` for ``i > k`` on pairs."""

    k: int

    def _log_eval(self, index_set):
        if index_set.kind != PAIRS:
            raise ShapeError("MatrixExample is defined on pairs only")
        i, j = index_set.coordinates()
        out = self.k * np.log(i + j)
        low = i <= self.k
        out[low] += np.power(self.k * j[low], i[low]) * math.log(2.0)
        return out

    def label(self):
        return f"matrix[{self.k}]"


@dataclass(frozen=True)
class Product(Weight):
    left: Weight
    right: Weight

    def _log_eval(self, index_set):
        return log_values(self.left, index_set) + log_values(self.right, index_set)

    def label(self):
        return f"({self.left.label()})*({self.right.label()})"


@dataclass(frozen=True)
class Power(Weight):
    base: Weight
    a: float

    def __post_init__(self):
        if not (self.a > 0 and math.isfinite(self.a)):
            raise WeightError("Power needs a positive finite exponent")

    def _log_eval(self, index_set):
        return self.a * log_values(self.base, index_set)

    def label(self):
        return f"({self.base.label()})^{self.a:g}"


@dataclass(frozen=True)
class BarOf(Weight):
    base: Weight

    def _log_eval(self, index_set):
        return np.minimum(log_values(self.base, index_set), 0.0)

    def label(self):
        return f"bar({self.base.label()})"


@lru_cache(maxsize=4096)
def log_values(w: Weight, index_set: IndexSet) -> np.ndarray:
    """ln of ``w`` over the whole truncation, in enumeration order (read-only)."""
    out = np.array(w._log_eval(index_set), dtype=np.float64)
    if out.shape != (index_set.size,):
        raise ShapeError("weight evaluation returned the wrong shape")
    if np.isnan(out).any() or (out == math.inf).any():
        raise WeightError(f"weight {w.label()} is not finite on the truncation")
    out.setflags(write=False)
    return out


def eval_weight(w: Weight, i: Index, index_set: IndexSet) -> float:
    """ln w_i; raises IndexRangeError outside the truncation."""
    return float(log_values(w, index_set)[index_set.position(i)])


def weight_value(w: Weight, i: Index, index_set: IndexSet) -> float:
    return math.exp(eval_weight(w, i, index_set))


@dataclass(frozen=True)
class Element:
    """Finitely supported vector ``sum_i x_i e_i``; zero coefficients are dropped."""

    coefficients: tuple = ()

    def __post_init__(self):
        items = self.coefficients.items() if isinstance(self.coefficients, Mapping) else self.coefficients
        acc: dict = {}
        for idx, v in items:
            idx = tuple(idx) if isinstance(idx, (list, tuple)) else int(idx)
            acc[idx] = acc.get(idx, 0) + complex(v)
        norm = tuple(sorted((k, v) for k, v in acc.items() if v != 0))
        object.__setattr__(self, "coefficients", norm)

    @classmethod
    def basis(cls, i: Index) -> "Element":
        return cls(((i, 1.0),))

    def as_dict(self) -> dict:
        return dict(self.coefficients)

    @property
    def support(self) -> list:
        return [k for k, _ in self.coefficients]

    def __add__(self, other: "Element") -> "Element":
        return Element(self.coefficients + other.coefficients)

    def scale(self, t: complex) -> "Element":
        return Element(tuple((k, t * v) for k, v in self.coefficients))

    def pointwise(self, other: "Element") -> "Element":
        b = other.as_dict()
        return Element(tuple((k, v * b[k]) for k, v in self.coefficients if k in b))


def _terms(x: Element, w: Weight, index_set: IndexSet) -> tuple:
    if not x.coefficients:
        return np.empty(0), np.empty(0)
    lw = log_values(w, index_set)
    pos = [index_set.position(k) for k, _ in x.coefficients]
    mods = np.array([abs(v) for _, v in x.coefficients])
    return mods, lw[pos]


def seminorm_l1(x: Element, w: Weight, index_set: IndexSet) -> float:
    """``sum_i |x_i| w_i`` with compensated summation; ``inf`` only on overflow."""
    mods, lw = _terms(x, w, index_set)
    with np.errstate(over="ignore"):
        terms = mods * np.exp(lw)
    return math.fsum(terms.tolist())


def seminorm_sup(x: Element, w: Weight, index_set: IndexSet) -> float:
    mods, lw = _terms(x, w, index_set)
    if not mods.size:
        return 0.0
    with np.errstate(over="ignore"):
        return float(np.max(mods * np.exp(lw)))


def log_sum(logs: Iterable[float]) -> float:
    """ln of ``sum exp(logs)`` without overflow, compensated in the shifted domain."""
    arr = np.asarray(list(logs) if not isinstance(logs, np.ndarray) else logs, dtype=np.float64)
    if not arr.size:
        return BOTTOM
    top = float(np.max(arr))
    if top == BOTTOM:
        return BOTTOM
    return top + math.log(math.fsum(np.exp(arr - top).tolist()))


def log_seminorm_l1(x: Element, w: Weight, index_set: IndexSet) -> float:
    mods, lw = _terms(x, w, index_set)
    if not mods.size:
        return BOTTOM
    with np.errstate(divide="ignore"):
        return log_sum(np.log(mods) + lw)


def log_seminorm_sup(x: Element, w: Weight, index_set: IndexSet) -> float:
    mods, lw = _terms(x, w, index_set)
    if not mods.size:
        return BOTTOM
    with np.errstate(divide="ignore"):
        return float(np.max(np.log(mods) + lw))


def tensor_seminorm(c, w: Weight, n: int, index_set: IndexSet) -> float:
    """``sum |c_{i_1..i_n}| w_{i_1}...w_{i_n}`` for a degree-n chain ``c``."""
    if c.arity != n:
        raise ShapeError(f"chain has arity {c.arity}, seminorm requested for degree {n}")
    lw = log_values(w, index_set)
    terms = []
    for idx, coeff in c.terms.items():
        lt = sum(float(lw[index_set.position(i)]) for i in idx)
        with np.errstate(over="ignore"):
            terms.append(abs(complex(coeff)) * float(np.exp(lt)))
    return math.fsum(terms)
