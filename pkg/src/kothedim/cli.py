"""Command line: analyze, check, bar, eval.

Exit codes: 0 ok; 2 bad input; 3 Unknown under --strict; 4 not a Köthe
algebra; 5 internal consistency failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np

from . import bar_complex, conditions
from .classify import classify_dimensions, render_table
from .conditions import NotAnAlgebra
from .kothe_ops import (
    AnalysisOptions,
    CertificateError,
    KotheError,
    KotheSet,
    NonDirectedError,
    Status,
    check_directed,
    explicit,
    finite_support,
    l1,
    matrix_example,
    power_series,
)
from .weights import (
    BOTTOM,
    NATURALS,
    AlphaRule,
    Element,
    IndexRangeError,
    IndexSet,
    LogTable,
    WeightError,
    log_seminorm_l1,
    log_seminorm_sup,
    seminorm_l1,
    seminorm_sup,
)

EXIT_OK, EXIT_INPUT, EXIT_UNKNOWN, EXIT_NOT_ALGEBRA, EXIT_INTERNAL = 0, 2, 3, 4, 5

FAMILIES = ("l1", "product", "power_series", "matrix_example", "explicit")
TOP_KEYS = {"family", "parameters", "R", "alpha", "grid", "weights", "truncation", "options", "name"}
PARAM_KEYS = {"R", "alpha", "grid", "weights"}
OPTION_KEYS = {"strict", "search_depth", "generators"}
FAMILY_PARAMS = {
    "l1": set(), "product": set(), "matrix_example": set(),
    "power_series": {"R", "alpha", "grid"}, "explicit": {"weights"},
}


class SpecError(ValueError):
    """Validation failure; the message starts with the offending field path."""

    def __init__(self, path: str, msg: str):
        super().__init__(f"{path}: {msg}")
        self.path = path


@dataclass(frozen=True)
class SpecFile:
    family: KotheSet
    options: AnalysisOptions
    source: dict


def _number(v, path: str) -> float:
    if isinstance(v, str) and v.lower() in ("inf", "infinity", "∞"):
        return math.inf
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SpecError(path, f"expected a number or \"inf\", got {v!r}")
    return float(v)


def _alpha(v, path: str) -> AlphaRule:
    if isinstance(v, str):
        if v not in ("log_n", "linear", "sqrt_log_n"):
            raise SpecError(path, f"unknown alpha rule {v!r}")
        return AlphaRule(v)
    if isinstance(v, list):
        try:
            return AlphaRule("explicit", tuple(_number(x, f"{path}[{i}]") for i, x in enumerate(v)))
        except ValueError as exc:
            if isinstance(exc, SpecError):
                raise
            raise SpecError(path, str(exc)) from None
    raise SpecError(path, "alpha must be a rule name or an array")


def _table(v, path: str) -> LogTable:
    if isinstance(v, dict):
        if set(v) != {"log"} or not isinstance(v["log"], list):
            raise SpecError(path, 'expected {"log": [...]}')
        vals = [_number(x, f"{path}.log[{i}]") if x != "-inf" else BOTTOM for i, x in enumerate(v["log"])]
    elif isinstance(v, list):
        vals = []
        for i, x in enumerate(v):
            x = _number(x, f"{path}[{i}]")
            if x < 0 or not math.isfinite(x):
                raise SpecError(f"{path}[{i}]", "weights must be finite and >= 0")
            vals.append(math.log(x) if x > 0 else BOTTOM)
    else:
        raise SpecError(path, "weight table must be an array or {\"log\": [...]}")
    if not vals:
        raise SpecError(path, "empty weight table")
    try:
        return LogTable(tuple(vals))
    except WeightError as exc:
        raise SpecError(path, str(exc)) from None


def _options(raw, path: str = "options") -> AnalysisOptions:
    if raw is None:
        return AnalysisOptions()
    if not isinstance(raw, dict):
        raise SpecError(path, "options must be an object")
    extra = set(raw) - OPTION_KEYS
    if extra:
        raise SpecError(f"{path}.{sorted(extra)[0]}", "unknown option")
    kw = {}
    if "strict" in raw:
        if not isinstance(raw["strict"], bool):
            raise SpecError(f"{path}.strict", "expected true or false")
        kw["strict"] = raw["strict"]
    for key in ("search_depth", "generators"):
        if key in raw:
            v = raw[key]
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise SpecError(f"{path}.{key}", "expected a positive integer")
            kw[key] = v
    return AnalysisOptions(**kw)


def parse_spec(text: str, truncation: Optional[int] = None) -> SpecFile:
    """Validate a spec document and build its Köthe set."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError("$", f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise SpecError("$", "spec must be a JSON object")
    extra = set(doc) - TOP_KEYS
    if extra:
        raise SpecError(sorted(extra)[0], "unknown field")
    fam = doc.get("family")
    if fam not in FAMILIES:
        raise SpecError("family", f"expected one of {', '.join(FAMILIES)}, got {fam!r}")
    params = doc.get("parameters", {})
    if not isinstance(params, dict):
        raise SpecError("parameters", "must be an object")
    bad = set(params) - PARAM_KEYS
    if bad:
        raise SpecError(f"parameters.{sorted(bad)[0]}", "unknown parameter")
    merged = dict(params)
    for key in PARAM_KEYS & set(doc):
        if key in params:
            raise SpecError(key, "given both at top level and in parameters")
        merged[key] = doc[key]
    for key in merged:
        if key not in FAMILY_PARAMS[fam]:
            raise SpecError(key, f"not a parameter of family {fam!r}")
    opts = _options(doc.get("options"))
    trunc = doc.get("truncation", 0)
    if isinstance(trunc, bool) or not isinstance(trunc, int) or trunc < 0:
        raise SpecError("truncation", "expected a positive integer")
    if truncation is not None:
        trunc = truncation

    if fam == "explicit":
        raw = merged.get("weights")
        if not isinstance(raw, list) or not raw:
            raise SpecError("weights", "explicit family needs a nonempty array of weight tables")
        tables = [_table(w, f"weights[{i}]") for i, w in enumerate(raw)]
        shortest = min(len(t.log_values) for t in tables)
        trunc = trunc or shortest
        if trunc > shortest:
            raise SpecError("truncation", f"weight tables have only {shortest} entries")
        P = explicit(tables, IndexSet.naturals(trunc))
        _validate_explicit(P)
    elif fam == "power_series":
        if "R" not in merged or "alpha" not in merged:
            raise SpecError("parameters", "power_series needs R and alpha")
        R = _number(merged["R"], "R")
        if not R >= 1:
            raise SpecError("R", "R ≥ 1 required (power series spaces are Köthe algebras only for R ≥ 1)")
        alpha = _alpha(merged["alpha"], "alpha")
        grid = merged.get("grid", "linear")
        if grid not in ("linear", "exp"):
            raise SpecError("grid", "expected \"linear\" or \"exp\"")
        if grid == "exp" and R != math.inf:
            raise SpecError("grid", "the exp grid needs R = inf")
        if alpha.kind == "explicit":
            trunc = trunc or len(alpha.values)
            if trunc > len(alpha.values):
                raise SpecError("alpha", f"explicit alpha has only {len(alpha.values)} terms")
        P = power_series(R, alpha, IndexSet.naturals(trunc), grid)
    elif fam == "matrix_example":
        P = matrix_example(IndexSet.pairs(trunc))
    elif fam == "l1":
        P = l1(IndexSet.naturals(trunc))
    else:
        P = finite_support(IndexSet.naturals(trunc))
    if doc.get("name"):
        P = replace(P, name=str(doc["name"]))
    return SpecFile(P, opts, doc)


def _validate_explicit(P: KotheSet):
    top = P.log_weights(P.count)
    dead = np.flatnonzero(top == BOTTOM)
    if dead.size:
        raise SpecError(f"weights[{P.count - 1}]",
                        f"no weight is positive at index {int(dead[0]) + 1}")
    try:
        check_directed(P, P.count)
    except NonDirectedError as exc:
        raise SpecError("weights", f"weights must increase pointwise: {exc}") from None


def load_spec(path: str, truncation: Optional[int] = None) -> SpecFile:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecError(path, f"cannot read spec: {exc.strerror}") from None
    return parse_spec(text, truncation)


# ---------------------------------------------------------------------------
# output


def jsonable(obj):
    """Plain JSON types with non-finite floats as strings."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_json"):
        return jsonable(obj.to_json())
    if hasattr(obj, "value"):
        return obj.value
    return str(obj)


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def _emit(payload, out: Optional[str]):
    text = dumps(payload)
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# commands


def _opts(spec: SpecFile, args) -> AnalysisOptions:
    if getattr(args, "strict", False):
        return replace(spec.options, strict=True)
    return spec.options


def cmd_analyze(args) -> int:
    spec = load_spec(args.spec, args.trunc)
    opts = _opts(spec, args)
    report = classify_dimensions(spec.family, opts)
    _verify_certificates(report.verdicts.values())
    _emit(report, args.out)
    if not args.quiet:
        sys.stderr.write(render_table(report) + "\n")
    if opts.strict and not report.determined:
        return EXIT_UNKNOWN
    return EXIT_OK


CHECKS = {
    "U": conditions.check_unital,
    "N": conditions.check_nuclear,
    "M": lambda P, opts: conditions.check_matrix(P, opts=opts),
    "B": conditions.check_biprojective,
    "algebra": conditions.check_algebra,
}


def cmd_check(args) -> int:
    spec = load_spec(args.spec, args.trunc)
    opts = _opts(spec, args)
    verdict = CHECKS[args.condition](spec.family, opts)
    _verify_certificates([verdict])
    if opts.strict and verdict.holds and not verdict.exact:
        verdict = replace(verdict, status=Status.UNKNOWN, reason="strict: numeric only; " + verdict.reason)
    _emit({"family": spec.family.describe(), "condition": args.condition, "verdict": verdict}, args.out)
    if not args.quiet:
        sys.stderr.write(f"{args.condition}: {verdict.status.value} ({verdict.soundness.value}) {verdict.reason}\n")
    return EXIT_UNKNOWN if opts.strict and verdict.unknown else EXIT_OK


def cmd_bar(args) -> int:
    spec = load_spec(args.spec)
    opts = _opts(spec, args)
    if args.arity < 3:
        raise SpecError("--arity", "must be >= 3")
    if args.trunc < 1:
        raise SpecError("--trunc", "must be >= 1")
    dd = bar_complex.verify_d_squared(args.trunc, args.arity)
    inv = {a: bar_complex.diagonal_invariance(args.trunc, a) for a in range(2, args.arity + 1)}
    diag = {}
    for n in range(1, args.arity):
        got = [bar_complex.diagonal_image(i, n) for i in range(1, args.trunc + 1)]
        want = [bar_complex.Chain.diagonal(i, n) if n % 2 else bar_complex.Chain.zero(n)
                for i in range(1, args.trunc + 1)]
        diag[n] = all(g == w for g, w in zip(got, want))
    openness = bar_complex.openness_ratio(spec.family, args.degree, opts)
    if args.csv:
        Path(args.csv).write_text(openness.csv(), encoding="utf-8")
    payload = {
        "family": spec.family.describe(),
        "d_squared": dd, "diagonal_invariance": inv, "diagonal_images": diag,
        "openness": openness,
    }
    _emit(payload, args.out)
    if not args.quiet:
        sys.stderr.write(f"d∘d = 0 on {dd.checked} tuples: {'ok' if dd.ok else 'VIOLATED'}; "
                         f"openness n={args.degree}: {openness.status}\n")
    if not dd.ok or not all(r.ok for r in inv.values()) or not all(diag.values()):
        return EXIT_INTERNAL
    if openness.certificate is not None and openness.certificate.verify():
        return EXIT_INTERNAL
    if opts.strict and openness.status == bar_complex.UNKNOWN:
        return EXIT_UNKNOWN
    return EXIT_OK


def _read_element(path: str, index_set: IndexSet) -> Element:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise SpecError(path, f"cannot read element: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise SpecError(path, f"invalid JSON: {exc}") from None
    if not isinstance(raw, list):
        raise SpecError(path, "element must be an array of [index, re, im]")
    coeffs = []
    for n, row in enumerate(raw):
        if not (isinstance(row, list) and len(row) == 3):
            raise SpecError(f"{path}[{n}]", "expected [index, re, im]")
        idx, re, im = row
        if index_set.kind == NATURALS:
            if isinstance(idx, bool) or not isinstance(idx, int):
                raise SpecError(f"{path}[{n}][0]", "index must be an integer")
        else:
            if not (isinstance(idx, list) and len(idx) == 2 and all(isinstance(i, int) for i in idx)):
                raise SpecError(f"{path}[{n}][0]", "index must be a pair [i, j]")
            idx = tuple(idx)
        try:
            index_set.position(idx)
        except IndexRangeError as exc:
            raise SpecError(f"{path}[{n}][0]", str(exc)) from None
        coeffs.append((idx, complex(_number(re, f"{path}[{n}][1]"), _number(im, f"{path}[{n}][2]"))))
    return Element(tuple(coeffs))


def cmd_eval(args) -> int:
    spec = load_spec(args.spec, args.trunc)
    P = spec.family
    if args.weight < 1 or (P.count is not None and args.weight > P.count):
        raise SpecError("--weight", f"no weight with index {args.weight}")
    x = _read_element(args.element, P.index_set)
    w = P.weight(args.weight)
    payload = {
        "family": P.describe(), "weight": args.weight,
        "l1": seminorm_l1(x, w, P.index_set), "sup": seminorm_sup(x, w, P.index_set),
        "log_l1": log_seminorm_l1(x, w, P.index_set), "log_sup": log_seminorm_sup(x, w, P.index_set),
    }
    _emit(payload, args.out)
    return EXIT_OK


def _verify_certificates(verdicts):
    for v in verdicts:
        for label, cert in v.certificates:
            bad = cert.verify()
            if bad:
                raise CertificateError(f"certificate {label} failed re-verification: {bad[0]}")


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kothedim", description="Homological dimensions of Köthe algebras.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, trunc=True):
        sp.add_argument("spec", help="JSON spec file")
        if trunc:
            sp.add_argument("--trunc", type=int, default=None, help="override the truncation N")
        sp.add_argument("--strict", action="store_true", help="treat numeric-only verdicts as Unknown")
        sp.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
        sp.add_argument("--quiet", action="store_true", help="no human-readable summary on stderr")

    a = sub.add_parser("analyze", help="all conditions and the four dimensions")
    common(a)
    a.set_defaults(func=cmd_analyze)

    c = sub.add_parser("check", help="a single condition")
    c.add_argument("condition", choices=sorted(CHECKS))
    common(c)
    c.set_defaults(func=cmd_check)

    b = sub.add_parser("bar", help="bar complex identities and the openness diagnostic")
    common(b, trunc=False)
    b.add_argument("--arity", type=int, required=True)
    b.add_argument("--trunc", type=int, required=True, help="entry bound for the combinatorial scans")
    b.add_argument("--degree", type=int, default=1, help="odd degree n for the openness ratio")
    b.add_argument("--csv", default=None, help="write openness traces as CSV")
    b.set_defaults(func=cmd_bar)

    e = sub.add_parser("eval", help="seminorms of an element")
    e.add_argument("spec")
    e.add_argument("--weight", type=int, required=True)
    e.add_argument("--element", required=True)
    e.add_argument("--trunc", type=int, default=None)
    e.add_argument("--out", default=None)
    e.set_defaults(func=cmd_eval)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except NotAnAlgebra as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_NOT_ALGEBRA
    except (SpecError, KotheError, WeightError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except CertificateError as exc:
        sys.stderr.write(f"internal consistency failure: {exc}\n")
        return EXIT_INTERNAL
    except Exception as exc:  # the exit-code contract is total
        sys.stderr.write(f"internal error: {type(exc).__name__}: {exc}\n")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
