"""Classify every spec in specs/ and print one summary row per family.

    python scripts/run_corpus.py [--trunc N] [--strict]
"""

import argparse
import time
from dataclasses import replace
from pathlib import Path

from kothedim.classify import classify_dimensions, fmt_dim
from kothedim.cli import load_spec

SPECS = Path(__file__).resolve().parent.parent / "specs"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--trunc", type=int, default=None)
    ap.add_argument("--strict", action="store_true")
    args = ap.parse_args()
    print(f"{'spec':<22}{'alg U N B M':<14}{'dg db wdg wdb':<18}{'soundness':<11}seconds")
    for path in sorted(SPECS.glob("*.json")):
        spec = load_spec(str(path), args.trunc)
        opts = replace(spec.options, strict=spec.options.strict or args.strict)
        t = time.perf_counter()
        rep = classify_dimensions(spec.family, opts)
        dt = time.perf_counter() - t
        v = rep.verdicts
        conds = " ".join(v[c].short() for c in ("algebra", "U", "N", "B", "M"))
        dims = " ".join(fmt_dim(d) if d is not None else "?" for d in rep.dims)
        print(f"{path.stem:<22}{conds:<14}{dims:<18}{rep.soundness.value:<11}{dt:.2f}")


if __name__ == "__main__":
    main()
