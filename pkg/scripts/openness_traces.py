"""Write openness-ratio traces (CSV: N', k, m, R) for every spec in specs/.

    python scripts/openness_traces.py --out traces/ [--degree 1] [--generators 3]
"""

import argparse
from dataclasses import replace
from pathlib import Path

from kothedim.bar_complex import openness_ratio
from kothedim.cli import load_spec

SPECS = Path(__file__).resolve().parent.parent / "specs"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="traces")
    ap.add_argument("--degree", type=int, default=1)
    ap.add_argument("--generators", type=int, default=None)
    args = ap.parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for path in sorted(SPECS.glob("*.json")):
        spec = load_spec(str(path))
        opts = spec.options if args.generators is None else replace(spec.options, generators=args.generators)
        rep = openness_ratio(spec.family, args.degree, opts)
        target = out / f"{path.stem}_n{args.degree}.csv"
        target.write_text(rep.csv(), encoding="utf-8")
        print(f"{path.stem:<22}{rep.status:<11}(B) {rep.b_status or '-':<8}-> {target}")


if __name__ == "__main__":
    main()
