#!/usr/bin/env python3
"""Regenerate every preset figure/table (CSV + SVG) in one go.

Example:
    python3 scripts/run_all_presets.py --trials 2000 --out results/
"""

import argparse
import time
from pathlib import Path

from fbsim.cli import PRESETS, run_preset


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--trials", type=int, default=2000)
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--only", nargs="*", default=None,
                    help="subset of preset names (default: all)")
    args = ap.parse_args()

    names = args.only or sorted(PRESETS)
    for name in names:
        t0 = time.monotonic()
        csv_path, svg_path = run_preset(name, args.seed, args.trials, args.out)
        print(f"{name:24s} {time.monotonic() - t0:7.1f}s  {csv_path}  {svg_path}")


if __name__ == "__main__":
    main()
