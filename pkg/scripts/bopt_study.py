#!/usr/bin/env python3
"""How many feedback bits per user should each of K = T_fb/B users spend?

Compares the empirical rate-maximizing B (Monte Carlo, greedy zero-forcing)
with the closed-form fixed-point and Lambert-W solvers across SNR and budget.

Example:
    python3 scripts/bopt_study.py --trials 3000 --tfb 300 --nt 4
"""

import argparse
from dataclasses import replace

from fbsim import analytic
from fbsim.montecarlo import ExperimentConfig, feasible_b_values, find_bopt_empirical


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--nt", type=int, default=4)
    ap.add_argument("--tfb", type=int, default=300)
    ap.add_argument("--trials", type=int, default=3000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--snr-db", type=float, nargs="*", default=[0.0, 5.0, 10.0, 15.0])
    args = ap.parse_args()

    print(f"{'SNR (dB)':>9} {'B_emp':>6} {'rate':>8} {'gap(SE)':>8} "
          f"{'B_fixed':>8} {'B_lambert':>10}")
    for snr_db in args.snr_db:
        cfg = ExperimentConfig(scheme="zf", nt=args.nt, snr_db=snr_db, tfb=args.tfb,
                               trials=args.trials, seed=args.seed)
        grid = tuple(b for b in feasible_b_values(cfg) if 4 <= b <= 40)
        cfg = replace(cfg, b_values=grid)
        b_emp, est, gap = find_bopt_empirical(cfg, common_streams=True)
        fp = analytic.zf_bopt_fixed_point(cfg.snr, args.nt, args.tfb)
        lw = analytic.zf_bopt_lambert(cfg.snr, args.nt, args.tfb)
        print(f"{snr_db:9.1f} {b_emp:6d} {est.mean:8.3f} {gap:8.1f} "
              f"{fp.b:8.2f} {lw:10.2f}")


if __name__ == "__main__":
    main()
