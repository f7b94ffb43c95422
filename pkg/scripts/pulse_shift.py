"""Baseline and tilted eigenstate distributions for one ROI (the displaced pulse).

Writes c_A, r, the binomial weights and the tilted weights for each lambda
as CSV, plus a one-line summary of E[c_A] and the defined-state mean r.

    python3 scripts/pulse_shift.py --N 100 --p 0.5 --lambdas 0.25 0.5 1 --out pulse.csv
"""
import argparse

from opiatesim.analysis import defined_mean_r
from opiatesim.outputs import write_csv
from opiatesim.superposition import baseline_distribution, tilt


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--N", type=int, default=100)
    ap.add_argument("--p", type=float, default=0.5)
    ap.add_argument("--lambdas", type=float, nargs="+", default=[0.25, 0.5, 1.0])
    ap.add_argument("--out", default="pulse.csv")
    args = ap.parse_args()

    base = baseline_distribution(args.N, args.p)
    tilted = [tilt(base, lam) for lam in args.lambdas]
    rows = [
        (c, base.r(c) if c < base.N else None, float(base.weights[c]),
         *(float(d.weights[c]) for d in tilted))
        for c in range(base.N + 1)
    ]
    columns = ("c_A", "r", "baseline", *(f"lambda_{lam:g}" for lam in args.lambdas))
    write_csv(args.out, columns, rows)
    for lam, d in zip([0.0, *args.lambdas], [base, *tilted]):
        mean_r, excluded = defined_mean_r(d)
        print(f"lambda {lam:g}: E[c_A] = {d.mean():.4f}, E[r | c_A < N] = {mean_r:.5f}, "
              f"excluded mass {excluded:.2e}")


if __name__ == "__main__":
    main()
