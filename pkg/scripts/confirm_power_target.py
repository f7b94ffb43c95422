"""Re-estimate the alternative-detection power with 10x the replications.

Uses the same scenario as the acceptance test (lambda = 2, N = 500 bound
molecules per ROI, zero backgrounds, one pain and one control ROI) but a
different master seed, so the confirmation is independent of the frozen
regression run.

    python3 scripts/confirm_power_target.py --replications 2000
"""
import argparse
import math
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

from opiatesim.analysis import power_curve  # noqa: E402
from opiatesim.config import build_scenario, parse_config  # noqa: E402
from test_acceptance import CRIT5_SIZE, bound_dose, config, region  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--replications", type=int, default=2000)
    ap.add_argument("--sizes", type=int, nargs="+", default=[CRIT5_SIZE])
    ap.add_argument("--seed", type=int, default=1005)
    args = ap.parse_args()
    regions = [region("pain", pain=True, pixels=4), region("ctrl", pixels=4)]
    sc = build_scenario(parse_config(config(regions, bound_dose(500), 100.0,
                                            simulation={"seed": args.seed})))
    t0 = time.perf_counter()
    surf = power_curve(sc, [2.0], args.sizes, alpha=0.05, replications=args.replications)
    print(f"{'size':>8} {'power_pain':>11} {'se':>7} {'power_ctrl':>11} {'se':>7}")
    for c in surf.cells:
        print(f"{c.size:>8} {c.power_pain:>11.4f} {c.se_pain:>7.4f} {c.power_nonpain:>11.4f} {c.se_nonpain:>7.4f}")
    # normal-theory prediction for the rank test on near-Gaussian differences
    f = sc.plan.subpharm_dose / sc.plan.threshold_dose
    delta = 2.0 / math.sqrt(2 * 500 * (1 + 1 / f))
    for size in args.sizes:
        z = delta * math.sqrt(size * 3 / math.pi) - 1.6449
        print(f"predicted power at {size}: {0.5 * math.erfc(-z / math.sqrt(2)):.4f}")
    print(f"{time.perf_counter() - t0:.0f} s")


if __name__ == "__main__":
    main()
