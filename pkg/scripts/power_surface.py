"""Power over (lambda, subjects per experiment, background) for a config.

Prints the surface as a table and optionally writes it as CSV. Grids given
on the command line override the config's analysis section.

    python3 scripts/power_surface.py configs/pet_example.yaml \
        --lambdas 0 2 8 --sizes 10 40 160 --backgrounds 0 3 --out power.csv
"""
import argparse
import time

from opiatesim.analysis import power_curve
from opiatesim.config import build_scenario, load_config, with_seed
from opiatesim.outputs import write_power


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--lambdas", type=float, nargs="+")
    ap.add_argument("--sizes", type=int, nargs="+")
    ap.add_argument("--backgrounds", type=float, nargs="+")
    ap.add_argument("--replications", type=int)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out")
    args = ap.parse_args()

    cfg = with_seed(load_config(args.config), args.seed)
    a = cfg.analysis
    t0 = time.perf_counter()
    surface = power_curve(
        build_scenario(cfg),
        args.lambdas or a.lambda_grid,
        args.sizes or a.size_grid,
        a.alpha,
        args.replications or a.replications,
        background_grid=args.backgrounds or a.background_grid or (None,),
        bonferroni=a.bonferroni,
    )
    print(f"{'lambda':>7} {'size':>6} {'bg':>6} {'pain':>14} {'non-pain':>14}  note")
    for c in surface.cells:
        bg = "cfg" if c.background is None else f"{c.background:g}"
        pain = "-" if c.power_pain is None else f"{c.power_pain:.3f}+-{c.se_pain:.3f}"
        ctrl = "-" if c.power_nonpain is None else f"{c.power_nonpain:.3f}+-{c.se_nonpain:.3f}"
        note = c.error or (f"{c.inconclusive} inconclusive" if c.inconclusive else "")
        print(f"{c.lam:>7g} {c.size:>6} {bg:>6} {pain:>14} {ctrl:>14}  {note}")
    print(f"alpha {surface.alpha}, {surface.replications} replications, "
          f"{time.perf_counter() - t0:.0f} s")
    if args.out:
        write_power(args.out, surface)


if __name__ == "__main__":
    main()
