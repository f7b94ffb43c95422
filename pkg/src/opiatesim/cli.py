"""Command-line interface: ``opiatesim {calibrate,simulate,power,report}``.

Every subcommand takes ``--config``, ``--seed`` and ``--out``. The output
directory defaults to ``$OPIATESIM_OUT``, then ``./out``. Each run writes
``resolved_config.yaml``; together with the seed it determines every other
output byte.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .analysis import effect_size, power_curve, test_hypothesis
from .binding import DoseClass, Role, analgesia, equilibrium_occupancy, max_linear_dose
from .config import (
    build_scenario,
    config_digest,
    load_config,
    serialize_config,
    with_seed,
)
from .errors import InsufficientData, SimulationError
from .outputs import report_to_dict, write_csv, write_power, write_results, write_yaml
from .protocol import eigenstate_distribution, run_autoradiography_protocol, run_four_scan_protocol
from .seeding import PROTOCOL, roi_streams
from .superposition import GateInputs, apply_bias

OUT_ENV = "OPIATESIM_OUT"
log = logging.getLogger("opiatesim")


def _prepare(args):
    cfg = with_seed(load_config(args.config), args.seed)
    out = Path(args.out or os.environ.get(OUT_ENV) or "out")
    out.mkdir(parents=True, exist_ok=True)
    (out / "resolved_config.yaml").write_text(serialize_config(cfg), encoding="utf-8")
    return cfg, out


def cmd_calibrate(args) -> int:
    cfg, out = _prepare(args)
    sc = build_scenario(cfg)
    plan, subject = sc.plan, sc.plan.subject
    achieved = analgesia(
        subject.regions, subject.agonist, subject.antagonist,
        plan.ratio_R, plan.threshold_dose, subject.model,
    )
    cap_dose = max_linear_dose(
        subject.regions, subject.agonist, subject.antagonist, plan.ratio_R, subject.model
    )
    write_csv(
        out / "calibration.csv",
        ("ratio_R", "ratio_source", "analgesia_threshold", "threshold_dose",
         "subpharm_dose", "analgesia_at_threshold_dose", "max_linear_dose", "config_digest"),
        [(plan.ratio_R, "auto" if cfg.protocol.ratio == "auto" else "config",
          cfg.protocol.analgesia_threshold, plan.threshold_dose, plan.subpharm_dose,
          achieved, cap_dose, config_digest(cfg))],
    )
    log.info("threshold dose %.6g at R = %.6g", plan.threshold_dose, plan.ratio_R)
    return 0


def cmd_simulate(args) -> int:
    cfg, out = _prepare(args)
    sc = build_scenario(cfg)
    bias = sc.bias(cfg.bias.lam)
    digest = config_digest(cfg)
    roi_ids = [r.id for r in sc.plan.subject.regions]
    results = []
    for rep in range(cfg.simulation.replicates):
        streams = roi_streams(sc.seed, roi_ids, PROTOCOL, rep)
        if sc.kind == "pet":
            res = run_four_scan_protocol(sc.plan, bias, sc.detector, streams, rep, digest)
        else:
            res = run_autoradiography_protocol(
                sc.plan, sc.between_subject_cv, bias, sc.detector, streams, rep, digest
            )
        results.append(res)
    write_results(out / "results.csv", results)
    try:
        report = report_to_dict(test_hypothesis(
            results, cfg.analysis.alpha, cfg.analysis.bonferroni
        ))
        report["status"] = "ok"
    except InsufficientData as exc:
        report = {"status": "insufficient_data", "detail": str(exc)}
    report["config_digest"] = digest
    write_yaml(out / "hypothesis.yaml", report)
    return 0


def cmd_power(args) -> int:
    cfg, out = _prepare(args)
    sc = build_scenario(cfg)
    a = cfg.analysis
    surface = power_curve(
        sc, a.lambda_grid, a.size_grid, a.alpha, a.replications,
        background_grid=a.background_grid or (None,), bonferroni=a.bonferroni,
    )
    write_power(out / "power.csv", surface)
    failed = [c for c in surface.cells if c.error]
    for c in failed:
        log.warning("cell lambda=%s size=%s failed: %s", c.lam, c.size, c.error)
    return 0


def cmd_report(args) -> int:
    """Dump baseline and tilted eigenstate distributions plus analytic effect sizes."""
    cfg, out = _prepare(args)
    sc = build_scenario(cfg)
    plan, subject = sc.plan, sc.plan.subject
    bias = sc.bias(cfg.bias.lam)
    rows = []
    for region in subject.regions:
        for dose_class in DoseClass:
            bound = equilibrium_occupancy(
                region, subject.agonist, subject.antagonist,
                plan.injection(dose_class, Role.AGONIST), subject.model,
            )
            N, p = bound.total_molecules, bound.agonist_fraction
            base = eigenstate_distribution(N, p)
            if base is None:
                continue
            gate = GateInputs(dose_class, region.pain_responsive, region.pain_intensity)
            tilted = apply_bias(base, bias, gate)
            for c in range(N + 1):
                rows.append((
                    region.id, dose_class.value, N, p, c,
                    base.r(c) if c < N else None,
                    float(base.weights[c]), float(tilted.weights[c]),
                ))
    write_csv(
        out / "distributions.csv",
        ("roi", "dose_class", "N", "p", "c_A", "r", "baseline_weight", "tilted_weight"),
        rows,
    )
    effects = {
        roi: {k: v for k, v in vars(e).items() if k != "roi"}
        for roi, e in effect_size(sc, cfg.bias.lam).items()
    }
    write_yaml(out / "effect_size.yaml", {
        "lambda": cfg.bias.lam, "config_digest": config_digest(cfg), "rois": effects,
    })
    return 0


HELP = {
    "calibrate": "balance the injection ratio and calibrate the threshold dose",
    "simulate": "run the configured protocol and test the dose-class inequality",
    "power": "estimate detection power over the configured grids",
    "report": "dump eigenstate distributions and analytic effect sizes",
}

COMMANDS = {
    "calibrate": cmd_calibrate,
    "simulate": cmd_simulate,
    "power": cmd_power,
    "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="opiatesim",
        description="Simulate opiate-binding PET/autoradiography experiments "
                    "and the power of the threshold-vs-subpharmacological r test.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=HELP[name])
        p.add_argument("--config", required=True, help="experiment config (YAML)")
        p.add_argument("--seed", type=int, default=None, help="master seed (overrides config)")
        p.add_argument("--out", default=None, help=f"output directory (default ${OUT_ENV} or ./out)")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (SimulationError, ValueError, OSError) as exc:
        print(f"opiatesim {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
