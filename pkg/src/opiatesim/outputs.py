"""Writers and readers for result tables (CSV) and reports (YAML).

CSV files have a header row, one record per line, ``.`` decimals and floats
written with ``repr`` so they read back bit-for-bit. Missing values (an
undefined ratio, an empty power cell) are empty fields.
"""
from __future__ import annotations

import csv
import dataclasses
from pathlib import Path
from typing import Iterable, Sequence

import yaml

from .analysis import HypothesisReport, PowerCell, PowerSurface, RoiTest
from .protocol import ExperimentResult, RoiOutcome

RESULT_COLUMNS = (
    "replicate", "protocol", "roi", "pain_responsive", "lambda", "ratio_R",
    "threshold_dose", "subpharm_dose",
    "C_A_threshold", "C_AA_threshold", "C_threshold", "r_threshold", "r_threshold_defined",
    "C_A_subpharm", "C_AA_subpharm", "C_subpharm", "r_subpharm", "r_subpharm_defined",
    "config_digest",
)

POWER_COLUMNS = tuple(f.name for f in dataclasses.fields(PowerCell))


def fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _float(text: str) -> float | None:
    return None if text == "" else float(text)


def _bool(text: str) -> bool:
    if text not in ("true", "false"):
        raise ValueError(f"expected true/false, got {text!r}")
    return text == "true"


def write_csv(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def read_csv(path: Path) -> list[dict[str, str]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def result_rows(results: Sequence[ExperimentResult]):
    for res in results:
        for roi, o in res.rois.items():
            r_thr, r_sub = o.r_threshold, o.r_subpharm
            yield (
                res.replicate, res.protocol, roi, o.pain_responsive, res.lam, res.ratio_R,
                res.threshold_dose, res.subpharm_dose,
                o.C_A_threshold, o.C_AA_threshold, o.C_threshold, r_thr, r_thr is not None,
                o.C_A_subpharm, o.C_AA_subpharm, o.C_subpharm, r_sub, r_sub is not None,
                res.config_digest,
            )


def write_results(path: Path, results: Sequence[ExperimentResult]) -> None:
    write_csv(path, RESULT_COLUMNS, result_rows(results))


def read_results(path: Path) -> list[ExperimentResult]:
    grouped: dict[int, list[dict]] = {}
    for row in read_csv(path):
        grouped.setdefault(int(row["replicate"]), []).append(row)
    out = []
    for rep, rows in grouped.items():
        head = rows[0]
        rois = {
            row["roi"]: RoiOutcome(
                _bool(row["pain_responsive"]),
                float(row["C_A_threshold"]), float(row["C_AA_threshold"]),
                float(row["C_A_subpharm"]), float(row["C_AA_subpharm"]),
            )
            for row in rows
        }
        out.append(ExperimentResult(
            rep, rois, float(head["threshold_dose"]), float(head["subpharm_dose"]),
            float(head["ratio_R"]), head["config_digest"], head["protocol"],
            float(head["lambda"]),
        ))
    return out


def write_power(path: Path, surface: PowerSurface) -> None:
    write_csv(path, POWER_COLUMNS, (dataclasses.astuple(c) for c in surface.cells))


def read_power(path: Path, alpha: float, replications: int) -> PowerSurface:
    cells = []
    for row in read_csv(path):
        cells.append(PowerCell(
            lam=float(row["lam"]),
            size=int(row["size"]),
            background=_float(row["background"]),
            power_pain=_float(row["power_pain"]),
            se_pain=_float(row["se_pain"]),
            trials_pain=int(row["trials_pain"]),
            power_nonpain=_float(row["power_nonpain"]),
            se_nonpain=_float(row["se_nonpain"]),
            trials_nonpain=int(row["trials_nonpain"]),
            inconclusive=int(row["inconclusive"]),
            error=row["error"] or None,
        ))
    return PowerSurface(alpha, replications, tuple(cells))


def report_to_dict(report: HypothesisReport) -> dict:
    return {
        "alpha": report.alpha,
        "alpha_per_test": report.alpha_per_test,
        "bonferroni": report.bonferroni,
        "rejection_rate_pain": report.rejection_rate(True),
        "rejection_rate_nonpain": report.rejection_rate(False),
        "rois": [dataclasses.asdict(t) for t in report.rois],
    }


def report_from_dict(doc: dict) -> HypothesisReport:
    return HypothesisReport(
        doc["alpha"], doc["alpha_per_test"], doc["bonferroni"],
        tuple(RoiTest(**t) for t in doc["rois"]),
    )


def write_yaml(path: Path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(doc, fh, sort_keys=False, allow_unicode=True)


def read_yaml(path: Path):
    with open(path, encoding="utf-8") as fh:
        return yaml.safe_load(fh)
