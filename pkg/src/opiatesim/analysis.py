"""Paired rank tests of the dose-class inequality, effect sizes and power surfaces.

Pain-responsive ROIs are tested one-sided (threshold r greater than
subpharmacological r); other ROIs two-sided for equality. The test is a
Wilcoxon signed-rank test applied to the paired differences of
``(r - 1) / (r + 1)``, a monotone map of r that is antisymmetric under
swapping the two ligands. Zero differences are dropped and counted. P-values
are exact (full permutation distribution, midranks for ties) up to
``EXACT_CUTOFF`` non-zero pairs and use the tie-corrected normal
approximation with continuity correction above it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.special import ndtr
from scipy.stats import rankdata

from .errors import AllExcluded, InsufficientData
from .protocol import (
    ExperimentResult,
    ProtocolPlan,
    RoiBatch,
    eigenstate_distribution,
    simulate_batch,
)
from .scanner import DetectorModel, ratio_array
from .seeding import POWER, roi_streams
from .superposition import BiasModel, GateInputs, OccupancyDistribution, apply_bias
from .binding import DoseClass, Role, equilibrium_occupancy

EXACT_CUTOFF = 50
MIN_REPLICATES = 2


@dataclass(frozen=True)
class RankTest:
    statistic: float  # W+, sum of ranks of positive differences
    p_value: float
    n_used: int
    n_ties: int
    method: str


def _signed_rank_null(doubled_ranks: np.ndarray) -> np.ndarray:
    """Counts of each value of 2 * W+ over all 2**n sign assignments."""
    counts = np.zeros(int(doubled_ranks.sum()) + 1)
    counts[0] = 1.0
    for r in doubled_ranks:
        shifted = np.zeros_like(counts)
        shifted[r:] = counts[: len(counts) - r]
        counts += shifted
    return counts


def signed_rank_test(diffs, alternative: str = "greater", exact_cutoff: int = EXACT_CUTOFF) -> RankTest:
    """Wilcoxon signed-rank test of paired differences against zero.

    ``alternative`` is ``"greater"`` (differences tend to be positive) or
    ``"two-sided"``. With no non-zero differences the p-value is 1.
    """
    if alternative not in ("greater", "two-sided"):
        raise ValueError(f"unknown alternative {alternative!r}")
    d = np.asarray(diffs, dtype=float)
    nonzero = d[d != 0]
    n_ties = len(d) - len(nonzero)
    n = len(nonzero)
    if n == 0:
        return RankTest(0.0, 1.0, 0, n_ties, "exact")
    ranks = rankdata(np.abs(nonzero))
    w_plus = float(ranks[nonzero > 0].sum())
    if n <= exact_cutoff:
        doubled = np.rint(2 * ranks).astype(np.int64)
        counts = _signed_rank_null(doubled)
        total = counts.sum()
        w2 = int(round(2 * w_plus))
        upper = counts[w2:].sum() / total
        lower = counts[: w2 + 1].sum() / total
        method = "exact"
    else:
        mean = n * (n + 1) / 4.0
        _, tie_sizes = np.unique(ranks, return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - (tie_sizes ** 3 - tie_sizes).sum() / 48.0
        sd = math.sqrt(var)
        upper = float(ndtr(-(w_plus - mean - 0.5) / sd))
        lower = float(ndtr((w_plus - mean + 0.5) / sd))
        method = "normal"
    if alternative == "greater":
        p = upper
    else:
        p = min(1.0, 2.0 * min(upper, lower))
    return RankTest(w_plus, float(min(1.0, p)), n, n_ties, method)


def contrast(r: np.ndarray) -> np.ndarray:
    """(r - 1) / (r + 1): increasing in r, and maps 1/r to its negative."""
    return (r - 1.0) / (r + 1.0)


@dataclass(frozen=True)
class RoiTest:
    roi: str
    pain_responsive: bool
    alternative: str
    statistic: float
    p_value: float
    effect_size: float  # median of r_threshold - r_subpharm over defined pairs
    n_replicates: int
    n_used: int
    n_ties: int
    n_excluded: int
    method: str
    reject: bool


@dataclass(frozen=True)
class HypothesisReport:
    alpha: float
    alpha_per_test: float
    bonferroni: bool
    rois: tuple[RoiTest, ...]

    def roi(self, roi_id: str) -> RoiTest:
        for t in self.rois:
            if t.roi == roi_id:
                return t
        raise KeyError(roi_id)

    def rejection_rate(self, pain_responsive: bool) -> float | None:
        sel = [t.reject for t in self.rois if t.pain_responsive == pain_responsive]
        return sum(sel) / len(sel) if sel else None


def paired_roi_test(
    roi: str,
    pain_responsive: bool,
    c_a_thr, c_aa_thr, c_a_sub, c_aa_sub,
    alpha: float,
) -> RoiTest:
    """Test one ROI from its per-replicate aggregates; undefined ratios are excluded."""
    r_thr, ok_thr = ratio_array(c_a_thr, c_aa_thr)
    r_sub, ok_sub = ratio_array(c_a_sub, c_aa_sub)
    ok = ok_thr & ok_sub
    n_rep = len(ok)
    if not ok.any():
        raise AllExcluded(f"ROI {roi!r}: every replicate has an undefined ratio")
    alternative = "greater" if pain_responsive else "two-sided"
    res = signed_rank_test(contrast(r_thr[ok]) - contrast(r_sub[ok]), alternative)
    return RoiTest(
        roi=roi,
        pain_responsive=pain_responsive,
        alternative=alternative,
        statistic=res.statistic,
        p_value=res.p_value,
        effect_size=float(np.median(r_thr[ok] - r_sub[ok])),
        n_replicates=n_rep,
        n_used=res.n_used,
        n_ties=res.n_ties,
        n_excluded=int(n_rep - ok.sum()),
        method=res.method,
        reject=res.p_value <= alpha,
    )


def test_hypothesis(
    results: Sequence[ExperimentResult], alpha: float = 0.05, bonferroni: bool = False
) -> HypothesisReport:
    """Per-ROI paired test of r(threshold) against r(subpharmacological).

    With ``bonferroni`` each ROI is tested at ``alpha / number_of_rois``.
    """
    if len(results) < MIN_REPLICATES:
        raise InsufficientData(f"need at least {MIN_REPLICATES} replicates, got {len(results)}")
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    rois = list(results[0].rois)
    level = alpha / len(rois) if bonferroni else alpha
    tests = []
    for roi in rois:
        outs = [res.rois[roi] for res in results]
        tests.append(paired_roi_test(
            roi, outs[0].pain_responsive,
            np.array([o.C_A_threshold for o in outs]),
            np.array([o.C_AA_threshold for o in outs]),
            np.array([o.C_A_subpharm for o in outs]),
            np.array([o.C_AA_subpharm for o in outs]),
            level,
        ))
    return HypothesisReport(alpha, level, bonferroni, tuple(tests))


test_hypothesis.__test__ = False  # not a pytest test


def test_batch(batch: dict[str, RoiBatch], alpha: float, bonferroni: bool = False) -> dict[str, RoiTest | None]:
    """Array-level counterpart of test_hypothesis; None marks an all-excluded ROI."""
    level = alpha / len(batch) if bonferroni else alpha
    out = {}
    for roi, b in batch.items():
        try:
            out[roi] = paired_roi_test(
                roi, b.pain_responsive,
                b.c_a_threshold, b.c_aa_threshold, b.c_a_subpharm, b.c_aa_subpharm, level,
            )
        except AllExcluded:
            out[roi] = None
    return out


test_batch.__test__ = False


@dataclass(frozen=True)
class Scenario:
    """Everything needed to simulate experiments: a plan plus measurement setup."""

    plan: ProtocolPlan
    detector: DetectorModel
    seed: int = 0
    pain_floor: float = 0.0
    between_subject_cv: float = 0.0
    kind: str = "pet"

    def bias(self, lam: float) -> BiasModel:
        return BiasModel(lam, self.pain_floor)


@dataclass(frozen=True)
class PowerCell:
    lam: float
    size: int
    background: float | None
    power_pain: float | None
    se_pain: float | None
    trials_pain: int
    power_nonpain: float | None
    se_nonpain: float | None
    trials_nonpain: int
    inconclusive: int = 0
    error: str | None = None


@dataclass(frozen=True)
class PowerSurface:
    alpha: float
    replications: int
    cells: tuple[PowerCell, ...] = field(default_factory=tuple)

    def cell(self, lam: float, size: int, background: float | None = None) -> PowerCell:
        for c in self.cells:
            if c.lam == lam and c.size == size and c.background == background:
                return c
        raise KeyError((lam, size, background))


def _rate(hits: int, trials: int):
    if trials == 0:
        return None, None
    p = hits / trials
    return p, math.sqrt(p * (1 - p) / trials)


def power_curve(
    scenario: Scenario,
    lambda_grid: Sequence[float],
    size_grid: Sequence[int],
    alpha: float = 0.05,
    replications: int = 200,
    background_grid: Sequence[float | None] = (None,),
    bonferroni: bool = False,
) -> PowerSurface:
    """Rejection rates of the paired test over (lambda, size, background).

    ``size`` is the number of subjects per simulated experiment; each cell
    runs ``replications`` experiments. A background value replaces the
    detector's nonspecific background (None keeps the configured one).
    Power is pooled over ROIs of each class and reported with its binomial
    standard error. Errors inside a cell are recorded on that cell.
    """
    if not lambda_grid or not size_grid or not background_grid:
        raise ValueError("grids must be nonempty")
    if replications < 100:
        raise ValueError("replications must be >= 100")
    roi_ids = [r.id for r in scenario.plan.subject.regions]
    cells = []
    for i_lam, lam in enumerate(lambda_grid):
        for i_size, size in enumerate(size_grid):
            for i_bg, bg in enumerate(background_grid):
                hits = {True: 0, False: 0}
                trials = {True: 0, False: 0}
                inconclusive = 0
                error = None
                try:
                    detector = scenario.detector
                    if bg is not None:
                        detector = replace(detector, nonspecific_background=float(bg))
                    for rep in range(replications):
                        streams = roi_streams(
                            scenario.seed, roi_ids, POWER, i_lam, i_size, i_bg, rep
                        )
                        batch = simulate_batch(
                            scenario.plan, scenario.bias(lam), detector, streams,
                            int(size), scenario.between_subject_cv,
                        )
                        for roi, t in test_batch(batch, alpha, bonferroni).items():
                            pain = batch[roi].pain_responsive
                            trials[pain] += 1
                            if t is None:
                                inconclusive += 1
                            elif t.reject:
                                hits[pain] += 1
                except Exception as exc:  # recorded per cell, surface continues
                    error = f"{type(exc).__name__}: {exc}"
                pp, sp = _rate(hits[True], trials[True])
                pn, sn = _rate(hits[False], trials[False])
                cells.append(PowerCell(
                    float(lam), int(size), None if bg is None else float(bg),
                    pp, sp, trials[True], pn, sn, trials[False], inconclusive, error,
                ))
    return PowerSurface(alpha, replications, tuple(cells))


@dataclass(frozen=True)
class EffectSize:
    roi: str
    N: int
    p: float
    delta_r: float | None
    mean_r_baseline: float | None
    mean_r_tilted: float | None
    excluded_mass_baseline: float
    excluded_mass_tilted: float


def defined_mean_r(dist: OccupancyDistribution) -> tuple[float | None, float]:
    """E[r | c_A < N] by direct summation, and the excluded mass at c_A = N."""
    excluded = float(dist.weights[-1])
    w = dist.weights[:-1]
    mass = w.sum()
    if mass == 0:
        return None, excluded
    c = np.arange(dist.N)
    r = c / (dist.N - c)
    return float(np.sum(w * r) / mass), excluded


def effect_size(scenario: Scenario, lam: float) -> dict[str, EffectSize]:
    """Expected shift of r in each gated (pain-responsive) ROI at threshold dose."""
    plan = scenario.plan
    subject = plan.subject
    bias = scenario.bias(lam)
    out = {}
    for region in subject.regions:
        if not region.pain_responsive:
            continue
        bound = equilibrium_occupancy(
            region, subject.agonist, subject.antagonist,
            plan.injection(DoseClass.THRESHOLD, Role.AGONIST), subject.model,
        )
        N = bound.total_molecules
        p = bound.agonist_fraction
        base = eigenstate_distribution(N, p)
        if base is None:
            continue
        gate = GateInputs(DoseClass.THRESHOLD, region.pain_responsive, region.pain_intensity)
        tilted = apply_bias(base, bias, gate)
        m0, x0 = defined_mean_r(base)
        m1, x1 = defined_mean_r(tilted)
        delta = None if m0 is None or m1 is None else m1 - m0
        out[region.id] = EffectSize(region.id, N, p, delta, m0, m1, x0, x1)
    return out
