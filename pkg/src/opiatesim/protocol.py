"""Four-measurement protocols (PET and autoradiography).

Measurements, in order:

1. threshold dose, hot agonist      -> C_A  (threshold)
2. threshold dose, hot antagonist   -> C_AA (threshold)
3. subpharmacological, hot agonist  -> C_A  (subpharm)
4. subpharmacological, hot antagonist -> C_AA (subpharm)

Every measurement prepares and collapses a fresh endogenous state. All four
injections in a dose class share total dose and ratio, so their net weights
match. For autoradiography each measurement is taken in a different animal,
so the subject is re-drawn (receptor counts and secretion jittered) before
every measurement.

Draw layout of the substream belonging to one ROI, per measurement:
``[jitter (n, populations + 1) lognormals, if jittered]``, ``n`` uniforms for
the collapse, then ``(n, pixel_count)`` Poisson counts.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np

from .binding import (
    BindingModel,
    DoseClass,
    InjectionProtocol,
    LigandSpec,
    RegionSpec,
    Role,
    calibrate_threshold_dose,
    choose_balancing_ratio,
    equilibrium_occupancy,
)
from .scanner import DetectorModel, compute_ratio, expected_pixel_mean
from .errors import UndefinedRatio
from .superposition import (
    BiasModel,
    GateInputs,
    OccupancyDistribution,
    apply_bias,
    baseline_distribution,
    collapse_many,
)

MEASUREMENTS = (
    (DoseClass.THRESHOLD, Role.AGONIST),
    (DoseClass.THRESHOLD, Role.ANTAGONIST),
    (DoseClass.SUBPHARMACOLOGICAL, Role.AGONIST),
    (DoseClass.SUBPHARMACOLOGICAL, Role.ANTAGONIST),
)


@dataclass(frozen=True)
class Subject:
    regions: tuple[RegionSpec, ...]
    agonist: LigandSpec
    antagonist: LigandSpec
    model: BindingModel = BindingModel()

    def __post_init__(self):
        object.__setattr__(self, "regions", tuple(self.regions))
        ids = [r.id for r in self.regions]
        if not ids:
            raise ValueError("subject needs at least one region")
        if len(set(ids)) != len(ids):
            raise ValueError("region ids must be unique")

    def region(self, roi: str) -> RegionSpec:
        for r in self.regions:
            if r.id == roi:
                return r
        raise KeyError(roi)


@dataclass(frozen=True)
class ProtocolPlan:
    """A subject with its injection ratio and both doses fixed."""

    subject: Subject
    ratio_R: float
    threshold_dose: float
    subpharm_dose: float
    scan_start: float = 30.0
    scan_duration: float = 45.0

    def __post_init__(self):
        if not 0 < self.subpharm_dose < self.threshold_dose:
            raise ValueError("subpharmacological dose must lie below the threshold dose")

    def dose(self, dose_class: DoseClass) -> float:
        if DoseClass(dose_class) is DoseClass.THRESHOLD:
            return self.threshold_dose
        return self.subpharm_dose

    def injection(self, dose_class: DoseClass, hot: Role) -> InjectionProtocol:
        return InjectionProtocol(
            total_dose=self.dose(dose_class),
            ratio_R=self.ratio_R,
            hot_ligand=hot,
            dose_class=dose_class,
            scan_start=self.scan_start,
            scan_duration=self.scan_duration,
        )


def plan_protocol(
    subject: Subject,
    analgesia_threshold: float | None = None,
    ratio_R: float | None = None,
    threshold_dose: float | None = None,
    subpharm_fraction: float = 0.1,
    scan_start: float = 30.0,
    scan_duration: float = 45.0,
) -> ProtocolPlan:
    """Fix R (balanced when not given) and the doses (calibrated when not given)."""
    if ratio_R is None:
        ratio_R = choose_balancing_ratio(
            subject.agonist, subject.antagonist, subject.regions, subject.model
        )
    if threshold_dose is None:
        if analgesia_threshold is None:
            raise ValueError("need analgesia_threshold to calibrate the threshold dose")
        threshold_dose = calibrate_threshold_dose(
            subject.regions, subject.agonist, subject.antagonist,
            ratio_R, analgesia_threshold, subject.model,
        )
    if not 0 < subpharm_fraction < 1:
        raise ValueError("subpharm_fraction must lie in (0, 1)")
    plan = ProtocolPlan(
        subject, ratio_R, threshold_dose, subpharm_fraction * threshold_dose,
        scan_start, scan_duration,
    )
    for dose_class in DoseClass:
        for region in subject.regions:
            equilibrium_occupancy(
                region, subject.agonist, subject.antagonist,
                plan.injection(dose_class, Role.AGONIST), subject.model,
            )
    return plan


def eigenstate_distribution(N: int, p: float) -> OccupancyDistribution | None:
    """Baseline distribution, tolerating p in {0, 1}; None when nothing is bound."""
    if N < 1:
        return None
    if 0 < p < 1:
        return baseline_distribution(N, p)
    w = np.zeros(N + 1)
    w[N if p >= 1 else 0] = 1.0
    return OccupancyDistribution(N, w)


def _occupancy_state(region, subject, injection):
    bound = equilibrium_occupancy(
        region, subject.agonist, subject.antagonist, injection, subject.model
    )
    n = bound.total_molecules
    p = bound.agonist_fraction if bound.exogenous > 0 else 0.0
    return n, p


def _jittered(region: RegionSpec, factors: np.ndarray) -> RegionSpec:
    counts = {
        pop: (max(1, int(round(s * f))) if s >= 1 else 0)
        for (pop, s), f in zip(region.receptor_count.items(), factors[:-1])
    }
    return replace(region, receptor_count=counts, secretion_gain=region.secretion_gain * factors[-1])


@dataclass(frozen=True, eq=False)
class RoiBatch:
    """Aggregated counts/pixel for one ROI over ``n`` simulated subjects."""

    roi: str
    pain_responsive: bool
    c_a_threshold: np.ndarray
    c_aa_threshold: np.ndarray
    c_a_subpharm: np.ndarray
    c_aa_subpharm: np.ndarray

    def __len__(self):
        return len(self.c_a_threshold)


def simulate_roi(
    plan: ProtocolPlan,
    region: RegionSpec,
    bias: BiasModel,
    detector: DetectorModel,
    rng: np.random.Generator,
    n: int,
    between_subject_cv: float = 0.0,
) -> RoiBatch:
    subject = plan.subject
    sigma = math.sqrt(math.log1p(between_subject_cv ** 2))
    n_pop = len(region.receptor_count)
    aggregates = []
    for dose_class, hot in MEASUREMENTS:
        injection = plan.injection(dose_class, hot)
        if sigma > 0:
            factors = rng.lognormal(-0.5 * sigma ** 2, sigma, size=(n, n_pop + 1))
            states = np.array(
                [_occupancy_state(_jittered(region, f), subject, injection) for f in factors]
            )
            N = states[:, 0].astype(np.int64)
            p = states[:, 1]
        else:
            n0, p0 = _occupancy_state(region, subject, injection)
            N = np.full(n, n0, dtype=np.int64)
            p = np.full(n, p0)
        u = rng.random(n)
        c_a = np.zeros(n, dtype=np.int64)
        gate = GateInputs(dose_class, region.pain_responsive, region.pain_intensity)
        keys = np.stack([N.astype(float), p], axis=1)
        uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
        for g, (n_g, p_g) in enumerate(uniq):
            dist = eigenstate_distribution(int(n_g), float(p_g))
            if dist is None:
                continue
            members = np.flatnonzero(inverse.ravel() == g)
            c_a[members] = collapse_many(apply_bias(dist, bias, gate), u[members])
        hot_count = c_a if hot is Role.AGONIST else N - c_a
        mean = expected_pixel_mean(
            hot_count, region.pixel_count, detector, plan.scan_start, plan.scan_duration
        )
        pixels = rng.poisson(mean[:, None], size=(n, region.pixel_count))
        aggregates.append(pixels.mean(axis=1))
    return RoiBatch(region.id, region.pain_responsive, *aggregates)


def simulate_batch(
    plan: ProtocolPlan,
    bias: BiasModel,
    detector: DetectorModel,
    streams: Mapping[str, np.random.Generator],
    n: int,
    between_subject_cv: float = 0.0,
) -> dict[str, RoiBatch]:
    """Run the four measurements for ``n`` independent subjects, ROI by ROI.

    ``between_subject_cv > 0`` selects the autoradiography design (one animal
    per measurement); each ROI only touches ``streams[roi]``.
    """
    if between_subject_cv < 0:
        raise ValueError("between_subject_cv must be >= 0")
    return {
        region.id: simulate_roi(
            plan, region, bias, detector, streams[region.id], n, between_subject_cv
        )
        for region in plan.subject.regions
    }


def _ratio_or_none(c_a, c_aa):
    try:
        return compute_ratio(c_a, c_aa)
    except UndefinedRatio:
        return None


@dataclass(frozen=True)
class RoiOutcome:
    pain_responsive: bool
    C_A_threshold: float
    C_AA_threshold: float
    C_A_subpharm: float
    C_AA_subpharm: float

    @property
    def C_threshold(self) -> float:
        return self.C_A_threshold + self.C_AA_threshold

    @property
    def C_subpharm(self) -> float:
        return self.C_A_subpharm + self.C_AA_subpharm

    @property
    def r_threshold(self) -> float | None:
        """None when undefined (C_AA = 0)."""
        return _ratio_or_none(self.C_A_threshold, self.C_AA_threshold)

    @property
    def r_subpharm(self) -> float | None:
        return _ratio_or_none(self.C_A_subpharm, self.C_AA_subpharm)


@dataclass(frozen=True)
class ExperimentResult:
    replicate: int
    rois: Mapping[str, RoiOutcome]
    threshold_dose: float
    subpharm_dose: float
    ratio_R: float
    config_digest: str = ""
    protocol: str = "pet"
    lam: float = 0.0


def results_from_batch(
    batch: Mapping[str, RoiBatch],
    plan: ProtocolPlan,
    first_replicate: int = 0,
    config_digest: str = "",
    protocol: str = "pet",
    lam: float = 0.0,
) -> list[ExperimentResult]:
    n = len(next(iter(batch.values())))
    out = []
    for i in range(n):
        rois = {
            roi: RoiOutcome(
                b.pain_responsive,
                float(b.c_a_threshold[i]), float(b.c_aa_threshold[i]),
                float(b.c_a_subpharm[i]), float(b.c_aa_subpharm[i]),
            )
            for roi, b in batch.items()
        }
        out.append(ExperimentResult(
            first_replicate + i, rois, plan.threshold_dose, plan.subpharm_dose,
            plan.ratio_R, config_digest, protocol, lam,
        ))
    return out


def run_four_scan_protocol(
    plan: ProtocolPlan,
    bias: BiasModel,
    detector: DetectorModel,
    streams: Mapping[str, np.random.Generator],
    replicate: int = 0,
    config_digest: str = "",
) -> ExperimentResult:
    """One PET subject: four scans, each with a fresh collapse."""
    batch = simulate_batch(plan, bias, detector, streams, 1)
    return results_from_batch(batch, plan, replicate, config_digest, "pet", bias.lam)[0]


def run_autoradiography_protocol(
    plan: ProtocolPlan,
    between_subject_cv: float,
    bias: BiasModel,
    detector: DetectorModel,
    streams: Mapping[str, np.random.Generator],
    replicate: int = 0,
    config_digest: str = "",
) -> ExperimentResult:
    """Four animals, one terminal measurement each, from a jittered template."""
    batch = simulate_batch(plan, bias, detector, streams, 1, between_subject_cv)
    return results_from_batch(
        batch, plan, replicate, config_digest, "autoradiography", bias.lam
    )[0]

