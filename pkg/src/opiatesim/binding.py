"""Steady-state competitive binding of an agonist/antagonist mixture.

The injected ligands are treated as tracers relative to the receptor pool
(the linear regime): for a population with ``S`` sites, a ligand at free
concentration ``x`` with affinity ``k`` binds

    S * k * x / (1 + k_E * e)

molecules, where ``k_E * e`` is the load from the endogenous agonist held at
secretion level ``e``. Bound counts are therefore exactly proportional to
dose, and the ratio of bound agonist to bound antagonist in a population
depends only on the injected ratio and the two affinities.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

import numpy as np
from scipy.optimize import brentq

from .errors import (
    InvalidDose,
    NoBalancePossible,
    SaturationExceeded,
    ThresholdUnreachable,
    ZeroAffinity,
)


class Role(str, Enum):
    AGONIST = "agonist"
    ANTAGONIST = "antagonist"


class DoseClass(str, Enum):
    THRESHOLD = "threshold"
    SUBPHARMACOLOGICAL = "subpharmacological"


@dataclass(frozen=True)
class LigandSpec:
    name: str
    role: Role
    affinity: Mapping[str, float]
    analgesic_potency: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "role", Role(self.role))
        object.__setattr__(self, "affinity", dict(self.affinity))
        if any(k < 0 or not math.isfinite(k) for k in self.affinity.values()):
            raise ValueError(f"{self.name}: affinities must be finite and >= 0")
        if not any(k > 0 for k in self.affinity.values()):
            raise ValueError(f"{self.name}: at least one affinity must be > 0")
        if self.analgesic_potency < 0:
            raise ValueError(f"{self.name}: analgesic_potency must be >= 0")
        if self.role is Role.ANTAGONIST and self.analgesic_potency != 0:
            raise ValueError(f"{self.name}: antagonists have no analgesic potency")

    def k(self, population: str) -> float:
        return self.affinity.get(population, 0.0)


@dataclass(frozen=True)
class RegionSpec:
    """A region of interest (ROI).

    Endogenous secretion is ``secretion_gain * pain_intensity``: zero without
    pain and nondecreasing in it.
    """

    id: str
    receptor_count: Mapping[str, int]
    pain_responsive: bool = False
    pain_intensity: float = 0.0
    secretion_gain: float = 0.0
    pixel_count: int = 64

    def __post_init__(self):
        object.__setattr__(self, "receptor_count", dict(self.receptor_count))
        if any(int(s) != s or s < 0 for s in self.receptor_count.values()):
            raise ValueError(f"{self.id}: receptor counts must be non-negative integers")
        if not any(s >= 1 for s in self.receptor_count.values()):
            raise ValueError(f"{self.id}: at least one population needs receptors")
        if not 0.0 <= self.pain_intensity <= 1.0:
            raise ValueError(f"{self.id}: pain_intensity must lie in [0, 1]")
        if self.secretion_gain < 0:
            raise ValueError(f"{self.id}: secretion_gain must be >= 0")
        if self.pixel_count < 1:
            raise ValueError(f"{self.id}: pixel_count must be >= 1")

    @property
    def endogenous_secretion(self) -> float:
        return self.secretion_gain * self.pain_intensity


@dataclass(frozen=True)
class InjectionProtocol:
    total_dose: float
    ratio_R: float
    hot_ligand: Role = Role.AGONIST
    dose_class: DoseClass = DoseClass.THRESHOLD
    scan_start: float = 30.0
    scan_duration: float = 45.0

    def __post_init__(self):
        object.__setattr__(self, "hot_ligand", Role(self.hot_ligand))
        object.__setattr__(self, "dose_class", DoseClass(self.dose_class))
        if not self.total_dose > 0:
            raise InvalidDose(f"total_dose must be > 0, got {self.total_dose}")
        if not self.ratio_R > 0:
            raise ValueError(f"ratio_R must be > 0, got {self.ratio_R}")
        if not self.scan_duration > 0:
            raise ValueError("scan_duration must be > 0")

    @property
    def agonist_amount(self) -> float:
        return self.total_dose * self.ratio_R / (1.0 + self.ratio_R)

    @property
    def antagonist_amount(self) -> float:
        return self.total_dose / (1.0 + self.ratio_R)


def default_endogenous(populations: Iterable[str], affinity: float = 1.0) -> LigandSpec:
    return LigandSpec("endogenous", Role.AGONIST, {p: affinity for p in populations})


@dataclass(frozen=True)
class BindingModel:
    """Parameters of the linear binding model.

    ``saturation_cap`` bounds the fraction of endogenous-free sites held by
    injected ligand; ``distribution_volume`` converts a dose (molecule
    units) to a free concentration. ``endogenous=None`` gives the endogenous
    agonist unit affinity for every population.
    """

    saturation_cap: float = 0.10
    distribution_volume: float = 1.0
    endogenous: LigandSpec | None = None

    def __post_init__(self):
        if not 0 < self.saturation_cap <= 1:
            raise ValueError("saturation_cap must lie in (0, 1]")
        if not self.distribution_volume > 0:
            raise ValueError("distribution_volume must be > 0")

    def endogenous_k(self, population: str) -> float:
        if self.endogenous is None:
            return 1.0
        return self.endogenous.k(population)


@dataclass(frozen=True)
class PopulationBound:
    sites: int
    agonist: float
    antagonist: float
    endogenous: float

    @property
    def exogenous(self) -> float:
        return self.agonist + self.antagonist

    @property
    def saturation_fraction(self) -> float:
        """Exogenous occupancy of the sites not held by endogenous ligand."""
        free_of_endogenous = self.sites - self.endogenous
        return self.exogenous / free_of_endogenous if free_of_endogenous > 0 else 0.0


@dataclass(frozen=True)
class BoundCounts:
    """Expected bound molecules in one ROI, per receptor population."""

    region_id: str
    populations: Mapping[str, PopulationBound] = field(default_factory=dict)

    @property
    def agonist(self) -> float:
        return sum(b.agonist for b in self.populations.values())

    @property
    def antagonist(self) -> float:
        return sum(b.antagonist for b in self.populations.values())

    @property
    def endogenous(self) -> float:
        return sum(b.endogenous for b in self.populations.values())

    @property
    def exogenous(self) -> float:
        return self.agonist + self.antagonist

    @property
    def agonist_fraction(self) -> float:
        """Probability that a bound exogenous molecule is the agonist."""
        return self.agonist / self.exogenous

    @property
    def total_molecules(self) -> int:
        """Integer exogenous count used to index eigenstates (rounded mean)."""
        return int(round(self.exogenous))


def _bind(region, agonist, antagonist, agonist_amount, antagonist_amount, model):
    x_a = agonist_amount / model.distribution_volume
    x_aa = antagonist_amount / model.distribution_volume
    e = region.endogenous_secretion
    out = {}
    for pop, sites in region.receptor_count.items():
        load_e = model.endogenous_k(pop) * e
        free = sites / (1.0 + load_e)
        out[pop] = PopulationBound(
            sites=sites,
            agonist=free * agonist.k(pop) * x_a,
            antagonist=free * antagonist.k(pop) * x_aa,
            endogenous=free * load_e,
        )
    return BoundCounts(region.id, out)


def equilibrium_occupancy(
    region: RegionSpec,
    agonist: LigandSpec,
    antagonist: LigandSpec,
    protocol: InjectionProtocol,
    model: BindingModel = BindingModel(),
) -> BoundCounts:
    """Expected bound agonist, antagonist and endogenous molecules per population.

    Raises SaturationExceeded when any population's exogenous occupancy
    exceeds ``model.saturation_cap``.
    """
    if not protocol.total_dose > 0:
        raise InvalidDose(f"total_dose must be > 0, got {protocol.total_dose}")
    bound = _bind(
        region, agonist, antagonist,
        protocol.agonist_amount, protocol.antagonist_amount, model,
    )
    for pop, b in bound.populations.items():
        if b.saturation_fraction > model.saturation_cap:
            raise SaturationExceeded(
                f"region {region.id!r}, population {pop!r}: occupancy "
                f"{b.saturation_fraction:.4g} exceeds cap {model.saturation_cap}"
            )
    return bound


def agonist_attach_probability(
    agonist: LigandSpec,
    antagonist: LigandSpec,
    ratio_R: float,
    population: str,
    endogenous_level: float = 0.0,
) -> float:
    """Probability that a bound exogenous molecule in ``population`` is the agonist.

    ``endogenous_level`` is accepted for interface symmetry and has no effect:
    the endogenous competitor depresses both injected species by the same
    factor.
    """
    k_a, k_aa = agonist.k(population), antagonist.k(population)
    if k_a == 0 and k_aa == 0:
        raise ZeroAffinity(f"neither ligand binds population {population!r}")
    return ratio_R * k_a / (ratio_R * k_a + k_aa)


def _balance_terms(agonist, antagonist, regions, model):
    # bound agonist = dose * R/(1+R) * A, bound antagonist = dose/(1+R) * B
    a = b = 0.0
    for region in regions:
        bound = _bind(region, agonist, antagonist, 1.0, 1.0, model)
        a += bound.agonist
        b += bound.antagonist
    return a, b


def choose_balancing_ratio(
    agonist: LigandSpec,
    antagonist: LigandSpec,
    regions: Iterable[RegionSpec],
    model: BindingModel = BindingModel(),
    bounds: tuple[float, float] = (1e-6, 1e6),
) -> float:
    """Injection ratio R at which total bound agonist equals total bound antagonist.

    The signed imbalance is monotone in R, so the root is located by a
    bracketed search on log R within ``bounds``.
    """
    regions = list(regions)
    if not regions:
        raise NoBalancePossible("empty region set")
    a, b = _balance_terms(agonist, antagonist, regions, model)

    def imbalance(log_r):
        r = math.exp(log_r)
        return (r * a - b) / (1.0 + r)

    lo, hi = math.log(bounds[0]), math.log(bounds[1])
    f_lo, f_hi = imbalance(lo), imbalance(hi)
    if f_lo == 0:
        return bounds[0]
    if f_hi == 0:
        return bounds[1]
    if not (f_lo < 0 < f_hi):
        raise NoBalancePossible(
            f"bound agonist and antagonist cannot be equalised for R in {bounds}"
        )
    return math.exp(brentq(imbalance, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps))


def analgesia(regions, agonist, antagonist, ratio_R, dose, model=BindingModel()) -> float:
    """Analgesic drive: bound agonist summed over regions, times potency."""
    amount_a = dose * ratio_R / (1.0 + ratio_R)
    amount_aa = dose / (1.0 + ratio_R)
    total = sum(
        _bind(r, agonist, antagonist, amount_a, amount_aa, model).agonist for r in regions
    )
    return agonist.analgesic_potency * total


def max_linear_dose(regions, agonist, antagonist, ratio_R, model=BindingModel()) -> float:
    """Largest dose keeping every population within the saturation cap."""
    worst = 0.0
    for region in regions:
        bound = _bind(
            region, agonist, antagonist, ratio_R / (1.0 + ratio_R), 1.0 / (1.0 + ratio_R), model
        )
        worst = max(worst, max(b.saturation_fraction for b in bound.populations.values()))
    return math.inf if worst == 0 else model.saturation_cap / worst


def calibrate_threshold_dose(
    regions: Iterable[RegionSpec],
    agonist: LigandSpec,
    antagonist: LigandSpec,
    ratio_R: float,
    analgesia_threshold: float,
    model: BindingModel = BindingModel(),
    rtol: float = 1e-6,
) -> float:
    """Smallest dose whose analgesia reaches ``analgesia_threshold`` (bisection).

    The returned dose is the upper end of the final bracket, so it always
    meets the threshold and never exceeds the saturation cap.
    """
    regions = list(regions)
    if not analgesia_threshold > 0:
        raise ValueError("analgesia_threshold must be > 0")
    hi = max_linear_dose(regions, agonist, antagonist, ratio_R, model)
    if not math.isfinite(hi):
        raise ThresholdUnreachable("no ligand binds any population")
    if analgesia(regions, agonist, antagonist, ratio_R, hi, model) < analgesia_threshold:
        raise ThresholdUnreachable(
            f"analgesia at the saturation cap (dose {hi:.6g}) stays below "
            f"threshold {analgesia_threshold}"
        )
    lo = 0.0
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if analgesia(regions, agonist, antagonist, ratio_R, mid, model) >= analgesia_threshold:
            hi = mid
        else:
            lo = mid
    return hi
