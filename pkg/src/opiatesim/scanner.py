"""Measurement layer: radioactive counting of collapsed occupancies."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .binding import DoseClass, InjectionProtocol, RegionSpec, Role
from .errors import InvalidWindow, UndefinedRatio


@dataclass(frozen=True)
class DetectorModel:
    """Counting model for one instrument (PET scanner or autoradiography film).

    Backgrounds are expected counts per pixel; ``isotope_half_life`` is in
    minutes and may be ``math.inf`` for a stable label.
    """

    efficiency: float = 0.05
    isotope_half_life: float = 20.4
    nonspecific_background: float = 0.0
    free_ligand_background: float = 0.0
    counts_per_molecule_scale: float = 1.0

    def __post_init__(self):
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must lie in (0, 1]")
        if not self.isotope_half_life > 0:
            raise ValueError("isotope_half_life must be > 0")
        if self.nonspecific_background < 0 or self.free_ligand_background < 0:
            raise ValueError("backgrounds must be >= 0")
        if not self.counts_per_molecule_scale > 0:
            raise ValueError("counts_per_molecule_scale must be > 0")

    @property
    def background(self) -> float:
        return self.nonspecific_background + self.free_ligand_background


def decay_integral(start: float, duration: float, half_life: float) -> float:
    """Integral of 2**(-t / half_life) over [start, start + duration]."""
    if start < 0 or not duration > 0:
        raise InvalidWindow(f"bad scan window: start={start}, duration={duration}")
    if math.isinf(half_life):
        return float(duration)
    rate = math.log(2.0) / half_life
    # exp(-rate*start) * (1 - exp(-rate*duration)) / rate, written to avoid cancellation
    return math.exp(-rate * start) * -math.expm1(-rate * duration) / rate


def counts_per_molecule(detector: DetectorModel, start: float, duration: float) -> float:
    return (
        detector.counts_per_molecule_scale
        * detector.efficiency
        * decay_integral(start, duration, detector.isotope_half_life)
    )


def expected_pixel_mean(hot_molecules, pixel_count: int, detector: DetectorModel,
                        start: float, duration: float):
    """Mean detected counts per pixel for ``hot_molecules`` labelled molecules in an ROI."""
    return (
        np.asarray(hot_molecules, dtype=float) / pixel_count
        * counts_per_molecule(detector, start, duration)
        + detector.background
    )


@dataclass(frozen=True, eq=False)
class RoiScan:
    pixels: np.ndarray

    @property
    def aggregate(self) -> float:
        """Mean counts per pixel (C_A or C_AA, depending on the hot ligand)."""
        return float(self.pixels.mean())


@dataclass(frozen=True, eq=False)
class ScanResult:
    hot: Role
    dose_class: DoseClass
    rois: Mapping[str, RoiScan]
    seed: int | None = None

    def aggregate(self, roi: str) -> float:
        return self.rois[roi].aggregate


def simulate_scan(
    occupancy: Mapping[str, tuple[int, int]],
    hot: Role,
    detector: DetectorModel,
    protocol: InjectionProtocol,
    regions: Mapping[str, RegionSpec],
    streams: Mapping[str, np.random.Generator],
    seed: int | None = None,
) -> ScanResult:
    """Poisson pixel counts for each ROI given its collapsed (c_A, c_AA).

    Each ROI draws ``pixel_count`` Poisson variates from its own stream.
    """
    hot = Role(hot)
    start, duration = protocol.scan_start, protocol.scan_duration
    decay_integral(start, duration, detector.isotope_half_life)
    rois = {}
    for roi, (c_a, c_aa) in occupancy.items():
        n_pix = regions[roi].pixel_count
        hot_count = c_a if hot is Role.AGONIST else c_aa
        mean = expected_pixel_mean(np.array([hot_count]), n_pix, detector, start, duration)
        rois[roi] = RoiScan(streams[roi].poisson(mean[:, None], size=(1, n_pix))[0])
    return ScanResult(hot, protocol.dose_class, rois, seed)


def compute_ratio(c_a: float, c_aa: float) -> float:
    """r = C_A / C_AA; raises UndefinedRatio when C_AA is zero."""
    if c_aa == 0:
        raise UndefinedRatio(f"C_AA = 0 (C_A = {c_a})")
    return c_a / c_aa


def ratio_array(c_a: np.ndarray, c_aa: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised compute_ratio: returns (r, defined); r is 0 where undefined."""
    c_a = np.asarray(c_a, dtype=float)
    c_aa = np.asarray(c_aa, dtype=float)
    defined = c_aa > 0
    r = np.divide(c_a, c_aa, out=np.zeros_like(c_a), where=defined)
    return r, defined
