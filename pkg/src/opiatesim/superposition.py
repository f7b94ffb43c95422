"""Distributions over bound-agonist eigenstates, the bias tilt, and collapse."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

import numpy as np
from scipy.special import gammaln

from .binding import DoseClass
from .errors import InvalidProbability

NORMALIZATION_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class OccupancyDistribution:
    """Probabilities of the eigenstates c_A = 0..N of one ROI.

    State ``c_A`` has ``c_A`` bound agonist and ``N - c_A`` bound antagonist
    molecules, with eigenvalue r = c_A / (N - c_A) (undefined at c_A = N).
    """

    N: int
    weights: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if w.shape != (self.N + 1,):
            raise ValueError(f"expected {self.N + 1} weights, got shape {w.shape}")
        if np.any(w < 0) or abs(w.sum() - 1.0) > NORMALIZATION_TOL:
            raise ValueError("weights must be non-negative and sum to 1")

    @property
    def states(self) -> np.ndarray:
        return np.arange(self.N + 1)

    def r(self, c_A: int) -> float:
        if c_A == self.N:
            raise ZeroDivisionError("r is undefined at c_A = N")
        return c_A / (self.N - c_A)

    def mean(self) -> float:
        return float(self.states @ self.weights)

    def cdf(self) -> np.ndarray:
        c = np.cumsum(self.weights)
        c[-1] = 1.0
        return c


@dataclass(frozen=True)
class BiasModel:
    """Exponential tilt of strength ``lam`` toward agonist-rich eigenstates.

    The tilt is applied only when the gate is open: threshold dose, a
    pain-responsive ROI, and pain intensity above ``pain_floor``.
    """

    lam: float = 0.0
    pain_floor: float = 0.0

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError("bias strength must be >= 0")

    def gate(self, dose_class: DoseClass, pain_responsive: bool, pain_intensity: float) -> bool:
        return (
            DoseClass(dose_class) is DoseClass.THRESHOLD
            and bool(pain_responsive)
            and pain_intensity > self.pain_floor
        )


@dataclass(frozen=True)
class GateInputs:
    dose_class: DoseClass
    pain_responsive: bool
    pain_intensity: float


def baseline_distribution(N: int, p: float) -> OccupancyDistribution:
    """Binomial(N, p): each bound site independently holds the agonist w.p. p."""
    if not 0.0 < p < 1.0:
        raise InvalidProbability(f"p must lie strictly between 0 and 1, got {p}")
    if N < 1:
        raise ValueError("N must be >= 1")
    k = np.arange(N + 1)
    log_w = (
        gammaln(N + 1) - gammaln(k + 1) - gammaln(N - k + 1)
        + k * np.log(p) + (N - k) * np.log1p(-p)
    )
    w = np.exp(log_w - log_w.max())
    return OccupancyDistribution(N, w / w.sum())


def tilt(dist: OccupancyDistribution, lam: float) -> OccupancyDistribution:
    """Reweight by exp(lam * c_A / N) and renormalise (ungated)."""
    if lam == 0:
        return dist
    with np.errstate(divide="ignore"):
        log_w = np.log(dist.weights) + lam * dist.states / dist.N
    w = np.exp(log_w - log_w.max())
    return OccupancyDistribution(dist.N, w / w.sum())


def apply_bias(
    dist: OccupancyDistribution, bias: BiasModel, gate_inputs: GateInputs
) -> OccupancyDistribution:
    """Gated tilt; returns ``dist`` itself when the gate is shut or lam == 0."""
    if bias.lam == 0 or not bias.gate(
        gate_inputs.dose_class, gate_inputs.pain_responsive, gate_inputs.pain_intensity
    ):
        return dist
    return tilt(dist, bias.lam)


def collapse_many(dist: OccupancyDistribution, u: np.ndarray) -> np.ndarray:
    """Map uniforms on [0, 1) to eigenstates by inverse CDF."""
    return np.minimum(np.searchsorted(dist.cdf(), u, side="right"), dist.N)


def collapse(dist: OccupancyDistribution, rng: np.random.Generator) -> tuple[int, int]:
    """Sample one eigenstate; returns (c_A, c_AA). Consumes one uniform."""
    c_a = int(collapse_many(dist, np.array([rng.random()]))[0])
    return c_a, dist.N - c_a


JointBodyState = Mapping[str, OccupancyDistribution]


def joint_collapse(
    state: JointBodyState, streams: Mapping[str, np.random.Generator]
) -> dict[str, tuple[int, int]]:
    """Collapse every ROI independently, each from its own substream.

    ROIs never share a stream, so the outcome for one ROI does not depend on
    which other ROIs are present or on their order.
    """
    return {roi: collapse(dist, streams[roi]) for roi, dist in state.items()}
