"""Simulator for opiate-binding PET and autoradiography experiments.

Models competitive ligand binding, the distribution over bound-agonist
eigenstates, a gated exponential-tilt bias, radioactive counting, and the
paired rank test comparing r at threshold and subpharmacological doses.
"""
from .binding import (
    BindingModel,
    DoseClass,
    InjectionProtocol,
    LigandSpec,
    RegionSpec,
    Role,
    agonist_attach_probability,
    calibrate_threshold_dose,
    choose_balancing_ratio,
    equilibrium_occupancy,
)
from .superposition import (
    BiasModel,
    GateInputs,
    OccupancyDistribution,
    apply_bias,
    baseline_distribution,
    collapse,
    joint_collapse,
)
from .scanner import DetectorModel, compute_ratio, decay_integral, simulate_scan
from .protocol import (
    ExperimentResult,
    ProtocolPlan,
    Subject,
    plan_protocol,
    run_autoradiography_protocol,
    run_four_scan_protocol,
    simulate_batch,
)
from .analysis import Scenario, effect_size, power_curve, test_hypothesis

__all__ = [
    "BindingModel", "DoseClass", "InjectionProtocol", "LigandSpec", "RegionSpec", "Role",
    "agonist_attach_probability", "calibrate_threshold_dose", "choose_balancing_ratio",
    "equilibrium_occupancy",
    "BiasModel", "GateInputs", "OccupancyDistribution", "apply_bias", "baseline_distribution",
    "collapse", "joint_collapse",
    "DetectorModel", "compute_ratio", "decay_integral", "simulate_scan",
    "ExperimentResult", "ProtocolPlan", "Subject", "plan_protocol",
    "run_autoradiography_protocol", "run_four_scan_protocol", "simulate_batch",
    "Scenario", "effect_size", "power_curve", "test_hypothesis",
]
