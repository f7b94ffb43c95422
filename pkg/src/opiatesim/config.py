"""Experiment configuration documents (YAML), validation and resolution.

Unknown keys are rejected. Every default is materialised, so the canonical
serialisation of a parsed config (the "resolved config") records every
setting that influences a run.
"""
from __future__ import annotations

import hashlib
import math
from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_core import PydanticCustomError

from .analysis import Scenario
from .binding import BindingModel, LigandSpec, RegionSpec, Role
from .errors import RangeError, SchemaError
from .protocol import Subject, plan_protocol
from .scanner import DetectorModel

SCHEMA_VERSION = 1
TRITIUM_HALF_LIFE_MIN = 12.32 * 365.25 * 24 * 60


def _range_error(msg: str):
    return PydanticCustomError("range_error", msg)


class _Doc(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)


class RegionDoc(_Doc):
    id: str
    receptor_count: dict[str, int]
    pain_responsive: bool = False
    pain_intensity: float = Field(0.0, ge=0.0, le=1.0)
    secretion_gain: float = Field(0.0, ge=0.0)
    pixel_count: int = Field(64, ge=1)

    @field_validator("receptor_count")
    @classmethod
    def _counts(cls, v):
        if any(s < 0 for s in v.values()):
            raise _range_error("receptor counts must be >= 0")
        if not any(s >= 1 for s in v.values()):
            raise _range_error("at least one population needs >= 1 receptor")
        return v


class LigandDoc(_Doc):
    name: str
    affinity: dict[str, float]
    analgesic_potency: float = Field(0.0, ge=0.0)

    @field_validator("affinity")
    @classmethod
    def _affinity(cls, v):
        if any(not (k >= 0 and math.isfinite(k)) for k in v.values()):
            raise _range_error("affinities must be finite and >= 0")
        if not any(k > 0 for k in v.values()):
            raise _range_error("at least one affinity must be > 0")
        return v


class LigandsDoc(_Doc):
    agonist: LigandDoc
    antagonist: LigandDoc
    endogenous: Optional[LigandDoc] = None

    @model_validator(mode="after")
    def _antagonist_inert(self):
        if self.antagonist.analgesic_potency != 0:
            raise _range_error("antagonist.analgesic_potency must be 0")
        return self


class SubjectDoc(_Doc):
    regions: list[RegionDoc] = Field(min_length=1)

    @model_validator(mode="after")
    def _unique(self):
        ids = [r.id for r in self.regions]
        if len(set(ids)) != len(ids):
            raise PydanticCustomError("schema_error", "region ids must be unique")
        return self


class BindingDoc(_Doc):
    saturation_cap: float = Field(0.10, gt=0.0, le=1.0)
    distribution_volume: float = Field(1.0, gt=0.0)


class ProtocolDoc(_Doc):
    kind: Literal["pet", "autoradiography"] = "pet"
    ratio: Union[Literal["auto"], float] = "auto"
    analgesia_threshold: Optional[float] = Field(None, gt=0.0)
    threshold_dose: Optional[float] = Field(None, gt=0.0)
    subpharm_fraction: float = Field(0.1, gt=0.0, lt=1.0)
    scan_start: float = Field(30.0, ge=0.0)
    scan_duration: float = Field(45.0, gt=0.0)
    between_subject_cv: float = Field(0.0, ge=0.0)

    @field_validator("ratio")
    @classmethod
    def _ratio(cls, v):
        if v != "auto" and not v > 0:
            raise _range_error("ratio must be 'auto' or > 0")
        return v

    @model_validator(mode="after")
    def _dose_source(self):
        if self.threshold_dose is None and self.analgesia_threshold is None:
            raise PydanticCustomError(
                "schema_error", "one of analgesia_threshold or threshold_dose is required"
            )
        return self


class BiasDoc(_Doc):
    lam: float = Field(0.0, ge=0.0, alias="lambda")
    pain_floor: float = Field(0.0, ge=0.0, le=1.0)


class DetectorDoc(_Doc):
    efficiency: float = Field(0.05, gt=0.0, le=1.0)
    isotope_half_life: float = Field(20.4, gt=0.0)
    nonspecific_background: float = Field(0.0, ge=0.0)
    free_ligand_background: float = Field(0.0, ge=0.0)
    counts_per_molecule_scale: float = Field(1.0, gt=0.0)


class DetectorsDoc(_Doc):
    pet: DetectorDoc = DetectorDoc()
    autoradiography: DetectorDoc = DetectorDoc(
        efficiency=1.0, isotope_half_life=TRITIUM_HALF_LIFE_MIN
    )


class SimulationDoc(_Doc):
    replicates: int = Field(100, ge=1)
    seed: int = Field(0, ge=0, lt=2 ** 64)


class AnalysisDoc(_Doc):
    alpha: float = Field(0.05, gt=0.0, lt=1.0)
    bonferroni: bool = False
    lambda_grid: list[float] = Field(default_factory=lambda: [0.0, 1.0, 2.0], min_length=1)
    size_grid: list[int] = Field(default_factory=lambda: [10, 20, 50], min_length=1)
    background_grid: Optional[list[float]] = None
    replications: int = Field(200, ge=100)

    @field_validator("lambda_grid", "background_grid")
    @classmethod
    def _nonneg(cls, v):
        if v is not None and any(x < 0 for x in v):
            raise _range_error("grid values must be >= 0")
        return v

    @field_validator("size_grid")
    @classmethod
    def _sizes(cls, v):
        if any(s < 2 for s in v):
            raise _range_error("sizes must be >= 2")
        return v


class ExperimentConfig(_Doc):
    schema_version: Literal[1] = SCHEMA_VERSION
    subject: SubjectDoc
    ligands: LigandsDoc
    binding: BindingDoc = BindingDoc()
    protocol: ProtocolDoc
    bias: BiasDoc = BiasDoc()
    detector: DetectorsDoc = DetectorsDoc()
    simulation: SimulationDoc = SimulationDoc()
    analysis: AnalysisDoc = AnalysisDoc()

    @model_validator(mode="after")
    def _resolve_endogenous(self):
        if self.ligands.endogenous is None:
            pops = sorted({p for r in self.subject.regions for p in r.receptor_count})
            self.ligands.endogenous = LigandDoc(
                name="endogenous", affinity={p: 1.0 for p in pops}
            )
        return self


_RANGE_TYPES = {
    "greater_than", "greater_than_equal", "less_than", "less_than_equal",
    "range_error", "too_short",
}


def _translate(exc: ValidationError):
    err = exc.errors()[0]
    path = ".".join(str(p) for p in err["loc"])
    cls = RangeError if err["type"] in _RANGE_TYPES else SchemaError
    more = f" (+{exc.error_count() - 1} more)" if exc.error_count() > 1 else ""
    return cls(err["msg"] + more, path)


def parse_config(document: str | dict) -> ExperimentConfig:
    """Parse and validate a YAML document (or an already-loaded mapping)."""
    if isinstance(document, str):
        try:
            document = yaml.safe_load(document)
        except yaml.YAMLError as exc:
            raise SchemaError(f"not valid YAML: {exc}") from None
    if not isinstance(document, dict):
        raise SchemaError("config document must be a mapping")
    try:
        return ExperimentConfig.model_validate(document)
    except ValidationError as exc:
        raise _translate(exc) from None


def load_config(path) -> ExperimentConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def config_to_dict(cfg: ExperimentConfig) -> dict:
    return cfg.model_dump(mode="python", by_alias=True)


def serialize_config(cfg: ExperimentConfig) -> str:
    """Canonical YAML text of the resolved config (all defaults explicit)."""
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False, allow_unicode=True)


def config_digest(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(serialize_config(cfg).encode("utf-8")).hexdigest()[:16]


def with_seed(cfg: ExperimentConfig, seed: int | None) -> ExperimentConfig:
    """Override the master seed (e.g. from ``--seed``), re-validating the document."""
    if seed is None:
        return cfg
    doc = config_to_dict(cfg)
    doc["simulation"]["seed"] = seed
    return parse_config(doc)


def _ligand(doc: LigandDoc, role: Role) -> LigandSpec:
    return LigandSpec(doc.name, role, doc.affinity, doc.analgesic_potency)


def build_subject(cfg: ExperimentConfig) -> Subject:
    regions = tuple(
        RegionSpec(
            r.id, r.receptor_count, r.pain_responsive, r.pain_intensity,
            r.secretion_gain, r.pixel_count,
        )
        for r in cfg.subject.regions
    )
    model = BindingModel(
        cfg.binding.saturation_cap,
        cfg.binding.distribution_volume,
        _ligand(cfg.ligands.endogenous, Role.AGONIST),
    )
    return Subject(
        regions,
        _ligand(cfg.ligands.agonist, Role.AGONIST),
        _ligand(cfg.ligands.antagonist, Role.ANTAGONIST),
        model,
    )


def build_detector(doc: DetectorDoc) -> DetectorModel:
    return DetectorModel(**doc.model_dump())


def build_scenario(cfg: ExperimentConfig) -> Scenario:
    """Balance R and calibrate doses as configured; returns a ready Scenario."""
    p = cfg.protocol
    plan = plan_protocol(
        build_subject(cfg),
        analgesia_threshold=p.analgesia_threshold,
        ratio_R=None if p.ratio == "auto" else float(p.ratio),
        threshold_dose=p.threshold_dose,
        subpharm_fraction=p.subpharm_fraction,
        scan_start=p.scan_start,
        scan_duration=p.scan_duration,
    )
    detector = build_detector(
        cfg.detector.pet if p.kind == "pet" else cfg.detector.autoradiography
    )
    return Scenario(
        plan,
        detector,
        seed=cfg.simulation.seed,
        pain_floor=cfg.bias.pain_floor,
        between_subject_cv=p.between_subject_cv if p.kind == "autoradiography" else 0.0,
        kind=p.kind,
    )
