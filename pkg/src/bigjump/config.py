"""Experiment configuration: strict schema, canonical form and digest.

Configs are YAML or JSON mappings.  Unknown keys are errors, and all
validation problems are reported together in one :class:`ConfigError`.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .geometry import RuinSet, ruin_set_from_dict
from .randsrc import CountLaw, MarginalLaw, ThetaLaw, VectorLaw
from .riskmodel import ReturnProcess
from .tailstats import DEFAULT_LEVELS

__all__ = [
    "KINDS",
    "ConfigError",
    "ExperimentConfig",
    "parse_config",
    "load_config_dict",
    "config_hash",
]

KINDS = (
    "classify", "sum-asym", "random-sum", "scale-mixture", "convolution", "kesten",
    "translation", "dependence", "risk-model", "ks-arrivals",
)

# blocks each experiment kind needs besides the defaults
_REQUIRED = {
    "classify": ("set", "law"),
    "sum-asym": ("set", "law"),
    "random-sum": ("set", "law", "count_law"),
    "scale-mixture": ("set", "law", "theta"),
    "convolution": ("set", "law", "law2"),
    "kesten": ("set", "law"),
    "translation": ("set", "law"),
    "dependence": ("set", "law"),
    "risk-model": ("set", "law", "risk"),
    "ks-arrivals": ("risk",),
}


class ConfigError(ValueError):
    """All validation problems of one config file."""

    def __init__(self, errors, source=None):
        self.errors = list(errors)
        self.source = source
        head = f"invalid config {source}" if source else "invalid config"
        super().__init__(head + ":\n" + "\n".join(f"  - {e}" for e in self.errors))


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)


class SetBlock(_Strict):
    kind: Literal["halfspace", "any_exceed", "all_exceed"]
    weights: Optional[list[float]] = None
    threshold: Optional[float] = None
    barriers: Optional[list[float]] = None

    @model_validator(mode="after")
    def _build(self):
        if self.kind == "halfspace":
            if self.weights is None or self.threshold is None:
                raise ValueError("halfspace set needs weights and threshold")
        elif self.barriers is None:
            raise ValueError(f"{self.kind} set needs barriers")
        self.build()
        return self

    def build(self) -> RuinSet:
        return ruin_set_from_dict(self.model_dump(exclude_none=True))


class MarginalBlock(_Strict):
    kind: Literal["pareto", "lognormal", "weibull", "exponential", "degenerate"]
    alpha: Optional[float] = None
    x_min: Optional[float] = None
    mu: Optional[float] = None
    sigma: Optional[float] = None
    shape: Optional[float] = None
    scale: Optional[float] = None
    rate: Optional[float] = None
    value: Optional[float] = None

    @model_validator(mode="after")
    def _build(self):
        self.build()
        return self

    def build(self) -> MarginalLaw:
        return MarginalLaw(**self.model_dump(exclude_none=True))


class LawBlock(_Strict):
    """Either ``marginal`` plus ``dims`` (iid components) or an explicit ``marginals`` list."""

    marginal: Optional[MarginalBlock] = None
    dims: Optional[int] = Field(default=None, ge=1)
    marginals: Optional[list[MarginalBlock]] = None
    coupling: Literal["independent", "comonotone", "common_light_shock"] = "independent"
    shock: Optional[MarginalBlock] = None

    @model_validator(mode="after")
    def _check(self):
        if (self.marginal is None) == (self.marginals is None):
            raise ValueError("give exactly one of 'marginal' (with 'dims') or 'marginals'")
        if self.marginal is not None and self.dims is None:
            raise ValueError("'marginal' needs 'dims'")
        if self.marginals is not None and self.dims is not None and self.dims != len(self.marginals):
            raise ValueError("'dims' disagrees with the length of 'marginals'")
        self.build()
        return self

    def build(self) -> VectorLaw:
        margs = [self.marginal.build()] * self.dims if self.marginal is not None else [m.build() for m in self.marginals]
        shock = self.shock.build() if self.shock is not None else None
        return VectorLaw(tuple(margs), coupling=self.coupling, shock=shock)


class DependenceBlock(_Strict):
    structure: Literal["independent", "qai_common_shock", "comonotone"] = "independent"
    shock: Optional[MarginalBlock] = None
    which: Literal["QAI", "TAI", "RD"] = "QAI"


class CountBlock(_Strict):
    kind: Literal["poisson", "geometric", "uniform_int", "fixed", "zipf", "zeta", "pareto", "yule_simon"]
    mean: Optional[float] = None
    p: Optional[float] = None
    low: Optional[int] = None
    high: Optional[int] = None
    n: Optional[int] = None

    @model_validator(mode="after")
    def _build(self):
        self.build()
        return self

    def build(self) -> CountLaw:
        return CountLaw(**self.model_dump(exclude_none=True))


class ThetaBlock(_Strict):
    kind: str = "degenerate"
    low: Optional[float] = None
    high: Optional[float] = None
    value: Optional[float] = None
    mode: Literal["scalar", "componentwise"] = "scalar"

    @model_validator(mode="after")
    def _build(self):
        self.build()
        return self

    def build(self) -> ThetaLaw:
        return ThetaLaw(**self.model_dump(exclude_none=True))


class ReturnsBlock(_Strict):
    kind: Literal["constant", "clipped_random_walk"] = "constant"
    rate: Optional[float] = None
    sigma: Optional[float] = None
    c1: Optional[float] = None
    c2: Optional[float] = None
    n_steps: Optional[int] = None

    @model_validator(mode="after")
    def _build(self):
        self.build()
        return self

    def build(self) -> ReturnProcess:
        return ReturnProcess(**self.model_dump(exclude_none=True))


class RiskBlock(_Strict):
    lam: float = Field(alias="lambda", gt=0)
    horizon: float = Field(gt=0)
    returns: ReturnsBlock = ReturnsBlock()


class SizesBlock(_Strict):
    n_paths: int = Field(default=10**6, ge=1)
    n_inner: Optional[int] = Field(default=None, ge=2)
    n_summands: int = Field(default=2, ge=1)
    n_max: int = Field(default=10, ge=1, le=20)
    t_mesh: int = Field(default=64, ge=16)
    n_pilot: Optional[int] = Field(default=None, ge=1)
    hill_k: int = Field(default=1000, ge=10)
    dump_paths: int = Field(default=0, ge=0, le=10_000)


class ParamsBlock(_Strict):
    shift: Optional[list[float]] = None
    a: float = Field(default=1.0, ge=0)
    b: float = Field(default=0.5, gt=0, le=1)
    b_grid: list[float] = [0.8, 0.9, 0.95, 0.99]
    eps: float = Field(default=0.5, gt=0)
    quantile: float = Field(default=0.99, gt=0, lt=1)
    arrivals_n: int = Field(default=1, ge=1)
    min_conditioned: int = Field(default=10_000, ge=1)
    expect_classes: dict[Literal["L", "D", "C", "S"], bool] = {"L": True, "D": True, "C": True, "S": True}


class ExperimentConfig(_Strict):
    """Validated experiment description.

    ``workers`` and ``out`` only affect how and where a run executes, so they
    are left out of :func:`config_hash`.
    """

    kind: Literal[KINDS]
    seed: int = Field(default=0, ge=0, lt=2**64)
    workers: int = Field(default=1, ge=0)
    out: Optional[str] = None
    set: Optional[SetBlock] = None
    law: Optional[LawBlock] = None
    law2: Optional[LawBlock] = None
    dependence: DependenceBlock = DependenceBlock()
    count_law: Optional[CountBlock] = None
    theta: Optional[ThetaBlock] = None
    risk: Optional[RiskBlock] = None
    sizes: SizesBlock = SizesBlock()
    band: Optional[tuple[float, float]] = None
    levels: list[float] = list(DEFAULT_LEVELS)

    @field_validator("levels")
    @classmethod
    def _levels(cls, v):
        if not v or any(not 0 < q < 1 for q in v) or any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("levels must be strictly increasing within (0, 1)")
        return v

    @field_validator("band")
    @classmethod
    def _band(cls, v):
        if v is not None and not 0 < v[0] <= v[1]:
            raise ValueError("band must satisfy 0 < lo <= hi")
        return v

    @model_validator(mode="after")
    def _per_kind(self):
        problems = [f"{self.kind} needs a '{b}' block" for b in _REQUIRED[self.kind] if getattr(self, b) is None]
        if not problems and self.set is not None and self.law is not None:
            if self.law.build().dims != self.set.build().dims:
                problems.append("law and set dimensions differ")
            if self.law2 is not None and self.law2.build().dims != self.set.build().dims:
                problems.append("law2 and set dimensions differ")
        if self.kind == "translation" and not problems:
            shift = self.params.shift
            if shift is None or len(shift) != self.set.build().dims:
                problems.append("translation needs params.shift with one entry per dimension")
        if problems:
            raise ValueError("; ".join(problems))
        return self

    params: ParamsBlock = ParamsBlock()

    def canonical(self) -> dict:
        return self.model_dump(mode="json", by_alias=True)

    def canonical_json(self) -> str:
        return json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"), indent=None)


def config_hash(cfg: ExperimentConfig) -> str:
    """SHA-256 of the canonical JSON, without the run-location fields."""
    body = cfg.canonical()
    body.pop("workers", None)
    body.pop("out", None)
    blob = json.dumps(body, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _format_errors(exc: ValidationError) -> list:
    out = []
    for e in exc.errors():
        loc = ".".join(str(p) for p in e["loc"]) or "<root>"
        msg = e["msg"]
        if msg.startswith("Value error, "):
            msg = msg[len("Value error, "):]
        out.append(f"{loc}: {msg}")
    return out


def load_config_dict(data, source=None, **overrides) -> ExperimentConfig:
    """Validate a mapping; ``overrides`` with value None are ignored."""
    if not isinstance(data, dict):
        raise ConfigError(["top level must be a mapping"], source)
    data = dict(data)
    data.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc), source) from None


def parse_config(path, **overrides) -> ExperimentConfig:
    """Read a YAML or JSON config file and validate it."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"cannot read: {exc}"], path) from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError([f"not valid YAML/JSON: {exc}"], path) from None
    return load_config_dict(data, source=path, **overrides)
