"""Schema of experiment files.

Run ``python -m risnet.models.experiment_config`` to print the JSON schema.
"""

import json
import math
from enum import StrEnum
from pathlib import Path
from typing import Any, Literal, get_args

from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    field_validator,
    model_validator,
)

from risnet.exceptions import ConfigError
from risnet.models.numerics import QuadratureConfig
from risnet.models.system import NetworkSettingsUser
from risnet.models.variants import CoverageHoleConfig, Deployment
from risnet.utils.units import parse_power


class Scenario(StrEnum):
    COVERAGE = "coverage"
    RATE = "rate"
    FIG5 = "fig5"
    FIG6 = "fig6"
    FIG7 = "fig7"
    FIG8 = "fig8"
    RADII = "radii"
    VALIDATE = "validate"


def _is_numeric(annotation: Any) -> bool:
    args = get_args(annotation) or (annotation,)
    return any(a in (int, float) for a in args) and all(
        a in (int, float, type(None)) for a in args
    )


def numeric_fields(model: type[BaseModel]) -> set[str]:
    """Fields annotated int or float (optionally None)"""
    return {
        name
        for name, info in model.model_fields.items()
        if _is_numeric(info.annotation)
    }


VARIANT_FIELDS = {"n_ris", "wedge_angle"}


class SweepConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    field: str = Field(..., description="Name of the swept numeric parameter")
    values: list[float | str] = Field(..., min_length=1)

    @field_validator("values")
    @classmethod
    def check_values(cls, values: list[float | str]) -> list[float | str]:
        for value in values:
            if isinstance(value, str):
                parse_power(value)
        return values

    def numeric_values(self) -> list[float]:
        return [parse_power(v) for v in self.values]


class VariantSettings(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    hole: CoverageHoleConfig = Field(default_factory=CoverageHoleConfig)
    deployment: Deployment = Deployment.PPP_RING
    wedge_angle: float = Field(default=90.0, gt=0, le=360)
    n_ris: int = Field(default=4, ge=0)


DEFAULT_SWEEPS: dict[Scenario, SweepConfig] = {
    Scenario.COVERAGE: SweepConfig(
        field="threshold", values=["-10dB", "-5dB", "0dB", "5dB", "10dB"]
    ),
    Scenario.RATE: SweepConfig(
        field="serving_distance", values=[50.0, 100.0, 150.0, 200.0]
    ),
    Scenario.FIG5: SweepConfig(
        field="beamwidth", values=[3.6, 10.0, 20.0, 45.0, 90.0, 180.0]
    ),
    Scenario.FIG6: SweepConfig(field="lambda_bs", values=[1e-6, 2e-6, 5e-6, 1e-5]),
    Scenario.FIG7: SweepConfig(
        field="mean_ris_per_cluster", values=[1.0, 2.0, 5.0, 10.0, 20.0]
    ),
    Scenario.FIG8: SweepConfig(
        field="c_d", values=["0dB", "-1dB", "-2dB", "-3dB", "-4dB", "-5dB"]
    ),
    Scenario.RADII: SweepConfig(field="r_out", values=[30.0, 40.0, 50.0, 60.0]),
}


class ExperimentConfig(BaseModel):
    """One experiment: a scenario, its parameters and an optional sweep"""

    model_config = ConfigDict(frozen=True, extra="forbid", populate_by_name=True)

    schema_version: Literal[1] = Field(default=1, alias="schema")
    scenario: Scenario
    params: NetworkSettingsUser = Field(default_factory=NetworkSettingsUser)
    variant: VariantSettings | None = None
    mc_samples: int = Field(
        default=10_000, ge=0, description="Monte Carlo samples per point, 0 skips"
    )
    seed: int = Field(default=0, ge=0, lt=2**64)
    sweep: SweepConfig | None = None
    output_path: str = "results.csv"
    quadrature: QuadratureConfig = Field(default_factory=QuadratureConfig)
    total_elements: int = Field(
        default=10_000, gt=0, description="RIS elements per cluster (fig7)"
    )
    users_per_ris: int = Field(
        default=5, gt=0, description="UEs sharing one RIS (fig7)"
    )
    record_runtime: bool = True
    threads: int | None = Field(default=None, gt=0)

    @field_validator("mc_samples")
    @classmethod
    def check_samples(cls, value: int) -> int:
        if 0 < value < 100:
            raise ValueError("'mc_samples' must be 0 or at least 100")
        return value

    @model_validator(mode="after")
    def check_sweep(self) -> "ExperimentConfig":
        if self.sweep is None:
            return self
        allowed = numeric_fields(NetworkSettingsUser)
        if self.scenario is Scenario.FIG8:
            allowed |= numeric_fields(CoverageHoleConfig) | VARIANT_FIELDS
        if self.sweep.field not in allowed:
            raise ValueError(
                f"sweep field '{self.sweep.field}' is not a numeric parameter of "
                f"scenario '{self.scenario}'"
            )
        return self

    @property
    def effective_sweep(self) -> SweepConfig | None:
        return self.sweep or DEFAULT_SWEEPS.get(self.scenario)


def _field_path(loc: tuple[Any, ...]) -> str:
    return ".".join(str(part) for part in loc) or "<root>"


def config_error(exc: ValidationError, source: str = "config") -> ConfigError:
    """ConfigError listing every failing field as a dotted path"""
    fields = [_field_path(error["loc"]) for error in exc.errors()]
    details = "; ".join(
        f"{_field_path(error['loc'])}: {error['msg']}" for error in exc.errors()
    )
    return ConfigError(f"invalid {source}: {details}", fields)


def load_config(path: str | Path) -> ExperimentConfig:
    """Parse and validate an experiment file.

    Raises:
        ConfigError: unreadable file, malformed JSON or schema violations
    """
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}", ["<file>"]) from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}", ["<file>"]
        ) from exc
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise config_error(exc, str(path)) from exc


class ResultRow(BaseModel):
    """One CSV row; Monte Carlo columns are NaN when no samples were drawn"""

    model_config = ConfigDict(frozen=True)

    sweep_value: float
    analytic: float
    mc_mean: float = math.nan
    mc_se: float = math.nan
    runtime_s: float = Field(default=0.0, ge=0)

    @field_validator("mc_se")
    @classmethod
    def check_se(cls, value: float) -> float:
        if value < 0:
            raise ValueError("'mc_se' must not be negative")
        return value

    @classmethod
    def columns(cls) -> list[str]:
        return list(cls.model_fields)


if __name__ == "__main__":
    print(json.dumps(ExperimentConfig.model_json_schema(by_alias=True), indent=2))
