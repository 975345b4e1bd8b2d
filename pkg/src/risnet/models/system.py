import math
from enum import StrEnum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from risnet.models.fading import (
    BeamformStats,
    BeamOverlap,
    RicianSpec,
    ScatterBookkeeping,
    ZetaMoments,
)
from risnet.models.geometry import PathlossParams
from risnet.utils.fading import beamform_stats, zeta_moments
from risnet.utils.units import free_space_beta, parse_power


class NetworkSettingsUser(BaseModel):
    """Flat, user-facing model parameters (SI units, dB strings allowed)"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    lambda_bs: float = Field(default=1e-5, ge=0, description="BS density (1/m²)")
    lambda_ris: float | None = Field(
        default=None, ge=0, description="RIS density per cluster area (1/m²)"
    )
    mean_ris_per_cluster: float = Field(
        default=5.0,
        ge=0,
        description="Mean RIS count per cluster, used when lambda_ris is unset",
    )
    r_in: float = Field(default=10.0, gt=0, description="Inner cluster radius (m)")
    r_out: float = Field(default=30.0, gt=0, description="Outer cluster radius (m)")
    p0: float = Field(default=1.0, gt=0, description="Transmit power per UE (W)")
    noise_power: float = Field(default=1e-13, ge=0, description="Noise power (W)")
    m_total: int = Field(default=3000, gt=0, description="Elements per RIS")
    m_batch: int = Field(default=600, gt=0, description="Elements serving one UE")
    alpha_los: float = Field(default=3.0, gt=2)
    alpha_nlos: float = Field(default=4.0, gt=2)
    alpha_ir: float = Field(
        default=4.0, gt=2, description="Exponent of the cross-cell RIS-UE leg"
    )
    f_c: float = Field(default=2.4e9, gt=0, description="Carrier frequency (Hz)")
    beta: float | None = Field(
        default=None, gt=0, description="Reference gain, derived from f_c if unset"
    )
    beta_squared: bool = Field(
        default=True,
        description="Derive beta as (c/(4 pi f_c))^2 (True) or c/(4 pi f_c)",
    )
    beamwidth: float | None = Field(
        default=None,
        gt=0,
        le=360,
        description="Reflected beamwidth (degrees), 180/m_batch if unset",
    )
    serving_distance: float = Field(default=100.0, gt=0, description="r (m)")
    threshold: float = Field(default=1.0, gt=0, description="SINR threshold T")
    k_factor: float = Field(default=1.0, ge=0, description="Rician K of RIS legs")
    scatter_bookkeeping: ScatterBookkeeping = ScatterBookkeeping.SPLIT
    include_interference: bool = True
    include_reflected_interference: bool = True

    @field_validator("p0", "noise_power", "threshold", mode="before")
    @classmethod
    def accept_db(cls, value: Any) -> Any:
        return parse_power(value) if isinstance(value, str) else value

    @model_validator(mode="after")
    def check_geometry(self) -> "NetworkSettingsUser":
        if self.r_in >= self.r_out:
            raise ValueError("'r_in' must be smaller than 'r_out'")
        if self.m_batch > self.m_total:
            raise ValueError("'m_batch' must not exceed 'm_total'")
        return self


class SystemParams(BaseModel):
    """Internal, fully derived parameter set of the MCP network model"""

    model_config = ConfigDict(frozen=True)

    lambda_bs: float = Field(..., ge=0)
    lambda_ris: float = Field(..., ge=0)
    r_in: float = Field(..., gt=0)
    r_out: float = Field(..., gt=0)
    p0: float = Field(..., gt=0)
    noise_power: float = Field(..., ge=0)
    m_total: int = Field(..., gt=0)
    m_batch: int = Field(..., gt=0)
    pathloss: PathlossParams
    beam: BeamOverlap
    serving_distance: float = Field(..., gt=0)
    threshold: float = Field(..., gt=0)
    fading: RicianSpec
    zeta: ZetaMoments
    stats: BeamformStats
    include_interference: bool = True
    include_reflected_interference: bool = True

    @model_validator(mode="after")
    def check_consistency(self) -> "SystemParams":
        if self.r_in >= self.r_out:
            raise ValueError("'r_in' must be smaller than 'r_out'")
        if (self.stats.m_total, self.stats.m_batch) != (self.m_total, self.m_batch):
            raise ValueError("beamforming statistics do not match the element counts")
        return self

    @classmethod
    def from_settings(cls, settings: NetworkSettingsUser) -> "SystemParams":
        area = math.pi * (settings.r_out**2 - settings.r_in**2)
        lambda_ris = (
            settings.lambda_ris
            if settings.lambda_ris is not None
            else settings.mean_ris_per_cluster / area
        )
        beta = settings.beta or free_space_beta(settings.f_c, settings.beta_squared)
        fading = RicianSpec(k_factor=settings.k_factor)
        zeta = zeta_moments(fading)
        beamwidth = settings.beamwidth or min(360.0, 180.0 / settings.m_batch)
        return cls(
            lambda_bs=settings.lambda_bs,
            lambda_ris=lambda_ris,
            r_in=settings.r_in,
            r_out=settings.r_out,
            p0=settings.p0,
            noise_power=settings.noise_power,
            m_total=settings.m_total,
            m_batch=settings.m_batch,
            pathloss=PathlossParams(
                alpha_los=settings.alpha_los,
                alpha_nlos=settings.alpha_nlos,
                alpha_ir=settings.alpha_ir,
                f_c=settings.f_c,
                beta=beta,
            ),
            beam=BeamOverlap(beamwidth=beamwidth),
            serving_distance=settings.serving_distance,
            threshold=settings.threshold,
            fading=fading,
            zeta=zeta,
            stats=beamform_stats(
                zeta, settings.m_total, settings.m_batch, settings.scatter_bookkeeping
            ),
            include_interference=settings.include_interference,
            include_reflected_interference=settings.include_reflected_interference,
        )

    @classmethod
    def build(cls, **kwargs: Any) -> "SystemParams":
        """Parameters from flat keyword arguments of NetworkSettingsUser"""
        return cls.from_settings(NetworkSettingsUser(**kwargs))

    def to_settings(self) -> NetworkSettingsUser:
        return NetworkSettingsUser(
            lambda_bs=self.lambda_bs,
            lambda_ris=self.lambda_ris,
            r_in=self.r_in,
            r_out=self.r_out,
            p0=self.p0,
            noise_power=self.noise_power,
            m_total=self.m_total,
            m_batch=self.m_batch,
            alpha_los=self.pathloss.alpha_los,
            alpha_nlos=self.pathloss.alpha_nlos,
            alpha_ir=self.pathloss.alpha_ir,
            f_c=self.pathloss.f_c,
            beta=self.pathloss.beta,
            beamwidth=self.beam.beamwidth,
            serving_distance=self.serving_distance,
            threshold=self.threshold,
            k_factor=self.fading.k_factor,
            scatter_bookkeeping=self.stats.bookkeeping,
            include_interference=self.include_interference,
            include_reflected_interference=self.include_reflected_interference,
        )

    def replace(self, **changes: Any) -> "SystemParams":
        """Copy with flat settings changed and derived fields rebuilt.

        When the element counts change and no beamwidth is given, the beam
        keeps following 180/m_batch only if it did so before.
        """
        settings = self.to_settings().model_dump()
        if "m_batch" in changes and "beamwidth" not in changes:
            if math.isclose(self.beam.beamwidth, min(360.0, 180.0 / self.m_batch)):
                settings["beamwidth"] = None
        if "lambda_ris" not in changes and "mean_ris_per_cluster" in changes:
            settings["lambda_ris"] = None
        settings.update(changes)
        return self.from_settings(NetworkSettingsUser(**settings))

    def with_element_budget(
        self, total_elements: int, users_per_ris: int
    ) -> "SystemParams":
        """Split a fixed number of elements per cluster over its mean RIS count.

        M = total / mean count and M_o = M / users_per_ris, both at least 1.
        """
        mean_count = self.mean_ris_per_cluster
        if mean_count <= 0:
            return self
        m_total = max(1, round(total_elements / mean_count))
        m_batch = max(1, round(m_total / users_per_ris))
        return self.replace(m_total=m_total, m_batch=m_batch)

    @property
    def cluster_area(self) -> float:
        return math.pi * (self.r_out**2 - self.r_in**2)

    @property
    def mean_ris_per_cluster(self) -> float:
        return self.lambda_ris * self.cluster_area

    @property
    def serving_gain(self) -> float:
        """g(r) of the NLoS direct link"""
        pl = self.pathloss
        return pl.beta * (self.serving_distance + 1.0) ** (-pl.alpha_nlos)


class ConvergenceBound(BaseModel):
    """Worst case of 2 s_re G / g(r) over the cluster support against 1"""

    model_config = ConfigDict(frozen=True)

    feasible: bool
    margin: float = Field(..., description="1/2 minus the worst-case ratio")
    max_ratio: float = Field(..., ge=0)


class MeanPowers(BaseModel):
    """First moments (W) of the four received power components"""

    model_config = ConfigDict(frozen=True)

    direct_interference: float = Field(..., ge=0)
    reflected_interference: float = Field(..., ge=0)
    reflected_signal: float = Field(..., ge=0)
    direct_signal: float = Field(..., ge=0)

    @property
    def interference(self) -> float:
        return self.direct_interference + self.reflected_interference

    @property
    def reflected_fraction(self) -> float:
        """Share of the interference power reflected by foreign RISs"""
        total = self.interference
        return self.reflected_interference / total if total > 0 else 0.0


class UpsilonSpec(BaseModel):
    """Upsilon = T(Q_I + noise) - Q_SR with its strip of convergence"""

    model_config = ConfigDict(frozen=True)

    params: SystemParams
    s_a: float = Field(..., lt=0, description="Left edge of the strip")
    s_b: float = Field(..., gt=0, description="Right edge of the strip")


class ReferenceScenario(StrEnum):
    """Parameter presets of the evaluated deployments"""

    MCP_BASELINE = "mcp_baseline"
    VARIANT_BASELINE = "variant_baseline"

    def settings(self, **changes: Any) -> NetworkSettingsUser:
        if self is ReferenceScenario.MCP_BASELINE:
            values: dict[str, Any] = {}
        else:
            # RISs ring the coverage hole, no reflections from foreign cells
            values = dict(
                lambda_bs=4e-6,
                serving_distance=80.0,
                r_in=25.0,
                r_out=35.0,
                mean_ris_per_cluster=4.0,
                include_reflected_interference=False,
            )
        values.update(changes)
        return NetworkSettingsUser(**values)

    def params(self, **changes: Any) -> SystemParams:
        return SystemParams.from_settings(self.settings(**changes))
