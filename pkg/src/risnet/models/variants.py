import math
from enum import StrEnum
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from risnet.models.geometry import Point2D, WedgeSupport
from risnet.models.system import ReferenceScenario, SystemParams
from risnet.utils.units import parse_power


class Deployment(StrEnum):
    """Point process and support of the RISs around a coverage hole"""

    PPP_RING = "ppp_ring"
    PPP_WEDGE = "ppp_wedge"
    BPP_RING = "bpp_ring"
    BPP_WEDGE = "bpp_wedge"

    @property
    def is_bpp(self) -> bool:
        return self in (Deployment.BPP_RING, Deployment.BPP_WEDGE)

    @property
    def is_wedge(self) -> bool:
        return self in (Deployment.PPP_WEDGE, Deployment.BPP_WEDGE)


class CoverageHoleConfig(BaseModel):
    """Coverage hole of radius hole_radius, ringed by RISs on [r_in, r_out].

    The penalties are linear power factors; strings such as ``"-3dB"`` are
    converted on input.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    serving_distance: float = Field(
        default=80.0, gt=0, description="BS to hole center (m)"
    )
    hole_radius: float = Field(default=10.0, ge=0, description="R_CH (m)")
    r_in: float = Field(default=25.0, gt=0)
    r_out: float = Field(default=35.0, gt=0)
    c_d: float = Field(default=1.0, gt=0, le=1, description="Direct-link penalty")
    c_r: float = Field(default=1.0, gt=0, le=1, description="Reflected-link penalty")

    @field_validator("c_d", "c_r", mode="before")
    @classmethod
    def accept_db(cls, value: Any) -> Any:
        return parse_power(value) if isinstance(value, str) else value

    @model_validator(mode="after")
    def check_radii(self) -> "CoverageHoleConfig":
        if not self.hole_radius < self.r_in < self.r_out:
            raise ValueError("radii must satisfy hole_radius < r_in < r_out")
        return self


class WedgeConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    support: WedgeSupport
    n_ris: int = Field(default=4, ge=0, description="Number of deployed RISs")


class VariantScenario(BaseModel):
    """A coverage-hole deployment evaluated at the hole center.

    ``network`` supplies densities, powers, exponents and element counts;
    its geometry is overridden by ``hole``.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    hole: CoverageHoleConfig = Field(default_factory=CoverageHoleConfig)
    deployment: Deployment = Deployment.PPP_RING
    wedge_angle: float = Field(
        default=90.0, gt=0, le=360, description="Opening of the wedge (degrees)"
    )
    n_ris: int = Field(
        default=4, ge=0, description="RIS count (BPP) or mean count (PPP)"
    )
    network: SystemParams = Field(
        default_factory=lambda: ReferenceScenario.VARIANT_BASELINE.params()
    )

    @property
    def bs(self) -> Point2D:
        return Point2D(x=self.hole.serving_distance, y=0.0)

    @property
    def support(self) -> WedgeSupport:
        """Ring or wedge around the hole center, bisector toward the BS"""
        half_angle = math.pi
        if self.deployment.is_wedge:
            half_angle = math.radians(self.wedge_angle) / 2.0
        return WedgeSupport(
            r_in=self.hole.r_in, r_out=self.hole.r_out, half_angle=half_angle
        )

    @property
    def wedge(self) -> WedgeConfig:
        return WedgeConfig(support=self.support, n_ris=self.n_ris)

    @property
    def lambda_ris(self) -> float:
        """PPP density with the same mean count as the BPP"""
        return self.n_ris / self.support.area

    def network_params(self) -> SystemParams:
        """Direct links and BS interference only; the RISs are handled separately"""
        return self.network.replace(
            serving_distance=self.hole.serving_distance,
            r_in=self.hole.r_in,
            r_out=self.hole.r_out,
            lambda_ris=0.0,
            include_reflected_interference=False,
        )

    def without_ris(self) -> "VariantScenario":
        return self.model_copy(update={"n_ris": 0})

    def with_penalties(self, c_d: float, c_r: float) -> "VariantScenario":
        hole = self.hole.model_copy(update={"c_d": c_d, "c_r": c_r})
        return self.model_copy(update={"hole": CoverageHoleConfig(**hole.model_dump())})
