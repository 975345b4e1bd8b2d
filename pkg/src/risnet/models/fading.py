from enum import StrEnum

from pydantic import BaseModel, ConfigDict, Field, model_validator


class RicianSpec(BaseModel):
    """Rician link: LoS share K/(K+1) of total_power, scatter share 1/(K+1)"""

    model_config = ConfigDict(frozen=True)

    k_factor: float = Field(default=1.0, ge=0, description="LoS-to-scatter ratio")
    total_power: float = Field(default=1.0, gt=0, description="E[|rho|^2]")


class ZetaMoments(BaseModel):
    """Moments of |zeta| for the product of two independent Rician legs"""

    model_config = ConfigDict(frozen=True)

    mean_abs: float = Field(..., gt=0)
    var_abs: float = Field(..., ge=0)
    second_moment: float = Field(..., gt=0)

    @model_validator(mode="after")
    def check_variance(self) -> "ZetaMoments":
        expected = self.second_moment - self.mean_abs**2
        if abs(self.var_abs - expected) > 1e-12 * max(1.0, self.second_moment):
            raise ValueError("'var_abs' must equal second_moment - mean_abs**2")
        return self


class ScatterBookkeeping(StrEnum):
    """How the scattered RIS elements enter the Gaussian approximation of eta.

    SPLIT splits V[|zeta|] over both quadratures, EXACT uses the moments of
    the exact sum (phase-aligned |zeta| plus circular scatter of power
    E[|zeta|^2]).
    """

    SPLIT = "split"
    EXACT = "exact"


class BeamformStats(BaseModel):
    """Gaussian approximation Re[eta] ~ N(mu, s_re), Im[eta] ~ N(0, s_im)"""

    model_config = ConfigDict(frozen=True)

    m_total: int = Field(..., gt=0, description="RIS elements M")
    m_batch: int = Field(..., gt=0, description="Phase-aligned elements M_o")
    mu: float = Field(..., ge=0)
    sigma_re_sq: float = Field(..., ge=0)
    sigma_im_sq: float = Field(..., ge=0)
    bookkeeping: ScatterBookkeeping = ScatterBookkeeping.SPLIT

    @model_validator(mode="after")
    def check_counts(self) -> "BeamformStats":
        if self.m_batch > self.m_total:
            raise ValueError("'m_batch' must not exceed 'm_total'")
        if self.sigma_im_sq > self.sigma_re_sq:
            raise ValueError("'sigma_im_sq' must not exceed 'sigma_re_sq'")
        return self

    @property
    def mean_power(self) -> float:
        """E[|eta|^2] = mu^2 + s_re + s_im"""
        return self.mu**2 + self.sigma_re_sq + self.sigma_im_sq

    @property
    def scatter_count(self) -> int:
        return self.m_total - self.m_batch


class BeamOverlap(BaseModel):
    """Probability that a foreign reflected beam covers the typical UE"""

    model_config = ConfigDict(frozen=True)

    beamwidth: float = Field(..., gt=0, le=360, description="Beamwidth (degrees)")
    overlap_prob: float = Field(default=None, ge=0, le=1)  # type: ignore[assignment]

    @model_validator(mode="before")
    @classmethod
    def derive_probability(cls, data):
        if isinstance(data, dict):
            data = dict(data)
            beamwidth = data.get("beamwidth")
            if beamwidth is None:
                return data
            expected = float(beamwidth) / 360.0
            given = data.get("overlap_prob")
            if given is not None and abs(given - expected) > 1e-12:
                raise ValueError("'overlap_prob' must equal beamwidth / 360")
            data["overlap_prob"] = expected
        return data
