import math
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from risnet.utils.units import free_space_beta


class Point2D(BaseModel):
    """Point in the plane (meters)"""

    model_config = ConfigDict(frozen=True)

    x: float = 0.0
    y: float = 0.0

    @field_validator("x", "y")
    @classmethod
    def check_finite(cls, value: float) -> float:
        if not math.isfinite(value):
            raise ValueError("coordinates must be finite")
        return value

    def to_array(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def norm(self) -> float:
        return math.hypot(self.x, self.y)


class PathlossParams(BaseModel):
    """Exponents and reference gain of g(d) = beta (d+1)^-alpha"""

    model_config = ConfigDict(frozen=True)

    alpha_los: float = Field(default=3.0, gt=2, description="LoS exponent")
    alpha_nlos: float = Field(default=4.0, gt=2, description="NLoS exponent")
    alpha_ir: float = Field(
        default=4.0, gt=2, description="Exponent of the cross-cell RIS-UE leg"
    )
    f_c: float = Field(default=2.4e9, gt=0, description="Carrier frequency (Hz)")
    beta: float = Field(
        default=None,  # type: ignore[assignment]
        gt=0,
        description="Reference power gain; (c/(4 pi f_c))^2 when omitted",
    )

    @model_validator(mode="before")
    @classmethod
    def default_beta(cls, data):
        if isinstance(data, dict) and data.get("beta") is None:
            data = dict(data)
            data["beta"] = free_space_beta(data.get("f_c", 2.4e9))
        return data


class WedgeSupport(BaseModel):
    """Sector of an annulus; half_angle = pi gives the full ring"""

    model_config = ConfigDict(frozen=True)

    center: Point2D = Field(default_factory=Point2D)
    r_in: float = Field(..., gt=0)
    r_out: float = Field(..., gt=0)
    half_angle: float = Field(default=math.pi, gt=0, le=math.pi)
    orientation: float = Field(default=0.0, description="Direction of the bisector")

    @model_validator(mode="after")
    def check_radii(self) -> "WedgeSupport":
        if self.r_in >= self.r_out:
            raise ValueError("'r_in' must be smaller than 'r_out'")
        return self

    @property
    def area(self) -> float:
        return self.half_angle * (self.r_out**2 - self.r_in**2)


class AnnulusSupport(BaseModel):
    model_config = ConfigDict(frozen=True)

    center: Point2D = Field(default_factory=Point2D)
    r_in: float = Field(..., gt=0)
    r_out: float = Field(..., gt=0)

    @model_validator(mode="after")
    def check_radii(self) -> "AnnulusSupport":
        if self.r_in >= self.r_out:
            raise ValueError("'r_in' must be smaller than 'r_out'")
        return self

    @property
    def area(self) -> float:
        return math.pi * (self.r_out**2 - self.r_in**2)


@dataclass
class NetworkSample:
    """One realized layout around the typical UE at the origin.

    ``clusters[0]`` belongs to the serving BS, ``clusters[i + 1]`` to
    ``interferers[i]``; point sets are (n, 2) arrays.
    """

    serving_bs: Point2D
    interferers: np.ndarray
    clusters: list[np.ndarray]

    @property
    def serving_cluster(self) -> np.ndarray:
        return self.clusters[0]


@dataclass
class LayoutBatch:
    """Layouts of ``n_samples`` independent networks in flattened form.

    Index arrays map every point to its sample (and every interfering RIS to
    the interferer that owns it) so gains are computed without Python loops.
    """

    n_samples: int
    serving_bs: np.ndarray  # (2,)
    serving_ris: np.ndarray  # (K, 2)
    serving_ris_sample: np.ndarray  # (K,)
    interferers: np.ndarray  # (N, 2)
    interferer_sample: np.ndarray  # (N,)
    interfering_ris: np.ndarray  # (L, 2)
    interfering_ris_owner: np.ndarray  # (L,) index into interferers
    interfering_ris_radius: np.ndarray  # (L,) distance to the owning BS

    def network(self, i: int) -> NetworkSample:
        own = np.flatnonzero(self.interferer_sample == i)
        clusters = [self.serving_ris[self.serving_ris_sample == i]]
        for j in own:
            clusters.append(self.interfering_ris[self.interfering_ris_owner == j])
        return NetworkSample(
            serving_bs=Point2D(x=self.serving_bs[0], y=self.serving_bs[1]),
            interferers=self.interferers[own],
            clusters=clusters,
        )
