from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from risnet.exceptions import DomainError


class QuadratureConfig(BaseModel):
    """Tolerances and node counts shared by all quadrature routines"""

    model_config = ConfigDict(frozen=True)

    rel_tol: float = Field(default=1e-7, gt=0, description="Relative tolerance")
    abs_tol: float = Field(default=1e-10, gt=0, description="Absolute tolerance")
    max_subdivisions: int = Field(
        default=2000, gt=0, description="Maximum number of region subdivisions per integral"
    )
    pv_epsilon: float = Field(
        default=1e-4, gt=0, description="Half-width of the excluded PV interval"
    )
    tail_cutoff: float = Field(
        default=1e7,
        gt=0,
        description="Upper end of characteristic-function integrals (normalized)",
    )
    tail_tol: float = Field(
        default=1e-8,
        gt=0,
        description="Panel contribution below which an integrable tail is cut",
    )
    rate_tail_tol: float = Field(
        default=1e-6,
        gt=0,
        description="Coverage level that truncates the ergodic-rate integral",
    )
    cluster_radial_nodes: int = Field(default=24, ge=2)
    cluster_angular_nodes: int = Field(default=32, ge=2)
    signal_radial_nodes: int = Field(default=48, ge=2)
    signal_angular_nodes: int = Field(default=96, ge=2)

    @model_validator(mode="after")
    def check_cutoff(self) -> "QuadratureConfig":
        if self.tail_cutoff <= self.pv_epsilon:
            raise ValueError("'tail_cutoff' must exceed 'pv_epsilon'")
        return self


@dataclass(frozen=True)
class TransformValue:
    """Values of a (bi)lateral Laplace transform with a validity mask.

    Entries outside the domain hold NaN so they cannot silently enter
    downstream arithmetic.
    """

    value: np.ndarray
    in_domain: np.ndarray

    @classmethod
    def evaluate(cls, value: np.ndarray, in_domain: np.ndarray) -> "TransformValue":
        value = np.asarray(value, dtype=complex)
        in_domain = np.broadcast_to(np.asarray(in_domain, dtype=bool), value.shape)
        return cls(np.where(in_domain, value, np.nan + 0j), in_domain.copy())

    @property
    def all_in_domain(self) -> bool:
        return bool(np.all(self.in_domain))

    def require(self) -> np.ndarray:
        """Return the values, raising if any argument left the domain"""
        if not self.all_in_domain:
            n_bad = int(np.size(self.in_domain) - np.count_nonzero(self.in_domain))
            raise DomainError(f"{n_bad} transform argument(s) outside the domain")
        return self.value

    def __complex__(self) -> complex:
        return complex(self.require().reshape(-1)[0])

    def __float__(self) -> float:
        return float(self.require().real.reshape(-1)[0])


@dataclass
class IntegrationResult:
    """Outcome of an adaptive quadrature"""

    value: np.ndarray | complex | float
    error: float
    n_evals: int
    subdivisions: int = 0
