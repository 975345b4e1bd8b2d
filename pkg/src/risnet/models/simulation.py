from dataclasses import dataclass, field
from enum import StrEnum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from risnet.config import config
from risnet.exceptions import ConfigError

# sampling interval of the tapped-delay line (s)
DEFAULT_SAMPLING_INTERVAL = 0.509e-9


class EtaMode(StrEnum):
    """GAUSSIAN draws eta from its approximation, EXACT sums M element products"""

    GAUSSIAN = "gaussian"
    EXACT = "exact"


class MonteCarloConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    batch_size: int = Field(
        default_factory=lambda: config.RISNET_MC_BATCH_SIZE,
        gt=0,
        description="Networks per batch; every batch owns one random stream",
    )
    r_max: float | None = Field(
        default=None,
        gt=0,
        description="Radius of the simulated BS field, closed-form window if unset",
    )
    window_tail_tol: float = Field(
        default=1e-4,
        gt=0,
        lt=1,
        description="Share of the mean interference allowed outside r_max",
    )
    eta_mode: EtaMode = EtaMode.GAUSSIAN
    average_ue_in_hole: bool = Field(
        default=False, description="Draw the UE uniformly in the coverage hole"
    )
    threads: int | None = Field(default=None, gt=0)


class SinrSample(BaseModel):
    """Received powers (W) of one realization"""

    model_config = ConfigDict(frozen=True)

    q_sd: float = Field(..., ge=0, description="Direct signal")
    q_sr: float = Field(..., ge=0, description="Reflected signal")
    q_i: float = Field(..., ge=0, description="Total interference")
    sinr: float = Field(..., ge=0)


@dataclass
class SinrBatch:
    """Received powers of n independent realizations.

    The serving-cell complex fades are kept so that channel taps can be
    built for any realization.
    """

    q_sd: np.ndarray
    q_sr: np.ndarray
    q_id: np.ndarray
    q_ir: np.ndarray
    noise_power: float
    serving_ris: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    serving_ris_sample: np.ndarray = field(
        default_factory=lambda: np.empty(0, dtype=int)
    )
    direct_fade: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=complex))
    reflected_fade: np.ndarray = field(
        default_factory=lambda: np.empty(0, dtype=complex)
    )

    def __len__(self) -> int:
        return int(self.q_sd.size)

    @property
    def q_i(self) -> np.ndarray:
        return self.q_id + self.q_ir

    @property
    def sinr(self) -> np.ndarray:
        signal = self.q_sd + self.q_sr
        noise = self.q_i + self.noise_power
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(noise > 0, signal / noise, np.inf)

    @property
    def sinr_without_ris(self) -> np.ndarray:
        """SINR of the same realization with every RIS removed"""
        noise = self.q_id + self.noise_power
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(noise > 0, self.q_sd / noise, np.inf)

    def upsilon(self, threshold: float) -> np.ndarray:
        """T (Q_I + noise) - Q_SR per realization"""
        return threshold * (self.q_i + self.noise_power) - self.q_sr

    def sample(self, i: int) -> SinrSample:
        return SinrSample(
            q_sd=float(self.q_sd[i]),
            q_sr=float(self.q_sr[i]),
            q_i=float(self.q_i[i]),
            sinr=float(self.sinr[i]),
        )

    @classmethod
    def concatenate(cls, batches: list["SinrBatch"]) -> "SinrBatch":
        """Join batches in order; RIS sample indices are shifted accordingly"""
        offsets = np.cumsum([0] + [len(b) for b in batches[:-1]])
        return cls(
            q_sd=np.concatenate([b.q_sd for b in batches]),
            q_sr=np.concatenate([b.q_sr for b in batches]),
            q_id=np.concatenate([b.q_id for b in batches]),
            q_ir=np.concatenate([b.q_ir for b in batches]),
            noise_power=batches[0].noise_power,
            serving_ris=np.concatenate([b.serving_ris for b in batches]),
            serving_ris_sample=np.concatenate(
                [b.serving_ris_sample + o for b, o in zip(batches, offsets)]
            ),
            direct_fade=np.concatenate([b.direct_fade for b in batches]),
            reflected_fade=np.concatenate([b.reflected_fade for b in batches]),
        )


class EstimateWithCI(BaseModel):
    """Sample mean with its standard error"""

    model_config = ConfigDict(frozen=True)

    mean: float
    std_error: float = Field(..., ge=0)
    n: int = Field(..., ge=1)

    @classmethod
    def from_samples(cls, values: np.ndarray) -> "EstimateWithCI":
        values = np.asarray(values, dtype=float)
        n = values.size
        std = float(values.std(ddof=1)) if n > 1 else 0.0
        return cls(mean=float(values.mean()), std_error=std / np.sqrt(n), n=n)

    @classmethod
    def binomial(cls, hits: int, n: int) -> "EstimateWithCI":
        p = hits / n
        return cls(mean=p, std_error=float(np.sqrt(p * (1.0 - p) / n)), n=n)

    @classmethod
    def ratio(cls, numerator: np.ndarray, denominator: np.ndarray) -> "EstimateWithCI":
        """mean(numerator) / mean(denominator) of paired samples, delta-method SE"""
        x = np.asarray(numerator, dtype=float)
        y = np.asarray(denominator, dtype=float)
        n = x.size
        r = float(x.mean() / y.mean())
        residual = x - r * y
        std = float(residual.std(ddof=1)) if n > 1 else 0.0
        return cls(mean=r, std_error=std / (np.sqrt(n) * abs(float(y.mean()))), n=n)

    def interval(self, z: float = 1.96) -> tuple[float, float]:
        return self.mean - z * self.std_error, self.mean + z * self.std_error

    def agrees_with(self, value: float, k: float = 3.0, floor: float = 0.0) -> bool:
        """|mean - value| <= max(floor, k SE)"""
        return abs(self.mean - value) <= max(floor, k * self.std_error)


@dataclass
class ChannelTaps:
    """Tapped-delay line of one link: tap ``i`` has delay index ``delays[i]``.

    Args:
        delays: Distinct sample delays, each below n_c
        gains: Complex tap gains
        n_c: Delay-spread length in samples
        n_s: OFDM block length (number of subcarriers)
        t_s: Sampling interval (s)
    """

    delays: np.ndarray
    gains: np.ndarray
    n_c: int
    n_s: int
    t_s: float = DEFAULT_SAMPLING_INTERVAL

    def __post_init__(self):
        self.delays = np.asarray(self.delays, dtype=int)
        self.gains = np.asarray(self.gains, dtype=complex)
        if self.delays.shape != self.gains.shape:
            raise ConfigError("one gain per delay is required", ["delays", "gains"])
        if np.unique(self.delays).size != self.delays.size:
            raise ConfigError("tap delays must be distinct", ["delays"])
        out_of_range = (self.delays < 0) | (self.delays >= self.n_c)
        if np.any(out_of_range):
            raise ConfigError("tap delays must lie in [0, n_c)", ["delays", "n_c"])
        if self.n_c > self.n_s:
            raise ConfigError(
                f"delay spread n_c={self.n_c} exceeds the block length n_s={self.n_s}",
                ["n_c", "n_s"],
            )

    @property
    def power(self) -> float:
        return float(np.sum(np.abs(self.gains) ** 2))

    def impulse_response(self) -> np.ndarray:
        """Zero-padded sequence Z[n], n = 0..n_s-1"""
        z = np.zeros(self.n_s, dtype=complex)
        z[self.delays] = self.gains
        return z


class ParsevalCheck(BaseModel):
    """Mean subcarrier power against summed tap power"""

    model_config = ConfigDict(frozen=True)

    lhs: float = Field(..., ge=0, description="(1/N_s) sum_k |Z[k]|^2")
    rhs: float = Field(..., ge=0, description="sum_n |Z[n]|^2")
    rel_err: float = Field(..., ge=0)
