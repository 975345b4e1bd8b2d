"""Monte Carlo oracle for the RIS-assisted MCP network.

Networks are drawn in vectorized batches; batch ``i`` always uses the i-th
child stream of the caller's generator, so results do not depend on the
number of worker threads.
"""

import logging
import math
from typing import Callable

import numpy as np
from scipy import constants

from risnet.core.parallel import map_ordered, spawn_generators
from risnet.exceptions import ConfigError, DomainError
from risnet.models.geometry import NetworkSample, Point2D
from risnet.models.simulation import (
    DEFAULT_SAMPLING_INTERVAL,
    ChannelTaps,
    EstimateWithCI,
    EtaMode,
    MonteCarloConfig,
    ParsevalCheck,
    SinrBatch,
    SinrSample,
)
from risnet.models.system import SystemParams
from risnet.protocols import PowerSampler
from risnet.utils.fading import (
    sample_eta_exact,
    sample_eta_gaussian,
    sample_gamma_ir,
    sample_zeta,
)
from risnet.utils.geometry import (
    as_xy,
    interference_window_radius,
    pathloss_g,
    reflected_path_gain_ue_centric,
    sample_layout_batch,
)

logger = logging.getLogger(__name__)

MIN_SAMPLES = 100
MIN_BLOCK_LENGTH = 1024


def check_samples(n: int) -> None:
    if n < MIN_SAMPLES:
        raise DomainError(f"at least {MIN_SAMPLES} samples are required, got {n}")


def rayleigh_fade(rng: np.random.Generator, size: int) -> np.ndarray:
    """CN(0, 1) draws; their squared modulus is Exp(1)"""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / math.sqrt(2)


def draw_eta(
    params: SystemParams, rng: np.random.Generator, size: int, mode: EtaMode
) -> np.ndarray:
    if mode is EtaMode.EXACT:
        return np.asarray(
            sample_eta_exact(
                lambda gen, k: sample_zeta(params.fading, gen, k),
                params.m_total, params.m_batch, rng, size=size,
            )
        )
    return sample_eta_gaussian(params.stats, rng, size)


class SinrSimulator:
    """Draws received powers of the typical UE for one parameter set"""

    def __init__(self, params: SystemParams, mc_config: MonteCarloConfig | None = None):
        self.params = params
        self.config = mc_config or MonteCarloConfig()
        self.r_max = self.config.r_max or interference_window_radius(
            params.serving_distance,
            params.pathloss.alpha_nlos,
            self.config.window_tail_tol,
        )
        if self.r_max <= params.serving_distance:
            raise ConfigError(
                f"r_max={self.r_max} must exceed the serving distance", ["r_max"]
            )

    def simulate_batch(self, n: int, rng: np.random.Generator) -> SinrBatch:
        """One vectorized batch of n independent networks"""
        p = self.params
        pl = p.pathloss
        layout = sample_layout_batch(p, n, rng, self.r_max)
        origin = np.zeros(2)

        direct_fade = rayleigh_fade(rng, n)
        q_sd = p.p0 * p.serving_gain * np.abs(direct_fade) ** 2

        eta = draw_eta(p, rng, layout.serving_ris.shape[0], self.config.eta_mode)
        gain = reflected_path_gain_ue_centric(
            layout.serving_bs, layout.serving_ris, origin,
            pl.alpha_los, pl.alpha_los, pl.beta,
        )
        q_sr = np.bincount(
            layout.serving_ris_sample, weights=p.p0 * gain * np.abs(eta) ** 2,
            minlength=n,
        )

        distance = np.linalg.norm(layout.interferers, axis=-1)
        q_id = np.bincount(
            layout.interferer_sample,
            weights=p.p0 * rng.exponential(1.0, distance.size)
            * pathloss_g(distance, pl.alpha_nlos, pl.beta),
            minlength=n,
        )

        owner = layout.interfering_ris_owner
        foreign = reflected_path_gain_ue_centric(
            layout.interferers[owner], layout.interfering_ris, origin,
            pl.alpha_los, pl.alpha_ir, pl.beta,
        )
        fade = sample_gamma_ir(p.stats, p.beam, rng, owner.size)
        q_ir = np.bincount(
            layout.interferer_sample[owner], weights=p.p0 * foreign * fade,
            minlength=n,
        )

        return SinrBatch(
            q_sd=q_sd,
            q_sr=q_sr,
            q_id=q_id,
            q_ir=q_ir,
            noise_power=p.noise_power,
            serving_ris=layout.serving_ris,
            serving_ris_sample=layout.serving_ris_sample,
            direct_fade=direct_fade,
            reflected_fade=eta,
        )

    def run(
        self,
        n: int,
        rng: np.random.Generator | int | None,
        progress_callback: Callable[[int, str], None] | None = None,
    ) -> SinrBatch:
        """n realizations split into batches that run on the worker pool"""
        size = self.config.batch_size
        sizes = [size] * (n // size) + ([n % size] if n % size else [])
        streams = spawn_generators(rng, len(sizes))
        done = 0

        def work(i: int) -> SinrBatch:
            nonlocal done
            batch = self.simulate_batch(sizes[i], streams[i])
            done += 1
            if progress_callback:
                progress_callback(
                    int(100 * done / len(sizes)), f"batch {done}/{len(sizes)}"
                )
            return batch

        logger.info(
            "simulating %d networks in %d batches (r_max=%.0f m)", n, len(sizes),
            self.r_max,
        )
        return SinrBatch.concatenate(
            map_ordered(work, range(len(sizes)), self.config.threads)
        )


def simulate_sinr_batch(
    params: SystemParams,
    n: int,
    rng: np.random.Generator | int | None,
    mc_config: MonteCarloConfig | None = None,
) -> SinrBatch:
    return SinrSimulator(params, mc_config).run(n, rng)


def simulate_sinr_once(
    params: SystemParams,
    rng: np.random.Generator,
    mc_config: MonteCarloConfig | None = None,
) -> SinrSample:
    return SinrSimulator(params, mc_config).simulate_batch(1, rng).sample(0)


def coverage_from_sinr(
    sinr: np.ndarray, thresholds: float | np.ndarray
) -> EstimateWithCI | list[EstimateWithCI]:
    """Fraction of realizations with SINR >= T, for one or several T"""
    sinr = np.asarray(sinr)
    if np.ndim(thresholds) == 0:
        hits = int(np.count_nonzero(sinr >= float(thresholds)))
        return EstimateWithCI.binomial(hits, sinr.size)
    return [coverage_from_sinr(sinr, float(t)) for t in np.asarray(thresholds)]


def estimate_coverage(
    params: SystemParams,
    thresholds: float | np.ndarray,
    n: int,
    rng: np.random.Generator | int | None,
    mc_config: MonteCarloConfig | None = None,
) -> EstimateWithCI | list[EstimateWithCI]:
    """P[SINR >= T]; every threshold is scored on the same SINR stream"""
    check_samples(n)
    return coverage_from_sinr(simulate_sinr_batch(params, n, rng, mc_config).sinr,
                              thresholds)


def estimate_ergodic_rate(
    params: SystemParams,
    n: int,
    rng: np.random.Generator | int | None,
    mc_config: MonteCarloConfig | None = None,
) -> EstimateWithCI:
    """E[log(1 + SINR)] in nats/s/Hz"""
    check_samples(n)
    sinr = simulate_sinr_batch(params, n, rng, mc_config).sinr
    return EstimateWithCI.from_samples(np.log1p(sinr))


def estimate_laplace(
    sampler: PowerSampler, s: float, n: int, rng: np.random.Generator
) -> EstimateWithCI:
    """E[exp(-sQ)] from n draws of Q"""
    check_samples(n)
    return EstimateWithCI.from_samples(np.exp(-s * np.asarray(sampler(rng, n))))


def component_sampler(
    params: SystemParams,
    component: str,
    mc_config: MonteCarloConfig | None = None,
) -> PowerSampler:
    """Sampler of one received power: q_sd, q_sr, q_id, q_ir, q_i or upsilon"""
    if component == "q_sr":
        # the serving cluster alone
        params = params.replace(include_interference=False)
    simulator = SinrSimulator(params, mc_config)

    def sampler(rng: np.random.Generator, n: int) -> np.ndarray:
        batch = simulator.run(n, rng)
        if component == "upsilon":
            return batch.upsilon(params.threshold)
        return np.asarray(getattr(batch, component))

    return sampler


def estimate_mean_powers(
    params: SystemParams,
    n: int,
    rng: np.random.Generator | int | None,
    mc_config: MonteCarloConfig | None = None,
) -> dict[str, EstimateWithCI]:
    """Sample means of the four received power components"""
    check_samples(n)
    batch = simulate_sinr_batch(params, n, rng, mc_config)
    return {
        "direct_interference": EstimateWithCI.from_samples(batch.q_id),
        "reflected_interference": EstimateWithCI.from_samples(batch.q_ir),
        "reflected_signal": EstimateWithCI.from_samples(batch.q_sr),
        "direct_signal": EstimateWithCI.from_samples(batch.q_sd),
    }


def sample_upsilon(
    params: SystemParams,
    n: int,
    rng: np.random.Generator | int | None,
    mc_config: MonteCarloConfig | None = None,
) -> np.ndarray:
    """Draws of T (Q_I + noise) - Q_SR"""
    return simulate_sinr_batch(params, n, rng, mc_config).upsilon(params.threshold)


def empirical_characteristic(
    samples: np.ndarray, u: np.ndarray | float
) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean of exp(iuX) and its standard error for every u"""
    samples = np.asarray(samples, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    phase = np.exp(1j * u[:, None] * samples[None, :])
    n = samples.size
    se = np.sqrt((phase.real.var(axis=1, ddof=1) + phase.imag.var(axis=1, ddof=1)) / n)
    return phase.mean(axis=1), se


def _delay_index(length: np.ndarray | float, t_s: float) -> np.ndarray:
    return np.floor(np.asarray(length) / (constants.c * t_s)).astype(int)


def build_channel_taps(
    layout: NetworkSample,
    direct_fade: complex,
    reflected_fades: np.ndarray,
    params: SystemParams,
    ue: Point2D | np.ndarray | tuple[float, float] = (0.0, 0.0),
    t_s: float = DEFAULT_SAMPLING_INTERVAL,
    n_s: int | None = None,
) -> ChannelTaps:
    """Tapped-delay line of the serving cell: the direct path, then one tap per RIS.

    A tap whose quantized delay is already taken moves to the next free
    index; later paths yield to earlier ones.
    Without an explicit ``n_s`` the block is the smallest power of two, at
    least MIN_BLOCK_LENGTH, that holds the delay spread.

    Raises:
        ConfigError: the delay spread does not fit into an explicit n_s
    """
    pl = params.pathloss
    bs = layout.serving_bs.to_array()
    ue_xy = as_xy(ue)
    ris = layout.serving_cluster
    reflected_fades = np.asarray(reflected_fades, dtype=complex)
    if reflected_fades.shape[0] != ris.shape[0]:
        raise ConfigError("one fade per serving RIS is required", ["reflected_fades"])

    direct_length = float(np.linalg.norm(bs - ue_xy))
    lengths = np.concatenate(
        [
            [direct_length],
            np.linalg.norm(ris - bs, axis=-1) + np.linalg.norm(ris - ue_xy, axis=-1),
        ]
    )
    gains = np.concatenate(
        [
            [np.sqrt(pathloss_g(direct_length, pl.alpha_nlos, pl.beta)) * direct_fade],
            np.sqrt(
                reflected_path_gain_ue_centric(
                    bs, ris, ue_xy, pl.alpha_los, pl.alpha_los, pl.beta
                )
            )
            * reflected_fades,
        ]
    )

    used: set[int] = set()
    delays = []
    for delay in _delay_index(lengths, t_s).tolist():
        while delay in used:
            delay += 1
        used.add(delay)
        delays.append(delay)

    n_c = max(delays) + 1
    if n_s is None:
        n_s = max(MIN_BLOCK_LENGTH, 1 << (n_c - 1).bit_length())
    if n_c > n_s:
        raise ConfigError(
            f"largest delay index {n_c - 1} does not fit into n_s={n_s}", ["n_s"]
        )
    return ChannelTaps(delays=np.array(delays), gains=gains, n_c=n_c, n_s=n_s, t_s=t_s)


def batch_channel_taps(
    batch: SinrBatch,
    i: int,
    params: SystemParams,
    t_s: float = DEFAULT_SAMPLING_INTERVAL,
    n_s: int | None = None,
) -> ChannelTaps:
    """Taps of realization i of a simulated batch"""
    own = batch.serving_ris_sample == i
    layout = NetworkSample(
        serving_bs=Point2D(x=params.serving_distance, y=0.0),
        interferers=np.empty((0, 2)),
        clusters=[batch.serving_ris[own]],
    )
    return build_channel_taps(
        layout, complex(batch.direct_fade[i]), batch.reflected_fade[own], params,
        t_s=t_s, n_s=n_s,
    )


def ofdm_parseval_check(taps: ChannelTaps) -> ParsevalCheck:
    """Compare (1/N_s) sum_k |Z[k]|^2 of the DFT with sum_n |Z[n]|^2"""
    z = taps.impulse_response()
    lhs = float(np.sum(np.abs(np.fft.fft(z)) ** 2) / taps.n_s)
    rhs = float(np.sum(np.abs(z) ** 2))
    rel_err = abs(lhs - rhs) / rhs if rhs > 0 else abs(lhs)
    return ParsevalCheck(lhs=lhs, rhs=rhs, rel_err=rel_err)
