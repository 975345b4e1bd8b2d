"""Coverage holes served by RISs on a ring or wedge around the hole.

The UE sits at the hole center (the origin), its BS at (r, 0). The
reflected path BS -> RIS -> UE mirrors the BS-centric cluster model, so the
transforms reuse the same Gauss-Legendre machinery on the UE-centric
support. Cross-cell RIS reflections are not modeled here.
"""

import logging
import math
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import optimize

from risnet.calculation.analytic import (
    CachedTransform,
    CoverageMethod,
    PositivePartProblem,
    network_transforms,
    rate_from_coverage,
)
from risnet.calculation.montecarlo import (
    SinrSimulator,
    check_samples,
    coverage_from_sinr,
    draw_eta,
    rayleigh_fade,
)
from risnet.core.parallel import map_ordered, spawn_generators
from risnet.exceptions import InfeasibleError, NumericalError
from risnet.models.geometry import Point2D, WedgeSupport
from risnet.models.numerics import QuadratureConfig, TransformValue
from risnet.models.simulation import EstimateWithCI, MonteCarloConfig, SinrBatch
from risnet.models.system import SystemParams
from risnet.models.variants import (
    CoverageHoleConfig,
    Deployment,
    VariantScenario,
    WedgeConfig,
)
from risnet.utils.fading import laplace_gamma_sr
from risnet.utils.geometry import (
    PointLike,
    as_xy,
    pathloss_g,
    reflected_path_gain_ue_centric,
    sample_bpp_wedge,
    sample_layout_batch,
    sample_uniform_disc,
    sector_quadrature,
)

logger = logging.getLogger(__name__)


def _is_symmetric(support: WedgeSupport, bs: np.ndarray, ue: np.ndarray) -> bool:
    """Whether the integrand is even in the angle about the wedge bisector"""
    return (
        support.orientation == 0.0
        and support.center.y == 0.0
        and bs[1] == 0.0
        and ue[1] == 0.0
    )


def support_quadrature(
    support: WedgeSupport,
    bs: PointLike,
    ue: PointLike,
    params: SystemParams,
    quad: QuadratureConfig,
) -> tuple[np.ndarray, np.ndarray]:
    """Weights of int f y dy dpsi over the support and the path gain at every node"""
    bs_xy, ue_xy = as_xy(bs), as_xy(ue)
    y, psi, weight = sector_quadrature(
        support.r_in,
        support.r_out,
        quad.signal_radial_nodes,
        quad.signal_angular_nodes,
        half_angle=support.half_angle,
        orientation=support.orientation,
        even=_is_symmetric(support, bs_xy, ue_xy),
    )
    ris = support.center.to_array() + y[:, None] * np.column_stack(
        [np.cos(psi), np.sin(psi)]
    )
    pl = params.pathloss
    gain = reflected_path_gain_ue_centric(
        bs_xy, ris, ue_xy, pl.alpha_los, pl.alpha_los, pl.beta
    )
    return weight, gain


def max_support_gain(
    support: WedgeSupport, bs: PointLike, ue: PointLike, params: SystemParams
) -> float:
    """Largest UE-centric reflected gain over the support"""
    bs_xy, ue_xy = as_xy(bs), as_xy(ue)
    pl = params.pathloss
    lo = support.orientation - support.half_angle
    hi = support.orientation + support.half_angle
    center = support.center.to_array()

    def gains(y: np.ndarray, psi: np.ndarray) -> np.ndarray:
        ris = center + np.asarray(y)[..., None] * np.stack(
            [np.cos(psi), np.sin(psi)], axis=-1
        )
        return reflected_path_gain_ue_centric(
            bs_xy, ris, ue_xy, pl.alpha_los, pl.alpha_los, pl.beta
        )

    def gain(point: np.ndarray) -> float:
        return float(gains(point[0], point[1]))

    ys, psis = np.meshgrid(
        np.linspace(support.r_in, support.r_out, 65), np.linspace(lo, hi, 129)
    )
    values = gains(ys.ravel(), psis.ravel())
    start = np.array([ys.ravel()[np.argmax(values)], psis.ravel()[np.argmax(values)]])
    best = optimize.minimize(
        lambda point: -gain(point),
        start,
        method="L-BFGS-B",
        bounds=[(support.r_in, support.r_out), (lo, hi)],
    )
    return max(float(values.max()), -float(best.fun))


def _signal_domain(
    s: np.ndarray, c_r: float, params: SystemParams, max_gain: float
) -> np.ndarray:
    slope = 2.0 * c_r * params.p0 * params.stats.sigma_re_sq * max_gain
    return 1.0 - slope * s.real > 0


def bpp_wedge_signal_laplace(
    s: np.ndarray | complex,
    bs: Point2D,
    ue: Point2D,
    cfg: WedgeConfig,
    params: SystemParams,
    quad: QuadratureConfig | None = None,
    c_r: float = 1.0,
) -> TransformValue:
    """E[exp(s C_R Q_SR)] of n_ris RISs drawn uniformly on the support.

    (int L_SR(-s C_R P0 g(bs, y, ue)) y dy dpsi / area)^n_ris
    """
    quad = quad or QuadratureConfig()
    s = np.asarray(s, dtype=complex)
    max_gain = max_support_gain(cfg.support, bs, ue, params)
    in_domain = _signal_domain(s, c_r, params, max_gain)
    weight, gain = support_quadrature(cfg.support, bs, ue, params, quad)
    safe = np.where(in_domain, s, 0.0)
    z = -(safe[..., None] * c_r * params.p0) * gain
    mean = laplace_gamma_sr(z, params.stats).value @ weight / cfg.support.area
    return TransformValue.evaluate(mean**cfg.n_ris, in_domain)


def ppp_region_signal_laplace(
    s: np.ndarray | complex,
    bs: Point2D,
    ue: Point2D,
    support: WedgeSupport,
    lambda_ris: float,
    params: SystemParams,
    quad: QuadratureConfig | None = None,
    c_r: float = 1.0,
) -> TransformValue:
    """E[exp(s C_R Q_SR)] of a PPP of density lambda_ris on the support"""
    quad = quad or QuadratureConfig()
    s = np.asarray(s, dtype=complex)
    max_gain = max_support_gain(support, bs, ue, params)
    in_domain = _signal_domain(s, c_r, params, max_gain)
    weight, gain = support_quadrature(support, bs, ue, params, quad)
    safe = np.where(in_domain, s, 0.0)
    z = -(safe[..., None] * c_r * params.p0) * gain
    deficit = (1.0 - laplace_gamma_sr(z, params.stats).value) @ weight
    return TransformValue.evaluate(np.exp(-lambda_ris * deficit), in_domain)


class VariantTransforms:
    """Transforms of one coverage-hole scenario with the UE at the hole center"""

    def __init__(self, scenario: VariantScenario, quad: QuadratureConfig):
        self.scenario = scenario
        self.quad = quad
        self.network = scenario.network_params()
        hole = scenario.hole
        self.ue = np.zeros(2)
        self.bs = scenario.bs.to_array()
        self.support = scenario.support

        self.weight, self.gain = support_quadrature(
            self.support, self.bs, self.ue, self.network, quad
        )
        self.max_gain = max_support_gain(self.support, self.bs, self.ue, self.network)
        self.kappa = 1.0 / (hole.c_d * self.network.p0 * self.network.serving_gain)

        if scenario.n_ris == 0:
            self.atom = 1.0
        elif scenario.deployment.is_bpp:
            self.atom = 0.0
        else:
            self.atom = math.exp(-scenario.lambda_ris * self.support.area)

    def convergence_margin(self) -> float:
        """1/2 minus the worst-case s_re C_R g(bs, y, ue) / (C_D g(r))"""
        if self.scenario.n_ris == 0:
            return 0.5
        hole = self.scenario.hole
        ratio = (
            self.network.stats.sigma_re_sq * hole.c_r * self.max_gain
            / (hole.c_d * self.network.serving_gain)
        )
        return 0.5 - ratio

    def reflected_signal(self, s: np.ndarray) -> np.ndarray:
        """E[exp(s C_R Q_SR)] on the scenario's support"""
        s = np.asarray(s, dtype=complex)
        if self.scenario.n_ris == 0:
            return np.ones_like(s)
        z = -(s[..., None] * self.scenario.hole.c_r * self.network.p0) * self.gain
        lsr = laplace_gamma_sr(z, self.network.stats).value
        if self.scenario.deployment.is_bpp:
            return (lsr @ self.weight / self.support.area) ** self.scenario.n_ris
        return np.exp(-self.scenario.lambda_ris * ((1.0 - lsr) @ self.weight))

    def problem(self, threshold: float) -> PositivePartProblem:
        base = network_transforms(self.network.replace(threshold=threshold), self.quad)

        def continuous(s: np.ndarray) -> np.ndarray:
            return base.baseline(s) * (self.reflected_signal(s) - self.atom)

        return PositivePartProblem(
            baseline=CachedTransform(base.baseline),
            continuous=CachedTransform(continuous),
            atom=self.atom,
            kappa=self.kappa,
        )


@lru_cache(maxsize=32)
def _variant_transforms(
    scenario: VariantScenario, quad: QuadratureConfig
) -> VariantTransforms:
    return VariantTransforms(scenario, quad)


def variant_transforms(
    scenario: VariantScenario, quad: QuadratureConfig | None = None
) -> VariantTransforms:
    transforms = _variant_transforms(scenario, quad or QuadratureConfig())
    margin = transforms.convergence_margin()
    if margin <= 0:
        raise InfeasibleError(
            "penalized evaluation point lies outside the strip of the "
            "reflected-signal transform",
            margin,
        )
    return transforms


def variant_coverage(
    threshold: float,
    scenario: VariantScenario,
    quad: QuadratureConfig | None = None,
    method: CoverageMethod = CoverageMethod.POSITIVE_PART,
) -> float:
    """P[(C_D Q_SD + C_R Q_SR) / (Q_I + noise) >= T] at the hole center"""
    quad = quad or QuadratureConfig()
    return variant_transforms(scenario, quad).problem(threshold).coverage(quad, method)


def variant_ergodic_rate(
    scenario: VariantScenario,
    quad: QuadratureConfig | None = None,
    threads: int | None = None,
    progress_callback: Callable[[int, str], None] | None = None,
) -> float:
    quad = quad or QuadratureConfig()
    transforms = variant_transforms(scenario, quad)

    def at(t: float) -> float:
        try:
            return transforms.problem(t).coverage(quad, CoverageMethod.DIRECT)
        except NumericalError as exc:
            raise NumericalError(f"coverage failed at t={t:.6g}: {exc}") from exc

    def coverage(ts: np.ndarray) -> np.ndarray:
        return np.array(map_ordered(at, [float(t) for t in ts], threads))

    return rate_from_coverage(coverage, quad, progress_callback)


def _scenario(
    hole_cfg: CoverageHoleConfig,
    base_params: SystemParams,
    model: Deployment,
    n_ris: int,
    wedge_angle: float,
) -> VariantScenario:
    return VariantScenario(
        hole=hole_cfg,
        deployment=model,
        n_ris=n_ris,
        wedge_angle=wedge_angle,
        network=base_params,
    )


def coverage_with_blockage(
    threshold: float,
    hole_cfg: CoverageHoleConfig,
    base_params: SystemParams,
    model: Deployment = Deployment.PPP_RING,
    n_ris: int = 4,
    wedge_angle: float = 90.0,
    quad: QuadratureConfig | None = None,
) -> float:
    return variant_coverage(
        threshold, _scenario(hole_cfg, base_params, model, n_ris, wedge_angle), quad
    )


def relative_gain(
    hole_cfg: CoverageHoleConfig,
    base_params: SystemParams,
    model: Deployment = Deployment.PPP_RING,
    n_ris: int = 4,
    wedge_angle: float = 90.0,
    quad: QuadratureConfig | None = None,
    threads: int | None = None,
) -> float:
    """Ergodic rate with RISs over the rate without, both under C_D"""
    scenario = _scenario(hole_cfg, base_params, model, n_ris, wedge_angle)
    with_ris = variant_ergodic_rate(scenario, quad, threads)
    without = variant_ergodic_rate(scenario.without_ris(), quad, threads)
    logger.info(
        "%s: rate %.5f with RISs, %.5f without", model, with_ris, without
    )
    return with_ris / without


def sample_ue_in_hole(cfg: CoverageHoleConfig, rng: np.random.Generator) -> Point2D:
    """Area-uniform UE position inside the hole (centered at the origin)"""
    x, y = sample_uniform_disc(cfg.hole_radius, 1, rng)[0]
    return Point2D(x=float(x), y=float(y))


def _simulate_variant(
    scenario: VariantScenario,
    simulator: SinrSimulator,
    n: int,
    rng: np.random.Generator,
) -> SinrBatch:
    network = simulator.params
    pl = network.pathloss
    hole = scenario.hole
    bs = scenario.bs.to_array()
    layout = sample_layout_batch(network, n, rng, simulator.r_max)

    if simulator.config.average_ue_in_hole:
        ue = sample_uniform_disc(hole.hole_radius, n, rng)
    else:
        ue = np.zeros((n, 2))

    direct_fade = rayleigh_fade(rng, n)
    q_sd = (
        hole.c_d * network.p0 * np.abs(direct_fade) ** 2
        * pathloss_g(np.linalg.norm(bs - ue, axis=-1), pl.alpha_nlos, pl.beta)
    )

    distance = np.linalg.norm(
        layout.interferers - ue[layout.interferer_sample], axis=-1
    )
    q_id = np.bincount(
        layout.interferer_sample,
        weights=network.p0 * rng.exponential(1.0, distance.size)
        * pathloss_g(distance, pl.alpha_nlos, pl.beta),
        minlength=n,
    )

    support = scenario.support
    if scenario.deployment.is_bpp:
        counts = np.full(n, scenario.n_ris)
    else:
        counts = rng.poisson(scenario.lambda_ris * support.area, n)
    owner = np.repeat(np.arange(n), counts)
    ris = sample_bpp_wedge(owner.size, support, rng)
    eta = draw_eta(network, rng, owner.size, simulator.config.eta_mode)
    gain = reflected_path_gain_ue_centric(
        bs, ris, ue[owner], pl.alpha_los, pl.alpha_los, pl.beta
    )
    q_sr = hole.c_r * np.bincount(
        owner, weights=network.p0 * gain * np.abs(eta) ** 2, minlength=n
    )

    return SinrBatch(
        q_sd=q_sd,
        q_sr=q_sr,
        q_id=q_id,
        q_ir=np.zeros(n),
        noise_power=network.noise_power,
        serving_ris=ris,
        serving_ris_sample=owner,
        direct_fade=direct_fade,
        reflected_fade=eta,
    )


def simulate_variant_batch(
    scenario: VariantScenario,
    n: int,
    rng: np.random.Generator | int | None,
    mc_config: MonteCarloConfig | None = None,
) -> SinrBatch:
    """Penalized received powers of n coverage-hole realizations"""
    simulator = SinrSimulator(scenario.network_params(), mc_config)
    size = simulator.config.batch_size
    sizes = [size] * (n // size) + ([n % size] if n % size else [])
    streams = spawn_generators(rng, len(sizes))
    batches = map_ordered(
        lambda i: _simulate_variant(scenario, simulator, sizes[i], streams[i]),
        range(len(sizes)),
        simulator.config.threads,
    )
    return SinrBatch.concatenate(batches)


def estimate_variant_coverage(
    scenario: VariantScenario,
    thresholds: float | np.ndarray,
    n: int,
    rng: np.random.Generator | int | None,
    mc_config: MonteCarloConfig | None = None,
) -> EstimateWithCI | list[EstimateWithCI]:
    check_samples(n)
    batch = simulate_variant_batch(scenario, n, rng, mc_config)
    return coverage_from_sinr(batch.sinr, thresholds)


def estimate_variant_rate(
    scenario: VariantScenario,
    n: int,
    rng: np.random.Generator | int | None,
    mc_config: MonteCarloConfig | None = None,
) -> EstimateWithCI:
    check_samples(n)
    batch = simulate_variant_batch(scenario, n, rng, mc_config)
    return EstimateWithCI.from_samples(np.log1p(batch.sinr))
