"""Analytic coverage and ergodic rate of the RIS-assisted MCP network.

Interference and reflected signal are shot noise; their Laplace transforms
follow from the Poisson PGFL with the cluster integrals evaluated on a fixed
Gauss-Legendre (y, psi) grid. Coverage is the positive-part transform of

    Upsilon = T (Q_I + noise) - Q_SR

at kappa = 1/(P0 g(r)). With probability exp(-lambda_RIS * area) a cluster
is empty and Q_SR = 0; that atom is handled in closed form, so the
inversion integrals only see the continuous remainder whose characteristic
function decays fast.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import StrEnum
from functools import lru_cache
from typing import Callable

import numpy as np

from risnet.core.parallel import map_ordered
from risnet.exceptions import InfeasibleError, NumericalError
from risnet.models.numerics import QuadratureConfig, TransformValue
from risnet.models.system import (
    ConvergenceBound,
    MeanPowers,
    SystemParams,
    UpsilonSpec,
)
from risnet.protocols import BilateralTransform
from risnet.utils.fading import laplace_gamma_sr
from risnet.utils.geometry import (
    cluster_separation_check,
    max_reflected_gain,
    pathloss_g,
    pathloss_scalar_G,
    sector_quadrature,
)
from risnet.utils.numerics import (
    find_tail_cutoff,
    geometric_edges,
    gil_pelaez_cdf_at_zero,
    integrate_adaptive,
    principal_value_integral,
)

logger = logging.getLogger(__name__)

# complex entries per intermediate array in the vectorized cluster integrals
_CHUNK_ELEMENTS = 2_000_000


class CoverageMethod(StrEnum):
    """POSITIVE_PART: L_{Upsilon+}(kappa) + P[Upsilon < 0]; DIRECT: single integral"""

    POSITIVE_PART = "positive_part"
    DIRECT = "direct"


class CachedTransform:
    """Memoizes a transform by argument so repeated nodes are computed once"""

    def __init__(self, fn: BilateralTransform):
        self._fn = fn
        self._cache: dict[complex, complex] = {}

    def __call__(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        flat = s.ravel().tolist()
        missing = [v for v in dict.fromkeys(flat) if v not in self._cache]
        if missing:
            values = np.asarray(self._fn(np.array(missing, dtype=complex)))
            self._cache.update(zip(missing, values.tolist()))
        return np.array([self._cache[v] for v in flat], dtype=complex).reshape(
            s.shape
        )

    def __len__(self) -> int:
        return len(self._cache)


class MCPTransforms:
    """Laplace transforms of the MCP network for one parameter set.

    Physical arguments s are in 1/W. Instances are immutable after
    construction and safe to share between threads.
    """

    def __init__(self, params: SystemParams, quad: QuadratureConfig):
        self.params = params
        self.quad = quad
        pl = params.pathloss
        r = params.serving_distance

        self.serving_gain = params.serving_gain
        self.kappa = 1.0 / (params.p0 * self.serving_gain)

        y, psi, weight = sector_quadrature(
            params.r_in, params.r_out, quad.signal_radial_nodes,
            quad.signal_angular_nodes,
        )
        self.signal_weight = weight
        self.signal_gain = pathloss_scalar_G(
            r, y, psi, pl.alpha_los, pl.alpha_los, pl.beta
        )

        self.cluster_y, self.cluster_psi, self.cluster_weight = sector_quadrature(
            params.r_in, params.r_out, quad.cluster_radial_nodes,
            quad.cluster_angular_nodes,
        )

        self.max_signal_gain = max_reflected_gain(
            r, params.r_in, params.r_out, pl.alpha_los, pl.alpha_los, pl.beta
        )
        self.max_interference_gain = max_reflected_gain(
            r, params.r_in, params.r_out, pl.alpha_los, pl.alpha_ir, pl.beta
        )
        self.interference_active = params.include_interference and params.lambda_bs > 0
        self.reflected_interference = (
            self.interference_active
            and params.include_reflected_interference
            and params.lambda_ris > 0
        )
        self.atom = math.exp(-params.lambda_ris * params.cluster_area)
        self.s_a = self._left_edge()
        self.s_b = self._right_edge()

    def _left_edge(self) -> float:
        p = self.params
        if not self.interference_active:
            return -math.inf
        scale = p.p0 * p.threshold
        nearest = pathloss_g(p.serving_distance, p.pathloss.alpha_nlos, p.pathloss.beta)
        edges = [-1.0 / (scale * float(nearest))]
        if self.reflected_interference:
            if p.stats.scatter_count > 0:
                edges.append(
                    -1.0 / (p.stats.scatter_count * scale * self.max_interference_gain)
                )
            if p.stats.sigma_re_sq > 0:
                edges.append(
                    -0.5
                    / (p.stats.sigma_re_sq * scale * self.max_interference_gain)
                )
        return float(max(edges))

    def _right_edge(self) -> float:
        p = self.params
        if p.lambda_ris <= 0 or p.stats.sigma_re_sq <= 0:
            return math.inf
        return 1.0 / (2.0 * p.stats.sigma_re_sq * p.p0 * self.max_signal_gain)

    def interference_path_gain(self, x: np.ndarray) -> np.ndarray:
        """Reflected gain of every grid RIS around a BS at distance x"""
        pl = self.params.pathloss
        return pathloss_scalar_G(
            np.asarray(x, dtype=float)[..., None], self.cluster_y, self.cluster_psi,
            pl.alpha_los, pl.alpha_ir, pl.beta,
        )

    def cluster(self, s: np.ndarray, x: np.ndarray) -> np.ndarray:
        """L_{T Q_c(x)}(s) of one interfering BS and its cluster (broadcasting)"""
        p = self.params
        s = np.asarray(s, dtype=complex)
        x = np.asarray(x, dtype=float)
        scale = p.p0 * p.threshold
        direct = 1.0 / (
            1.0 + s * scale * pathloss_g(x, p.pathloss.alpha_nlos, p.pathloss.beta)
        )
        if not self.reflected_interference:
            return direct

        z = (s * scale)[..., None] * self.interference_path_gain(x)
        overlap = (1.0 - laplace_gamma_sr(z, p.stats).value) @ self.cluster_weight
        scatter = (1.0 - 1.0 / (1.0 + z * p.stats.scatter_count)) @ self.cluster_weight
        q = p.beam.overlap_prob
        exponent = p.lambda_ris * (q * overlap + (1.0 - q) * scatter)
        return direct * np.exp(-exponent)

    def total_interference(self, s: np.ndarray) -> np.ndarray:
        """B_{T Q_I}(s) = exp(-2 pi lambda_BS int_r^inf x (1 - L_c(x, s)) dx)"""
        s = np.asarray(s, dtype=complex)
        if not self.interference_active:
            return np.ones_like(s)
        flat = s.ravel()
        out = np.empty_like(flat)
        per_node = self.cluster_weight.size if self.reflected_interference else 1
        chunk = int(np.clip(_CHUNK_ELEMENTS // (120 * per_node), 1, 4096))
        r = self.params.serving_distance
        for start in range(0, flat.size, chunk):
            part = flat[start : start + chunk]

            def integrand(x: np.ndarray, part: np.ndarray = part) -> np.ndarray:
                return x[:, None] * (1.0 - self.cluster(part[None, :], x[:, None]))

            result = integrate_adaptive(
                integrand, r, np.inf, self.quad, scale=r,
                breakpoints=r * 2.0 ** np.arange(1, 7),
            )
            out[start : start + chunk] = np.exp(
                -2.0 * np.pi * self.params.lambda_bs * result.value
            )
        return out.reshape(s.shape)

    def reflected_signal(self, s: np.ndarray) -> np.ndarray:
        """B_{-Q_SR}(s) = E[exp(s Q_SR)] of the serving cluster"""
        s = np.asarray(s, dtype=complex)
        p = self.params
        if p.lambda_ris <= 0:
            return np.ones_like(s)
        flat = s.ravel()
        out = np.empty_like(flat)
        chunk = max(1, _CHUNK_ELEMENTS // self.signal_gain.size)
        for start in range(0, flat.size, chunk):
            part = flat[start : start + chunk]
            z = -(part[:, None] * p.p0) * self.signal_gain[None, :]
            deficit = (1.0 - laplace_gamma_sr(z, p.stats).value) @ self.signal_weight
            out[start : start + chunk] = np.exp(-p.lambda_ris * deficit)
        return out.reshape(s.shape)

    def baseline(self, s: np.ndarray) -> np.ndarray:
        """Transform of T (Q_I + noise), the part of Upsilon without Q_SR"""
        s = np.asarray(s, dtype=complex)
        p = self.params
        return self.total_interference(s) * np.exp(-s * p.threshold * p.noise_power)

    def upsilon(self, s: np.ndarray) -> np.ndarray:
        return self.baseline(s) * self.reflected_signal(s)

    def upsilon_continuous(self, s: np.ndarray) -> np.ndarray:
        """B_Upsilon minus the empty-cluster atom (a measure of mass 1 - atom)"""
        return self.baseline(s) * (self.reflected_signal(s) - self.atom)

    def problem(self) -> "PositivePartProblem":
        return PositivePartProblem(
            baseline=CachedTransform(self.baseline),
            continuous=CachedTransform(self.upsilon_continuous),
            atom=self.atom,
            kappa=self.kappa,
        )


class UpsilonTransform(CachedTransform):
    """Cached B_Upsilon with its evaluation point and strip of convergence"""

    def __init__(self, transforms: MCPTransforms):
        super().__init__(transforms.upsilon)
        self.kappa = transforms.kappa
        self.s_a = transforms.s_a
        self.s_b = transforms.s_b

    def char_fn(self, u: np.ndarray) -> np.ndarray:
        """E[exp(iu Upsilon)] = B_Upsilon(-iu)"""
        return self(-1j * np.asarray(u, dtype=float))


_separation_checked: set[tuple[float, float]] = set()


def _check_separation_once(params: SystemParams) -> None:
    """Crowded-cluster warning, at most once per (lambda_bs, r_out)"""
    key = (params.lambda_bs, params.r_out)
    if key not in _separation_checked:
        _separation_checked.add(key)
        cluster_separation_check(params)


@lru_cache(maxsize=64)
def _transforms(params: SystemParams, quad: QuadratureConfig) -> MCPTransforms:
    _check_separation_once(params)
    return MCPTransforms(params, quad)


def network_transforms(
    params: SystemParams, quad: QuadratureConfig | None = None
) -> MCPTransforms:
    return _transforms(params, quad or QuadratureConfig())


def upsilon_transform(
    params: SystemParams, quad: QuadratureConfig | None = None
) -> UpsilonTransform:
    return UpsilonTransform(network_transforms(params, quad))


def _probability_cfg(quad: QuadratureConfig, magnitude: float) -> QuadratureConfig:
    """Tighten rel_tol so quadrature errors stay small against probabilities"""
    return quad.model_copy(update={"rel_tol": quad.rel_tol / max(1.0, magnitude)})


def negative_probability(
    transform: BilateralTransform,
    quad: QuadratureConfig | None = None,
    scale: float = 1.0,
    mass: float = 1.0,
) -> float:
    """P[X < 0] from the bilateral transform of X via its characteristic function.

    ``mass`` is the total mass of the measure behind ``transform`` (1 for a
    distribution); the result is the measure of the negative half-line.
    """
    quad = quad or QuadratureConfig()

    def char_fn(u: np.ndarray) -> np.ndarray:
        return transform(-1j * np.asarray(u)) / mass

    if mass <= 0:
        return 0.0
    return mass * gil_pelaez_cdf_at_zero(char_fn, quad, scale)


def positive_part_laplace(
    transform: BilateralTransform,
    s: float,
    quad: QuadratureConfig | None = None,
    scale: float = 1.0,
    mass: float = 1.0,
    p_negative: float | None = None,
) -> float:
    """L_{X+}(s) = E[exp(-sX) 1{X > 0}] through the principal-value identity.

    L_{X+}(s) = PV (1/2 pi i) int (B(s - iu) - B(-iu)) du/u
                + (mass + B(s))/2 - P[X < 0]
    """
    quad = quad or QuadratureConfig()
    b_s = float(np.real(transform(np.array([s], dtype=complex))[0]))
    cfg = _probability_cfg(quad, abs(b_s))

    def g(v: np.ndarray) -> np.ndarray:
        u = np.asarray(v) / scale
        return (transform(s - 1j * u) - transform(-1j * u)) / (2j * np.pi * v)

    pv = principal_value_integral(g, cfg)
    if p_negative is None:
        p_negative = negative_probability(transform, quad, scale, mass)
    return float(np.real(pv) + 0.5 * (mass + b_s) - p_negative)


def positive_part_direct(
    transform: BilateralTransform,
    s: float,
    quad: QuadratureConfig | None = None,
    scale: float = 1.0,
    mass: float = 1.0,
) -> float:
    """L_{X+}(s) + P[X < 0] as one integral; the P[X < 0] terms cancel.

    (mass + B(s))/2 + (1/pi) int_0^inf Im[B(s - iu) - B(-iu)] du/u
    """
    quad = quad or QuadratureConfig()
    b_s = float(np.real(transform(np.array([s], dtype=complex))[0]))
    cfg = _probability_cfg(quad, abs(b_s))

    def integrand(v: np.ndarray) -> np.ndarray:
        u = np.asarray(v) / scale
        return np.imag(transform(s - 1j * u) - transform(-1j * u)) / v

    cutoff, tail = find_tail_cutoff(integrand, cfg)
    if tail >= cfg.tail_tol:
        logger.warning(
            "direct coverage integrand still contributes %.3g at cutoff %.3g",
            tail, cutoff,
        )
    result = integrate_adaptive(
        integrand, 0.0, cutoff, cfg, breakpoints=geometric_edges(1.0, cutoff)
    )
    return float(0.5 * (mass + b_s) + result.value / np.pi)


@dataclass
class PositivePartProblem:
    """Coverage as P[S >= Upsilon] with S ~ Exp(1)/kappa.

    ``baseline`` is the transform of Upsilon restricted to empty clusters
    (weight ``atom``, Upsilon >= 0 there); ``continuous`` is the remainder.
    """

    baseline: BilateralTransform
    continuous: BilateralTransform
    atom: float
    kappa: float
    _p_negative: float | None = field(default=None, repr=False)

    @property
    def scale(self) -> float:
        return 1.0 / self.kappa

    @property
    def mass(self) -> float:
        return 1.0 - self.atom

    def upsilon(self, s: np.ndarray) -> np.ndarray:
        s = np.asarray(s, dtype=complex)
        return self.atom * self.baseline(s) + self.continuous(s)

    def negative_probability(self, quad: QuadratureConfig) -> float:
        if self._p_negative is None:
            self._p_negative = negative_probability(
                self.continuous, quad, self.scale, self.mass
            )
        return self._p_negative

    def laplace_plus(self, s: float, quad: QuadratureConfig) -> float:
        atom_part = self.atom * float(np.real(self.baseline(np.array([s]))[0]))
        if self.mass <= 0:
            return atom_part
        return atom_part + positive_part_laplace(
            self.continuous, s, quad, self.scale, self.mass,
            p_negative=self.negative_probability(quad),
        )

    def coverage(self, quad: QuadratureConfig, method: CoverageMethod) -> float:
        if method is CoverageMethod.POSITIVE_PART:
            value = self.laplace_plus(self.kappa, quad) + self.negative_probability(
                quad
            )
        else:
            value = self.atom * float(np.real(self.baseline(np.array([self.kappa]))[0]))
            if self.mass > 0:
                value += positive_part_direct(
                    self.continuous, self.kappa, quad, self.scale, self.mass
                )
        return float(np.clip(value, 0.0, 1.0))


def cluster_interference_laplace(
    s: np.ndarray | complex,
    x: np.ndarray | float,
    params: SystemParams,
    quad: QuadratureConfig | None = None,
) -> TransformValue:
    """Laplace transform of T Q_c(x): one interfering BS at x and its RISs"""
    t = network_transforms(params, quad)
    s = np.asarray(s, dtype=complex)
    in_domain = np.broadcast_to(s.real > t.s_a, np.broadcast(s, np.asarray(x)).shape)
    safe = np.where(s.real > t.s_a, s, 0.0)
    return TransformValue.evaluate(t.cluster(safe, x), in_domain)


def total_interference_laplace(
    s: np.ndarray | complex,
    params: SystemParams,
    quad: QuadratureConfig | None = None,
) -> TransformValue:
    """B_{T Q_I(r)}(s) of the whole interference field outside radius r"""
    t = network_transforms(params, quad)
    s = np.asarray(s, dtype=complex)
    in_domain = s.real > t.s_a
    return TransformValue.evaluate(
        t.total_interference(np.where(in_domain, s, 0.0)), in_domain
    )


def reflected_signal_laplace(
    s: np.ndarray | complex,
    params: SystemParams,
    quad: QuadratureConfig | None = None,
) -> TransformValue:
    """B_{-Q_SR(r)}(s) = E[exp(s Q_SR)], finite for Re(s) < s_b"""
    t = network_transforms(params, quad)
    s = np.asarray(s, dtype=complex)
    in_domain = s.real < t.s_b
    return TransformValue.evaluate(
        t.reflected_signal(np.where(in_domain, s, 0.0)), in_domain
    )


def convergence_bound(
    params: SystemParams, quad: QuadratureConfig | None = None
) -> ConvergenceBound:
    """Check that kappa = 1/(P0 g(r)) lies inside the strip of B_{-Q_SR}.

    Requires s_re G(r, y, psi) / g(r) < 1/2 on the whole cluster support.
    """
    t = network_transforms(params, quad)
    if params.lambda_ris <= 0:
        return ConvergenceBound(feasible=True, margin=0.5, max_ratio=0.0)
    max_ratio = params.stats.sigma_re_sq * t.max_signal_gain / t.serving_gain
    margin = 0.5 - max_ratio
    return ConvergenceBound(feasible=margin > 0, margin=margin, max_ratio=max_ratio)


def signal_strip_edge(
    params: SystemParams, quad: QuadratureConfig | None = None
) -> float:
    """Right edge s_b of the strip, where B_{-Q_SR} ceases to exist"""
    return network_transforms(params, quad).s_b


def interference_strip_edge(
    params: SystemParams, quad: QuadratureConfig | None = None
) -> float:
    """Left edge s_a of the strip, set by the interference transform"""
    return network_transforms(params, quad).s_a


def upsilon_spec(
    params: SystemParams, quad: QuadratureConfig | None = None
) -> UpsilonSpec:
    return UpsilonSpec(
        params=params,
        s_a=min(interference_strip_edge(params, quad), -1e-300),
        s_b=signal_strip_edge(params, quad),
    )


def upsilon_bilateral(
    s: np.ndarray | complex,
    params: SystemParams,
    quad: QuadratureConfig | None = None,
) -> TransformValue:
    """B_Upsilon(s) = B_{T Q_I}(s) exp(-s T noise) B_{-Q_SR}(s)"""
    t = network_transforms(params, quad)
    s = np.asarray(s, dtype=complex)
    in_domain = (s.real > t.s_a) & (s.real < t.s_b)
    return TransformValue.evaluate(t.upsilon(np.where(in_domain, s, 0.0)), in_domain)


def _require_feasible(params: SystemParams, quad: QuadratureConfig | None) -> None:
    bound = convergence_bound(params, quad)
    if not bound.feasible:
        raise InfeasibleError(
            "evaluation point lies outside the strip of convergence of the "
            "reflected-signal transform",
            bound.margin,
        )


def prob_upsilon_negative(
    params: SystemParams, quad: QuadratureConfig | None = None
) -> float:
    """P[Upsilon < 0], the probability that reflections alone beat T(Q_I + noise)"""
    quad = quad or QuadratureConfig()
    _require_feasible(params, quad)
    t = network_transforms(params, quad)
    if t.atom >= 1.0:
        return 0.0
    return t.problem().negative_probability(quad)


def laplace_upsilon_plus(
    s: float, params: SystemParams, quad: QuadratureConfig | None = None
) -> float:
    """E[exp(-s Upsilon) 1{Upsilon > 0}] for 0 < s < s_b"""
    quad = quad or QuadratureConfig()
    _require_feasible(params, quad)
    t = network_transforms(params, quad)
    if not 0 < s < t.s_b:
        raise InfeasibleError(f"s={s:.6g} outside (0, s_b={t.s_b:.6g})", t.s_b - s)
    return t.problem().laplace_plus(s, quad)


def coverage_probability(
    threshold: float,
    params: SystemParams,
    quad: QuadratureConfig | None = None,
    method: CoverageMethod = CoverageMethod.POSITIVE_PART,
) -> float:
    """P_c(T | r) = L_{Upsilon+}(1/(P0 g(r))) + P[Upsilon < 0]"""
    quad = quad or QuadratureConfig()
    _require_feasible(params, quad)
    if threshold != params.threshold:
        params = params.replace(threshold=threshold)
    t = network_transforms(params, quad)
    value = t.problem().coverage(quad, method)
    logger.debug("coverage T=%.6g (%s): %.8f", threshold, method, value)
    return value


def coverage_curve(
    thresholds: list[float] | np.ndarray,
    params: SystemParams,
    quad: QuadratureConfig | None = None,
    method: CoverageMethod = CoverageMethod.POSITIVE_PART,
    threads: int | None = None,
) -> np.ndarray:
    """Coverage at several thresholds, evaluated concurrently"""
    return np.array(
        map_ordered(
            lambda t: coverage_probability(float(t), params, quad, method),
            list(thresholds),
            threads,
        )
    )


def rate_from_coverage(
    coverage: Callable[[np.ndarray], np.ndarray],
    quad: QuadratureConfig | None = None,
    progress_callback: Callable[[int, str], None] | None = None,
) -> float:
    """tau = int_0^inf P_c(t)/(1+t) dt = int_0^inf P_c(e^v - 1) dv.

    The range ends at the first doubling point v where P_c < rate_tail_tol.
    """
    quad = quad or QuadratureConfig()
    v_max = 1.0
    while float(coverage(np.array([math.expm1(v_max)]))[0]) >= quad.rate_tail_tol:
        v_max *= 2.0
        if v_max > 64.0:
            raise NumericalError("coverage does not decay within t < e^64")

    rounds = 0

    def integrand(v: np.ndarray) -> np.ndarray:
        nonlocal rounds
        rounds += 1
        if progress_callback:
            progress_callback(
                min(95, 10 * rounds), f"rate quadrature round {rounds}: {v.size} nodes"
            )
        return np.asarray(coverage(np.expm1(v)), dtype=float)

    cfg = quad.model_copy(
        update={"rel_tol": max(quad.rel_tol, 1e-5), "abs_tol": max(quad.abs_tol, 1e-6)}
    )
    result = integrate_adaptive(
        integrand, 0.0, v_max, cfg, breakpoints=geometric_edges(0.5, v_max)
    )
    return float(result.value)


def ergodic_rate(
    params: SystemParams,
    quad: QuadratureConfig | None = None,
    threads: int | None = None,
    progress_callback: Callable[[int, str], None] | None = None,
) -> float:
    """Ergodic rate (nats/s/Hz) from coverage evaluated on the substituted axis"""
    quad = quad or QuadratureConfig()
    _require_feasible(params, quad)

    def at(t: float) -> float:
        try:
            return coverage_probability(t, params, quad, CoverageMethod.DIRECT)
        except (NumericalError, InfeasibleError) as exc:
            raise NumericalError(f"coverage failed at t={t:.6g}: {exc}") from exc

    def coverage(ts: np.ndarray) -> np.ndarray:
        return np.array(map_ordered(at, [float(t) for t in ts], threads))

    rate = rate_from_coverage(coverage, quad, progress_callback)
    logger.info("ergodic rate %.6f nats/s/Hz", rate)
    return rate


def mean_power_decomposition(
    params: SystemParams, quad: QuadratureConfig | None = None
) -> MeanPowers:
    """Campbell means of direct/reflected interference and signal powers"""
    quad = quad or QuadratureConfig()
    t = network_transforms(params, quad)
    p = params
    pl = p.pathloss
    stats = p.stats
    r = p.serving_distance

    direct_signal = p.p0 * t.serving_gain
    reflected_signal = (
        p.lambda_ris * stats.mean_power * p.p0 * float(t.signal_gain @ t.signal_weight)
    )

    direct_interference = reflected_interference = 0.0
    if t.interference_active:
        direct_interference = (
            2.0 * np.pi * p.lambda_bs * p.p0
            * integrate_adaptive(
                lambda x: x * pathloss_g(x, pl.alpha_nlos, pl.beta), r, np.inf, quad,
                scale=r,
            ).value
        )
        if t.reflected_interference:
            q = p.beam.overlap_prob
            mean_gamma_ir = q * stats.mean_power + (1.0 - q) * stats.scatter_count
            cluster_gain = integrate_adaptive(
                lambda x: x * (t.interference_path_gain(x) @ t.cluster_weight),
                r, np.inf, quad, scale=r,
            ).value
            reflected_interference = (
                2.0 * np.pi * p.lambda_bs * p.lambda_ris * mean_gamma_ir * p.p0
                * cluster_gain
            )

    return MeanPowers(
        direct_interference=float(direct_interference),
        reflected_interference=float(reflected_interference),
        reflected_signal=float(reflected_signal),
        direct_signal=float(direct_signal),
    )


def mean_power_fd_check(
    params: SystemParams, quad: QuadratureConfig | None = None, step: float = 1e-3
) -> dict[str, float]:
    """Relative gaps between Campbell means and transform derivatives at 0.

    Uses the one-sided second-order difference (-3 f(0) + 4 f(h) - f(2h))/(2h)
    so no argument leaves the half-plane Re(s) >= 0.
    """
    means = mean_power_decomposition(params, quad)
    t = network_transforms(params, quad)
    gaps: dict[str, float] = {}

    interference = params.threshold * means.interference
    if interference > 0:
        h = step / interference
        f = t.total_interference(np.array([0.0, h, 2.0 * h])).real
        slope = -(-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
        gaps["interference"] = abs(slope - interference) / interference

    if means.reflected_signal > 0:
        h = step / means.reflected_signal
        f = t.reflected_signal(np.array([0.0, h, 2.0 * h])).real
        slope = (-3.0 * f[0] + 4.0 * f[1] - f[2]) / (2.0 * h)
        gaps["reflected_signal"] = (
            abs(slope - means.reflected_signal) / means.reflected_signal
        )
    return gaps
