"""Acceptance checks of the analytic model against its Monte Carlo oracle,
closed forms and the expected trends of the evaluated deployments.

Every check reports a deviation and the bound it must respect; the
reference values of each check are documented on its method.
"""

import logging
import math
import time
from functools import cached_property
from typing import Callable

import numpy as np
from pydantic import BaseModel, ConfigDict
from scipy import special

from risnet.calculation.analytic import (
    CoverageMethod,
    coverage_probability,
    ergodic_rate,
    mean_power_decomposition,
    negative_probability,
    network_transforms,
    positive_part_laplace,
    reflected_signal_laplace,
    total_interference_laplace,
    upsilon_bilateral,
)
from risnet.calculation.montecarlo import (
    batch_channel_taps,
    coverage_from_sinr,
    empirical_characteristic,
    ofdm_parseval_check,
    simulate_sinr_batch,
)
from risnet.calculation.variants import variant_ergodic_rate
from risnet.core.parallel import spawn_generators
from risnet.exceptions import RisnetError
from risnet.models.numerics import QuadratureConfig
from risnet.models.simulation import EstimateWithCI, MonteCarloConfig, SinrBatch
from risnet.models.system import ReferenceScenario, SystemParams
from risnet.models.variants import CoverageHoleConfig, Deployment, VariantScenario
from risnet.utils.fading import sample_zeta, zeta_moments
from risnet.utils.units import db_to_linear

logger = logging.getLogger(__name__)

THRESHOLDS_DB = (-10.0, 0.0, 10.0)
PARSEVAL_BLOCKS = (256, 1024, 4096)

# coarser grids for the rate-based trend checks of a quick run
QUICK_QUADRATURE = QuadratureConfig(
    rel_tol=1e-6,
    cluster_radial_nodes=16,
    cluster_angular_nodes=24,
    signal_radial_nodes=32,
    signal_angular_nodes=64,
)


class CheckResult(BaseModel):
    """Outcome of one acceptance check: passed when deviation respects bound"""

    model_config = ConfigDict(frozen=True)

    name: str
    deviation: float
    bound: float
    passed: bool
    detail: str = ""
    runtime_s: float = 0.0


def _sigma_ratio(estimate: EstimateWithCI, value: float, floor: float = 0.0) -> float:
    """|mean - value| in units of max(floor, 3 SE)"""
    allowed = max(floor, 3.0 * estimate.std_error, 1e-15)
    return abs(estimate.mean - value) / allowed


def _complex_sigma_ratio(empirical: complex, se: float, value: complex) -> float:
    return abs(empirical - value) / max(3.0 * se, 1e-15)


def _max_step(values: list[float]) -> float:
    """Largest consecutive increment; negative when strictly decreasing"""
    return float(np.max(np.diff(values)))


class ValidationSuite:
    """Runs the acceptance checks on the MCP baseline and the variant baseline.

    Args:
        quick: Smaller Monte Carlo runs and coarser trend grids
        seed: Root seed; check ``i`` draws from the i-th child stream
        threads: Worker cap for quadrature sweeps and Monte Carlo batches
        quad: Quadrature settings of the accuracy checks
    """

    def __init__(
        self,
        quick: bool = False,
        seed: int = 0,
        threads: int | None = None,
        quad: QuadratureConfig | None = None,
    ):
        self.quick = quick
        self.seed = seed
        self.threads = threads
        self.quad = quad or QuadratureConfig()
        self.trend_quad = QUICK_QUADRATURE if quick else self.quad
        self.n = 20_000 if quick else 100_000
        self.zeta_samples = 1_000_000 if quick else 10_000_000
        self.parseval_channels = 100
        self.params = ReferenceScenario.MCP_BASELINE.params()
        self.mc_config = MonteCarloConfig(threads=threads)
        # one stream per check plus one for the shared baseline run
        self._streams = spawn_generators(seed, len(self.checks) + 1)

    @property
    def checks(self) -> list[tuple[str, Callable[[np.random.Generator], CheckResult]]]:
        return [
            ("coverage matches Monte Carlo", self.check_coverage_oracle),
            ("ergodic rate matches Monte Carlo", self.check_rate_oracle),
            ("interference transform", self.check_interference_transform),
            ("reflected-signal transform", self.check_reflected_transform),
            ("upsilon characteristic function", self.check_upsilon_transform),
            ("OFDM Parseval identity", self.check_parseval),
            ("product-Rician moments", self.check_zeta_moments),
            ("product-Rician variance identity", self.check_zeta_identity),
            ("positive-part machinery: Exp(1)", self.check_exponential),
            ("positive-part machinery: Laplace", self.check_two_sided_exponential),
            ("positive-part machinery: shifted Gamma", self.check_shifted_gamma),
            ("no-RIS reduction to shot noise", self.check_reduction),
            ("no-RIS reduction matches Monte Carlo", self.check_reduction_oracle),
            ("overlap probability at 10 degrees", self.check_overlap_probability),
            ("reflected fraction grows with overlap", self.check_fraction_overlap),
            ("reflected fraction falls with alpha_ir", self.check_fraction_alpha),
            ("rate falls with RIS density at fixed elements", self.check_density),
            ("hole gain grows with direct penalty", self.check_penalty_monotone),
            ("reflected penalty lowers wedge gain", self.check_reflected_penalty),
            ("BPP gain at least PPP gain", self.check_bpp_over_ppp),
            ("positive-part and direct coverage agree", self.check_method_equivalence),
        ]

    def run(
        self, progress_callback: Callable[[int, str], None] | None = None
    ) -> list[CheckResult]:
        results = []
        checks = self.checks
        for i, (name, check) in enumerate(checks):
            if progress_callback:
                progress_callback(int(100 * i / len(checks)), name)
            start = time.perf_counter()
            try:
                result = check(self._streams[i])
            except RisnetError as exc:
                logger.error("check '%s' raised %s: %s", name, type(exc).__name__, exc)
                result = CheckResult(
                    name=name, deviation=math.inf, bound=0.0, passed=False,
                    detail=f"{type(exc).__name__}: {exc}",
                )
            result = result.model_copy(
                update={"name": name, "runtime_s": time.perf_counter() - start}
            )
            logger.info(
                "%s %s: deviation %.4g, bound %.4g %s",
                "PASS" if result.passed else "FAIL", name, result.deviation,
                result.bound, result.detail,
            )
            results.append(result)
        return results

    @cached_property
    def baseline_batch(self) -> SinrBatch:
        """One Monte Carlo run of the baseline shared by the oracle checks"""
        return simulate_sinr_batch(
            self.params, self.n, self._streams[-1], self.mc_config
        )

    def _result(self, deviation: float, bound: float, detail: str = "") -> CheckResult:
        return CheckResult(
            name="", deviation=deviation, bound=bound, passed=deviation <= bound,
            detail=detail,
        )

    def _strict(self, step: float, detail: str = "") -> CheckResult:
        """Passed only for a negative step"""
        return CheckResult(
            name="", deviation=step, bound=0.0, passed=step < 0.0, detail=detail
        )

    # oracle agreement

    def check_coverage_oracle(self, rng: np.random.Generator) -> CheckResult:
        """|P_c - MC| <= max(0.01, 3 SE) at -10, 0 and 10 dB"""
        thresholds = [db_to_linear(t) for t in THRESHOLDS_DB]
        estimates = coverage_from_sinr(self.baseline_batch.sinr, np.array(thresholds))
        worst = 0.0
        for t, estimate in zip(thresholds, estimates):
            analytic = coverage_probability(t, self.params, self.quad)
            worst = max(worst, _sigma_ratio(estimate, analytic, floor=0.01))
        return self._result(worst, 1.0, f"(n={self.n})")

    def check_rate_oracle(self, rng: np.random.Generator) -> CheckResult:
        """|tau - E[log(1 + SINR)]| <= 3 SE + 1e-3"""
        estimate = EstimateWithCI.from_samples(np.log1p(self.baseline_batch.sinr))
        analytic = ergodic_rate(self.params, self.quad, self.threads)
        allowed = 3.0 * estimate.std_error + 1e-3
        return self._result(
            abs(analytic - estimate.mean) / allowed, 1.0,
            f"(analytic {analytic:.5f}, MC {estimate.mean:.5f})",
        )

    def check_interference_transform(self, rng: np.random.Generator) -> CheckResult:
        """E[exp(-s T Q_I)] at s spread around 1/E[T Q_I]"""
        batch = self.baseline_batch
        mean = self.params.threshold * mean_power_decomposition(
            self.params, self.quad
        ).interference
        points = np.array([0.1, 0.3, 1.0, 3.0, 10.0]) / mean
        analytic = total_interference_laplace(points, self.params, self.quad).require()
        worst = max(
            _sigma_ratio(
                EstimateWithCI.from_samples(
                    np.exp(-s * self.params.threshold * batch.q_i)
                ),
                float(value.real),
            )
            for s, value in zip(points, analytic)
        )
        return self._result(worst, 1.0)

    def check_reflected_transform(self, rng: np.random.Generator) -> CheckResult:
        """E[exp(s Q_SR)] for s on both sides of 0, well inside the strip"""
        t = network_transforms(self.params, self.quad)
        points = np.array([-3.0, -1.0, -0.3, 0.3, 1.0]) * t.kappa
        analytic = reflected_signal_laplace(points, self.params, self.quad).require()
        worst = max(
            _sigma_ratio(
                EstimateWithCI.from_samples(np.exp(s * self.baseline_batch.q_sr)),
                float(value.real),
            )
            for s, value in zip(points, analytic)
        )
        return self._result(worst, 1.0)

    def check_upsilon_transform(self, rng: np.random.Generator) -> CheckResult:
        """E[exp(iu Upsilon)] = B_Upsilon(-iu) at u spread around kappa"""
        t = network_transforms(self.params, self.quad)
        u = np.array([0.1, 0.3, 1.0, 3.0, 10.0]) * t.kappa
        analytic = upsilon_bilateral(-1j * u, self.params, self.quad).require()
        empirical, se = empirical_characteristic(
            self.baseline_batch.upsilon(self.params.threshold), u
        )
        worst = max(
            _complex_sigma_ratio(complex(e), float(s), complex(a))
            for e, s, a in zip(empirical, se, analytic)
        )
        return self._result(worst, 1.0)

    # identities

    def check_parseval(self, rng: np.random.Generator) -> CheckResult:
        """Mean subcarrier power equals summed tap power on random channels"""
        # short links keep the delay spread inside the smallest block
        params = self.params.replace(
            serving_distance=10.0, r_in=2.0, r_out=8.0, include_interference=False
        )
        batch = simulate_sinr_batch(params, self.parseval_channels, rng, self.mc_config)
        worst = max(
            ofdm_parseval_check(batch_channel_taps(batch, i, params, n_s=n_s)).rel_err
            for i in range(self.parseval_channels)
            for n_s in PARSEVAL_BLOCKS
        )
        return self._result(worst, 1e-9)

    def check_zeta_moments(self, rng: np.random.Generator) -> CheckResult:
        """E|zeta| and E|zeta|^2 of K=1 product-Rician draws"""
        law = self.params.fading
        moments = zeta_moments(law)
        chunk = 1_000_000
        sums = np.zeros(3)
        for start in range(0, self.zeta_samples, chunk):
            size = min(chunk, self.zeta_samples - start)
            mod = np.abs(sample_zeta(law, rng, size))
            sums += [mod.sum(), (mod**2).sum(), (mod**4).sum()]
        n = self.zeta_samples
        first = sums[0] / n
        second = sums[1] / n
        se_first = math.sqrt(max(second - first**2, 0.0) / n)
        se_second = math.sqrt(max(sums[2] / n - second**2, 0.0) / n)
        worst = max(
            abs(first - moments.mean_abs) / (3.0 * se_first),
            abs(second - moments.second_moment) / (3.0 * se_second),
        )
        return self._result(
            worst, 1.0, f"(E|zeta| {first:.6f} vs {moments.mean_abs:.6f})"
        )

    def check_zeta_identity(self, rng: np.random.Generator) -> CheckResult:
        """V = E|zeta|^2 - (E|zeta|)^2 with unit leg powers"""
        moments = zeta_moments(self.params.fading)
        deviation = abs(moments.var_abs - (1.0 - moments.mean_abs**2))
        return self._result(deviation, 1e-12)

    # positive-part machinery on closed forms

    def _machinery(
        self,
        transform: Callable[[np.ndarray], np.ndarray],
        s: float,
        laplace_plus: float,
        p_negative: float,
    ) -> CheckResult:
        p_neg = negative_probability(transform, self.quad)
        l_plus = positive_part_laplace(transform, s, self.quad, p_negative=p_neg)
        deviation = max(abs(p_neg - p_negative), abs(l_plus - laplace_plus))
        return self._result(
            deviation, 1e-5, f"(P[X<0] {p_neg:.8f}, L+ {l_plus:.8f})"
        )

    def check_exponential(self, rng: np.random.Generator) -> CheckResult:
        """X ~ Exp(1): L+(1) = 1/2 and P[X < 0] = 0"""
        return self._machinery(lambda s: 1.0 / (1.0 + s), 1.0, 0.5, 0.0)

    def check_two_sided_exponential(self, rng: np.random.Generator) -> CheckResult:
        """X = E1 - E2: L+(1/2) = 1/3 and P[X < 0] = 1/2"""
        return self._machinery(
            lambda s: 1.0 / ((1.0 + s) * (1.0 - s)), 0.5, 1.0 / 3.0, 0.5
        )

    def check_shifted_gamma(self, rng: np.random.Generator) -> CheckResult:
        """X = Gamma(3, 1) - 2 evaluated at s = 1"""
        k, c, s = 3.0, 2.0, 1.0
        laplace_plus = (
            math.exp(s * c) * (1.0 + s) ** (-k) * special.gammaincc(k, (1.0 + s) * c)
        )
        return self._machinery(
            lambda z: np.exp(z * c) * (1.0 + z) ** (-k),
            s, float(laplace_plus), float(special.gammainc(k, c)),
        )

    # reduction without RISs

    @cached_property
    def reduced_params(self) -> SystemParams:
        return self.params.replace(lambda_ris=0.0, noise_power=0.0)

    def check_reduction(self, rng: np.random.Generator) -> CheckResult:
        """Coverage equals L_{T Q_I}(kappa) when there are no RISs and no noise"""
        params = self.reduced_params
        kappa = network_transforms(params, self.quad).kappa
        worst = 0.0
        for t in THRESHOLDS_DB:
            p = params.replace(threshold=db_to_linear(t))
            closed = total_interference_laplace(kappa, p, self.quad).require().real
            analytic = coverage_probability(p.threshold, p, self.quad)
            worst = max(worst, abs(analytic - float(closed)))
        return self._result(worst, 1e-6)

    def check_reduction_oracle(self, rng: np.random.Generator) -> CheckResult:
        params = self.reduced_params
        batch = simulate_sinr_batch(params, self.n, rng, self.mc_config)
        thresholds = [db_to_linear(t) for t in THRESHOLDS_DB]
        estimates = coverage_from_sinr(batch.sinr, np.array(thresholds))
        worst = max(
            _sigma_ratio(estimate, coverage_probability(t, params, self.quad))
            for t, estimate in zip(thresholds, estimates)
        )
        return self._result(worst, 1.0)

    # trends of the MCP model

    def check_overlap_probability(self, rng: np.random.Generator) -> CheckResult:
        overlap = self.params.replace(beamwidth=10.0).beam.overlap_prob
        return self._result(abs(overlap - 0.0278), 5e-5, f"({overlap:.6f})")

    def _fractions(self, **changes: float) -> float:
        params = self.params.replace(**changes)
        return mean_power_decomposition(params, self.trend_quad).reflected_fraction

    def check_fraction_overlap(self, rng: np.random.Generator) -> CheckResult:
        fractions = [
            self._fractions(beamwidth=b) for b in (3.6, 10.0, 20.0, 45.0, 90.0)
        ]
        return self._strict(_max_step([-f for f in fractions]))

    def check_fraction_alpha(self, rng: np.random.Generator) -> CheckResult:
        fractions = [
            self._fractions(beamwidth=10.0, alpha_ir=a) for a in (3.0, 3.5, 4.0)
        ]
        return self._strict(
            _max_step(fractions),
            f"({', '.join(f'{f:.4g}' for f in fractions)})",
        )

    def check_density(self, rng: np.random.Generator) -> CheckResult:
        """Rate across mean RIS counts with 10^4 elements per cluster"""
        counts = (1.0, 5.0, 20.0) if self.quick else (1.0, 2.0, 5.0, 10.0, 20.0)
        rates = [
            ergodic_rate(
                self.params.replace(mean_ris_per_cluster=m).with_element_budget(
                    10_000, 5
                ),
                self.trend_quad,
                self.threads,
            )
            for m in counts
        ]
        return self._strict(
            _max_step(rates),
            f"(rates {', '.join(f'{r:.5f}' for r in rates)})",
        )

    # trends of the coverage-hole variants

    @property
    def penalty_grid_db(self) -> tuple[float, ...]:
        return (0.0, 2.5, 5.0) if self.quick else (0.0, 1.0, 2.0, 3.0, 4.0, 5.0)

    @cached_property
    def hole_gains(self) -> dict[str, list[float]]:
        """Relative rate gains per deployment over the direct-penalty grid"""
        network = ReferenceScenario.VARIANT_BASELINE.params()
        cases = {
            "ppp_ring": (Deployment.PPP_RING, 1.0),
            "ppp_wedge": (Deployment.PPP_WEDGE, 1.0),
            "ppp_wedge_penalized": (Deployment.PPP_WEDGE, db_to_linear(-3.0)),
            "bpp_ring": (Deployment.BPP_RING, 1.0),
            "bpp_wedge": (Deployment.BPP_WEDGE, 1.0),
        }
        gains: dict[str, list[float]] = {name: [] for name in cases}
        for c_d_db in self.penalty_grid_db:
            c_d = db_to_linear(-c_d_db)
            without = variant_ergodic_rate(
                VariantScenario(
                    hole=CoverageHoleConfig(c_d=c_d), n_ris=0, network=network
                ),
                self.trend_quad,
                self.threads,
            )
            for name, (deployment, c_r) in cases.items():
                scenario = VariantScenario(
                    hole=CoverageHoleConfig(c_d=c_d, c_r=c_r),
                    deployment=deployment,
                    network=network,
                )
                rate = variant_ergodic_rate(scenario, self.trend_quad, self.threads)
                gains[name].append(rate / without)
            logger.debug("C_D=%.1f dB gains %s", c_d_db, gains)
        return gains

    def check_penalty_monotone(self, rng: np.random.Generator) -> CheckResult:
        gains = self.hole_gains
        worst = max(
            -min(np.diff(gains[name]))
            for name in ("ppp_ring", "ppp_wedge", "bpp_ring", "bpp_wedge")
        )
        return self._result(float(worst), 0.0)

    def check_reflected_penalty(self, rng: np.random.Generator) -> CheckResult:
        gains = self.hole_gains
        step = float(
            np.max(np.subtract(gains["ppp_wedge_penalized"], gains["ppp_wedge"]))
        )
        return self._strict(step)

    def check_bpp_over_ppp(self, rng: np.random.Generator) -> CheckResult:
        gains = self.hole_gains
        worst = max(
            float(np.max(np.subtract(gains["ppp_ring"], gains["bpp_ring"]))),
            float(np.max(np.subtract(gains["ppp_wedge"], gains["bpp_wedge"]))),
        )
        return self._result(worst, 0.0)

    def check_method_equivalence(self, rng: np.random.Generator) -> CheckResult:
        worst = 0.0
        for t in THRESHOLDS_DB:
            threshold = db_to_linear(t)
            positive_part = coverage_probability(
                threshold, self.params, self.quad, CoverageMethod.POSITIVE_PART
            )
            direct = coverage_probability(
                threshold, self.params, self.quad, CoverageMethod.DIRECT
            )
            worst = max(worst, abs(positive_part - direct))
        return self._result(worst, 1e-6)


def run_validation(
    quick: bool = False,
    seed: int = 0,
    threads: int | None = None,
    progress_callback: Callable[[int, str], None] | None = None,
) -> list[CheckResult]:
    """Run every acceptance check; inspect ``passed`` on the results"""
    results = ValidationSuite(quick, seed, threads).run(progress_callback)
    failed = [r.name for r in results if not r.passed]
    if failed:
        logger.error("%d of %d checks failed: %s", len(failed), len(results), failed)
    else:
        logger.info("all %d checks passed", len(results))
    return results
