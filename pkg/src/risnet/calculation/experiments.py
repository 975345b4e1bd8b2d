"""Experiment runner: turns an ExperimentConfig into result rows and a CSV.

Scenario outputs in the ``analytic`` column:

    coverage          coverage probability per sweep point
    rate, fig6, fig7  ergodic rate (nats/s/Hz)
    fig5              share of interference power reflected by foreign RISs
    fig8, radii       ergodic rate with RISs over the rate without
    validate          deviation of each acceptance check; ``mc_mean`` holds
                      its bound and ``mc_se`` is NaN

The ``mc_*`` columns hold the Monte Carlo estimate and its standard error,
NaN when ``mc_samples`` is 0.
"""

import logging
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np
import pandas as pd
from pydantic import ValidationError

from risnet.calculation.analytic import (
    coverage_curve,
    coverage_probability,
    ergodic_rate,
    mean_power_decomposition,
)
from risnet.calculation.montecarlo import (
    coverage_from_sinr,
    simulate_sinr_batch,
)
from risnet.calculation.validation import CheckResult, ValidationSuite
from risnet.calculation.variants import relative_gain, simulate_variant_batch
from risnet.core.parallel import spawn_generators
from risnet.models.experiment_config import (
    VARIANT_FIELDS,
    ExperimentConfig,
    ResultRow,
    Scenario,
    VariantSettings,
    config_error,
)
from risnet.models.simulation import EstimateWithCI, MonteCarloConfig, SinrBatch
from risnet.models.system import (
    NetworkSettingsUser,
    ReferenceScenario,
    SystemParams,
)
from risnet.models.variants import CoverageHoleConfig, VariantScenario

logger = logging.getLogger(__name__)

# scenario settings applied below the user's explicit parameters
SCENARIO_DEFAULTS: dict[Scenario, dict[str, Any]] = {
    Scenario.FIG6: {"beamwidth": 3.6},
}


@dataclass(frozen=True)
class SweepPoint:
    value: float
    params: SystemParams
    variant: VariantScenario | None = None


class ExperimentRunner:
    """Evaluates one experiment point by point, in sweep order"""

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.quad = config.quadrature
        self.mc_config = MonteCarloConfig(threads=config.threads)
        self.checks: list[CheckResult] = []
        self.points = self._build_points()

    @property
    def failed_checks(self) -> list[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def _network_settings(self, overrides: dict[str, Any]) -> NetworkSettingsUser:
        values = {
            **SCENARIO_DEFAULTS.get(self.config.scenario, {}),
            **self.config.params.model_dump(exclude_unset=True),
            **overrides,
        }
        if overrides.get("mean_ris_per_cluster") is not None:
            values["lambda_ris"] = None
        preset = (
            ReferenceScenario.VARIANT_BASELINE
            if self.config.scenario is Scenario.FIG8
            else ReferenceScenario.MCP_BASELINE
        )
        return preset.settings(**values)

    def _point(self, field: str | None, value: float) -> SweepPoint:
        scenario = self.config.scenario
        network_overrides: dict[str, Any] = {}
        variant_settings = self.config.variant or VariantSettings()
        hole = variant_settings.hole

        if field is None:
            pass
        elif scenario is Scenario.FIG8 and field in CoverageHoleConfig.model_fields:
            hole = CoverageHoleConfig(**{**hole.model_dump(), field: value})
        elif scenario is Scenario.FIG8 and field in VARIANT_FIELDS:
            cast = int(value) if field == "n_ris" else value
            variant_settings = VariantSettings(
                **{**variant_settings.model_dump(), field: cast}
            )
        else:
            network_overrides[field] = value

        params = SystemParams.from_settings(self._network_settings(network_overrides))
        if scenario is Scenario.FIG7:
            params = params.with_element_budget(
                self.config.total_elements, self.config.users_per_ris
            )

        variant = None
        if scenario is Scenario.FIG8:
            variant = VariantScenario(
                hole=hole,
                deployment=variant_settings.deployment,
                wedge_angle=variant_settings.wedge_angle,
                n_ris=variant_settings.n_ris,
                network=params,
            )
        return SweepPoint(value=value, params=params, variant=variant)

    def _build_points(self) -> list[SweepPoint]:
        """Every sweep point, validated before any computation starts"""
        if self.config.scenario is Scenario.VALIDATE:
            return []
        sweep = self.config.effective_sweep
        try:
            if sweep is None:
                return [self._point(None, math.nan)]
            return [self._point(sweep.field, v) for v in sweep.numeric_values()]
        except ValidationError as exc:
            raise config_error(exc, "sweep point") from exc

    def _stream(self, i: int) -> np.random.Generator:
        return spawn_generators(self.config.seed, len(self.points))[i]

    # per-scenario evaluation

    def _coverage_rows(self) -> list[tuple[float, EstimateWithCI | None]]:
        sweep = self.config.effective_sweep
        if sweep is not None and sweep.field == "threshold":
            # one network stream scored at every threshold
            base = self.points[0].params
            thresholds = [point.value for point in self.points]
            analytic = coverage_curve(
                thresholds, base, self.quad, threads=self.config.threads
            )
            estimates: list[EstimateWithCI | None] = [None] * len(thresholds)
            if self.config.mc_samples:
                batch = simulate_sinr_batch(
                    base, self.config.mc_samples, self._stream(0), self.mc_config
                )
                estimates = coverage_from_sinr(batch.sinr, np.array(thresholds))
            return list(zip(analytic.tolist(), estimates))
        return [self._evaluate(i) for i in range(len(self.points))]

    def _simulate(self, i: int) -> SinrBatch:
        point = self.points[i]
        if point.variant is not None:
            return simulate_variant_batch(
                point.variant, self.config.mc_samples, self._stream(i), self.mc_config
            )
        return simulate_sinr_batch(
            point.params, self.config.mc_samples, self._stream(i), self.mc_config
        )

    def _evaluate(self, i: int) -> tuple[float, EstimateWithCI | None]:
        point = self.points[i]
        params = point.params
        scenario = self.config.scenario
        threads = self.config.threads

        if scenario is Scenario.COVERAGE:
            analytic = coverage_probability(params.threshold, params, self.quad)
        elif scenario is Scenario.FIG5:
            analytic = mean_power_decomposition(params, self.quad).reflected_fraction
        elif scenario is Scenario.FIG8:
            variant = point.variant
            analytic = relative_gain(
                variant.hole, variant.network, variant.deployment, variant.n_ris,
                variant.wedge_angle, self.quad, threads,
            )
        elif scenario is Scenario.RADII:
            analytic = ergodic_rate(params, self.quad, threads) / ergodic_rate(
                params.replace(lambda_ris=0.0), self.quad, threads
            )
        else:
            analytic = ergodic_rate(params, self.quad, threads)

        if not self.config.mc_samples:
            return analytic, None
        batch = self._simulate(i)
        if scenario is Scenario.COVERAGE:
            estimate = coverage_from_sinr(batch.sinr, params.threshold)
        elif scenario is Scenario.FIG5:
            estimate = EstimateWithCI.ratio(batch.q_ir, batch.q_i)
        elif scenario in (Scenario.FIG8, Scenario.RADII):
            estimate = EstimateWithCI.ratio(
                np.log1p(batch.sinr), np.log1p(batch.sinr_without_ris)
            )
        else:
            estimate = EstimateWithCI.from_samples(np.log1p(batch.sinr))
        return analytic, estimate

    def _validation_rows(
        self, progress_callback: Callable[[int, str], None] | None
    ) -> list[ResultRow]:
        suite = ValidationSuite(seed=self.config.seed, threads=self.config.threads)
        self.checks = suite.run(progress_callback)
        return [
            ResultRow(
                sweep_value=float(i),
                analytic=check.deviation,
                mc_mean=check.bound,
                runtime_s=check.runtime_s if self.config.record_runtime else 0.0,
            )
            for i, check in enumerate(self.checks, start=1)
        ]

    def run(
        self, progress_callback: Callable[[int, str], None] | None = None
    ) -> list[ResultRow]:
        scenario = self.config.scenario
        logger.info(
            "running scenario '%s' over %d points (mc_samples=%d, seed=%d)",
            scenario, len(self.points), self.config.mc_samples, self.config.seed,
        )
        if scenario is Scenario.VALIDATE:
            return self._validation_rows(progress_callback)

        start = time.perf_counter()
        if scenario is Scenario.COVERAGE:
            # a threshold sweep is evaluated as a whole
            results = self._coverage_rows()
            elapsed = [(time.perf_counter() - start) / len(results)] * len(results)
        else:
            results, elapsed = [], []
            for i, point in enumerate(self.points):
                if progress_callback:
                    progress_callback(
                        int(100 * i / len(self.points)),
                        f"point {i + 1}/{len(self.points)}: {point.value:.6g}",
                    )
                tic = time.perf_counter()
                results.append(self._evaluate(i))
                elapsed.append(time.perf_counter() - tic)

        sweep = self.config.effective_sweep
        field = sweep.field if sweep else "-"
        rows = []
        for point, (analytic, estimate), runtime in zip(self.points, results, elapsed):
            rows.append(
                ResultRow(
                    sweep_value=point.value,
                    analytic=float(analytic),
                    mc_mean=estimate.mean if estimate else math.nan,
                    mc_se=estimate.std_error if estimate else math.nan,
                    runtime_s=runtime if self.config.record_runtime else 0.0,
                )
            )
            logger.info(
                "%s = %.6g: analytic %.6g, MC %.6g", field, point.value,
                analytic, rows[-1].mc_mean,
            )
        return rows


def write_csv(rows: list[ResultRow], path: str | Path) -> Path:
    """Write rows with the fixed column order and a header line"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = pd.DataFrame(
        [row.model_dump() for row in rows], columns=ResultRow.columns()
    )
    frame.to_csv(path, index=False, float_format="%.10g", na_rep="nan")
    logger.info("wrote %d rows to %s", len(rows), path)
    return path


def run_experiment(
    config: ExperimentConfig,
    progress_callback: Callable[[int, str], None] | None = None,
) -> list[ResultRow]:
    """Evaluate config and write its CSV to config.output_path.

    Raises:
        ConfigError: a sweep value produces invalid parameters
        InfeasibleError: a point lies outside the strip of convergence
    """
    rows = ExperimentRunner(config).run(progress_callback)
    write_csv(rows, config.output_path)
    return rows


def override_config(config: ExperimentConfig, **changes: Any) -> ExperimentConfig:
    """Copy of config with top-level fields replaced and re-validated"""
    data = config.model_dump(exclude_unset=True, by_alias=True)
    data.update({k: v for k, v in changes.items() if v is not None})
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise config_error(exc, "command line overrides") from exc

