import math
import warnings

import numpy as np
import pytest
from scipy import special

from risnet.calculation.analytic import (
    CachedTransform,
    CoverageMethod,
    PositivePartProblem,
    convergence_bound,
    coverage_curve,
    coverage_probability,
    ergodic_rate,
    interference_strip_edge,
    laplace_upsilon_plus,
    mean_power_decomposition,
    mean_power_fd_check,
    negative_probability,
    network_transforms,
    positive_part_direct,
    positive_part_laplace,
    prob_upsilon_negative,
    rate_from_coverage,
    reflected_signal_laplace,
    signal_strip_edge,
    total_interference_laplace,
    upsilon_bilateral,
    upsilon_spec,
)
from risnet.exceptions import InfeasibleError, NumericalError, NumericalWarning
from risnet.models.numerics import QuadratureConfig

# ---------------------------------------------------------------------------
# positive-part machinery on distributions with closed forms
# ---------------------------------------------------------------------------


def exponential(s):
    return 1.0 / (1.0 + np.asarray(s, dtype=complex))


def two_sided_exponential(s):
    s = np.asarray(s, dtype=complex)
    return 1.0 / ((1.0 + s) * (1.0 - s))


def shifted_gamma(s, k=3, c=2.0):
    s = np.asarray(s, dtype=complex)
    return np.exp(s * c) * (1.0 + s) ** -k


@pytest.mark.filterwarnings("ignore::risnet.exceptions.NumericalWarning")
def test_exponential_positive_part():
    quad = QuadratureConfig()
    assert negative_probability(exponential, quad) == pytest.approx(0.0, abs=1e-6)
    assert positive_part_laplace(exponential, 1.0, quad) == pytest.approx(
        0.5, abs=1e-6
    )


def test_two_sided_exponential_positive_part():
    quad = QuadratureConfig()
    assert negative_probability(two_sided_exponential, quad) == pytest.approx(
        0.5, abs=1e-6
    )
    # E[exp(-sX) 1{X > 0}] = (1/2) / (1 + s)
    assert positive_part_laplace(two_sided_exponential, 0.5, quad) == pytest.approx(
        1.0 / 3.0, abs=1e-6
    )


def test_shifted_gamma_positive_part():
    quad = QuadratureConfig()
    k, c, s = 3, 2.0, 1.0
    p_neg = special.gammainc(k, c)
    # int_c^inf e^{-s(g - c)} g^{k-1} e^{-g} / Gamma(k) dg
    expected = math.exp(s * c) * (1 + s) ** -k * special.gammaincc(k, (1 + s) * c)
    assert negative_probability(shifted_gamma, quad) == pytest.approx(p_neg, abs=1e-6)
    assert positive_part_laplace(shifted_gamma, s, quad) == pytest.approx(
        expected, abs=1e-6
    )
    assert positive_part_direct(shifted_gamma, s, quad) == pytest.approx(
        expected + p_neg, abs=1e-6
    )


def test_problem_methods_agree_on_synthetic_split():
    # Upsilon two-sided exponential; the atom carries no mass
    problem = PositivePartProblem(
        baseline=exponential, continuous=two_sided_exponential, atom=0.0, kappa=0.5
    )
    quad = QuadratureConfig()
    positive_part = problem.coverage(quad, CoverageMethod.POSITIVE_PART)
    direct = problem.coverage(quad, CoverageMethod.DIRECT)
    assert positive_part == pytest.approx(5.0 / 6.0, abs=1e-6)
    assert direct == pytest.approx(positive_part, abs=1e-6)


def test_problem_with_atom_only():
    problem = PositivePartProblem(
        baseline=exponential, continuous=lambda s: np.zeros_like(s), atom=1.0, kappa=2.0
    )
    assert problem.coverage(QuadratureConfig(), CoverageMethod.POSITIVE_PART) == (
        pytest.approx(1.0 / 3.0)
    )


def test_cached_transform_evaluates_each_argument_once():
    calls = []

    def fn(s):
        calls.append(s.size)
        return 2.0 * s

    cached = CachedTransform(fn)
    np.testing.assert_allclose(cached(np.array([1.0, 2.0, 1.0])), [2.0, 4.0, 2.0])
    cached(np.array([2.0, 3.0]))
    assert calls == [2, 1]
    assert len(cached) == 3


# ---------------------------------------------------------------------------
# network transforms
# ---------------------------------------------------------------------------


def test_transforms_at_origin(baseline_params, fast_quad):
    assert complex(total_interference_laplace(0.0, baseline_params, fast_quad)) == (
        pytest.approx(1.0)
    )
    assert complex(reflected_signal_laplace(0.0, baseline_params, fast_quad)) == (
        pytest.approx(1.0)
    )


def test_transforms_are_monotone_on_the_real_axis(baseline_params, fast_quad):
    t = network_transforms(baseline_params, fast_quad)
    s = np.array([0.0, 0.1, 0.5, 1.0]) * t.kappa
    interference = t.total_interference(s).real
    reflected = t.reflected_signal(s).real
    assert np.all(np.diff(interference) < 0)
    assert np.all(np.diff(reflected) > 0)


def test_strip_of_convergence(baseline_params, fast_quad):
    spec = upsilon_spec(baseline_params, fast_quad)
    assert spec.s_a < 0 < spec.s_b
    outside = upsilon_bilateral(2.0 * spec.s_b, baseline_params, fast_quad)
    assert not outside.all_in_domain
    assert np.isnan(outside.value).all()


def test_strip_edges(baseline_params, fast_quad):
    t = network_transforms(baseline_params, fast_quad)
    s_b = signal_strip_edge(baseline_params, fast_quad)
    stats = baseline_params.stats
    assert s_b == pytest.approx(
        1.0 / (2.0 * stats.sigma_re_sq * baseline_params.p0 * t.max_signal_gain)
    )
    assert interference_strip_edge(baseline_params, fast_quad) < 0
    spec = upsilon_spec(baseline_params, fast_quad)
    assert spec.s_b == s_b
    assert spec.s_a == min(interference_strip_edge(baseline_params, fast_quad), -1e-300)
    near_edge = reflected_signal_laplace(
        np.array([0.9, 1.1]) * s_b, baseline_params, fast_quad
    )
    assert near_edge.in_domain.tolist() == [True, False]


def test_crowded_clusters_warn_once(snr_params, fast_quad):
    params = snr_params.replace(lambda_bs=3.1e-5)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        coverage_curve([0.5, 1.0, 2.0], params, fast_quad, threads=1)
        coverage_probability(4.0, params, fast_quad)
    crowded = [w for w in caught if "cluster diameter" in str(w.message)]
    assert len(crowded) == 1
    assert issubclass(crowded[0].category, NumericalWarning)


def test_baseline_is_feasible(baseline_params, fast_quad):
    bound = convergence_bound(baseline_params, fast_quad)
    assert bound.feasible
    assert bound.margin > 0.4


def test_oversized_ris_is_infeasible(baseline_params, fast_quad):
    params = baseline_params.replace(m_total=2_000_000)
    assert not convergence_bound(params, fast_quad).feasible
    with pytest.raises(InfeasibleError) as info:
        coverage_probability(1.0, params, fast_quad)
    assert info.value.margin < 0


def test_laplace_plus_outside_strip(baseline_params, fast_quad):
    s_b = network_transforms(baseline_params, fast_quad).s_b
    with pytest.raises(InfeasibleError):
        laplace_upsilon_plus(2.0 * s_b, baseline_params, fast_quad)


def test_mean_powers_match_transform_slopes(baseline_params, fast_quad):
    gaps = mean_power_fd_check(baseline_params, fast_quad)
    assert set(gaps) == {"interference", "reflected_signal"}
    assert max(gaps.values()) < 1e-2


def test_reflected_fraction_grows_with_beamwidth(baseline_params, fast_quad):
    fractions = [
        mean_power_decomposition(
            baseline_params.replace(beamwidth=w), fast_quad
        ).reflected_fraction
        for w in (3.6, 45.0, 180.0)
    ]
    assert all(0 < f < 1 for f in fractions)
    assert fractions == sorted(fractions)


def test_no_reflected_interference_without_foreign_ris(baseline_params, fast_quad):
    params = baseline_params.replace(include_reflected_interference=False)
    powers = mean_power_decomposition(params, fast_quad)
    assert powers.reflected_interference == 0.0
    assert powers.reflected_fraction == 0.0


# ---------------------------------------------------------------------------
# coverage and rate
# ---------------------------------------------------------------------------


def test_snr_coverage_without_ris(snr_params, fast_quad):
    params = snr_params.replace(lambda_ris=0.0)
    for threshold in (0.1, 1.0, 10.0):
        expected = math.exp(
            -threshold * params.noise_power / (params.p0 * params.serving_gain)
        )
        assert coverage_probability(threshold, params, fast_quad) == pytest.approx(
            expected, rel=1e-10
        )
    assert prob_upsilon_negative(params, fast_quad) == 0.0


def test_coverage_reduces_to_interference_transform(baseline_params, fast_quad):
    params = baseline_params.replace(lambda_ris=0.0, noise_power=0.0)
    kappa = network_transforms(params, fast_quad).kappa
    expected = complex(total_interference_laplace(kappa, params, fast_quad)).real
    assert coverage_probability(params.threshold, params, fast_quad) == (
        pytest.approx(expected, rel=1e-10)
    )


def test_ris_improve_snr_coverage(snr_params, fast_quad):
    without = coverage_probability(1.0, snr_params.replace(lambda_ris=0.0), fast_quad)
    with_ris = coverage_probability(1.0, snr_params, fast_quad)
    assert 0.0 <= without < with_ris <= 1.0


def test_coverage_methods_agree(snr_params, fast_quad):
    split, direct = (
        coverage_probability(1.0, snr_params, fast_quad, method)
        for method in (CoverageMethod.POSITIVE_PART, CoverageMethod.DIRECT)
    )
    assert split == pytest.approx(direct, abs=1e-5)


def test_coverage_curve_is_decreasing(snr_params, fast_quad):
    curve = coverage_curve([0.1, 1.0, 10.0], snr_params, fast_quad, threads=2)
    assert curve.shape == (3,)
    assert np.all((curve >= 0) & (curve <= 1))
    assert np.all(np.diff(curve) < 0)


@pytest.mark.slow
def test_coverage_with_interference_in_unit_interval(baseline_params, fast_quad):
    values = coverage_curve([0.1, 1.0, 10.0], baseline_params, fast_quad)
    assert np.all((values >= 0) & (values <= 1))
    assert np.all(np.diff(values) <= 1e-9)


def test_rate_from_closed_form_coverage():
    # P_c(t) = 1/(1+t) gives int_0^inf dt/(1+t)^2 = 1
    assert rate_from_coverage(lambda t: 1.0 / (1.0 + t)) == pytest.approx(
        1.0, abs=1e-4
    )
    # P_c(t) = exp(-t) gives e E_1(1)
    assert rate_from_coverage(lambda t: np.exp(-t)) == pytest.approx(
        math.e * special.exp1(1.0), abs=1e-4
    )


def test_rate_needs_decaying_coverage():
    with pytest.raises(NumericalError):
        rate_from_coverage(lambda t: np.ones_like(t))


def test_rate_reports_progress():
    messages = []
    rate_from_coverage(
        lambda t: np.exp(-t), progress_callback=lambda p, m: messages.append((p, m))
    )
    assert messages
    assert all(0 <= p <= 95 for p, _ in messages)


def test_snr_rate_without_ris(snr_params, fast_quad):
    params = snr_params.replace(lambda_ris=0.0)
    a = params.noise_power / (params.p0 * params.serving_gain)
    expected = math.exp(a) * special.exp1(a)
    assert ergodic_rate(params, fast_quad, threads=2) == pytest.approx(
        expected, abs=1e-4
    )
