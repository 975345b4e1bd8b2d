import math

import numpy as np
import pytest

from risnet.calculation.analytic import (
    cluster_interference_laplace,
    coverage_probability,
    ergodic_rate,
    mean_power_decomposition,
    network_transforms,
    reflected_signal_laplace,
    total_interference_laplace,
    upsilon_transform,
)
from risnet.calculation.montecarlo import (
    MIN_BLOCK_LENGTH,
    batch_channel_taps,
    build_channel_taps,
    check_samples,
    component_sampler,
    coverage_from_sinr,
    empirical_characteristic,
    estimate_coverage,
    estimate_ergodic_rate,
    estimate_laplace,
    estimate_mean_powers,
    ofdm_parseval_check,
    sample_upsilon,
    simulate_sinr_batch,
    simulate_sinr_once,
)
from risnet.core.parallel import map_ordered, spawn_generators, worker_count
from risnet.exceptions import ConfigError, DomainError
from risnet.models.fading import ScatterBookkeeping
from risnet.models.geometry import AnnulusSupport, NetworkSample, Point2D
from risnet.models.simulation import (
    ChannelTaps,
    EstimateWithCI,
    EtaMode,
    MonteCarloConfig,
)
from risnet.utils.fading import sample_gamma_ir
from risnet.utils.geometry import (
    pathloss_g,
    reflected_path_gain_ue_centric,
    sample_mcp_cluster,
)


def test_sample_floor():
    with pytest.raises(DomainError):
        check_samples(99)
    check_samples(100)


# ---------------------------------------------------------------------------
# parallel streams
# ---------------------------------------------------------------------------


def test_map_ordered_keeps_order():
    assert map_ordered(lambda x: x * x, range(20), threads=4) == [
        x * x for x in range(20)
    ]


def test_spawned_streams_are_reproducible():
    first = [g.random() for g in spawn_generators(7, 3)]
    second = [g.random() for g in spawn_generators(7, 3)]
    assert first == second
    assert len(set(first)) == 3


def test_worker_count_prefers_explicit_value(monkeypatch):
    monkeypatch.setattr("risnet.core.parallel.config.RISNET_THREADS", 3)
    assert worker_count() == 3
    assert worker_count(5) == 5


def test_results_do_not_depend_on_thread_count(baseline_params, small_window):
    one = simulate_sinr_batch(
        baseline_params, 300, 11, small_window.model_copy(update={"threads": 1})
    )
    four = simulate_sinr_batch(
        baseline_params, 300, 11, small_window.model_copy(update={"threads": 4})
    )
    np.testing.assert_array_equal(one.sinr, four.sinr)
    np.testing.assert_array_equal(one.q_ir, four.q_ir)
    assert len(one) == 300


# ---------------------------------------------------------------------------
# estimators
# ---------------------------------------------------------------------------


def test_binomial_coverage_estimate():
    sinr = np.array([0.5, 1.0, 2.0, 4.0])
    single = coverage_from_sinr(sinr, 1.0)
    assert single.mean == 0.75
    assert single.std_error == pytest.approx(math.sqrt(0.75 * 0.25 / 4))
    several = coverage_from_sinr(sinr, np.array([0.1, 3.0]))
    assert [e.mean for e in several] == [1.0, 0.25]


def test_ratio_estimate_of_proportional_samples():
    y = np.linspace(1.0, 2.0, 50)
    estimate = EstimateWithCI.ratio(3.0 * y, y)
    assert estimate.mean == pytest.approx(3.0)
    assert estimate.std_error == pytest.approx(0.0, abs=1e-12)


def test_estimate_interval_and_agreement():
    estimate = EstimateWithCI(mean=1.0, std_error=0.1, n=100)
    assert estimate.interval() == pytest.approx((0.804, 1.196))
    assert estimate.agrees_with(1.25)
    assert not estimate.agrees_with(1.5)
    assert estimate.agrees_with(1.5, floor=0.5)


def test_empirical_characteristic_of_normal(rng):
    samples = rng.standard_normal(50_000)
    phi, se = empirical_characteristic(samples, [0.0, 1.0])
    assert phi[0] == pytest.approx(1.0)
    assert abs(phi[1] - math.exp(-0.5)) < 4 * se[1]


# ---------------------------------------------------------------------------
# simulated powers
# ---------------------------------------------------------------------------


def test_direct_signal_is_exponential(snr_params, rng, small_window):
    sampler = component_sampler(snr_params, "q_sd", small_window)
    estimate = estimate_laplace(sampler, 0.0, 20_000, rng)
    assert estimate.mean == pytest.approx(1.0)
    powers = estimate_mean_powers(snr_params, 20_000, rng, small_window)
    expected = snr_params.p0 * snr_params.serving_gain
    assert powers["direct_signal"].agrees_with(expected, k=4.0)
    assert powers["direct_interference"].mean == 0.0


def test_snr_coverage_without_ris(snr_params, rng, small_window, fast_quad):
    params = snr_params.replace(lambda_ris=0.0)
    estimate = estimate_coverage(params, 1.0, 20_000, rng, small_window)
    exact = coverage_probability(1.0, params, fast_quad)
    assert estimate.agrees_with(exact, k=4.0)


def test_exact_eta_mode(snr_params, rng, small_window, fast_quad):
    params = snr_params.replace(
        m_total=40, m_batch=8, scatter_bookkeeping=ScatterBookkeeping.EXACT
    )
    exact_draws = small_window.model_copy(update={"eta_mode": EtaMode.EXACT})
    batch = simulate_sinr_batch(params, 4000, rng, exact_draws)
    assert np.all(batch.q_sr >= 0)
    assert batch.reflected_fade.size == batch.serving_ris.shape[0]
    # E|eta|^2 of the element sum matches the EXACT moments
    expected = mean_power_decomposition(params, fast_quad).reflected_signal
    assert EstimateWithCI.from_samples(batch.q_sr).agrees_with(expected, k=4.0)


def test_single_realization(baseline_params, rng, small_window):
    sample = simulate_sinr_once(baseline_params, rng, small_window)
    assert sample.sinr == pytest.approx(
        (sample.q_sd + sample.q_sr) / (sample.q_i + baseline_params.noise_power)
    )


def test_sinr_without_ris_drops_reflections(baseline_params, rng, small_window):
    batch = simulate_sinr_batch(baseline_params, 200, rng, small_window)
    expected = batch.q_sd / (batch.q_id + batch.noise_power)
    np.testing.assert_allclose(batch.sinr_without_ris, expected)
    quiet = batch.q_ir == 0
    assert np.all(batch.sinr[quiet] >= batch.sinr_without_ris[quiet])


def test_upsilon_sign_matches_coverage(snr_params, rng, small_window):
    batch = simulate_sinr_batch(snr_params, 500, rng, small_window)
    t = snr_params.threshold
    covered = batch.sinr >= t
    # SINR >= T  <=>  Q_SD >= Upsilon
    np.testing.assert_array_equal(covered, batch.q_sd >= batch.upsilon(t))


# ---------------------------------------------------------------------------
# tapped-delay line
# ---------------------------------------------------------------------------


def _layout(ris: np.ndarray) -> NetworkSample:
    return NetworkSample(
        serving_bs=Point2D(x=10.0), interferers=np.empty((0, 2)), clusters=[ris]
    )


def test_tap_delays_are_distinct(baseline_params):
    ris = np.array([[12.0, 1.0], [12.0, 1.0], [8.0, -2.0]])
    taps = build_channel_taps(
        _layout(ris), 1.0 + 0j, np.ones(3, dtype=complex), baseline_params
    )
    assert np.unique(taps.delays).size == 4
    assert taps.delays[0] == int(10.0 // (299792458.0 * taps.t_s))
    assert taps.n_c == taps.delays.max() + 1


def test_taps_need_room_in_block(baseline_params):
    ris = np.array([[300.0, 0.0]])
    with pytest.raises(ConfigError):
        build_channel_taps(
            _layout(ris), 1.0 + 0j, np.ones(1, dtype=complex), baseline_params, n_s=16
        )
    with pytest.raises(ConfigError):
        build_channel_taps(
            _layout(ris), 1.0 + 0j, np.ones(2, dtype=complex), baseline_params
        )


def test_channel_taps_validation():
    with pytest.raises(ConfigError):
        ChannelTaps(delays=[0, 0], gains=[1, 1], n_c=2, n_s=8)
    with pytest.raises(ConfigError):
        ChannelTaps(delays=[0, 5], gains=[1, 1], n_c=4, n_s=8)
    with pytest.raises(ConfigError):
        ChannelTaps(delays=[0, 1], gains=[1, 1], n_c=16, n_s=8)


@pytest.mark.parametrize("n_s", [256, 1024, 4096])
def test_parseval_holds_for_random_taps(rng, n_s):
    delays = rng.choice(64, size=12, replace=False)
    gains = rng.standard_normal(12) + 1j * rng.standard_normal(12)
    taps = ChannelTaps(delays=delays, gains=gains, n_c=64, n_s=n_s)
    check = ofdm_parseval_check(taps)
    assert check.rel_err < 1e-12
    assert check.rhs == pytest.approx(taps.power)


def test_taps_of_simulated_realization(snr_params, rng, small_window):
    params = snr_params.replace(r_in=2.0, r_out=8.0, serving_distance=10.0)
    batch = simulate_sinr_batch(params, 100, rng, small_window)
    i = int(np.argmax(np.bincount(batch.serving_ris_sample, minlength=100)))
    taps = batch_channel_taps(batch, i, params)
    assert taps.delays.size == 1 + np.count_nonzero(batch.serving_ris_sample == i)
    assert ofdm_parseval_check(taps).rel_err < 1e-9


def test_block_grows_with_delay_spread(snr_params):
    # 160 m of reflected path is past the default 1024-sample block
    layout = NetworkSample(
        serving_bs=Point2D(x=100.0),
        interferers=np.empty((0, 2)),
        clusters=[np.array([[130.0, 0.0]])],
    )
    taps = build_channel_taps(
        layout, 1.0 + 0j, np.ones(1, dtype=complex), snr_params
    )
    assert taps.n_c > MIN_BLOCK_LENGTH
    assert taps.n_s == 2 * MIN_BLOCK_LENGTH
    assert ofdm_parseval_check(taps).rel_err < 1e-9


def test_baseline_realization_fits_default_block(snr_params, rng, small_window):
    batch = simulate_sinr_batch(snr_params, 200, rng, small_window)
    for i in np.unique(batch.serving_ris_sample)[:20]:
        taps = batch_channel_taps(batch, int(i), snr_params)
        assert taps.n_c <= taps.n_s
        assert taps.n_s >= MIN_BLOCK_LENGTH
        assert taps.n_s & (taps.n_s - 1) == 0


# ---------------------------------------------------------------------------
# analytic transforms and metrics against simulation
# ---------------------------------------------------------------------------


@pytest.fixture(scope="module")
def wide_window() -> MonteCarloConfig:
    """Leaves about 0.1% of the mean interference outside the field"""
    return MonteCarloConfig(r_max=3000.0, batch_size=256)


def _single_cluster_powers(params, x, n, rng):
    """T Q_c(x) of one interfering BS at (x, 0) and its own RIS cluster"""
    pl = params.pathloss
    support = AnnulusSupport(center=Point2D(x=x), r_in=params.r_in, r_out=params.r_out)
    direct = rng.exponential(1.0, n) * pathloss_g(x, pl.alpha_nlos, pl.beta)
    reflected = np.empty(n)
    for i in range(n):
        ris = sample_mcp_cluster(support, params.lambda_ris, rng)
        gain = reflected_path_gain_ue_centric(
            (x, 0.0), ris, (0.0, 0.0), pl.alpha_los, pl.alpha_ir, pl.beta
        )
        fade = sample_gamma_ir(params.stats, params.beam, rng, ris.shape[0])
        reflected[i] = float(np.sum(gain * fade))
    return params.threshold * params.p0 * (direct + reflected)


@pytest.mark.slow
@pytest.mark.parametrize("x", [150.0, 400.0])
def test_cluster_transform_against_simulation(baseline_params, rng, fast_quad, x):
    powers = _single_cluster_powers(baseline_params, x, 4000, rng)
    points = np.array([0.3, 1.0, 3.0]) / powers.mean()
    analytic = cluster_interference_laplace(
        points, x, baseline_params, fast_quad
    ).require()
    for s, value in zip(points, analytic):
        estimate = EstimateWithCI.from_samples(np.exp(-s * powers))
        assert estimate.agrees_with(float(value.real), k=4.0)


@pytest.mark.slow
def test_total_interference_transform_against_simulation(
    baseline_params, rng, fast_quad, wide_window
):
    t = baseline_params.threshold
    mean = t * mean_power_decomposition(baseline_params, fast_quad).interference
    points = np.array([0.3, 1.0, 3.0]) / mean
    analytic = total_interference_laplace(points, baseline_params, fast_quad).require()
    sampler = component_sampler(baseline_params, "q_i", wide_window)
    for s, value in zip(points, analytic):
        estimate = estimate_laplace(sampler, s * t, 4000, rng)
        assert estimate.agrees_with(float(value.real), k=4.0)


@pytest.mark.slow
def test_reflected_transform_against_simulation(
    baseline_params, rng, fast_quad, small_window
):
    kappa = network_transforms(baseline_params, fast_quad).kappa
    points = np.array([-3.0, -1.0, -0.3, 0.3]) * kappa
    analytic = reflected_signal_laplace(points, baseline_params, fast_quad).require()
    sampler = component_sampler(baseline_params, "q_sr", small_window)
    for s, value in zip(points, analytic):
        # E[exp(s Q_SR)] = E[exp(-(-s) Q_SR)]
        estimate = estimate_laplace(sampler, -s, 4000, rng)
        assert estimate.agrees_with(float(value.real), k=4.0)


@pytest.mark.slow
def test_upsilon_characteristic_against_simulation(
    baseline_params, rng, fast_quad, wide_window
):
    transform = upsilon_transform(baseline_params, fast_quad)
    u = np.array([0.3, 1.0, 3.0]) * transform.kappa
    samples = sample_upsilon(baseline_params, 4000, rng, wide_window)
    empirical, se = empirical_characteristic(samples, u)
    analytic = transform.char_fn(u)
    assert np.all(np.abs(empirical - analytic) <= 4.0 * se)


@pytest.mark.slow
def test_baseline_coverage_against_simulation(
    baseline_params, rng, fast_quad, wide_window
):
    thresholds = [0.1, 1.0, 10.0]
    estimates = estimate_coverage(
        baseline_params, np.array(thresholds), 4000, rng, wide_window
    )
    for t, estimate in zip(thresholds, estimates):
        exact = coverage_probability(t, baseline_params, fast_quad)
        assert estimate.agrees_with(exact, k=4.0, floor=0.01)


@pytest.mark.slow
def test_baseline_rate_against_simulation(
    baseline_params, rng, fast_quad, wide_window
):
    estimate = estimate_ergodic_rate(baseline_params, 4000, rng, wide_window)
    exact = ergodic_rate(baseline_params, fast_quad)
    assert estimate.agrees_with(exact, k=4.0, floor=1e-3)
