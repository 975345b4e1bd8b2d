import math

import numpy as np
import pytest
from scipy import special, stats

from risnet.exceptions import DomainError, NumericalError
from risnet.models.numerics import QuadratureConfig, TransformValue
from risnet.utils.numerics import (
    find_tail_cutoff,
    gauss_legendre,
    geometric_edges,
    gil_pelaez_cdf_at_zero,
    integrate_adaptive,
    principal_value_integral,
)
from risnet.utils.special import confluent_1f1
from risnet.utils.units import db_to_linear, free_space_beta, linear_to_db, parse_power

# ---------------------------------------------------------------------------
# adaptive quadrature
# ---------------------------------------------------------------------------


def test_polynomial_on_finite_interval():
    result = integrate_adaptive(lambda x: x**2, 0.0, 1.0)
    assert result.value == pytest.approx(1.0 / 3.0, rel=1e-12)
    assert result.n_evals > 0


def test_exponential_on_half_line():
    result = integrate_adaptive(lambda x: np.exp(-x), 0.0, np.inf, scale=1.0)
    assert result.value == pytest.approx(1.0, rel=1e-8)


def test_vector_valued_integrand():
    result = integrate_adaptive(
        lambda x: np.column_stack([np.sin(x), np.cos(x)]), 0.0, np.pi
    )
    assert result.value == pytest.approx([2.0, 0.0], abs=1e-10)


def test_reversed_limits_flip_sign():
    result = integrate_adaptive(lambda x: x, 2.0, 0.0)
    assert result.value == pytest.approx(-2.0)


def test_empty_interval():
    assert integrate_adaptive(lambda x: x, 1.0, 1.0).value == 0.0


def test_non_finite_integrand_raises():
    with pytest.raises(NumericalError):
        integrate_adaptive(lambda x: np.full_like(x, np.nan), 0.0, 1.0)


def test_complex_integrand():
    # int_0^pi e^{ix} dx = 2i
    result = integrate_adaptive(lambda x: np.exp(1j * x), 0.0, np.pi)
    assert np.iscomplexobj(result.value)
    assert result.value == pytest.approx(2j, abs=1e-10)


def test_breakpoint_at_jump():
    cfg = QuadratureConfig(rel_tol=1e-6)
    split = integrate_adaptive(
        lambda x: np.sign(x - 0.3), 0.0, 1.0, cfg, breakpoints=[0.3, 2.0]
    )
    blind = integrate_adaptive(lambda x: np.sign(x - 0.3), 0.0, 1.0, cfg)
    assert split.value == pytest.approx(0.4, abs=1e-12)
    assert blind.value == pytest.approx(0.4, abs=1e-5)
    assert split.subdivisions < blind.subdivisions


def test_panel_budget_exhaustion_raises_with_partial():
    cfg = QuadratureConfig(rel_tol=1e-14, abs_tol=1e-16, max_subdivisions=10)
    with pytest.raises(NumericalError) as info:
        integrate_adaptive(lambda x: np.sign(x - 0.3), 0.0, 1.0, cfg)
    assert info.value.partial is not None
    assert info.value.partial == pytest.approx(0.4, abs=0.05)
    assert info.value.error_estimate > 0


def test_infinite_lower_limit_rejected():
    with pytest.raises(DomainError):
        integrate_adaptive(lambda x: x, -np.inf, 0.0)


def test_gauss_legendre_is_exact_for_low_degree():
    x, w = gauss_legendre(3, 1.0, 3.0)
    assert np.sum(w * x**5) == pytest.approx((3.0**6 - 1.0) / 6.0, rel=1e-12)


def test_geometric_edges():
    np.testing.assert_allclose(geometric_edges(1.0, 10.0), [1, 2, 4, 8, 10])
    np.testing.assert_allclose(geometric_edges(5.0, 2.0), [5.0, 2.0])


def test_tail_cutoff_of_fast_decay():
    cutoff, tail = find_tail_cutoff(lambda u: np.exp(-u), QuadratureConfig())
    assert cutoff < 100.0
    assert tail < QuadratureConfig().tail_tol


# ---------------------------------------------------------------------------
# principal value and Gil-Pelaez inversion
# ---------------------------------------------------------------------------


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_principal_value_with_simple_pole(a):
    # exp(-a|u|)/u is odd and cancels across the pole
    def g(u):
        return np.exp(-a * np.abs(u)) * (1.0 + np.sin(u)) / u

    value = principal_value_integral(g, QuadratureConfig())
    assert np.real(value) == pytest.approx(2.0 * math.atan(1.0 / a), abs=1e-6)


@pytest.mark.parametrize("mu", [-1.0, 0.0, 0.7])
def test_gil_pelaez_normal(mu):
    def char_fn(u):
        return np.exp(1j * mu * u - 0.5 * u**2)

    p = gil_pelaez_cdf_at_zero(char_fn, QuadratureConfig())
    assert p == pytest.approx(stats.norm.cdf(-mu), abs=1e-6)


@pytest.mark.parametrize("shift", [0.5, 2.0, 5.0])
def test_gil_pelaez_shifted_gamma(shift):
    # X = G - c with G ~ Gamma(3, 1)
    def char_fn(u):
        return np.exp(-1j * u * shift) * (1.0 - 1j * u) ** -3

    p = gil_pelaez_cdf_at_zero(char_fn, QuadratureConfig())
    assert p == pytest.approx(special.gammainc(3, shift), abs=1e-6)


def test_gil_pelaez_frequency_scale():
    sigma = 1e-9

    def char_fn(u):
        return np.exp(1j * 0.7 * sigma * u - 0.5 * (sigma * u) ** 2)

    p = gil_pelaez_cdf_at_zero(char_fn, QuadratureConfig(), scale=sigma)
    assert p == pytest.approx(stats.norm.cdf(-0.7), abs=1e-6)


# ---------------------------------------------------------------------------
# transform values, special functions and units
# ---------------------------------------------------------------------------


def test_transform_value_masks_outside_domain():
    value = TransformValue.evaluate(np.array([1.0, 2.0]), np.array([True, False]))
    assert value.value[0] == 1.0
    assert np.isnan(value.value[1])
    with pytest.raises(DomainError):
        value.require()


def test_transform_value_scalar_conversion():
    value = TransformValue.evaluate(np.array([0.25]), np.array([True]))
    assert float(value) == 0.25


def test_confluent_at_zero_and_closed_form():
    assert confluent_1f1(-0.5, 1.0, 0.0) == pytest.approx(1.0)
    for z in (-3.0, -0.5, 0.5, 2.0):
        assert confluent_1f1(1.0, 2.0, z) == pytest.approx(math.expm1(z) / z)


def test_confluent_matches_scipy_for_negative_argument():
    for k in (0.1, 1.0, 10.0):
        assert confluent_1f1(-0.5, 1.0, -k) == pytest.approx(
            special.hyp1f1(-0.5, 1.0, -k), rel=1e-10
        )


def test_confluent_rejects_nonpositive_integer_b():
    with pytest.raises(DomainError):
        confluent_1f1(0.5, -1.0, 1.0)


def test_parse_power():
    assert parse_power("-3dB") == pytest.approx(0.501187, rel=1e-5)
    assert parse_power("10 dB") == pytest.approx(10.0)
    assert parse_power(0.25) == 0.25
    assert parse_power("0.5") == 0.5
    with pytest.raises(ValueError):
        parse_power("three")


def test_db_round_trip_point():
    assert linear_to_db(db_to_linear(-7.0)) == pytest.approx(-7.0)


def test_free_space_beta_conventions():
    amplitude = free_space_beta(2.4e9, squared=False)
    assert amplitude == pytest.approx(299792458.0 / (4 * math.pi * 2.4e9))
    assert free_space_beta(2.4e9) == pytest.approx(amplitude**2)
    with pytest.raises(ValueError):
        free_space_beta(0.0)
