"""Quadrature and transform-inversion helpers.

All integrands are vectorized: they receive a 1-D array of nodes and return
an array whose first axis matches the nodes. Trailing axes are integrated
componentwise and share one subdivision.
"""

import logging
import warnings
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate

from risnet.exceptions import DomainError, NumericalError, NumericalWarning
from risnet.models.numerics import IntegrationResult, QuadratureConfig
from risnet.protocols import CharacteristicFunction, VectorIntegrand

logger = logging.getLogger(__name__)


def integrate_adaptive(
    f: VectorIntegrand,
    a: float,
    b: float,
    cfg: QuadratureConfig | None = None,
    *,
    breakpoints: np.ndarray | list[float] | None = None,
    scale: float = 1.0,
) -> IntegrationResult:
    """Integrate ``f`` over [a, b] with adaptive Gauss-Kronrod subdivision.

    Runs ``scipy.integrate.cubature`` with the 21-point Kronrod rule, which
    hands whole node batches to ``f``. Complex integrands are integrated as
    stacked real and imaginary parts.

    Args:
        f: Vectorized integrand
        a: Lower limit
        b: Upper limit, may be ``np.inf``
        cfg: Tolerances, defaults to ``QuadratureConfig()``
        breakpoints: Interior points used as initial region edges
        scale: Length scale of the map x = a + scale*t/(1-t) for b = inf

    Returns:
        IntegrationResult with the estimate and its error estimate

    Raises:
        NumericalError: subdivision budget exhausted or non-finite integrand values
    """
    cfg = cfg or QuadratureConfig()
    if np.isinf(a):
        raise DomainError("lower integration limit must be finite")
    if b == a:
        return IntegrationResult(value=0.0, error=0.0, n_evals=0)
    if b < a:
        flipped = integrate_adaptive(f, b, a, cfg, breakpoints=breakpoints, scale=scale)
        flipped.value = -flipped.value
        return flipped

    if np.isinf(b):
        if scale <= 0:
            raise DomainError("'scale' must be positive")

        def g(t: np.ndarray) -> np.ndarray:
            x = a + scale * t / (1.0 - t)
            jac = scale / (1.0 - t) ** 2
            fx = np.asarray(f(x))
            return fx * jac.reshape(-1, *([1] * (fx.ndim - 1)))

        lo, hi = 0.0, 1.0
        if breakpoints is not None:
            bp = np.asarray(breakpoints, dtype=float)
            breakpoints = (bp - a) / (bp - a + scale)
    else:
        g = f
        lo, hi = a, b

    n_evals = 0

    def evaluate(x: np.ndarray) -> np.ndarray:
        nonlocal n_evals
        fx = np.asarray(g(x))
        if fx.shape[:1] != x.shape:
            raise DomainError(
                f"integrand returned {fx.shape[:1]} values for {x.size} nodes"
            )
        if not np.all(np.isfinite(fx)):
            raise NumericalError("integrand returned non-finite values")
        n_evals += x.size
        return fx

    is_complex: bool | None = None

    def batched(x: np.ndarray) -> np.ndarray:
        nonlocal is_complex
        fx = evaluate(x[:, 0])
        if is_complex is None:
            is_complex = np.iscomplexobj(fx)
        if is_complex:
            return np.stack([fx.real, fx.imag], axis=-1)
        return fx.real if np.iscomplexobj(fx) else fx

    points = None
    if breakpoints is not None:
        inner = np.unique(np.asarray(breakpoints, dtype=float))
        inner = inner[(inner > lo) & (inner < hi)]
        points = [np.array([p]) for p in inner] or None

    result = integrate.cubature(
        batched,
        np.array([lo]),
        np.array([hi]),
        rule="gk21",
        rtol=cfg.rel_tol,
        atol=cfg.abs_tol,
        max_subdivisions=cfg.max_subdivisions,
        points=points,
    )
    value = np.asarray(result.estimate)
    error = np.asarray(result.error)
    if is_complex:
        value = value[..., 0] + 1j * value[..., 1]
        error = np.hypot(error[..., 0], error[..., 1])
    value = value.item() if value.ndim == 0 else value
    error = float(np.max(error))

    if result.status != "converged":
        raise NumericalError(
            f"no convergence after {result.subdivisions} subdivisions",
            partial=value,
            error_estimate=error,
        )
    return IntegrationResult(
        value=value, error=error, n_evals=n_evals, subdivisions=result.subdivisions
    )


def geometric_edges(start: float, stop: float) -> np.ndarray:
    """Panel edges start, 2*start, 4*start, ... closed at stop"""
    if start <= 0 or stop <= start:
        return np.array([start, stop])
    n = int(np.ceil(np.log2(stop / start)))
    edges = start * 2.0 ** np.arange(n + 1)
    edges[-1] = stop
    return edges


def find_tail_cutoff(
    integrand: Callable[[np.ndarray], np.ndarray],
    cfg: QuadratureConfig,
    start: float = 1.0,
    quiet_panels: int = 3,
    samples: int = 8,
) -> tuple[float, float]:
    """Locate where an integrable tail stops contributing.

    Marches over doubling panels [u, 2u] and estimates each panel's
    contribution as max|integrand|*u. The cutoff is the start of the first of
    ``quiet_panels`` consecutive panels below ``cfg.tail_tol``.

    Returns:
        (cutoff, last panel contribution); the contribution is only above
        ``tail_tol`` when ``cfg.tail_cutoff`` was reached first.
    """
    lo = start
    quiet = 0
    first_quiet = lo
    contribution = np.inf
    while lo < cfg.tail_cutoff:
        hi = min(2.0 * lo, cfg.tail_cutoff)
        u = np.geomspace(lo, hi, samples)
        contribution = float(np.max(np.abs(integrand(u)) * u))
        if contribution < cfg.tail_tol:
            if quiet == 0:
                first_quiet = lo
            quiet += 1
            if quiet == quiet_panels:
                return first_quiet, contribution
        else:
            quiet = 0
        lo = hi
    return cfg.tail_cutoff, contribution


def principal_value_integral(
    g: Callable[[np.ndarray], np.ndarray],
    cfg: QuadratureConfig | None = None,
) -> float | complex:
    """Cauchy principal value of the integral of ``g`` over the real line.

    The integrand is folded onto (0, inf) as g(u) + g(-u), integrated from
    eps, eps/2 and eps/4, and extrapolated to eps -> 0 by two Richardson
    steps.
    """
    cfg = cfg or QuadratureConfig()

    def folded(u: np.ndarray) -> np.ndarray:
        return np.asarray(g(u)) + np.asarray(g(-u))

    eps = cfg.pv_epsilon
    cutoff, tail = find_tail_cutoff(folded, cfg, start=max(1.0, 2 * eps))
    if tail >= cfg.tail_tol:
        _warn(
            f"principal value integrand still contributes {tail:.3g} per panel "
            f"at the cutoff {cutoff:.3g}"
        )

    near = integrate_adaptive(folded, eps / 4, eps / 2, cfg).value
    mid = integrate_adaptive(folded, eps / 2, eps, cfg).value
    far = integrate_adaptive(
        folded, eps, cutoff, cfg, breakpoints=geometric_edges(eps, cutoff)
    ).value

    i_eps = far
    i_half = far + mid
    i_quarter = far + mid + near
    r_eps = 2 * i_half - i_eps
    r_half = 2 * i_quarter - i_half
    value = (4 * r_half - r_eps) / 3

    drift = abs(r_half - r_eps)
    if drift > 1e3 * max(cfg.abs_tol, cfg.rel_tol * abs(value)):
        _warn(
            f"principal value fold does not stabilize near 0 (drift {drift:.3g}); "
            "the singularity may not be a simple pole"
        )
    return value.item() if isinstance(value, np.ndarray) else value


def gil_pelaez_cdf_at_zero(
    char_fn: CharacteristicFunction,
    cfg: QuadratureConfig | None = None,
    scale: float = 1.0,
) -> float:
    """P[X <= 0] = 1/2 - (1/pi) * int_0^inf Im[phi(u)]/u du.

    Args:
        char_fn: Characteristic function of X, vectorized over real u
        cfg: Quadrature settings
        scale: The integral runs over v = u*scale, a normalized frequency

    Returns:
        The probability, clipped to [0, 1]
    """
    cfg = cfg or QuadratureConfig()

    def modulus(v: np.ndarray) -> np.ndarray:
        return np.abs(char_fn(v / scale)) / v

    def integrand(v: np.ndarray) -> np.ndarray:
        return np.imag(char_fn(v / scale)) / v

    cutoff, tail = find_tail_cutoff(modulus, cfg)
    if tail >= cfg.tail_tol:
        _warn(
            f"characteristic function decays slowly: |phi| ~ {tail:.3g} at "
            f"{cutoff:.3g}, inversion error up to ~{tail / np.pi:.3g}"
        )
    result = integrate_adaptive(
        integrand, 0.0, cutoff, cfg, breakpoints=geometric_edges(1.0, cutoff)
    )
    probability = 0.5 - float(result.value) / np.pi
    logger.debug(
        "Gil-Pelaez inversion: P=%.10f cutoff=%.4g err=%.3g evals=%d",
        probability, cutoff, result.error, result.n_evals,
    )
    return float(np.clip(probability, 0.0, 1.0))


@lru_cache(maxsize=64)
def _legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(n)


def gauss_legendre(n: int, a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights of the n-point Gauss-Legendre rule on [a, b]"""
    x, w = _legendre(n)
    half = 0.5 * (b - a)
    return 0.5 * (a + b) + half * x, half * w


def _warn(message: str) -> None:
    logger.warning(message)
    warnings.warn(message, NumericalWarning, stacklevel=3)
