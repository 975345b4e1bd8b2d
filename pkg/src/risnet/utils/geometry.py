"""Pathloss functions and point-process samplers.

The typical UE sits at the origin, the serving BS at (r, 0). Point sets are
returned as (n, 2) arrays.
"""

import logging
import warnings

import numpy as np
from scipy import optimize

from risnet.exceptions import DomainError, NumericalWarning
from risnet.models.geometry import (
    AnnulusSupport,
    LayoutBatch,
    NetworkSample,
    Point2D,
    WedgeSupport,
)
from risnet.models.system import SystemParams
from risnet.utils.numerics import gauss_legendre

logger = logging.getLogger(__name__)

PointLike = Point2D | np.ndarray | tuple[float, float]


def as_xy(point: PointLike) -> np.ndarray:
    if isinstance(point, Point2D):
        return point.to_array()
    return np.asarray(point, dtype=float)


def pathloss_g(d: np.ndarray | float, alpha: float, beta: float) -> np.ndarray:
    """g(d) = beta (d + 1)^-alpha; the +1 removes the singularity at d = 0"""
    d = np.asarray(d, dtype=float)
    if np.any(d < 0):
        raise DomainError("distances must be nonnegative")
    return beta * (d + 1.0) ** (-alpha)


def pathloss_scalar_G(
    x: np.ndarray | float,
    y: np.ndarray | float,
    psi: np.ndarray | float,
    alpha1: float,
    alpha2: float,
    beta: float,
) -> np.ndarray:
    """Gain of the reflected path BS -> RIS -> UE.

    x is the BS-UE distance, y the BS-RIS distance and psi the angle at the
    BS between both links; alpha1 applies to the BS-RIS leg, alpha2 to the
    RIS-UE leg.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x < 0) or np.any(y < 0):
        raise DomainError("distances must be nonnegative")
    second = np.sqrt(np.maximum(x**2 + y**2 - 2.0 * x * y * np.cos(psi), 0.0))
    return pathloss_g(y, alpha1, beta) * pathloss_g(second, alpha2, beta)


def reflected_path_gain_ue_centric(
    bs: PointLike,
    ris: PointLike,
    ue: PointLike,
    alpha1: float,
    alpha2: float,
    beta: float,
) -> np.ndarray:
    """g(|bs - ris|) g(|ris - ue|) for explicit positions (broadcasts over ris)"""
    bs_xy, ris_xy, ue_xy = as_xy(bs), as_xy(ris), as_xy(ue)
    first = np.linalg.norm(ris_xy - bs_xy, axis=-1)
    second = np.linalg.norm(ris_xy - ue_xy, axis=-1)
    return pathloss_g(first, alpha1, beta) * pathloss_g(second, alpha2, beta)


def _sample_sector(
    n: int,
    center: np.ndarray,
    r_in: float,
    r_out: float,
    half_angle: float,
    orientation: float,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Area-uniform points on a sector; returns (points, radii)"""
    radius = np.sqrt(r_in**2 + rng.random(n) * (r_out**2 - r_in**2))
    angle = orientation + rng.uniform(-half_angle, half_angle, n)
    points = np.reshape(center, (-1, 2)) + radius[:, None] * np.column_stack(
        [np.cos(angle), np.sin(angle)]
    )
    return points, radius


def sample_bs_field(
    lambda_bs: float, r: float, r_max: float, rng: np.random.Generator
) -> np.ndarray:
    """Interfering BSs: PPP of density lambda_bs on the annulus r..r_max"""
    if r >= r_max:
        raise DomainError(f"r={r} must be smaller than r_max={r_max}")
    if lambda_bs < 0:
        raise DomainError("'lambda_bs' must be nonnegative")
    n = rng.poisson(lambda_bs * np.pi * (r_max**2 - r**2))
    points, _ = _sample_sector(n, np.zeros(2), r, r_max, np.pi, 0.0, rng)
    return points


def sample_mcp_cluster(
    support: AnnulusSupport, lambda_ris: float, rng: np.random.Generator
) -> np.ndarray:
    """Daughter points of one Matern cluster on its annulus"""
    n = rng.poisson(lambda_ris * support.area) if lambda_ris > 0 else 0
    points, _ = _sample_sector(
        n, support.center.to_array(), support.r_in, support.r_out, np.pi, 0.0, rng
    )
    return points


def sample_bpp_wedge(
    n_ris: int, support: WedgeSupport, rng: np.random.Generator
) -> np.ndarray:
    """Exactly n_ris area-uniform points on a wedge"""
    if n_ris < 0:
        raise DomainError("'n_ris' must be nonnegative")
    points, _ = _sample_sector(
        n_ris,
        support.center.to_array(),
        support.r_in,
        support.r_out,
        support.half_angle,
        support.orientation,
        rng,
    )
    return points


def sample_ppp_wedge(
    lambda_ris: float, support: WedgeSupport, rng: np.random.Generator
) -> np.ndarray:
    """Poisson number of area-uniform points on a wedge"""
    n = rng.poisson(lambda_ris * support.area) if lambda_ris > 0 else 0
    return sample_bpp_wedge(n, support, rng)


def sample_uniform_disc(
    radius: float, n: int, rng: np.random.Generator, center: PointLike = (0.0, 0.0)
) -> np.ndarray:
    if radius < 0:
        raise DomainError("'radius' must be nonnegative")
    if radius == 0:
        return np.tile(as_xy(center), (n, 1))
    r = radius * np.sqrt(rng.random(n))
    angle = rng.uniform(0.0, 2.0 * np.pi, n)
    return as_xy(center) + r[:, None] * np.column_stack([np.cos(angle), np.sin(angle)])


def _tail_antiderivative(x: float, alpha: float) -> float:
    """Antiderivative of x (x+1)^-alpha for alpha > 2"""
    return (x + 1.0) ** (2.0 - alpha) / (2.0 - alpha) - (x + 1.0) ** (1.0 - alpha) / (
        1.0 - alpha
    )


def interference_window_radius(r: float, alpha: float, tail_tol: float = 1e-4) -> float:
    """Radius beyond which the mean interference tail is below tail_tol.

    Solves int_{r_max}^inf x g(x) dx = tail_tol * int_r^inf x g(x) dx with
    the closed-form antiderivative.
    """
    if alpha <= 2:
        raise DomainError("the mean interference diverges for alpha <= 2")

    def tail(x: float) -> float:
        return -_tail_antiderivative(x, alpha)

    target = tail_tol * tail(r)
    upper = 2.0 * (r + 1.0)
    while tail(upper) > target:
        upper *= 2.0
    return float(optimize.brentq(lambda x: tail(x) - target, r, upper, xtol=1e-6))


def cluster_separation_check(params: SystemParams) -> bool:
    """Clusters should stay small against the mean inter-BS distance"""
    if params.lambda_bs <= 0:
        return True
    limit = 1.0 / (2.0 * np.sqrt(params.lambda_bs))
    ok = 2.0 * params.r_out < 0.5 * limit
    if not ok:
        message = (
            f"cluster diameter {2 * params.r_out:.1f} m is not small against "
            f"half the mean BS spacing {limit:.1f} m"
        )
        logger.warning(message)
        warnings.warn(message, NumericalWarning, stacklevel=2)
    return ok


def sample_layout_batch(
    params: SystemParams, n: int, rng: np.random.Generator, r_max: float
) -> LayoutBatch:
    """Independent layouts of n networks drawn in one vectorized pass"""
    r = params.serving_distance
    serving_bs = np.array([r, 0.0])
    area = params.cluster_area

    serving_counts = rng.poisson(params.lambda_ris * area, n)
    serving_ris, _ = _sample_sector(
        int(serving_counts.sum()), serving_bs, params.r_in, params.r_out, np.pi, 0.0,
        rng,
    )

    if params.include_interference and params.lambda_bs > 0:
        bs_counts = rng.poisson(params.lambda_bs * np.pi * (r_max**2 - r**2), n)
        interferers, _ = _sample_sector(
            int(bs_counts.sum()), np.zeros(2), r, r_max, np.pi, 0.0, rng
        )
    else:
        bs_counts = np.zeros(n, dtype=int)
        interferers = np.empty((0, 2))

    if params.include_interference and params.include_reflected_interference:
        ris_counts = rng.poisson(params.lambda_ris * area, interferers.shape[0])
    else:
        ris_counts = np.zeros(interferers.shape[0], dtype=int)
    owners = np.repeat(np.arange(interferers.shape[0]), ris_counts)
    interfering_ris, radius = _sample_sector(
        owners.size, interferers[owners], params.r_in, params.r_out, np.pi, 0.0, rng
    )

    return LayoutBatch(
        n_samples=n,
        serving_bs=serving_bs,
        serving_ris=serving_ris,
        serving_ris_sample=np.repeat(np.arange(n), serving_counts),
        interferers=interferers,
        interferer_sample=np.repeat(np.arange(n), bs_counts),
        interfering_ris=interfering_ris,
        interfering_ris_owner=owners,
        interfering_ris_radius=radius,
    )


def sample_network(
    params: SystemParams, rng: np.random.Generator, r_max: float
) -> NetworkSample:
    """A single layout: serving BS, interferers and every BS's RIS cluster"""
    return sample_layout_batch(params, 1, rng, r_max).network(0)


def sector_quadrature(
    r_in: float,
    r_out: float,
    n_radial: int,
    n_angular: int,
    half_angle: float = np.pi,
    orientation: float = 0.0,
    even: bool = True,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Gauss-Legendre tensor grid for integrals of f(y, psi) y dy dpsi.

    With ``even`` the integrand is assumed symmetric about ``orientation`` and
    only one half of the sector is sampled, with doubled weights.

    Returns:
        Flattened (y, psi, weight) arrays
    """
    y, wy = gauss_legendre(n_radial, r_in, r_out)
    if even:
        psi, wpsi = gauss_legendre(n_angular, 0.0, half_angle)
        wpsi = 2.0 * wpsi
    else:
        psi, wpsi = gauss_legendre(n_angular, -half_angle, half_angle)
    yy, pp = np.meshgrid(y, orientation + psi, indexing="ij")
    weight = (wy * y)[:, None] * wpsi[None, :]
    return yy.ravel(), pp.ravel(), weight.ravel()


def max_reflected_gain(
    x: float, r_in: float, r_out: float, alpha1: float, alpha2: float, beta: float
) -> float:
    """Largest reflected-path gain over the ring around a BS at distance x.

    For fixed y the gain peaks at psi = 0, so the search is one-dimensional:
    a bounded scalar optimization plus the candidates y = r_in and
    y = clamp(x, r_in, r_out), cross-checked on a (y, psi) grid.
    """

    def gain(y: float) -> float:
        return float(pathloss_scalar_G(x, y, 0.0, alpha1, alpha2, beta))

    candidates = [gain(r_in), gain(r_out), gain(min(max(x, r_in), r_out))]
    best = optimize.minimize_scalar(
        lambda y: -gain(y), bounds=(r_in, r_out), method="bounded",
        options={"xatol": 1e-8},
    )
    candidates.append(-float(best.fun))
    ys, psis = np.meshgrid(
        np.linspace(r_in, r_out, 64), np.linspace(-np.pi, np.pi, 65)
    )
    candidates.append(
        float(np.max(pathloss_scalar_G(x, ys, psis, alpha1, alpha2, beta)))
    )
    return max(candidates)
