"""Small-scale fading laws of the direct and RIS-reflected links."""

import logging
from typing import Callable

import numpy as np

from risnet.exceptions import DomainError
from risnet.models.fading import (
    BeamformStats,
    BeamOverlap,
    RicianSpec,
    ScatterBookkeeping,
    ZetaMoments,
)
from risnet.models.numerics import TransformValue
from risnet.utils.special import confluent_1f1

logger = logging.getLogger(__name__)

ZetaSampler = Callable[[np.random.Generator, int], np.ndarray]


def rician_mean_abs(law: RicianSpec) -> float:
    """E[|rho|] = sqrt(pi P / (4(K+1))) 1F1(-1/2; 1; -K)"""
    k = law.k_factor
    return float(
        np.sqrt(np.pi * law.total_power / (4.0 * (k + 1.0)))
        * confluent_1f1(-0.5, 1.0, -k)
    )


def zeta_moments(law: RicianSpec) -> ZetaMoments:
    """Moments of |zeta| = |rho_1||rho_2| for two i.i.d. legs"""
    mean_abs = rician_mean_abs(law) ** 2
    second_moment = law.total_power**2
    return ZetaMoments(
        mean_abs=mean_abs,
        var_abs=second_moment - mean_abs**2,
        second_moment=second_moment,
    )


def beamform_stats(
    zeta: ZetaMoments,
    m_total: int,
    m_batch: int,
    bookkeeping: ScatterBookkeeping = ScatterBookkeeping.SPLIT,
) -> BeamformStats:
    """Gaussian approximation of eta = sum_{M_o} |zeta| + sum_{M - M_o} zeta.

    Args:
        zeta: Moments of a single element product
        m_total: Elements per RIS (M)
        m_batch: Phase-aligned elements serving the UE (M_o)
        bookkeeping: Variance split of the scattered elements

    Raises:
        DomainError: counts are not 0 < m_batch <= m_total
    """
    if m_total <= 0 or m_batch <= 0:
        raise DomainError("element counts must be positive")
    if m_batch > m_total:
        raise DomainError(f"m_batch={m_batch} exceeds m_total={m_total}")

    scatter = m_total - m_batch
    if bookkeeping is ScatterBookkeeping.SPLIT:
        sigma_re_sq = (m_total + m_batch) * zeta.var_abs / 2.0
        sigma_im_sq = scatter * zeta.var_abs / 2.0
    else:
        sigma_re_sq = m_batch * zeta.var_abs + scatter * zeta.second_moment / 2.0
        sigma_im_sq = scatter * zeta.second_moment / 2.0

    return BeamformStats(
        m_total=m_total,
        m_batch=m_batch,
        mu=m_batch * zeta.mean_abs,
        sigma_re_sq=sigma_re_sq,
        sigma_im_sq=sigma_im_sq,
        bookkeeping=bookkeeping,
    )


def beam_overlap_from_batch(m_batch: int) -> BeamOverlap:
    """Beamwidth 180/M_o degrees of a batch of M_o aligned elements"""
    return BeamOverlap(beamwidth=min(360.0, 180.0 / m_batch))


def laplace_gamma_sr(s: np.ndarray | complex, stats: BeamformStats) -> TransformValue:
    """Laplace transform of gamma_SR = |eta|^2.

    exp(-mu^2 s / (1 + 2 s s_re)) / sqrt((1 + 2 s s_re)(1 + 2 s s_im)),
    valid for Re(s) > -1/(2 s_re).
    """
    s = np.asarray(s, dtype=complex)
    in_domain = 1.0 + 2.0 * s.real * stats.sigma_re_sq > 0
    safe = np.where(in_domain, s, 0.0)
    a = 1.0 + 2.0 * safe * stats.sigma_re_sq
    b = 1.0 + 2.0 * safe * stats.sigma_im_sq
    value = np.exp(-(stats.mu**2) * safe / a) / (np.sqrt(a) * np.sqrt(b))
    return TransformValue.evaluate(value, in_domain)


def laplace_gamma_ir(
    s: np.ndarray | complex, stats: BeamformStats, overlap: BeamOverlap
) -> TransformValue:
    """Overlap mixture: gamma_SR w.p. p, exponential with mean M - M_o otherwise"""
    s = np.asarray(s, dtype=complex)
    p = overlap.overlap_prob
    scatter = stats.scatter_count
    reflected = laplace_gamma_sr(s, stats)
    in_domain = reflected.in_domain & (1.0 + s.real * scatter > 0)
    safe = np.where(in_domain, s, 0.0)
    value = p * np.where(in_domain, reflected.value, 1.0) + (1.0 - p) / (
        1.0 + safe * scatter
    )
    return TransformValue.evaluate(value, in_domain)


def sample_rician(
    law: RicianSpec, rng: np.random.Generator, size: int | tuple[int, ...]
) -> np.ndarray:
    """Complex Rician draws with a uniformly random LoS phase"""
    k = law.k_factor
    los = np.sqrt(law.total_power * k / (k + 1.0)) * np.exp(
        1j * rng.uniform(0.0, 2.0 * np.pi, size)
    )
    scatter = np.sqrt(law.total_power / (2.0 * (k + 1.0))) * (
        rng.standard_normal(size) + 1j * rng.standard_normal(size)
    )
    return los + scatter


def sample_zeta(
    law: RicianSpec, rng: np.random.Generator, size: int | tuple[int, ...]
) -> np.ndarray:
    """zeta = rho_1 rho_2 for independent legs (BS-RIS and RIS-UE)"""
    return sample_rician(law, rng, size) * sample_rician(law, rng, size)


def sample_eta_exact(
    zeta_sampler: ZetaSampler,
    m_total: int,
    m_batch: int,
    rng: np.random.Generator,
    size: int | None = None,
) -> complex | np.ndarray:
    """Beamformed reflection from M explicit element products.

    The first M_o elements are phase aligned (their |zeta| adds coherently),
    the remaining M - M_o add with random phase.
    """
    if m_batch > m_total or m_batch < 0:
        raise DomainError(f"invalid element counts M={m_total}, M_o={m_batch}")
    n = 1 if size is None else int(size)
    out = np.empty(n, dtype=complex)
    rows = max(1, 4_000_000 // max(m_total, 1))
    for start in range(0, n, rows):
        stop = min(n, start + rows)
        zeta = zeta_sampler(rng, (stop - start) * m_total).reshape(-1, m_total)
        out[start:stop] = np.abs(zeta[:, :m_batch]).sum(axis=1) + zeta[
            :, m_batch:
        ].sum(axis=1)
    return complex(out[0]) if size is None else out


def sample_eta_gaussian(
    stats: BeamformStats, rng: np.random.Generator, size: int | tuple[int, ...]
) -> np.ndarray:
    """eta drawn from its Gaussian approximation"""
    re = stats.mu + np.sqrt(stats.sigma_re_sq) * rng.standard_normal(size)
    im = np.sqrt(stats.sigma_im_sq) * rng.standard_normal(size)
    return re + 1j * im


def sample_gamma_ir(
    stats: BeamformStats,
    overlap: BeamOverlap,
    rng: np.random.Generator,
    size: int,
) -> np.ndarray:
    """Reflected-interference fading power of foreign RISs"""
    hit = rng.random(size) < overlap.overlap_prob
    beam = np.abs(sample_eta_gaussian(stats, rng, size)) ** 2
    scatter = rng.exponential(max(stats.scatter_count, 0), size)
    return np.where(hit, beam, scatter)
