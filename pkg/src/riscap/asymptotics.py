"""High-SNR affine expansion and large-RIS limits of the ergodic capacity."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .capacity_bounds import (
    LN2,
    CapacityQuery,
    CapacityResult,
    expected_log_gram,
    hermitian_sqrt,
    mc_log2det,
    split_trials,
    upper_bound,
    wide_log_terms,
)
from .channel_model import EffectiveStats
from .errors import AssumptionViolatedError, InconclusiveError
from ._rng import complex_normal, worker_streams
from .matrix_analysis import DEFAULT_PARAMS, MomentParams, digamma_sum

__all__ = [
    "HighSnrExpansion",
    "PowerScalingVerdict",
    "high_snr_expansion",
    "affine_capacity",
    "slope_empirical",
    "large_m_capacity",
    "large_m_upper_bound",
    "power_scaling",
    "large_m_expansion",
    "mc_power_offset",
]

# power-scaling classification thresholds
DIVERGE_RATIO = 2.0
VANISH_FLOOR = 0.05
PLATEAU_TOL = 0.05


@dataclass(frozen=True)
class HighSnrExpansion:
    """``C ~ slope * (log2(rho) - offset)``; slope in bits/s/Hz per 3 dB."""

    slope: float
    offset: float
    offset_bounds: tuple[float, float] | None = None
    offset_std_error: float | None = None

    def __post_init__(self):
        if self.offset_bounds is not None and self.offset_bounds[0] > self.offset_bounds[1]:
            raise ValueError("offset_bounds must be ordered (lower, upper)")


@dataclass(frozen=True)
class PowerScalingVerdict:
    alpha: float
    limit_kind: str
    finite_value: float | None = None
    trace: tuple = ()


def affine_capacity(expansion: HighSnrExpansion, rho, offset=None):
    """Evaluate the affine high-SNR approximation at linear SNR ``rho``."""
    offset = expansion.offset if offset is None else offset
    return expansion.slope * (np.log2(rho) - offset)


def mc_power_offset(stats: EffectiveStats, trials=100_000, seed=0, workers=1):
    """MC estimate of ``log2 N_t - E ln det(G G^H) / (N_r ln 2)`` and its std error."""
    n_rx, n_tx = stats.g_bar.shape
    root = hermitian_sqrt(stats.psi)
    samples = []
    for rng, count in zip(worker_streams(seed, workers), split_trials(trials, workers)):
        done = 0
        while done < count:
            size = min(4096, count - done)
            G = stats.g_bar + complex_normal(rng, (size, n_rx, n_tx)) @ root
            _, logdet = np.linalg.slogdet(G @ np.conj(np.swapaxes(G, -1, -2)))
            samples.append(logdet)
            done += size
    samples = np.concatenate(samples)
    scale = 1.0 / (n_rx * LN2)
    offset = math.log2(n_tx) - scale * samples.mean()
    return float(offset), float(scale * samples.std(ddof=1) / math.sqrt(samples.size))


def high_snr_expansion(
    stats: EffectiveStats,
    params: MomentParams = DEFAULT_PARAMS,
    trials=100_000,
    seed=0,
    workers=1,
) -> HighSnrExpansion:
    """High-SNR slope and power offset of the effective channel.

    For ``N_r >= N_t`` the offset is exact. For ``N_t > N_r`` it is bracketed
    in closed form and the ``offset`` field holds an MC estimate drawn with
    ``trials`` samples.
    """
    n_rx, n_tx = stats.g_bar.shape
    if n_rx >= n_tx:
        offset = math.log2(n_tx) - expected_log_gram(stats, params) / (n_tx * LN2)
        return HighSnrExpansion(slope=float(n_tx), offset=offset)
    moment, smallest, largest = wide_log_terms(stats, params)
    scale = 1.0 / (n_rx * LN2)
    bounds = (
        math.log2(n_tx) - scale * (largest + moment),
        math.log2(n_tx) - scale * (smallest + moment),
    )
    offset, err = mc_power_offset(stats, trials, seed, workers)
    return HighSnrExpansion(slope=float(n_rx), offset=offset, offset_bounds=bounds, offset_std_error=err)


def slope_empirical(stats: EffectiveStats, rho_low, rho_high, trials=10_000, seed=0, workers=1):
    """Finite-difference slope of the MC capacity in bits per 3 dB.

    Both points reuse the same random draws, so the difference carries little
    MC noise.
    """
    root = hermitian_sqrt(stats.psi)
    n_tx = stats.g_bar.shape[1]
    low = mc_log2det(stats.g_bar, root, rho_low / n_tx, trials, seed, workers).mean()
    high = mc_log2det(stats.g_bar, root, rho_high / n_tx, trials, seed, workers).mean()
    return float((high - low) / math.log2(rho_high / rho_low))


def large_m_capacity(upsilon, n_rx, rho, M, trials=10_000, seed=0, workers=1) -> CapacityResult:
    """MC value of ``E log2 det(I + (M rho / N_t) X upsilon X^H)``."""
    upsilon = np.asarray(upsilon, dtype=complex)
    n_tx = upsilon.shape[0]
    if not np.any(np.abs(upsilon) > 0):
        return CapacityResult(value=0.0, kind="mc", std_error=0.0, trials=trials)
    root = hermitian_sqrt(M * upsilon)
    samples = mc_log2det(np.zeros((n_rx, n_tx)), root, rho / n_tx, trials, seed, workers)
    err = samples.std(ddof=1) / math.sqrt(samples.size) if samples.size > 1 else 0.0
    return CapacityResult(value=max(float(samples.mean()), 0.0), kind="mc", std_error=float(err), trials=trials)


def large_m_upper_bound(upsilon, n_rx, rho, M, params: MomentParams = DEFAULT_PARAMS) -> CapacityResult:
    """Jensen upper bound of the large-RIS capacity (zero mean, covariance ``M upsilon``)."""
    upsilon = np.asarray(upsilon, dtype=complex)
    stats = EffectiveStats(g_bar=np.zeros((n_rx, upsilon.shape[0]), dtype=complex), psi=M * upsilon)
    return upper_bound(CapacityQuery(rho=rho, stats=stats, mc_trials=1), params)


def power_scaling(upsilon, n_rx, rho_base, alpha, m_grid, trials=10_000, seed=0, workers=1) -> PowerScalingVerdict:
    """Classify the large-RIS capacity under transmit power scaled by ``M^-alpha``.

    The capacity at each grid point is the MC value of the large-RIS limit at
    SNR ``rho_base * M^-alpha``; all points share the same draws. The trace
    is called diverging if it increases monotonically and grows more than
    twofold, vanishing if it decreases monotonically below 5 % of its first
    value, and finite if its last two points differ by under 5 %.

    Raises:
        InconclusiveError: if none of the three patterns fits.
    """
    m_grid = [int(m) for m in m_grid]
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if any(b <= a for a, b in zip(m_grid, m_grid[1:])):
        raise ValueError("m_grid must be strictly increasing")
    trace = tuple(
        large_m_capacity(upsilon, n_rx, rho_base * m ** (-alpha), m, trials, seed, workers).value
        for m in m_grid
    )
    steps = np.diff(trace)
    first, last = trace[0], trace[-1]
    if np.all(steps > 0) and last > DIVERGE_RATIO * first:
        kind = "diverges"
    elif np.all(steps < 0) and last < VANISH_FLOOR * first:
        kind = "vanishes"
    elif abs(trace[-1] - trace[-2]) < PLATEAU_TOL * abs(trace[-2]):
        kind = "finite"
    else:
        raise InconclusiveError(f"power-scaling trace {trace} fits no limit pattern", trace=trace)
    finite_value = None
    if kind == "finite":
        finite_value = large_m_capacity(upsilon, n_rx, rho_base, 1, trials, seed, workers).value
    return PowerScalingVerdict(alpha=alpha, limit_kind=kind, finite_value=finite_value, trace=trace)


def large_m_expansion(upsilon, n_tx, n_rx, M, rank_tol=1e-10) -> HighSnrExpansion:
    """Large-RIS high-SNR slope and offset for ``N_r >= N_t``.

    Raises:
        AssumptionViolatedError: if ``upsilon`` is numerically rank deficient
            or ``N_t > N_r``.
    """
    if n_tx > n_rx:
        raise AssumptionViolatedError("the large-RIS offset formula needs N_r >= N_t")
    w = np.linalg.eigvalsh(0.5 * (upsilon + np.conj(upsilon).T))
    if w[-1] <= 0 or w[0] <= rank_tol * w[-1]:
        raise AssumptionViolatedError(
            f"upsilon is rank deficient (eigenvalues {w}); ln det(upsilon) is unbounded"
        )
    log_det = float(np.sum(np.log(w)))
    offset = math.log2(n_tx / M) - (log_det + digamma_sum(n_rx, n_tx)) / (n_tx * LN2)
    return HighSnrExpansion(slope=float(n_tx), offset=offset)
