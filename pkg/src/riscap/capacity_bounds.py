"""Monte Carlo ergodic capacity and the closed-form capacity bounds.

The effective channel is treated as a transmit-correlated Rician MIMO
channel ``G = g_bar + X psi^{1/2}``. Upper bounds come from Jensen applied to
``E det(I + rho_bar G^H G)`` expanded into principal minors; lower bounds come
from the log-determinant moment of a noncentral Wishart matrix.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.special import logsumexp

from ._rng import as_generator, complex_normal, worker_streams
from .channel_model import EffectiveStats, build_los_matrices
from .errors import CombinatorialLimitError, SingularCovarianceError
from .matrix_analysis import (
    DEFAULT_PARAMS,
    MAX_MINOR_DIM,
    MomentParams,
    digamma_sum,
    generalized_nonzero_eigs,
    logdet_sandwich,
    wishart_F,
    wishart_J,
)

__all__ = [
    "CapacityQuery",
    "CapacityResult",
    "mc_ecc",
    "mc_log2det",
    "mc_ecc_random_phases",
    "upper_bound",
    "lower_bound",
    "bound_pair",
    "hermitian_sqrt",
    "deterministic_capacity",
]

LN2 = math.log(2.0)
KINDS = ("mc", "upper_C1", "upper_C2", "lower_C3", "lower_C4")
_CHUNK = 4096


@dataclass(frozen=True)
class CapacityQuery:
    rho: float
    stats: EffectiveStats
    mc_trials: int = 10_000
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if self.mc_trials < 1:
            raise ValueError("mc_trials must be at least 1")

    @property
    def n_tx(self) -> int:
        return self.stats.n_tx

    @property
    def n_rx(self) -> int:
        return self.stats.n_rx

    @property
    def rho_bar(self) -> float:
        return self.rho / self.n_tx


@dataclass(frozen=True)
class CapacityResult:
    value: float
    kind: str
    std_error: float | None = None
    trials: int | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown result kind {self.kind!r}")
        if (self.std_error is not None) != (self.kind == "mc"):
            raise ValueError("std_error is reported for Monte Carlo results only")

    def row(self, rho_db):
        return {
            "rho_db": rho_db,
            "kind": self.kind,
            "value": self.value,
            "std_error": self.std_error,
            "trials": self.trials,
        }


def hermitian_sqrt(psi, check_psd=True):
    """Hermitian square root via eigendecomposition.

    Eigenvalues below ``-1e-12 * max|eig|`` are rejected; smaller negative
    round-off is clipped to zero.
    """
    psi = 0.5 * (psi + psi.conj().T)
    w, v = np.linalg.eigh(psi)
    floor = 1e-12 * max(np.abs(w).max(), np.finfo(float).tiny)
    if check_psd and w[0] < -floor:
        raise SingularCovarianceError(
            f"covariance has a negative eigenvalue {w[0]:.3e}", eigenvalue=float(w[0])
        )
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def _log2det_batch(G, rho_bar):
    """``log2 det(I + rho_bar G G^H)`` over a stack, using the smaller Gram."""
    if G.shape[-2] >= G.shape[-1]:
        gram = np.conj(np.swapaxes(G, -1, -2)) @ G
    else:
        gram = G @ np.conj(np.swapaxes(G, -1, -2))
    n = gram.shape[-1]
    _, logdet = np.linalg.slogdet(np.eye(n) + rho_bar * gram)
    return logdet / LN2


def split_trials(trials, workers):
    workers = max(1, int(workers))
    base, extra = divmod(trials, workers)
    return [base + (i < extra) for i in range(workers)]


def _mean_and_error(samples):
    n = samples.size
    std = samples.std(ddof=1) if n > 1 else 0.0
    return float(samples.mean()), float(std / math.sqrt(n))


def mc_log2det(g_bar, cov_sqrt, rho_bar, trials, seed=0, workers=1):
    """Per-trial ``log2 det(I + rho_bar G G^H)`` with ``G = g_bar + X cov_sqrt``.

    Trials are split over ``workers`` independent streams spawned from
    ``seed``; the output depends only on ``(seed, workers, trials)``.
    """
    g_bar = np.asarray(g_bar, dtype=complex)
    n_rx, n_tx = g_bar.shape
    out = []
    for rng, count in zip(worker_streams(seed, workers), split_trials(trials, workers)):
        done = 0
        while done < count:
            size = min(_CHUNK, count - done)
            X = complex_normal(rng, (size, n_rx, n_tx))
            out.append(_log2det_batch(g_bar + X @ cov_sqrt, rho_bar))
            done += size
    return np.concatenate(out) if out else np.zeros(0)


def mc_ecc(query: CapacityQuery, rng=None) -> CapacityResult:
    """Monte Carlo ergodic capacity in bits/s/Hz.

    If ``rng`` is given, the master seed is drawn from it instead of taken
    from ``query.seed``.
    """
    seed = query.seed if rng is None else int(as_generator(rng).integers(2**63))
    root = hermitian_sqrt(query.stats.psi)
    samples = mc_log2det(query.stats.g_bar, root, query.rho_bar, query.mc_trials, seed, query.workers)
    mean, err = _mean_and_error(samples)
    return CapacityResult(value=max(mean, 0.0), kind="mc", std_error=err, trials=query.mc_trials)


def mc_ecc_random_phases(config, paths, rho, trials, seed=0, workers=1, los=None) -> CapacityResult:
    """Ergodic capacity with the RIS phases redrawn uniformly in every trial."""
    T, r_bar, h_bar = build_los_matrices(config, paths) if los is None else los
    c = config
    a_ris = math.sqrt(c.beta_t * c.beta_r)
    a_dir = math.sqrt(c.beta_d)
    rho_bar = rho / c.n_tx
    out = []
    for rng, count in zip(worker_streams(seed, workers), split_trials(trials, workers)):
        done = 0
        chunk = max(1, _CHUNK * 16 // max(c.n_ris, 1))
        while done < count:
            size = min(chunk, count - done)
            theta = rng.uniform(-np.pi, np.pi, (size, 1, c.n_ris))
            R = math.sqrt(c.los_power_r) * r_bar + math.sqrt(c.nlos_power_r) * complex_normal(
                rng, (size, c.n_rx, c.n_ris)
            )
            H = math.sqrt(c.los_power_h) * h_bar + math.sqrt(c.nlos_power_h) * complex_normal(
                rng, (size, c.n_rx, c.n_tx)
            )
            G = a_ris * (R * np.exp(1j * theta)) @ T + a_dir * H
            out.append(_log2det_batch(G, rho_bar))
            done += size
    mean, err = _mean_and_error(np.concatenate(out))
    return CapacityResult(value=max(mean, 0.0), kind="mc", std_error=err, trials=trials)


def deterministic_capacity(g_bar, rho_bar):
    """``log2 det(I + rho_bar g_bar g_bar^H)`` for a fixed channel."""
    return float(_log2det_batch(np.asarray(g_bar, dtype=complex)[None], rho_bar)[0])


def _log_expected_minor(sigma_q, psi_q, n_rx, params):
    """``ln E det((G^H G)_Q)`` for one index subset ``Q``.

    Equals ``(N_r - L)!/(N_r - t)! * J * det(psi_Q)``. A zero mean block skips
    the pencil, so singular covariances are allowed in that case.
    """
    t = sigma_q.shape[0]
    sign, logdet_psi = np.linalg.slogdet(psi_q)
    if not np.any(sigma_q):
        if sign.real <= 0:
            return -math.inf
        return float(logdet_psi) + math.lgamma(n_rx + 1) - math.lgamma(n_rx - t + 1)
    eigs = generalized_nonzero_eigs(sigma_q, psi_q, params)
    L = len(eigs)
    J = wishart_J(eigs, n_rx, params)
    return (
        float(logdet_psi)
        + math.log(J)
        + math.lgamma(n_rx - L + 1)
        - math.lgamma(n_rx - t + 1)
    )


def upper_bound(query: CapacityQuery, params: MomentParams = DEFAULT_PARAMS) -> CapacityResult:
    """Jensen upper bound (C1 for N_r >= N_t, C2 otherwise).

    Subsets ``Q`` of the transmit indices are enumerated in lexicographic
    order up to size ``min(N_t, N_r)``; larger minors of ``G^H G`` vanish.
    """
    n_tx, n_rx = query.n_tx, query.n_rx
    if n_tx > MAX_MINOR_DIM:
        raise CombinatorialLimitError(
            f"upper bound enumerates subsets of N_t = {n_tx} > {MAX_MINOR_DIM} antennas"
        )
    g_bar = query.stats.g_bar
    sigma = g_bar.conj().T @ g_bar
    sigma = 0.5 * (sigma + sigma.conj().T)
    psi = 0.5 * (query.stats.psi + query.stats.psi.conj().T)
    log_rho_bar = math.log(query.rho_bar)
    cap = min(n_tx, n_rx)
    per_size = [0.0]
    for t in range(1, cap + 1):
        logs = []
        for subset in combinations(range(n_tx), t):
            idx = np.ix_(subset, subset)
            logs.append(_log_expected_minor(sigma[idx], psi[idx], n_rx, params))
        per_size.append(t * log_rho_bar + logsumexp(logs))
    log_total = logsumexp(per_size)
    kind = "upper_C1" if n_rx >= n_tx else "upper_C2"
    return CapacityResult(value=max(float(log_total) / LN2, 0.0), kind=kind)


def whitened_mean_eigs(stats: EffectiveStats, params: MomentParams = DEFAULT_PARAMS):
    """Nonzero eigenvalues of the whitened mean Gram matrix.

    For ``N_r >= N_t`` these are the eigenvalues of
    ``psi^{-1/2} g_bar^H g_bar psi^{-1/2}`` (pencil ``(g_bar^H g_bar, psi)``);
    otherwise of ``g_bar psi^{-1} g_bar^H``. Both share their nonzero
    spectrum, so one pencil serves both regimes.
    """
    g_bar = stats.g_bar
    return generalized_nonzero_eigs(g_bar.conj().T @ g_bar, stats.psi, params)


def expected_log_gram(stats: EffectiveStats, params: MomentParams = DEFAULT_PARAMS) -> float:
    """``E ln det(G^H G)`` in nats, valid for ``N_r >= N_t``."""
    n_tx, n_rx = stats.n_tx, stats.n_rx
    eigs = whitened_mean_eigs(stats, params)
    _, logdet_psi = np.linalg.slogdet(stats.psi)
    return float(logdet_psi) + digamma_sum(n_rx, n_tx) + wishart_F(eigs, n_rx, params)


def wide_log_terms(stats: EffectiveStats, params: MomentParams = DEFAULT_PARAMS):
    """Pieces of ``E ln det(G G^H)`` for ``N_t > N_r``.

    Returns ``(moment, lower_corr, upper_corr)`` where ``moment`` is the
    shared digamma-plus-F term and the corrections are the log-sums of the
    smallest and largest ``N_r`` eigenvalues of psi.
    """
    n_tx, n_rx = stats.n_tx, stats.n_rx
    eigs = whitened_mean_eigs(stats, params)
    moment = digamma_sum(n_tx, n_rx) + wishart_F(eigs, n_tx, params)
    zeta = np.linalg.eigvalsh(0.5 * (stats.psi + stats.psi.conj().T))
    lower, upper = logdet_sandwich(n_rx, zeta)
    return moment, lower, upper


def lower_bound(query: CapacityQuery, params: MomentParams = DEFAULT_PARAMS) -> CapacityResult:
    """Minkowski/Jensen lower bound (C3 for N_r >= N_t, C4 otherwise)."""
    n_tx, n_rx = query.n_tx, query.n_rx
    if n_rx >= n_tx:
        streams, log_gram, kind = n_tx, expected_log_gram(query.stats, params), "lower_C3"
    else:
        moment, smallest, _ = wide_log_terms(query.stats, params)
        streams, log_gram, kind = n_rx, moment + smallest, "lower_C4"
    value = streams * math.log2(1.0 + query.rho_bar * math.exp(log_gram / streams))
    return CapacityResult(value=value, kind=kind)


def bound_pair(query: CapacityQuery, params: MomentParams = DEFAULT_PARAMS):
    """``(lower, upper)``; ties ``N_r = N_t`` use the ``N_r >= N_t`` pair."""
    return lower_bound(query, params), upper_bound(query, params)
