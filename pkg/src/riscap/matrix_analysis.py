"""Special functions and determinant identities for complex Wishart moments.

Everything here works on eigenvalue lists rather than matrices, so any
whitening happens once, at the call site, through
:func:`generalized_nonzero_eigs`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

import mpmath
import numpy as np
from scipy import linalg as sla
from scipy import special

from .errors import (
    CombinatorialLimitError,
    ConvergenceError,
    DegenerateSpectrumError,
    DomainError,
    ShapeError,
    SingularCovarianceError,
)

__all__ = [
    "EigenList",
    "MomentParams",
    "digamma",
    "digamma_sum",
    "principal_minor_sum",
    "generalized_nonzero_eigs",
    "separate_eigenvalues",
    "wishart_J",
    "expected_det",
    "poisson_tail_series",
    "wishart_F",
    "expected_logdet",
    "logdet_sandwich",
    "MAX_MINOR_DIM",
]

MAX_MINOR_DIM = 20

# Mutation hook for the validation harness; 1.0 outside of tests.
_J_SCALE = 1.0

EULER_GAMMA = 0.57721566490153286061

# -B_2k / (2k) for k = 1..8
_DIGAMMA_ASYMPTOTIC = (
    -1.0 / 12.0,
    1.0 / 120.0,
    -1.0 / 252.0,
    1.0 / 240.0,
    -1.0 / 132.0,
    691.0 / 32760.0,
    -1.0 / 12.0,
    3617.0 / 8160.0,
)


@dataclass(frozen=True)
class EigenList:
    """Nonzero eigenvalues, descending, and the absolute cutoff that selected them."""

    values: np.ndarray
    rank_tolerance_used: float = 0.0

    def __post_init__(self):
        values = np.sort(np.asarray(self.values, dtype=float).reshape(-1))[::-1]
        if values.size and values[-1] <= 0.0:
            raise DomainError("eigenvalues in an EigenList must be strictly positive")
        object.__setattr__(self, "values", values)

    def __len__(self):
        return self.values.size

    @classmethod
    def empty(cls) -> "EigenList":
        return cls(np.zeros(0))


@dataclass(frozen=True)
class MomentParams:
    """Numerical controls shared by the moment routines.

    Attributes:
        series_tol: stop the Poisson-tail series once a term drops below this.
        series_max_terms: term budget of that series before giving up.
        degeneracy_eps: relative gap under which two eigenvalues are merged.
        degeneracy_spread: relative spacing used to pull merged values apart.
        rank_tol: relative threshold defining a "nonzero" eigenvalue.
        large_x: arguments at or above this use the moment expansion of the
            series instead of summing it term by term.
        max_lost_digits: cancellation budget of the double-precision solve
            in :func:`wishart_F`; beyond it extended precision is used.
    """

    series_tol: float = 1e-12
    series_max_terms: int = 100_000
    degeneracy_eps: float = 1e-8
    degeneracy_spread: float = 1e-6
    rank_tol: float = 1e-10
    large_x: float = 1e4
    max_lost_digits: float = 3.0

    def __post_init__(self):
        for name in ("series_tol", "degeneracy_eps", "degeneracy_spread", "rank_tol", "large_x", "max_lost_digits"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.series_max_terms < 1:
            raise ValueError("series_max_terms must be positive")


DEFAULT_PARAMS = MomentParams()


def digamma(x: float) -> float:
    """Digamma function for positive real ``x``.

    Shifts the argument to ``x >= 6`` with ``psi(x) = psi(x + 1) - 1/x`` and
    finishes with the Stirling-type asymptotic series.
    """
    x = float(x)
    if not x > 0.0:
        raise DomainError(f"digamma is only defined here for x > 0, got {x}")
    shift = 0.0
    while x < 6.0:
        shift -= 1.0 / x
        x += 1.0
    inv2 = 1.0 / (x * x)
    series = 0.0
    power = inv2
    for coef in _DIGAMMA_ASYMPTOTIC:
        series += coef * power
        power *= inv2
    return shift + math.log(x) - 0.5 / x + series


def digamma_sum(q: int, p: int) -> float:
    """``sum_{k=0}^{p-1} psi(q - k)``, the central log-determinant moment."""
    return math.fsum(digamma(q - k) for k in range(p))


def principal_minor_sum(A, t: int):
    """Sum of all ``t x t`` principal minors of ``A`` (1 for ``t = 0``)."""
    A = np.asarray(A)
    n = A.shape[0]
    if A.ndim != 2 or A.shape[1] != n:
        raise ShapeError(f"expected a square matrix, got shape {A.shape}")
    if n > MAX_MINOR_DIM:
        raise CombinatorialLimitError(
            f"principal minor enumeration is limited to n <= {MAX_MINOR_DIM}, got n = {n}"
        )
    if not 0 <= t <= n:
        raise DomainError(f"subset size must lie in [0, {n}], got {t}")
    if t == 0:
        return 1.0 + 0.0j
    total = 0.0 + 0.0j
    for subset in combinations(range(n), t):
        idx = np.ix_(subset, subset)
        total += np.linalg.det(A[idx])
    return total


def _hermitian(M):
    M = np.asarray(M)
    return 0.5 * (M + M.conj().T)


def generalized_nonzero_eigs(sigma, psi=None, params: MomentParams = DEFAULT_PARAMS) -> EigenList:
    """Nonzero eigenvalues of ``psi^{-1} sigma`` for Hermitian PSD ``sigma``.

    ``psi`` is factored as ``L L^H`` and the symmetric matrix
    ``L^{-1} sigma L^{-H}`` is diagonalized, so the spectrum is real by
    construction. ``psi=None`` means the identity.

    Raises:
        SingularCovarianceError: if ``psi`` is not positive definite.
    """
    sigma = _hermitian(sigma)
    if psi is None:
        whitened = sigma
    else:
        psi = _hermitian(psi)
        try:
            chol = np.linalg.cholesky(psi)
        except np.linalg.LinAlgError:
            smallest = float(np.linalg.eigvalsh(psi)[0])
            raise SingularCovarianceError(
                f"covariance is not positive definite (smallest eigenvalue {smallest:.3e})",
                eigenvalue=smallest,
            ) from None
        left = sla.solve_triangular(chol, sigma, lower=True)
        whitened = sla.solve_triangular(chol, left.conj().T, lower=True)
        whitened = _hermitian(whitened)
    if not np.any(whitened):
        return EigenList.empty()
    values = np.linalg.eigvalsh(whitened)
    top = values[-1]
    if top <= 0.0:
        return EigenList.empty()
    cutoff = params.rank_tol * top
    return EigenList(values[values > cutoff], rank_tolerance_used=cutoff)


def separate_eigenvalues(values, params: MomentParams = DEFAULT_PARAMS) -> np.ndarray:
    """Pull apart clusters of (near) repeated eigenvalues.

    Values closer than ``degeneracy_eps * max`` are grouped and respread
    symmetrically around the cluster mean with step
    ``degeneracy_spread * max``.

    Raises:
        DegenerateSpectrumError: if some gap is still below the threshold.
    """
    values = np.sort(np.asarray(values, dtype=float))[::-1]
    if values.size < 2:
        return values
    top = values[0]
    eps = params.degeneracy_eps * top
    step = params.degeneracy_spread * top
    out = values.copy()
    start = 0
    for i in range(1, values.size + 1):
        if i < values.size and values[i - 1] - values[i] < eps:
            continue
        size = i - start
        if size > 1:
            centre = values[start:i].mean()
            offsets = (np.arange(size) - 0.5 * (size - 1)) * step
            out[start:i] = centre - offsets
        start = i
    if np.any(np.diff(out) > -eps) or out[-1] <= 0.0:
        raise DegenerateSpectrumError(
            f"eigenvalues {values} remain degenerate after perturbation"
        )
    return out


def _as_values(eigs):
    if isinstance(eigs, EigenList):
        return eigs.values
    return EigenList(eigs).values


def wishart_J(eigs, q: int, params: MomentParams = DEFAULT_PARAMS) -> float:
    """Determinant-ratio function ``det(Delta) / V`` of the noncentral moment.

    ``Delta[i, j] = (q - L + j + theta_i) theta_i^(j-1)`` for ``j = 1..L``.
    Expanding ``det(Delta)`` by Cauchy-Binet over the monomial rows turns the
    ratio into ``sum_t (q - t)! / (q - L)! * e_t(theta)`` with ``e_t`` the
    elementary symmetric polynomials. Every term is positive, so repeated
    eigenvalues need no special treatment. Returns 1 for an empty list.
    """
    values = _as_values(eigs)
    L = values.size
    if L > q:
        raise ShapeError(f"number of eigenvalues {L} exceeds q = {q}")
    # coefficients of prod(x + theta_i), highest power first: e_0, e_1, ..., e_L
    e = np.poly(-values) if L else np.ones(1)
    weights = np.exp([_log_factorial_ratio(q - t, q - L) for t in range(L + 1)])
    return float(np.dot(weights, e)) * _J_SCALE


def _log_factorial_ratio(a: int, b: int) -> float:
    """``ln(a! / b!)``."""
    return math.lgamma(a + 1) - math.lgamma(b + 1)


def expected_det(b_bar, omega, params: MomentParams = DEFAULT_PARAMS) -> float:
    """``E det(B B^H)`` for ``B = b_bar + omega^{1/2} W``, ``W`` i.i.d. CN(0, 1).

    ``b_bar`` is ``p x q`` with ``p <= q`` and the columns of ``B`` share the
    ``p x p`` covariance ``omega``.
    """
    b_bar = np.atleast_2d(np.asarray(b_bar, dtype=complex))
    p, q = b_bar.shape
    if p > q:
        raise ShapeError(f"expected_det needs p <= q, got {p} x {q}")
    omega = np.atleast_2d(np.asarray(omega, dtype=complex))
    eigs = generalized_nonzero_eigs(b_bar @ b_bar.conj().T, omega, params)
    L = len(eigs)
    sign, logdet_omega = np.linalg.slogdet(_hermitian(omega))
    log_ratio = _log_factorial_ratio(q - L, q - p)
    return math.exp(log_ratio + float(logdet_omega)) * wishart_J(eigs, q, params)


def _series_by_terms(x, c, params):
    """Sum ``P(Poisson(x) > k) / (c + k)`` over k until a term drops below tol."""
    chunk = 4096
    total = 0.0
    k0 = 0
    while k0 < params.series_max_terms:
        k = np.arange(k0, min(k0 + chunk, params.series_max_terms), dtype=float)
        terms = special.gammainc(k + 1.0, x) / (c + k)
        small = np.nonzero(terms < params.series_tol)[0]
        if small.size:
            return total + math.fsum(terms[: small[0]])
        total += math.fsum(terms)
        k0 += k.size
    residual = x * special.gammainc(float(k0), x) / (c + k0)
    raise ConvergenceError(
        f"Poisson-tail series at x = {x:.6g} did not reach tol {params.series_tol:g} "
        f"within {params.series_max_terms} terms (tail bound {residual:.3e})",
        residual=residual,
    )


def _poisson_central_moments(x):
    return (
        1.0,
        0.0,
        x,
        x,
        3.0 * x * x + x,
        10.0 * x * x + x,
        15.0 * x ** 3 + 25.0 * x * x + x,
        105.0 * x ** 3 + 56.0 * x * x + x,
        105.0 * x ** 4 + 490.0 * x ** 3 + 119.0 * x * x + x,
    )


def _series_by_moments(x, c):
    """Large-x route: the series equals ``E psi(c + N) - psi(c)``, N ~ Poisson(x).

    The expectation is expanded around the mean using the central moments of
    the Poisson law; the first omitted term is O(x^-5).
    """
    m = c + x
    total = digamma(m)
    for order, mu in enumerate(_poisson_central_moments(x)):
        if order < 2:
            continue
        total += float(special.polygamma(order, m)) * mu / math.factorial(order)
    return total - digamma(c)


def poisson_tail_series(x: float, c: float, params: MomentParams = DEFAULT_PARAMS) -> float:
    """``sum_{k>=0} [1 - e^{-x} sum_{n<=k} x^n/n!] / (c + k)`` for ``x >= 0``."""
    if x < 0.0:
        raise DomainError("the series argument must be nonnegative")
    if x == 0.0:
        return 0.0
    if x >= params.large_x:
        return _series_by_moments(x, c)
    return _series_by_terms(x, c, params)


def _lost_digits(u):
    """Decimal digits cancelled when solving with the Vandermonde matrix of ``u``."""
    gaps = np.abs(u[:, None] - u[None, :])[np.triu_indices(u.size, 1)]
    return float(-np.sum(np.log10(gaps)))


def _mp_series(x, c):
    """The Poisson-tail series as ``int_0^1 (1-s)^(c-1) (1 - e^(-x s)) / s ds``."""
    x, c = mpmath.mpf(x), mpmath.mpf(c)
    knots = [0, 1] if x <= 10 else [0, 10 / x, 1]
    return mpmath.quad(lambda s: (1 - s) ** (c - 1) * -mpmath.expm1(-x * s) / s, knots)


def _f_by_cramer_mp(theta, q, digits):
    L = theta.size
    with mpmath.workdps(20 + int(math.ceil(digits))):
        t = [mpmath.mpf(float(v)) for v in theta]
        u = [v / t[0] for v in t]
        monomial = mpmath.matrix([[v ** row for v in u] for row in range(L)])
        total = mpmath.mpf(0)
        for col in range(L):
            h = mpmath.matrix([u[col] ** row * _mp_series(t[col], q - L + row + 1) for row in range(L)])
            total += mpmath.lu_solve(monomial, h)[col]
        return float(total)


def wishart_F(eigs, q: int, params: MomentParams = DEFAULT_PARAMS) -> float:
    """Eigenvalue part of the noncentral log-determinant moment (0 if empty).

    Assembles ``sum_i det(Delta_bar_i) / V`` where ``Delta_bar_i`` is the
    monomial matrix ``[g(theta_1) .. g(theta_L)]`` with column ``i`` replaced
    by ``h(theta_i)``. By Cramer's rule each ratio is the ``i``-th entry of
    the solution of ``U y = h(theta_i)``, which is how it is evaluated here
    after scaling the eigenvalues by their maximum.

    Clustered eigenvalues make that solve cancel roughly ``-log10 |V|``
    digits. Past ``max_lost_digits`` the same formula is evaluated in
    extended precision, with exact ties first pulled apart by
    :func:`separate_eigenvalues`.
    """
    values = _as_values(eigs)
    L = values.size
    if L > q:
        raise ShapeError(f"number of eigenvalues {L} exceeds q = {q}")
    if L == 0:
        return 0.0
    theta = separate_eigenvalues(values, params)
    u = theta / theta[0]
    if L > 1:
        digits = _lost_digits(u)
        if digits > params.max_lost_digits:
            return _f_by_cramer_mp(theta, q, digits)
    powers = np.arange(L)
    monomial = u[None, :] ** powers[:, None]
    hmat = np.empty((L, L))
    for col, x in enumerate(theta):
        for row in range(L):
            hmat[row, col] = u[col] ** row * poisson_tail_series(x, q - L + row + 1, params)
    if L == 1:
        return float(hmat[0, 0])
    solved = np.linalg.solve(monomial, hmat)
    return float(np.trace(solved))


def expected_logdet(eigs, p: int, q: int, params: MomentParams = DEFAULT_PARAMS) -> float:
    """``E ln det(B B^H)`` in nats for ``B = b_bar + W`` (identity covariance).

    ``eigs`` are the nonzero eigenvalues of ``b_bar b_bar^H``.
    """
    if p > q:
        raise ShapeError(f"expected_logdet needs p <= q, got p = {p}, q = {q}")
    values = _as_values(eigs)
    if values.size > p:
        raise ShapeError(f"{values.size} eigenvalues for a {p}-row matrix")
    return digamma_sum(q, p) + wishart_F(values, q, params)


def logdet_sandwich(p: int, z_eigs):
    """Additive corrections bracketing ``ln det(X Z X^H) - ln det(X X^H)``.

    Returns ``(lower, upper)``: the log-sum of the ``p`` smallest and of the
    ``p`` largest eigenvalues of ``Z``.
    """
    z = np.sort(np.asarray(z_eigs, dtype=float).reshape(-1))[::-1]
    if p > z.size:
        raise ShapeError(f"need p <= q, got p = {p}, q = {z.size}")
    if np.any(z <= 0.0):
        raise DomainError("Z must be positive definite")
    logs = np.log(z)
    return float(np.sum(logs[z.size - p:])), float(np.sum(logs[:p]))
