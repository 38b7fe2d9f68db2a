import math

import numpy as np
import pytest
import scipy.special
import scipy.stats

from riscap import capacity_bounds as cb
from riscap import channel_model as cm
from riscap._rng import complex_normal
from riscap.matrix_analysis import digamma_sum

from conftest import random_psd


def make_stats(rng, n_rx, n_tx, scale=1.0):
    return cm.EffectiveStats(g_bar=scale * complex_normal(rng, (n_rx, n_tx)), psi=random_psd(rng, n_tx))


def direct_samples(stats, rng, trials):
    root = np.linalg.cholesky(stats.psi).conj().T
    return stats.g_bar + complex_normal(rng, (trials, stats.n_rx, stats.n_tx)) @ root


def test_hermitian_sqrt_squares_back(rng):
    psi = random_psd(rng, 4)
    root = cb.hermitian_sqrt(psi)
    assert np.allclose(root @ root, psi)
    assert np.allclose(root, root.conj().T)
    with pytest.raises(cb.SingularCovarianceError):
        cb.hermitian_sqrt(-np.eye(2))


def test_result_validation():
    with pytest.raises(ValueError):
        cb.CapacityResult(1.0, "mc")
    with pytest.raises(ValueError):
        cb.CapacityResult(1.0, "upper_C1", std_error=0.1)
    with pytest.raises(ValueError):
        cb.CapacityResult(1.0, "bogus")


def test_mc_is_reproducible(rng):
    stats = make_stats(rng, 3, 2)
    q = cb.CapacityQuery(10.0, stats, 2000, seed=7, workers=3)
    assert cb.mc_ecc(q) == cb.mc_ecc(q)
    assert cb.mc_ecc(q).value != cb.mc_ecc(cb.CapacityQuery(10.0, stats, 2000, seed=8, workers=3)).value


def test_mc_matches_direct_sampling(rng):
    stats = make_stats(rng, 3, 2)
    G = direct_samples(stats, rng, 100_000)
    ref = np.log2(np.linalg.det(np.eye(3) + 5.0 * G @ np.conj(np.swapaxes(G, -1, -2))).real)
    got = cb.mc_ecc(cb.CapacityQuery(10.0, stats, 100_000, seed=1))
    assert abs(got.value - ref.mean()) < 4 * math.hypot(got.std_error, ref.std() / math.sqrt(ref.size))


@pytest.mark.parametrize("shape", [(3, 2), (2, 3), (1, 3), (3, 1), (2, 2)])
def test_upper_bound_is_log_of_expected_determinant(rng, shape):
    stats = make_stats(rng, *shape)
    rho = 4.0
    G = direct_samples(stats, rng, 400_000)
    gram = np.conj(np.swapaxes(G, -1, -2)) @ G
    det = np.linalg.det(np.eye(shape[1]) + rho / shape[1] * gram).real
    se = det.std() / math.sqrt(det.size)
    got = 2.0 ** cb.upper_bound(cb.CapacityQuery(rho, stats)).value
    assert abs(got - det.mean()) < 4 * se


def test_single_antenna_bounds_in_closed_form(rng):
    stats = make_stats(rng, 4, 1)
    rho = 3.0
    sigma = float(stats.psi[0, 0].real)
    energy = float(np.sum(np.abs(stats.g_bar) ** 2))
    upper = cb.upper_bound(cb.CapacityQuery(rho, stats))
    assert upper.kind == "upper_C1"
    assert upper.value == pytest.approx(math.log2(1 + rho * (energy + 4 * sigma)))
    # E ln ||g||^2 = ln sigma + E psi(4 + N), N ~ Poisson(energy / sigma)
    lam = energy / sigma
    n = np.arange(400)
    log_moment = math.log(sigma) + float(
        np.sum(scipy.stats.poisson.pmf(n, lam) * scipy.special.digamma(4 + n))
    )
    lower = cb.lower_bound(cb.CapacityQuery(rho, stats))
    assert lower.value == pytest.approx(math.log2(1 + rho * math.exp(log_moment)), rel=1e-9)


@pytest.mark.parametrize("shape", [(4, 2), (2, 2), (2, 4), (1, 3)])
def test_bounds_bracket_monte_carlo(rng, shape):
    stats = make_stats(rng, *shape, scale=0.7)
    for rho in (0.1, 10.0, 1000.0):
        q = cb.CapacityQuery(rho, stats, 20_000, seed=3)
        mc = cb.mc_ecc(q)
        lower, upper = cb.bound_pair(q)
        assert lower.value <= mc.value + 3 * mc.std_error
        assert mc.value <= upper.value + 3 * mc.std_error
        assert lower.kind == ("lower_C3" if shape[0] >= shape[1] else "lower_C4")


def test_zero_mean_and_singular_covariance_upper_bound():
    psi = np.outer([1, 1j], [1, -1j])  # rank one
    stats = cm.EffectiveStats(g_bar=np.zeros((3, 2)), psi=psi)
    # only one nonzero eigenvalue (2): E det(I + r X psi X^H) = 1 + r * 3 * 2 for the 1x1 minors
    got = cb.upper_bound(cb.CapacityQuery(2.0, stats)).value
    assert got == pytest.approx(math.log2(1 + 1.0 * 3 * 2))


def test_expected_log_gram_zero_mean_identity():
    stats = cm.EffectiveStats(g_bar=np.zeros((4, 2)), psi=2 * np.eye(2))
    assert cb.expected_log_gram(stats) == pytest.approx(2 * math.log(2) + digamma_sum(4, 2))


def test_random_phase_capacity_reproducible(rng):
    system = cm.SystemConfig(n_tx=2, n_rx=2, m_h=2, m_v=2)
    paths = cm.sample_path_set(system, rng)
    a = cb.mc_ecc_random_phases(system, paths, 10.0, 3000, seed=5, workers=2)
    b = cb.mc_ecc_random_phases(system, paths, 10.0, 3000, seed=5, workers=2)
    assert a == b and a.value > 0


def test_deterministic_capacity():
    g = np.array([[2.0, 0.0], [0.0, 1.0]])
    assert cb.deterministic_capacity(g, 1.0) == pytest.approx(math.log2(5 * 2))
