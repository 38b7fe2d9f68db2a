import math

import numpy as np
import pytest

from riscap import asymptotics as asy
from riscap import channel_model as cm
from riscap.capacity_bounds import CapacityQuery, mc_ecc
from riscap.errors import AssumptionViolatedError, InconclusiveError
from riscap._rng import complex_normal

from conftest import random_psd


def stats_for(rng, n_rx, n_tx):
    return cm.EffectiveStats(g_bar=0.8 * complex_normal(rng, (n_rx, n_tx)), psi=random_psd(rng, n_tx))


def test_expansion_validates_bounds():
    with pytest.raises(ValueError):
        asy.HighSnrExpansion(1.0, 0.0, offset_bounds=(1.0, 0.0))


@pytest.mark.parametrize("shape", [(3, 2), (2, 2), (1, 1)])
def test_tall_expansion_matches_monte_carlo(rng, shape):
    stats = stats_for(rng, *shape)
    exp = asy.high_snr_expansion(stats)
    assert exp.slope == shape[1] and exp.offset_bounds is None
    mc = mc_ecc(CapacityQuery(1e5, stats, 40_000, seed=2))
    assert abs(mc.value - asy.affine_capacity(exp, 1e5)) < 0.05


def test_wide_offset_is_bracketed(rng):
    stats = stats_for(rng, 2, 4)
    exp = asy.high_snr_expansion(stats, trials=50_000, seed=1)
    lo, hi = exp.offset_bounds
    assert exp.slope == 2
    assert lo - 3 * exp.offset_std_error <= exp.offset <= hi + 3 * exp.offset_std_error


def test_empirical_slope(rng):
    stats = stats_for(rng, 2, 3)
    assert asy.slope_empirical(stats, 1e4, 1e5, 5000) == pytest.approx(2.0, rel=0.02)


def test_large_m_upper_bound_dominates(rng):
    ups = random_psd(rng, 2, floor=0.0)
    cap = asy.large_m_capacity(ups, 3, 1.0, 64, 20_000)
    bound = asy.large_m_upper_bound(ups, 3, 1.0, 64)
    assert cap.value <= bound.value + 3 * cap.std_error


def test_large_m_capacity_zero_upsilon():
    assert asy.large_m_capacity(np.zeros((2, 2)), 2, 1.0, 16).value == 0.0


def test_power_scaling_regimes(rng):
    ups = random_psd(rng, 2, floor=0.05)
    grid = (16, 64, 256, 1024)
    kinds = {a: asy.power_scaling(ups, 4, 0.1, a, grid, 4000, seed=1).limit_kind for a in (0.5, 1.0, 2.0)}
    assert kinds == {0.5: "diverges", 1.0: "finite", 2.0: "vanishes"}
    finite = asy.power_scaling(ups, 4, 0.1, 1.0, grid, 4000, seed=1)
    assert finite.finite_value == pytest.approx(finite.trace[-1])


def test_power_scaling_inconclusive(monkeypatch):
    values = iter([1.0, 2.0, 1.0])
    monkeypatch.setattr(
        asy, "large_m_capacity", lambda *a, **k: asy.CapacityResult(next(values), "mc", 0.0, 1)
    )
    with pytest.raises(InconclusiveError) as info:
        asy.power_scaling(np.eye(2), 2, 1.0, 1.0, (1, 2, 3))
    assert info.value.trace == (1.0, 2.0, 1.0)


def test_large_m_expansion(rng):
    ups = random_psd(rng, 2)
    a = asy.large_m_expansion(ups, 2, 3, 32)
    b = asy.large_m_expansion(ups, 2, 3, 64)
    assert b.offset - a.offset == pytest.approx(-1.0, abs=1e-12)
    zero_mean = cm.EffectiveStats(g_bar=np.zeros((3, 2)), psi=32 * ups)
    assert asy.high_snr_expansion(zero_mean).offset == pytest.approx(a.offset, abs=1e-12)
    with pytest.raises(AssumptionViolatedError):
        asy.large_m_expansion(np.outer([1, 1], [1, 1]), 2, 3, 32)
    with pytest.raises(AssumptionViolatedError):
        asy.large_m_expansion(ups, 2, 1, 32)
