import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from riscap import channel_model as cm
from riscap.errors import InvalidDimensionError, SingularCovarianceError


@pytest.fixture
def system():
    return cm.SystemConfig(n_tx=2, n_rx=3, m_h=2, m_v=3, beta_d=0.5, n_paths_t=2)


@pytest.fixture
def paths(system, rng):
    return cm.sample_path_set(system, rng)


def test_ula_response_values():
    a = cm.ula_response(3, 0.5, math.pi / 6)
    assert np.allclose(a, np.exp(1j * math.pi * 0.5 * np.arange(3)))


def test_upa_is_kron_of_vertical_and_horizontal():
    az, el = 0.4, 1.1
    vertical = np.exp(2j * np.pi * 0.5 * np.arange(3) * np.sin(el))
    horizontal = np.exp(2j * np.pi * 0.5 * np.arange(2) * np.cos(el) * np.sin(az))
    got = cm.upa_response(2, 3, 0.5, 0.5, az, el)
    assert np.allclose(got, np.kron(vertical, horizontal))
    assert np.allclose(np.abs(got), 1.0)


def test_bad_sizes_rejected():
    with pytest.raises(InvalidDimensionError):
        cm.ula_response(0, 0.5, 0.0)
    with pytest.raises(InvalidDimensionError):
        cm.SystemConfig(n_tx=0)
    with pytest.raises(ValueError):
        cm.SystemConfig(los_power_r=1.5)


@given(st.floats(-1e3, 1e3))
def test_wrap_phase_range_and_equivalence(theta):
    w = float(cm.wrap_phase(theta))
    assert -math.pi < w <= math.pi
    assert math.cos(w) == pytest.approx(math.cos(theta), abs=1e-9)
    assert math.sin(w) == pytest.approx(math.sin(theta), abs=1e-9)


def test_phase_shifts_validation():
    assert float(cm.wrap_phase(-math.pi)) == pytest.approx(math.pi)
    with pytest.raises(ValueError):
        cm.PhaseShifts([-math.pi])
    cm.PhaseShifts([math.pi])
    assert len(cm.PhaseShifts.wrapped([7.0, -7.0])) == 2


def test_path_count_mismatch(system, paths):
    with pytest.raises(InvalidDimensionError):
        cm.build_los_matrices(replace(system, n_paths_h=3), paths)


def test_statistics_match_sampled_channels(system, paths, rng):
    phases = cm.PhaseShifts.wrapped(rng.uniform(-3, 3, system.n_ris))
    stats = cm.effective_stats(system, paths, phases)
    los = cm.build_los_matrices(system, paths)
    draws = np.array([cm.sample_realization(system, paths, phases, rng, los).G for _ in range(40_000)])
    mean = draws.mean(axis=0)
    assert np.abs(mean - stats.g_bar).max() < 0.05 * max(1.0, np.abs(stats.g_bar).max())
    centred = draws - stats.g_bar
    # every row of G shares the transmit covariance psi = E[g^H g]
    row_cov = np.einsum("nri,nrj->ij", centred.conj(), centred) / (draws.shape[0] * system.n_rx)
    assert np.abs(row_cov - stats.psi).max() < 0.05 * np.abs(stats.psi).max()
    rows = np.einsum("ni,nj->ij", centred[:, 0, :].conj(), centred[:, 1, :]) / draws.shape[0]
    assert np.abs(rows).max() < 0.05 * np.abs(stats.psi).max()


def test_covariance_does_not_depend_on_phases(system, paths, rng):
    a = cm.effective_stats(system, paths, cm.PhaseShifts.zeros(system.n_ris))
    b = cm.effective_stats(system, paths, cm.PhaseShifts.wrapped(rng.uniform(-3, 3, system.n_ris)))
    assert np.allclose(a.psi, b.psi)
    assert not np.allclose(a.g_bar, b.g_bar)


def test_upsilon_single_path_is_exact(rng):
    system = cm.SystemConfig(n_tx=3, n_rx=2, m_h=4, m_v=2, n_paths_t=1)
    paths = cm.sample_path_set(system, rng)
    psi = cm.effective_stats(system, paths).psi
    direct = system.beta_d * system.nlos_power_h * np.eye(3)
    assert np.allclose(psi - direct, system.n_ris * cm.upsilon(system, paths))


def test_without_ris_keeps_only_direct_link(system, paths):
    stats = cm.effective_stats(cm.without_ris(system), paths)
    assert np.allclose(stats.psi, system.beta_d * system.nlos_power_h * np.eye(system.n_tx))


def test_pure_los_covariance_is_singular(system, paths):
    with pytest.raises(SingularCovarianceError):
        cm.effective_stats(replace(system, los_power_r=1.0, los_power_h=1.0), paths)


def test_config_round_trip(system):
    assert cm.SystemConfig.from_dict(system.to_dict()) == system
