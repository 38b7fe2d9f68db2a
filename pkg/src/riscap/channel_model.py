"""RIS-aided MIMO Rician channel: steering vectors, LoS matrices, sampling
and the exact first/second order statistics of the effective channel.

Conventions:
    * Element spacings are ratios d/lambda.
    * The RIS response is ``kron(vertical, horizontal)``.
    * LoS outer products use a plain transpose, never a conjugate transpose.
    * Path gains and angles are drawn once per drop (:class:`PathSet`) and held
      fixed while the NLoS fading is redrawn.
"""
from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from ._rng import as_generator, complex_normal
from .errors import InvalidDimensionError, SingularCovarianceError

__all__ = [
    "SystemConfig",
    "PathSet",
    "PhaseShifts",
    "ChannelRealization",
    "EffectiveStats",
    "ula_response",
    "upa_response",
    "sample_path_set",
    "build_los_matrices",
    "reflection_matrix",
    "assemble_channel",
    "sample_realization",
    "effective_stats",
    "mean_channel",
    "transmit_covariance",
    "upsilon",
    "without_ris",
]


@dataclass(frozen=True)
class SystemConfig:
    """Antenna geometry, path-loss, Rician and path-count parameters."""

    n_tx: int = 2
    n_rx: int = 4
    m_h: int = 4
    m_v: int = 4
    d_t: float = 0.5
    d_r: float = 0.5
    d_h: float = 0.5
    d_v: float = 0.5
    beta_t: float = 1.0
    beta_r: float = 1.0
    beta_d: float = 1.0
    los_power_r: float = 2.0 / 3.0
    los_power_h: float = 2.0 / 3.0
    n_paths_t: int = 1
    n_paths_r: int = 1
    n_paths_h: int = 2

    def __post_init__(self):
        for name in ("n_tx", "n_rx", "m_h", "m_v", "n_paths_t", "n_paths_r", "n_paths_h"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise InvalidDimensionError(f"{name} must be a positive integer, got {value!r}")
        for name in ("d_t", "d_r", "d_h", "d_v", "beta_t", "beta_r", "beta_d"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        for name in ("los_power_r", "los_power_h"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")

    @property
    def n_ris(self) -> int:
        return self.m_h * self.m_v

    @property
    def nlos_power_r(self) -> float:
        return 1.0 - self.los_power_r

    @property
    def nlos_power_h(self) -> float:
        return 1.0 - self.los_power_h

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, values: dict) -> "SystemConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in values.items() if k in known})


@dataclass(frozen=True)
class PathSet:
    """LoS path angles (radians) and complex gains of T, R-bar and H-bar.

    The transmitter-RIS channel T has per-path RIS arrival azimuth/elevation
    and transmitter departure angle; R-bar has receiver arrival angle and RIS
    departure azimuth/elevation; H-bar has receiver arrival and transmitter
    departure angles.
    """

    t_aoa_az: np.ndarray
    t_aoa_el: np.ndarray
    t_aod: np.ndarray
    t_gain: np.ndarray
    r_aoa: np.ndarray
    r_aod_az: np.ndarray
    r_aod_el: np.ndarray
    r_gain: np.ndarray
    h_aoa: np.ndarray
    h_aod: np.ndarray
    h_gain: np.ndarray

    @property
    def n_paths(self):
        return len(self.t_gain), len(self.r_gain), len(self.h_gain)

    def check(self, config: SystemConfig):
        if self.n_paths != (config.n_paths_t, config.n_paths_r, config.n_paths_h):
            raise InvalidDimensionError(
                f"path counts {self.n_paths} do not match config "
                f"{(config.n_paths_t, config.n_paths_r, config.n_paths_h)}"
            )

    def describe(self):
        """Flat ``name -> list`` view used for CSV header comments."""
        out = {}
        for f in fields(self):
            arr = np.asarray(getattr(self, f.name))
            if np.iscomplexobj(arr):
                out[f.name + "_re"] = arr.real.tolist()
                out[f.name + "_im"] = arr.imag.tolist()
            else:
                out[f.name] = arr.tolist()
        return out


@dataclass(frozen=True)
class PhaseShifts:
    """RIS reflection phases, each wrapped into (-pi, pi]."""

    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).reshape(-1)
        if theta.size == 0:
            raise InvalidDimensionError("at least one phase is required")
        if np.any(theta <= -np.pi) or np.any(theta > np.pi):
            raise ValueError("phases must lie in (-pi, pi]")
        object.__setattr__(self, "theta", theta)

    @classmethod
    def zeros(cls, m: int) -> "PhaseShifts":
        return cls(np.zeros(m))

    @classmethod
    def wrapped(cls, theta) -> "PhaseShifts":
        return cls(wrap_phase(np.asarray(theta, dtype=float)))

    def __len__(self):
        return self.theta.size


def wrap_phase(theta):
    """Map angles into (-pi, pi]."""
    return np.pi - np.mod(np.pi - np.asarray(theta, dtype=float), 2.0 * np.pi)


@dataclass(frozen=True)
class ChannelRealization:
    T: np.ndarray
    R: np.ndarray
    H: np.ndarray
    G: np.ndarray


@dataclass(frozen=True)
class EffectiveStats:
    """Mean ``g_bar`` (N_r x N_t) and row covariance ``psi`` (N_t x N_t) of G."""

    g_bar: np.ndarray
    psi: np.ndarray
    upsilon: np.ndarray | None = field(default=None)

    @property
    def n_rx(self) -> int:
        return self.g_bar.shape[0]

    @property
    def n_tx(self) -> int:
        return self.g_bar.shape[1]


def ula_response(n, spacing, angle):
    """Uniform linear array response ``exp(j 2 pi spacing k sin(angle))``."""
    if int(n) != n or n < 1:
        raise InvalidDimensionError(f"array size must be a positive integer, got {n!r}")
    k = np.arange(int(n))
    return np.exp(2j * np.pi * spacing * k * np.sin(angle))


def upa_response(m_h, m_v, d_h, d_v, azimuth, elevation):
    """Uniform planar array response of the RIS.

    The vertical factor (``m_v`` entries, phase ``d_v sin(elevation)``) is the
    left operand of the Kronecker product and the horizontal factor
    (``m_h`` entries, phase ``d_h cos(elevation) sin(azimuth)``) the right one.
    """
    for name, value in (("m_h", m_h), ("m_v", m_v)):
        if int(value) != value or value < 1:
            raise InvalidDimensionError(f"{name} must be a positive integer, got {value!r}")
    vertical = np.exp(2j * np.pi * d_v * np.arange(int(m_v)) * np.sin(elevation))
    horizontal = np.exp(
        2j * np.pi * d_h * np.arange(int(m_h)) * np.cos(elevation) * np.sin(azimuth)
    )
    return np.kron(vertical, horizontal)


def sample_path_set(config: SystemConfig, rng=None) -> PathSet:
    """Draw all LoS angles uniformly on [0, 2 pi) and gains i.i.d. CN(0, 1)."""
    rng = as_generator(rng)
    p_t, p_r, p_h = config.n_paths_t, config.n_paths_r, config.n_paths_h

    def angles(n):
        return rng.uniform(0.0, 2.0 * np.pi, n)

    return PathSet(
        t_aoa_az=angles(p_t),
        t_aoa_el=angles(p_t),
        t_aod=angles(p_t),
        t_gain=complex_normal(rng, (p_t,)),
        r_aoa=angles(p_r),
        r_aod_az=angles(p_r),
        r_aod_el=angles(p_r),
        r_gain=complex_normal(rng, (p_r,)),
        h_aoa=angles(p_h),
        h_aod=angles(p_h),
        h_gain=complex_normal(rng, (p_h,)),
    )


def build_los_matrices(config: SystemConfig, paths: PathSet):
    """Return ``(T, r_bar, h_bar)`` built from the path set.

    Each is a sum of rank-one terms ``gain / sqrt(P) * a_rx a_tx^T``.
    """
    paths.check(config)
    c = config
    T = np.zeros((c.n_ris, c.n_tx), dtype=complex)
    for az, el, aod, g in zip(paths.t_aoa_az, paths.t_aoa_el, paths.t_aod, paths.t_gain):
        T += np.outer(upa_response(c.m_h, c.m_v, c.d_h, c.d_v, az, el), ula_response(c.n_tx, c.d_t, aod)) * g
    T /= np.sqrt(c.n_paths_t)

    r_bar = np.zeros((c.n_rx, c.n_ris), dtype=complex)
    for aoa, az, el, g in zip(paths.r_aoa, paths.r_aod_az, paths.r_aod_el, paths.r_gain):
        r_bar += np.outer(ula_response(c.n_rx, c.d_r, aoa), upa_response(c.m_h, c.m_v, c.d_h, c.d_v, az, el)) * g
    r_bar /= np.sqrt(c.n_paths_r)

    h_bar = np.zeros((c.n_rx, c.n_tx), dtype=complex)
    for aoa, aod, g in zip(paths.h_aoa, paths.h_aod, paths.h_gain):
        h_bar += np.outer(ula_response(c.n_rx, c.d_r, aoa), ula_response(c.n_tx, c.d_t, aod)) * g
    h_bar /= np.sqrt(c.n_paths_h)
    return T, r_bar, h_bar


def _phases(config, phases):
    if phases is None:
        return PhaseShifts.zeros(config.n_ris)
    if not isinstance(phases, PhaseShifts):
        phases = PhaseShifts(phases)
    if len(phases) != config.n_ris:
        raise InvalidDimensionError(f"expected {config.n_ris} phases, got {len(phases)}")
    return phases


def reflection_matrix(phases: PhaseShifts) -> np.ndarray:
    return np.diag(np.exp(1j * phases.theta))


def assemble_channel(config: SystemConfig, R, T, H, phases: PhaseShifts):
    """``sqrt(beta_t beta_r) R Phi T + sqrt(beta_d) H``."""
    reflected = (R * np.exp(1j * phases.theta)) @ T
    return np.sqrt(config.beta_t * config.beta_r) * reflected + np.sqrt(config.beta_d) * H


def sample_realization(config, paths, phases, rng=None, los=None) -> ChannelRealization:
    """Draw one realization of R, H (Rician) and assemble G.

    ``los`` may carry a precomputed ``(T, r_bar, h_bar)`` triple.
    """
    rng = as_generator(rng)
    phases = _phases(config, phases)
    T, r_bar, h_bar = build_los_matrices(config, paths) if los is None else los
    c = config
    R = np.sqrt(c.los_power_r) * r_bar + np.sqrt(c.nlos_power_r) * complex_normal(rng, r_bar.shape)
    H = np.sqrt(c.los_power_h) * h_bar + np.sqrt(c.nlos_power_h) * complex_normal(rng, h_bar.shape)
    return ChannelRealization(T=T, R=R, H=H, G=assemble_channel(c, R, T, H, phases))


def mean_channel(config, T, r_bar, h_bar, theta):
    """Mean of G for the given phase vector; the only Phi-dependent statistic."""
    ris = (r_bar * np.exp(1j * np.asarray(theta))) @ T
    return (
        np.sqrt(config.beta_t * config.beta_r * config.los_power_r) * ris
        + np.sqrt(config.beta_d * config.los_power_h) * h_bar
    )


def transmit_covariance(config, T):
    psi = config.beta_t * config.beta_r * config.nlos_power_r * (T.conj().T @ T)
    psi = psi + config.beta_d * config.nlos_power_h * np.eye(T.shape[1])
    return 0.5 * (psi + psi.conj().T)


def effective_stats(config, paths, phases=None, los=None) -> EffectiveStats:
    """Mean and transmit covariance of the effective channel.

    Raises:
        SingularCovarianceError: if the symmetrized covariance has a
            nonpositive eigenvalue.
    """
    phases = _phases(config, phases)
    T, r_bar, h_bar = build_los_matrices(config, paths) if los is None else los
    g_bar = mean_channel(config, T, r_bar, h_bar, phases.theta)
    psi = transmit_covariance(config, T)
    smallest = np.linalg.eigvalsh(psi)[0]
    if smallest <= 0.0:
        raise SingularCovarianceError(
            f"transmit covariance is not positive definite (smallest eigenvalue {smallest:.3e})",
            eigenvalue=smallest,
        )
    return EffectiveStats(g_bar=g_bar, psi=psi)


def upsilon(config: SystemConfig, paths: PathSet) -> np.ndarray:
    """Large-RIS limit of psi / M: a weighted sum of transmit steering outer products."""
    paths.check(config)
    out = np.zeros((config.n_tx, config.n_tx), dtype=complex)
    for aod, g in zip(paths.t_aod, paths.t_gain):
        a = ula_response(config.n_tx, config.d_t, aod)
        out += abs(g) ** 2 * np.outer(a.conj(), a)
    out *= config.beta_t * config.beta_r * config.nlos_power_r / config.n_paths_t
    return 0.5 * (out + out.conj().T)


def without_ris(config: SystemConfig) -> SystemConfig:
    """Same system with the RIS removed (zero transmitter-RIS gain)."""
    return replace(config, beta_t=0.0)
