"""Experiment drivers behind the command line: SNR sweeps, RIS-size sweeps and
phase optimization, all emitting CSV.

Every random quantity is derived from the master seed through
:func:`subseed`, so a run is reproducible from its config file and seed.
"""
from __future__ import annotations

import io
from dataclasses import replace

import numpy as np

from .asymptotics import affine_capacity, high_snr_expansion, large_m_capacity, large_m_upper_bound
from .capacity_bounds import CapacityQuery, bound_pair, mc_ecc, mc_ecc_random_phases
from .channel_model import build_los_matrices, effective_stats, sample_path_set, upsilon
from .config import ExperimentConfig
from .errors import ConfigError
from .phase_optimizer import PhaseObjective, baseline_phases, ga_optimize

__all__ = [
    "subseed",
    "format_value",
    "write_csv",
    "cmd_sweep_snr",
    "cmd_sweep_res",
    "cmd_optimize",
    "SWEEP_SNR_COLUMNS",
    "SWEEP_RES_COLUMNS",
]

SWEEP_SNR_COLUMNS = ("rho_db", "mc", "upper", "lower", "asymptote")
LONG_COLUMNS = ("rho_db", "kind", "value", "std_error", "trials")
SWEEP_RES_COLUMNS = {
    "a": ("M", "ecc_optimized", "ecc_random", "ecc_zero"),
    "b": ("M", "ecc", "asymptotic", "asymptotic_upper"),
}

# stream tags for subseed()
_PATHS, _PHASES, _MC, _OFFSET, _GA, _RANDOM_ECC, _LIMIT = range(1, 8)


def subseed(seed, *keys) -> int:
    """Deterministic 63-bit child seed for a (seed, keys...) tuple."""
    state = np.random.SeedSequence([int(seed)] + [int(k) for k in keys]).generate_state(2, np.uint32)
    return int((int(state[0]) << 31) ^ int(state[1]))


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def format_value(value):
    if value is None:
        return ""
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    if isinstance(value, str):
        return value
    return f"{float(value):.10g}"


def write_csv(columns, rows, comments=(), handle=None) -> str:
    """Render rows as CSV text (comment lines first) and optionally write it."""
    buf = io.StringIO()
    for line in comments:
        buf.write(f"# {line}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(format_value(row[c]) for c in columns) + "\n")
    text = buf.getvalue()
    if handle is not None:
        handle.write(text)
    return text


def _path_comments(cfg: ExperimentConfig, paths):
    lines = [f"seed = {cfg.seed}"]
    lines += [f"{k} = {v!r}" for k, v in cfg.system.to_dict().items()]
    for name, values in paths.describe().items():
        lines.append(f"path.{name} = [{', '.join(f'{x:.17g}' for x in values)}]")
    return lines


def _drop_paths(cfg: ExperimentConfig):
    return sample_path_set(cfg.system, subseed(cfg.seed, _PATHS))


def _ga_params(cfg, key):
    return replace(cfg.ga, seed=subseed(cfg.seed, _GA, cfg.ga.seed, key), workers=cfg.threads)


def _phases(cfg, system, paths, rho, los=None):
    if cfg.phase_mode == "zero":
        return baseline_phases("zero", system.n_ris)
    if cfg.phase_mode == "random":
        return baseline_phases("random", system.n_ris, subseed(cfg.seed, _PHASES, system.n_ris))
    objective = PhaseObjective(system, paths, rho, los=los)
    return ga_optimize(system, paths, rho, _ga_params(cfg, system.n_ris), fitness=objective).best_phases


def cmd_sweep_snr(cfg: ExperimentConfig, handle=None, long_format=False) -> str:
    """MC capacity, both bounds and the high-SNR asymptote over the SNR grid.

    For ``N_t > N_r`` the asymptote uses the closed-form upper bound on the
    power offset.
    """
    system = cfg.system
    paths = _drop_paths(cfg)
    los = build_los_matrices(system, paths)
    phases = _phases(cfg, system, paths, db_to_linear(cfg.optimize_rho_db), los)
    stats = effective_stats(system, paths, phases, los=los)
    expansion = high_snr_expansion(
        stats, trials=cfg.offset_trials, seed=subseed(cfg.seed, _OFFSET), workers=cfg.threads
    )
    offset = expansion.offset if expansion.offset_bounds is None else expansion.offset_bounds[1]

    rows, long_rows = [], []
    for i, rho_db in enumerate(cfg.snr_grid_db):
        rho = db_to_linear(rho_db)
        query = CapacityQuery(rho, stats, cfg.mc_trials, subseed(cfg.seed, _MC, i), cfg.threads)
        mc = mc_ecc(query)
        lower, upper = bound_pair(query)
        rows.append(
            {
                "rho_db": rho_db,
                "mc": mc.value,
                "upper": upper.value,
                "lower": lower.value,
                "asymptote": affine_capacity(expansion, rho, offset),
            }
        )
        long_rows += [r.row(rho_db) for r in (mc, upper, lower)]
    comments = ["riscap sweep-snr", f"phase_mode = {cfg.phase_mode}"] + _path_comments(cfg, paths)
    comments.append("phases = [" + ", ".join(f"{x:.17g}" for x in phases.theta) + "]")
    if long_format:
        return write_csv(LONG_COLUMNS, long_rows, comments, handle)
    return write_csv(SWEEP_SNR_COLUMNS, rows, comments, handle)


def _system_for(cfg, m):
    if m % cfg.system.m_h:
        raise ConfigError(f"M = {m} is not a multiple of m_h = {cfg.system.m_h}")
    return replace(cfg.system, m_v=m // cfg.system.m_h)


def cmd_sweep_res(cfg: ExperimentConfig, mode="a", handle=None) -> str:
    """Capacity versus the number of reflecting elements.

    Mode ``a`` compares GA-optimized, random and zero phases at a fixed SNR.
    Mode ``b`` scales the SNR as ``E / M`` with random phases and reports the
    large-RIS limit and its Jensen upper bound alongside.
    """
    if mode not in SWEEP_RES_COLUMNS:
        raise ConfigError(f"unknown sweep-res mode {mode!r}")
    systems = [_system_for(cfg, m) for m in cfg.m_grid]
    paths = _drop_paths(cfg)
    rows = []
    for system in systems:
        m = system.n_ris
        los = build_los_matrices(system, paths)
        random_seed = subseed(cfg.seed, _RANDOM_ECC, m)
        if mode == "a":
            rho = db_to_linear(cfg.rho_db)
            objective = PhaseObjective(system, paths, rho, los=los)
            best = ga_optimize(system, paths, rho, _ga_params(cfg, m), fitness=objective).best_phases
            mc_seed = subseed(cfg.seed, _MC, m)
            ecc = {}
            for name, phases in (("ecc_optimized", best), ("ecc_zero", baseline_phases("zero", m))):
                stats = effective_stats(system, paths, phases, los=los)
                ecc[name] = mc_ecc(CapacityQuery(rho, stats, cfg.mc_trials, mc_seed, cfg.threads)).value
            ecc["ecc_random"] = mc_ecc_random_phases(
                system, paths, rho, cfg.mc_trials, random_seed, cfg.threads, los=los
            ).value
            rows.append({"M": m, **ecc})
        else:
            rho = db_to_linear(cfg.energy_db) / m
            ups = upsilon(system, paths)
            rows.append(
                {
                    "M": m,
                    "ecc": mc_ecc_random_phases(
                        system, paths, rho, cfg.mc_trials, random_seed, cfg.threads, los=los
                    ).value,
                    "asymptotic": large_m_capacity(
                        ups, system.n_rx, rho, m, cfg.mc_trials, subseed(cfg.seed, _LIMIT), cfg.threads
                    ).value,
                    "asymptotic_upper": large_m_upper_bound(ups, system.n_rx, rho, m).value,
                }
            )
    comments = [f"riscap sweep-res mode {mode}"] + _path_comments(cfg, paths)
    return write_csv(SWEEP_RES_COLUMNS[mode], rows, comments, handle)


def cmd_optimize(cfg: ExperimentConfig, handle=None, phases_handle=None):
    """Run the GA; return ``(trace_csv, phases_text)``.

    The phases text holds one phase per line in radians with 17 significant
    digits.
    """
    system = cfg.system
    paths = _drop_paths(cfg)
    rho = db_to_linear(cfg.optimize_rho_db)
    trace = ga_optimize(system, paths, rho, _ga_params(cfg, system.n_ris))
    rows = [{"generation": g, "best": b, "mean": m} for g, (b, m) in enumerate(trace.history)]
    comments = ["riscap optimize", f"best = {trace.best_objective:.10g}"] + _path_comments(cfg, paths)
    text = write_csv(("generation", "best", "mean"), rows, comments, handle)
    phases_text = "".join(f"{x:.17g}\n" for x in trace.best_phases.theta)
    if phases_handle is not None:
        phases_handle.write(phases_text)
    return text, phases_text
