"""Oracle suites that check the closed forms against brute force.

Each suite returns a :class:`SuiteResult`; the Monte Carlo oracles here sample
the random matrices directly and never touch the closed-form code paths they
are compared against.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from ._rng import complex_normal
from .asymptotics import (
    affine_capacity,
    high_snr_expansion,
    large_m_capacity,
    large_m_expansion,
    power_scaling,
    slope_empirical,
)
from .capacity_bounds import CapacityQuery, bound_pair, lower_bound, mc_ecc, mc_ecc_random_phases, upper_bound
from .channel_model import EffectiveStats, SystemConfig, effective_stats, sample_path_set, upsilon
from .matrix_analysis import (
    EULER_GAMMA,
    EigenList,
    digamma,
    expected_det,
    expected_logdet,
    logdet_sandwich,
    principal_minor_sum,
)
from .phase_optimizer import GaParams, PhaseObjective, baseline_phases, ga_optimize

__all__ = ["SuiteResult", "SUITES", "run_suites"]

_CHUNK = 200_000


@dataclass
class SuiteResult:
    name: str
    passed: bool
    summary: str
    trials: int | None = None
    max_std_error: float | None = None
    seconds: float = 0.0
    failures: list = field(default_factory=list)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        extra = []
        if self.trials is not None:
            extra.append(f"trials={self.trials}")
        if self.max_std_error is not None:
            extra.append(f"max_se={self.max_std_error:.3g}")
        extra.append(f"{self.seconds:.1f}s")
        return f"[{status}] {self.name}: {self.summary} ({', '.join(extra)})"


def _rng(seed, tag):
    return np.random.default_rng([seed, tag])


def _random_psd(rng, n, floor=0.1):
    A = complex_normal(rng, (n, n))
    return A @ A.conj().T / n + floor * np.eye(n)


def _mc_mean(sampler, trials):
    """Mean and standard error of a chunked scalar sampler."""
    total, total_sq, done = 0.0, 0.0, 0
    while done < trials:
        size = min(_CHUNK, trials - done)
        x = sampler(size)
        total += x.sum()
        total_sq += np.square(x).sum()
        done += size
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0) * trials / max(trials - 1, 1)
    return mean, math.sqrt(var / trials)


def _det_sampler(rng, b_bar, root, log=False):
    p, q = b_bar.shape

    def draw(size):
        B = b_bar + root @ complex_normal(rng, (size, p, q))
        gram = B @ np.conj(np.swapaxes(B, -1, -2))
        if log:
            return np.linalg.slogdet(gram)[1]
        return np.linalg.det(gram).real

    return draw


def _moment_cases(rng, cases):
    for p in range(1, 5):
        for q in range(p, 5):
            for k in range(cases):
                scale = rng.uniform(0.2, 1.5)
                if p > 1 and k % 4 == 3:
                    b_bar = scale * np.outer(complex_normal(rng, (p,)), complex_normal(rng, (q,)))
                else:
                    b_bar = scale * complex_normal(rng, (p, q))
                yield p, q, b_bar


def minor_expansion(seed=0, matrices=100, tol=1e-9):
    rng = _rng(seed, 1)
    worst = 0.0
    failures = []
    for i in range(matrices):
        n = int(rng.integers(1, 7))
        A = complex_normal(rng, (n, n)) * rng.uniform(0.1, 3.0)
        for lam in (0.01, 1.0, 100.0):
            direct = np.linalg.det(np.eye(n) + lam * A)
            expansion = sum(lam ** t * principal_minor_sum(A, t) for t in range(n + 1))
            err = abs(direct - expansion) / abs(direct)
            worst = max(worst, err)
            if err > tol:
                failures.append((i, n, lam, err))
    return not failures, f"max relative error {worst:.2e} (tol {tol:g})", None, None, failures


def expected_det_mc(seed=0, cases=20, trials=1_000_000, n_sigma=3.0):
    rng = _rng(seed, 2)
    failures, worst_z, worst_se = [], 0.0, 0.0
    for p, q, b_bar in _moment_cases(rng, cases):
        omega = _random_psd(rng, p)
        closed = expected_det(b_bar, omega)
        root = np.linalg.cholesky(omega)
        mean, se = _mc_mean(_det_sampler(rng, b_bar, root), trials)
        z = abs(closed - mean) / se
        worst_z = max(worst_z, z)
        worst_se = max(worst_se, se / abs(mean))
        if z > n_sigma:
            failures.append((p, q, closed, mean, se))
    summary = f"{len(failures)} of {10 * cases} cases beyond {n_sigma:g} SE (worst {worst_z:.2f} SE)"
    return not failures, summary, trials, worst_se, failures


def expected_logdet_mc(seed=0, cases=20, trials=1_000_000, n_sigma=3.0):
    rng = _rng(seed, 3)
    failures, worst_z, worst_se = [], 0.0, 0.0
    anchor = abs(digamma(1.0) + EULER_GAMMA)
    if anchor > 1e-12:
        failures.append(("digamma(1)", anchor))
    for p, q, b_bar in _moment_cases(rng, cases):
        w = np.linalg.eigvalsh(b_bar @ b_bar.conj().T)
        eigs = EigenList(w[w > 1e-10 * w.max()])
        closed = expected_logdet(eigs, p, q)
        mean, se = _mc_mean(_det_sampler(rng, b_bar, np.eye(p), log=True), trials)
        z = abs(closed - mean) / se
        worst_z = max(worst_z, z)
        worst_se = max(worst_se, se)
        if z > n_sigma:
            failures.append((p, q, closed, mean, se))
    summary = (
        f"{len(failures)} of {10 * cases} cases beyond {n_sigma:g} SE (worst {worst_z:.2f} SE); "
        f"|psi(1) + gamma| = {anchor:.1e}"
    )
    return not failures, summary, trials, worst_se, failures


def sandwich_bounds(seed=0, draws=1000, slack=1e-9):
    rng = _rng(seed, 4)
    failures = []
    for i in range(draws):
        q = int(rng.integers(1, 7))
        p = int(rng.integers(1, q + 1))
        X = complex_normal(rng, (p, q))
        Z = _random_psd(rng, q, floor=rng.uniform(0.01, 1.0))
        lower, upper = logdet_sandwich(p, np.linalg.eigvalsh(Z))
        base = np.linalg.slogdet(X @ X.conj().T)[1]
        value = np.linalg.slogdet(X @ Z @ X.conj().T)[1]
        if not base + lower - slack <= value <= base + upper + slack:
            failures.append((i, p, q, value - base, lower, upper))
    return not failures, f"{len(failures)} violations in {draws} draws", None, None, failures


def random_system(rng, n_tx, n_rx, m_h=4, m_v=4):
    """A random system drop: geometry, Rician factors, paths and phases."""
    config = SystemConfig(
        n_tx=n_tx,
        n_rx=n_rx,
        m_h=m_h,
        m_v=m_v,
        beta_d=float(rng.uniform(0.2, 1.0)),
        los_power_r=float(rng.uniform(0.2, 0.9)),
        los_power_h=float(rng.uniform(0.2, 0.9)),
        n_paths_t=int(rng.integers(1, 4)),
        n_paths_r=int(rng.integers(1, 4)),
        n_paths_h=int(rng.integers(1, 4)),
    )
    paths = sample_path_set(config, rng)
    phases = baseline_phases("random", config.n_ris, rng)
    return config, paths, effective_stats(config, paths, phases)


def bound_ordering(seed=0, systems=50, trials=10_000, n_sigma=3.0):
    rng = _rng(seed, 5)
    failures, worst_se = [], 0.0
    for s in range(systems):
        n_tx, n_rx = (int(v) for v in rng.integers(1, 5, 2))
        _, _, stats = random_system(rng, n_tx, n_rx)
        for rho_db in (0, 10, 20, 30):
            query = CapacityQuery(10 ** (rho_db / 10), stats, trials, seed=int(rng.integers(2**31)))
            mc = mc_ecc(query)
            lower, upper = bound_pair(query)
            worst_se = max(worst_se, mc.std_error)
            slack = n_sigma * mc.std_error
            if lower.value > mc.value + slack or mc.value > upper.value + slack:
                failures.append((s, n_tx, n_rx, rho_db, lower.value, mc.value, upper.value))
    summary = f"{len(failures)} ordering violations over {systems} systems x 4 SNRs"
    return not failures, summary, trials, worst_se, failures


def upper_tightness(seed=0, drops=5, trials=10_000, gap=1.0):
    config = SystemConfig(n_tx=2, n_rx=4)
    failures, worst, worst_se = [], -math.inf, 0.0
    for d in range(drops):
        rng = _rng(seed, 600 + d)
        paths = sample_path_set(config, rng)
        stats = effective_stats(config, paths, baseline_phases("random", config.n_ris, rng))
        for rho_db in range(-10, 41, 5):
            query = CapacityQuery(10 ** (rho_db / 10), stats, trials, seed=d)
            mc = mc_ecc(query)
            diff = upper_bound(query).value - mc.value
            worst, worst_se = max(worst, diff), max(worst_se, mc.std_error)
            if diff > gap:
                failures.append((d, rho_db, diff))
    summary = f"max(upper - MC) = {worst:.3f} bits over {drops} drops (limit {gap:g})"
    return not failures, summary, trials, worst_se, failures


def c3_high_snr(seed=0, drops=3, trials=20_000, gap=0.1):
    shapes = [(1, 1), (1, 2), (2, 2), (2, 4), (3, 4), (4, 4)]
    rng = _rng(seed, 7)
    failures, worst, worst_se = [], -math.inf, 0.0
    for n_tx, n_rx in shapes:
        for _ in range(drops):
            _, _, stats = random_system(rng, n_tx, n_rx)
            query = CapacityQuery(1e4, stats, trials, seed=int(rng.integers(2**31)))
            mc = mc_ecc(query)
            diff = mc.value - lower_bound(query).value
            worst, worst_se = max(worst, diff), max(worst_se, mc.std_error)
            if diff > gap:
                failures.append((n_tx, n_rx, diff))
    summary = f"max(MC - C3) at 40 dB = {worst:.4f} bits (limit {gap:g})"
    return not failures, summary, trials, worst_se, failures


def high_snr_affine(seed=0, trials=20_000, slope_tol=0.05, affine_gap=0.15):
    shapes = [(1, 1), (2, 2), (2, 4), (3, 4), (4, 2), (3, 1), (4, 4)]
    rng = _rng(seed, 8)
    failures, worst_slope, worst_gap, worst_se = [], 0.0, 0.0, 0.0
    for n_tx, n_rx in shapes:
        _, _, stats = random_system(rng, n_tx, n_rx)
        mc_seed = int(rng.integers(2**31))
        slope = slope_empirical(stats, 1e3, 1e4, trials, mc_seed)
        target = min(n_tx, n_rx)
        rel = abs(slope - target) / target
        worst_slope = max(worst_slope, rel)
        if rel > slope_tol:
            failures.append(("slope", n_tx, n_rx, slope))
        if n_rx >= n_tx:
            expansion = high_snr_expansion(stats)
            mc = mc_ecc(CapacityQuery(1e4, stats, trials, mc_seed))
            diff = abs(mc.value - affine_capacity(expansion, 1e4))
            worst_gap, worst_se = max(worst_gap, diff), max(worst_se, mc.std_error)
            if diff > affine_gap:
                failures.append(("affine", n_tx, n_rx, diff))
    summary = f"worst slope error {100 * worst_slope:.2f}%, worst affine gap {worst_gap:.4f} bits"
    return not failures, summary, trials, worst_se, failures


def wide_offset_bracket(seed=0, systems=50, trials=100_000, n_sigma=3.0):
    rng = _rng(seed, 9)
    failures, worst_se, hard = [], 0.0, 0
    for s in range(systems):
        n_tx = int(rng.integers(2, 5))
        n_rx = int(rng.integers(1, n_tx))
        _, _, stats = random_system(rng, n_tx, n_rx)
        exp = high_snr_expansion(stats, trials=trials, seed=int(rng.integers(2**31)))
        lo, hi = exp.offset_bounds
        slack = n_sigma * exp.offset_std_error
        worst_se = max(worst_se, exp.offset_std_error)
        if not lo - slack <= exp.offset <= hi + slack:
            failures.append((s, n_tx, n_rx, lo, exp.offset, hi))
        if not lo <= exp.offset <= hi:
            hard += 1
    summary = f"{len(failures)} offsets outside bounds by > {n_sigma:g} SE ({hard} outside without slack)"
    return not failures, summary, trials, worst_se, failures


def large_m_convergence(seed=0, drops=3, trials=20_000, energy_db=10.0, m_grid=(16, 64, 256)):
    base = SystemConfig(n_tx=2, n_rx=4)
    failures, worst_se, gaps_all = [], 0.0, []
    for d in range(drops):
        paths = sample_path_set(base, _rng(seed, 1000 + d))
        ups = upsilon(base, paths)
        gaps = []
        for m in m_grid:
            system = replace(base, m_v=m // base.m_h)
            rho = 10 ** (energy_db / 10) / m
            ecc = mc_ecc_random_phases(system, paths, rho, trials, seed=d)
            limit = large_m_capacity(ups, base.n_rx, rho, m, trials, seed=d + 1)
            gaps.append(abs(ecc.value - limit.value))
            worst_se = max(worst_se, ecc.std_error, limit.std_error)
        gaps_all.append(tuple(round(g, 3) for g in gaps))
        if any(b >= a for a, b in zip(gaps, gaps[1:])):
            failures.append((d, gaps))
    summary = f"|ECC - C~| per drop over M={list(m_grid)}: {gaps_all}"
    return not failures, summary, trials, worst_se, failures


def power_scaling_suite(seed=0, drops=3, trials=10_000, rho_base=1.0, m_grid=(16, 64, 256, 1024)):
    expected = {0.5: "diverges", 1.0: "finite", 2.0: "vanishes"}
    base = SystemConfig(n_tx=2, n_rx=4)
    failures = []
    for d in range(drops):
        ups = upsilon(base, sample_path_set(base, _rng(seed, 1100 + d)))
        for alpha, kind in expected.items():
            try:
                verdict = power_scaling(ups, base.n_rx, rho_base, alpha, m_grid, trials, seed=d)
                got = verdict.limit_kind
            except Exception as exc:  # inconclusive traces count as failures
                got = f"error: {exc}"
            if got != kind:
                failures.append((d, alpha, kind, got))
    summary = f"{len(failures)} misclassified of {3 * drops} (alpha in 0.5/1/2)"
    return not failures, summary, trials, None, failures


def large_m_offset(seed=0, drops=10, tol=1e-9):
    failures, worst_step, worst_match = [], 0.0, 0.0
    rng = _rng(seed, 12)
    for _ in range(drops):
        n_tx = int(rng.integers(1, 4))
        n_rx = int(rng.integers(n_tx, 5))
        config = SystemConfig(n_tx=n_tx, n_rx=n_rx, n_paths_t=n_tx + 2)
        ups = upsilon(config, sample_path_set(config, rng))
        for m in (16, 64, 256):
            a = large_m_expansion(ups, n_tx, n_rx, m)
            b = large_m_expansion(ups, n_tx, n_rx, 2 * m)
            step = abs((b.offset - a.offset) + 1.0)
            stats = EffectiveStats(g_bar=np.zeros((n_rx, n_tx), dtype=complex), psi=m * ups)
            match = abs(high_snr_expansion(stats).offset - a.offset)
            worst_step, worst_match = max(worst_step, step), max(worst_match, match)
            if step > 1e-12 or match > tol:
                failures.append((n_tx, n_rx, m, step, match))
    summary = f"|doubling step + 1| <= {worst_step:.1e}, zero-mean expansion mismatch <= {worst_match:.1e}"
    return not failures, summary, None, None, failures


def ga_sanity(seed=0, m_values=(8, 16), random_draws=100, grid_points=10_000, grid_tol=1e-2, ga=None):
    ga = GaParams(seed=seed) if ga is None else ga
    rng = _rng(seed, 13)
    failures, notes = [], []
    for m in m_values:
        config = SystemConfig(n_tx=2, n_rx=4, m_h=4, m_v=m // 4)
        paths = sample_path_set(config, rng)
        fn = PhaseObjective(config, paths, 10.0)
        best_random = max(fn(baseline_phases("random", m, rng)) for _ in range(random_draws))
        zero = fn(np.zeros(m))
        trace = ga_optimize(config, paths, 10.0, ga, fitness=fn)
        notes.append(f"M={m}: GA {trace.best_objective:.3f} vs random {best_random:.3f} / zero {zero:.3f}")
        if not trace.best_objective > max(best_random, zero):
            failures.append((m, trace.best_objective, best_random, zero))
    config = SystemConfig(n_tx=1, n_rx=1, m_h=1, m_v=1, n_paths_t=1, n_paths_r=1, n_paths_h=1)
    paths = sample_path_set(config, rng)
    fn = PhaseObjective(config, paths, 10.0)
    grid = np.pi - 2 * np.pi * np.arange(grid_points) / grid_points
    grid_best = max(fn(np.array([t])) for t in grid)
    trace = ga_optimize(config, paths, 10.0, ga, fitness=fn)
    diff = abs(trace.best_objective - grid_best)
    notes.append(f"M=1: |GA - grid| = {diff:.2e}")
    if diff > grid_tol:
        failures.append((1, trace.best_objective, grid_best))
    return not failures, "; ".join(notes), None, None, failures


def determinism(seed=0, trials=2000):
    from .config import ExperimentConfig
    from .experiments import cmd_optimize, cmd_sweep_res, cmd_sweep_snr

    small_ga = GaParams(population=10, generations=5)
    runs = {
        "sweep-snr": lambda c: cmd_sweep_snr(c),
        "sweep-res a": lambda c: cmd_sweep_res(c, "a"),
        "sweep-res b": lambda c: cmd_sweep_res(c, "b"),
        "optimize": lambda c: "".join(cmd_optimize(c)),
    }
    cfg = ExperimentConfig(
        snr_grid_db=(0, 20),
        m_grid=(8, 16),
        mc_trials=trials,
        offset_trials=trials,
        seed=seed,
        ga=small_ga,
        phase_mode="optimized",
    )
    failures = [name for name, run in runs.items() if run(cfg) != run(cfg)]
    return not failures, f"{len(runs) - len(failures)} of {len(runs)} commands byte-identical", None, None, failures


SUITES = {
    "minor_expansion": minor_expansion,
    "expected_det_mc": expected_det_mc,
    "expected_logdet_mc": expected_logdet_mc,
    "sandwich_bounds": sandwich_bounds,
    "bound_ordering": bound_ordering,
    "upper_tightness": upper_tightness,
    "c3_high_snr": c3_high_snr,
    "high_snr_affine": high_snr_affine,
    "wide_offset_bracket": wide_offset_bracket,
    "large_m_convergence": large_m_convergence,
    "power_scaling": power_scaling_suite,
    "large_m_offset": large_m_offset,
    "ga_sanity": ga_sanity,
    "determinism": determinism,
}


def run_suite(name, **kwargs) -> SuiteResult:
    start = time.perf_counter()
    passed, summary, trials, se, failures = SUITES[name](**kwargs)
    return SuiteResult(
        name=name,
        passed=bool(passed),
        summary=summary,
        trials=trials,
        max_std_error=se,
        seconds=time.perf_counter() - start,
        failures=list(failures),
    )


def run_suites(names=None, seed=0, trials=None, echo=None):
    """Run suites in order; ``trials`` overrides every MC trial count."""
    results = []
    for name in names or SUITES:
        kwargs = {"seed": seed}
        if trials is not None and "trials" in SUITES[name].__code__.co_varnames:
            kwargs["trials"] = trials
        result = run_suite(name, **kwargs)
        if echo is not None:
            echo(result.line())
        results.append(result)
    return results
