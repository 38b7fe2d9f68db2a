"""RIS phase design on statistical CSI with a real-coded genetic algorithm.

Only the channel mean depends on the phases, so the objective precomputes the
LoS matrices and the transmit covariance once and re-evaluates the Jensen
upper bound for every candidate.
"""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ._rng import as_generator
from .capacity_bounds import CapacityQuery, upper_bound
from .channel_model import (
    EffectiveStats,
    PhaseShifts,
    build_los_matrices,
    mean_channel,
    transmit_covariance,
    wrap_phase,
)
from .errors import RisCapError
from .matrix_analysis import DEFAULT_PARAMS

__all__ = [
    "GaParams",
    "OptimizationTrace",
    "PhaseObjective",
    "objective",
    "ga_optimize",
    "baseline_phases",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GaParams:
    """Genetic algorithm settings.

    ``mutation_rate=None`` means one expected mutation per individual (1/M).
    """

    population: int = 50
    generations: int = 200
    tournament_size: int = 3
    crossover_rate: float = 0.9
    mutation_rate: float | None = None
    mutation_sigma: float = 0.1 * math.pi
    elitism: int = 2
    seed: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.population < 1 or self.generations < 1 or self.tournament_size < 1:
            raise ValueError("population, generations and tournament_size must be positive")
        if not 0 <= self.elitism < self.population:
            raise ValueError("elitism must satisfy 0 <= elitism < population")
        if self.tournament_size > self.population:
            raise ValueError("tournament_size cannot exceed the population")
        for name in ("crossover_rate", "mutation_rate"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.mutation_sigma <= 0:
            raise ValueError("mutation_sigma must be positive")


@dataclass
class OptimizationTrace:
    best_phases: PhaseShifts
    best_objective: float
    history: list = field(default_factory=list)

    def write_csv(self, path_or_file):
        """Write ``generation,best,mean`` rows with 10 significant digits."""
        own = isinstance(path_or_file, str)
        handle = open(path_or_file, "w", newline="") if own else path_or_file
        try:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["generation", "best", "mean"])
            for gen, (best, mean) in enumerate(self.history):
                writer.writerow([gen, f"{best:.10g}", f"{mean:.10g}"])
        finally:
            if own:
                handle.close()


class PhaseObjective:
    """Upper-bound capacity as a function of the RIS phase vector."""

    def __init__(self, config, paths, rho, params=DEFAULT_PARAMS, los=None):
        self.config = config
        self.rho = rho
        self.params = params
        self.los = build_los_matrices(config, paths) if los is None else los
        self.psi = transmit_covariance(config, self.los[0])

    def stats(self, theta) -> EffectiveStats:
        T, r_bar, h_bar = self.los
        return EffectiveStats(g_bar=mean_channel(self.config, T, r_bar, h_bar, theta), psi=self.psi)

    def __call__(self, theta) -> float:
        theta = theta.theta if isinstance(theta, PhaseShifts) else np.asarray(theta, dtype=float)
        query = CapacityQuery(rho=self.rho, stats=self.stats(theta), mc_trials=1)
        return upper_bound(query, self.params).value


def objective(phases, config, paths, rho) -> float:
    """Upper-bound capacity (bits/s/Hz) of the system with the given phases."""
    return PhaseObjective(config, paths, rho)(phases)


def _safe(fn, theta):
    try:
        value = fn(theta)
    except (RisCapError, np.linalg.LinAlgError, ValueError, OverflowError) as exc:
        log.warning("objective failed, scoring individual as -inf: %s", exc)
        return -math.inf
    return value if math.isfinite(value) else -math.inf


def _evaluate(fn, population, workers):
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return np.array(list(pool.map(lambda row: _safe(fn, row), population)))
    return np.array([_safe(fn, row) for row in population])


def _tournament(scores, draws):
    contenders = scores[draws]
    return draws[np.arange(draws.shape[0]), np.argmax(contenders, axis=1)]


def ga_optimize(config, paths, rho, ga: GaParams = GaParams(), fitness=None) -> OptimizationTrace:
    """Maximize the upper-bound capacity over the RIS phases.

    Tournament selection, uniform crossover, Gaussian mutation wrapped back
    into (-pi, pi] and elitism. The all-zero phase vector seeds the initial
    population. Every random decision is drawn on the calling thread, so the
    trace depends only on ``ga.seed``.
    """
    fn = PhaseObjective(config, paths, rho) if fitness is None else fitness
    m = config.n_ris
    rng = np.random.default_rng(ga.seed)
    mut_rate = 1.0 / m if ga.mutation_rate is None else ga.mutation_rate
    n_pop, n_elite = ga.population, ga.elitism

    pop = wrap_phase(rng.uniform(-np.pi, np.pi, (n_pop, m)))
    pop[0] = 0.0
    scores = _evaluate(fn, pop, ga.workers)
    best_idx = int(np.argmax(scores))
    best_theta, best_score = pop[best_idx].copy(), scores[best_idx]
    history = []

    for gen in range(ga.generations):
        finite = scores[np.isfinite(scores)]
        history.append((float(best_score), float(finite.mean()) if finite.size else -math.inf))
        if gen == ga.generations - 1:
            break
        order = np.argsort(-scores, kind="stable")
        n_child = n_pop - n_elite
        n_pairs = (n_child + 1) // 2
        parents = _tournament(scores, rng.integers(0, n_pop, (2 * n_pairs, ga.tournament_size)))
        p1, p2 = pop[parents[0::2]], pop[parents[1::2]]
        cross = rng.random(n_pairs) < ga.crossover_rate
        mask = (rng.random((n_pairs, m)) < 0.5) & cross[:, None]
        children = np.concatenate([np.where(mask, p2, p1), np.where(mask, p1, p2)])[:n_child]
        mutate = rng.random(children.shape) < mut_rate
        noise = rng.normal(0.0, ga.mutation_sigma, children.shape)
        children = wrap_phase(children + np.where(mutate, noise, 0.0))

        child_scores = _evaluate(fn, children, ga.workers)
        pop = np.concatenate([pop[order[:n_elite]], children])
        scores = np.concatenate([scores[order[:n_elite]], child_scores])
        idx = int(np.argmax(scores))
        if scores[idx] > best_score:
            best_theta, best_score = pop[idx].copy(), scores[idx]

    return OptimizationTrace(
        best_phases=PhaseShifts(best_theta), best_objective=float(best_score), history=history
    )


def baseline_phases(kind, m, rng=None) -> PhaseShifts:
    """Reference phase vectors: ``"zero"`` (identity reflection) or ``"random"``."""
    if kind == "zero":
        return PhaseShifts.zeros(m)
    if kind == "random":
        return PhaseShifts(wrap_phase(as_generator(rng).uniform(-np.pi, np.pi, m)))
    raise ValueError(f"unknown baseline kind {kind!r}")
