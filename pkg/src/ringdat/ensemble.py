"""Disorder ensembles and parameter sweeps of the sink population.

Realization ``m`` of every ensemble uses the disorder keyed by ``(seed, m)``,
so the same on-site noise (scaled by sigma) is shared across all dephasing
rates, all disorder strengths and both ring topologies. Work items may run
in a process pool; results are always reduced in realization order, which
makes every output independent of the number of workers.
"""
from __future__ import annotations

import logging
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .dynamics import NoiseParams, Trajectory, evolve_open
from .integrate import IntegrationError, IntegratorConfig
from .lattice import RingTopology, hamiltonian_in_units_of_J, sample_disorder

log = logging.getLogger(__name__)


class RealizationError(RuntimeError):
    def __init__(self, index: int, cause: Exception):
        super().__init__(f"realization {index} failed: {cause}")
        self.index = index


@dataclass(frozen=True)
class EnsembleConfig:
    topology: RingTopology
    M: int = 50
    sigma_over_J: float = 0.0
    gamma_over_J: float = 0.0
    Gamma_over_J: float = 2.0
    t_eval: float = 100.0
    n_samples: int = 101
    seed: int = 0
    initial_site: int = 1
    sink_source: Optional[int] = None
    integrator: IntegratorConfig = field(default_factory=IntegratorConfig)

    def __post_init__(self):
        if self.M < 1:
            raise ValueError(f"M must be >= 1, got {self.M}")
        for name in ("sigma_over_J", "gamma_over_J", "Gamma_over_J", "t_eval"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and >= 0, got {value}")
        if not self.Gamma_over_J > 0:
            raise ValueError("Gamma_over_J must be > 0")
        if not self.t_eval > 0 or self.n_samples < 2:
            raise ValueError("need t_eval > 0 and at least two time samples")

    @property
    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.t_eval, self.n_samples)

    @property
    def noise(self) -> NoiseParams:
        return NoiseParams(self.gamma_over_J, self.Gamma_over_J, self.sink_source)

    def with_(self, **changes) -> "EnsembleConfig":
        return replace(self, **changes)


@dataclass(frozen=True)
class EnsembleAverage:
    times: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    M: int

    @property
    def final(self) -> tuple[float, float]:
        return float(self.mean[-1]), float(self.stderr[-1])


@dataclass(frozen=True)
class DisorderCurve:
    sigma_over_J: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    M: int
    t_eval: float


@dataclass(frozen=True)
class DephasingCurve:
    gamma_over_J: np.ndarray
    p_sink: np.ndarray
    t_eval: float


@dataclass(frozen=True)
class EfficiencyMap:
    """Ensemble-mean sink population at ``t_eval``; ``mean[i, j]`` is at (sigma_grid[i], gamma_grid[j])."""

    sigma_grid: np.ndarray
    gamma_grid: np.ndarray
    mean: np.ndarray
    stderr: np.ndarray
    M: int
    t_eval: float


def run_realization(cfg: EnsembleConfig, index: int) -> Trajectory:
    """Integrate one disorder realization; deterministic in ``(cfg, index)``."""
    n = cfg.topology.n_sites
    disorder = sample_disorder(n, cfg.sigma_over_J, cfg.seed, index)
    H = hamiltonian_in_units_of_J(cfg.topology, disorder.offsets)
    try:
        return evolve_open(H, cfg.noise, cfg.initial_site, cfg.times, cfg.integrator)
    except IntegrationError as exc:
        raise RealizationError(index, exc) from exc


def _sink_series(task: tuple[EnsembleConfig, int]) -> np.ndarray:
    cfg, index = task
    return run_realization(cfg, index).sink_population


def _run_tasks(fn: Callable, tasks: Sequence, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    ctx = multiprocessing.get_context("spawn")
    with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _cell_tasks(cfg: EnsembleConfig) -> list[tuple[EnsembleConfig, int]]:
    # without disorder every realization is the same run
    count = 1 if cfg.sigma_over_J == 0 else cfg.M
    return [(cfg, m) for m in range(count)]


def _reduce(cfg: EnsembleConfig, series: list[np.ndarray]) -> EnsembleAverage:
    if cfg.sigma_over_J == 0:
        (only,) = series
        return EnsembleAverage(cfg.times, only.copy(), np.zeros_like(only), cfg.M)
    samples = np.stack(series)
    mean = samples.mean(axis=0)
    if cfg.M > 1:
        stderr = samples.std(axis=0, ddof=1) / np.sqrt(cfg.M)
    else:
        stderr = np.zeros_like(mean)
    return EnsembleAverage(cfg.times, mean, stderr, cfg.M)


def average_many(cfgs: Iterable[EnsembleConfig], workers: int = 1) -> list[EnsembleAverage]:
    """Ensemble averages for several configurations from one shared pool of work items."""
    cfgs = list(cfgs)
    tasks, bounds = [], []
    for cfg in cfgs:
        cell = _cell_tasks(cfg)
        bounds.append((len(tasks), len(tasks) + len(cell)))
        tasks.extend(cell)
    log.info("running %d realizations over %d ensembles with %d worker(s)", len(tasks), len(cfgs), workers)
    results = _run_tasks(_sink_series, tasks, workers)
    return [_reduce(cfg, results[a:b]) for cfg, (a, b) in zip(cfgs, bounds)]


def ensemble_average(cfg: EnsembleConfig, workers: int = 1) -> EnsembleAverage:
    """Mean and standard error of p_sink(t) over realizations 0..M-1."""
    return average_many([cfg], workers)[0]


def sweep_disorder(
    template: EnsembleConfig, sigma_grid: Sequence[float], M: Optional[int] = None, workers: int = 1
) -> DisorderCurve:
    M = template.M if M is None else M
    cfgs = [template.with_(sigma_over_J=float(s), M=M) for s in sigma_grid]
    finals = [a.final for a in average_many(cfgs, workers)]
    return DisorderCurve(
        np.asarray(sigma_grid, dtype=float),
        np.array([f[0] for f in finals]),
        np.array([f[1] for f in finals]),
        M,
        template.t_eval,
    )


def sweep_dephasing(template: EnsembleConfig, gamma_grid: Sequence[float], workers: int = 1) -> DephasingCurve:
    """Clean-ring sink population against dephasing rate (no disorder, a single run per point)."""
    cfgs = [template.with_(sigma_over_J=0.0, M=1, gamma_over_J=float(g)) for g in gamma_grid]
    values = np.array([a.final[0] for a in average_many(cfgs, workers)])
    return DephasingCurve(np.asarray(gamma_grid, dtype=float), values, template.t_eval)


def dat_map(
    template: EnsembleConfig,
    sigma_grid: Sequence[float],
    gamma_grid: Sequence[float],
    M: Optional[int] = None,
    workers: int = 1,
) -> EfficiencyMap:
    """Ensemble-mean sink population at t_eval over the (sigma, gamma) grid.

    Any failed realization aborts the whole map.
    """
    if len(sigma_grid) == 0 or len(gamma_grid) == 0:
        raise ValueError("grids must be non-empty")
    M = template.M if M is None else M
    cfgs = [
        template.with_(sigma_over_J=float(s), gamma_over_J=float(g), M=M)
        for s in sigma_grid
        for g in gamma_grid
    ]
    finals = np.array([a.final for a in average_many(cfgs, workers)])
    shape = (len(sigma_grid), len(gamma_grid))
    return EfficiencyMap(
        np.asarray(sigma_grid, dtype=float),
        np.asarray(gamma_grid, dtype=float),
        finals[:, 0].reshape(shape),
        finals[:, 1].reshape(shape),
        M,
        template.t_eval,
    )


def dat_comparison(
    template: EnsembleConfig,
    sigma_over_J: float = 0.5,
    gamma_over_J: float = 0.1,
    M: Optional[int] = None,
    workers: int = 1,
) -> dict[str, EnsembleAverage]:
    """Sink population curves without noise, with disorder only, and with disorder plus dephasing.

    The two disordered curves use identical disorder samples.
    """
    M = template.M if M is None else M
    cfgs = {
        "clean": template.with_(sigma_over_J=0.0, gamma_over_J=0.0, M=1),
        "disorder": template.with_(sigma_over_J=sigma_over_J, gamma_over_J=0.0, M=M),
        "disorder_dephasing": template.with_(sigma_over_J=sigma_over_J, gamma_over_J=gamma_over_J, M=M),
    }
    results = average_many(cfgs.values(), workers)
    return dict(zip(cfgs, results))
