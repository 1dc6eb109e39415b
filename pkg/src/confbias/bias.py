"""Exposure-bias estimation by noising real conformers and reversing without noise."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import skew

from .errors import ConfigurationError, InsufficientDataError, ShapeError
from .sampler import deterministic_reverse
from .train import perturb

MIN_HISTOGRAM_SAMPLES = 100


@dataclass(eq=False)
class LevelBias:
    t: int
    sigma: float
    mean_abs_bias: float
    n: int
    errors: np.ndarray | None = None  # per-sample e = |C0 - C0_hat|_1 / n_atoms
    signed: np.ndarray | None = None  # per-sample C0 - C0_hat, (n, n_atoms, 3)


@dataclass(eq=False)
class BiasReport:
    levels: list = field(default_factory=list)

    @property
    def global_mean(self):
        n = np.array([lv.n for lv in self.levels], dtype=float)
        if n.sum() == 0:
            return float("nan")
        m = np.array([lv.mean_abs_bias if lv.n else 0.0 for lv in self.levels])
        return float((m * n).sum() / n.sum())

    @property
    def sigmas(self):
        return np.array([lv.sigma for lv in self.levels])

    @property
    def means(self):
        return np.array([lv.mean_abs_bias for lv in self.levels])

    def pooled_signed_errors(self):
        parts = [lv.signed.reshape(-1) for lv in self.levels if lv.signed is not None]
        return np.concatenate(parts) if parts else np.empty(0)

    def rows(self):
        return [(lv.t, lv.sigma, lv.mean_abs_bias, lv.n) for lv in self.levels]


def _pool(dataset, n_atoms):
    if not dataset:
        raise ConfigurationError("dataset is empty")
    pool = np.concatenate([np.asarray(cs.conformers, dtype=np.float64) for cs in dataset])
    if pool.ndim != 3 or pool.shape[1:] != (n_atoms, 3):
        raise ShapeError(f"dataset conformers {pool.shape[1:]} do not match {n_atoms} atoms")
    return pool


def _draw(pool, n_atoms, key, com_free):
    rng = np.random.default_rng(key)
    C0 = pool[rng.integers(len(pool))]
    eps = rng.standard_normal((n_atoms, 3))
    if com_free:
        eps = eps - eps.mean(axis=0)
    return C0, eps


def estimate_bias(model, dataset, samples_per_level, det_steps=1, seed=0, a=1e-5,
                  mode="stratified", keep_raw=False, com_free_noise=False):
    """Per-level mean reconstruction error after a deterministic reverse.

    For each probe a clean conformer ``C0`` and ``eps`` are drawn, the start point
    is ``C0 + sigma_t * eps``, and the error is the L1 norm of ``C0 - C0_hat``
    over all coordinates divided by the atom count.

    ``mode="stratified"`` probes every level with ``samples_per_level`` draws
    seeded by ``(seed, t, k)``. ``mode="uniform"`` makes ``samples_per_level * L``
    draws with a uniformly random level each, seeded by ``(seed, k)``; levels
    that receive no draws report ``nan`` with ``n = 0``.
    """
    if samples_per_level < 1:
        raise ConfigurationError("samples_per_level must be >= 1")
    if mode not in ("stratified", "uniform"):
        raise ConfigurationError(f"unknown mode {mode!r}")
    n = model.n_atoms
    pool = _pool(dataset, n)
    L = model.schedule.L
    probes = {t: [] for t in range(1, L + 1)}
    if mode == "stratified":
        for t in range(1, L + 1):
            probes[t] = [_draw(pool, n, [seed, t, k], com_free_noise) for k in range(samples_per_level)]
    else:
        for k in range(samples_per_level * L):
            t = int(np.random.default_rng([seed, k]).integers(1, L + 1))
            probes[t].append(_draw(pool, n, [seed, k, t], com_free_noise))

    report = BiasReport()
    for t in range(1, L + 1):
        sigma = model.schedule.sigmas[t - 1]
        if not probes[t]:
            report.levels.append(LevelBias(t, sigma, float("nan"), 0))
            continue
        C0 = np.stack([p[0] for p in probes[t]])
        eps = np.stack([p[1] for p in probes[t]])
        C_hat = deterministic_reverse(model, perturb(C0, sigma, eps), t, det_steps, a)
        diff = C0 - C_hat
        e = np.abs(diff).sum(axis=(1, 2)) / n
        report.levels.append(LevelBias(t, sigma, float(e.mean()), len(e),
                                       e if keep_raw else None, diff if keep_raw else None))
    return report


@dataclass(eq=False)
class Histogram:
    edges: np.ndarray
    counts: np.ndarray
    mean: float
    std: float
    skewness: float
    degenerate: bool

    def rows(self):
        return [(float(lo), float(hi), int(c))
                for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts)]


def bias_histogram(values, bins=40):
    """Fixed-width histogram over mean +- 4 std plus moment summary.

    Constant input yields a single occupied bin and ``degenerate=True``.
    """
    x = np.asarray(values, dtype=np.float64).reshape(-1)
    if x.size < MIN_HISTOGRAM_SAMPLES:
        raise InsufficientDataError(f"need >= {MIN_HISTOGRAM_SAMPLES} samples, got {x.size}")
    mean, std = float(x.mean()), float(x.std())
    if std == 0.0:
        edges = np.array([mean - 0.5, mean + 0.5])
        return Histogram(edges, np.array([x.size]), mean, 0.0, 0.0, True)
    edges = np.linspace(mean - 4 * std, mean + 4 * std, bins + 1)
    counts, _ = np.histogram(x, bins=edges)
    return Histogram(edges, counts, mean, std, float(skew(x)), False)
