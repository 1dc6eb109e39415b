"""Annealed Langevin sampling and its zero-noise deterministic reverse.

Both samplers share :func:`anneal`, the level loop. Any object exposing
``n_atoms``, ``schedule``, ``center_input`` and ``score(C, sigma)`` on batches
of shape ``(B, n, 3)`` can drive them, trained or analytic.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConfigurationError, SamplingError
from .schedule import step_size


@dataclass
class SamplerConfig:
    a: float = 1e-5
    T: int = 50
    seed: int = 0
    init_scale: float | None = None  # defaults to sigma_1

    def __post_init__(self):
        if not self.a > 0:
            raise ConfigurationError("smallest step size a must be positive")
        if self.T < 1:
            raise ConfigurationError("T must be >= 1")
        if self.init_scale is not None and not self.init_scale > 0:
            raise ConfigurationError("init_scale must be positive")

    def to_dict(self):
        return asdict(self)


def _center(X):
    return X - X.mean(axis=-2, keepdims=True)


def anneal(model, C, a, steps, t_start=1, noise=None):
    """Run the annealed level loop from level ``t_start`` down to ``L``.

    ``C`` is ``(B, n, 3)``. With ``noise=None`` the update is the drift only;
    otherwise ``noise`` supplies the standard normal draws with shape
    ``(B, levels * steps, n, 3)`` consumed in order.
    """
    sched = model.schedule
    L = sched.L
    if not 1 <= t_start <= L:
        raise IndexError(f"start level {t_start} outside 1..{L}")
    C = np.array(C, dtype=np.float64)
    k = 0
    for t in range(t_start, L + 1):
        sigma = sched.sigmas[t - 1]
        alpha = step_size(sched, t, a)
        root = np.sqrt(2.0 * alpha)
        for i in range(1, steps + 1):
            C = C + alpha * model.score(C, sigma)
            if noise is not None:
                C = C + root * noise[:, k]
                k += 1
            if not np.all(np.isfinite(C)):
                raise SamplingError("non-finite coordinates", level=t, iteration=i)
    return C


def chain_noise(model, cfg, chain_index):
    """Prior draw and Langevin noise for one chain, from stream ``(seed, chain_index)``."""
    rng = np.random.default_rng([cfg.seed, chain_index])
    n = model.n_atoms
    scale = model.schedule.sigma_max if cfg.init_scale is None else cfg.init_scale
    init = scale * rng.standard_normal((n, 3))
    z = rng.standard_normal((model.schedule.L * cfg.T, n, 3))
    if model.center_input:
        init, z = _center(init), _center(z)
    return init, z


def langevin_sample_batch(model, cfg, n_samples, first_chain=0, chunk=512):
    """Generate ``n_samples`` conformations; chain ``j`` is seeded by ``(seed, first_chain + j)``."""
    out = []
    for lo in range(0, n_samples, chunk):
        ids = range(first_chain + lo, first_chain + min(lo + chunk, n_samples))
        draws = [chain_noise(model, cfg, j) for j in ids]
        init = np.stack([d[0] for d in draws])
        noise = np.stack([d[1] for d in draws])
        out.append(anneal(model, init, cfg.a, cfg.T, 1, noise))
    n = model.n_atoms
    return np.concatenate(out) if out else np.empty((0, n, 3))


def langevin_sample(model, cfg):
    """One conformation from annealed Langevin dynamics."""
    return langevin_sample_batch(model, cfg, 1)[0]


def deterministic_reverse(model, C_start, t_start, det_steps=1, a=1e-5):
    """Zero-noise reverse from level ``t_start``: drift-only updates down to ``sigma_L``.

    ``C_start`` may be a single ``(n, 3)`` conformation or a batch.
    """
    if det_steps < 1:
        raise ConfigurationError("det_steps must be >= 1")
    C = np.asarray(C_start, dtype=np.float64)
    single = C.ndim == 2
    out = anneal(model, C[None] if single else C, a, det_steps, t_start)
    return out[0] if single else out
