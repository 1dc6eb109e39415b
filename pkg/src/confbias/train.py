"""Denoising score matching with optional input perturbation."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import ConfigurationError, ShapeError, TrainingError
from .nn import AdamState, adam_step
from .score import _prepare, score_forward, score_param_grads

WEIGHTINGS = ("sigma-squared", "unweighted")
LAMBDA_GRID = (0.05, 0.1, 0.15, 0.2)
DIVERGENCE_LOSS = 1e6


@dataclass
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 64
    steps: int = 20000
    lambda_ip: float = 0.0
    seed: int = 0
    loss_weighting: str = "sigma-squared"
    log_every: int = 500

    def __post_init__(self):
        if not self.lr > 0:
            raise ConfigurationError("lr must be positive")
        if self.steps < 0 or self.batch_size < 1:
            raise ConfigurationError("steps must be >= 0 and batch_size >= 1")
        if not self.lambda_ip >= 0:
            raise ConfigurationError("lambda_ip must be >= 0")
        if self.loss_weighting not in WEIGHTINGS:
            raise ConfigurationError(f"loss_weighting must be one of {WEIGHTINGS}")
        if self.log_every < 1:
            raise ConfigurationError("log_every must be >= 1")

    def to_dict(self):
        return asdict(self)


@dataclass
class TrainLog:
    seed: int
    records: list = field(default_factory=list)  # (step, mean loss, seconds)
    final_loss: float = float("nan")

    def losses(self):
        return np.array([r[1] for r in self.records])


def _check_same_shape(*arrays):
    shapes = {np.shape(a) for a in arrays}
    if len(shapes) != 1:
        raise ShapeError(f"shape mismatch: {sorted(shapes)}")


def perturb(C0, sigma, eps):
    """Noised sample ``C0 + sigma * eps``."""
    _check_same_shape(C0, eps)
    return np.asarray(C0) + sigma * np.asarray(eps)


def perturb_ip(C0, sigma, eps, xi, lam):
    """Input-perturbed sample ``C0 + sigma * (eps + lam * xi)``."""
    _check_same_shape(C0, eps, xi)
    return np.asarray(C0) + sigma * (np.asarray(eps) + lam * np.asarray(xi))


def dsm_loss(m, C0, t, eps, xi, lam=0.0, weighting="sigma-squared"):
    """Batch-mean denoising loss and its parameter gradients.

    The network sees the input-perturbed sample while the regression target is
    built from the plain noised sample, ``-(C_t - C0) / sigma_t**2``. With
    ``lam = 0`` this is ordinary denoising score matching.

    ``C0``, ``eps`` and ``xi`` are ``(B, n, 3)`` (or a single ``(n, 3)``), ``t`` holds
    1-based level indices. Returns ``(loss, grads)`` with grads ordered as
    ``m.net.params()``.
    """
    if weighting not in WEIGHTINGS:
        raise ConfigurationError(f"weighting must be one of {WEIGHTINGS}")
    _check_same_shape(C0, eps, xi)
    C0 = np.asarray(C0, dtype=np.float64)
    eps, xi = np.asarray(eps, dtype=np.float64), np.asarray(xi, dtype=np.float64)
    if C0.ndim == 2:
        C0, eps, xi = C0[None], eps[None], xi[None]
    t = np.atleast_1d(np.asarray(t))
    L = m.schedule.L
    if np.any(t < 1) or np.any(t > L):
        raise IndexError(f"level index outside 1..{L}")
    sig = m.schedule.as_array()[t - 1]
    sig = np.broadcast_to(sig, (C0.shape[0],))
    s3 = sig[:, None, None]
    C_t = perturb(C0, s3, eps)
    C_in = perturb_ip(C0, s3, eps, xi, lam)
    Cb, sig, _ = _prepare(m, C_in, sig)
    s, cache = score_forward(m, Cb, sig)
    resid = s + (C_t - C0) / s3 ** 2
    w = s3 ** 2 if weighting == "sigma-squared" else np.ones_like(s3)
    per_sample = (w * resid ** 2).sum(axis=(1, 2))
    B = C0.shape[0]
    loss = float(per_sample.mean())
    if not np.isfinite(loss):
        raise TrainingError("non-finite loss")
    grads = score_param_grads(m, cache, sig, 2.0 * w * resid / B)
    return loss, grads


def _pool(dataset, n_atoms):
    if not dataset:
        raise ConfigurationError("training dataset is empty")
    parts = []
    for cs in dataset:
        conf = np.asarray(cs.conformers, dtype=np.float64)
        if conf.ndim != 3 or conf.shape[1:] != (n_atoms, 3):
            raise ShapeError(f"conformer set {cs.molecule_id!r} has shape {conf.shape}, "
                             f"model expects (k, {n_atoms}, 3)")
        parts.append(conf)
    pool = np.concatenate(parts)
    if len(pool) == 0:
        raise ConfigurationError("training dataset has no conformers")
    return pool


def train(dataset, m, cfg, progress=None):
    """Optimize ``m`` on ``dataset`` for ``cfg.steps`` Adam steps.

    Every step draws, in this fixed order, the conformer indices, the levels,
    ``eps`` and ``xi``; ``xi`` is drawn even when ``lambda_ip == 0`` so that runs
    differing only in lambda see the same random stream.
    Returns a new model and a :class:`TrainLog`; ``m`` is not modified.
    """
    pool = _pool(dataset, m.n_atoms)
    log = TrainLog(seed=cfg.seed)
    model = m.copy()
    if cfg.steps == 0:
        return model, log
    rng = np.random.default_rng(cfg.seed)
    state = AdamState.zeros_like(model.net)
    L = model.schedule.L
    B = cfg.batch_size
    shape = (B, model.n_atoms, 3)
    start = time.perf_counter()
    window = []
    for step in range(1, cfg.steps + 1):
        idx = rng.integers(len(pool), size=B)
        t = rng.integers(1, L + 1, size=B)
        eps = rng.standard_normal(shape)
        xi = rng.standard_normal(shape)
        try:
            loss, grads = dsm_loss(model, pool[idx], t, eps, xi, cfg.lambda_ip,
                                   cfg.loss_weighting)
        except TrainingError as exc:
            raise TrainingError(str(exc), step=step) from None
        if loss > DIVERGENCE_LOSS:
            raise TrainingError(f"loss diverged to {loss:.3g}", step=step)
        net, state = adam_step(model.net, grads, state, cfg.lr)
        model.net = net
        window.append(loss)
        if step % cfg.log_every == 0 or step == cfg.steps:
            log.records.append((step, float(np.mean(window)), time.perf_counter() - start))
            window = []
            if progress is not None:
                progress(log.records[-1])
    log.final_loss = log.records[-1][1]
    return model, log
