"""Noise-level grids and annealed Langevin step sizes.

Levels are indexed 1..L with sigma_1 the largest and sigma_L the smallest, and
chains visit them in that order, so the last (smallest) step size equals ``a``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class NoiseSchedule:
    sigmas: tuple

    def __post_init__(self):
        sig = tuple(float(s) for s in self.sigmas)
        object.__setattr__(self, "sigmas", sig)
        if not sig:
            raise ConfigurationError("schedule needs at least one level")
        if not all(np.isfinite(s) and s > 0 for s in sig):
            raise ConfigurationError("noise levels must be finite and positive")
        if any(b >= a for a, b in zip(sig, sig[1:])):
            raise ConfigurationError("noise levels must be strictly descending")

    def __len__(self):
        return len(self.sigmas)

    @property
    def L(self):
        return len(self.sigmas)

    @property
    def sigma_max(self):
        return self.sigmas[0]

    @property
    def sigma_min(self):
        return self.sigmas[-1]

    def sigma(self, t):
        _check_level(self, t)
        return self.sigmas[t - 1]

    def as_array(self):
        return np.asarray(self.sigmas)


def _check_level(s, t):
    if not 1 <= int(t) <= len(s.sigmas) or int(t) != t:
        raise IndexError(f"level {t} outside 1..{len(s.sigmas)}")


def make_schedule(sigma_max, sigma_min, L):
    """Geometric grid from ``sigma_max`` down to ``sigma_min`` (both exact)."""
    if not (sigma_min > 0 and sigma_max > sigma_min):
        raise ConfigurationError(f"need sigma_max > sigma_min > 0, got {sigma_max}, {sigma_min}")
    if int(L) != L or L < 2:
        raise ConfigurationError(f"need L >= 2 levels, got {L}")
    L = int(L)
    r = (sigma_min / sigma_max) ** (1.0 / (L - 1))
    sig = [sigma_max * r ** i for i in range(L)]
    sig[0], sig[-1] = float(sigma_max), float(sigma_min)
    return NoiseSchedule(tuple(sig))


def step_size(s, t, a):
    """Langevin step ``a * sigma_t**2 / sigma_L**2`` for level ``t`` (1-based)."""
    if not a > 0:
        raise ConfigurationError(f"step size a must be positive, got {a}")
    _check_level(s, t)
    return a * s.sigmas[t - 1] ** 2 / s.sigmas[-1] ** 2
