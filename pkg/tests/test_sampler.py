import numpy as np
import pytest

from confbias.errors import ConfigurationError, SamplingError
from confbias.experiments import gaussian_oracle
from confbias.sampler import (SamplerConfig, anneal, chain_noise, deterministic_reverse,
                              langevin_sample, langevin_sample_batch)
from confbias.schedule import make_schedule
from confbias.score import make_score_model
from confbias.synth import point_mass_score

SCHED = make_schedule(1.0, 0.2, 6)


class NanAt:
    """Score that turns non-finite at one noise level."""

    n_atoms = 2
    center_input = False

    def __init__(self, sigma):
        self.schedule = SCHED
        self.sigma = sigma

    def score(self, C, sigma):
        return np.full_like(C, np.nan) if sigma == self.sigma else -C


def test_chain_streams_independent_of_chunking():
    m = gaussian_oracle(SCHED)
    cfg = SamplerConfig(a=0.01, T=3, seed=4)
    whole = langevin_sample_batch(m, cfg, 7)
    assert np.array_equal(whole, langevin_sample_batch(m, cfg, 7, chunk=2))
    assert np.array_equal(whole[3:], langevin_sample_batch(m, cfg, 4, first_chain=3))
    assert np.array_equal(whole[0], langevin_sample(m, cfg))


def test_seed_changes_samples():
    m = gaussian_oracle(SCHED)
    a = langevin_sample_batch(m, SamplerConfig(a=0.01, T=2, seed=0), 3)
    b = langevin_sample_batch(m, SamplerConfig(a=0.01, T=2, seed=1), 3)
    assert not np.array_equal(a, b)


def test_centred_model_keeps_samples_centred():
    m = make_score_model(4, SCHED, hidden=(8,))
    X = langevin_sample_batch(m, SamplerConfig(a=0.01, T=5), 6)
    assert np.allclose(X.mean(axis=1), 0.0, atol=1e-12)
    init, z = chain_noise(m, SamplerConfig(T=5), 0)
    assert z.shape == (SCHED.L * 5, 4, 3)
    assert np.allclose(init.mean(0), 0, atol=1e-15)


def test_zero_field_reverse_is_identity():
    m = make_score_model(3, SCHED, hidden=(8,))
    C = np.random.default_rng(0).standard_normal((3, 3))
    assert np.array_equal(deterministic_reverse(m, C, 2, det_steps=4, a=0.3), C)


@pytest.mark.parametrize("t", range(1, 7))
def test_point_mass_reverse_lands_on_target(t):
    # with alpha_L = sigma_L^2 the last drift step maps C to C* exactly
    C_star = np.random.default_rng(1).standard_normal((4, 3))
    oracle = point_mass_score(C_star, SCHED)
    start = C_star + SCHED.sigma(t) * np.random.default_rng(t).standard_normal((5, 4, 3))
    out = deterministic_reverse(oracle, start, t, 1, SCHED.sigma_min ** 2)
    assert np.max(np.abs(out - C_star)) < 1e-12


def test_gaussian_oracle_stationary_variance_small():
    m = gaussian_oracle(SCHED)
    X = langevin_sample_batch(m, SamplerConfig(a=0.5 * 0.04, T=50, seed=0), 800)
    assert abs(X.mean()) < 0.1
    assert X.var() == pytest.approx(1.04, rel=0.15)


def test_non_finite_reports_level_and_iteration():
    with pytest.raises(SamplingError) as info:
        anneal(NanAt(SCHED.sigma(3)), np.ones((1, 2, 3)), 1e-3, 4)
    assert (info.value.level, info.value.iteration) == (3, 1)


def test_errors():
    m = gaussian_oracle(SCHED)
    with pytest.raises(IndexError):
        anneal(m, np.zeros((1, 1, 3)), 1e-3, 1, t_start=7)
    with pytest.raises(ConfigurationError):
        deterministic_reverse(m, np.zeros((1, 3)), 1, det_steps=0)
    for kw in (dict(a=0), dict(T=0), dict(init_scale=-1.0)):
        with pytest.raises(ConfigurationError):
            SamplerConfig(**kw)
