"""Canned desk-scale experiments shared by the acceptance suite and the demos.

Two toys are used throughout:

* a single atom whose position is ``N(0, I)``, where the smoothed score is
  known in closed form;
* the default 6-atom chain with three multimodal torsions, trained on a
  geometric noise grid spanning 0.79 down to 0.02.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bias import estimate_bias
from .metrics import eval_report, pairwise_rmsd
from .sampler import SamplerConfig, langevin_sample_batch
from .schedule import make_schedule
from .score import make_score_model
from .synth import (AnalyticScore, GaussianMixture, MoleculeTemplate, gaussian_dataset,
                    gen_dataset)
from .train import TrainConfig, train

GAUSSIAN_SCHEDULE = (1.0, 0.2, 6)
CHAIN_SCHEDULE = (0.79, 0.02, 6)


def gaussian_oracle(schedule, std=1.0):
    """Analytic single-Gaussian score for a one-atom model."""
    mix = GaussianMixture(np.zeros((1, 3)), [std], [1.0])
    return AnalyticScore(mix, 1, schedule, center_input=False)


def gaussian_grid_mse(model, sigma, std=1.0, half_width=3.0, points=61):
    """Per-component MSE of the model score vs ``-x / (std^2 + sigma^2)`` on the axes."""
    g = np.linspace(-half_width, half_width, points)
    errs = []
    for k in range(3):
        C = np.zeros((points, 1, 3))
        C[:, 0, k] = g
        diff = model.score(C, sigma) + C / (std ** 2 + sigma ** 2)
        errs.append(np.mean(diff ** 2))
    return float(np.mean(errs))


def train_gaussian_toy(seed=0, steps=20000, batch_size=256, n_data=200_000):
    schedule = make_schedule(*GAUSSIAN_SCHEDULE)
    data = gaussian_dataset(n_data, 1, seed=10_000 + seed)
    model = make_score_model(1, schedule, seed=seed, center_input=False)
    cfg = TrainConfig(steps=steps, batch_size=batch_size, seed=seed)
    return train(data, model, cfg)


@dataclass
class ChainSetup:
    template: MoleculeTemplate = field(default_factory=MoleculeTemplate)
    train_molecules: int = 400
    train_conformers: int = 5
    test_molecules: int = 20
    test_conformers: int = 20
    data_seed: int = 1
    test_seed: int = 2
    steps: int = 20000
    bias_samples: int = 1000
    bias_seed: int = 7
    sample_seed: int = 11
    delta: float = 0.5
    # step-size fractions of sigma_L^2
    reverse_step: float = 1.0
    sample_step: float = 0.1

    @property
    def schedule(self):
        return make_schedule(*CHAIN_SCHEDULE)

    def train_sets(self):
        return gen_dataset(self.template, self.train_molecules, self.train_conformers,
                           self.data_seed)

    def test_sets(self):
        return gen_dataset(self.template, self.test_molecules, self.test_conformers,
                           self.test_seed)


def train_chain_model(setup, lambda_ip, seed):
    model = make_score_model(setup.template.n_atoms, setup.schedule, seed=seed)
    cfg = TrainConfig(steps=setup.steps, seed=seed, lambda_ip=lambda_ip)
    return train(setup.train_sets(), model, cfg)


def chain_bias(setup, model, keep_raw=False):
    a = setup.reverse_step * model.schedule.sigma_min ** 2
    return estimate_bias(model, setup.test_sets(), setup.bias_samples, det_steps=1,
                         seed=setup.bias_seed, a=a, keep_raw=keep_raw)


def generate_for(setup, model, ref_sets, factor=2):
    """Generate ``factor * |S_r|`` conformers per reference set."""
    cfg = SamplerConfig(a=setup.sample_step * model.schedule.sigma_min ** 2, T=50,
                        seed=setup.sample_seed)
    counts = [factor * len(cs) for cs in ref_sets]
    gen = langevin_sample_batch(model, cfg, sum(counts))
    out, lo = [], 0
    for c in counts:
        out.append(gen[lo:lo + c])
        lo += c
    return out


def chain_eval(setup, model):
    refs = setup.test_sets()
    gens = generate_for(setup, model, refs)
    mats = [pairwise_rmsd(g, cs.conformers) for g, cs in zip(gens, refs)]
    return eval_report(mats, setup.delta, [cs.molecule_id for cs in refs])
