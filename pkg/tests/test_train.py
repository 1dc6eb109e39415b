import numpy as np
import pytest

from confbias.errors import ConfigurationError, ShapeError, TrainingError
from confbias.nn import max_relative_error, numeric_param_grads
from confbias.schedule import make_schedule
from confbias.score import make_score_model
from confbias.synth import ConformerSet, MoleculeTemplate, gaussian_dataset, gen_dataset
from confbias.train import TrainConfig, dsm_loss, perturb, perturb_ip, train

SCHED = make_schedule(1.0, 0.1, 4)


def random_model(n_atoms=3, seed=0, center=True):
    m = make_score_model(n_atoms, SCHED, hidden=(8, 8), seed=seed, center_input=center)
    rng = np.random.default_rng(seed)
    for p in m.net.params():
        p[...] = 0.4 * rng.standard_normal(p.shape)
    return m


def batch(n_atoms=3, B=4, seed=0):
    rng = np.random.default_rng(seed)
    return (rng.standard_normal((B, n_atoms, 3)), rng.integers(1, SCHED.L + 1, size=B),
            rng.standard_normal((B, n_atoms, 3)), rng.standard_normal((B, n_atoms, 3)))


def test_perturbations():
    C0 = np.ones((2, 3))
    eps = np.full((2, 3), 2.0)
    xi = np.full((2, 3), -1.0)
    assert np.array_equal(perturb(C0, 0.5, eps), np.full((2, 3), 2.0))
    assert np.array_equal(perturb_ip(C0, 0.5, eps, xi, 0.0), perturb(C0, 0.5, eps))
    assert np.allclose(perturb_ip(C0, 0.5, eps, xi, 0.1), 1 + 0.5 * 1.9)
    with pytest.raises(ShapeError):
        perturb(C0, 0.5, np.ones((3, 3)))
    with pytest.raises(ShapeError):
        perturb_ip(C0, 0.5, eps, np.ones(3), 0.1)


def test_zero_model_loss_is_noise_energy():
    # s = 0 makes the sigma^2-weighted loss sum(eps^2), independent of xi and lambda
    m = make_score_model(3, SCHED, hidden=(8,))
    C0, t, eps, xi = batch()
    expected = (eps ** 2).sum(axis=(1, 2)).mean()
    for lam in (0.0, 0.2):
        loss, _ = dsm_loss(m, C0, t, eps, xi, lam)
        assert loss == pytest.approx(expected, rel=1e-13)


@pytest.mark.parametrize("lam", [0.0, 0.15])
@pytest.mark.parametrize("weighting", ["sigma-squared", "unweighted"])
@pytest.mark.parametrize("center", [True, False])
def test_loss_gradient_matches_finite_differences(lam, weighting, center):
    m = random_model(center=center)
    C0, t, eps, xi = batch()
    _, grads = dsm_loss(m, C0, t, eps, xi, lam, weighting)

    def f(net):
        m.net = net
        return dsm_loss(m, C0, t, eps, xi, lam, weighting)[0]

    numeric = numeric_param_grads(m.net, f, h=1e-6)
    assert max_relative_error(grads, numeric) < 1e-4


def test_ip_target_uses_unperturbed_sample():
    # an exact score for the clean noise gives zero loss only when lam = 0
    m = random_model()
    C0, t, eps, xi = batch()
    l0, _ = dsm_loss(m, C0, t, eps, xi, 0.0)
    l1, _ = dsm_loss(m, C0, t, eps, np.zeros_like(xi), 0.3)
    assert l0 == pytest.approx(l1, rel=1e-14)


def test_level_index_checked():
    m = random_model()
    C0, t, eps, xi = batch()
    with pytest.raises(IndexError):
        dsm_loss(m, C0, np.zeros_like(t), eps, xi)
    with pytest.raises(ConfigurationError):
        dsm_loss(m, C0, t, eps, xi, weighting="l1")


@pytest.mark.parametrize("kw", [dict(lr=0), dict(steps=-1), dict(batch_size=0), dict(lambda_ip=-0.1),
                                dict(loss_weighting="x"), dict(log_every=0)])
def test_config_validation(kw):
    with pytest.raises(ConfigurationError):
        TrainConfig(**kw)


def small_data():
    return gen_dataset(MoleculeTemplate(n_atoms=4), 5, 4, seed=0)


def test_zero_steps_returns_identical_model():
    m = random_model(n_atoms=4)
    out, log = train(small_data(), m, TrainConfig(steps=0))
    assert out is not m and log.records == []
    for p, q in zip(m.net.params(), out.net.params()):
        assert np.array_equal(p, q)


def test_training_is_deterministic_and_leaves_input_alone():
    m = make_score_model(4, SCHED, hidden=(16,), seed=0)
    before = [p.copy() for p in m.net.params()]
    cfg = TrainConfig(steps=40, batch_size=8, log_every=10, seed=5)
    a, la = train(small_data(), m, cfg)
    b, lb = train(small_data(), m, cfg)
    assert [r[:2] for r in la.records] == [r[:2] for r in lb.records]
    assert [r[0] for r in la.records] == [10, 20, 30, 40]
    for p, q in zip(a.net.params(), b.net.params()):
        assert np.array_equal(p, q)
    for p, q in zip(before, m.net.params()):
        assert np.array_equal(p, q)


def test_loss_decreases_on_gaussian_toy():
    m = make_score_model(1, SCHED, hidden=(32, 32), center_input=False)
    data = gaussian_dataset(2000, 1, seed=0)
    _, log = train(data, m, TrainConfig(steps=600, batch_size=64, lr=3e-3, log_every=100))
    losses = log.losses()
    assert losses[-1] < losses[0]
    # an exact score gives E||sigma s + eps||^2 = 3 sigma^2 / (1 + sigma^2) per atom < 3
    assert losses[-1] < 3.0


def test_shape_mismatch_rejected():
    m = make_score_model(5, SCHED, hidden=(4,))
    with pytest.raises(ShapeError):
        train(small_data(), m, TrainConfig(steps=1))
    with pytest.raises(ConfigurationError):
        train([], m, TrainConfig(steps=1))


def test_divergence_reports_step():
    m = random_model(n_atoms=4, center=False)
    conf = 1e150 * np.random.default_rng(0).standard_normal((3, 4, 3))
    data = [ConformerSet("huge", None, conf)]
    with pytest.raises(TrainingError) as info:
        train(data, m, TrainConfig(steps=5, batch_size=2))
    assert info.value.step == 1
