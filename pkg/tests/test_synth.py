import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from confbias.errors import ConfigurationError, DegenerateGeometryError, ShapeError
from confbias.schedule import make_schedule
from confbias.synth import (AnalyticScore, GaussianMixture, MoleculeTemplate, TorsionMixture,
                            build_coordinates, dihedrals, ensemble_property_errors,
                            ensemble_property_mae, gen_dataset, gmm_log_density, gmm_score,
                            internal_coordinates, sample_torsions, template_from_dict,
                            template_to_dict, toy_property)

TMPL = MoleculeTemplate()


def test_default_template():
    assert (TMPL.n_atoms, TMPL.bond_length, TMPL.bond_angle, TMPL.n_torsions) == (6, 1.5, 112.0, 3)
    mix = TMPL.torsion_mixture[0]
    assert mix.means == (-60.0, 60.0, 180.0) and mix.weights == (0.3, 0.3, 0.4)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-179.9, 180.0), min_size=3, max_size=3),
       st.floats(0.5, 3.0), st.floats(60.0, 170.0))
def test_nerf_reproduces_internal_coordinates(tors, bond, angle):
    tmpl = MoleculeTemplate(6, bond, angle)
    C = build_coordinates(tmpl, np.array(tors))
    lengths, angles, dih = internal_coordinates(C)
    assert np.allclose(lengths, bond, atol=1e-10)
    assert np.allclose(angles, angle, atol=1e-8)
    diff = (dih - np.array(tors) + 180.0) % 360.0 - 180.0
    assert np.allclose(diff, 0.0, atol=1e-7)
    assert np.allclose(C.mean(0), 0.0, atol=1e-12)


def test_dihedral_oracle():
    # textbook cis / trans / gauche points; the sign follows the right-hand rule
    trans = np.array([[1.0, 1, 0], [0, 1, 0], [0, 0, 0], [-1, 0, 0]])
    cis = np.array([[1.0, 1, 0], [0, 1, 0], [0, 0, 0], [1, 0, 0]])
    gauche = np.array([[1.0, 1, 0], [0, 1, 0], [0, 0, 0], [0, 0, 1]])
    assert abs(abs(dihedrals(trans)[0]) - 180) < 1e-12
    assert abs(dihedrals(cis)[0]) < 1e-12
    assert abs(dihedrals(gauche)[0] - 90) < 1e-12
    assert abs(dihedrals(gauche * [1, 1, -1])[0] + 90) < 1e-12


def test_collinear_dihedral_raises_when_checked():
    C = np.array([[0.0, 0, 0], [1, 0, 0], [2, 0, 0], [2, 1, 0]])
    with pytest.raises(DegenerateGeometryError):
        dihedrals(C, check=True)


def test_torsion_density_normalised():
    mix = TorsionMixture()
    total, _ = quad(lambda x: np.exp(mix.log_pdf(np.rad2deg(x))), -np.pi, np.pi, limit=200)
    assert total == pytest.approx(1.0, abs=1e-8)


def test_sampled_torsion_mode_fractions():
    tau = sample_torsions(TMPL, np.random.default_rng(0), size=20_000)
    assert tau.shape == (20_000, 3)
    assert np.all(tau > -180) and np.all(tau <= 180)
    near = lambda c: np.mean(np.abs((tau[:, 0] - c + 180) % 360 - 180) < 60)
    assert near(180) == pytest.approx(0.4, abs=0.02)
    assert near(60) == pytest.approx(0.3, abs=0.02)


def test_zero_weight_component_never_sampled():
    tmpl = MoleculeTemplate(4, torsion_mixture=TorsionMixture(weights=(0.0, 0.0, 1.0)))
    tau = sample_torsions(tmpl, np.random.default_rng(1), size=2000)
    assert np.all(np.abs(np.abs(tau) - 180) < 60)


@pytest.mark.parametrize("kw", [dict(n_atoms=1), dict(bond_length=0), dict(bond_angle=180),
                                dict(torsion_mixture=(TorsionMixture(),))])
def test_template_validation(kw):
    with pytest.raises(ConfigurationError):
        MoleculeTemplate(**kw)


def test_mixture_validation():
    with pytest.raises(ConfigurationError):
        TorsionMixture(weights=(0.5, 0.5, 0.5))
    with pytest.raises(ConfigurationError):
        TorsionMixture(concentrations=(1.0, 0.0, 1.0))


def test_template_dict_round_trip():
    tmpl = MoleculeTemplate(5, 1.2, 100.0, TorsionMixture((10.0,), (3.0,), (1.0,)))
    assert template_from_dict(template_to_dict(tmpl)) == tmpl


def test_gen_dataset_streams():
    a = gen_dataset(TMPL, 4, 3, seed=9)
    b = gen_dataset(TMPL, 2, 3, seed=9, start=2)
    assert [cs.molecule_id for cs in a] == ["mol00000", "mol00001", "mol00002", "mol00003"]
    assert np.array_equal(a[2].conformers, b[0].conformers)
    assert a[0].conformers.shape == (3, 6, 3) and len(a[0]) == 3
    with pytest.raises(ConfigurationError):
        gen_dataset(TMPL, 0, 3, seed=0)


def test_two_atom_template_builds():
    sets = gen_dataset(MoleculeTemplate(2), 1, 2, seed=0)
    assert sets[0].conformers.shape == (2, 2, 3)


def test_gmm_score_is_gradient_of_log_density():
    mix = GaussianMixture(np.array([[0.0, 1.0], [2.0, -1.0]]), [0.5, 0.8], [0.3, 0.7])
    x = np.array([0.4, 0.2])
    h = 1e-6
    fd = [(gmm_log_density(mix, x + h * e, 0.3) - gmm_log_density(mix, x - h * e, 0.3)) / (2 * h)
          for e in np.eye(2)]
    assert np.allclose(gmm_score(mix, x, 0.3), fd, atol=1e-7)


def test_analytic_single_gaussian():
    sched = make_schedule(1.0, 0.2, 3)
    oracle = AnalyticScore(GaussianMixture(np.zeros((1, 3)), [1.0], [1.0]), 1, sched)
    C = np.random.default_rng(0).standard_normal((4, 1, 3))
    assert np.allclose(oracle.score(C, 0.5), -C / 1.25, atol=1e-14)
    per_sample = oracle.score(C, np.array([0.2, 0.5, 1.0, 0.2]))
    assert np.allclose(per_sample[2], -C[2] / 2.0)


def test_toy_properties():
    C = np.array([[0.0, 0, 0], [3.0, 4.0, 0]])
    tmpl = MoleculeTemplate(2)
    assert toy_property(C, tmpl, "end_to_end") == pytest.approx(5.0)
    assert toy_property(C, tmpl, "rg") == pytest.approx(2.5)
    assert toy_property(C[None].repeat(3, 0), tmpl, "rg").shape == (3,)
    with pytest.raises(ConfigurationError):
        toy_property(C, tmpl, "volume")
    with pytest.raises(ShapeError):
        toy_property(C, TMPL, "rg")


def test_torsion_energy_is_lowest_at_modes():
    best = build_coordinates(TMPL, np.array([180.0, 180.0, 180.0]))
    worse = build_coordinates(TMPL, np.array([0.0, 120.0, -120.0]))
    assert toy_property(best, TMPL, "torsion_energy") < toy_property(worse, TMPL, "torsion_energy")


def test_ensemble_errors():
    S = gen_dataset(TMPL, 2, 8, seed=0)
    same = ensemble_property_errors(S[0].conformers, S[0].conformers, TMPL, "rg")
    assert same == {"mean": 0.0, "min": 0.0, "max": 0.0}
    mae = ensemble_property_mae([(S[0].conformers, S[1].conformers)] * 2, TMPL, "end_to_end",
                                ("mean",))
    one = ensemble_property_errors(S[0].conformers, S[1].conformers, TMPL, "end_to_end", ("mean",))
    assert mae == one
    with pytest.raises(ConfigurationError):
        ensemble_property_errors(S[0].conformers, S[0].conformers, TMPL, "rg", ("median",))
