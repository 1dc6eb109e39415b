"""Toy chain molecules, analytic Gaussian-mixture scores and toy properties.

A template is a linear chain with fixed bond length and bond angle whose
torsions follow independent von Mises mixtures. Conformers are placed with the
natural extension reference frame (NeRF) construction and centred.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import i0e, logsumexp

from .errors import ConfigurationError, DegenerateGeometryError, ShapeError
from .schedule import NoiseSchedule

PROPERTIES = ("rg", "end_to_end", "torsion_energy")
STATISTICS = ("mean", "min", "max")


@dataclass(frozen=True)
class TorsionMixture:
    means: tuple = (-60.0, 60.0, 180.0)  # degrees
    concentrations: tuple = (20.0, 20.0, 20.0)
    weights: tuple = (0.3, 0.3, 0.4)

    def __post_init__(self):
        for name in ("means", "concentrations", "weights"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        k = len(self.means)
        if k == 0 or len(self.concentrations) != k or len(self.weights) != k:
            raise ConfigurationError("mixture means, concentrations and weights must align")
        if any(c <= 0 for c in self.concentrations):
            raise ConfigurationError("concentrations must be positive")
        if any(w < 0 for w in self.weights) or abs(sum(self.weights) - 1.0) > 1e-12:
            raise ConfigurationError("weights must be non-negative and sum to 1")

    def log_pdf(self, tau_deg):
        """Log density in radians^-1 at torsion(s) given in degrees."""
        tau = np.deg2rad(np.asarray(tau_deg, dtype=np.float64))[..., None]
        mu = np.deg2rad(np.array(self.means))
        kappa = np.array(self.concentrations)
        with np.errstate(divide="ignore"):
            logw = np.log(np.array(self.weights))
        comp = kappa * (np.cos(tau - mu) - 1.0) - np.log(2 * np.pi * i0e(kappa))
        return logsumexp(comp + logw, axis=-1)


@dataclass(frozen=True)
class MoleculeTemplate:
    n_atoms: int = 6
    bond_length: float = 1.5
    bond_angle: float = 112.0  # degrees
    torsion_mixture: tuple = None  # one TorsionMixture per rotatable bond

    def __post_init__(self):
        if self.n_atoms < 2:
            raise ConfigurationError("a template needs at least 2 atoms")
        if not self.bond_length > 0 or not 0 < self.bond_angle < 180:
            raise ConfigurationError("bond_length must be > 0 and bond_angle in (0, 180)")
        n_tors = max(self.n_atoms - 3, 0)
        mix = self.torsion_mixture
        if mix is None:
            mix = (TorsionMixture(),) * n_tors
        elif isinstance(mix, TorsionMixture):
            mix = (mix,) * n_tors
        mix = tuple(mix)
        if len(mix) != n_tors:
            raise ConfigurationError(f"{self.n_atoms} atoms need {n_tors} torsion mixtures, "
                                     f"got {len(mix)}")
        object.__setattr__(self, "torsion_mixture", mix)

    @property
    def n_torsions(self):
        return len(self.torsion_mixture)


def template_to_dict(tmpl):
    return {
        "n_atoms": tmpl.n_atoms,
        "bond_length": tmpl.bond_length,
        "bond_angle": tmpl.bond_angle,
        "torsion_mixture": [
            {"means": list(m.means), "concentrations": list(m.concentrations),
             "weights": list(m.weights)}
            for m in tmpl.torsion_mixture
        ],
    }


def template_from_dict(d):
    return MoleculeTemplate(
        n_atoms=int(d["n_atoms"]),
        bond_length=float(d["bond_length"]),
        bond_angle=float(d["bond_angle"]),
        torsion_mixture=tuple(TorsionMixture(tuple(m["means"]), tuple(m["concentrations"]),
                                             tuple(m["weights"]))
                              for m in d["torsion_mixture"]),
    )


@dataclass(eq=False)
class ConformerSet:
    molecule_id: str
    template: MoleculeTemplate | None
    conformers: np.ndarray  # (k, n, 3)
    provenance: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.conformers)

    @property
    def n_atoms(self):
        return self.conformers.shape[1]


def _wrap_degrees(x):
    # (-180, 180]
    return 180.0 - np.mod(180.0 - x, 360.0)


def sample_torsions(tmpl, rng, size=None):
    """Draw torsion vectors (degrees) from the template's mixtures.

    Returns shape ``(n_torsions,)`` or ``(size, n_torsions)``.
    """
    k = 1 if size is None else int(size)
    out = np.empty((k, tmpl.n_torsions))
    for j, mix in enumerate(tmpl.torsion_mixture):
        comp = rng.choice(len(mix.weights), size=k, p=np.array(mix.weights))
        mu = np.deg2rad(np.array(mix.means))[comp]
        kappa = np.array(mix.concentrations)[comp]
        out[:, j] = _wrap_degrees(np.rad2deg(rng.vonmises(mu, kappa)))
    return out[0] if size is None else out


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def build_coordinates(tmpl, torsions):
    """Cartesian coordinates of a chain from its torsions (degrees).

    Accepts ``(n_atoms - 3,)`` or a batch ``(K, n_atoms - 3)``; the result is
    centred at the origin.
    """
    tors = np.asarray(torsions, dtype=np.float64)
    single = tors.ndim <= 1
    tors = tors.reshape(1, -1) if single else tors
    if tors.shape[1] != tmpl.n_torsions:
        raise ShapeError(f"{tmpl.n_atoms}-atom template needs {tmpl.n_torsions} torsions, "
                         f"got {tors.shape[1]}")
    K, n, b = tors.shape[0], tmpl.n_atoms, tmpl.bond_length
    theta = np.deg2rad(tmpl.bond_angle)
    X = np.zeros((K, n, 3))
    X[:, 1, 0] = b
    if n > 2:
        X[:, 2] = X[:, 1] + b * np.array([-np.cos(theta), np.sin(theta), 0.0])
    for i in range(3, n):
        A, Bp, Cp = X[:, i - 3], X[:, i - 2], X[:, i - 1]
        bc = _unit(Cp - Bp)
        nrm = _unit(np.cross(Bp - A, bc))
        mvec = np.cross(nrm, bc)
        tau = np.deg2rad(tors[:, i - 3])[:, None]
        X[:, i] = Cp + b * (-np.cos(theta) * bc + np.sin(theta) * np.cos(tau) * mvec
                            + np.sin(theta) * np.sin(tau) * nrm)
    X -= X.mean(axis=1, keepdims=True)
    return X[0] if single else X


def dihedrals(C, check=False):
    """Torsion angles (degrees) for consecutive quadruples of a chain."""
    C = np.asarray(C, dtype=np.float64)
    b0 = C[..., 1:-2, :] - C[..., :-3, :]
    b1 = C[..., 2:-1, :] - C[..., 1:-2, :]
    b2 = C[..., 3:, :] - C[..., 2:-1, :]
    n1 = np.cross(b0, b1)
    n2 = np.cross(b1, b2)
    if check:
        scale = np.linalg.norm(b1, axis=-1) ** 2 + 1e-300
        if np.any(np.linalg.norm(n1, axis=-1) / scale < 1e-10) or \
                np.any(np.linalg.norm(n2, axis=-1) / scale < 1e-10):
            raise DegenerateGeometryError("dihedral undefined for a collinear atom triple")
    x = (n1 * n2).sum(-1)
    y = np.linalg.norm(b1, axis=-1) * (b0 * n2).sum(-1)
    return np.rad2deg(np.arctan2(y, x))


def internal_coordinates(C):
    """Return ``(bond lengths, bond angles in degrees, torsions in degrees)``."""
    C = np.asarray(C, dtype=np.float64)
    d = np.diff(C, axis=-2)
    lengths = np.linalg.norm(d, axis=-1)
    u = -d[..., :-1, :] / lengths[..., :-1, None]
    v = d[..., 1:, :] / lengths[..., 1:, None]
    angles = np.rad2deg(np.arccos(np.clip((u * v).sum(-1), -1.0, 1.0)))
    return lengths, angles, dihedrals(C)


def gen_dataset(tmpl, n_variants, conformers_each, seed, start=0):
    """Sample ``n_variants`` conformer sets; variant ``v`` uses RNG stream ``(seed, v)``."""
    if n_variants < 1 or conformers_each < 1:
        raise ConfigurationError("n_variants and conformers_each must be >= 1")
    sets = []
    for v in range(start, start + n_variants):
        rng = np.random.default_rng([seed, v])
        tors = sample_torsions(tmpl, rng, size=conformers_each)
        if tmpl.n_torsions == 0:
            tors = np.zeros((conformers_each, 0))
        sets.append(ConformerSet(
            molecule_id=f"mol{v:05d}",
            template=tmpl,
            conformers=build_coordinates(tmpl, tors),
            provenance={"seed": int(seed), "variant": v},
        ))
    return sets


def gaussian_dataset(n_samples, dim_atoms=1, mean=0.0, std=1.0, seed=0):
    """Template-free toy data: i.i.d. isotropic Gaussian point sets."""
    rng = np.random.default_rng(seed)
    X = mean + std * rng.standard_normal((n_samples, dim_atoms, 3))
    return [ConformerSet("gaussian", None, X, {"seed": int(seed), "mean": mean, "std": std})]


# -- analytic scores --------------------------------------------------------

@dataclass(eq=False)
class GaussianMixture:
    means: np.ndarray  # (K, D)
    stds: np.ndarray  # (K,)
    weights: np.ndarray  # (K,)

    def __post_init__(self):
        self.means = np.atleast_2d(np.asarray(self.means, dtype=np.float64))
        K = self.means.shape[0]
        self.stds = np.broadcast_to(np.asarray(self.stds, dtype=np.float64), (K,)).copy()
        self.weights = np.broadcast_to(np.asarray(self.weights, dtype=np.float64), (K,)).copy()
        if np.any(self.weights <= 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ConfigurationError("mixture weights must be positive and sum to 1")
        if np.any(self.stds < 0):
            raise ConfigurationError("mixture stds must be non-negative")

    @property
    def dim(self):
        return self.means.shape[1]


def _gmm_terms(mix, x, sigma):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != mix.dim:
        raise ShapeError(f"point of dim {x.shape[-1]} vs mixture dim {mix.dim}")
    var = mix.stds ** 2 + sigma ** 2
    diff = x[..., None, :] - mix.means  # (..., K, D)
    logp = (np.log(mix.weights) - 0.5 * (diff ** 2).sum(-1) / var
            - 0.5 * mix.dim * np.log(2 * np.pi * var))
    return diff, var, logp


def gmm_log_density(mix, x, sigma=0.0):
    _, _, logp = _gmm_terms(mix, x, sigma)
    return logsumexp(logp, axis=-1)


def gmm_score(mix, x, sigma=0.0):
    """Score of the mixture convolved with ``N(0, sigma^2 I)``; ``x`` is ``(..., D)``."""
    diff, var, logp = _gmm_terms(mix, x, sigma)
    r = np.exp(logp - logsumexp(logp, axis=-1, keepdims=True))
    return -(r[..., None] * diff / var[:, None]).sum(-2)


@dataclass(eq=False)
class AnalyticScore:
    """Drop-in replacement for a trained score model backed by a mixture.

    ``bias`` is a constant added to every score component, used to probe how
    a systematically wrong score propagates into the bias estimate.
    """

    mixture: GaussianMixture
    n_atoms: int
    schedule: NoiseSchedule
    center_input: bool = False
    bias: float = 0.0

    def score(self, C, sigma):
        C = np.asarray(C, dtype=np.float64)
        shape = C.shape
        flat = C.reshape(*shape[:-2], 3 * self.n_atoms)
        sig = np.asarray(sigma, dtype=np.float64)
        if sig.ndim:
            s = np.stack([gmm_score(self.mixture, f, g) for f, g in zip(flat, sig)])
        else:
            s = gmm_score(self.mixture, flat, float(sig))
        s = s.reshape(shape) + self.bias
        if self.center_input:
            s = s - s.mean(axis=-2, keepdims=True)
        return s


def point_mass_score(C_star, schedule, bias=0.0):
    """Analytic score of a distribution concentrated at ``C_star``."""
    C_star = np.asarray(C_star, dtype=np.float64)
    mix = GaussianMixture(C_star.reshape(1, -1), [0.0], [1.0])
    return AnalyticScore(mix, C_star.shape[0], schedule, center_input=False, bias=bias)


# -- toy properties ---------------------------------------------------------

def toy_property(C, tmpl, which):
    """Scalar surrogate property of one conformation (or a batch)."""
    C = np.asarray(C, dtype=np.float64)
    if C.shape[-2:] != (tmpl.n_atoms, 3):
        raise ShapeError(f"conformation {C.shape} does not match {tmpl.n_atoms}-atom template")
    if which == "rg":
        centred = C - C.mean(axis=-2, keepdims=True)
        return np.sqrt((centred ** 2).sum(-1).mean(-1))
    if which == "end_to_end":
        return np.linalg.norm(C[..., 0, :] - C[..., -1, :], axis=-1)
    if which == "torsion_energy":
        tau = dihedrals(C, check=True)
        energy = 0.0
        for j, mix in enumerate(tmpl.torsion_mixture):
            energy = energy - mix.log_pdf(tau[..., j])
        return energy + np.zeros(C.shape[:-2])
    raise ConfigurationError(f"unknown property {which!r}; choose from {PROPERTIES}")


def ensemble_property_errors(S_g, S_r, tmpl, which, stats=STATISTICS):
    """Absolute differences of ensemble statistics between two conformer sets."""
    S_g, S_r = np.asarray(S_g), np.asarray(S_r)
    if len(S_g) == 0 or len(S_r) == 0:
        raise ConfigurationError("both conformer sets must be non-empty")
    bad = [s for s in stats if s not in STATISTICS]
    if bad or not stats:
        raise ConfigurationError(f"statistics must be a non-empty subset of {STATISTICS}")
    pg = toy_property(S_g, tmpl, which)
    pr = toy_property(S_r, tmpl, which)
    fn = {"mean": np.mean, "min": np.min, "max": np.max}
    return {s: float(abs(fn[s](pg) - fn[s](pr))) for s in stats}


def ensemble_property_mae(pairs, tmpl, which, stats=STATISTICS):
    """Mean over molecules of the per-statistic absolute errors.

    ``pairs`` is a sequence of ``(S_g, S_r)`` conformer arrays, one per molecule.
    """
    pairs = list(pairs)
    if not pairs:
        raise ConfigurationError("need at least one molecule")
    errs = [ensemble_property_errors(g, r, tmpl, which, stats) for g, r in pairs]
    return {s: float(np.mean([e[s] for e in errs])) for s in stats}
