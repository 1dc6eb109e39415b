"""Kabsch-aligned RMSD and the COV / MAT ensemble metrics."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ShapeError

DEFAULT_DELTA = 0.5


def _kabsch_batch(P, Q):
    """Proper rotations R and translations t with R @ P_i + t ~ Q_i, batched."""
    pc = P.mean(axis=-2, keepdims=True)
    qc = Q.mean(axis=-2, keepdims=True)
    H = np.swapaxes(P - pc, -1, -2) @ (Q - qc)
    U, _, Vt = np.linalg.svd(H)
    V = np.swapaxes(Vt, -1, -2)
    Ut = np.swapaxes(U, -1, -2)
    d = np.sign(np.linalg.det(V @ Ut))
    d = np.where(d == 0, 1.0, d)
    D = np.zeros(H.shape)
    D[..., 0, 0] = 1.0
    D[..., 1, 1] = 1.0
    D[..., 2, 2] = d
    R = V @ D @ Ut
    t = qc[..., 0, :] - (R @ pc[..., 0, :, None])[..., 0]
    return R, t


def _check_pair(P, Q):
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    if P.shape != Q.shape or P.shape[-1] != 3 or P.ndim < 2 or P.shape[-2] < 1:
        raise ShapeError(f"cannot align shapes {P.shape} and {Q.shape}")
    return P, Q


def kabsch_align(P, Q):
    """Rotation (det +1) and translation mapping ``P`` onto ``Q`` in least squares."""
    P, Q = _check_pair(P, Q)
    return _kabsch_batch(P, Q)


def _rmsd_batch(C, C_hat):
    R, t = _kabsch_batch(C, C_hat)
    moved = C @ np.swapaxes(R, -1, -2) + t[..., None, :]
    return np.sqrt(((moved - C_hat) ** 2).sum(-1).mean(-1))


def rmsd(C, C_hat):
    C, C_hat = _check_pair(C, C_hat)
    return float(_rmsd_batch(C, C_hat)) if C.ndim == 2 else _rmsd_batch(C, C_hat)


def pairwise_rmsd(S_g, S_r):
    """Matrix with rows = reference conformers and columns = generated ones."""
    S_g = np.asarray(S_g, dtype=np.float64)
    S_r = np.asarray(S_r, dtype=np.float64)
    if len(S_g) == 0 or len(S_r) == 0:
        raise ConfigurationError("conformer sets must be non-empty")
    if S_g.ndim != 3 or S_r.ndim != 3 or S_g.shape[1:] != S_r.shape[1:] or S_g.shape[2] != 3:
        raise ShapeError(f"incompatible conformer sets {S_g.shape} and {S_r.shape}")
    ng, nr = len(S_g), len(S_r)
    ref = np.repeat(S_r, ng, axis=0)
    gen = np.tile(S_g, (nr, 1, 1))
    return _rmsd_batch(ref, gen).reshape(nr, ng)


def _check_matrix(M):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.size == 0:
        raise ShapeError("RMSD matrix must be a non-empty 2-D array")
    if not np.all(np.isfinite(M)) or np.any(M < 0):
        raise ConfigurationError("RMSD matrix entries must be finite and non-negative")
    return M


def coverage(M, delta=DEFAULT_DELTA):
    """Fraction of reference rows with some generated conformer strictly within ``delta``."""
    if not delta > 0:
        raise ConfigurationError("delta must be positive")
    M = _check_matrix(M)
    return float(np.mean((M < delta).any(axis=1)))


def matching(M):
    """Mean over reference rows of the smallest RMSD to a generated conformer."""
    return float(_check_matrix(M).min(axis=1).mean())


@dataclass
class EvalReport:
    molecule_ids: list
    cov: list
    mat: list
    delta: float

    @property
    def cov_mean(self):
        return float(np.mean(self.cov))

    @property
    def cov_median(self):
        return float(np.median(self.cov))

    @property
    def mat_mean(self):
        return float(np.mean(self.mat))

    @property
    def mat_median(self):
        return float(np.median(self.mat))

    def rows(self):
        """Per-molecule rows followed by ``mean`` and ``median`` trailer rows."""
        out = [(mid, c, m) for mid, c, m in zip(self.molecule_ids, self.cov, self.mat)]
        out.append(("mean", self.cov_mean, self.mat_mean))
        out.append(("median", self.cov_median, self.mat_median))
        return out


def eval_report(matrices, delta=DEFAULT_DELTA, molecule_ids=None):
    matrices = list(matrices)
    if not matrices:
        raise ConfigurationError("need at least one molecule")
    if molecule_ids is None:
        molecule_ids = [str(i) for i in range(len(matrices))]
    return EvalReport(list(molecule_ids), [coverage(M, delta) for M in matrices],
                      [matching(M) for M in matrices], float(delta))
