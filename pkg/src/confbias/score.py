"""Noise-conditional score network over point-set conformations."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DomainError, PersistenceError, ShapeError
from .nn import Mlp, backward_cached, forward_cached, mlp_init
from .persist import atomic_write_text, dumps
from .schedule import NoiseSchedule

CHECKPOINT_FORMAT = "confbias-checkpoint"
CHECKPOINT_SCHEMA = 1


@dataclass(eq=False)
class ScoreModel:
    """Score field s(C, sigma) = P(net([C - mean(C), log sigma]) / sigma).

    ``P`` removes the per-axis mean of the output. Both the input centering and
    the output projection are governed by ``center_input``; a single-atom model
    has no centre-of-mass-free subspace and must run with it off.
    """

    net: Mlp
    n_atoms: int
    schedule: NoiseSchedule
    center_input: bool = True

    def __post_init__(self):
        d = 3 * self.n_atoms
        if self.net.input_dim != d + 1 or self.net.output_dim != d:
            raise ShapeError(f"net maps {self.net.input_dim} -> {self.net.output_dim}, "
                             f"need {d + 1} -> {d} for {self.n_atoms} atoms")

    def score(self, C, sigma):
        return score(self, C, sigma)

    def copy(self):
        return ScoreModel(self.net.copy(), self.n_atoms, self.schedule, self.center_input)


def make_score_model(n_atoms, schedule, hidden=(128, 128, 128), seed=0, center_input=True,
                     activation="silu"):
    d = 3 * n_atoms
    net = mlp_init([d + 1, *hidden, d], activation=activation, seed=seed)
    return ScoreModel(net, n_atoms, schedule, center_input)


def _prepare(m, C, sigma):
    C = np.asarray(C, dtype=np.float64)
    single = C.ndim == 2
    Cb = C[None] if single else C
    if Cb.ndim != 3 or Cb.shape[1:] != (m.n_atoms, 3):
        raise ShapeError(f"conformation of shape {C.shape} does not match {m.n_atoms} atoms")
    sig = np.broadcast_to(np.asarray(sigma, dtype=np.float64), (Cb.shape[0],))
    if not np.all(sig > 0):
        raise DomainError("noise level sigma must be positive")
    return Cb, sig, single


def score_forward(m, Cb, sig):
    """Batched score plus the cache needed by :func:`score_param_grads`."""
    B = Cb.shape[0]
    X = Cb - Cb.mean(axis=1, keepdims=True) if m.center_input else Cb
    inp = np.concatenate([X.reshape(B, -1), np.log(sig)[:, None]], axis=1)
    out, cache = forward_cached(m.net, inp)
    s = (out / sig[:, None]).reshape(B, m.n_atoms, 3)
    if m.center_input:
        s = s - s.mean(axis=1, keepdims=True)
    return s, cache


def score_param_grads(m, cache, sig, upstream):
    """Parameter gradients of ``sum <upstream, score>`` over the batch."""
    U = upstream
    if m.center_input:
        U = U - U.mean(axis=1, keepdims=True)
    G = U.reshape(U.shape[0], -1) / sig[:, None]
    grads, _ = backward_cached(m.net, cache, G)
    return grads


def score(m, C, sigma):
    """Evaluate the score for one ``(n, 3)`` conformation or a ``(B, n, 3)`` batch."""
    Cb, sig, single = _prepare(m, C, sigma)
    s, _ = score_forward(m, Cb, sig)
    return s[0] if single else s


# -- checkpoints ------------------------------------------------------------

def checkpoint_document(m, train_config=None, final_loss=None):
    return {
        "format": CHECKPOINT_FORMAT,
        "schema_version": CHECKPOINT_SCHEMA,
        "score_model": {
            "n_atoms": m.n_atoms,
            "sigmas": list(m.schedule.sigmas),
            "center_input": m.center_input,
        },
        "activations": list(m.net.activations),
        "layers": [
            {"rows": W.shape[0], "cols": W.shape[1],
             "weights": W.reshape(-1).tolist(), "bias": b.tolist()}
            for W, b in zip(m.net.weights, m.net.biases)
        ],
        "train_config": train_config,
        "final_loss": final_loss,
    }


def save_checkpoint(m, path, train_config=None, final_loss=None):
    for k, (W, b) in enumerate(zip(m.net.weights, m.net.biases)):
        if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
            raise PersistenceError(f"refusing to save non-finite parameters in layer {k}")
    atomic_write_text(path, dumps(checkpoint_document(m, train_config, final_loss)) + "\n")


def read_checkpoint(path):
    """Load a checkpoint; returns ``(ScoreModel, metadata dict)``."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except FileNotFoundError:
        raise DomainError(f"input file not found: {path}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PersistenceError(f"{path}: truncated or malformed checkpoint ({exc.msg})") from None
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise PersistenceError(f"{path}: field 'format' is not {CHECKPOINT_FORMAT!r}")
    if doc.get("schema_version") != CHECKPOINT_SCHEMA:
        raise PersistenceError(f"{path}: field 'schema_version' = {doc.get('schema_version')!r}, "
                               f"expected {CHECKPOINT_SCHEMA}")
    try:
        sm = doc["score_model"]
        weights, biases = [], []
        for k, layer in enumerate(doc["layers"]):
            W = np.asarray(layer["weights"], dtype=np.float64)
            b = np.asarray(layer["bias"], dtype=np.float64)
            if W.size != layer["rows"] * layer["cols"] or b.size != layer["cols"]:
                raise PersistenceError(f"{path}: layers[{k}] size does not match rows x cols")
            if not (np.all(np.isfinite(W)) and np.all(np.isfinite(b))):
                raise PersistenceError(f"{path}: layers[{k}] contains non-finite parameters")
            weights.append(W.reshape(layer["rows"], layer["cols"]))
            biases.append(b)
        net = Mlp(weights, biases, list(doc["activations"]))
        model = ScoreModel(net, int(sm["n_atoms"]), NoiseSchedule(tuple(sm["sigmas"])),
                           bool(sm["center_input"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise PersistenceError(f"{path}: invalid checkpoint field ({exc})") from None
    meta = {"train_config": doc.get("train_config"), "final_loss": doc.get("final_loss")}
    return model, meta


def load_checkpoint(path):
    return read_checkpoint(path)[0]
