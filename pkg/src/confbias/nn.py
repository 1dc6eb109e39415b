"""Dense multilayer perceptron with hand-written reverse mode and Adam.

Everything is float64 numpy. Weights are stored as ``(fan_in, fan_out)`` so a
batch ``X`` of shape ``(B, fan_in)`` maps to ``X @ W + b``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .errors import ConfigurationError, ShapeError, TrainingError

ACTIVATIONS = ("silu", "tanh", "identity")


def _act(name, z):
    if name == "silu":
        return z * expit(z)
    if name == "tanh":
        return np.tanh(z)
    return z


def _act_grad(name, z):
    if name == "silu":
        s = expit(z)
        return s * (1.0 + z * (1.0 - s))
    if name == "tanh":
        return 1.0 - np.tanh(z) ** 2
    return np.ones_like(z)


@dataclass(eq=False)
class Mlp:
    weights: list
    biases: list
    activations: list  # one identifier per hidden layer

    def __post_init__(self):
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ConfigurationError("weights and biases must be non-empty and paired")
        if len(self.activations) != len(self.weights) - 1:
            raise ConfigurationError("need exactly one activation per hidden layer")
        for k, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.shape != (W.shape[1],):
                raise ShapeError(f"layer {k}: weight {W.shape} incompatible with bias {b.shape}")
            if k and self.weights[k - 1].shape[1] != W.shape[0]:
                raise ShapeError(f"layer {k} expects {W.shape[0]} inputs, previous layer gives "
                                 f"{self.weights[k - 1].shape[1]}")
        for a in self.activations:
            if a not in ACTIVATIONS:
                raise ConfigurationError(f"unknown activation {a!r}")

    @property
    def input_dim(self):
        return self.weights[0].shape[0]

    @property
    def output_dim(self):
        return self.weights[-1].shape[1]

    @property
    def layout(self):
        return [self.input_dim] + [W.shape[1] for W in self.weights]

    def params(self):
        """Flat list of parameter arrays, ordered W0, b0, W1, b1, ..."""
        out = []
        for W, b in zip(self.weights, self.biases):
            out += [W, b]
        return out

    def copy(self):
        return Mlp([W.copy() for W in self.weights], [b.copy() for b in self.biases],
                   list(self.activations))


def mlp_init(layout, activation="silu", seed=0):
    """Build an MLP with ``N(0, 1/fan_in)`` weights and a zero output layer."""
    layout = list(layout)
    if len(layout) < 2 or any(int(w) != w or w < 1 for w in layout):
        raise ConfigurationError(f"invalid layout {layout!r}: need >= 2 positive widths")
    if activation not in ACTIVATIONS:
        raise ConfigurationError(f"unknown activation {activation!r}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for k, (fan_in, fan_out) in enumerate(zip(layout[:-1], layout[1:])):
        if k == len(layout) - 2:
            weights.append(np.zeros((fan_in, fan_out)))
        else:
            weights.append(rng.standard_normal((fan_in, fan_out)) / np.sqrt(fan_in))
        biases.append(np.zeros(fan_out))
    return Mlp(weights, biases, [activation] * (len(layout) - 2))


def _as_batch(m, x):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    if X.ndim != 2 or X.shape[1] != m.input_dim:
        raise ShapeError(f"input of shape {x.shape} does not match input_dim {m.input_dim}")
    return X, single


def forward_cached(m, X):
    """Forward pass on a 2-D batch, keeping pre-activations for backward."""
    pre, post = [], [X]
    h = X
    n = len(m.weights)
    for k, (W, b) in enumerate(zip(m.weights, m.biases)):
        z = h @ W + b
        if k < n - 1:
            pre.append(z)
            h = _act(m.activations[k], z)
            post.append(h)
        else:
            h = z
    return h, (pre, post)


def backward_cached(m, cache, G):
    """Reverse pass for a batch; parameter gradients are summed over rows."""
    pre, post = cache
    grads = [None] * (2 * len(m.weights))
    for k in range(len(m.weights) - 1, -1, -1):
        grads[2 * k] = post[k].T @ G
        grads[2 * k + 1] = G.sum(axis=0)
        G = G @ m.weights[k].T
        if k > 0:
            G = G * _act_grad(m.activations[k - 1], pre[k - 1])
    return grads, G


def mlp_forward(m, x):
    X, single = _as_batch(m, x)
    y, _ = forward_cached(m, X)
    return y[0] if single else y


def mlp_backward(m, x, upstream_grad):
    """Gradients of ``<upstream_grad, mlp_forward(m, x)>``.

    Returns ``(param_grads, input_grad)``; ``param_grads`` follows the ordering
    of :meth:`Mlp.params`. For a batched ``x`` the parameter gradients are
    summed over the batch.
    """
    X, single = _as_batch(m, x)
    G = np.asarray(upstream_grad, dtype=np.float64)
    G = G[None, :] if G.ndim == 1 else G
    if G.shape != (X.shape[0], m.output_dim):
        raise ShapeError(f"upstream gradient shape {np.shape(upstream_grad)} does not match "
                         f"output ({X.shape[0]}, {m.output_dim})")
    _, cache = forward_cached(m, X)
    grads, gx = backward_cached(m, cache, G)
    return grads, (gx[0] if single else gx)


@dataclass(eq=False)
class AdamState:
    m: list
    v: list
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros_like(cls, net, beta1=0.9, beta2=0.999, eps=1e-8):
        return cls([np.zeros_like(p) for p in net.params()],
                   [np.zeros_like(p) for p in net.params()], 0, beta1, beta2, eps)


def adam_step(net, grads, state, lr):
    """One bias-corrected Adam update. Returns new ``(Mlp, AdamState)``; inputs untouched."""
    if lr <= 0:
        raise ConfigurationError("learning rate must be positive")
    params = net.params()
    if len(grads) != len(params) or any(g.shape != p.shape for g, p in zip(grads, params)):
        raise ShapeError("gradients are not shaped like the network parameters")
    step = state.t + 1
    if not all(np.all(np.isfinite(g)) for g in grads):
        raise TrainingError("non-finite gradient", step=step)
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** step
    c2 = 1.0 - b2 ** step
    new_m, new_v, new_p = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = b1 * m + (1.0 - b1) * g
        v = b2 * v + (1.0 - b2) * (g * g)
        new_p.append(p - lr * (m / c1) / (np.sqrt(v / c2) + state.eps))
        new_m.append(m)
        new_v.append(v)
    out = Mlp(new_p[0::2], new_p[1::2], list(net.activations))
    return out, AdamState(new_m, new_v, step, b1, b2, state.eps)


def numeric_param_grads(net, f, h=1e-5):
    """Central-difference gradients of scalar ``f(net)`` w.r.t. every parameter."""
    if not h > 0:
        raise ConfigurationError("finite-difference step must be positive")
    out = []
    for p in net.params():
        g = np.zeros_like(p)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = f(net)
            flat[i] = orig - h
            fm = f(net)
            flat[i] = orig
            gflat[i] = (fp - fm) / (2.0 * h)
        out.append(g)
    return out


def max_relative_error(analytic, numeric):
    worst = 0.0
    for a, n in zip(analytic, numeric):
        denom = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-12)
        worst = max(worst, float(np.max(np.abs(a - n) / denom)))
    return worst


def grad_check(net, x, loss, h=1e-5):
    """Compare reverse-mode parameter gradients to central differences.

    ``loss`` maps the network output to ``(value, d value / d output)``.
    Returns the max relative error over all parameters.
    """
    if not h > 0:
        raise ConfigurationError("finite-difference step must be positive")
    net = net.copy()
    _, dy = loss(mlp_forward(net, x))
    analytic, _ = mlp_backward(net, x, dy)
    numeric = numeric_param_grads(net, lambda n: loss(mlp_forward(n, x))[0], h)
    return max_relative_error(analytic, numeric)
