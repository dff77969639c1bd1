"""Minimal dense feed-forward network machinery with exact analytic gradients.

Everything here operates on plain float64 numpy arrays.  Layers are
affine maps with ReLU (or tanh) on hidden layers and a linear final
layer.
A central finite-difference estimator is provided as an independent
oracle for the analytic backward pass.
"""

from dataclasses import dataclass

import numpy as np


class ShapeError(ValueError):
    """Raised when an input dimension does not match a layer dimension."""


@dataclass
class LayerParams:
    """One affine layer: weight is (out_dim, in_dim), bias is (out_dim,)."""

    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weight.ndim != 2 or self.bias.ndim != 1:
            raise ShapeError(
                f"weight must be 2-d and bias 1-d, got {self.weight.ndim}-d "
                f"and {self.bias.ndim}-d"
            )
        if self.weight.shape[0] != self.bias.shape[0]:
            raise ShapeError(
                f"weight has {self.weight.shape[0]} output rows but bias has "
                f"{self.bias.shape[0]} entries"
            )

    @property
    def in_dim(self):
        return self.weight.shape[1]

    @property
    def out_dim(self):
        return self.weight.shape[0]


@dataclass
class ForwardCache:
    """Intermediate state of one forward pass, consumed by mlp_backward.

    All arrays are 2-d with one row per batch instance, even when the
    forward call was made with a single vector.
    """

    x0: np.ndarray
    pre: list  # pre-activation per layer
    act: list  # post-activation per layer (last layer is linear)


def _as_batch(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x[None, :], True
    if x.ndim == 2:
        return x, False
    raise ShapeError(f"expected a vector or a batch of vectors, got {x.ndim}-d")


def affine_forward(params, x):
    """weight @ x + bias.  Accepts a vector or a (n, in_dim) batch."""
    xb, single = _as_batch(x)
    if xb.shape[1] != params.in_dim:
        raise ShapeError(
            f"input has {xb.shape[1]} features but layer expects {params.in_dim}"
        )
    out = xb @ params.weight.T + params.bias
    return out[0] if single else out


def relu(v):
    return np.maximum(0.0, np.asarray(v, dtype=np.float64))


# Smallest positive subnormal / largest double below 1; sigmoid output is
# clamped into this open interval so extreme inputs never return 0 or 1.
_SIGMOID_LO = 5e-324
_SIGMOID_HI = np.nextafter(1.0, 0.0)


def sigmoid_stable(z):
    """Numerically stable logistic function, elementwise.

    Never overflows; output is clamped into the open interval (0, 1).
    """
    z = np.asarray(z, dtype=np.float64)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    out = np.clip(out, _SIGMOID_LO, _SIGMOID_HI)
    return float(out[0]) if scalar else out


ACTIVATIONS = ("relu", "tanh")


def _activate(z, activation):
    if activation == "relu":
        return relu(z)
    if activation == "tanh":
        return np.tanh(z)
    raise ValueError(f"unknown activation {activation!r}")


def mlp_forward(layers, x, activation="relu"):
    """Run affine+activation layers (linear final layer); returns (output, cache)."""
    xb, single = _as_batch(x)
    pre, act = [], []
    h = xb
    for i, layer in enumerate(layers):
        z = affine_forward(layer, h)
        pre.append(z)
        h = z if i == len(layers) - 1 else _activate(z, activation)
        act.append(h)
    cache = ForwardCache(x0=xb, pre=pre, act=act)
    return (h[0] if single else h), cache


def mlp_backward(layers, cache, output_grad, activation="relu"):
    """Backpropagate through a cached forward pass.

    output_grad is dLoss/dOutput, shaped like the forward output.
    Returns ([(dweight, dbias) per layer], input_grad).
    """
    g, single = _as_batch(output_grad)
    last = cache.pre[-1]
    if g.shape != last.shape:
        raise ShapeError(
            f"output_grad shape {g.shape} does not match cached output {last.shape}"
        )
    param_grads = [None] * len(layers)
    for i in range(len(layers) - 1, -1, -1):
        a_prev = cache.x0 if i == 0 else cache.act[i - 1]
        dw = g.T @ a_prev
        db = g.sum(axis=0)
        param_grads[i] = (dw, db)
        g = g @ layers[i].weight
        if i > 0:
            if activation == "relu":
                g = g * (cache.pre[i - 1] > 0)
            else:
                g = g * (1.0 - cache.act[i - 1] ** 2)
    return param_grads, (g[0] if single else g)


def finite_diff_grad(loss_fn, params, step=1e-5):
    """Central-difference gradient of a scalar loss over a flat parameter vector."""
    if step <= 0:
        raise ValueError(f"step must be positive, got {step}")
    theta = np.atleast_1d(np.asarray(params, dtype=np.float64)).copy()
    grad = np.empty_like(theta)
    for i in range(theta.size):
        orig = theta[i]
        theta[i] = orig + step
        up = loss_fn(theta)
        theta[i] = orig - step
        down = loss_fn(theta)
        theta[i] = orig
        grad[i] = (up - down) / (2.0 * step)
    return grad


def init_params(layer_dims, rng_seed):
    """Glorot-uniform weights, zero biases; deterministic for a given seed."""
    dims = list(layer_dims)
    if len(dims) < 2:
        raise ValueError(f"need at least two layer dims, got {dims}")
    rng = np.random.default_rng(rng_seed)
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layers.append(LayerParams(weight=w, bias=np.zeros(fan_out)))
    return layers


def layers_to_vector(layers):
    """Flatten a layer list to one float64 vector (weights then bias, per layer)."""
    parts = []
    for layer in layers:
        parts.append(layer.weight.ravel())
        parts.append(layer.bias)
    return np.concatenate(parts)


def vector_to_layers(vec, layer_dims):
    """Inverse of layers_to_vector for the given dimension chain."""
    vec = np.asarray(vec, dtype=np.float64)
    dims = list(layer_dims)
    needed = sum(o * i + o for i, o in zip(dims[:-1], dims[1:]))
    if vec.size != needed:
        raise ShapeError(f"vector has {vec.size} entries but dims need {needed}")
    layers = []
    pos = 0
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        w = vec[pos:pos + fan_out * fan_in].reshape(fan_out, fan_in)
        pos += fan_out * fan_in
        b = vec[pos:pos + fan_out]
        pos += fan_out
        layers.append(LayerParams(weight=w, bias=b))
    return layers


def grads_to_vector(param_grads):
    """Flatten mlp_backward output with the same ordering as layers_to_vector."""
    parts = []
    for dw, db in param_grads:
        parts.append(np.asarray(dw).ravel())
        parts.append(np.asarray(db).ravel())
    return np.concatenate(parts)
