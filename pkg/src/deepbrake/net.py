"""Fully-connected leaky-ReLU Q-network with hand-written backprop and RMSProp.

Weights are stored as ``(fan_in, fan_out)`` so a batch ``X`` of shape
``(n, fan_in)`` maps to ``X @ W + b``. Everything runs in float64.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "QNetworkParams", "init_params", "forward", "forward_cached", "backward",
    "RMSProp", "DEFAULT_SIZES", "param_count", "unflatten",
]

DEFAULT_SIZES = (15, 100, 70, 50, 70, 100, 4)


class QNetworkParams:
    """Layer weights and biases stored as views into one flat float64 buffer.

    ``weights[i]`` has shape ``(sizes[i], sizes[i+1])``; the flat layout is
    W0, b0, W1, b1, ... in row-major order.
    """

    def __init__(self, weights, biases):
        sizes = (weights[0].shape[0], *(w.shape[1] for w in weights))
        self.flat = np.empty(param_count(sizes))
        self.weights, self.biases = _views(self.flat, sizes)
        for dst, src in zip(self.arrays(), _interleave(weights, biases)):
            if dst.shape != np.shape(src):
                raise ValueError(f"parameter shape {np.shape(src)} != {dst.shape}")
            dst[...] = src

    @classmethod
    def from_flat(cls, flat, sizes) -> "QNetworkParams":
        self = cls.__new__(cls)
        self.flat = np.array(flat, dtype=np.float64)
        if self.flat.shape != (param_count(sizes),):
            raise ValueError("flat parameter vector does not match layer sizes")
        self.weights, self.biases = _views(self.flat, sizes)
        return self

    @property
    def sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0], *(w.shape[1] for w in self.weights))

    @property
    def n_params(self) -> int:
        return self.flat.size

    def arrays(self) -> list[np.ndarray]:
        """Parameters interleaved as W0, b0, W1, b1, ..."""
        return _interleave(self.weights, self.biases)

    def copy(self) -> "QNetworkParams":
        return QNetworkParams.from_flat(self.flat, self.sizes)

    def equals(self, other: "QNetworkParams") -> bool:
        return self.sizes == other.sizes and np.array_equal(self.flat, other.flat)


def param_count(sizes) -> int:
    return sum(a * b + b for a, b in zip(sizes[:-1], sizes[1:]))


def _interleave(weights, biases):
    out = []
    for w, b in zip(weights, biases):
        out += [w, b]
    return out


def _views(flat, sizes):
    weights, biases, k = [], [], 0
    for a, b in zip(sizes[:-1], sizes[1:]):
        weights.append(flat[k:k + a * b].reshape(a, b))
        k += a * b
        biases.append(flat[k:k + b])
        k += b
    return weights, biases


def init_params(sizes=DEFAULT_SIZES, rng=None) -> QNetworkParams:
    """He-uniform weights with bound ``sqrt(6 / fan_in)``, zero biases."""
    rng = np.random.default_rng(rng)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return QNetworkParams(weights, biases)


def _check_input(p, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != p.weights[0].shape[0]:
        raise ValueError(f"input width {x.shape[-1]} != {p.weights[0].shape[0]}")
    if not np.isfinite(x).all():
        raise FloatingPointError("non-finite network input")
    return x


def forward(p: QNetworkParams, x, slope: float = 0.01) -> np.ndarray:
    """Q-values for one input vector or a batch of row vectors."""
    h = _check_input(p, x)
    last = len(p.weights) - 1
    for i, (w, b) in enumerate(zip(p.weights, p.biases)):
        h = h @ w + b
        if i < last:
            h = np.maximum(h, slope * h)
    return h


def forward_cached(p: QNetworkParams, x, slope: float = 0.01):
    """Forward pass that also returns what :func:`backward` needs.

    The cache is a list of ``(layer_input, pre_activation)`` pairs; nothing is
    stored on ``p``.
    """
    h = np.atleast_2d(_check_input(p, x))
    cache = []
    last = len(p.weights) - 1
    for i, (w, b) in enumerate(zip(p.weights, p.biases)):
        z = h @ w + b
        cache.append((h, z))
        h = np.maximum(z, slope * z) if i < last else z
    return h, cache


def backward(p: QNetworkParams, cache, grad_out, slope: float = 0.01) -> np.ndarray:
    """Flat gradient (same layout as ``p.flat``) of a loss given dL/d(output).

    Batched inputs accumulate gradients over rows. :func:`unflatten` gives
    per-layer views.
    """
    dz = np.atleast_2d(np.asarray(grad_out, dtype=np.float64))
    out_h, out_z = cache[-1]
    if dz.shape != out_z.shape:
        raise ValueError(f"output gradient shape {dz.shape} != {out_z.shape}")
    flat = np.empty_like(p.flat)
    g_w, g_b = _views(flat, p.sizes)
    for i in range(len(p.weights) - 1, -1, -1):
        h, z = cache[i]
        if i < len(p.weights) - 1:
            dz = dz * np.where(z > 0, 1.0, slope)
        np.matmul(h.T, dz, out=g_w[i])
        np.sum(dz, axis=0, out=g_b[i])
        if i > 0:
            dz = dz @ p.weights[i].T
    return flat


def unflatten(flat, sizes):
    """Per-layer ``(weights, biases)`` views of a flat parameter-shaped vector."""
    return _views(flat, sizes)


class RMSProp:
    """``acc <- rho*acc + (1-rho)*g**2``; ``theta <- theta - lr*g/(sqrt(acc)+eps)``."""

    def __init__(self, params: QNetworkParams, lr=0.0005, decay=0.9, eps=1e-8):
        self.lr, self.decay, self.eps = lr, decay, eps
        self.acc = np.zeros_like(params.flat)
        self._work = np.empty_like(params.flat)

    def step(self, params: QNetworkParams, grad: np.ndarray) -> QNetworkParams:
        """Update ``params`` in place from a flat gradient and return it."""
        if grad.shape != params.flat.shape:
            raise ValueError(f"gradient shape {grad.shape} != {params.flat.shape}")
        acc, work = self.acc, self._work
        acc *= self.decay
        np.multiply(grad, grad, out=work)
        work *= 1.0 - self.decay
        acc += work
        np.sqrt(acc, out=work)
        work += self.eps
        np.divide(grad, work, out=work)
        work *= self.lr
        params.flat -= work
        return params
