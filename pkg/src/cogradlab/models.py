"""Differentiable models with hand-derived per-example gradients.

Four kinds:

* ``LinearModel``       — y = w . x, half-square loss.
* ``DiagDeepModel``     — y = (w * u) . x, a depth-2 diagonal network.
* ``TwoNeuronModel``    — two linear hidden units, one reading only the
                          first five features, one reading all six.
* ``MLP``               — dense ReLU network with softmax cross-entropy.

All parameters live in one flat float64 vector; ``ParamSpace.segments``
names contiguous slices of it (layers) for per-segment coherence
decomposition.  ``per_example_grads`` returns one gradient row per example
and is vectorized over the batch.

Gradient sign convention: grad is literally the gradient of the loss, so
for half-square loss grad = -(y - yhat) * d(yhat)/d(theta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .numkit import Rng


@dataclass(frozen=True)
class ParamSpace:
    dim: int
    segments: tuple  # of (name, offset, length), tiling [0, dim)

    def __post_init__(self):
        cursor = 0
        for name, off, length in self.segments:
            if off != cursor or length <= 0:
                raise ValueError("segments must tile the parameter vector")
            cursor += length
        if cursor != self.dim:
            raise ValueError("segments must cover the parameter vector")

    def slice_of(self, name: str) -> slice:
        for n, off, length in self.segments:
            if n == name:
                return slice(off, off + length)
        raise KeyError(name)


def _stack(examples):
    X = np.stack([z.x for z in examples])
    Y = np.stack([z.y for z in examples])
    return X, Y


class Model:
    """Shared interface; subclasses implement the batch primitives."""

    loss_kind = "half_square"

    def param_space(self) -> ParamSpace:
        raise NotImplementedError

    def init_params(self, seed: int) -> np.ndarray:
        raise NotImplementedError

    def predict_batch(self, params, X) -> np.ndarray:
        raise NotImplementedError

    def loss_batch(self, params, X, Y) -> np.ndarray:
        raise NotImplementedError

    def grads_batch(self, params, X, Y) -> np.ndarray:
        raise NotImplementedError

    # single-example conveniences

    def loss(self, params, example) -> float:
        X, Y = _stack([example])
        return float(self.loss_batch(params, X, Y)[0])

    def grad(self, params, example) -> np.ndarray:
        X, Y = _stack([example])
        return self.grads_batch(params, X, Y)[0]

    def per_example_grads(self, params, examples) -> np.ndarray:
        X, Y = _stack(examples)
        return self.grads_batch(params, X, Y)

    def accuracy_batch(self, params, X, Y) -> np.ndarray:
        """Per-example correctness in {0,1}.

        Classification: argmax match.  Regression: prediction within 0.5 of
        the target, which gives the toy problems an accuracy curve.
        """
        out = self.predict_batch(params, X)
        if self.loss_kind == "softmax_cross_entropy":
            return (np.argmax(out, axis=1) == np.argmax(Y, axis=1)).astype(float)
        return (np.abs(out - Y[:, 0]) < 0.5).astype(float)


class _RegressionModel(Model):
    """Half-square-loss base: loss and grads from predict + jacobian."""

    def loss_batch(self, params, X, Y):
        r = Y[:, 0] - self.predict_batch(params, X)
        return 0.5 * r * r

    def grads_batch(self, params, X, Y):
        r = Y[:, 0] - self.predict_batch(params, X)
        return -r[:, None] * self._jacobian(params, X)

    def _jacobian(self, params, X):
        """Per-example d(yhat)/d(theta), shape (m, dim)."""
        raise NotImplementedError


class LinearModel(_RegressionModel):
    """y = w . x."""

    def __init__(self, dims: int):
        self.dims = dims

    def param_space(self):
        return ParamSpace(self.dims, (("w", 0, self.dims),))

    def init_params(self, seed: int) -> np.ndarray:
        return np.zeros(self.dims)

    def predict_batch(self, params, X):
        return X @ params

    def _jacobian(self, params, X):
        return X


class DiagDeepModel(_RegressionModel):
    """y = (w * u) . x with theta = [w | u].

    Depth-2 diagonal network: each input coordinate passes through its own
    two-weight chain.  From an equal-value init the two halves stay equal
    along full-batch gradient descent.
    """

    def __init__(self, dims: int, init_value: float = 0.01):
        self.dims = dims
        self.init_value = init_value

    def param_space(self):
        d = self.dims
        return ParamSpace(2 * d, (("w", 0, d), ("u", d, d)))

    def init_params(self, seed: int) -> np.ndarray:
        return np.full(2 * self.dims, self.init_value)

    def predict_batch(self, params, X):
        d = self.dims
        return X @ (params[:d] * params[d:])

    def _jacobian(self, params, X):
        d = self.dims
        w, u = params[:d], params[d:]
        return np.concatenate([X * u, X * w], axis=1)


class TwoNeuronModel(_RegressionModel):
    """Two linear hidden units over six features: h1 reads features 1-5,
    h2 reads all six; y = w1*h1 + w2*h2.

    theta = [u (5) | v (6) | w (2)], 13 parameters.  Segments split the
    hidden layer (u, v) from the output layer (w).
    """

    DIMS = 6

    def __init__(self, init_value: float = 0.01):
        self.init_value = init_value

    def param_space(self):
        return ParamSpace(13, (("hidden", 0, 11), ("output", 11, 2)))

    def init_params(self, seed: int) -> np.ndarray:
        return np.full(13, self.init_value)

    def predict_batch(self, params, X):
        u, v, w = params[:5], params[5:11], params[11:]
        h1 = X[:, :5] @ u
        h2 = X @ v
        return w[0] * h1 + w[1] * h2

    def _jacobian(self, params, X):
        u, v, w = params[:5], params[5:11], params[11:]
        m = X.shape[0]
        J = np.empty((m, 13))
        J[:, :5] = w[0] * X[:, :5]
        J[:, 5:11] = w[1] * X
        J[:, 11] = X[:, :5] @ u
        J[:, 12] = X @ v
        return J


class MLP(Model):
    """Dense ReLU network with a softmax cross-entropy head.

    Initialization is uniform in [-a, a] with a = 1/sqrt(fan-in), seeded.
    The ReLU subgradient at exactly 0 is taken as 0.  One parameter segment
    per layer (weights and bias together).
    """

    loss_kind = "softmax_cross_entropy"

    def __init__(self, dims: int, hidden, classes: int):
        self.dims = dims
        self.hidden = tuple(hidden)
        self.classes = classes
        widths = (dims,) + self.hidden + (classes,)
        self.shapes = [(widths[i + 1], widths[i]) for i in range(len(widths) - 1)]

    def param_space(self):
        segs, off = [], 0
        for i, (out, inp) in enumerate(self.shapes):
            n = out * inp + out
            name = f"layer{i + 1}" if i < len(self.shapes) - 1 else "out"
            segs.append((name, off, n))
            off += n
        return ParamSpace(off, tuple(segs))

    def init_params(self, seed: int) -> np.ndarray:
        rng = Rng(seed)
        parts = []
        for out, inp in self.shapes:
            a = 1.0 / np.sqrt(inp)
            parts.append(rng.uniform(-a, a, out * inp))
            parts.append(rng.uniform(-a, a, out))
        return np.concatenate(parts)

    def _unpack(self, params):
        layers, off = [], 0
        for out, inp in self.shapes:
            W = params[off:off + out * inp].reshape(out, inp)
            off += out * inp
            b = params[off:off + out]
            off += out
            layers.append((W, b))
        return layers

    def _forward(self, params, X):
        layers = self._unpack(params)
        acts = [X]   # post-activation per layer, acts[0] = input
        A = X
        for i, (W, b) in enumerate(layers):
            Z = A @ W.T + b
            A = Z if i == len(layers) - 1 else np.maximum(Z, 0.0)
            acts.append(A)
        return acts  # acts[-1] = logits

    def predict_batch(self, params, X):
        return self._forward(params, X)[-1]

    @staticmethod
    def _softmax(logits):
        z = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(z)
        return e / e.sum(axis=1, keepdims=True)

    def loss_batch(self, params, X, Y):
        logits = self.predict_batch(params, X)
        z = logits - logits.max(axis=1, keepdims=True)
        logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
        return -(Y * logp).sum(axis=1)

    def grads_batch(self, params, X, Y):
        layers = self._unpack(params)
        acts = self._forward(params, X)
        m = X.shape[0]
        G = np.empty((m, self.param_space().dim))
        delta = self._softmax(acts[-1]) - Y   # d(loss)/d(logits)
        off = self.param_space().dim
        for i in range(len(layers) - 1, -1, -1):
            W, _ = layers[i]
            A_prev = acts[i]
            out, inp = W.shape
            off -= out
            G[:, off:off + out] = delta
            off -= out * inp
            G[:, off:off + out * inp] = np.einsum(
                "mo,mi->moi", delta, A_prev).reshape(m, out * inp)
            if i > 0:
                delta = (delta @ W) * (acts[i] > 0.0)
        return G


def make_model(kind: str, **kw) -> Model:
    """Factory keyed by the config-file model name."""
    if kind == "linear":
        return LinearModel(kw["dims"])
    if kind == "diag_deep":
        return DiagDeepModel(kw["dims"], kw.get("init_value", 0.01))
    if kind == "two_neuron":
        return TwoNeuronModel(kw.get("init_value", 0.01))
    if kind == "mlp":
        return MLP(kw["dims"], kw["hidden"], kw["classes"])
    raise ValueError(f"unknown model kind: {kind}")
