"""Small dense networks with hand-written forward and backward passes.

Everything is float64 numpy.  Layers are fully connected with ReLU
between them; the output is either linear (critics) or tanh rescaled
into an action box (actors).  The backward pass returns both parameter
gradients and the gradient with respect to the input, which the actor
update needs to push value gradients through a critic into the policy.
"""
from __future__ import annotations

import numpy as np

from .errors import InvalidInputError


class DenseNet:
    """Fully connected ReLU network with explicit gradient computation.

    Parameters:
        sizes: layer widths from input to output, at least two entries.
        rng: generator used for the uniform fan-in initialization.
        out_low / out_high: when both are given, the output layer applies
            tanh and rescales into [out_low, out_high] elementwise;
            otherwise the output is linear.
    """

    def __init__(self, sizes, rng: np.random.Generator,
                 out_low: np.ndarray | None = None,
                 out_high: np.ndarray | None = None):
        if len(sizes) < 2:
            raise InvalidInputError("need at least an input and output size")
        self.sizes = tuple(int(s) for s in sizes)
        self.weights: list[np.ndarray] = []
        self.biases: list[np.ndarray] = []
        for fan_in, fan_out in zip(self.sizes[:-1], self.sizes[1:]):
            bound = 1.0 / np.sqrt(fan_in)
            self.weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
            self.biases.append(rng.uniform(-bound, bound, size=fan_out))
        if (out_low is None) != (out_high is None):
            raise InvalidInputError("bounded output needs both low and high")
        if out_low is not None:
            out_low = np.asarray(out_low, dtype=np.float64)
            out_high = np.asarray(out_high, dtype=np.float64)
            if out_low.shape != (self.sizes[-1],) or out_high.shape != out_low.shape:
                raise InvalidInputError("output bounds must match the output size")
            self._center = (out_high + out_low) / 2.0
            self._halfspan = (out_high - out_low) / 2.0
        else:
            self._center = None
            self._halfspan = None

    @property
    def bounded(self) -> bool:
        return self._center is not None

    def forward(self, x: np.ndarray, want_cache: bool = False):
        """Batch forward pass; optionally keep activations for backward.

        Returns the (n, out) output, or (output, cache) when
        `want_cache` is true.
        """
        x = np.asarray(x, dtype=np.float64)
        if x.ndim != 2 or x.shape[1] != self.sizes[0]:
            raise InvalidInputError(
                f"forward expects (n, {self.sizes[0]}), got {x.shape}"
            )
        inputs = []  # layer inputs, post-activation
        h = x
        last = len(self.weights) - 1
        pre_out = None
        for li, (w, b) in enumerate(zip(self.weights, self.biases)):
            inputs.append(h)
            z = h @ w + b
            if li < last:
                h = np.maximum(z, 0.0)
            else:
                pre_out = z
                if self.bounded:
                    h = self._center + self._halfspan * np.tanh(z)
                else:
                    h = z
        if want_cache:
            return h, (inputs, pre_out)
        return h

    def backward(self, cache, grad_out: np.ndarray):
        """Gradients of a scalar loss given d(loss)/d(output).

        Returns (weight_grads, bias_grads, grad_input), where grad_input
        is d(loss)/d(x) for the batch passed to `forward`.
        """
        inputs, pre_out = cache
        g = np.asarray(grad_out, dtype=np.float64)
        if self.bounded:
            g = g * self._halfspan * (1.0 - np.tanh(pre_out) ** 2)
        dws = [None] * len(self.weights)
        dbs = [None] * len(self.biases)
        for li in range(len(self.weights) - 1, -1, -1):
            h = inputs[li]
            dws[li] = h.T @ g
            dbs[li] = g.sum(axis=0)
            g = g @ self.weights[li].T
            if li > 0:
                # ReLU mask: the stored input of layer li is its output,
                # which is zero exactly where the unit was clamped
                g = g * (inputs[li] > 0.0)
        return dws, dbs, g

    def copy(self) -> "DenseNet":
        """Independent clone with identical parameters."""
        clone = object.__new__(DenseNet)
        clone.sizes = self.sizes
        clone.weights = [w.copy() for w in self.weights]
        clone.biases = [b.copy() for b in self.biases]
        clone._center = None if self._center is None else self._center.copy()
        clone._halfspan = None if self._halfspan is None else self._halfspan.copy()
        return clone

    def params(self):
        """Flat list of parameter arrays, weights then bias per layer."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out


def polyak_update(target: DenseNet, online: DenseNet, tau: float) -> None:
    """target <- tau * online + (1 - tau) * target, parameterwise.

    tau = 0 leaves the target bitwise untouched; tau = 1 copies the
    online parameters bitwise.
    """
    if not 0.0 <= tau <= 1.0:
        raise InvalidInputError(f"tau must lie in [0, 1], got {tau}")
    for pt, po in zip(target.params(), online.params()):
        if tau == 1.0:
            pt[...] = po
        elif tau != 0.0:
            pt *= 1.0 - tau
            pt += tau * po


class SGD:
    """Plain stochastic gradient descent."""

    def __init__(self, lr: float):
        self.lr = float(lr)

    def step(self, params, grads) -> None:
        for p, g in zip(params, grads):
            p -= self.lr * g


class Adam:
    """Adam with the usual bias correction; an opt-in alternative to SGD."""

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8):
        self.lr = float(lr)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self._m = None
        self._v = None

    def step(self, params, grads) -> None:
        if self._m is None:
            self._m = [np.zeros_like(p) for p in params]
            self._v = [np.zeros_like(p) for p in params]
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        scale = self.lr * np.sqrt(1.0 - b2 ** self.t) / (1.0 - b1 ** self.t)
        for p, g, m, v in zip(params, grads, self._m, self._v):
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            p -= scale * m / (np.sqrt(v) + self.eps)


def make_optimizer(name: str, lr: float):
    if name == "sgd":
        return SGD(lr)
    if name == "adam":
        return Adam(lr)
    raise InvalidInputError(f"unknown optimizer {name!r}")
