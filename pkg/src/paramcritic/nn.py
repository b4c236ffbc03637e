"""Small multilayer perceptron engine on flat float64 parameter vectors.

A :class:`Network` keeps all of its weights in one contiguous vector so the
same object can be perturbed by the zeroth-order machinery (actor) or trained
by SGD (critic) without any reshaping glue.

Flat layout, fixed for checkpoints and buffers: layer-major; inside a layer the
weight matrix of shape ``(fan_in, fan_out)`` in row-major order, then the
``fan_out`` biases.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

HIDDEN_ACTIVATIONS = ("sigmoid2", "relu", "tanh")
OUTPUT_ACTIVATIONS = ("identity", "tanh")


def sigmoid2(x):
    """Logistic function with slope 2 at the origin, ``1 / (1 + exp(-2x))``.

    Evaluated as ``(1 + tanh(x)) / 2``, which is the same function and never
    overflows.
    """
    return 0.5 * (1.0 + np.tanh(x))


def _activate(name: str, z: np.ndarray) -> np.ndarray:
    if name == "sigmoid2":
        return sigmoid2(z)
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    if name == "identity":
        return z
    raise ValueError(f"unknown activation {name!r}")


def _activation_grad(name: str, z: np.ndarray, a: np.ndarray) -> np.ndarray:
    # derivative w.r.t. the pre-activation z, given the activation a = f(z)
    if name == "sigmoid2":
        return 2.0 * a * (1.0 - a)
    if name == "relu":
        return (z > 0.0).astype(np.float64)
    if name == "tanh":
        return 1.0 - a * a
    if name == "identity":
        return np.ones_like(z)
    raise ValueError(f"unknown activation {name!r}")


def num_params(layer_sizes: Sequence[int]) -> int:
    """Flattened length: sum over layers of ``fan_in * fan_out + fan_out``."""
    return sum(a * b + b for a, b in zip(layer_sizes[:-1], layer_sizes[1:]))


@dataclass(frozen=True, eq=False)
class Network:
    layer_sizes: tuple[int, ...]
    hidden: tuple[str, ...]
    output: str
    params: np.ndarray

    def __post_init__(self):
        if len(self.layer_sizes) < 2:
            raise ValueError("a network needs at least an input and an output layer")
        if any(int(n) < 1 for n in self.layer_sizes):
            raise ValueError(f"layer sizes must be positive, got {self.layer_sizes}")
        if len(self.hidden) != len(self.layer_sizes) - 2:
            raise ValueError(
                f"{len(self.layer_sizes) - 2} hidden layers but {len(self.hidden)} activations"
            )
        for name in self.hidden:
            if name not in HIDDEN_ACTIVATIONS:
                raise ValueError(f"hidden activation must be one of {HIDDEN_ACTIVATIONS}, got {name!r}")
        if self.output not in OUTPUT_ACTIVATIONS:
            raise ValueError(f"output activation must be one of {OUTPUT_ACTIVATIONS}, got {self.output!r}")
        if self.params.shape != (num_params(self.layer_sizes),):
            raise ValueError(
                f"expected {num_params(self.layer_sizes)} parameters, got shape {self.params.shape}"
            )

    @property
    def n_params(self) -> int:
        return self.params.size

    @property
    def n_inputs(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_outputs(self) -> int:
        return self.layer_sizes[-1]

    @property
    def activations(self) -> tuple[str, ...]:
        return (*self.hidden, self.output)

    def layers(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """(W, b) views into ``params``; W has shape ``(fan_in, fan_out)``."""
        return _views(self.params, self.layer_sizes)

    def with_params(self, params: np.ndarray) -> Network:
        return Network(self.layer_sizes, self.hidden, self.output, np.asarray(params, dtype=np.float64))

    def equals(self, other: Network) -> bool:
        """Bitwise equality of architecture and weights."""
        return (
            self.layer_sizes == other.layer_sizes
            and self.activations == other.activations
            and np.array_equal(self.params, other.params)
        )


def _views(params: np.ndarray, layer_sizes: Sequence[int]) -> list[tuple[np.ndarray, np.ndarray]]:
    out = []
    pos = 0
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        w = params[pos:pos + fan_in * fan_out].reshape(fan_in, fan_out)
        pos += fan_in * fan_out
        b = params[pos:pos + fan_out]
        pos += fan_out
        out.append((w, b))
    return out


def _normalize_hidden(hidden, n_hidden: int) -> tuple[str, ...]:
    if isinstance(hidden, str):
        return (hidden,) * n_hidden
    return tuple(hidden)


def init_network(
    layer_sizes: Sequence[int],
    hidden: str | Sequence[str] = "relu",
    output: str = "identity",
    seed: int | np.random.Generator = 0,
    bias: str = "zero",
) -> Network:
    """Weights uniform in ``[-1/sqrt(fan_in), 1/sqrt(fan_in)]``.

    Biases are zero by default; ``bias="uniform"`` draws them from the same
    range as the weights of their layer.
    """
    if bias not in ("zero", "uniform"):
        raise ValueError(f"bias must be 'zero' or 'uniform', got {bias!r}")
    sizes = tuple(int(n) for n in layer_sizes)
    if len(sizes) < 2 or any(n < 1 for n in sizes):
        raise ValueError(f"invalid layer sizes {list(layer_sizes)}")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    params = np.zeros(num_params(sizes))
    for w, b in _views(params, sizes):
        bound = 1.0 / np.sqrt(w.shape[0])
        w[...] = rng.uniform(-bound, bound, size=w.shape)
        if bias == "uniform":
            b[...] = rng.uniform(-bound, bound, size=b.shape)
    return Network(sizes, _normalize_hidden(hidden, len(sizes) - 2), output, params)


def forward(net: Network, x) -> np.ndarray:
    """Evaluate the network on one input vector or a batch of row vectors."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    a = np.atleast_2d(x)
    if a.ndim != 2 or a.shape[1] != net.n_inputs:
        raise ValueError(f"input dimension {x.shape[-1] if x.ndim else 0} != {net.n_inputs}")
    for (w, b), act in zip(net.layers(), net.activations):
        a = _activate(act, a @ w + b)
    return a[0] if single else a


def backward_mse(net: Network, inputs, targets) -> tuple[float, np.ndarray]:
    """Mean squared error over the batch and its exact gradient w.r.t. the flat weights.

    ``loss = mean_i ||F(x_i) - y_i||^2``; for scalar outputs this is the plain
    mean of squared residuals (no factor 1/2).
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    n = x.shape[0]
    if np.asarray(inputs).size == 0 or n == 0:
        raise ValueError("backward_mse needs a non-empty batch")
    if x.shape[1] != net.n_inputs:
        raise ValueError(f"input dimension {x.shape[1]} != {net.n_inputs}")
    y = np.asarray(targets, dtype=np.float64).reshape(n, net.n_outputs)

    layers = net.layers()
    pre, post = [], [x]
    a = x
    for (w, b), act in zip(layers, net.activations):
        z = a @ w + b
        a = _activate(act, z)
        pre.append(z)
        post.append(a)

    resid = post[-1] - y
    loss = float(np.sum(resid * resid) / n)

    grad = np.empty_like(net.params)
    gviews = _views(grad, net.layer_sizes)
    delta = (2.0 / n) * resid
    for k in range(len(layers) - 1, -1, -1):
        delta = delta * _activation_grad(net.activations[k], pre[k], post[k + 1])
        gw, gb = gviews[k]
        np.matmul(post[k].T, delta, out=gw)
        np.sum(delta, axis=0, out=gb)
        if k:
            delta = delta @ layers[k][0].T
    return loss, grad


def sgd_step(net: Network, grad: np.ndarray, stepsize: float) -> Network:
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != net.params.shape:
        raise ValueError(f"gradient shape {grad.shape} does not match network {net.params.shape}")
    return net.with_params(net.params - stepsize * grad)


def flatten(net: Network) -> np.ndarray:
    return net.params.copy()


def unflatten(template: Network, v) -> Network:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (template.n_params,):
        raise ValueError(f"expected a vector of length {template.n_params}, got shape {v.shape}")
    return template.with_params(v.copy())


def save_network(net: Network, path) -> None:
    """Header line of layer sizes, then one weight per line in flat order."""
    lines = [" ".join(str(n) for n in net.layer_sizes)]
    lines.extend(format(float(v), ".17g") for v in net.params)
    Path(path).write_text("\n".join(lines) + "\n")


def load_network(path, hidden: str | Sequence[str] = "relu", output: str = "identity") -> Network:
    """Inverse of :func:`save_network`; activations are not stored in the file."""
    with open(path) as fh:
        sizes = tuple(int(tok) for tok in fh.readline().split())
        params = np.loadtxt(fh, dtype=np.float64, ndmin=1)
    return Network(sizes, _normalize_hidden(hidden, len(sizes) - 2), output, params)
