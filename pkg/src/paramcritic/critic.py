"""Parameter critic: a network fit to ``theta -> J_hat(theta)`` on a replay buffer.

Samples are pairs of a parameter vector and a noisy evaluation of the objective
at that vector. They stay valid however far the actor moves, so the buffer only
ever drops entries through FIFO eviction at capacity.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from . import nn


@dataclass(frozen=True)
class Sample:
    theta: np.ndarray
    j_hat: float
    iteration: int = 0


class ReplayBuffer:
    """FIFO store of samples; ``capacity=None`` keeps everything.

    Storage is a ring of preallocated arrays (grown geometrically when
    unbounded) so minibatch draws are a single fancy-index.
    """

    def __init__(self, capacity: int | None = None, dim: int | None = None):
        if capacity is not None and capacity < 1:
            raise ValueError(f"capacity must be >= 1 or None, got {capacity}")
        self.capacity = capacity
        self.dim = dim
        self._start = 0
        self._size = 0
        self._theta = None
        self._j = None
        self._iter = None

    def __len__(self) -> int:
        return self._size

    def _alloc(self, n: int):
        theta = np.empty((n, self.dim))
        j = np.empty(n)
        it = np.empty(n, dtype=np.int64)
        if self._theta is not None:
            order = self._order()
            theta[:self._size] = self._theta[order]
            j[:self._size] = self._j[order]
            it[:self._size] = self._iter[order]
        self._theta, self._j, self._iter, self._start = theta, j, it, 0

    def _order(self) -> np.ndarray:
        return (self._start + np.arange(self._size)) % self._theta.shape[0]

    def add(self, theta, j_hat: float, iteration: int = 0) -> None:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.ndim != 1:
            raise ValueError("theta must be a flat vector")
        if self.dim is None:
            self.dim = theta.size
        if theta.size != self.dim:
            raise ValueError(f"theta length {theta.size} != buffer dimension {self.dim}")
        if self._theta is None:
            self._alloc(self.capacity if self.capacity is not None else 64)
        slots = self._theta.shape[0]
        if self._size == slots:
            if self.capacity is None:
                self._alloc(2 * slots)
                slots = self._theta.shape[0]
            else:
                # evict the oldest
                self._start = (self._start + 1) % slots
                self._size -= 1
        k = (self._start + self._size) % slots
        self._theta[k] = theta
        self._j[k] = j_hat
        self._iter[k] = iteration
        self._size += 1

    def push(self, sample: Sample) -> None:
        self.add(sample.theta, sample.j_hat, sample.iteration)

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(thetas, j_hats, iterations) in insertion order, oldest first."""
        if self._size == 0:
            return np.empty((0, self.dim or 0)), np.empty(0), np.empty(0, dtype=np.int64)
        order = self._order()
        return self._theta[order], self._j[order], self._iter[order]

    def samples(self) -> list[Sample]:
        thetas, js, its = self.arrays()
        return [Sample(t.copy(), float(j), int(i)) for t, j, i in zip(thetas, js, its)]

    def draw(self, b: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
        """``b`` entries uniformly with replacement, as (thetas, j_hats) arrays."""
        if self._size == 0:
            raise ValueError("cannot draw from an empty buffer")
        idx = (self._start + rng.integers(0, self._size, size=b)) % self._theta.shape[0]
        return self._theta[idx], self._j[idx]

    def minibatch(self, b: int, rng: np.random.Generator) -> list[Sample]:
        if self._size == 0:
            raise ValueError("cannot draw from an empty buffer")
        idx = (self._start + rng.integers(0, self._size, size=b)) % self._theta.shape[0]
        return [Sample(self._theta[i].copy(), float(self._j[i]), int(self._iter[i])) for i in idx]

    def dump(self, path) -> None:
        """Comma-separated rows: iteration, j_hat, theta_0, ..., theta_{p-1}."""
        thetas, js, its = self.arrays()
        with open(path, "w") as fh:
            for t, j, i in zip(thetas, js, its):
                fh.write(",".join([str(int(i)), format(float(j), ".17g")]
                                  + [format(float(v), ".17g") for v in t]) + "\n")

    @classmethod
    def load(cls, path, capacity: int | None = None) -> ReplayBuffer:
        buf = cls(capacity)
        text = Path(path).read_text().strip()
        if not text:
            return buf
        rows = np.atleast_2d(np.loadtxt(text.splitlines(), delimiter=",", dtype=np.float64))
        for row in rows:
            buf.add(row[2:], float(row[1]), int(row[0]))
        return buf


def buffer_add(buf: ReplayBuffer, sample: Sample) -> None:
    buf.push(sample)


def buffer_minibatch(buf: ReplayBuffer, b: int, rng: np.random.Generator) -> list[Sample]:
    return buf.minibatch(b, rng)


class ParameterCritic:
    """Scalar-output network over actor parameters, trained by minibatch SGD on the MSE."""

    def __init__(self, net: nn.Network, alpha: float, batch_size: int = 1):
        if net.n_outputs != 1:
            raise ValueError("critic network must have a single output")
        if alpha < 0:
            raise ValueError(f"critic stepsize must be >= 0, got {alpha}")
        if batch_size < 1:
            raise ValueError(f"minibatch size must be >= 1, got {batch_size}")
        self.net = net
        self.alpha = alpha
        self.batch_size = batch_size

    def predict(self, theta) -> float:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.net.n_inputs,):
            raise ValueError(f"critic expects {self.net.n_inputs} parameters, got shape {theta.shape}")
        return float(nn.forward(self.net, theta)[0])

    def predict_many(self, thetas) -> np.ndarray:
        return nn.forward(self.net, np.atleast_2d(thetas))[:, 0]

    def train_step(self, buf: ReplayBuffer, rng: np.random.Generator) -> float:
        """One SGD step on a fresh minibatch; returns the loss before the step."""
        thetas, js = buf.draw(self.batch_size, rng)
        loss, grad = nn.backward_mse(self.net, thetas, js)
        if self.alpha:
            # in place: the critic owns its weights and the gradient buffer is fresh
            grad *= self.alpha
            np.subtract(self.net.params, grad, out=self.net.params)
        return loss

    def mse(self, buf: ReplayBuffer) -> float:
        """Mean of ``(F(theta_i) - J_hat_i)^2`` over every buffered sample."""
        if len(buf) == 0:
            raise ValueError("critic_mse of an empty buffer")
        thetas, js, _ = buf.arrays()
        resid = self.predict_many(thetas) - js
        return float(resid @ resid / resid.size)

    def sup_error(self, objective: Callable[[np.ndarray], float], grid) -> float:
        """``max |F(theta) - J(theta)|`` over the rows of ``grid`` (known-objective diagnostic)."""
        grid = np.atleast_2d(np.asarray(grid, dtype=np.float64))
        truth = np.array([objective(g) for g in grid])
        return float(np.max(np.abs(self.predict_many(grid) - truth)))


def critic_predict(critic: ParameterCritic, theta) -> float:
    return critic.predict(theta)


def critic_train_step(critic: ParameterCritic, buf: ReplayBuffer, rng: np.random.Generator) -> float:
    return critic.train_step(buf, rng)


def critic_mse(critic: ParameterCritic, buf: ReplayBuffer) -> float:
    return critic.mse(buf)
