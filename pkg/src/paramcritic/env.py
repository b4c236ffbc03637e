"""Environments: continuous-force cartpole, the noisy quadratic, and a tiny Markov reward chain.

All environments share the episodic protocol used by the samplers::

    obs = env.reset(rng)
    obs, reward, done = env.step(action)
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CartPoleConfig:
    gravity: float = 9.8
    masscart: float = 1.0
    masspole: float = 0.1
    length: float = 0.5  # half the pole length
    force_mag: float = 10.0
    tau: float = 0.02
    max_steps: int = 200
    x_threshold: float = 2.4
    theta_threshold: float = 12 * 2 * math.pi / 360

    def __post_init__(self):
        for name in ("gravity", "masscart", "masspole", "length", "force_mag", "tau",
                     "max_steps", "x_threshold", "theta_threshold"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


DEFAULT_CARTPOLE = CartPoleConfig()


class TerminalStateError(RuntimeError):
    """Raised when stepping an environment that has already terminated."""


def cartpole_out_of_bounds(state, config: CartPoleConfig = DEFAULT_CARTPOLE) -> bool:
    return abs(state[0]) > config.x_threshold or abs(state[2]) > config.theta_threshold


def cartpole_reset(rng: np.random.Generator, config: CartPoleConfig = DEFAULT_CARTPOLE) -> np.ndarray:
    """State ``(x, x_dot, theta, theta_dot)`` with each entry uniform in [-0.05, 0.05]."""
    return rng.uniform(-0.05, 0.05, size=4)


def cartpole_step(state, force: float, config: CartPoleConfig = DEFAULT_CARTPOLE):
    """One forward-Euler step of the classic cartpole equations.

    Returns ``(next_state, reward, done)``; the reward is +1 while the next state
    stays inside the bounds and -1 on the transition that leaves them.
    """
    if cartpole_out_of_bounds(state, config):
        raise TerminalStateError("cannot step a terminal cartpole state")
    force = float(force)
    if abs(force) > config.force_mag * (1 + 1e-12):
        raise ValueError(f"|force| = {abs(force)} exceeds {config.force_mag}")

    x, x_dot, theta, theta_dot = (float(v) for v in state)
    total_mass = config.masscart + config.masspole
    polemass_length = config.masspole * config.length
    costheta = math.cos(theta)
    sintheta = math.sin(theta)

    temp = (force + polemass_length * theta_dot * theta_dot * sintheta) / total_mass
    thetaacc = (config.gravity * sintheta - costheta * temp) / (
        config.length * (4.0 / 3.0 - config.masspole * costheta * costheta / total_mass)
    )
    xacc = temp - polemass_length * thetaacc * costheta / total_mass

    x = x + config.tau * x_dot
    x_dot = x_dot + config.tau * xacc
    theta = theta + config.tau * theta_dot
    theta_dot = theta_dot + config.tau * thetaacc

    nxt = np.array([x, x_dot, theta, theta_dot])
    done = cartpole_out_of_bounds(nxt, config)
    return nxt, (-1.0 if done else 1.0), done


class CartPole:
    """Stateful wrapper over :func:`cartpole_reset` / :func:`cartpole_step`.

    The action is the force in newtons. Episode length is capped by the sampler,
    not here; ``config.max_steps`` is the default horizon.
    """

    obs_dim = 4

    def __init__(self, config: CartPoleConfig = DEFAULT_CARTPOLE):
        self.config = config
        self.state: np.ndarray | None = None
        self.done = False

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self.state = cartpole_reset(rng, self.config)
        self.done = False
        return self.state

    def step(self, action):
        if self.state is None:
            raise RuntimeError("reset() must be called before step()")
        if self.done:
            raise TerminalStateError("episode has terminated")
        self.state, reward, self.done = cartpole_step(self.state, np.ravel(action)[0], self.config)
        return self.state, reward, self.done


@dataclass(frozen=True)
class SyntheticObjective:
    """``sign * ||theta||^2`` observed through additive N(0, noise_sigma^2) noise.

    ``maximize=False`` (the default) returns ``||theta||^2 + eps`` for descent;
    ``maximize=True`` returns the surrogate ``-||theta||^2 + eps`` for ascent.
    """

    noise_sigma: float = 0.0
    maximize: bool = False

    def __post_init__(self):
        if not self.noise_sigma >= 0:
            raise ValueError(f"noise_sigma must be >= 0, got {self.noise_sigma}")

    def value(self, theta) -> float:
        theta = np.asarray(theta, dtype=np.float64)
        j = float(theta @ theta)
        return -j if self.maximize else j

    def evaluate(self, theta, rng: np.random.Generator) -> float:
        # always consume one normal so the stream position is independent of sigma
        eps = rng.standard_normal()
        return self.value(theta) + self.noise_sigma * eps


def synthetic_eval(obj: SyntheticObjective, theta, rng: np.random.Generator) -> float:
    return obj.evaluate(theta, rng)


class MarkovRewardChain:
    """Finite-state chain with state rewards ``r(s)`` and transition matrix ``P``.

    Actions are ignored (a fixed policy is folded into ``P``). Stepping pays the
    reward of the current state, then moves, so the discounted value solves
    ``V = r + gamma * P V``. Used as a ground-truth oracle for the samplers.
    """

    obs_dim = 1

    def __init__(self, transitions, rewards, initial=None):
        self.P = np.asarray(transitions, dtype=np.float64)
        self.r = np.asarray(rewards, dtype=np.float64)
        n = self.r.size
        if self.P.shape != (n, n) or not np.allclose(self.P.sum(axis=1), 1.0):
            raise ValueError("transitions must be a row-stochastic n x n matrix")
        self.rho0 = np.full(n, 1.0 / n) if initial is None else np.asarray(initial, dtype=np.float64)
        self._cum_P = np.cumsum(self.P, axis=1)
        self._cum_rho0 = np.cumsum(self.rho0)
        self.state = 0

    @classmethod
    def constant(cls, reward: float = 1.0) -> MarkovRewardChain:
        return cls([[1.0]], [reward])

    def value(self, gamma: float) -> np.ndarray:
        """Exact discounted values from the linear solve ``(I - gamma P) V = r``."""
        n = self.r.size
        return np.linalg.solve(np.eye(n) - gamma * self.P, self.r)

    def expected_value(self, gamma: float) -> float:
        return float(self.rho0 @ self.value(gamma))

    def _draw(self, cum, rng) -> int:
        return min(int(np.searchsorted(cum, rng.random(), side="right")), self.r.size - 1)

    def reset(self, rng: np.random.Generator) -> np.ndarray:
        self._rng = rng
        self.state = self._draw(self._cum_rho0, rng) if self.r.size > 1 else 0
        return np.array([float(self.state)])

    def step(self, action=None):
        reward = float(self.r[self.state])
        if self.r.size > 1:
            self.state = self._draw(self._cum_P[self.state], self._rng)
        return np.array([float(self.state)]), reward, False
