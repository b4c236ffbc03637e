"""Unbiased noisy evaluations of the objective at a parameter vector.

Three modes share one front door (:func:`sample_objective`):

* ``finite``: reset, roll the policy out for at most ``horizon`` steps, sum rewards;
* ``geometric``: horizon ``H ~ Geom(1 - gamma)`` on ``{1, 2, ...}``, undiscounted sum
  of the first ``H`` rewards, an unbiased sample of the discounted value;
* ``synthetic``: the noisy quadratic, no rollout at all.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels
from .env import CartPole, SyntheticObjective
from .nn import Network, _activate, _views

MODES = ("finite", "geometric", "synthetic")


@dataclass(frozen=True)
class SamplerConfig:
    mode: str = "finite"
    horizon: int = 200
    gamma: float = 0.99

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"sampler mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "finite" and self.horizon < 1:
            raise ValueError("finite horizon must be >= 1")
        if self.mode == "geometric" and not 0.0 < self.gamma < 1.0:
            raise ValueError("gamma must lie in (0, 1)")


class NetworkPolicy:
    """Deterministic policy ``action = scale * F(obs; theta)`` for a fixed architecture."""

    def __init__(self, template: Network, scale: float = 1.0):
        self.template = template
        self.scale = scale

    @property
    def n_params(self) -> int:
        return self.template.n_params

    def _check(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=np.float64)
        if theta.shape != (self.template.n_params,):
            raise ValueError(
                f"policy expects {self.template.n_params} parameters, got shape {theta.shape}"
            )
        return theta

    def bind(self, theta) -> Callable[[np.ndarray], np.ndarray]:
        theta = self._check(theta)
        layers = _views(theta, self.template.layer_sizes)
        acts = self.template.activations
        n_in = self.template.n_inputs
        scale = self.scale

        def act(obs):
            a = np.asarray(obs, dtype=np.float64)
            if a.shape != (n_in,):
                raise ValueError(f"observation shape {a.shape} != ({n_in},)")
            for (w, b), f in zip(layers, acts):
                a = _activate(f, a @ w + b)
            return scale * a

        return act

    def cartpole_rollout(self, env: CartPole, theta, horizon: int, rng: np.random.Generator) -> float:
        """Compiled equivalent of resetting ``env`` and rolling out :meth:`bind`."""
        theta = self._check(theta)
        if self.template.n_inputs != env.obs_dim or self.template.n_outputs != 1:
            raise ValueError("policy network does not match the cartpole observation/action sizes")
        if not hasattr(self, "_sizes"):
            self._sizes = np.asarray(self.template.layer_sizes, dtype=np.int64)
            self._codes = np.asarray([_kernels.ACTIVATION_CODES[a] for a in self.template.activations],
                                     dtype=np.int64)
        state0 = env.reset(rng)
        c = env.config
        return float(_kernels.cartpole_mlp_rollout(
            theta, self._sizes, self._codes, float(self.scale), state0, int(horizon),
            c.gravity, c.masscart, c.masspole, c.length, c.tau, c.x_threshold, c.theta_threshold,
        ))


def _null_policy(theta):
    return lambda obs: 0.0


def draw_geometric(gamma: float, rng: np.random.Generator) -> int:
    """``H`` with ``P(H = h) = (1 - gamma) * gamma**(h - 1)`` for ``h >= 1``."""
    if not 0.0 < gamma < 1.0:
        raise ValueError(f"gamma must lie in (0, 1), got {gamma}")
    return int(rng.geometric(1.0 - gamma))


def _rollout(env, act, horizon: int, rng: np.random.Generator) -> float:
    obs = env.reset(rng)
    total = 0.0
    for _ in range(horizon):
        obs, reward, done = env.step(act(obs))
        total += reward
        if done:
            break
    return total


def _episode(env, theta, horizon: int, rng, policy) -> float:
    if isinstance(env, CartPole) and isinstance(policy, NetworkPolicy):
        return policy.cartpole_rollout(env, theta, horizon, rng)
    act = (policy.bind if policy is not None else _null_policy)(theta)
    return _rollout(env, act, horizon, rng)


def sample_finite_horizon(env, theta, horizon: int, rng: np.random.Generator, policy=None) -> float:
    """Summed (undiscounted) reward of one rollout of at most ``horizon`` steps."""
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    return _episode(env, theta, int(horizon), rng, policy)


def sample_geometric_horizon(env, theta, gamma: float, rng: np.random.Generator, policy=None) -> float:
    """Random-horizon sample whose expectation is the discounted value.

    Collects exactly ``H`` rewards; an episode ending earlier is treated as an
    absorbing zero-reward state.
    """
    horizon = draw_geometric(gamma, rng)
    return _episode(env, theta, horizon, rng, policy)


def sample_objective(cfg: SamplerConfig, target, theta, rng: np.random.Generator, policy=None) -> float:
    if cfg.mode == "synthetic":
        if not isinstance(target, SyntheticObjective):
            raise TypeError("synthetic mode needs a SyntheticObjective")
        return target.evaluate(theta, rng)
    if isinstance(target, SyntheticObjective):
        raise TypeError(f"{cfg.mode} mode needs an environment, got a SyntheticObjective")
    if cfg.mode == "finite":
        return sample_finite_horizon(target, theta, cfg.horizon, rng, policy)
    return sample_geometric_horizon(target, theta, cfg.gamma, rng, policy)
