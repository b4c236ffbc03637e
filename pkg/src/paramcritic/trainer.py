"""Zeroth-order training loops: raw two-point baseline and the parameter-critic loop.

Both loops draw from the same named random streams, so a critic run with
``bypass_critic=True`` reproduces the baseline run bit for bit.
"""

from __future__ import annotations

import math
import time
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

import numpy as np

from . import nn
from .critic import ParameterCritic, ReplayBuffer
from .env import DEFAULT_CARTPOLE, CartPole, SyntheticObjective
from .sampler import NetworkPolicy, SamplerConfig, sample_finite_horizon, sample_objective
from .zo import actor_update, draw_perturbation, two_point_estimate

STREAMS = ("actor_init", "critic_init", "perturbation", "rollout_plus", "rollout_minus", "minibatch", "eval")
PROBLEMS = ("toy", "cartpole")


class DivergenceError(FloatingPointError):
    """Actor parameters became non-finite."""


def make_streams(seed: int, trial: int = 0) -> dict[str, np.random.Generator]:
    """Independent generators keyed by name; each is a pure function of (seed, trial, name)."""
    return {
        name: np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(trial, k))))
        for k, name in enumerate(STREAMS)
    }


@dataclass(frozen=True)
class TrainConfig:
    problem: str = "toy"
    iterations: int = 10_000
    eta: float = 0.1
    mu: float = 0.005
    alpha: float = 0.005
    critic_steps: int = 1
    batch_size: int = 1
    buffer_capacity: int | None = None
    direction: str = "descend"
    sampler_mode: str = "synthetic"
    horizon: int = 200
    gamma: float = 0.99
    noise_sigma: float = 0.0
    theta0: tuple[float, ...] = (1.0,)
    actor_hidden: tuple[int, ...] = (34, 22)
    actor_activation: str = "relu"
    critic_hidden: tuple[int, ...] = (256,)
    critic_activation: str = "sigmoid2"
    critic_bias_init: str = "uniform"
    seed: int = 0
    trial: int = 0
    eval_interval: int = 0
    eval_episodes: int = 20
    mse_interval: int = 1
    bypass_critic: bool = False

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError(f"problem must be one of {PROBLEMS}, got {self.problem!r}")
        if not (self.eta > 0 and self.mu > 0):
            raise ValueError("eta and mu must be positive")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.critic_steps < 0 or self.batch_size < 1:
            raise ValueError("critic_steps must be >= 0 and batch_size >= 1")
        if self.direction not in ("ascend", "descend"):
            raise ValueError(f"direction must be 'ascend' or 'descend', got {self.direction!r}")
        if (self.problem == "toy") != (self.sampler_mode == "synthetic"):
            raise ValueError("the toy problem uses the synthetic sampler and only it does")
        SamplerConfig(self.sampler_mode, self.horizon, self.gamma)
        if self.buffer_capacity is not None and self.buffer_capacity < 1:
            raise ValueError("buffer_capacity must be >= 1 or None (unbounded)")
        if self.eval_interval < 0 or self.eval_episodes < 1 or self.mse_interval < 0:
            raise ValueError("eval_interval/mse_interval must be >= 0, eval_episodes >= 1")
        if self.critic_bias_init not in ("zero", "uniform"):
            raise ValueError(f"critic_bias_init must be 'zero' or 'uniform', got {self.critic_bias_init!r}")

    @property
    def sampler(self) -> SamplerConfig:
        return SamplerConfig(self.sampler_mode, self.horizon, self.gamma)

    def replace(self, **changes) -> TrainConfig:
        return TrainConfig(**{**asdict(self), **changes})


_TRAIN_KEYS = frozenset(f.name for f in fields(TrainConfig))


@dataclass
class TrainRecord:
    """Per-iteration metrics. ``None`` marks a field that does not apply or was not computed."""

    iteration: int
    j_plus: float
    j_minus: float
    theta_norm_sq: float
    f_plus: float | None = None
    f_minus: float | None = None
    critic_mse: float | None = None
    buffer_size: int | None = None
    eval_return: float | None = None
    elapsed: float = 0.0

    def key(self) -> tuple:
        """Everything except wall time, for reproducibility comparisons."""
        return (self.iteration, self.j_plus, self.j_minus, self.theta_norm_sq,
                self.f_plus, self.f_minus, self.critic_mse, self.buffer_size, self.eval_return)


RECORD_COLUMNS = tuple(f.name for f in fields(TrainRecord))


@dataclass
class Problem:
    theta0: np.ndarray
    target: object
    policy: NetworkPolicy | None = None
    sampler: SamplerConfig = field(default_factory=SamplerConfig)

    @property
    def dim(self) -> int:
        return self.theta0.size


def actor_template(config: TrainConfig, rng) -> nn.Network:
    sizes = (CartPole.obs_dim, *config.actor_hidden, 1)
    return nn.init_network(sizes, config.actor_activation, "tanh", rng)


def build_problem(config: TrainConfig, env=None, streams=None) -> Problem:
    streams = streams or make_streams(config.seed, config.trial)
    if config.problem == "toy":
        target = env if env is not None else SyntheticObjective(config.noise_sigma)
        return Problem(np.asarray(config.theta0, dtype=np.float64), target, None, config.sampler)
    env = env if env is not None else CartPole()
    actor = actor_template(config, streams["actor_init"])
    force = getattr(getattr(env, "config", None), "force_mag", DEFAULT_CARTPOLE.force_mag)
    return Problem(nn.flatten(actor), env, NetworkPolicy(actor, force), config.sampler)


def build_critic(config: TrainConfig, dim: int, rng) -> ParameterCritic:
    net = nn.init_network((dim, *config.critic_hidden, 1), config.critic_activation, "identity", rng,
                          bias=config.critic_bias_init)
    return ParameterCritic(net, config.alpha, config.batch_size)


def evaluate_policy(env, theta, episodes: int, rng: np.random.Generator, policy=None,
                    horizon: int = DEFAULT_CARTPOLE.max_steps) -> float:
    """Mean return of ``episodes`` independent finite-horizon rollouts at fixed ``theta``."""
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    return float(np.mean([sample_finite_horizon(env, theta, horizon, rng, policy) for _ in range(episodes)]))


def _train(config: TrainConfig, env, use_critic: bool, critic_net: nn.Network | None = None,
           on_record: Callable[[TrainRecord], None] | None = None,
           on_checkpoint: Callable[[int, np.ndarray, ParameterCritic | None], None] | None = None,
           checkpoint_interval: int = 0) -> list[TrainRecord]:
    streams = make_streams(config.seed, config.trial)
    problem = build_problem(config, env, streams)
    theta = problem.theta0.copy()
    p = problem.dim

    critic = buffer = None
    if use_critic:
        critic = build_critic(config, p, streams["critic_init"])
        if critic_net is not None:
            critic.net = critic_net.with_params(critic_net.params.copy())
        buffer = ReplayBuffer(config.buffer_capacity, p)

    evaluate = config.eval_interval > 0 and config.sampler_mode != "synthetic"
    start = time.perf_counter()
    records: list[TrainRecord] = []
    for t in range(1, config.iterations + 1):
        u = draw_perturbation(p, streams["perturbation"])
        plus = theta + config.mu * u
        minus = theta - config.mu * u
        j_plus = sample_objective(problem.sampler, problem.target, plus, streams["rollout_plus"], problem.policy)
        j_minus = sample_objective(problem.sampler, problem.target, minus, streams["rollout_minus"], problem.policy)

        rec = TrainRecord(t, j_plus, j_minus, 0.0)
        if use_critic:
            buffer.add(plus, j_plus, t)
            buffer.add(minus, j_minus, t)
            rec.buffer_size = len(buffer)
            for _ in range(config.critic_steps):
                critic.train_step(buffer, streams["minibatch"])
            # the actor queries the critic after this iteration's update
            rec.f_plus, rec.f_minus = (float(v) for v in critic.predict_many(np.stack([plus, minus])))
            if config.mse_interval and t % config.mse_interval == 0:
                rec.critic_mse = critic.mse(buffer)

        if use_critic and not config.bypass_critic:
            estimate = two_point_estimate(rec.f_plus, rec.f_minus, config.mu, u)
        else:
            estimate = two_point_estimate(j_plus, j_minus, config.mu, u)
        theta = actor_update(theta, estimate, config.eta, config.direction)
        if not np.all(np.isfinite(theta)):
            raise DivergenceError(f"actor parameters became non-finite at iteration {t}")

        rec.theta_norm_sq = float(theta @ theta)
        if evaluate and t % config.eval_interval == 0:
            rec.eval_return = evaluate_policy(problem.target, theta, config.eval_episodes, streams["eval"],
                                              problem.policy, config.horizon)
        rec.elapsed = time.perf_counter() - start
        records.append(rec)
        if on_record is not None:
            on_record(rec)
        if on_checkpoint is not None and checkpoint_interval and t % checkpoint_interval == 0:
            on_checkpoint(t, theta, critic)
    return records


def run_baseline(config: TrainConfig, env=None, **hooks) -> list[TrainRecord]:
    """Actor driven directly by the raw samples at ``theta +/- mu u``."""
    return _train(config, env, use_critic=False, **hooks)


def run_parameter_critic(config: TrainConfig, env=None, critic_net: nn.Network | None = None,
                         **hooks) -> list[TrainRecord]:
    """Actor driven by critic predictions at ``theta +/- mu u``; both raw samples feed the buffer."""
    return _train(config, env, use_critic=True, critic_net=critic_net, **hooks)


def final_log_theta_norm_sq(records: list[TrainRecord]) -> float:
    v = records[-1].theta_norm_sq
    return math.log(v) if v > 0 else -math.inf
