"""Self-check diagnostics with independent oracles, run by ``paramcritic check``.

Every check returns a :class:`CheckResult` carrying the measured value next to
the bound it is compared against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import nn, zo
from .critic import ReplayBuffer
from .env import MarkovRewardChain
from .sampler import sample_finite_horizon, sample_geometric_horizon


@dataclass(frozen=True)
class CheckResult:
    name: str
    measured: float
    bound: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: measured={self.measured:.6g} bound={self.bound:.6g}"


def two_point_zscores(p: int, n: int = 100_000, mu: float = 0.1, seed: int = 0,
                      estimator: Callable | None = None) -> np.ndarray:
    """Per-coordinate z-scores of the mean two-point estimate on ``||theta||^2`` against ``2 theta``."""
    estimator = estimator or zo.two_point_estimate
    rng = np.random.default_rng(seed)
    theta = rng.standard_normal(p)
    theta /= np.linalg.norm(theta)
    u = rng.standard_normal((n, p))
    j_plus = np.sum((theta + mu * u) ** 2, axis=1)
    j_minus = np.sum((theta - mu * u) ** 2, axis=1)
    g = estimator(j_plus[:, None], j_minus[:, None], mu, u)
    se = g.std(axis=0, ddof=1) / np.sqrt(n)
    return (g.mean(axis=0) - 2 * theta) / se


def check_two_point_unbiased(p: int, estimator: Callable | None = None, n: int = 100_000) -> CheckResult:
    z = two_point_zscores(p, n, estimator=estimator)
    worst = float(np.max(np.abs(z)))
    return CheckResult(f"two-point estimate unbiased on ||theta||^2 (p={p}, |z| max)", worst, 3.0, worst <= 3.0)


def geometric_mean(env, gamma: float, n: int, seed: int = 0) -> tuple[float, float]:
    """Sample mean and its standard error for the random-horizon sampler."""
    rng = np.random.default_rng(seed)
    draws = np.array([sample_geometric_horizon(env, None, gamma, rng) for _ in range(n)])
    return float(draws.mean()), float(draws.std(ddof=1) / np.sqrt(n))


def three_state_chain() -> MarkovRewardChain:
    return MarkovRewardChain(
        [[0.5, 0.3, 0.2],
         [0.1, 0.6, 0.3],
         [0.4, 0.0, 0.6]],
        [1.0, -0.5, 2.0],
        initial=[0.5, 0.25, 0.25],
    )


def check_geometric_constant_chain(n: int = 100_000, gamma: float = 0.9) -> CheckResult:
    mean, _ = geometric_mean(MarkovRewardChain.constant(1.0), gamma, n)
    err = abs(mean - 1.0 / (1.0 - gamma))
    return CheckResult(f"geometric sampler on constant chain (gamma={gamma}, mean={mean:.4f}, |err|)",
                       err, 0.1, err <= 0.1)


def check_geometric_mdp(n: int = 100_000, gamma: float = 0.8) -> CheckResult:
    chain = three_state_chain()
    mean, se = geometric_mean(chain, gamma, n, seed=1)
    z = abs(mean - chain.expected_value(gamma)) / se
    return CheckResult(f"geometric sampler on 3-state chain vs linear solve (gamma={gamma}, |z|)", z, 3.0, z <= 3.0)


def finite_difference_grad(f: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-5) -> np.ndarray:
    g = np.empty_like(x)
    for i in range(x.size):
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2 * h)
    return g


def relative_error(a: np.ndarray, b: np.ndarray, floor: float = 1e-6) -> np.ndarray:
    return np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)


def gradient_check_errors(instances: int = 20, seed: int = 0) -> list[float]:
    """Worst per-coordinate relative error of ``backward_mse`` against central differences."""
    rng = np.random.default_rng(seed)
    hiddens = ("sigmoid2", "tanh", "relu")
    errors = []
    for k in range(instances):
        depth = int(rng.integers(1, 3))
        sizes = [int(rng.integers(1, 5))] + [int(rng.integers(2, 7)) for _ in range(depth)] + [1]
        net = nn.init_network(sizes, hiddens[k % 3], ("identity", "tanh")[k % 2], rng)
        net = net.with_params(net.params + 0.1 * rng.standard_normal(net.n_params))
        x = rng.standard_normal((int(rng.integers(1, 8)), sizes[0]))
        y = rng.standard_normal(x.shape[0])
        _, grad = nn.backward_mse(net, x, y)
        fd = finite_difference_grad(lambda w: nn.backward_mse(net.with_params(w), x, y)[0], net.params)
        errors.append(float(np.max(relative_error(grad, fd))))
    return errors


def check_gradient(instances: int = 20) -> CheckResult:
    worst = max(gradient_check_errors(instances))
    return CheckResult(f"backward_mse vs central differences ({instances} nets, max rel err)",
                       worst, 1e-4, worst <= 1e-4)


def check_finite_horizon_constant() -> CheckResult:
    total = sample_finite_horizon(MarkovRewardChain.constant(1.0), None, 200, np.random.default_rng(0))
    return CheckResult("finite-horizon sampler on constant reward (H=200)", total, 200.0, total == 200.0)


def check_buffer_fifo() -> CheckResult:
    buf = ReplayBuffer(capacity=50, dim=2)
    for i in range(200):
        buf.add([float(i), -float(i)], float(i), i)
    _, js, _ = buf.arrays()
    ok = len(buf) == 50 and np.array_equal(js, np.arange(150, 200, dtype=float))
    return CheckResult("replay buffer keeps the last B=50 of 200 samples", float(len(buf)), 50.0, bool(ok))


def check_asymmetric_agrees(n: int = 100_000, mu: float = 0.1) -> CheckResult:
    rng = np.random.default_rng(3)
    theta = np.array([0.6, -0.8])
    u = rng.standard_normal((n, 2))
    jp = np.sum((theta + mu * u) ** 2, axis=1)[:, None]
    jm = np.sum((theta - mu * u) ** 2, axis=1)[:, None]
    j0 = float(theta @ theta)
    sym = zo.two_point_estimate(jp, jm, mu, u)
    asym = zo.two_point_estimate(jp, j0, mu, u, symmetric=False)
    diff = sym - asym
    z = float(np.max(np.abs(diff.mean(axis=0)) / (diff.std(axis=0, ddof=1) / np.sqrt(n))))
    return CheckResult("symmetric vs one-sided estimate agree in mean (|z| max)", z, 3.0, z <= 3.0)


def run_checks(estimator: Callable | None = None) -> list[CheckResult]:
    return [
        check_two_point_unbiased(1, estimator),
        check_two_point_unbiased(5, estimator),
        check_asymmetric_agrees(),
        check_geometric_constant_chain(),
        check_geometric_mdp(),
        check_finite_horizon_constant(),
        check_gradient(),
        check_buffer_fifo(),
    ]
