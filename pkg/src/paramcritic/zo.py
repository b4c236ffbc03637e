"""Gaussian-smoothing zeroth-order gradient estimates and the actor step."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class PerturbationPair:
    u: np.ndarray
    mu: float
    theta_plus: np.ndarray
    theta_minus: np.ndarray


def draw_perturbation(p: int, rng: np.random.Generator) -> np.ndarray:
    if p < 1:
        raise ValueError(f"dimension must be >= 1, got {p}")
    return rng.standard_normal(p)


def perturb(theta, u, mu: float) -> PerturbationPair:
    """Evaluation points ``theta +/- mu * u``."""
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    theta = np.asarray(theta, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    if theta.shape != u.shape:
        raise ValueError(f"theta shape {theta.shape} != u shape {u.shape}")
    return PerturbationPair(u, mu, theta + mu * u, theta - mu * u)


def two_point_estimate(j_plus: float, j_minus: float, mu: float, u, symmetric: bool = True) -> np.ndarray:
    """Two-point estimate of the gradient of the mu-smoothed objective.

    Symmetric (default): ``(J(theta + mu u) - J(theta - mu u)) / (2 mu) * u``.
    With ``symmetric=False`` the second value is read as ``J(theta)`` and the
    forward difference ``(J(theta + mu u) - J(theta)) / mu * u`` is returned.
    """
    if mu <= 0:
        raise ValueError(f"mu must be positive, got {mu}")
    denom = 2.0 * mu if symmetric else mu
    return ((j_plus - j_minus) / denom) * np.asarray(u, dtype=np.float64)


def actor_update(theta, estimate, eta: float, direction: str = "ascend") -> np.ndarray:
    if eta <= 0:
        raise ValueError(f"eta must be positive, got {eta}")
    theta = np.asarray(theta, dtype=np.float64)
    estimate = np.asarray(estimate, dtype=np.float64)
    if theta.shape != estimate.shape:
        raise ValueError(f"theta shape {theta.shape} != estimate shape {estimate.shape}")
    if direction == "ascend":
        return theta + eta * estimate
    if direction == "descend":
        return theta - eta * estimate
    raise ValueError(f"direction must be 'ascend' or 'descend', got {direction!r}")
