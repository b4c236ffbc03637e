"""Compiled inner loop for cartpole rollouts under an MLP policy.

Mirrors ``env.cartpole_step`` and ``nn.forward`` exactly in structure; the
pure-Python path remains the reference implementation.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

ACTIVATION_CODES = {"sigmoid2": 0, "relu": 1, "tanh": 2, "identity": 3}


@njit(cache=True)
def _act(code, z):
    if code == 0:
        return 0.5 * (1.0 + math.tanh(z))
    if code == 1:
        return z if z > 0.0 else 0.0
    if code == 2:
        return math.tanh(z)
    return z


@njit(cache=True)
def _policy(params, sizes, codes, obs, work_a, work_b, scale):
    n_in = sizes[0]
    for i in range(n_in):
        work_a[i] = obs[i]
    pos = 0
    for layer in range(sizes.size - 1):
        fan_in = sizes[layer]
        fan_out = sizes[layer + 1]
        bpos = pos + fan_in * fan_out
        for j in range(fan_out):
            z = 0.0
            for i in range(fan_in):
                z += work_a[i] * params[pos + i * fan_out + j]
            work_b[j] = _act(codes[layer], z + params[bpos + j])
        for j in range(fan_out):
            work_a[j] = work_b[j]
        pos = bpos + fan_out
    return scale * work_a[0]


@njit(cache=True)
def cartpole_mlp_rollout(params, sizes, codes, scale, state0, horizon,
                         gravity, masscart, masspole, length, tau, x_threshold, theta_threshold):
    """Summed reward of one episode of at most ``horizon`` steps."""
    width = 0
    for s in sizes:
        if s > width:
            width = s
    work_a = np.empty(width)
    work_b = np.empty(width)
    obs = np.empty(4)
    x, x_dot, theta, theta_dot = state0[0], state0[1], state0[2], state0[3]
    total_mass = masscart + masspole
    polemass_length = masspole * length
    total = 0.0
    for _ in range(horizon):
        obs[0] = x
        obs[1] = x_dot
        obs[2] = theta
        obs[3] = theta_dot
        force = _policy(params, sizes, codes, obs, work_a, work_b, scale)
        costheta = math.cos(theta)
        sintheta = math.sin(theta)
        temp = (force + polemass_length * theta_dot * theta_dot * sintheta) / total_mass
        thetaacc = (gravity * sintheta - costheta * temp) / (
            length * (4.0 / 3.0 - masspole * costheta * costheta / total_mass))
        xacc = temp - polemass_length * thetaacc * costheta / total_mass
        x = x + tau * x_dot
        x_dot = x_dot + tau * xacc
        theta = theta + tau * theta_dot
        theta_dot = theta_dot + tau * thetaacc
        if abs(x) > x_threshold or abs(theta) > theta_threshold:
            total -= 1.0
            break
        total += 1.0
    return total
