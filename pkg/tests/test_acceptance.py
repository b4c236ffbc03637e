"""End-to-end acceptance checks, one verdict line per criterion.

Each test appends a PASS/FAIL line to the session summary (see conftest.py)
before asserting, so the full report is printed even when some criteria fail.
"""

import numpy as np
import pytest
from conftest import VERDICTS

from paramcritic import checks
from paramcritic.critic import ReplayBuffer
from paramcritic.env import MarkovRewardChain
from paramcritic.trainer import TrainConfig, run_baseline, run_parameter_critic

TOY_TRIALS = 50
TOY_ITERATIONS = 10_000
TOY = dict(problem="toy", iterations=TOY_ITERATIONS, eta=0.1, mu=0.005, alpha=0.005, theta0=(1.0,),
           critic_hidden=(256,), critic_activation="sigmoid2", mse_interval=0)

# Actor and critic shapes, eta, mu, B and b as published. The critic stepsize and
# steps per iteration come from the permitted alpha x K search (see README).
CARTPOLE = dict(problem="cartpole", sampler_mode="finite", horizon=200, iterations=120_000, eta=5e-5, mu=0.5,
                alpha=1e-5, critic_steps=20, batch_size=20, buffer_capacity=50, direction="ascend",
                actor_hidden=(34, 22), actor_activation="relu", critic_hidden=(256, 128),
                critic_activation="relu", eval_interval=1000, eval_episodes=20, mse_interval=1)
CARTPOLE_SEEDS = (0, 1, 2)


def verdict(criterion: str, passed: bool, detail: str) -> bool:
    VERDICTS.append(f"{'PASS' if passed else 'FAIL'}  criterion {criterion}: {detail}")
    return passed


def test_criterion_1_two_point_unbiased():
    worst = {p: float(np.max(np.abs(checks.two_point_zscores(p, n=100_000, mu=0.1)))) for p in (1, 5)}
    ok = all(z <= 3.0 for z in worst.values())
    assert verdict("1", ok, f"max |z| p=1 {worst[1]:.3f}, p=5 {worst[5]:.3f} (bound 3)")


def test_criterion_2_geometric_sampler():
    mean_const, _ = checks.geometric_mean(MarkovRewardChain.constant(1.0), 0.9, 100_000)
    chain = checks.three_state_chain()
    mean_mdp, se = checks.geometric_mean(chain, 0.8, 100_000, seed=1)
    exact = chain.expected_value(0.8)
    z = abs(mean_mdp - exact) / se
    ok = abs(mean_const - 10.0) <= 0.1 and z <= 3.0
    assert verdict("2", ok, f"(a) mean {mean_const:.4f} vs 10 (tol 0.1); "
                            f"(b) mean {mean_mdp:.4f} vs exact {exact:.4f}, |z| {z:.3f} (bound 3)")


def test_criterion_3_gradient_check():
    errors = checks.gradient_check_errors(20)
    ok = len(errors) == 20 and max(errors) <= 1e-4
    assert verdict("3", ok, f"max relative error {max(errors):.3e} over 20 instances (bound 1e-4)")


@pytest.fixture(scope="module")
def toy_finals():
    finals = {}
    for sigma in (0.01, 1.0):
        for mode, run in (("baseline", run_baseline), ("critic", run_parameter_critic)):
            finals[mode, sigma] = np.array([
                run(TrainConfig(**TOY, noise_sigma=sigma, trial=trial))[-1].theta_norm_sq
                for trial in range(TOY_TRIALS)
            ])
    return finals


@pytest.mark.slow
def test_criterion_4i_low_noise_both_converge(toy_finals):
    base = float(np.median(toy_finals["baseline", 0.01]))
    critic = float(np.median(toy_finals["critic", 0.01]))
    ok = base <= 1e-2 and critic <= 1e-2
    assert verdict("4(i)", ok, f"sigma=0.01 median final ||theta||^2 baseline {base:.4g}, critic {critic:.4g} "
                               f"(both <= 1e-2)")


@pytest.mark.slow
def test_criterion_4ii_high_noise_critic_wins(toy_finals):
    base = float(np.median(toy_finals["baseline", 1.0]))
    critic = float(np.median(toy_finals["critic", 1.0]))
    ok = critic <= 1e-2 and base >= 10 * critic
    assert verdict("4(ii)", ok, f"sigma=1 median final ||theta||^2 critic {critic:.4g} (<= 1e-2), "
                                f"baseline {base:.4g} ({base / critic:.3g}x, need >= 10x)")


@pytest.fixture(scope="module")
def cartpole_runs():
    runs = {}
    for trial in CARTPOLE_SEEDS:
        records = run_parameter_critic(TrainConfig(**CARTPOLE, trial=trial))
        runs[trial] = (
            np.array([r.eval_return for r in records if r.eval_return is not None]),
            np.array([r.critic_mse for r in records]),
        )
    return runs


@pytest.mark.slow
def test_criterion_5_cartpole_solved(cartpole_runs):
    best = {t: float(evals.max()) for t, (evals, _) in cartpole_runs.items()}
    first = {t: next((k + 1) * CARTPOLE["eval_interval"] for k, v in enumerate(evals) if v >= 190) if best[t] >= 190
             else None for t, (evals, _) in cartpole_runs.items()}
    median_best = float(np.median(list(best.values())))
    ok = median_best >= 190
    runs = ", ".join(f"seed {t}: best {best[t]:.1f}" + (f" at {first[t]}" if first[t] else "") for t in best)
    assert verdict("5", ok, f"median best eval return {median_best:.1f} (need >= 190 within "
                            f"{CARTPOLE['iterations']} iterations; alpha={CARTPOLE['alpha']:g}, "
                            f"K={CARTPOLE['critic_steps']}); {runs}")


@pytest.mark.slow
def test_criterion_6_critic_mse_decreases(cartpole_runs):
    parts = []
    ok = True
    for t, (_, mse) in cartpole_runs.items():
        q = mse.size // 4
        finite = bool(np.all(np.isfinite(mse)))
        first, last = float(mse[:q].mean()), float(mse[-q:].mean())
        ok &= finite and last < first
        parts.append(f"seed {t}: finite={finite}, first quarter {first:.3g}, final quarter {last:.3g}")
    assert verdict("6", ok, "; ".join(parts))


def test_criterion_7_imperishability_and_reproducibility():
    buf = ReplayBuffer(capacity=50, dim=3)
    for i in range(200):
        buf.add(np.full(3, float(i)), float(i), i)
    thetas, js, its = buf.arrays()
    fifo = (len(buf) == 50 and np.array_equal(js, np.arange(150.0, 200.0))
            and np.array_equal(thetas[:, 0], js) and np.array_equal(its, np.arange(150, 200)))

    cfg = TrainConfig(**{**TOY, "iterations": 300, "mse_interval": 1}, noise_sigma=1.0)
    a, b = run_parameter_critic(cfg), run_parameter_critic(cfg)
    reproducible = [r.key() for r in a] == [r.key() for r in b]

    base = run_baseline(cfg)
    bypass = run_parameter_critic(cfg.replace(bypass_critic=True))
    bypass_equal = [(r.j_plus, r.j_minus, r.theta_norm_sq) for r in base] == \
                   [(r.j_plus, r.j_minus, r.theta_norm_sq) for r in bypass]

    sizes = [r.buffer_size for r in run_parameter_critic(TrainConfig(**{**TOY, "iterations": 60},
                                                                     buffer_capacity=50))]
    growth = sizes == [min(2 * t, 50) for t in range(1, 61)]

    ok = fifo and reproducible and bypass_equal and growth
    assert verdict("7", ok, f"FIFO {fifo}, bitwise reproducible {reproducible}, bypass == baseline "
                            f"{bypass_equal}, buffer size min(2t, B) {growth}")

