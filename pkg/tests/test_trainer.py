import math

import numpy as np
import pytest

from paramcritic import nn
from paramcritic.env import CartPole, SyntheticObjective
from paramcritic.sampler import NetworkPolicy
from paramcritic.trainer import (
    STREAMS,
    DivergenceError,
    TrainConfig,
    evaluate_policy,
    final_log_theta_norm_sq,
    make_streams,
    run_baseline,
    run_parameter_critic,
)

SMALL_CARTPOLE = dict(problem="cartpole", sampler_mode="finite", iterations=15, eta=5e-5, mu=0.5, alpha=1e-5,
                      batch_size=4, buffer_capacity=10, direction="ascend", actor_hidden=(8,),
                      critic_hidden=(16, 8), critic_activation="relu", eval_interval=5, eval_episodes=2)


def toy(**kw):
    return TrainConfig(**{"iterations": 200, **kw})


class TestStreams:
    def test_named_and_reproducible(self):
        a, b = make_streams(3, 1), make_streams(3, 1)
        assert set(a) == set(STREAMS)
        for name in STREAMS:
            assert a[name].random() == b[name].random()

    def test_distinct(self):
        s = make_streams(0)
        draws = {name: s[name].random() for name in STREAMS}
        assert len(set(draws.values())) == len(STREAMS)
        assert make_streams(0, 1)["perturbation"].random() != make_streams(0, 0)["perturbation"].random()


class TestConfig:
    @pytest.mark.parametrize("bad", [dict(eta=0.0), dict(mu=-1.0), dict(alpha=-0.1), dict(iterations=0),
                                     dict(direction="up"), dict(sampler_mode="finite"),
                                     dict(buffer_capacity=0), dict(critic_bias_init="normal")])
    def test_rejects(self, bad):
        with pytest.raises(ValueError):
            TrainConfig(**bad)

    def test_replace(self):
        cfg = TrainConfig().replace(eta=0.2)
        assert cfg.eta == 0.2 and cfg.mu == TrainConfig().mu


class TestBaseline:
    def test_noiseless_descent(self):
        records = run_baseline(toy(iterations=500))
        first = next(r.iteration for r in records if r.theta_norm_sq < 1e-4)
        assert first <= 500

    def test_records(self):
        records = run_baseline(toy(iterations=20, noise_sigma=0.1))
        assert [r.iteration for r in records] == list(range(1, 21))
        for r in records:
            assert r.f_plus is None and r.f_minus is None and r.critic_mse is None
            assert r.buffer_size is None and r.eval_return is None

    def test_first_step_by_hand(self):
        cfg = toy(iterations=1)
        rec = run_baseline(cfg)[0]
        u = make_streams(cfg.seed, cfg.trial)["perturbation"].standard_normal(1)[0]
        # noiseless J = theta^2: (J+ - J-) / (2 mu) * u = 2 theta u^2
        assert rec.j_plus == pytest.approx((1 + cfg.mu * u) ** 2, rel=1e-14)
        assert rec.theta_norm_sq == pytest.approx((1 - cfg.eta * 2 * u * u) ** 2, rel=1e-9)

    def test_divergence_raises(self):
        with pytest.raises(DivergenceError), np.errstate(over="ignore", invalid="ignore"):
            # theta^2 overflows, so inf - inf poisons the estimate
            run_baseline(toy(theta0=(1e200,), iterations=5))

    def test_final_log(self):
        records = run_baseline(toy(iterations=10))
        assert final_log_theta_norm_sq(records) == math.log(records[-1].theta_norm_sq)


class TestParameterCritic:
    def test_reproducible(self):
        cfg = toy(noise_sigma=1.0, iterations=100)
        a, b = run_parameter_critic(cfg), run_parameter_critic(cfg)
        assert [r.key() for r in a] == [r.key() for r in b]

    def test_seed_matters(self):
        cfg = toy(noise_sigma=1.0, iterations=20)
        a = run_parameter_critic(cfg)[-1]
        b = run_parameter_critic(cfg.replace(seed=1))[-1]
        assert a.theta_norm_sq != b.theta_norm_sq

    def test_bypass_reproduces_baseline(self):
        cfg = toy(noise_sigma=0.1, iterations=100)
        base = run_baseline(cfg)
        bypass = run_parameter_critic(cfg.replace(bypass_critic=True))
        assert [(r.j_plus, r.j_minus, r.theta_norm_sq) for r in base] == \
               [(r.j_plus, r.j_minus, r.theta_norm_sq) for r in bypass]

    @pytest.mark.parametrize("capacity", [None, 7, 50])
    def test_buffer_growth(self, capacity):
        records = run_parameter_critic(toy(iterations=40, buffer_capacity=capacity))
        for r in records:
            expected = 2 * r.iteration if capacity is None else min(2 * r.iteration, capacity)
            assert r.buffer_size == expected

    def test_frozen_zero_critic_keeps_actor(self):
        cfg = toy(alpha=0.0, iterations=50, noise_sigma=1.0)
        template = nn.init_network([1, 256, 1], "sigmoid2", seed=0)
        zero = template.with_params(np.zeros(template.n_params))
        records = run_parameter_critic(cfg, critic_net=zero)
        assert all(r.theta_norm_sq == 1.0 for r in records)
        assert all(r.f_plus == 0.0 and r.f_minus == 0.0 for r in records)

    def test_supplied_critic_is_copied(self):
        template = nn.init_network([1, 256, 1], "sigmoid2", seed=0)
        before = template.params.copy()
        run_parameter_critic(toy(iterations=5), critic_net=template)
        np.testing.assert_array_equal(template.params, before)

    def test_mse_interval(self):
        records = run_parameter_critic(toy(iterations=10, mse_interval=5))
        assert [r.critic_mse is not None for r in records] == [i % 5 == 0 for i in range(1, 11)]
        assert all(r.f_plus is not None for r in records)

    def test_uses_critic_predictions(self):
        # the actor step must follow the critic difference, not the raw samples
        cfg = toy(iterations=1, noise_sigma=1.0)
        rec = run_parameter_critic(cfg)[0]
        u = make_streams(cfg.seed, cfg.trial)["perturbation"].standard_normal(1)[0]
        theta = 1.0 - cfg.eta * (rec.f_plus - rec.f_minus) / (2 * cfg.mu) * u
        assert rec.theta_norm_sq == pytest.approx(theta**2, rel=1e-12)

    def test_hooks(self):
        seen, ckpts = [], []
        run_parameter_critic(toy(iterations=10), on_record=seen.append,
                             on_checkpoint=lambda t, th, c: ckpts.append((t, c is not None)),
                             checkpoint_interval=4)
        assert [r.iteration for r in seen] == list(range(1, 11))
        assert ckpts == [(4, True), (8, True)]

    def test_cartpole_smoke(self):
        cfg = TrainConfig(**SMALL_CARTPOLE)
        records = run_parameter_critic(cfg)
        assert len(records) == 15
        assert [r.eval_return is not None for r in records] == [i % 5 == 0 for i in range(1, 16)]
        assert all(-1.0 <= r.j_plus <= 200.0 for r in records)
        assert records[-1].buffer_size == 10
        again = run_parameter_critic(cfg)
        assert [r.key() for r in records] == [r.key() for r in again]


class TestEvaluatePolicy:
    def test_identical_seeds(self):
        net = nn.init_network([4, 8, 1], "relu", "tanh", seed=0)
        policy = NetworkPolicy(net, 10.0)
        one = evaluate_policy(CartPole(), net.params, 1, np.random.default_rng(3), policy)

        # five episodes from the same start state average to the single return
        env = CartPole()
        start = env.reset(np.random.default_rng(3)).copy()
        env.reset = lambda rng: start.copy()
        assert evaluate_policy(env, net.params, 5, np.random.default_rng(0), policy) == one

    def test_bounds(self):
        net = nn.init_network([4, 8, 1], "relu", "tanh", seed=0)
        value = evaluate_policy(CartPole(), net.params, 20, np.random.default_rng(0), NetworkPolicy(net, 10.0))
        assert -1.0 <= value <= 200.0

    def test_episodes(self):
        with pytest.raises(ValueError):
            evaluate_policy(SyntheticObjective(), np.zeros(1), 0, np.random.default_rng(0))
