import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from edgeoffload.errors import ConfigError, ConstraintError, LifecycleError
from edgeoffload.sim import EnvConfig, MECEnv, queue_delay, remaining_time, transmission_rate

from . import oracles


def random_action(rng, k):
    return np.concatenate([rng.dirichlet(np.ones(k)), rng.uniform(0, 1, k)])


def test_observation_length():
    env = MECEnv(EnvConfig(n_servers=5))
    assert env.reset(0).shape == (23,)


def test_empty_system_observation(env):
    obs = env.observe()
    k = env.n_servers
    per_server = obs[: 3 * k].reshape(k, 3)
    assert np.all(per_server[:, 1] == 0) and np.all(per_server[:, 2] == 0)
    assert np.all(np.isfinite(obs))


def test_rate_entries_match_channel(env):
    k = env.n_servers
    obs = env.observe()
    u = env.task.user_id
    for j in range(k):
        ch = env.channel(u, j)
        expect = oracles.rate(ch.bandwidth_hz, ch.tx_power_w, ch.rayleigh_gain, ch.path_loss, ch.noise_power_w)
        assert obs[3 * k + j] == pytest.approx(expect / env.rate_max, rel=1e-12)
        assert obs[3 * k + j] == transmission_rate(ch) / env.rate_max


def test_reset_determinism(small_cfg):
    a, b = MECEnv(small_cfg), MECEnv(small_cfg)
    assert np.array_equal(a.reset(5), b.reset(5))
    assert not np.array_equal(a.reset(5), a.reset(6))


def test_different_seeds_give_different_task_streams(small_cfg):
    env = MECEnv(small_cfg)
    env.reset(1)
    t1 = env.task
    env.reset(2)
    assert (env.task.data_bits, env.task.cpu_cycles) != (t1.data_bits, t1.cpu_cycles)


def test_step_after_done_and_before_reset(small_cfg, rng):
    env = MECEnv(small_cfg)
    with pytest.raises(LifecycleError):
        env.step(random_action(rng, 3))
    env.reset(0)
    while not env.done:
        env.step(random_action(rng, 3))
    with pytest.raises(LifecycleError):
        env.step(random_action(rng, 3))
    env.reset(0)
    assert env.completed_count == 0 and env.expired_count == 0


def test_constraint_rejected(env):
    with pytest.raises(ConstraintError):
        env.step(np.array([0.5, 0.2, 0.2, 1, 1, 1]))


def test_single_server_oracle():
    cfg = EnvConfig(n_servers=1, n_users=3, seed=4)
    env = MECEnv(cfg)
    for seed in range(20):
        env.reset(seed)
        t = env.task
        rate = env.rates[t.user_id, 0]
        f = env.servers[0].f_max_hz
        delay, energy = oracles.single_server_whole_task(t.data_bits, t.cpu_cycles, rate, f, cfg.tx_power_w)
        out = env.step(np.array([1.0, 1.0]))
        assert out.max_delay_s == pytest.approx(delay, rel=1e-12)
        assert out.energy_j == pytest.approx(energy, rel=1e-12)
        flag = int(delay <= t.deadline_s)
        assert out.lambda_flag == flag
        expect = oracles.reward(flag, energy, delay, cfg.alpha, cfg.w1, cfg.w2, cfg.w3, cfg.incentive_C)
        assert out.reward == pytest.approx(expect, rel=1e-12)


def test_overload_terminates():
    cfg = EnvConfig(n_servers=2, n_users=2, overload_queue_delay_s=0.05, max_steps=10_000, slot_duration_s=1e-4)
    env = MECEnv(cfg)
    env.reset(0)
    steps = 0
    out = None
    while not env.done:
        # everything to the slowest setting on server 0
        out = env.step(np.array([1.0, 0.0, 0.0, 0.0]))
        steps += 1
    assert out.done and out.overloaded and not out.truncated
    assert env.backlog()[0] > cfg.overload_queue_delay_s
    assert steps < cfg.max_steps


def test_episode_cap(small_cfg, rng):
    env = MECEnv(EnvConfig(n_servers=3, n_users=4, max_steps=7, overload_queue_delay_s=100.0))
    env.reset(0)
    outs = [env.step(random_action(rng, 3)) for _ in range(7)]
    assert outs[-1].done and outs[-1].truncated and not any(o.done for o in outs[:-1])


def test_reward_reconstructs_from_parts(env, rng):
    cfg = env.cfg
    while not env.done:
        out = env.step(random_action(rng, env.n_servers))
        flag, e, d = out.reward_parts
        r = oracles.reward(flag, max(e, cfg.log_floor), max(d, cfg.log_floor), cfg.alpha, cfg.w1, cfg.w2, cfg.w3, cfg.incentive_C)
        assert abs(out.reward - r) <= 1e-9


def test_queue_conservation_and_energy(env, rng):
    while not env.done:
        before = env.subtasks_created
        out = env.step(random_action(rng, env.n_servers))
        finished = env.subtasks_finished_on_time + env.subtasks_finished_late
        assert finished + env.subtasks_in_system() == env.subtasks_created
        assert env.subtasks_created - before == out.n_subtasks
        assert out.energy_j > 0
        assert out.completed_count + out.expired_count == env.step_count


def test_cached_backlog_matches_queue_sums(env, rng):
    for _ in range(40):
        if env.done:
            break
        env.step(random_action(rng, env.n_servers))
        for j, s in enumerate(env.servers):
            assert env.backlog()[j] == pytest.approx(remaining_time(s) + queue_delay(s), rel=1e-9, abs=1e-15)
            if s.in_service is not None:
                assert s.remaining_cycles <= s.in_service.cpu_cycles


def test_preview_does_not_mutate(env, rng):
    obs = env.observe()
    a = random_action(rng, env.n_servers)
    r1 = env.preview(a).reward
    assert np.array_equal(env.observe(), obs)
    assert env.step(a).reward == r1


def test_clone_is_independent(env, rng):
    c = env.clone()
    a = random_action(rng, env.n_servers)
    expected = c.preview(a).reward
    env.step(a)
    assert c.step_count == 0
    assert c.step(a).reward == expected


@given(st.integers(0, 2**32), st.integers(0, 2**32))
def test_determinism_of_outcome_sequence(seed, action_seed):
    cfg = EnvConfig(n_servers=3, n_users=5, max_steps=25, overload_queue_delay_s=0.5)
    traces = []
    for _ in range(2):
        env = MECEnv(cfg)
        env.reset(seed)
        r = np.random.default_rng(action_seed)
        tr = []
        while not env.done:
            o = env.step(random_action(r, 3))
            tr.append((o.reward, o.energy_j, o.max_delay_s, o.next_observation.tobytes(), o.done))
        traces.append(tr)
    assert traces[0] == traces[1]


@given(st.integers(0, 1000))
def test_accepted_actions_are_simplex(seed):
    r = np.random.default_rng(seed)
    a = random_action(r, 4)
    assert abs(a[:4].sum() - 1) <= 1e-9 and np.all((a >= 0) & (a <= 1))


def test_default_task_ranges():
    cfg = EnvConfig(n_servers=5)
    env = MECEnv(cfg)
    assert np.all((env.f_max >= 2e9) & (env.f_max <= 8e9))
    env.reset(0)
    r = np.random.default_rng(0)
    for _ in range(200):
        t = env.task
        assert 2e5 <= t.data_bits <= 2e7 and 8e6 <= t.cpu_cycles <= 1e7
        env.step(random_action(r, 5))
        if env.done:
            env.reset(1)


@pytest.mark.parametrize(
    "kw",
    [dict(n_servers=0), dict(data_bits_min=3e7), dict(alpha=1.5), dict(snr_db=math.nan), dict(freq_floor=0.0), dict(max_steps=0)],
)
def test_invalid_config(kw):
    with pytest.raises(ConfigError):
        EnvConfig(**kw)


def test_config_dict_round_trip():
    cfg = EnvConfig(n_servers=7, snr_db=90.0)
    assert EnvConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError):
        EnvConfig.from_dict({"bogus": 1})
