import json
import math

import numpy as np
import pytest

import linqrl


def small_env(seed=3):
    return linqrl.generate("linear_mdp", H=2, S=3, A=2, d=2, gap_min=0.3, seed=seed)


def test_generate_certifies_environment():
    env = small_env()
    assert env.kind == "linear_mdp"
    assert (env.horizon, env.num_states, env.num_actions, env.dim) == (2, 3, 2, 2)
    assert env.certified_gap >= 0.3
    assert env.fit_residual <= 1e-9
    assert env.transition.shape == (2, 3, 2, 3)
    np.testing.assert_allclose(env.transition.sum(axis=-1), 1.0, atol=1e-12)


def test_tabular_dimension_defaults():
    env = linqrl.generate("tabular_onehot", H=2, S=2, A=2, gap_min=0.05, seed=1)
    assert env.dim == 4


def test_dp_solve_matches_bellman_backup():
    env = small_env()
    dp = linqrl.dp_solve(env)
    q, v = dp["q_star"], dp["v_star"]
    r, p = env.reward, env.transition
    np.testing.assert_allclose(q[1], r[1], atol=1e-12)
    np.testing.assert_allclose(q[0], r[0] + p[0] @ v[1], atol=1e-12)
    np.testing.assert_allclose(v, q.max(axis=-1), atol=0)
    assert dp["gap_global"] == pytest.approx(env.certified_gap)


def test_json_round_trip(tmp_path):
    env = small_env(5)
    path = tmp_path / "env.json"
    linqrl.save(env, str(path))
    back = linqrl.load(str(path))
    assert back.to_json() == env.to_json()
    assert linqrl.from_json(env.to_json()).certified_gap == env.certified_gap


def test_oracle_run_has_zero_regret():
    log = linqrl.run_experiment(small_env(), agent="oracle", episodes=50)
    assert log.total_episode_regret == 0.0
    assert log.paths == 50


def test_linq_run_summary_and_reproducibility():
    env = small_env()
    a = linqrl.run_experiment(env, agent="linq", episodes=5, c_beta=2.0, seed=7, record_series=True)
    b = linqrl.run_experiment(env, agent="linq", episodes=5, c_beta=2.0, seed=7, record_series=True)
    assert a.summary_json() == b.summary_json()
    assert a.series_csv() == b.series_csv()
    assert a.deterministic_monitors_pass()
    assert a.index_set_sizes[0] == a.episodes and a.index_set_sizes[-1] == a.paths
    summary = linqrl.summary(a)
    assert summary["revisit_bound"]["pass"] is True
    assert json.loads(a.summary_json())["episodes"] == 5


def test_compute_beta():
    assert linqrl.compute_beta(2, 3, 10.0, 0.1, 8.0) == pytest.approx(8 * math.sqrt(162 * math.log(300)))
    with pytest.raises(ValueError):
        linqrl.compute_beta(1, 1, 0.05, 0.1, 8.0)


def test_errors_map_to_python_exceptions():
    with pytest.raises(linqrl.GenerationError) as info:
        linqrl.generate("tabular_onehot", H=2, S=2, A=2, gap_min=0.99, seed=1, max_rejections=3)
    assert 0 < info.value.best_gap < 0.99
    with pytest.raises(linqrl.UsageError):
        linqrl.run_experiment(small_env(), episodes=0)
    with pytest.raises(linqrl.ParseError):
        linqrl.from_json("{")
