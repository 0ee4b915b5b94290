import math
import sys
import textwrap

import numpy as np
import pytest

from hporace.engine import OptimizerSpec, run
from hporace.exceptions import ConfigError, ProtocolError
from hporace.objectives import (
    Branin2d,
    ExternalObjective,
    MockSer,
    ObjectiveRequest,
    Quadratic1d,
    branin,
    default_space_for,
    mock_ser_score,
    objective_factory,
)
from hporace.space import ParamDef, SearchSpace, grid, table2_space

RNG = lambda seed=0: np.random.default_rng(seed)

PLANTED = {"lr": 2.59e-5, "epochs": 8, "unfreeze": 4, "maxlen": 80000}


def test_mock_ser_peaks_near_reported_best_config():
    score = mock_ser_score(**PLANTED)
    assert score == pytest.approx(0.97, abs=1e-3)
    expected = 0.97 - 0.25 * (math.log10(2.59e-5) - math.log10(2.6e-5)) ** 2
    assert score == pytest.approx(expected, abs=1e-12)


def test_mock_ser_penalties_add_up():
    base = mock_ser_score(2.6e-5, 8, 4, 80000)
    assert mock_ser_score(2.6e-5, 6, 4, 80000) == pytest.approx(base - 0.02)
    assert mock_ser_score(2.6e-5, 8, 2, 80000) == pytest.approx(base - 0.01)
    assert mock_ser_score(2.6e-5, 8, 4, 48000) == pytest.approx(base - 0.02)
    assert mock_ser_score(2.6e-5, 8, 4, 64000) == pytest.approx(base)  # no penalty at 64k


def test_mock_ser_scores_clamped_to_unit_interval():
    assert mock_ser_score(1e-6, 1, 0, 32000) >= 0.0
    obj = MockSer(noise_sd=5.0)
    request = ObjectiveRequest(1, PLANTED)
    for seed in range(50):
        response = obj.evaluate(request, RNG(seed))
        assert 0.0 <= response.score <= 1.0


def test_quadratic_vertex_is_planted_maximum():
    obj = Quadratic1d(vertex=0.7)
    response = obj.evaluate(ObjectiveRequest(1, {"x": 0.7}), RNG())
    assert response.score == 0.0
    assert obj.evaluate(ObjectiveRequest(1, {"x": 0.2}), RNG()).score < 0.0


def test_branin_known_global_minimum():
    assert branin(math.pi, 2.275) == pytest.approx(0.397887, abs=1e-6)

    # local refinement oracle around the analytic optimum
    from scipy.optimize import minimize

    res = minimize(lambda v: branin(v[0], v[1]), x0=[3.0, 2.0])
    assert res.fun == pytest.approx(0.397887, abs=1e-5)
    assert branin(math.pi, 2.275) <= res.fun + 1e-6

    obj = Branin2d()
    response = obj.evaluate(ObjectiveRequest(1, {"x1": math.pi, "x2": 2.275}), RNG())
    assert response.score == pytest.approx(-0.397887, abs=1e-6)


def test_synthetic_objectives_are_pure_given_seed():
    obj = MockSer(noise_sd=0.3)
    request = ObjectiveRequest(1, PLANTED)
    a = obj.evaluate(request, RNG(123))
    b = obj.evaluate(request, RNG(123))
    assert a == b


def test_invalid_config_yields_failed_response():
    obj = MockSer()
    response = obj.evaluate(ObjectiveRequest(1, {"lr": 2.59e-5, "epochs": 99, "unfreeze": 4, "maxlen": 80000}), RNG())
    assert response.status == "failed"
    assert response.score is None


def test_mock_ser_grid_argmax_is_planted_cell():
    space = table2_space()
    configs = grid(space, [5, 10, 6, 6])
    assert len(configs) == 1800
    scores = np.array([mock_ser_score(**space.to_params(c)) for c in configs])
    top = scores.max()
    winners = [space.to_params(configs[i]) for i in np.flatnonzero(scores >= top - 1e-12)]
    # The lr axis midpoint closest to the optimum, exact epochs/unfreeze; the
    # maxlen>=64k cells tie because long inputs carry no penalty.
    planted_cell = {"lr": 10**-4.5, "epochs": 8, "unfreeze": 4}
    for w in winners:
        assert w["lr"] == pytest.approx(planted_cell["lr"], rel=1e-12)
        assert w["epochs"] == 8 and w["unfreeze"] == 4
        assert w["maxlen"] >= 64000
    assert any(w["maxlen"] == 80000 for w in winners)


def test_duration_model_constant_and_callable():
    assert MockSer(duration_s=90.0).evaluate(ObjectiveRequest(1, PLANTED), RNG()).duration_s == 90.0
    obj = MockSer(duration_s=lambda p: p["epochs"] * 10.0)
    assert obj.evaluate(ObjectiveRequest(1, PLANTED), RNG()).duration_s == 80.0


def test_objective_factory_checks_space_and_kind():
    with pytest.raises(ConfigError):
        objective_factory({"noise_sd": 0.1}, None)
    with pytest.raises(ConfigError):
        objective_factory({"kind": "mystery"}, None)
    with pytest.raises(ConfigError):
        objective_factory({"kind": "mock_ser", "bogus_option": 1}, None)
    wrong = SearchSpace((ParamDef("x", "uniform", lo=0.0, hi=1.0),))
    with pytest.raises(ConfigError):
        objective_factory({"kind": "mock_ser"}, wrong)
    factory = objective_factory({"kind": "mock_ser", "noise_sd": 0.05}, table2_space())
    assert factory() is not factory()  # fresh instance per run
    assert default_space_for({"kind": "mock_ser"}) == table2_space()


# -- external worker protocol -------------------------------------------------------


def stub_worker(tmp_path, body: str) -> list[str]:
    path = tmp_path / "stub_worker.py"
    path.write_text(
        textwrap.dedent(
            """\
            import json, sys, time

            hello = json.loads(sys.stdin.readline())
            assert hello["hello"]["protocol"] == 1
            print(json.dumps({"ready": True}), flush=True)
            for line in sys.stdin:
                req = json.loads(line)
            """
        )
        + textwrap.indent(textwrap.dedent(body), "    "),
        encoding="utf-8",
    )
    return [sys.executable, str(path)]


LR_SPACE = SearchSpace((ParamDef("lr", "log_uniform", lo=1e-6, hi=1e-3),))


def test_echo_worker_scores_recorded_verbatim(tmp_path):
    cmd = stub_worker(
        tmp_path,
        'print(json.dumps({"score": req["params"]["lr"] * 1e4, "duration_s": 2.0, "status": "ok"}), flush=True)',
    )
    objective = ExternalObjective(cmd, LR_SPACE)
    spec = OptimizerSpec(kind="random", budget=3, seed=1)
    result = run(spec, LR_SPACE, objective)
    for trial in result.history.trials:
        lr = LR_SPACE.to_params(trial.config)["lr"]
        assert trial.score == lr * 1e4
        assert trial.duration_s == 2.0


def test_sleeping_worker_times_out_and_next_trial_proceeds(tmp_path):
    cmd = stub_worker(
        tmp_path,
        """\
        if req["trial"] == 1:
            time.sleep(5.0)
        print(json.dumps({"score": 0.5, "duration_s": 1.0, "status": "ok"}), flush=True)
        """,
    )
    objective = ExternalObjective(cmd, LR_SPACE, deadline_s=0.5)
    spec = OptimizerSpec(kind="random", budget=2, seed=2, deadline_s=0.5)
    result = run(spec, LR_SPACE, objective)
    assert [t.status for t in result.history.trials] == ["timeout", "ok"]
    assert result.history.trials[1].score == 0.5


def test_invalid_line_then_exit_aborts_after_one_restart(tmp_path):
    cmd = stub_worker(
        tmp_path,
        """\
        print("this is not jsonl", flush=True)
        sys.exit(0)
        """,
    )
    objective = ExternalObjective(cmd, LR_SPACE)
    first = objective.evaluate(ObjectiveRequest(1, {"lr": 1e-4}))
    assert first.status == "failed"
    second = objective.evaluate(ObjectiveRequest(2, {"lr": 1e-4}))  # consumes the one restart
    assert second.status == "failed"
    with pytest.raises(ProtocolError):
        objective.evaluate(ObjectiveRequest(3, {"lr": 1e-4}))
    objective.close()


def test_worker_reported_failure_marks_trial_failed(tmp_path):
    cmd = stub_worker(
        tmp_path,
        'print(json.dumps({"status": "failed", "detail": "no data"}), flush=True)',
    )
    with ExternalObjective(cmd, LR_SPACE) as objective:
        response = objective.evaluate(ObjectiveRequest(1, {"lr": 1e-4}))
    assert response.status == "failed"
    assert "no data" in response.detail


def test_shipped_sleep_worker_observes_engine_timeout():
    cmd = [sys.executable, "-m", "hporace_worker", "--objective", "sleep", "--sleep", "5.0"]
    objective = ExternalObjective(cmd, LR_SPACE, deadline_s=0.5)
    with objective:
        response = objective.evaluate(ObjectiveRequest(1, {"lr": 1e-4}))
    assert response.status == "timeout"


def test_handshake_rejects_unready_worker(tmp_path):
    path = tmp_path / "bad_hello.py"
    path.write_text('print("{}", flush=True)\n', encoding="utf-8")
    objective = ExternalObjective([sys.executable, str(path)], LR_SPACE)
    with pytest.raises(ProtocolError):
        objective.start()
    objective.close()
