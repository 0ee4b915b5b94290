import json

import numpy as np
import pytest

from hporace.engine import OptimizerSpec, RunResult
from hporace.exceptions import MetricError
from hporace.metrics import (
    ConfusionCounts,
    bca,
    build_report,
    efficiency,
    render_text,
    threshold_times,
    time_to_best,
)
from hporace.space import Config, ParamDef, SearchSpace
from hporace.trials import History, Trial

SPACE = SearchSpace((ParamDef("x", "uniform", lo=0.0, hi=1.0),))


def make_history(scores_minutes, statuses=None):
    """History from (score, cumulative minutes) pairs."""
    history = History(SPACE)
    prev = 0.0
    for i, (score, minutes) in enumerate(scores_minutes, start=1):
        status = statuses[i - 1] if statuses else "ok"
        cumulative = minutes * 60.0
        history.record(
            Trial(
                index=i,
                config=Config((0.5,)),
                score=score if status == "ok" else None,
                duration_s=cumulative - prev,
                cumulative_s=cumulative,
                status=status,
            )
        )
        prev = cumulative
    return history


def make_result(name, scores_minutes, seed=0, repeat=0):
    spec = OptimizerSpec(kind="random", budget=len(scores_minutes), seed=seed, name=name)
    return RunResult(
        spec=spec, run_seed=seed, history=make_history(scores_minutes), repeat=repeat
    )


# -- balanced class accuracy -----------------------------------------------------


def oracle_bca(tp, fn):
    """Independent implementation: plain mean of per-class recalls."""
    recalls = [t / (t + f) for t, f in zip(tp, fn) if t + f > 0]
    return sum(recalls) / len(recalls)


def test_bca_perfect_classifier():
    assert bca(ConfusionCounts(tp=(5, 3, 9), fn=(0, 0, 0))) == 1.0


def test_bca_half_by_hand():
    assert bca(ConfusionCounts(tp=(10, 0), fn=(0, 7))) == 0.5


@pytest.mark.filterwarnings("ignore:classes without support")
def test_bca_matches_oracle_on_random_counts():
    rng = np.random.default_rng(0)
    for _ in range(200):
        c = int(rng.integers(2, 8))
        tp = tuple(int(v) for v in rng.integers(0, 50, size=c))
        fn = tuple(int(v) for v in rng.integers(0, 50, size=c))
        if all(t + f == 0 for t, f in zip(tp, fn)):
            continue
        counts = ConfusionCounts(tp=tp, fn=fn)
        assert bca(counts) == pytest.approx(oracle_bca(tp, fn), abs=1e-12)


def test_bca_invariant_under_relabeling():
    rng = np.random.default_rng(1)
    tp = (3, 9, 0, 12, 5, 4, 7)
    fn = (1, 0, 6, 2, 5, 0, 3)
    base = bca(ConfusionCounts(tp=tp, fn=fn))
    for _ in range(20):
        perm = rng.permutation(7)
        shuffled = ConfusionCounts(
            tp=tuple(tp[i] for i in perm), fn=tuple(fn[i] for i in perm)
        )
        assert bca(shuffled) == pytest.approx(base, abs=1e-12)


def test_bca_excludes_zero_support_classes_with_warning():
    counts = ConfusionCounts(tp=(5, 0, 3), fn=(0, 0, 3))
    with pytest.warns(UserWarning):
        assert bca(counts) == pytest.approx((1.0 + 0.5) / 2)


def test_bca_undefined_for_all_zero_support():
    with pytest.raises(MetricError):
        bca(ConfusionCounts(tp=(0, 0), fn=(0, 0)))
    with pytest.raises(MetricError):
        ConfusionCounts(tp=(1,), fn=(0,))  # needs >= 2 classes


# -- efficiency --------------------------------------------------------------------


@pytest.mark.parametrize(
    "score,minutes,reported",
    [
        (0.96, 11.0, 0.0872),
        (0.97, 15.0, 0.0646),
        (0.93, 185.0, 0.0050),
        (0.85, 30.0, 0.0280),
        (0.98, 1680.0, 0.0005),
    ],
)
def test_efficiency_reproduces_reported_values(score, minutes, reported):
    assert efficiency(score, minutes) == pytest.approx(reported, abs=5e-4)


def test_efficiency_is_exact_quotient():
    assert efficiency(0.96, 11.0) == 0.96 / 11.0


def test_efficiency_rejects_non_positive_minutes():
    with pytest.raises(MetricError):
        efficiency(0.9, 0.0)
    with pytest.raises(MetricError):
        efficiency(0.9, -3.0)


def test_efficiency_monotonicity():
    assert efficiency(0.9, 10.0) > efficiency(0.9, 11.0)
    assert efficiency(0.95, 10.0) > efficiency(0.9, 10.0)


# -- threshold times ----------------------------------------------------------------


def test_threshold_crossing_at_trial_two():
    history = make_history([(0.5, 1.0), (0.96, 2.4), (0.7, 4.0)])
    crossings = threshold_times(history, [0.80, 0.90])
    assert [(c.minutes, c.trial) for c in crossings] == [(2.4, 2), (2.4, 2)]


def test_threshold_not_reached():
    history = make_history([(0.5, 1.0), (0.5, 2.0)])
    (crossing,) = threshold_times(history, [0.8])
    assert crossing.minutes is None and crossing.trial is None


def test_threshold_replay_by_hand():
    history = make_history([(0.7, 1.0), (0.85, 2.0), (0.92, 3.0)])
    crossings = threshold_times(history, [0.8, 0.9])
    assert [(c.minutes, c.trial) for c in crossings] == [(2.0, 2), (3.0, 3)]


def test_threshold_is_strict():
    history = make_history([(0.8, 1.0), (0.81, 2.0)])
    (crossing,) = threshold_times(history, [0.8])
    assert crossing.trial == 2


def test_thresholds_must_ascend():
    history = make_history([(0.5, 1.0)])
    with pytest.raises(MetricError):
        threshold_times(history, [0.9, 0.8])


def test_crossing_times_non_decreasing_in_threshold():
    rng = np.random.default_rng(2)
    for _ in range(50):
        pairs = [(float(rng.uniform()), float(m + 1)) for m in range(10)]
        history = make_history(pairs)
        crossings = threshold_times(history, [0.2, 0.5, 0.8])
        reached = [c.minutes for c in crossings if c.minutes is not None]
        assert reached == sorted(reached)


def test_threshold_times_consistent_with_best_so_far_curve():
    rng = np.random.default_rng(3)
    pairs = [(float(rng.uniform()), float(m + 1)) for m in range(15)]
    history = make_history(pairs)
    curve = history.best_so_far_curve()
    for thr in (0.3, 0.6, 0.9):
        (crossing,) = threshold_times(history, [thr])
        from_curve = next(((s, b) for s, b in curve if b > thr), None)
        if from_curve is None:
            assert crossing.minutes is None
        else:
            assert crossing.minutes == pytest.approx(from_curve[0] / 60.0)


def test_time_to_best_is_earliest_achiever():
    history = make_history([(0.5, 1.0), (0.9, 2.0), (0.9, 3.0)])
    minutes, trial = time_to_best(history)
    assert (minutes, trial) == (2.0, 2)


# -- reports ------------------------------------------------------------------------


def test_single_run_report_has_one_row_per_table():
    report = build_report([make_result("gp-bo", [(0.5, 1.0), (0.96, 2.4)])], thresholds=[0.8, 0.9])
    assert len(report["rows"]) == 1
    row = report["rows"][0]
    assert row["optimizer"] == "gp-bo"
    assert row["crossings"][0]["minutes"] == 2.4
    assert row["best"]["score"] == 0.96
    text = render_text(report)
    assert text.count("gp-bo") == 3  # one row in each of the three tables


def test_report_reproduces_reported_efficiency_column():
    rows = [
        ("grid", 0.98, 1680.0, 0.0005),
        ("baseline", 0.85, 30.0, 0.0280),
        ("tpe-a", 0.93, 185.0, 0.0050),
        ("tpe-b", 0.97, 15.0, 0.0646),
        ("gp-bo", 0.96, 11.0, 0.0872),
    ]
    results = [make_result(name, [(score, minutes)]) for name, score, minutes, _ in rows]
    report = build_report(results, thresholds=[0.8, 0.9])
    by_name = {row["optimizer"]: row for row in report["rows"]}
    for name, _, _, expected in rows:
        assert by_name[name]["efficiency"] == pytest.approx(expected, abs=5e-4)
    # sorted by efficiency descending
    effs = [row["efficiency"] for row in report["rows"]]
    assert effs == sorted(effs, reverse=True)


def test_multi_repeat_report_uses_median_with_range():
    results = [
        make_result("tpe", [(0.90, 10.0)], seed=0, repeat=0),
        make_result("tpe", [(0.94, 14.0)], seed=1, repeat=1),
        make_result("tpe", [(0.98, 2.0)], seed=2, repeat=2),
    ]
    report = build_report(results, thresholds=[0.8])
    row = report["rows"][0]
    assert row["repeats"] == 3
    assert row["best"]["score"] == 0.94  # median repeat
    assert row["best"]["score_min"] == 0.90
    assert row["best"]["score_max"] == 0.98
    assert row["best"]["minutes"] == 14.0  # same repeat as the median score
    text = render_text(report)
    assert "[" in text and "-" in text


def test_report_handles_unreached_and_failed_runs():
    ok = make_result("random", [(0.5, 1.0)])
    failed = RunResult(
        spec=OptimizerSpec(kind="random", budget=1, seed=0, name="broken"),
        run_seed=0, history=History(SPACE), error="no successful trials",
    )
    report = build_report([ok, failed], thresholds=[0.8])
    by_name = {row["optimizer"]: row for row in report["rows"]}
    assert by_name["random"]["crossings"][0]["minutes"] is None
    assert by_name["broken"]["best"] is None
    assert by_name["broken"]["failed_runs"] == 1
    render_text(report)  # must not crash on empty rows


def test_report_json_round_trips():
    report = build_report([make_result("gp-bo", [(0.96, 11.0)])])
    assert json.loads(json.dumps(report)) == report
