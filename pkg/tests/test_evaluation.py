import pytest

from awm.core import Step, parse_action
from awm.evaluation import (
    TERMINAL_MARKER,
    EpisodeOutcome,
    StepScore,
    StepwiseOutcome,
    action_f1,
    cumulative_sr,
    cumulative_sr_csv,
    element_accuracy,
    episode_report,
    quality_report,
    score_step,
    step_matches,
    step_success,
    stepwise_report,
    task_success,
)
from awm.simenv import generate_suite

from fixtures import STEP_FIXTURE, STEP_FIXTURE_EXPECTED, quality_fixture, workflow

A = parse_action


@pytest.mark.parametrize(
    "pred,gold,expected",
    [("click('12')", {"12"}, 1), ("click('13')", {"12"}, 0), ("click('47')", {"12", "47"}, 1),
     ("stop()", {TERMINAL_MARKER}, 1), ("stop()", {"12"}, 0), ("click('12')", {12}, 1)],
)
def test_element_accuracy(pred, gold, expected):
    assert element_accuracy(A(pred), gold) == expected


def test_action_f1_fixtures():
    assert action_f1(A("click('3')"), A("click('3')")) == 1.0
    assert action_f1(A("type('1', 'cat food')"), A("type('1', 'dry cat food')")) == pytest.approx(6 / 7)
    assert action_f1(A("click('1')"), A("type('1', 'x')")) == 0.0
    # element ids never count
    assert action_f1(A("click('1')"), A("click('2')")) == 1.0


def test_action_f1_symmetric_and_multiset():
    a, b = A("type('1', 'a a b')"), A("type('1', 'a b b')")
    assert action_f1(a, b) == action_f1(b, a) < 1.0
    assert action_f1(A("type('1', 'B a')"), A("type('1', 'a b')")) == 1.0


def test_step_success_cases():
    gold = A("type('44', 'cat')")
    assert step_success(A("type('44', 'cat')"), gold) == 1
    assert step_success(A("type('44', 'dog')"), gold) == 0
    assert step_success(A("type('45', 'cat')"), gold) == 0
    assert step_success(A("stop()"), Step(A("stop()"))) == 1
    with pytest.raises(ValueError):
        StepScore(0, 1.0, 1)


def test_task_success_and_mean():
    assert task_success([1, 1, 1]) == 1 and task_success([1, 0, 1]) == 0
    report = stepwise_report([
        StepwiseOutcome(str(i), "s", (StepScore(v, 1.0, v),)) for i, v in enumerate([1, 0, 0])
    ])
    assert report.task_sr == pytest.approx(1 / 3)


def test_cumulative_sr():
    assert cumulative_sr([1, 0, 1]) == pytest.approx([1.0, 0.5, 2 / 3])
    assert cumulative_sr([0, 0, 0, 0]) == [0.0] * 4
    series = cumulative_sr([1, 1, 0, 1, 0, 0, 1])
    assert len(series) == 7
    assert all(abs(v * (k + 1) - round(v * (k + 1))) < 1e-9 for k, v in enumerate(series))
    assert cumulative_sr_csv([1.0, 0.5]) == "index,cum_sr\n0,1.000000\n1,0.500000\n"


def _stepwise_fixture():
    out = []
    for i, (gold, pred) in enumerate(STEP_FIXTURE):
        scores = tuple(score_step(A(p), A(g)) for g, p in zip(gold, pred))
        out.append(StepwiseOutcome(f"t{i}", "shop", scores))
    return out


def test_ten_step_fixture():
    report = stepwise_report(_stepwise_fixture())
    for name, value in STEP_FIXTURE_EXPECTED.items():
        assert getattr(report, name) == pytest.approx(value), name
    assert report.task_sr <= report.step_sr <= 1
    assert report.n_tasks == 3 and report.avg_steps == pytest.approx(10 / 3)
    assert len(report.per_example) == 10


def test_gold_self_consistency_on_simenv():
    for task in generate_suite(seed=1, k_templates=8, n_per_template=1):
        gold = [A(l) for l in task.solution]
        assert task_success(score_step(g, g) for g in gold) == 1


def test_episode_report_and_files(tmp_path):
    outcomes = [EpisodeOutcome("a", "map", True, 3), EpisodeOutcome("b", "map", False, 5),
                EpisodeOutcome("c", "shop", True, 4)]
    r = episode_report(outcomes, {"reddit": "boom"})
    assert r.task_sr == pytest.approx(2 / 3) and r.avg_steps == 4.0
    assert r.element_acc is None and r.step_sr is None
    assert r.per_website["map"] == {"n": 2, "task_sr": 0.5, "avg_steps": 4.0}
    assert r.cumulative_sr == pytest.approx([1.0, 0.5, 2 / 3])
    r.write(tmp_path)
    assert "error[reddit]: boom" in (tmp_path / "summary.txt").read_text()
    assert (tmp_path / "per_example.csv").read_text().splitlines()[0].startswith("index,task_id")
    assert len((tmp_path / "cumulative_sr.csv").read_text().splitlines()) == 4


# ------------------------------------------------------------------ quality


def test_quality_fixture():
    ws, gold, predicted = quality_fixture()
    q = quality_report(ws, gold, predicted, macro_names=["find_place"])
    assert q.n_workflows == 3
    assert q.function_overlap == 0.25
    assert q.coverage == 0.4
    assert q.utility_rate == 0.5
    assert quality_report(ws, gold, predicted).utility_rate == 0.25


def test_quality_empty_and_single():
    q = quality_report([])
    assert (q.n_workflows, q.coverage, q.function_overlap, q.utility_rate) == (0, 0.0, 0.0, 0.0)
    ws, _, _ = quality_fixture()
    assert quality_report(ws[:1]).function_overlap == 0.0


def test_quality_judge_tags_and_site_check():
    ws, _, _ = quality_fixture()
    q = quality_report(ws, judge_kinds={"q1": "lm", "q2": "oracle"})
    assert q.by_judge_kind == {"lm": 1, "oracle": 1, "untagged": 1}
    other = workflow("x", "map", "Elsewhere", ["click('1')", "click('2')"])
    with pytest.raises(ValueError):
        quality_report(ws + [other])


@pytest.mark.parametrize(
    "pattern,concrete,ok",
    [("fill('301', '{query}')", "fill('301', 'red mug')", True),
     ("fill('301', '{query}')", "fill('302', 'red mug')", False),
     ("send_msg_to_user('zip is {zip}')", "send_msg_to_user('zip is 15213')", True),
     ("send_msg_to_user('zip is {zip}')", "send_msg_to_user('15213')", False),
     ("click('{x}')", "hover('1')", False)],
)
def test_step_matches(pattern, concrete, ok):
    assert step_matches(A(pattern), A(concrete)) is ok

