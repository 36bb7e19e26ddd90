import pytest

from awm.core import Action, parse_action
from awm.judge import (
    Judgment,
    LmJudge,
    OracleJudge,
    build_judge_prompt,
    judge_lm,
    judge_oracle,
    parse_verdict,
)
from awm.lm import FailingLm, MockLm
from awm.simenv import make_env

from fixtures import experience

ADVERSARIAL = [
    "",
    "The agent clearly succeeded.",
    "SUCCESS",
    "Status: FAILURE",
    "Status: success?? no, Status: FAILURE",
    "Status: SUCCESSFUL",
    "Status: UNSUCCESS",
    "Status: SUCCESS\nStatus: FAILURE",
    "Status: FAILURE\nStatus: SUCCESS",
    "I would not say Status: SUCCESS here.",
    "Status: not SUCCESS",
    "Status: pending",
    "status success",
    "Statuses: SUCCESS",
]


def _episode():
    return experience("e1", ["click('1')", "send_msg_to_user('zip is 28015')"], instruction="Zip of CMU?")


@pytest.mark.parametrize("reply", ADVERSARIAL)
def test_no_affirmative_verdict_is_failure(reply):
    j = judge_lm(_episode(), MockLm([reply]))
    assert j.success is False and j.judge_kind == "lm"


@pytest.mark.parametrize("reply", ["Status: SUCCESS", "It worked.\nStatus: success", "**Status: SUCCESS**"])
def test_affirmative_verdict(reply):
    assert judge_lm(_episode(), MockLm([reply])).success is True


def test_judge_error_is_failure():
    lm = FailingLm()
    j = judge_lm(_episode(), lm)
    assert j == Judgment(False, "judge error", "lm") and lm.calls == 1


def test_judge_prompt_contents():
    p = build_judge_prompt(_episode())
    assert "Task: Zip of CMU?" in p
    assert "send_msg_to_user('zip is 28015')" in p
    assert "Message to user: zip is 28015" in p
    assert p.rstrip().endswith('"Status: SUCCESS" or "Status: FAILURE".')


def test_deterministic():
    e = _episode()
    assert judge_lm(e, MockLm(["Status: SUCCESS"])) == judge_lm(e, MockLm(["Status: SUCCESS"]))
    assert parse_verdict("Status: SUCCESS") and not parse_verdict("Status: FAILURE")


def test_judgment_is_binary():
    with pytest.raises(ValueError):
        Judgment(1)
    with pytest.raises(ValueError):
        Judgment(True, judge_kind="human")


# ------------------------------------------------------------------- oracle


def _run(task, lines):
    env = make_env(task)
    env.reset(task)
    for line in lines:
        env.execute(parse_action(line))
    return experience(task.id, lines, website=task.website, instruction=task.instruction), env.state


def _task(template_id):
    from awm.simenv import generate_suite
    return next(t for t in generate_suite(seed=0, k_templates=17, n_per_template=1) if t.template_id == template_id)


def test_oracle_message_contains():
    task = _task("map/zip_code")
    zip_code = task.slots["place_zip"]
    solution = task.solution[:-1] + (f"send_msg_to_user('zip is {zip_code}')",)
    e, state = _run(task, solution)
    assert judge_oracle(e, task, state) == Judgment(True, "oracle check passed", "oracle")


def test_oracle_requires_terminal():
    task = _task("map/zip_code")
    e, state = _run(task, task.solution[:-1])
    assert judge_oracle(e, task, state).success is False


def test_oracle_state_predicate():
    task = _task("shopping/add_to_cart")
    e, state = _run(task, task.solution)
    assert OracleJudge()(e, task, state).success is True
    e, state = _run(task, ["stop()"])
    assert OracleJudge()(e, task, state).success is False


def test_judges_share_a_contract():
    task = _task("map/find_place")
    e, state = _run(task, task.solution)
    for judge in (OracleJudge(), LmJudge(MockLm(["Status: SUCCESS"]))):
        assert judge(e, task, state).success is True
    with pytest.raises(ValueError):
        OracleJudge()(e)
    assert e.steps[-1].action == Action("stop") or e.steps[-1].action.is_terminal
