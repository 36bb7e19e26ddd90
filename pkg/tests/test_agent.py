import pytest

from awm.agent import (
    HISTORY_MARKER,
    OBSERVATION_MARKER,
    RETRY_REMINDER,
    TASK_MARKER,
    AgentConfig,
    MacroAction,
    build_agent_prompt,
    expand_macro,
    parse_agent_reply,
    predict_step,
    predict_trajectory,
    register_macro_actions,
    replay_observations,
    run_episode,
)
from awm.core import Action, Experience, Step, parse_action
from awm.errors import ArityError, NoAction, UnboundPlaceholder
from awm.lm import MockLm
from awm.memory import BASE_ACTION_DOCS, WorkflowStore
from awm.simenv import Environment, Site, instantiate, load_site, make_env, slot_assignments

from fixtures import LOGIN_SITE, LOGIN_WORKFLOW_LINES, workflow


def login_env():
    env = Environment(Site.from_dict(LOGIN_SITE))
    env.reset()
    return env


def login_macro():
    return MacroAction.from_workflow(workflow("w0", "login", "Log in to the site", LOGIN_WORKFLOW_LINES))


def find_place_task(index=0):
    site = load_site("map")
    template = next(t for t in site.templates if t["id"] == "map/find_place")
    return instantiate(site, template, slot_assignments(site, template)[index], index)


# ------------------------------------------------------------------ macros


def test_login_macro_runs_five_actions():
    m = login_macro()
    assert m.name == "log_in_to_the_site"
    assert m.params == ("box1_id", "username", "box2_id", "password", "submit_id")
    env = login_env()
    result = expand_macro(m, ["11", "ada", "12", "secret", "13"], env)
    assert result.completed
    assert [a.name for a in result.executed] == ["click", "type", "click", "type", "click"]
    assert result.executed[1] == Action("type", ("11", "ada"))
    assert env.state.vars["user"] == "ada"
    assert result.observation.startswith("Page: Welcome ada")


def test_macro_halts_on_missing_element():
    lines = ["fill('11', '{user}')", "fill('12', '{password}')", "click('99')", "click('13')"]
    m = MacroAction.from_workflow(workflow("w1", "login", "Sign in", lines))
    env = login_env()
    result = expand_macro(m, ["ada", "pw"], env)
    assert len(result.executed) == 2
    assert result.error.kind == "NoSuchElement"
    assert result.failed_step == 2
    assert env.state.page == "login"


def test_macro_arity_and_binding_errors():
    with pytest.raises(ArityError):
        expand_macro(login_macro(), ["11"], login_env())
    with pytest.raises(ValueError):
        MacroAction("m", ("a",), login_macro().body)
    from awm.agent import bind_action
    with pytest.raises(UnboundPlaceholder):
        bind_action(parse_action("fill('1', '{x}')"), {})


def test_macro_names_and_collisions():
    store = WorkflowStore("online")
    lines = ["fill('101', '{place_name}')", "click('102')"]
    store.add_workflows("map", [
        workflow("a", "map", "Find a place by its name", lines),
        workflow("b", "map", "Find a place by its name", ["fill('101', '{place_name}')", "press('101', 'Enter')"]),
    ])
    macros = register_macro_actions(store, "map")
    assert [m.name for m in macros] == ["find_a_place_by_its_name", "find_a_place_by_its_name_2"]
    assert macros[0].signature_line() == "find_a_place_by_its_name(place_name): Find a place by its name"


# ---------------------------------------------------------------- prompting


def test_prompt_layout():
    history = [Step(Action("click", ("3",)), reasoning="Open the menu.")]
    p = build_agent_prompt("Buy milk", "DOCS", "Page: Home", history)
    lines = p.splitlines()
    assert lines[0] == "DOCS"
    assert f"{TASK_MARKER} Buy milk" in lines
    assert lines.index(HISTORY_MARKER) < lines.index(OBSERVATION_MARKER)
    assert "1. Reasoning: Open the menu." in lines and "   Action: click('3')" in lines
    assert HISTORY_MARKER not in build_agent_prompt("q", "DOCS", "o")


@pytest.mark.parametrize(
    "reply,reasoning,action",
    [
        ("Order found, terminating.\nstop()", "Order found, terminating.", Action("stop")),
        ("click('1')", "", Action("click", ("1",))),
        ("I'll try one.\nclick('1')\nactually:\nclick('2')", "I'll try one.\nclick('1')\nactually:",
         Action("click", ("2",))),
        ("Reasoning: search first\nAction: `fill('5', 'milk')`", "search first", Action("fill", ("5", "milk"))),
    ],
)
def test_parse_agent_reply(reply, reasoning, action):
    assert parse_agent_reply(reply) == (reasoning, action)


def test_parse_agent_reply_without_action():
    with pytest.raises(NoAction):
        parse_agent_reply("I am not sure what to do.")


def test_macro_calls_parse_only_when_registered():
    with pytest.raises(NoAction):
        parse_agent_reply("find_place('x')")
    assert parse_agent_reply("find_place('x')", {"find_place": 1})[1] == Action("find_place", ("x",))


# ---------------------------------------------------------------- episodes


def test_immediate_stop():
    task = find_place_task()
    env = make_env(task)
    env.reset(task)
    e = run_episode(task.instruction, "map", env, None, MockLm(["Nothing to do.\nstop()"]))
    assert len(e.steps) == 1 and e.steps[0].action.is_terminal
    assert e.steps[0].reasoning == "Nothing to do."
    assert env.done


def test_max_steps_cap():
    task = find_place_task()
    env = make_env(task)
    env.reset(task)
    lm = MockLm(responder=lambda req: "click('103')")
    e = run_episode(task.instruction, "map", env, None, lm, AgentConfig(max_steps=4))
    assert len(e.steps) == 4 and lm.calls == 4
    assert not any(s.action.is_terminal for s in e.steps)


def test_no_action_retries_then_stops():
    task = find_place_task()
    env = make_env(task)
    env.reset(task)
    lm = MockLm(["hmm", "still thinking"])
    e = run_episode(task.instruction, "map", env, None, lm)
    assert lm.calls == 2 and lm.requests[1].prompt.endswith(RETRY_REMINDER)
    assert [s.action for s in e.steps] == [Action("stop")]


def test_environment_error_is_shown_to_agent():
    task = find_place_task()
    env = make_env(task)
    env.reset(task)
    lm = MockLm(["click('9999')", "stop()"])
    run_episode(task.instruction, "map", env, None, lm)
    assert "Error:" in lm.requests[1].prompt


def test_following_a_workflow_solves_the_task():
    task = find_place_task(1)
    place = task.slots["place"]
    lm = MockLm([f"Search for it.\nfill('101', '{place}')", "click('102')", f"send_msg_to_user('{place}')"])
    env = make_env(task)
    env.reset(task)
    store = WorkflowStore("online")
    store.add_workflows("map", [workflow("w", "map", "Find a place", ["fill('101', '{place}')", "click('102')"])])
    e = run_episode(task.instruction, "map", env, store, lm)
    assert "## map: Find a place" in lm.requests[0].prompt
    assert task.oracle.holds(env.state), e


def test_macro_action_in_episode():
    task = find_place_task(2)
    place = task.slots["place"]
    store = WorkflowStore("online")
    store.add_workflows("map", [workflow("w", "map", "Find a place", ["fill('101', '{place}')", "click('102')"])])
    lm = MockLm([f"find_a_place('{place}')", f"send_msg_to_user('{place}')"])
    env = make_env(task)
    env.reset(task)
    e = run_episode(task.instruction, "map", env, store, lm, AgentConfig(enable_macro_actions=True))
    assert "find_a_place(place): Find a place" in lm.requests[0].prompt
    assert e.steps[0].action == Action("find_a_place", (place,))
    assert task.oracle.holds(env.state)
    macros = register_macro_actions(store, "map")
    fresh = make_env(task)
    fresh.reset(task)
    assert replay_observations(fresh, e, macros) == [s.observation for s in e.steps]


def test_empty_store_matches_no_memory():
    task = find_place_task()
    prompts = []
    for store in (None, WorkflowStore("online")):
        env = make_env(task)
        env.reset(task)
        lm = MockLm(["click('103')", "stop()"])
        run_episode(task.instruction, "map", env, store, lm)
        prompts.append([r.prompt for r in lm.requests])
    assert prompts[0] == prompts[1]


def test_store_is_not_mutated_by_episode():
    task = find_place_task()
    store = WorkflowStore("online")
    store.add_workflows("map", [workflow("w", "map", "Find a place", ["fill('101', '{place}')", "click('102')"])])
    before = store.render_memory("map")
    env = make_env(task)
    env.reset(task)
    run_episode(task.instruction, "map", env, store, MockLm(["stop()"]))
    assert store.render_memory("map") == before


# ---------------------------------------------------------- teacher forcing


def _gold():
    steps = tuple(
        Step(parse_action(a), observation=f"obs {i}", reasoning=f"reason {i}")
        for i, a in enumerate(["click('1')", "fill('2', 'x')", "stop()"])
    )
    return Experience("g", "shop", "do it", steps)


def test_teacher_forcing_sees_only_the_gold_prefix():
    lm = MockLm(responder=lambda req: "click('404')")
    predicted = predict_trajectory(_gold(), None, lm)
    assert predicted == [Action("click", ("404",))] * 3
    for i, req in enumerate(lm.requests):
        for j in range(3):
            assert (f"reason {j}" in req.prompt) == (j < i)
        assert f"obs {i}" in req.prompt


def test_predict_step_verbatim_and_forced_stop():
    e = _gold()
    lm = MockLm(["click('77')"])
    assert predict_step(e.instruction, (), "o", None, lm, "shop") == Action("click", ("77",))
    lm = MockLm(["no idea", "none"])
    assert predict_step(e.instruction, (), "o", None, lm, "shop") == Action("stop")
    assert BASE_ACTION_DOCS in lm.requests[0].prompt
