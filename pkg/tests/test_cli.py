import json

import pytest

from awm.cli import main
from awm.core import read_experiences, read_workflows


@pytest.fixture
def run(tmp_path, capsys):
    def _run(*argv):
        code = main([str(a) for a in argv])
        out, err = capsys.readouterr()
        return code, out, err
    return _run


def test_online_then_tools(tmp_path, run):
    tasks = tmp_path / "tasks.jsonl"
    assert run("simgen", "--seed", 0, "--k", 10, "--n", 5, "--output", tasks)[0] == 0
    assert len(tasks.read_text().splitlines()) == 50

    rd = tmp_path / "online"
    code, out, _ = run("run-online", "--tasks", tasks, "--mode", "lm", "--explore", 10, "--run-dir", rd)
    assert code == 0 and "task_sr: 1.0000" in out
    experiences = read_experiences(rd / "experiences.jsonl")
    assert len(experiences) == 50 and all(e.success for e in experiences)

    code, out, _ = run("curve", "--input", rd / "experiences.jsonl")
    assert out.splitlines()[0] == "index,cum_sr" and out.splitlines()[-1] == "49,1.000000"

    wf = rd / "workflows" / "map.workflows.txt"
    code, out, _ = run("quality", "--workflows", wf, "--judges", rd / "workflow_judges.json")
    report = json.loads(out)["map"]
    assert report["n_workflows"] == len(read_workflows(wf))
    assert report["by_judge_kind"] == {"oracle": report["n_workflows"]}


def test_induce_and_offline(tmp_path, run):
    tasks = tmp_path / "tasks.jsonl"
    run("simgen", "--seed", 1, "--k", 17, "--n", 1, "--output", tasks)
    rd = tmp_path / "demo"
    run("run-online", "--tasks", tasks, "--no-memory", "--explore", 17, "--run-dir", rd)
    train = rd / "experiences.jsonl"

    out_wf = tmp_path / "rule.txt"
    code, out, _ = run("induce", "--mode", "rule", "--input", train, "--output", out_wf)
    assert code == 0 and len(read_workflows(out_wf)) >= 3

    test = tmp_path / "test.jsonl"
    run("simgen", "--seed", 2, "--k", 17, "--n", 2, "--output", test)
    code, out, _ = run("run-offline", "--train", train, "--test", test, "--mode", "lm")
    assert code == 0 and "task_sr: 1.0000" in out
    code, out, _ = run("run-offline", "--test", test)
    assert "task_sr: 0.0000" in out


def test_eval_steps(tmp_path, run):
    tasks = tmp_path / "tasks.jsonl"
    run("simgen", "--seed", 3, "--k", 4, "--n", 1, "--output", tasks)
    rd = tmp_path / "demo"
    run("run-online", "--tasks", tasks, "--no-memory", "--explore", 4, "--run-dir", rd)
    code, out, _ = run("eval-steps", "--examples", rd / "experiences.jsonl", "--run-dir", tmp_path / "steps")
    assert code == 0 and "step_sr:" in out
    assert (tmp_path / "steps" / "per_example.csv").exists()


def test_config_file(tmp_path, run):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"run": {"agent": {"max_steps": 2}}}))
    tasks = tmp_path / "tasks.jsonl"
    run("simgen", "--seed", 0, "--k", 2, "--n", 1, "--output", tasks)
    code, out, _ = run("run-online", "--config", cfg, "--tasks", tasks, "--explore", 2)
    assert code == 0 and "avg_steps: 2.00" in out


def test_errors_exit_nonzero(tmp_path, run):
    code, _, err = run("induce", "--input", tmp_path / "missing.jsonl", "--output", tmp_path / "o.txt")
    assert code == 1 and err.startswith("error:")
    bad = tmp_path / "cfg.json"
    bad.write_text(json.dumps({"run": {"nope": 1}}))
    code, _, err = run("simgen", "--output", tmp_path / "t.jsonl")
    assert code == 0
    code, _, err = run("run-online", "--config", bad, "--tasks", tmp_path / "t.jsonl")
    assert code == 1 and "unknown run config keys" in err
