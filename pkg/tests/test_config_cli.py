import json
from pathlib import Path

import pytest

from planexec.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from planexec.config import ConfigError, Settings, load_config, override, settings_from_dict

SHIPPED = Path(__file__).resolve().parents[1] / "config" / "planexec.toml"


def test_shipped_config_equals_defaults():
    assert load_config(SHIPPED) == Settings()


def test_partial_config_and_nested_types(tmp_path):
    p = tmp_path / "c.toml"
    p.write_text('[run]\nconfidence_threshold = 0.5\n[completion]\nstop_sequences = ["x"]\n[bench]\nmode = "all"\n')
    s = load_config(p)
    assert s.run.confidence_threshold == 0.5 and s.completion.stop_sequences == ("x",) and s.bench.mode == "all"
    assert s.limits == Settings().limits


@pytest.mark.parametrize("data,match", [
    ({"nope": {}}, "unknown section"),
    ({"run": {"typo": 1}}, "unknown key"),
    ({"bench": {"mode": "fast"}}, "bench.mode"),
    ({"run": {"max_replans": -1}}, "max_replans"),
    ({"backend": {"kind": "replay"}}, "cassette"),
    ({"run": 3}, "must be a table"),
])
def test_invalid_config(data, match):
    with pytest.raises(ConfigError, match=match):
        settings_from_dict(data)


def test_bad_files(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.toml")
    (tmp_path / "bad.toml").write_text("[run\n")
    with pytest.raises(ConfigError, match="invalid TOML"):
        load_config(tmp_path / "bad.toml")


def test_override_ignores_none():
    s = Settings()
    assert override(s, "tasks", count=None) is s
    assert override(s, "tasks", count=4).tasks.count == 4
    with pytest.raises(ConfigError):
        override(s, "tasks", count=0)


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    root = tmp_path_factory.mktemp("cli")
    assert main(["gen-corpus", str(root / "corpus"), "--n-entities", "30", "--seed", "2"]) == EXIT_OK
    assert main(["gen-tasks", str(root / "corpus"), str(root / "tasks.jsonl"), "--count", "3"]) == EXIT_OK
    return root


def test_cli_end_to_end(workspace, capsys):
    root = workspace
    capsys.readouterr()
    assert main(["bench", str(root / "tasks.jsonl"), "--corpus", str(root / "corpus"), "--mode", "all",
                 "--trace-dir", str(root / "traces"), "--format", "csv"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert [ln.split(",")[0] for ln in out[1:]] == ["executor", "planner", "primitives", "full"]
    assert all(ln.split(",")[2] == "1.0" for ln in out[1:])
    assert main(["metrics", str(root / "traces" / "full"), "--label", "full", "--format", "csv"]) == EXIT_OK
    assert capsys.readouterr().out.splitlines()[1] == out[4]


def test_cli_run(workspace, capsys, tmp_path):
    task = json.loads((workspace / "tasks.jsonl").read_text().splitlines()[0])
    capsys.readouterr()
    code = main(["run", task["question"], "--corpus", str(workspace / "corpus"), "--trace", str(tmp_path / "t.jsonl")])
    assert code == EXIT_OK
    out = json.loads(capsys.readouterr().out)
    assert out == {"answer": task["gold"], "confidence": 0.9}
    assert (tmp_path / "t.jsonl").exists()


@pytest.mark.parametrize("argv", [
    [], ["frobnicate"], ["bench"], ["run", "q", "--mode", "bogus"], ["run", "q"],
    ["metrics", "/does/not/exist"], ["--config", "/does/not/exist.toml", "metrics", "x"],
])
def test_cli_usage_errors(argv):
    if not argv or argv[0] == "frobnicate" or argv == ["bench"] or "bogus" in argv:
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == EXIT_USAGE
    else:
        assert main(argv) == EXIT_USAGE


def test_cli_runtime_errors(tmp_path, workspace):
    assert main(["bench", str(tmp_path / "missing.jsonl"), "--corpus", str(workspace / "corpus")]) == EXIT_RUNTIME
    assert main(["gen-tasks", str(tmp_path / "nocorpus"), str(tmp_path / "t.jsonl")]) == EXIT_RUNTIME


def test_http_backends_per_role(workspace):
    from planexec.cli import make_backends
    s = settings_from_dict({"backend": {"kind": "http", "base_url": "http://p/v1", "model": "big",
                                        "executor_model": "small"}})
    b = make_backends(s, str(workspace / "corpus"))
    assert (b.planner.model, b.executor.model) == ("big", "small")
    assert b.executor.base_url == "http://p/v1"
    shared = make_backends(override(s, "backend", executor_model=""), str(workspace / "corpus"))
    assert shared.planner is shared.executor


def test_http_backend_from_env(workspace, monkeypatch):
    from planexec.cli import make_backends
    monkeypatch.setenv("PLANEXEC_LLM_BASE_URL", "http://env/v1")
    monkeypatch.setenv("PLANEXEC_LLM_MODEL", "envmodel")
    b = make_backends(settings_from_dict({"backend": {"kind": "http"}}), str(workspace / "corpus"))
    assert (b.planner.base_url, b.planner.model) == ("http://env/v1", "envmodel")
