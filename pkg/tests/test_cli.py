import json
import subprocess
import sys
from importlib import resources

import pytest

from lexichoice.cli import run
from lexichoice.serialize import load_spec, validate

DEMO = str(resources.files("lexichoice").joinpath("data", "demo.json"))


def _report(tmp_path, *argv, name="r.json"):
    out = tmp_path / name
    code = run([*argv, f"--out={out}"])
    return code, (json.loads(out.read_text()) if out.exists() else None), out


def test_run_demo_tasks(tmp_path):
    code, rep, _ = _report(tmp_path, "run", DEMO, "--exhaustive")
    assert code == 0
    validate(rep, "report")
    assert rep["format"] == 1 and "timing" not in rep
    kinds = [v["task"].split(":")[0] for v in rep["verdicts"]]
    assert sorted(set(kinds)) == ["check", "classify", "compose", "verify", "witness"]
    assert kinds.count("classify") == 2 and kinds.count("witness") == 2
    assert all(v["ok"] for v in rep["verdicts"])


def test_report_is_byte_stable(tmp_path):
    _, _, a = _report(tmp_path, "run", DEMO, "--seed=3", name="a.json")
    _, _, b = _report(tmp_path, "run", DEMO, "--seed=3", name="b.json")
    assert a.read_bytes() == b.read_bytes()


def test_timing_is_opt_in(tmp_path):
    _, rep, _ = _report(tmp_path, "classify", DEMO, "capE2", "--timing")
    assert "timing" in rep


def test_classify_reports_parameters(tmp_path):
    code, rep, _ = _report(tmp_path, "classify", DEMO, "capE2")
    assert code == 0
    v = rep["verdicts"][0]
    assert v["is_tlcr"] and v["params"]["t"] == 2


def test_compose_evaluates_tree(tmp_path):
    code, rep, _ = _report(tmp_path, "compose", DEMO, "--tree=lex(capE2, C1, C2)", "--eval=[0,1,2,3]")
    assert code == 0
    # C1 takes {a,b}; capacity 2 shuts out C2
    assert rep["verdicts"][0]["output"] == [0, 1]


def test_failed_check_replays(tmp_path):
    code, rep, path = _report(tmp_path, "witness", DEMO, "capE2", "--condition=pi-domain")
    assert code == 0
    w = rep["witnesses"][0]
    assert w["property"] == "SUB"
    composed = w["refs"]["composed"]
    code2, rep2, _ = _report(tmp_path, "check", str(path), composed, f"--prop={w['property']}", name="replay.json")
    assert code2 == 1
    v = rep2["verdicts"][0]
    assert not v["holds"] and v["witness"] is not None
    load_spec(str(path))


@pytest.mark.parametrize(
    "theorem", ["thm1", "prop-pi", "prop-sm", "sv-sub", "sub-sv", "sv-subsm", "subsm-sv", "remark-con", "claim-lr", "lemma-mto1"]
)
def test_every_theorem_runs(tmp_path, theorem):
    code, rep, _ = _report(tmp_path, "verify", DEMO, f"--theorem={theorem}", "--samples=100")
    assert code == 0, [v for v in rep["verdicts"] if not v["ok"]]


def test_input_errors_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"ground": {"size": 3}, "functions": {"x": {"kind": "nope"}}}')
    assert run(["classify", str(bad), "x"]) == 2
    assert "functions/x" in capsys.readouterr().err
    broken = tmp_path / "broken.json"
    broken.write_text('{"ground": ')
    assert run(["classify", str(broken), "x"]) == 2
    assert "broken.json:1:" in capsys.readouterr().err
    assert run(["classify", DEMO, "missing"]) == 2
    assert run(["check", DEMO, "C1", "--prop=XX"]) == 2
    assert run(["classify", str(tmp_path / "absent.json"), "x"]) == 2
    assert run(["verify", DEMO]) == 2


def test_cyclic_reference_is_rejected(tmp_path):
    spec = tmp_path / "cyc.json"
    spec.write_text(json.dumps({
        "ground": {"size": 2},
        "functions": {
            "E": {"kind": "identity"},
            "A": {"kind": "lex", "first": "B", "second": "B", "exclusion": "E"},
            "B": {"kind": "lex", "first": "A", "second": "A", "exclusion": "E"},
        },
    }))
    assert run(["classify", str(spec), "E"]) == 2


def test_unexpected_verdict_exits_1(tmp_path):
    spec = json.loads(open(DEMO).read())
    spec["tasks"] = [{"task": "classify", "name": "aonE", "expect": True}]
    path = tmp_path / "s.json"
    path.write_text(json.dumps(spec))
    assert run(["run", str(path), f"--out={tmp_path / 'o.json'}"]) == 1


def test_console_entry_point(tmp_path):
    out = tmp_path / "o.json"
    proc = subprocess.run(
        [sys.executable, "-m", "lexichoice.cli", "classify", DEMO, "identityE", f"--out={out}"], capture_output=True
    )
    assert proc.returncode == 0
    assert json.loads(out.read_text())["verdicts"][0]["is_tlcr"]
