import json

import pytest

from qudit_blind.cli import main, parse_caps, parse_field, RunConfig, UsageError

H_PROGRAM = {"arch": "brickwork", "n_wires": 2, "ops": [{"gate": "hadamard", "layer": 0, "wire": 0}], "inputs": [0, 1]}


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def test_parse_helpers():
    assert parse_field("3,2") == (3, 2, None)
    assert parse_field("2,2,1:1:1") == (2, 2, (1, 1, 1))
    assert parse_caps("amps=1e6,branches=100") == {"amps": 1_000_000, "branches": 100}
    with pytest.raises(UsageError):
        parse_field("3")
    with pytest.raises(UsageError):
        parse_caps("memory=5")


def test_config_round_trip():
    cfg = RunConfig(2, 3, (1, 0, 1, 1), 7, 100, 10, "x.json")
    assert RunConfig.from_json(json.loads(json.dumps(cfg.to_json()))) == cfg


def test_verify_algebra_prime_field(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["verify", "--suite", "algebra", "--field", "5,1", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["passed"] and report["checks"]
    assert all("tolerance" in c for c in report["checks"])
    assert "PASS" in capsys.readouterr().out


def test_verify_reports_are_byte_identical(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(["verify", "--suite", "algebra", "--field", "3,2", "--out", str(a)])
    main(["verify", "--suite", "algebra", "--field", "3,2", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_verify_known_t_form_failure_is_nonzero(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["verify", "--suite", "algebra", "--field", "2,2", "--out", str(out)]) == 1
    report = json.loads(out.read_text())
    assert report["known_failures"]
    assert "KNOWN" in capsys.readouterr().out


def test_usage_errors(tmp_path):
    assert main(["verify", "--suite", "algebra", "--field", "2,2,1:0:1"]) == 2  # reducible modulus
    assert main(["verify", "--suite", "nonsense"]) == 2
    assert main(["run", "--arch", "brickwork", "--program", write(tmp_path, "p.json", H_PROGRAM)]) == 2
    assert main(["run", "--arch", "brickwork", "--program", str(tmp_path / "missing.json"), "--seed", "1"]) == 2
    bare = write(tmp_path, "list.json", [{"gate": "hadamard", "layer": 0, "wire": 0}])
    assert main(["run", "--arch", "brickwork", "--program", bare, "--seed", "1"]) == 2
    assert main(["run", "--arch", "open-ended", "--program", write(tmp_path, "p.json", H_PROGRAM), "--seed", "1"]) == 2


def test_cap_exceeded_is_reported(tmp_path, capsys):
    code = main(["verify", "--suite", "gadgets", "--field", "2,1", "--caps", "amps=16"])
    assert code == 1
    assert "cap exceeded" in capsys.readouterr().err


def test_run_then_replay(tmp_path, capsys):
    prog = write(tmp_path, "h.json", H_PROGRAM)
    tr, sec = tmp_path / "t.jsonl", tmp_path / "s.json"
    args = ["run", "--arch", "brickwork", "--program", prog, "--field", "2,1", "--seed", "3"]
    assert main(args + ["--out", str(tr), "--secret", str(sec)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["reference_ok"] is True
    first = tr.read_bytes()
    assert main(args + ["--out", str(tr)]) == 0
    assert tr.read_bytes() == first
    capsys.readouterr()
    assert main(["replay", "--transcript", str(tr), "--secret", str(sec)]) == 0
    assert json.loads(capsys.readouterr().out)["replay_identical"] is True


def test_run_with_traps(tmp_path, capsys):
    prog = write(tmp_path, "id.json", {"arch": "brickwork", "n_wires": 2, "ops": []})
    assert main(["run", "--arch", "brickwork", "--program", prog, "--seed", "2", "--traps", "1",
                 "--field", "3,1", "--out", str(tmp_path / "t.jsonl")]) == 0
    assert json.loads(capsys.readouterr().out)["trap_ok"] is True


def test_open_ended_entangle_note(tmp_path, capsys):
    prog = write(tmp_path, "e.json", {"arch": "open-ended", "n_wires": 3, "ops": [{"gate": "entangle", "m": 2, "lam": 1}]})
    assert main(["run", "--arch", "open-ended", "--program", prog, "--field", "3,1", "--seed", "1",
                 "--out", str(tmp_path / "t.jsonl")]) == 0
    notes = json.loads(capsys.readouterr().out)["notes"]
    assert notes and notes[0]["clifford"] is True


def test_audit_insufficient_samples(tmp_path, capsys):
    prog = write(tmp_path, "h.json", H_PROGRAM)
    for s in range(3):
        main(["run", "--arch", "brickwork", "--program", prog, "--seed", str(s), "--out", str(tmp_path / f"t{s}.jsonl")])
    capsys.readouterr()
    assert main(["audit", str(tmp_path / "t*.jsonl")]) == 2
    assert "insufficient" in capsys.readouterr().err
    assert main(["audit", str(tmp_path / "none*.jsonl")]) == 2


def test_audit_many_transcripts(tmp_path, capsys):
    prog = write(tmp_path, "h.json", H_PROGRAM)
    with open(tmp_path / "all.jsonl", "w") as fh:
        for s in range(300):
            main(["run", "--arch", "brickwork", "--program", prog, "--seed", str(s), "--out", str(tmp_path / "one.jsonl")])
            fh.write((tmp_path / "one.jsonl").read_text())
    capsys.readouterr()
    assert main(["audit", str(tmp_path / "all.jsonl"), "--min-samples", "300"]) == 0
    assert "p=" in capsys.readouterr().out


def test_overhead_table(capsys, tmp_path):
    out = tmp_path / "o.json"
    assert main(["overhead", "--arch", "brickwork,open-ended", "--shape", "n=4", "--out", str(out)]) == 0
    text = capsys.readouterr().out
    assert text.splitlines()[0].split()[:2] == ["architecture", "qudits"]
    rows = json.loads(out.read_text())["rows"]
    assert any(r["qudits"] == 10 for r in rows if r["architecture"] == "brickwork unit")
    assert any(r["qudits"] == 24 for r in rows if r["architecture"] == "open-ended")
    assert main(["overhead", "--arch", "hexagonal"]) == 2
