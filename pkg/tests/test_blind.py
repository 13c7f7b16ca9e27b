import json

import numpy as np
import pytest

from qudit_blind import blind
from qudit_blind.galois import make_field
from qudit_blind.gates import angle_grid_size
from qudit_blind.mbqc import shift_grid
from qudit_blind.resources import CLIENT, build_brickwork

F2, F3 = make_field(2), make_field(3)


def run(arch, ops, n, inputs, F=F3, depth=None, seed=0, **kw):
    return blind.run_protocol(arch, blind.Program(arch, n, ops, depth, inputs), F, seed, **kw)


# classical oracles: programs that map basis states to basis states


@pytest.mark.parametrize("F", [F2, F3, make_field(2, 2)], ids=lambda F: f"d{F.d}")
def test_brickwork_cx_truth_table(F):
    for a in range(F.d):
        for b in range(F.d):
            res = run("brickwork", [{"gate": "cx", "layer": 0, "wire": 0}], 2, [a, b], F, seed=a * F.d + b)
            assert res.outputs == [a, int(F.add_table[b, a])]
            assert res.reference_ok


def test_brickwork_diag_keeps_basis_states():
    ops = [{"gate": "diag", "layer": 0, "wire": 1, "grid": [0, 4, 7]}, {"gate": "identity", "layer": 1, "wire": 0}]
    for seed in range(5):
        assert run("brickwork", ops, 2, [2, 1], seed=seed).outputs == [2, 1]


def test_open_ended_mirror():
    assert run("open-ended", [{"gate": "mirror"}], 2, [1, 2]).outputs == [2, 1]
    # odd n: reversal followed by M(-1) on every wire
    assert run("open-ended", [{"gate": "mirror"}], 3, [1, 2, 0]).outputs == [0, 1, 2]
    F5 = make_field(5)
    assert run("open-ended", [{"gate": "mirror"}], 3, [1, 2, 3], F5).outputs == [2, 3, 4]


def test_decorated_two_hadamards():
    # three columns: two teleports, H^2 = M(-1)
    for seed in range(4):
        assert run("decorated", [], 2, [1, 2], depth=3, seed=seed).outputs == [2, 1]


# protocol mechanics


def test_client_instruct_formula():
    F = F3
    N = angle_grid_size(F)
    rng = np.random.default_rng(2)
    for _ in range(50):
        desired = rng.integers(0, N, 3)
        pad = np.concatenate([[0], rng.integers(0, N, 2)])
        r, x = int(rng.integers(3)), int(rng.integers(3))
        got = blind.client_instruct(desired, pad, r, x, F)
        want = np.asarray(shift_grid(desired, x, F)) + pad + np.array([0, 3, 6]) * r
        want = (want - want[0]) % N
        assert list(got) == list(want)


def test_angle_set():
    A = blind.AngleSet(F2)
    assert A.size == 8
    assert list(A.to_grid([0, np.pi / 4, 2 * np.pi])) == [0, 1, 0]
    assert not A.contains([0.1])
    with pytest.raises(ValueError):
        A.to_grid([0.3])


def test_outcome_pad_grid_is_z_phase():
    F = make_field(3, 2)
    for r in range(F.d):
        g = blind.outcome_pad_grid(r, F)
        want = np.exp(2j * np.pi * F.chi_exponent_table[r] / 3)
        assert np.allclose(np.exp(2j * np.pi * g / 9), want)


def test_pads_first_entry_zero_and_server_view_hidden():
    spec = build_brickwork(2, 1, F3)
    prepared, secret = blind.client_prepare(spec, np.random.default_rng(0))
    assert all(g[0] == 0 for g in secret.pads.values())
    assert all(tag == CLIENT for tag in blind.server_view(prepared).inits)
    again = blind.ClientSecret.from_json(json.loads(json.dumps(secret.to_json())))
    assert again.pads == secret.pads and again.r == secret.r


def test_instructions_on_grid_and_transcript_round_trip():
    res = run("brickwork", [{"gate": "hadamard", "layer": 0, "wire": 0}], 2, [0, 1], seed=9)
    tr = res.transcript
    A = blind.AngleSet(F3)
    for ev in tr.instructions():
        if ev["basis"] == "x":
            assert ev["grid"][0] == 0
            assert A.contains(ev["angles"])
    text = tr.to_jsonl()
    back = blind.ProtocolTranscript.from_jsonl(text)
    assert back.to_jsonl() == text
    with pytest.raises(ValueError):
        blind.ProtocolTranscript.from_jsonl(text.split("\n", 1)[1])


def test_same_seed_same_transcript():
    ops = [{"gate": "hadamard", "layer": 0, "wire": 1}]
    a = run("brickwork", ops, 2, [0, 0], seed=4).transcript.to_jsonl()
    b = run("brickwork", ops, 2, [0, 0], seed=4).transcript.to_jsonl()
    c = run("brickwork", ops, 2, [0, 0], seed=5).transcript.to_jsonl()
    assert a == b != c


def test_replay_reproduces_outcomes():
    res = run("open-ended", [{"gate": "diag_in", "row": 0, "grid": [0, 2, 5]}], 2, [1, 0], seed=3)
    assert blind.replay(res.transcript, res.secret, res.prepared, res.pattern) == res.transcript.outcomes()


def test_unblinded_mode_matches():
    ops = [{"gate": "cx", "layer": 0, "wire": 0}]
    assert run("brickwork", ops, 2, [2, 2], blind=False).outputs == [2, 1]


@pytest.mark.parametrize("arch", blind.ARCHITECTURES)
def test_random_programs_match_reference(arch):
    rng = np.random.default_rng(8)
    for i in range(4):
        prog = blind.random_program(arch, F2, rng, 2, 2)
        assert blind.run_protocol(arch, prog, F2, i).reference_ok


def test_traps_catch_a_flipped_outcome():
    prog = blind.Program("brickwork", 2, [{"gate": "identity", "layer": 0, "wire": 0}], inputs=[1, 0])
    prog = blind.insert_traps(prog, 1, np.random.default_rng(0), F3)
    honest = blind.run_protocol("brickwork", prog, F3, 1, check_reference=False)
    assert honest.trap_ok is True
    w = next(iter(prog.traps))
    site = honest.pattern.final_locations()[w]
    j = next(i for i, ev in enumerate(honest.transcript.instructions()) if ev["site"] == site)
    bad = blind.run_protocol("brickwork", prog, F3, 1, check_reference=False,
                             tamper=lambda i, req, k: (k + 1) % 3 if i == j else k)
    assert bad.trap_ok is False


def test_program_errors():
    with pytest.raises(blind.ProgramMismatch):
        run("brickwork", [{"gate": "toffoli", "layer": 0, "wire": 0}], 2, [0, 0])
    with pytest.raises(blind.ProgramMismatch):
        run("brickwork", [{"gate": "diag", "layer": 0, "wire": 0, "grid": [0, 1]}], 2, [0, 0])
    with pytest.raises(blind.ProgramMismatch):
        blind.run_protocol("decorated", blind.Program("brickwork", 2, []), F3, 0)
    with pytest.raises(blind.ProgramMismatch):
        blind.Program.from_json([{"gate": "cx"}])
    prog = blind.Program("open-ended", 3, [{"gate": "entangle", "m": 2}], label="x")
    assert blind.Program.from_json(json.loads(json.dumps(prog.to_json()))) == prog


def test_audit_needs_samples_and_flags_constant_transcripts():
    groups, _ = blind.audit_programs(F2, {"H": blind.h_program(F2)}, 20, 0)
    with pytest.raises(blind.InsufficientSamples):
        blind.blindness_audit(groups, 0.01, min_samples=1000)
    same = [groups["H"][0]] * 200
    assert not blind.blindness_audit({"same": same}, 0.01, min_samples=200)["passed"]


def test_audit_h_vs_t_small():
    _, report = blind.audit_programs(F2, {"H": blind.h_program(F2), "T": blind.t_program(F2)}, 1500, 1)
    assert report["passed"]
    assert any(t["test"].startswith("two") for t in report["tests"])


def test_overhead_brickwork_unit():
    rows = {r["architecture"]: r for r in blind.overhead_report("brickwork", {"n": 4, "depth": 2}, F3)}
    assert rows["brickwork unit"]["qudits"] == 10 and rows["brickwork unit"]["entanglers"] == 10
    assert rows["brickwork unit"]["measurements"] == 10
    assert rows["brickwork"]["qudits"] == 4 * 9
    with pytest.raises(ValueError):
        blind.overhead_report("hexagonal", {}, F3)
