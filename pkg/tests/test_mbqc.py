import itertools
import json

import numpy as np
import pytest

from qudit_blind.galois import make_field
from qudit_blind.gates import cz, equal_up_to_phase, hadamard, mult_gate, pauli, pauli_string, phase
from qudit_blind.mbqc import (
    Circuit,
    DecoratedProgram,
    corrected_residual,
    grid_gate,
    interpret_output,
    layer_operator,
    mirror_target,
    normalize_grid,
    pattern_brickwork,
    pattern_decorated,
    propagate_frame,
    repeated,
    shift_grid,
)
from qudit_blind.resources import build_lattice, decorate
from qudit_blind.simulator import enumerate_branches, run_branch


def _conj_ok(G, before, after, F, n=1):
    P = pauli_string(*zip(*before), F).matrix if n > 1 else pauli(*before[0], F).matrix
    Q = pauli_string(*zip(*after), F).matrix if n > 1 else pauli(*after[0], F).matrix
    return equal_up_to_phase(G @ P @ G.conj().T, Q, 1e-10)


def test_frame_through_single_qudit_cliffords(small_field):
    F = small_field
    H = hadamard(F).matrix
    for x, z in itertools.product(range(F.d), repeat=2):
        assert _conj_ok(H, [(x, z)], [propagate_frame((x, z), "H", F)], F)
        for lam in range(1, F.d):
            M = mult_gate(lam, F).matrix
            assert _conj_ok(M, [(x, z)], [propagate_frame((x, z), "M", F, lam=lam)], F)
        if F.p != 2:
            for lam in range(1, F.d):
                S = phase(lam, F).matrix
                assert _conj_ok(S, [(x, z)], [propagate_frame((x, z), "S", F, lam=lam)], F)


def test_frame_through_cz(small_field):
    F = small_field
    C = cz(F).matrix
    rng = np.random.default_rng(0)
    for _ in range(20):
        a, b = tuple(rng.integers(F.d, size=2)), tuple(rng.integers(F.d, size=2))
        fa, fb = propagate_frame(a, "CZ", F, other=b)
        assert _conj_ok(C, [a, b], [fa, fb], F, n=2)


def test_unknown_frame_kind():
    with pytest.raises(ValueError):
        propagate_frame((0, 0), "T", make_field(3))


def test_shift_grid_is_conjugation(small_field):
    F = small_field
    rng = np.random.default_rng(1)
    grid = rng.integers(0, 8 if F.p == 2 else 9, F.d)
    for x in range(F.d):
        X = pauli(x, 0, F).matrix
        assert np.allclose(X @ grid_gate(grid, F) @ X.conj().T, grid_gate(shift_grid(grid, x, F), F))


def test_normalize_grid():
    F = make_field(3)
    assert normalize_grid([4, 5, 13], F) == (0, 1, 0)


def test_interpret_output():
    F = make_field(5)
    assert interpret_output([3, 0], [(1, 4), (2, 0)], F) == [2, 3]


def test_circuit_matrix_matches_kron():
    F = make_field(3)
    H = hadamard(F).matrix
    S = phase(1, F).matrix
    c = Circuit(F, 2).one(0, H).cz(0, 1).one(1, S)
    want = np.kron(np.eye(3), S) @ cz(F).matrix @ np.kron(H, np.eye(3))
    assert np.allclose(c.matrix(), want)


@pytest.mark.parametrize("p", [2, 3, 5])
def test_two_wire_mirror_is_swap(p):
    F = make_field(p)
    swap = np.zeros((p * p, p * p))
    for a, b in itertools.product(range(p), repeat=2):
        swap[b * p + a, a * p + b] = 1
    assert equal_up_to_phase(repeated(layer_operator(F, 2), 3).matrix(), swap, 1e-10)
    assert np.allclose(mirror_target(F, 2).matrix(), swap)


def _cx(F):
    d = F.d
    out = np.zeros((d * d, d * d))
    for a, b in itertools.product(range(d), repeat=2):
        out[a * d + int(F.add_table[b, a]), a * d + b] = 1
    return out


@pytest.mark.parametrize("pm", [(2, 1), (3, 1)], ids=str)
def test_brickwork_gadgets_every_branch(pm):
    F = make_field(*pm)
    H, eye = hadamard(F).matrix, np.eye(F.d)
    targets = {"identity": np.eye(F.d**2), "hadamard": np.kron(H, eye), "cx": _cx(F)}
    for kind, want in targets.items():
        spec, pat = pattern_brickwork(kind, F, 0)
        res = enumerate_branches(spec, pat)
        assert np.isclose(sum(r.probability for r in res), 1)
        for r in res:
            assert equal_up_to_phase(corrected_residual(r, F).matrix, want, 1e-9)


def test_brickwork_diag_sampled():
    F = make_field(5)
    grid = [0, 1, 4, 2, 3]
    spec, pat = pattern_brickwork("diag", F, 1, grid)
    want = np.kron(np.eye(5), grid_gate(grid, F))
    rng = np.random.default_rng(4)
    for _ in range(10):
        assert equal_up_to_phase(corrected_residual(run_branch(spec, pat, rng=rng), F).matrix, want, 1e-9)


def test_pattern_json_is_serializable():
    F = make_field(3)
    _, pat = pattern_brickwork("cx", F)
    json.dumps(pat.to_json())


def test_decorated_program_validation():
    with pytest.raises(ValueError):
        DecoratedProgram(2, 4, couplings={(0, 1), (0, 2)}).validate()
    with pytest.raises(ValueError):
        DecoratedProgram(2, 4, couplings={(1, 1)}).validate()
    with pytest.raises(ValueError):
        DecoratedProgram(2, 4, couplings={(0, 3)}).validate()


def test_hair_pattern_requires_hair():
    F = make_field(3)
    spec = decorate(build_lattice(1, 2, F), [0])
    with pytest.raises(ValueError):
        pattern_decorated("sim_Z", 1, spec)
    with pytest.raises(ValueError):
        pattern_decorated("sim_Y", 0, spec)
