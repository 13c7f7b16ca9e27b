import numpy as np
import pytest

from qudit_blind.galois import make_field
from qudit_blind.gates import cz, equal_up_to_phase, ge_gate, hadamard, is_clifford, mult_gate, shift
from qudit_blind.resources import (
    ResourceSpec,
    brickwork_pairs,
    build_bridged_pair,
    build_brickwork,
    build_lattice,
    build_open_ended,
    decorate,
    hide_graph,
    intrinsic_gate,
)
from qudit_blind.simulator import init_state

F3 = make_field(3)


def test_cluster_edge_count():
    spec = build_lattice(3, 4, F3)
    assert spec.n == 12
    assert len(spec.edges) == 3 * 3 + 2 * 4


def test_open_ended_has_no_output_verticals():
    n = 4
    spec = build_open_ended(n, F3)
    assert spec.n == n * (n + 2)
    last = n + 1
    for e in spec.edges:
        (ru, cu), (rv, cv) = spec.layout[e.u], spec.layout[e.v]
        if cu == cv:
            assert cu != last
    with pytest.raises(ValueError):
        build_open_ended(1, F3)


def test_brickwork_unit():
    spec = build_brickwork(2, 1, F3)
    assert spec.n == 10
    assert len(spec.edges) == 10
    verticals = sorted((spec.layout[e.u][1], e.power % 3) for e in spec.edges if spec.layout[e.u][0] != spec.layout[e.v][0])
    assert verticals == [(2, 1), (4, 2)]


def test_brickwork_stagger():
    assert brickwork_pairs(2, 0) == brickwork_pairs(2, 1) == [0]
    assert brickwork_pairs(6, 0) == [0, 2, 4]
    assert brickwork_pairs(6, 1) == [1, 3]
    spec = build_brickwork(4, 2, F3)
    assert spec.n == 4 * 9
    with pytest.raises(ValueError):
        build_brickwork(3, 1, F3)


def test_cz_only_matches_inverse_power():
    a = build_brickwork(2, 1, F3, cz_only=True)
    b = build_brickwork(2, 1, F3)
    assert [e.exponent_table(F3).tolist() for e in a.edges] == [e.exponent_table(F3).tolist() for e in b.edges]


def test_decorate():
    spec = decorate(build_lattice(2, 2, F3))
    assert spec.n == 4 + 8
    assert len(spec.hairs) == 4
    for v, (h1, h2) in spec.hairs.items():
        nbrs = {w for w, _ in spec.neighbors(h1)}
        assert nbrs == {v, h2}


def test_self_loop_rejected():
    from qudit_blind.resources import PLUS, Edge

    with pytest.raises(ValueError):
        ResourceSpec(F3, (PLUS, PLUS), (Edge(1, 1),))
    with pytest.raises(ValueError):
        ResourceSpec(F3, (PLUS, PLUS), (Edge(0, 2),))


def test_json_round_trip():
    spec = decorate(build_brickwork(2, 1, make_field(2, 2)), [0, 3])
    again = ResourceSpec.from_json(spec.to_json())
    assert again.to_json() == spec.to_json()


def test_intrinsic_gate_of_cz_is_hadamard(small_field):
    F = small_field
    assert equal_up_to_phase(intrinsic_gate(cz(F), F), hadamard(F))


def test_intrinsic_ge_gates_are_clifford(small_field):
    F = small_field
    for N in range(1, F.d):
        G = intrinsic_gate(ge_gate(N, F), F)
        assert is_clifford(G, F, 1)
        # GE(N) differs from CZ by M(N) on the second qudit: G_I = M(N)^-1 H, up to phase
        want = mult_gate(int(F.inv_table[N]), F).matrix @ hadamard(F).matrix
        assert equal_up_to_phase(G.matrix, want)


def test_intrinsic_rejects_non_diagonal():
    F = make_field(2)
    from qudit_blind.gates import tensor

    with pytest.raises(ValueError):
        intrinsic_gate(tensor(shift(1, F), shift(0, F)), F)


def test_hide_graph_server_view_is_hidden():
    F = make_field(3)
    tmpl = build_bridged_pair(2, F)
    rng = np.random.default_rng(0)
    spec, choice = hide_graph(tmpl, [(0, 2)], rng)
    kinds = {a: spec.inits[a][0] for a, _, _ in tmpl.ancillae}
    assert kinds[4] == "x" and kinds[5] == "z"
    assert set(choice.values) == {4, 5}
    assert abs(np.linalg.norm(init_state(spec).vector()) - 1) < 1e-12
    with pytest.raises(ValueError):
        hide_graph(build_lattice(2, 2, F), [], rng)
