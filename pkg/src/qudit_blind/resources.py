"""Declarative resource-state specs: vertices with initial states, diagonal edges."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from .galois import Field, field_from_json
from .gates import Gate, ge_gate  # noqa: F401  (ge_gate re-exported)

# init tags
PLUS = ("plus",)


def z_state(k: int) -> tuple:
    return ("z", int(k))


def x_state(k: int) -> tuple:
    return ("x", int(k))


def rotated_plus(grid) -> tuple:
    """D|0_X> with D's phases given as angle-grid integers."""
    return ("diag", tuple(int(g) for g in grid))


def input_slot(wire: int) -> tuple:
    return ("input", int(wire))


CLIENT = ("client",)  # server-view placeholder for a qudit whose state only the client knows


@dataclass(frozen=True)
class Edge:
    u: int
    v: int
    power: int = 1
    N: int | None = None  # GE(N) entangler when set

    def exponent_table(self, F: Field) -> np.ndarray:
        """Exponents e with entry (a, b) = omega_p^e for |a>_u |b>_v."""
        tab = F.chi_exponent_table
        if self.N is not None:
            tab = tab[:, F.mul_table[self.N]]
        return (self.power * tab) % F.p

    def to_json(self):
        out = {"u": self.u, "v": self.v, "power": self.power}
        if self.N is not None:
            out["N"] = self.N
        return out


@dataclass(frozen=True)
class ResourceSpec:
    field: Field
    inits: tuple  # one init tag per vertex id
    edges: tuple  # Edge records
    layout: dict = dc_field(default_factory=dict)  # vertex -> (row, col)
    hairs: dict = dc_field(default_factory=dict)  # vertex -> (h1, h2)
    ancillae: tuple = ()  # bridging slots usable by hide_graph: (ancilla, u, v)

    def __post_init__(self):
        n = len(self.inits)
        for e in self.edges:
            if e.u == e.v:
                raise ValueError(f"self-loop on vertex {e.u}")
            if not (0 <= e.u < n and 0 <= e.v < n):
                raise ValueError(f"edge {e} references a missing vertex")

    @property
    def n(self) -> int:
        return len(self.inits)

    def neighbors(self, v: int) -> list[tuple[int, Edge]]:
        return [(e.v if e.u == v else e.u, e) for e in self.edges if v in (e.u, e.v)]

    def adjacency(self) -> list[list[tuple[int, Edge]]]:
        adj = [[] for _ in range(self.n)]
        for e in self.edges:
            adj[e.u].append((e.v, e))
            adj[e.v].append((e.u, e))
        return adj

    def vertex_at(self, row: int, col: int) -> int:
        for v, rc in self.layout.items():
            if rc == (row, col):
                return v
        raise KeyError((row, col))

    def with_inits(self, inits) -> "ResourceSpec":
        return replace(self, inits=tuple(inits))

    def edge_counts(self) -> dict:
        out = {}
        for e in self.edges:
            key = f"GE({e.N})" if e.N is not None else f"CZ^{e.power % self.field.p}"
            out[key] = out.get(key, 0) + 1
        return out

    def to_json(self) -> dict:
        return {
            "field": self.field.to_json(),
            "inits": [list(t) if t[0] != "diag" else ["diag", list(t[1])] for t in self.inits],
            "edges": [e.to_json() for e in self.edges],
            "layout": {str(v): list(rc) for v, rc in sorted(self.layout.items())},
            "hairs": {str(v): list(h) for v, h in sorted(self.hairs.items())},
            "ancillae": [list(a) for a in self.ancillae],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ResourceSpec":
        inits = []
        for t in data["inits"]:
            inits.append(("diag", tuple(t[1])) if t[0] == "diag" else tuple(t))
        return cls(
            field_from_json(data["field"]),
            tuple(inits),
            tuple(Edge(e["u"], e["v"], e.get("power", 1), e.get("N")) for e in data["edges"]),
            {int(v): tuple(rc) for v, rc in data.get("layout", {}).items()},
            {int(v): tuple(h) for v, h in data.get("hairs", {}).items()},
            tuple(tuple(a) for a in data.get("ancillae", [])),
        )


def build_lattice(rows: int, cols: int, F: Field, vertical=None, horizontal_rows=None) -> ResourceSpec:
    """Grid vertices (row-major ids); horizontal chains on the given rows, listed vertical edges.

    ``vertical`` is an iterable of (col, row_top, power); each joins (row_top, col)
    with (row_top + 1, col).  Default: every vertical edge, power 1.
    """
    if rows < 1 or cols < 1:
        raise ValueError("lattice needs at least one row and one column")
    vid = lambda r, c: r * cols + c
    edges = []
    for r in range(rows) if horizontal_rows is None else horizontal_rows:
        for c in range(cols - 1):
            edges.append(Edge(vid(r, c), vid(r, c + 1)))
    if vertical is None:
        vertical = [(c, r, 1) for c in range(cols) for r in range(rows - 1)]
    for c, r, power in vertical:
        edges.append(Edge(vid(r, c), vid(r + 1, c), power))
    layout = {vid(r, c): (r, c) for r in range(rows) for c in range(cols)}
    return ResourceSpec(F, (PLUS,) * (rows * cols), tuple(edges), layout)


def build_cluster(rows: int, cols: int, F: Field) -> ResourceSpec:
    return build_lattice(rows, cols, F)


def build_open_ended(n: int, F: Field) -> ResourceSpec:
    """n x (n+2) grid without vertical edges in the output column."""
    if n < 2:
        raise ValueError("open-ended lattice needs n >= 2")
    cols = n + 2
    vertical = [(c, r, 1) for c in range(cols - 1) for r in range(n - 1)]
    return build_lattice(n, cols, F, vertical)


def brickwork_pairs(n: int, layer: int) -> list[int]:
    """Upper wire of each elementary unit in a layer (stagger of the qubit brickwork)."""
    if n == 2:
        return [0]
    return [i for i in range(layer % 2, n - 1, 2)]


def brickwork_vertical(n: int, depth: int, p: int, cz_only: bool = False) -> list[tuple[int, int, int]]:
    last = p - 1 if cz_only else -1
    out = []
    for layer in range(depth):
        base = 4 * layer
        for i in brickwork_pairs(n, layer):
            out.append((base + 2, i, 1))
            out.append((base + 4, i, last))
    return out


def build_brickwork(n_logical: int, depth: int, F: Field, cz_only: bool = False) -> ResourceSpec:
    """Interlocking 2x5 units; unit in layer L on wires (i, i+1) spans columns 4L..4L+4.

    The first vertical edge of a unit (column 4L+2) is CZ, the last one (column 4L+4,
    shared with the next layer's input column) is CZ^-1, or CZ^(p-1) with cz_only.
    """
    if n_logical < 2 or n_logical % 2:
        raise ValueError("brickwork needs an even number of logical wires >= 2")
    if depth < 1:
        raise ValueError("brickwork depth must be >= 1")
    cols = 4 * depth + 1
    return build_lattice(n_logical, cols, F, brickwork_vertical(n_logical, depth, F.p, cz_only))


def decorate(spec: ResourceSpec, vertices=None) -> ResourceSpec:
    """Attach a two-qudit hair (CZ chain) to every vertex, or to the listed ones."""
    targets = range(spec.n) if vertices is None else vertices
    inits = list(spec.inits)
    edges = list(spec.edges)
    hairs = dict(spec.hairs)
    for v in targets:
        h1, h2 = len(inits), len(inits) + 1
        inits += [PLUS, PLUS]
        edges += [Edge(v, h1), Edge(h1, h2)]
        hairs[v] = (h1, h2)
    return replace(spec, inits=tuple(inits), edges=tuple(edges), hairs=hairs)


def build_bridged_pair(length: int, F: Field) -> ResourceSpec:
    """Two chains of ``length`` vertices with one ancilla slot bridging every column."""
    top = list(range(length))
    bottom = list(range(length, 2 * length))
    anc = list(range(2 * length, 3 * length))
    edges = [Edge(top[c], top[c + 1]) for c in range(length - 1)]
    edges += [Edge(bottom[c], bottom[c + 1]) for c in range(length - 1)]
    slots = []
    for c in range(length):
        edges += [Edge(top[c], anc[c]), Edge(anc[c], bottom[c])]
        slots.append((anc[c], top[c], bottom[c]))
    layout = {}
    for c in range(length):
        layout[top[c]] = (0, c)
        layout[anc[c]] = (1, c)
        layout[bottom[c]] = (2, c)
    return ResourceSpec(F, (PLUS,) * (3 * length), tuple(edges), layout, {}, tuple(slots))


@dataclass(frozen=True)
class HiddenChoice:
    """Client-side record of which ancillae bridge and their secret basis values."""

    wanted: tuple
    values: dict


def hide_graph(template: ResourceSpec, wanted_edges, rng: np.random.Generator):
    """X-basis ancilla |k_X> where the bridge is wanted, Z-basis |k_Z> elsewhere; k uniform."""
    if not template.ancillae:
        raise ValueError("template has no ancilla slots")
    wanted = set()
    for item in wanted_edges:
        if isinstance(item, (tuple, list)):
            item = next(a for a, u, v in template.ancillae if {u, v} == set(item))
        wanted.add(int(item))
    inits = list(template.inits)
    values = {}
    for slot in template.ancillae:
        a = slot[0]
        k = int(rng.integers(template.field.d))
        values[a] = k
        inits[a] = x_state(k) if a in wanted else z_state(k)
    return template.with_inits(inits), HiddenChoice(tuple(sorted(wanted)), values)


def intrinsic_gate(G: Gate, F: Field) -> Gate:
    """G_I with <0_X|_1 G (|psi>_1 |0_X>_2) proportional to G_I |psi>_2."""
    mat = G.matrix
    if G.arity != 2 or np.max(np.abs(mat - np.diag(np.diag(mat)))) > 1e-12:
        raise ValueError("intrinsic gate needs a diagonal two-qudit entangler")
    d = F.d
    plus = np.ones(d) / np.sqrt(d)
    out = np.zeros((d, d), dtype=complex)
    for u in range(d):
        psi = np.zeros(d)
        psi[u] = 1
        state = (mat @ np.kron(psi, plus)).reshape(d, d)
        out[:, u] = plus.conj() @ state
    out *= np.sqrt(d)
    res = Gate(out, 1, d, f"intrinsic[{G.label}]")
    if not res.is_unitary(1e-9):
        raise ValueError("reconstructed intrinsic gate is not unitary; G is not a valid entangler")
    return res
