"""Adaptive measurement patterns with Pauli byproduct frames.

A pattern is a list of effective steps (teleport along a wire, couple two
wires through a vertical edge, delete a vertex, bridge two wires through a
Y-measured vertex, read out a wire).  A :class:`FrameTracker` turns the steps
into physical measurement requests one at a time, adapting rotated-X angles to
the current frame, and updates the frames from the reported outcomes.

Frames are stored as field-element indices (x, z) meaning the actual logical
state is Z(z) X(x) applied to the ideal one.  Diagonal gates are given as
integer phase vectors on the hiding-angle grid (see ``gates.angle_grid_size``).
"""

from __future__ import annotations

import copy
from dataclasses import dataclass, field as dc_field

import numpy as np

from .galois import Field
from .gates import (
    Gate,
    angle_grid_size,
    cz,
    grid_to_angles,
    hadamard,
    mult_gate,
    phase_grid,
)
from .resources import Edge, ResourceSpec, brickwork_pairs, brickwork_vertical, build_lattice, decorate, input_slot
from .simulator import Basis, Request, run_branch

# S(1)^k on both wires is the local by-product of a Y-measured bridge vertex
BRIDGE_LOCAL_POWER = 1


# -- small field helpers ----------------------------------------------------------------


def _add(F, a, b):
    return int(F.add_table[a, b])


def _sub(F, a, b):
    return int(F.add_table[a, F.neg_table[b]])


def _mul(F, a, b):
    return int(F.mul_table[a, b])


def _scal(F, c: int):
    """Integer c embedded in the prime subfield."""
    return F.from_int(c)


def normalize_grid(grid, F: Field) -> tuple:
    N = angle_grid_size(F)
    g = np.asarray(grid, dtype=np.int64) % N
    return tuple(int(v) for v in (g - g[0]) % N)


def shift_grid(grid, x: int, F: Field) -> tuple:
    """Phases of X(x) D X(-x): entry v becomes grid[v - x]."""
    grid = np.asarray(grid, dtype=np.int64)
    idx = F.add_table[np.arange(F.d), F.neg_table[x]]
    return tuple(int(v) for v in grid[idx])


def identity_grid(F: Field) -> tuple:
    return (0,) * F.d


def grid_gate(grid, F: Field) -> np.ndarray:
    return np.diag(np.exp(1j * grid_to_angles(np.asarray(grid), F)))


# -- frame algebra ------------------------------------------------------------------------


@dataclass
class ByproductFrame:
    x: int = 0
    z: int = 0
    phase: complex = 1.0  # tracked for completeness; fidelity checks ignore it

    def as_tuple(self):
        return (self.x, self.z)


def propagate_frame(frame, kind: str, F: Field, other=None, power: int = 1, lam: int = 1):
    """Push a byproduct Z(z)X(x) through a Clifford or diagonal gate.

    kind: 'H', 'CZ' (``other`` is the partner frame, both returned), 'diag'
    (returns the frame and the x shift to apply to the upcoming diagonal),
    'M' (multiplication by ``lam``), 'S' (phase gate S(lam)).
    """
    x, z = frame
    if kind == "H":
        return (int(F.neg_table[z]), x)
    if kind == "CZ":
        ox, oz = other
        c = _scal(F, power)
        return (x, _add(F, z, _mul(F, c, ox))), (ox, _add(F, oz, _mul(F, c, x)))
    if kind == "diag":
        return (x, z), x
    if kind == "M":
        return (_mul(F, lam, x), _mul(F, int(F.inv_table[lam]), z))
    if kind == "S":
        return (x, _add(F, z, _mul(F, lam, x)))
    raise ValueError(f"unsupported gate kind {kind!r}")


def interpret_output(outcomes, frames, F: Field) -> list[int]:
    """Undo the X part of each frame on computational-basis readouts."""
    return [_sub(F, int(y), int(fr[0])) for y, fr in zip(outcomes, frames)]


# -- steps --------------------------------------------------------------------------------


@dataclass(frozen=True)
class Teleport:
    src: int
    dst: int
    wire: int
    gate: tuple | None = None  # diagonal applied before the H of this step
    hairs: tuple | None = None


@dataclass(frozen=True)
class Couple:
    wire_a: int
    wire_b: int
    power: int = 1


@dataclass(frozen=True)
class Delete:
    vertex: int
    neighbors: tuple  # (vertex, edge power) pairs
    hairs: tuple | None = None


@dataclass(frozen=True)
class Bridge:
    vertex: int
    wire_a: int
    wire_b: int
    hairs: tuple | None = None


@dataclass(frozen=True)
class Readout:
    vertex: int
    wire: int


@dataclass(frozen=True)
class TrapCheck:
    vertex: int
    hairs: tuple


@dataclass(frozen=True)
class HairMeasure:
    """Stand-alone simulated measurement of a vertex through its hair."""

    vertex: int
    hairs: tuple
    kind: str  # 'x' or 'z'
    gate: tuple | None = None


class FrameTracker:
    """Mutable execution state of a pattern (the client's classical side)."""

    def __init__(self, pattern: "MeasurementPattern", initial_frames=None):
        self.pattern = pattern
        self.F = pattern.field
        self.step = 0
        self.queue: list[Request] = []
        self.order: list[int] = []
        self.sub: dict[int, int] = {}
        self.frames = {w: [0, 0] for w in range(pattern.n_wires)}
        if initial_frames:
            for w, (x, z) in initial_frames.items():
                self.frames[w] = [int(x), int(z)]
        self.loc = dict(pattern.inputs)
        self.pending: dict[int, list[int]] = {}
        self.measured: set[int] = set()
        self.readouts: dict[int, int] = {}
        self.corrected: dict[int, int] = {}
        self.traps: dict[int, int] = {}
        self.effective: list[int] = []  # effective outcome per step that has one
        self.log: list[tuple] = []

    def copy(self) -> "FrameTracker":
        new = copy.copy(self)
        new.queue = list(self.queue)
        new.order = list(self.order)
        new.sub = dict(self.sub)
        new.frames = {w: list(v) for w, v in self.frames.items()}
        new.loc = dict(self.loc)
        new.pending = {v: list(p) for v, p in self.pending.items()}
        new.measured = set(self.measured)
        new.readouts = dict(self.readouts)
        new.corrected = dict(self.corrected)
        new.traps = dict(self.traps)
        new.effective = list(self.effective)
        new.log = list(self.log)
        return new

    # frame bookkeeping
    def _pend(self, v):
        return self.pending.setdefault(v, [0, 0])

    def _wire_at(self, v):
        for w, u in self.loc.items():
            if u == v:
                return w
        return None

    def _add_z(self, v, amount):
        w = self._wire_at(v)
        if w is not None:
            self.frames[w][1] = _add(self.F, self.frames[w][1], amount)
        elif v not in self.measured:
            p = self._pend(v)
            p[1] = _add(self.F, p[1], amount)

    def _rx(self, v, grid) -> Request:
        grid = normalize_grid(grid, self.F)
        return Request(v, Basis.x(grid_to_angles(np.array(grid), self.F)), grid)

    def _requests(self, st) -> list[Request]:
        F = self.F
        zero = identity_grid(F)
        s_dag = tuple(-g for g in phase_grid(1, F))
        y_grid = tuple(phase_grid(1, F))
        if isinstance(st, Teleport):
            if self.loc[st.wire] != st.src:
                raise RuntimeError(f"wire {st.wire} is at {self.loc[st.wire]}, not {st.src}")
            gate = st.gate if st.gate is not None else zero
            basis = shift_grid([-g for g in gate], self.frames[st.wire][0], F)
            reqs = [self._rx(st.src, basis)]
            if st.hairs:
                reqs += [self._rx(st.hairs[0], zero), self._rx(st.hairs[1], zero)]
            return reqs
        if isinstance(st, Delete):
            if st.hairs:
                return [self._rx(st.vertex, s_dag), self._rx(st.hairs[0], s_dag), self._rx(st.hairs[1], s_dag)]
            return [Request(st.vertex, Basis.z(), None)]
        if isinstance(st, Bridge):
            if st.hairs:
                return [self._rx(st.vertex, y_grid), self._rx(st.hairs[0], zero), self._rx(st.hairs[1], zero)]
            return [self._rx(st.vertex, y_grid)]
        if isinstance(st, Readout):
            return [Request(st.vertex, Basis.z(), None)]
        if isinstance(st, TrapCheck):
            return [self._rx(st.vertex, zero), self._rx(st.hairs[0], zero), self._rx(st.hairs[1], zero)]
        if isinstance(st, HairMeasure):
            if st.kind == "z":
                return [self._rx(st.vertex, s_dag), self._rx(st.hairs[0], s_dag), self._rx(st.hairs[1], s_dag)]
            gate = st.gate if st.gate is not None else zero
            return [self._rx(st.vertex, [-g for g in gate]), self._rx(st.hairs[0], zero), self._rx(st.hairs[1], zero)]
        return []  # Couple has no measurement

    def next_request(self) -> Request | None:
        steps = self.pattern.steps
        while not self.queue:
            if self.step >= len(steps):
                return None
            st = steps[self.step]
            reqs = self._requests(st)
            if not reqs:
                self._apply(st, [])
                self.step += 1
                continue
            # hairs first: the vertex joins the register only when its own turn comes
            self.order = [r.vertex for r in reqs]
            self.queue = reqs[::-1] if len(reqs) == 3 else reqs
            self.sub = {}
        return self.queue[0]

    def record(self, outcome: int) -> None:
        req = self.queue.pop(0)
        self.log.append((req.vertex, req.grid, int(outcome)))
        self.sub[req.vertex] = int(outcome)
        self.measured.add(req.vertex)
        if not self.queue:
            self._apply(self.pattern.steps[self.step], [self.sub[v] for v in self.order])
            self.step += 1
            self.sub = {}

    def _apply(self, st, ks) -> None:
        F = self.F
        if isinstance(st, Couple):
            (self.frames[st.wire_a][:], self.frames[st.wire_b][:]) = propagate_frame(
                tuple(self.frames[st.wire_a]), "CZ", F, tuple(self.frames[st.wire_b]), st.power
            )
            return
        if isinstance(st, Teleport):
            s = _sub(F, ks[0], ks[2]) if st.hairs else ks[0]
            x, z = self.frames[st.wire]
            nx, nz = _sub(F, s, z), x
            px, pz = self.pending.pop(st.dst, [0, 0])
            self.frames[st.wire] = [_add(F, nx, px), _add(F, nz, pz)]
            self.loc[st.wire] = st.dst
            self.effective.append(s)
            return
        if isinstance(st, Delete):
            j = _sub(F, ks[1], ks[2]) if st.hairs else ks[0]
            px, _ = self.pending.pop(st.vertex, [0, 0])
            j = _sub(F, j, px)
            for u, power in st.neighbors:
                self._add_z(u, _mul(F, _scal(F, power), j))
            self.effective.append(j)
            return
        if isinstance(st, Bridge):
            s = _sub(F, ks[0], ks[2]) if st.hairs else ks[0]
            px, pz = self.pending.pop(st.vertex, [0, 0])
            if px:
                raise RuntimeError("bridge vertex carries an X byproduct")
            k = _sub(F, s, pz)
            a, b = self.frames[st.wire_a], self.frames[st.wire_b]
            lam = _scal(F, BRIDGE_LOCAL_POWER)
            za = _add(F, _add(F, _sub(F, a[1], k), b[0]), _mul(F, lam, a[0]))
            zb = _add(F, _add(F, _sub(F, b[1], k), a[0]), _mul(F, lam, b[0]))
            a[1], b[1] = za, zb
            self.effective.append(k)
            return
        if isinstance(st, Readout):
            self.readouts[st.wire] = ks[0]
            self.corrected[st.wire] = _sub(F, ks[0], self.frames[st.wire][0])
            return
        if isinstance(st, TrapCheck):
            s = _sub(F, ks[0], ks[2])
            _, pz = self.pending.pop(st.vertex, [0, 0])
            self.traps[st.vertex] = _sub(F, s, pz)
            return
        if isinstance(st, HairMeasure):
            self.effective.append(_sub(F, ks[1], ks[2]) if st.kind == "z" else _sub(F, ks[0], ks[2]))
            return
        raise TypeError(f"unknown step {st!r}")

    def outputs(self) -> list[int]:
        if self.pattern.readout:
            return []
        return [self.loc[w] for w in range(self.pattern.n_wires)]

    def final_frames(self) -> list[tuple[int, int]]:
        return [tuple(self.frames[w]) for w in range(self.pattern.n_wires)]


@dataclass
class MeasurementPattern:
    field: Field
    steps: list
    n_wires: int
    inputs: dict  # wire -> input vertex
    ideal: "Circuit | None" = None
    label: str = ""
    readout: bool = False
    meta: dict = dc_field(default_factory=dict)

    def start(self, initial_frames=None) -> FrameTracker:
        return FrameTracker(self, initial_frames)

    def with_readout(self) -> "MeasurementPattern":
        """Same pattern followed by computational-basis readout of every wire."""
        outs = self.final_locations()
        steps = list(self.steps) + [Readout(outs[w], w) for w in range(self.n_wires)]
        return MeasurementPattern(self.field, steps, self.n_wires, self.inputs, self.ideal, self.label, True, dict(self.meta))

    def final_locations(self) -> list[int]:
        loc = dict(self.inputs)
        for st in self.steps:
            if isinstance(st, Teleport):
                loc[st.wire] = st.dst
        return [loc[w] for w in range(self.n_wires)]

    def measured_vertices(self) -> list[int]:
        out = []
        for st in self.steps:
            if isinstance(st, Teleport):
                out.append(st.src)
                out += list(st.hairs or ())
            elif isinstance(st, (Delete, Bridge, TrapCheck, HairMeasure)):
                out.append(st.vertex)
                out += list(st.hairs or ())
            elif isinstance(st, Readout):
                out.append(st.vertex)
        return out

    def to_json(self) -> list[dict]:
        recs = []
        for st in self.steps:
            rec = {"step": type(st).__name__}
            for k, v in st.__dict__.items():
                rec[k] = _plain(v)
            recs.append(rec)
        return recs


def _plain(v):
    if isinstance(v, (tuple, list, np.ndarray)):
        return [_plain(x) for x in v]
    return v.item() if isinstance(v, np.generic) else v


def corrected_residual(result, F: Field) -> Gate:
    """Strip the final Pauli frames from a branch residual."""
    from .gates import pauli_string

    frames = result.run.final_frames()
    xs = [f[0] for f in frames]
    zs = [f[1] for f in frames]
    P = pauli_string(xs, zs, F).matrix
    return Gate(P.conj().T @ result.residual.matrix, result.residual.arity, F.d, "corrected")


# -- ideal circuits -----------------------------------------------------------------------


@dataclass
class Circuit:
    """Sequence of wire operations used as the reference for patterns."""

    field: Field
    n: int
    ops: list = dc_field(default_factory=list)  # ('1', wire, matrix) | ('cz', a, b, power) | ('2', a, b, matrix)

    def one(self, wire: int, mat) -> "Circuit":
        self.ops.append(("1", wire, np.asarray(mat, dtype=complex)))
        return self

    def cz(self, a: int, b: int, power: int = 1) -> "Circuit":
        self.ops.append(("cz", a, b, power))
        return self

    def two(self, a: int, b: int, mat) -> "Circuit":
        self.ops.append(("2", a, b, np.asarray(mat, dtype=complex)))
        return self

    def extend(self, other: "Circuit") -> "Circuit":
        self.ops += other.ops
        return self

    def apply(self, tensor: np.ndarray) -> np.ndarray:
        """Act on a (batch, d, ..., d) tensor."""
        d = self.field.d
        for op in self.ops:
            if op[0] == "1":
                _, w, U = op
                tensor = np.moveaxis(np.tensordot(U, tensor, axes=([1], [w + 1])), 0, w + 1)
            elif op[0] == "cz":
                _, a, b, power = op
                tab = np.exp(2j * np.pi * (power * self.field.chi_exponent_table % self.field.p) / self.field.p)
                shape = [1] * tensor.ndim
                shape[a + 1] = d
                shape[b + 1] = d
                tensor = tensor * (tab if a < b else tab.T).reshape(shape)
            else:
                _, a, b, U = op
                U4 = U.reshape(d, d, d, d)
                tensor = np.tensordot(U4, tensor, axes=([2, 3], [a + 1, b + 1]))
                tensor = np.moveaxis(tensor, [0, 1], [a + 1, b + 1])
        return tensor

    def matrix(self) -> np.ndarray:
        d, n = self.field.d, self.n
        eye = np.eye(d**n, dtype=complex).reshape((d**n,) + (d,) * n)
        return self.apply(eye).reshape(d**n, d**n).T

    def gate(self) -> Gate:
        return Gate(self.matrix(), self.n, self.field.d, "circuit")


# -- lattice patterns (brickwork, open-ended) -----------------------------------------------


def lattice_pattern(F: Field, n_rows: int, n_cols: int, vertical, gates: dict, label: str = "",
                    hairs: dict | None = None) -> tuple[ResourceSpec, MeasurementPattern]:
    """Wires along the rows, all non-output columns measured column by column.

    ``vertical``: (col, upper row, power) edges.  ``gates[(row, col)]``: diagonal
    (grid phases) applied before the H of that teleport.  Each column therefore
    contributes (H D) on every wire after the CZ couplings sitting in it.
    """
    spec = build_lattice(n_rows, n_cols, F, vertical)
    vid = lambda r, c: r * n_cols + c
    inits = list(spec.inits)
    for r in range(n_rows):
        inits[vid(r, 0)] = input_slot(r)
    spec = spec.with_inits(inits)
    steps = []
    circ = Circuit(F, n_rows)
    H = hadamard(F).matrix
    by_col = {}
    for c, r, power in vertical:
        by_col.setdefault(c, []).append((r, power))
    for c in range(n_cols):
        for r, power in by_col.get(c, []):
            steps.append(Couple(r, r + 1, power))
            circ.cz(r, r + 1, power)
        if c == n_cols - 1:
            break
        for r in range(n_rows):
            g = gates.get((r, c))
            steps.append(Teleport(vid(r, c), vid(r, c + 1), r, None if g is None else tuple(g)))
            circ.one(r, H @ grid_gate(g, F) if g is not None else H)
    pattern = MeasurementPattern(F, steps, n_rows, {r: vid(r, 0) for r in range(n_rows)}, circ, label)
    return spec, pattern


BRICKWORK_KINDS = ("identity", "diag", "hadamard", "cx")


def brickwork_unit_gates(kind: str, F: Field, wire: int = 0, grid=None) -> dict:
    """Per-(row, col) diagonal gates for one 2x5 unit (columns 0..3 are measured)."""
    S = tuple(phase_grid(1, F))
    S_inv = tuple(-g for g in S)
    if kind == "identity":
        return {}
    if kind == "diag":
        if grid is None:
            raise ValueError("diag needs a phase grid")
        return {(wire, 0): tuple(grid)}
    if kind == "hadamard":
        return {(wire, 0): S, (wire, 1): S, (wire, 2): S}
    if kind == "cx":
        return {(0, 2): S, (1, 1): S, (1, 3): S_inv}
    raise ValueError(f"unknown brickwork gadget {kind!r}")


def brickwork_target(kind: str, F: Field, wire: int = 0, grid=None) -> np.ndarray:
    """The two-qudit gate each gadget is meant to realize."""
    d = F.d
    eye = np.eye(d)
    if kind == "identity":
        return np.eye(d * d)
    if kind == "diag":
        D = grid_gate(grid, F)
        return np.kron(D, eye) if wire == 0 else np.kron(eye, D)
    if kind == "hadamard":
        H = hadamard(F).matrix
        return np.kron(H, eye) if wire == 0 else np.kron(eye, H)
    if kind == "cx":
        from .gates import shift

        mat = np.zeros((d * d, d * d), dtype=complex)
        for x in range(d):
            mat[x * d:(x + 1) * d, x * d:(x + 1) * d] = shift(x, F).matrix
        return mat
    raise ValueError(kind)


def pattern_brickwork(kind: str, F: Field, wire: int = 0, grid=None, cz_only: bool = False):
    """One elementary unit; returns (spec, pattern) with pattern.meta['target']."""
    vertical = brickwork_vertical(2, 1, F.p, cz_only)
    spec, pat = lattice_pattern(F, 2, 5, vertical, brickwork_unit_gates(kind, F, wire, grid), f"brickwork-{kind}")
    pat.meta["target"] = brickwork_target(kind, F, wire, grid)
    return spec, pat


def brickwork_program_pattern(F: Field, n: int, layers: list, cz_only: bool = False, wire_gates=None):
    """Multi-layer brickwork.  ``layers[L]`` maps the upper wire of each unit to (kind, wire, grid).

    ``wire_gates`` optionally maps (wire, layer) -> grid for wires outside any unit in
    that layer (applied at the layer's first column).
    """
    depth = len(layers)
    vertical = brickwork_vertical(n, depth, F.p, cz_only)
    gates = {}
    for L, units in enumerate(layers):
        pairs = brickwork_pairs(n, L)
        for top, op in units.items():
            if top not in pairs:
                raise ValueError(f"layer {L} has no unit on wires ({top}, {top + 1})")
            kind, w, grid = op
            for (r, c), g in brickwork_unit_gates(kind, F, w, grid).items():
                gates[(top + r, 4 * L + c)] = g
        for (w, lay), g in (wire_gates or {}).items():
            if lay == L:
                if any(top <= w <= top + 1 for top in pairs):
                    raise ValueError(f"wire {w} is inside a unit in layer {L}")
                gates[(w, 4 * L)] = tuple(g)
    return lattice_pattern(F, n, 4 * depth + 1, vertical, gates, "brickwork")


# -- open-ended cluster ---------------------------------------------------------------------


def layer_operator(F: Field, n: int) -> Circuit:
    """C_n = prod_j H_j prod_j CZ_{j,j+1}."""
    c = Circuit(F, n)
    for j in range(n - 1):
        c.cz(j, j + 1)
    H = hadamard(F).matrix
    for j in range(n):
        c.one(j, H)
    return c


def mirror_target(F: Field, n: int) -> Circuit:
    """Wire reversal, composed with M(-1) on every wire when n is odd."""
    c = Circuit(F, n)
    if n % 2:
        M = mult_gate(int(F.neg_table[1]), F).matrix
        for j in range(n):
            c.one(j, M)
    d = F.d
    swap = np.zeros((d * d, d * d))
    for a in range(d):
        for b in range(d):
            swap[b * d + a, a * d + b] = 1
    for j in range(n // 2):
        # reversal as a product of swaps via adjacent transpositions
        for k in range(j, n - 1 - j):
            c.two(k, k + 1, swap)
        for k in range(n - 3 - j, j - 1, -1):
            c.two(k, k + 1, swap)
    return c


def repeated(circ: Circuit, times: int) -> Circuit:
    out = Circuit(circ.field, circ.n)
    for _ in range(times):
        out.ops += circ.ops
    return out


def inverse(circ: Circuit) -> Circuit:
    out = Circuit(circ.field, circ.n)
    for op in reversed(circ.ops):
        if op[0] == "1":
            out.ops.append(("1", op[1], op[2].conj().T))
        elif op[0] == "cz":
            out.ops.append(("cz", op[1], op[2], -op[3]))
        else:
            out.ops.append(("2", op[1], op[2], op[3].conj().T))
    return out


def steered_entangler(F: Field, n: int, m: int, grid) -> tuple[Circuit, tuple[int, int]]:
    """C^(n+2-m) D_1 C^-(n+2-m) and the 0-based output wires it should act on."""
    if not 1 < m < n + 1:
        raise ValueError(f"column m={m} outside 2..{n}")
    C = layer_operator(F, n)
    t = n + 2 - m
    circ = Circuit(F, n)
    circ.extend(inverse(repeated(C, t)))
    circ.one(0, grid_gate(grid, F))
    circ.extend(repeated(C, t))
    return circ, (n - m, n + 1 - m)


def steered_closed_form(F: Field, n: int, m: int, grid) -> np.ndarray:
    """Two-qudit closed form: sum_j D_j (x) |j_X><j_X| with D_j read off alpha."""
    d = F.d
    alpha = grid_to_angles(np.asarray(grid), F)
    xb = Basis.x().vectors(F)
    out = np.zeros((d * d, d * d), dtype=complex)
    even = (n + 2 - m) % 2 == 0
    for j in range(d):
        proj = np.outer(xb[:, j], xb[:, j].conj())
        diag = np.zeros(d, dtype=complex)
        for u in range(d):
            # even: u = -(k+j) -> k = -u - j ; odd: u = k - j -> k = u + j
            k = _sub(F, int(F.neg_table[u]), j) if even else _add(F, u, j)
            diag[u] = np.exp(1j * alpha[k])
        out += np.kron(np.diag(diag), proj)
    return out


def embed_two(F: Field, n: int, wires, mat) -> Circuit:
    c = Circuit(F, n)
    c.two(wires[0], wires[1], mat)
    return c


OPEN_KINDS = ("mirror", "diag_in", "diag_out", "entangle")


def open_ended_gates(kind: str, F: Field, n: int, row: int = 0, grid=None, m: int | None = None, lam: int = 1) -> dict:
    if kind == "mirror":
        return {}
    if kind == "diag_in":
        return {(row, 0): tuple(grid)}
    if kind == "diag_out":
        return {(row, n): tuple(grid)}
    if kind == "entangle":
        if m is None or not 1 < m < n + 1:
            raise ValueError(f"entangle needs 1 < m < n+1, got m={m}")
        g = tuple(grid) if grid is not None else tuple(phase_grid(lam, F))
        return {(0, m - 1): g}
    raise ValueError(f"unknown open-ended pattern {kind!r}")


def pattern_open_ended(kind: str, n: int, F: Field, row: int = 0, grid=None, m: int | None = None, lam: int = 1):
    """All-X open-ended lattice with one rotated measurement; (spec, pattern)."""
    gates = open_ended_gates(kind, F, n, row, grid, m, lam)
    vertical = [(c, r, 1) for c in range(n + 1) for r in range(n - 1)]
    spec, pat = lattice_pattern(F, n, n + 2, vertical, gates, f"open-{kind}")
    return spec, pat


def open_ended_program_pattern(F: Field, n: int, blocks: list):
    """Consecutive n x (n+2) blocks sharing boundary columns; one op per block."""
    gates = {}
    vertical = []
    for b, op in enumerate(blocks):
        base = b * (n + 1)
        kind = op[0]
        params = dict(op[1]) if len(op) > 1 else {}
        for (r, c), g in open_ended_gates(kind, F, n, **params).items():
            gates[(r, base + c)] = g
        vertical += [(base + c, r, 1) for c in range(n + 1) for r in range(n - 1)]
    cols = len(blocks) * (n + 1) + 1
    return lattice_pattern(F, n, cols, vertical, gates, "open-ended")


# -- decorated cluster ---------------------------------------------------------------------


@dataclass
class DecoratedProgram:
    """Carved-cluster program: per-column diagonals on each wire plus Y bridges.

    ``couplings`` holds (upper wire, column) pairs; a bridge at column c needs the
    same bridge row free at c-1 and c+1 and cannot sit in the output column.
    """

    n_wires: int
    n_cols: int
    gates: dict = dc_field(default_factory=dict)  # (wire, col) -> grid
    couplings: set = dc_field(default_factory=set)
    traps: int = 0

    def validate(self):
        for w, c in self.couplings:
            if not 0 <= w < self.n_wires - 1:
                raise ValueError(f"no bridge row below wire {w}")
            if not 0 <= c < self.n_cols - 1:
                raise ValueError(f"bridge column {c} out of range")
            if (w, c + 1) in self.couplings or (w, c - 1) in self.couplings:
                raise ValueError(f"bridges at adjacent columns in bridge row {w}")
        if self.traps > (self.n_cols + 1) // 2:
            raise ValueError("too many traps for the trap row")


def decorated_layout(prog: DecoratedProgram):
    rows = 2 * prog.n_wires - 1 + (2 if prog.traps else 0)
    return rows, prog.n_cols


def decorated_pattern(F: Field, prog: DecoratedProgram, physical: bool = False):
    """Compile a carved-cluster program on the hair-decorated lattice.

    With ``physical`` the plain (undecorated) lattice is used and deletions/bridges
    are genuine Z/Y measurements.
    """
    prog.validate()
    n, C = prog.n_wires, prog.n_cols
    rows, _ = decorated_layout(prog)
    base = build_lattice(rows, C, F)
    vid = lambda r, c: r * C + c
    inits = list(base.inits)
    for w in range(n):
        inits[vid(2 * w, 0)] = input_slot(w)
    base = base.with_inits(inits)
    spec = base if physical else decorate(base)
    adj = spec.adjacency()
    hairs = (lambda v: None) if physical else (lambda v: spec.hairs[v])

    def nbrs(v):
        return tuple((u, e.power) for u, e in adj[v])

    bridge_rows = [2 * w + 1 for w in range(n - 1)]
    trap_bridge = 2 * n - 1 if prog.traps else None
    trap_row = 2 * n if prog.traps else None
    trap_cols = [c for c in range(0, C, 2)][: prog.traps]
    done: set[int] = set()
    steps = []
    circ = Circuit(F, n)
    H = hadamard(F).matrix
    S_grid = np.array(phase_grid(1, F))

    def delete(v):
        if v not in done:
            steps.append(Delete(v, nbrs(v), hairs(v)))
            done.add(v)

    for c in range(C):
        # bridge rows: lookahead deletions, then bridges/deletions at this column
        for w, r in enumerate(bridge_rows):
            if (w, c) in prog.couplings and c + 1 < C:
                delete(vid(r, c + 1))
        for w, r in enumerate(bridge_rows):
            v = vid(r, c)
            if (w, c) in prog.couplings:
                steps.append(Bridge(v, w, w + 1, hairs(v)))
                done.add(v)
                circ.cz(w, w + 1)
            else:
                delete(v)
        if trap_row is not None:
            delete(vid(trap_bridge, c))
            v = vid(trap_row, c)
            if c in trap_cols:
                if c + 1 < C:
                    delete(vid(trap_row, c + 1))
                if physical:
                    raise ValueError("trap checks need the decorated lattice")
                steps.append(TrapCheck(v, hairs(v)))
                done.add(v)
            else:
                delete(v)
        if c == C - 1:
            break
        for w in range(n):
            g = np.array(prog.gates.get((w, c), (0,) * F.d), dtype=np.int64)
            touching = sum(1 for (u, cc) in prog.couplings if cc == c and w in (u, u + 1))
            eff = tuple(int(v) for v in g - BRIDGE_LOCAL_POWER * touching * S_grid)
            steps.append(Teleport(vid(2 * w, c), vid(2 * w, c + 1), w, eff, hairs(vid(2 * w, c))))
            circ.one(w, H @ grid_gate(g, F))
    # output hairs are removed by Z measurements (fixed by the architecture)
    if not physical:
        for w in range(n):
            out = vid(2 * w, C - 1)
            h1, h2 = spec.hairs[out]
            steps.append(Delete(h2, nbrs(h2), None))
            steps.append(Delete(h1, nbrs(h1), None))
    pat = MeasurementPattern(F, steps, n, {w: vid(2 * w, 0) for w in range(n)}, circ, "decorated")
    pat.meta["trap_vertices"] = [vid(trap_row, c) for c in trap_cols] if trap_row is not None else []
    return spec, pat


def pattern_decorated(kind: str, target: int, spec: ResourceSpec, grid=None) -> MeasurementPattern:
    """Simulated measurement of ``target`` through its hair: kind 'sim_X' or 'sim_Z'."""
    if target not in spec.hairs:
        raise ValueError(f"vertex {target} has no hair")
    k = {"sim_X": "x", "sim_Z": "z"}.get(kind)
    if k is None:
        raise ValueError(f"unknown decorated pattern {kind!r}")
    step = HairMeasure(target, spec.hairs[target], k, None if grid is None else tuple(grid))
    return MeasurementPattern(spec.field, [step], 0, {}, None, kind)


def run_pattern(spec: ResourceSpec, pattern: MeasurementPattern, rng=None, forced=None, inputs=None):
    """Execute with feed-forward; returns (outcomes, final frames, residual BranchResult)."""
    res = run_branch(spec, pattern, rng=rng, forced=forced, inputs=inputs)
    return res.outcomes, res.run.final_frames(), res
