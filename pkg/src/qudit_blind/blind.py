"""Client/server blind execution of measurement patterns.

The client pre-rotates every resource qudit with a secret diagonal D_pad whose
phases are uniform on the hiding-angle grid, and shifts every rotated-X
instruction by a secret Z(r).  The server only ever sees instructed grids and
reports raw outcomes; the client de-pads them (k = s + r) before feeding them to
its frame tracker.
"""

from __future__ import annotations

import json
import sys
import time
from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy import stats

from .galois import Field, field_from_json
from .gates import angle_grid_size, grid_to_angles, is_clifford, Gate, phase_grid, t_grid
from .mbqc import (
    DecoratedProgram,
    MeasurementPattern,
    Readout,
    brickwork_program_pattern,
    decorated_pattern,
    normalize_grid,
    open_ended_program_pattern,
    shift_grid,
    steered_closed_form,
)
from .resources import CLIENT, PLUS, ResourceSpec, brickwork_pairs, rotated_plus
from .simulator import Basis, Register, Request, ZeroProbability

ARCHITECTURES = ("brickwork", "open-ended", "decorated")


class ProgramMismatch(ValueError):
    """Program does not fit the requested architecture."""


class InsufficientSamples(ValueError):
    """Too few transcripts for a meaningful audit."""


# -- angle set and secrets --------------------------------------------------------------


@dataclass(frozen=True)
class AngleSet:
    field: Field

    @property
    def size(self) -> int:
        return angle_grid_size(self.field)

    @property
    def values(self) -> np.ndarray:
        return 2 * np.pi * np.arange(self.size) / self.size

    def to_grid(self, angles, tol: float = 1e-9) -> np.ndarray:
        """Angles (radians) to grid integers; raises if any angle is off the grid."""
        a = np.asarray(angles, dtype=float) * self.size / (2 * np.pi)
        k = np.rint(a)
        if np.max(np.abs(a - k), initial=0.0) > tol:
            raise ValueError("angle off the hiding grid")
        return (k.astype(np.int64)) % self.size

    def contains(self, angles, tol: float = 1e-9) -> bool:
        try:
            self.to_grid(angles, tol)
        except ValueError:
            return False
        return True


def outcome_pad_grid(r: int, F: Field) -> np.ndarray:
    """Grid phases of Z(r): tr(r u) in units of N/p."""
    N = angle_grid_size(F)
    return (F.chi_exponent_table[r] * (N // F.p)) % N


@dataclass
class ClientSecret:
    pads: dict  # vertex -> grid tuple (first entry 0)
    r: dict  # vertex -> outcome pad
    input_pads: dict = dc_field(default_factory=dict)  # wire -> (a, b)
    inputs: dict = dc_field(default_factory=dict)  # wire -> logical basis value
    trap_outputs: dict = dc_field(default_factory=dict)  # wire -> expected corrected output
    trap_vertices: tuple = ()

    def to_json(self) -> dict:
        return {
            "pads": {str(v): list(g) for v, g in sorted(self.pads.items())},
            "r": {str(v): k for v, k in sorted(self.r.items())},
            "input_pads": {str(w): list(ab) for w, ab in sorted(self.input_pads.items())},
            "inputs": {str(w): k for w, k in sorted(self.inputs.items())},
            "trap_outputs": {str(w): k for w, k in sorted(self.trap_outputs.items())},
            "trap_vertices": list(self.trap_vertices),
        }

    @classmethod
    def from_json(cls, data: dict) -> "ClientSecret":
        ints = lambda dct: {int(k): v for k, v in dct.items()}
        return cls(
            {int(v): tuple(g) for v, g in data["pads"].items()},
            ints(data["r"]),
            {int(w): tuple(ab) for w, ab in data.get("input_pads", {}).items()},
            ints(data.get("inputs", {})),
            ints(data.get("trap_outputs", {})),
            tuple(data.get("trap_vertices", ())),
        )


def client_prepare(spec: ResourceSpec, rng: np.random.Generator, zero: bool = False):
    """Pre-rotate every |0_X> vertex by a random D_pad; draw an outcome pad per vertex.

    Returns the prepared spec (pads baked into the vertex tags, so it must stay on
    the client side) and the secret.  Inputs slots keep their tag; their pads are
    applied when the client builds the input vectors.
    """
    F = spec.field
    if any(e.N is not None and e.N == 0 for e in spec.edges):
        raise ValueError("GE(0) is not an entangler")
    N = angle_grid_size(F)
    inits = list(spec.inits)
    pads, rs = {}, {}
    for v, tag in enumerate(spec.inits):
        if tag[0] not in ("plus", "input"):
            raise ValueError(f"vertex {v} has tag {tag!r}; only |0_X> and input vertices can be padded")
        if zero:
            grid = (0,) * F.d
            r = 0
        else:
            grid = (0,) + tuple(int(g) for g in rng.integers(0, N, F.d - 1))
            r = int(rng.integers(F.d))
        pads[v], rs[v] = grid, r
        if tag[0] == "plus" and any(grid):
            inits[v] = rotated_plus(grid)
    return spec.with_inits(inits), ClientSecret(pads, rs)


def server_view(spec: ResourceSpec) -> ResourceSpec:
    """What the server may learn: the graph, with every qudit's state hidden."""
    return spec.with_inits([CLIENT] * spec.n)


def client_instruct(desired, pad, r: int, frame_x: int, F: Field) -> tuple:
    """Instructed grid = X(x)-conjugated desired angles + pad + Z(r) phases.

    ``desired`` is a grid vector (integers) or angles in radians on the grid.
    """
    desired = np.asarray(desired)
    if desired.dtype.kind == "f":
        desired = AngleSet(F).to_grid(desired)
    adapted = np.asarray(shift_grid(desired, frame_x, F))
    return normalize_grid(adapted + np.asarray(pad) + outcome_pad_grid(r, F), F)


# -- programs -----------------------------------------------------------------------------


@dataclass
class Program:
    """Logical program for one architecture.

    brickwork ops: {"gate": identity|hadamard|cx|diag, "layer": L, "wire": w, "grid": [...]}
    (for cx, ``wire`` is the control, i.e. the upper wire of the unit).
    open-ended ops, one per block: {"gate": mirror|diag_in|diag_out|entangle, "row", "grid", "m", "lam"}.
    decorated ops: {"gate": diag, "wire", "col", "grid"} or {"gate": cz, "wire", "col"}.
    """

    arch: str
    n_wires: int
    ops: list
    depth: int | None = None
    inputs: list | None = None
    traps: dict = dc_field(default_factory=dict)  # output wire -> expected value
    trap_vertices: int = 0  # decorated only
    label: str = ""

    def to_json(self) -> dict:
        return {
            "arch": self.arch,
            "n_wires": self.n_wires,
            "ops": self.ops,
            "depth": self.depth,
            "inputs": self.inputs,
            "traps": {str(k): v for k, v in self.traps.items()},
            "trap_vertices": self.trap_vertices,
            "label": self.label,
        }

    @classmethod
    def from_json(cls, data) -> "Program":
        if isinstance(data, list):
            raise ProgramMismatch("program file needs an object with 'arch' and 'ops'")
        return cls(
            data["arch"],
            int(data["n_wires"]),
            list(data.get("ops", [])),
            data.get("depth"),
            data.get("inputs"),
            {int(k): int(v) for k, v in data.get("traps", {}).items()},
            int(data.get("trap_vertices", 0)),
            data.get("label", ""),
        )

    def depth_or_default(self) -> int:
        if self.depth is not None:
            return int(self.depth)
        if self.arch == "brickwork":
            return 1 + max((op["layer"] for op in self.ops), default=0)
        if self.arch == "open-ended":
            return max(len(self.ops), 1)
        return 2 + max((op["col"] for op in self.ops), default=0)


def _grid(op, F):
    g = op.get("grid")
    if g is None:
        raise ProgramMismatch(f"{op['gate']} needs a grid")
    if len(g) != F.d:
        raise ProgramMismatch(f"grid length {len(g)} != d={F.d}")
    return tuple(int(x) % angle_grid_size(F) for x in g)


def compile_program(program: Program, F: Field) -> tuple[ResourceSpec, MeasurementPattern]:
    """Resource spec and readout pattern for a program."""
    arch = program.arch
    n = program.n_wires
    depth = program.depth_or_default()
    if arch == "brickwork":
        layers = [dict() for _ in range(depth)]
        wire_gates = {}
        for op in program.ops:
            kind, L, w = op["gate"], int(op["layer"]), int(op.get("wire", 0))
            if kind not in ("identity", "hadamard", "cx", "diag"):
                raise ProgramMismatch(f"brickwork has no gate {kind!r}")
            if not 0 <= L < depth:
                raise ProgramMismatch(f"layer {L} outside depth {depth}")
            pairs = brickwork_pairs(n, L)
            top = next((t for t in pairs if t <= w <= t + 1), None)
            if top is None:
                if kind != "diag":
                    raise ProgramMismatch(f"wire {w} sits outside every unit of layer {L}")
                wire_gates[(w, L)] = _grid(op, F)
                continue
            if kind == "cx" and w != top:
                raise ProgramMismatch(f"cx control must be the upper wire of unit ({top}, {top + 1})")
            if top in layers[L]:
                raise ProgramMismatch(f"unit ({top}, {top + 1}) in layer {L} already has a gate")
            layers[L][top] = (kind, w - top, _grid(op, F) if kind == "diag" else None)
        try:
            spec, pat = brickwork_program_pattern(F, n, layers, wire_gates=wire_gates)
        except ValueError as exc:
            raise ProgramMismatch(str(exc)) from exc
    elif arch == "open-ended":
        if n < 2:
            raise ProgramMismatch("open-ended lattice needs at least two wires")
        blocks = []
        for op in program.ops or [{"gate": "mirror"}]:
            kind = op["gate"]
            if kind == "mirror":
                blocks.append(("mirror",))
            elif kind in ("diag_in", "diag_out"):
                blocks.append((kind, {"row": int(op.get("row", 0)), "grid": _grid(op, F)}))
            elif kind == "entangle":
                m = int(op["m"])
                if not 1 < m < n + 1:
                    raise ProgramMismatch(f"entangle column m={m} outside 2..{n}")
                params = {"m": m, "lam": F.from_int(int(op.get("lam", 1)))}
                if "grid" in op:
                    params["grid"] = _grid(op, F)
                blocks.append(("entangle", params))
            else:
                raise ProgramMismatch(f"open-ended lattice has no gate {kind!r}")
        spec, pat = open_ended_program_pattern(F, n, blocks)
    elif arch == "decorated":
        gates, couplings = {}, set()
        for op in program.ops:
            kind, w, c = op["gate"], int(op["wire"]), int(op["col"])
            if kind == "diag":
                gates[(w, c)] = _grid(op, F)
            elif kind == "cz":
                couplings.add((w, c))
            else:
                raise ProgramMismatch(f"decorated cluster has no gate {kind!r}")
        prog = DecoratedProgram(n, depth, gates, couplings, program.trap_vertices)
        try:
            spec, pat = decorated_pattern(F, prog)
        except ValueError as exc:
            raise ProgramMismatch(str(exc)) from exc
    else:
        raise ProgramMismatch(f"unknown architecture {arch!r}")
    return spec, pat.with_readout()


# -- random programs and traps ----------------------------------------------------------


def _rand_grid(F, rng):
    g = rng.integers(0, angle_grid_size(F), F.d)
    g[0] = 0
    return [int(x) for x in g]


def random_program(arch: str, F: Field, rng: np.random.Generator, n_wires: int = 2, depth: int = 1,
                   label: str = "") -> Program:
    """A random program from the architecture's gate menu with random basis inputs."""
    ops = []
    if arch == "brickwork":
        for L in range(depth):
            for top in brickwork_pairs(n_wires, L):
                kind = ["identity", "hadamard", "cx", "diag"][int(rng.integers(4))]
                op = {"gate": kind, "layer": L, "wire": top if kind == "cx" else top + int(rng.integers(2))}
                if kind == "diag":
                    op["grid"] = _rand_grid(F, rng)
                ops.append(op)
    elif arch == "open-ended":
        for _ in range(depth):
            kind = ["mirror", "diag_in", "diag_out", "entangle"][int(rng.integers(4))]
            op = {"gate": kind}
            if kind in ("diag_in", "diag_out"):
                op.update(row=int(rng.integers(n_wires)), grid=_rand_grid(F, rng))
            elif kind == "entangle":
                if n_wires < 3:
                    op = {"gate": "diag_in", "row": int(rng.integers(n_wires)), "grid": _rand_grid(F, rng)}
                else:
                    op.update(m=int(rng.integers(2, n_wires + 1)), lam=int(rng.integers(1, F.p)))
            ops.append(op)
    elif arch == "decorated":
        cols = depth + 1
        for w in range(n_wires):
            for c in range(cols - 1):
                if rng.random() < 0.5:
                    ops.append({"gate": "diag", "wire": w, "col": c, "grid": _rand_grid(F, rng)})
        for w in range(n_wires - 1):
            last = -2
            for c in range(cols - 1):
                if c > last + 1 and rng.random() < 0.5:
                    ops.append({"gate": "cz", "wire": w, "col": c})
                    last = c
        return Program(arch, n_wires, ops, cols, [int(rng.integers(F.d)) for _ in range(n_wires)], label=label)
    else:
        raise ProgramMismatch(f"unknown architecture {arch!r}")
    return Program(arch, n_wires, ops, depth, [int(rng.integers(F.d)) for _ in range(n_wires)], label=label)


def insert_traps(program: Program, count: int, rng: np.random.Generator, F: Field) -> Program:
    """Add trap wires (or, for the decorated cluster, isolated trap vertices).

    Brickwork: traps are appended below the data wires (rounded up to keep the wire
    count even) and every layer is split in two so that no unit mixes a data gate
    with a trap; trap units receive random identity or diagonal decoys.
    Open-ended: traps are appended (count rounded to keep n even); a program whose
    gates would touch a trap after the mirror reverses the wires is rejected.
    The expected corrected output of a trap wire is its random input value.
    """
    if count < 1:
        return program
    n0 = program.n_wires
    inputs = list(program.inputs or [0] * n0)
    if program.arch == "decorated":
        return Program(program.arch, n0, list(program.ops), program.depth, inputs, {}, count, program.label)
    extra = count + ((n0 + count) % 2)
    n = n0 + extra
    traps = {}
    t_vals = [int(rng.integers(F.d)) for _ in range(extra)]
    inputs += t_vals
    if program.arch == "brickwork":
        depth = program.depth_or_default()
        ops = []
        for op in program.ops:
            L = int(op["layer"])
            top = next(t for t in brickwork_pairs(n0, L) if t <= int(op.get("wire", 0)) <= t + 1) \
                if any(t <= int(op.get("wire", 0)) <= t + 1 for t in brickwork_pairs(n0, L)) else None
            parity = 0 if top is None else top % 2
            new = dict(op)
            new["layer"] = 2 * L + parity
            ops.append(new)
        for L in range(2 * depth):
            for top in brickwork_pairs(n, L):
                if top >= n0:
                    if rng.random() < 0.5:
                        ops.append({"gate": "diag", "layer": L, "wire": top + int(rng.integers(2)), "grid": _rand_grid(F, rng)})
                    else:
                        ops.append({"gate": "identity", "layer": L, "wire": top})
        for i, t in enumerate(t_vals):
            traps[n0 + i] = t
        return Program("brickwork", n, ops, 2 * depth, inputs, traps, 0, program.label)
    if program.arch == "open-ended":
        blocks = list(program.ops or [{"gate": "mirror"}])
        pos = {n0 + i: n0 + i for i in range(extra)}  # trap input row -> current row
        for op in blocks:
            # rows touched at this block's input and output
            kind = op["gate"]
            for tr, row in pos.items():
                if kind == "diag_out" and n - 1 - row == int(op.get("row", 0)):
                    raise ProgramMismatch("diag_out would act on a trap wire")
                if kind == "entangle":
                    m = int(op["m"])
                    if n - 1 - row in (n - m, n + 1 - m):
                        raise ProgramMismatch("entangling gate would act on a trap wire")
            pos = {tr: n - 1 - row for tr, row in pos.items()}
        for i, t in enumerate(t_vals):
            traps[pos[n0 + i]] = t
        return Program("open-ended", n, blocks, program.depth, inputs, traps, 0, program.label)
    raise ProgramMismatch(f"unknown architecture {program.arch!r}")


# -- transcripts --------------------------------------------------------------------------


@dataclass
class ProtocolTranscript:
    arch: str
    field: Field
    seed: int
    spec: dict  # server view
    events: list = dc_field(default_factory=list)
    label: str = ""

    def header(self) -> dict:
        return {
            "header": True,
            "arch": self.arch,
            "field": self.field.to_json(),
            "seed": self.seed,
            "label": self.label,
            "spec": self.spec,
        }

    def to_jsonl(self) -> str:
        lines = [json.dumps(self.header(), sort_keys=True)]
        lines += [json.dumps(ev, sort_keys=True) for ev in self.events]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "ProtocolTranscript":
        rows = [json.loads(line) for line in text.splitlines() if line.strip()]
        if not rows or not rows[0].get("header"):
            raise ValueError("transcript lacks a header line")
        h = rows[0]
        return cls(h["arch"], field_from_json(h["field"]), int(h["seed"]), h["spec"], rows[1:], h.get("label", ""))

    def instructions(self) -> list[dict]:
        return [ev for ev in self.events if ev["event"] == "instruct"]

    def outcomes(self) -> list[int]:
        return [ev["outcome"] for ev in self.events if ev["event"] == "outcome"]


# -- client / server ---------------------------------------------------------------------


class Server:
    """Honest (or tampering) server: holds the register, measures as instructed."""

    def __init__(self, spec: ResourceSpec, inputs, rng: np.random.Generator, tamper=None, max_amplitudes=None):
        kw = {} if max_amplitudes is None else {"max_amplitudes": max_amplitudes}
        self.reg = Register(spec, inputs, **kw)
        self.rng = rng
        self.tamper = tamper
        self.count = 0
        self.probabilities: list[float] = []

    def measure(self, req: Request) -> int:
        k, p, self.reg = self.reg.measure(req.vertex, req.basis, self.rng)
        self.probabilities.append(p)
        if self.tamper is not None:
            k = int(self.tamper(self.count, req, k))
        self.count += 1
        return k


class BlindClient:
    """Wraps a frame tracker; turns its requests into padded instructions."""

    def __init__(self, pattern: MeasurementPattern, secret: ClientSecret):
        self.F = pattern.field
        frames = {w: secret.input_pads.get(w, (0, 0)) for w in range(pattern.n_wires)}
        self.tracker = pattern.start(frames)
        self.secret = secret
        self._last: Request | None = None
        self._x = False

    def next_request(self) -> Request | None:
        req = self.tracker.next_request()
        if req is None:
            return None
        v = req.vertex
        if req.basis.kind == "z":
            self._last, self._x = req, False
            return req
        grid = client_instruct(req.grid, self.secret.pads[v], self.secret.r[v], 0, self.F)
        self._last, self._x = req, True
        return Request(v, Basis.x(grid_to_angles(np.array(grid), self.F)), grid)

    def record(self, outcome: int) -> int:
        """Record a server outcome; returns the de-padded outcome handed to the tracker."""
        k = int(outcome)
        if self._x:
            k = int(self.F.add_table[k, self.secret.r[self._last.vertex]])
        self.tracker.record(k)
        return k


def _input_vectors(pattern: MeasurementPattern, spec: ResourceSpec, secret: ClientSecret | None, inputs, F):
    """(1, n_wires, d) client-prepared inputs D_pad X(a) Z(b) |k>."""
    n = pattern.n_wires
    out = np.zeros((1, n, F.d), dtype=complex)
    slot = {}
    for v, tag in enumerate(spec.inits):
        if tag[0] == "input":
            slot[tag[1]] = v
    for w in range(n):
        k = int(inputs[w])
        a, b = secret.input_pads.get(w, (0, 0)) if secret else (0, 0)
        vec = np.zeros(F.d, dtype=complex)
        # X(a) Z(b) |k> = chi(b k) |k + a>
        vec[F.add_table[k, a]] = np.exp(2j * np.pi * F.chi_exponent_table[b, k] / F.p)
        if secret is not None:
            vec = vec * np.exp(1j * grid_to_angles(np.array(secret.pads[slot[w]]), F))
        out[0, w] = vec
    return out


@dataclass
class ProtocolResult:
    transcript: ProtocolTranscript
    secret: ClientSecret
    outputs: list  # corrected logical outcomes per wire
    raw_outputs: list
    trap_ok: bool | None
    reference_ok: bool | None
    prepared: ResourceSpec
    pattern: MeasurementPattern
    true_outcomes: list = dc_field(default_factory=list)
    probabilities: list = dc_field(default_factory=list)
    notes: list = dc_field(default_factory=list)


def _rngs(seed: int):
    client_ss, server_ss = np.random.SeedSequence(seed).spawn(2)
    return np.random.default_rng(client_ss), np.random.default_rng(server_ss)


def run_protocol(arch: str, program: Program, F: Field, seed: int, tamper=None, check_reference: bool = True,
                 blind: bool = True, max_amplitudes=None) -> ProtocolResult:
    """Interleaved client/server loop for one program; returns transcript and corrected outputs."""
    if arch != program.arch:
        raise ProgramMismatch(f"program targets {program.arch!r}, not {arch!r}")
    client_rng, server_rng = _rngs(seed)
    spec, pattern = compile_program(program, F)
    inputs = list(program.inputs or [0] * program.n_wires)
    if len(inputs) != program.n_wires:
        raise ProgramMismatch("one input value per wire is required")
    prepared, secret = client_prepare(spec, client_rng, zero=not blind)
    secret.inputs = {w: int(k) for w, k in enumerate(inputs)}
    if blind:
        secret.input_pads = {w: (int(client_rng.integers(F.d)), int(client_rng.integers(F.d))) for w in range(program.n_wires)}
    secret.trap_outputs = dict(program.traps)
    secret.trap_vertices = tuple(pattern.meta.get("trap_vertices", ()))
    server = Server(prepared, _input_vectors(pattern, spec, secret, inputs, F), server_rng, tamper, max_amplitudes)
    client = BlindClient(pattern, secret)
    transcript = ProtocolTranscript(arch, F, seed, server_view(spec).to_json(), label=program.label)
    t = 0
    for v in range(spec.n):
        transcript.events.append({"event": "prepare", "site": v, "t": t})
        t += 1
    true = []
    while (req := client.next_request()) is not None:
        ev = {"event": "instruct", "site": req.vertex, "t": t}
        if req.basis.kind == "z":
            ev["basis"] = "z"
        else:
            ev["basis"] = "x"
            ev["grid"] = list(req.grid)
            ev["angles"] = [float(a) for a in grid_to_angles(np.array(req.grid), F)]
        transcript.events.append(ev)
        t += 1
        s = server.measure(req)
        transcript.events.append({"event": "outcome", "site": req.vertex, "outcome": int(s), "t": t})
        t += 1
        true.append(client.record(s))
    run = client.tracker
    outputs = [run.corrected[w] for w in range(program.n_wires)]
    raw = [run.readouts[w] for w in range(program.n_wires)]
    trap_ok = verify_traps(run, secret) if (secret.trap_outputs or secret.trap_vertices) else None
    result = ProtocolResult(transcript, secret, outputs, raw, trap_ok, None, prepared, pattern, true,
                            list(server.probabilities))
    if check_reference:
        result.reference_ok = _reference_check(spec, pattern, result, F, inputs)
    return result


def _reference_check(spec, pattern, result: ProtocolResult, F, inputs) -> bool:
    """Unblinded run driven onto the de-padded branch of the blinded run.

    Every forced outcome must be possible with the same probability, and the
    reference's corrected outputs must equal the blinded ones.  Readouts are forced
    to the value that yields the blinded corrected output under the reference frame.
    """
    reg = Register(spec, _input_vectors(pattern, spec, None, inputs, F))
    run = pattern.start()
    i = 0
    while (req := run.next_request()) is not None:
        step = pattern.steps[run.step]
        if isinstance(step, Readout):
            w = step.wire
            forced = int(F.add_table[result.outputs[w], run.frames[w][0]])
        else:
            forced = result.true_outcomes[i]
        try:
            _, p, reg = reg.measure(req.vertex, req.basis, forced=forced)
        except ZeroProbability:
            return False
        if abs(p - result.probabilities[i]) > 1e-9:
            return False
        run.record(forced)
        i += 1
    return [run.corrected[w] for w in range(pattern.n_wires)] == result.outputs


def verify_traps(run, secret: ClientSecret) -> bool:
    """Accept iff every trap wire and trap vertex shows its expected value."""
    for w, t in secret.trap_outputs.items():
        if run.corrected.get(w) != t:
            return False
    for v in secret.trap_vertices:
        if run.traps.get(v) != 0:
            return False
    return True


def replay(transcript: ProtocolTranscript, secret: ClientSecret, prepared: ResourceSpec, pattern: MeasurementPattern) -> list[int]:
    """Re-run the server side from (prepared resource, instructions, seed); returns outcomes.

    The physical resource depends on the client's pads, so replay needs the secret.
    """
    F = transcript.field
    _, server_rng = _rngs(transcript.seed)
    inputs = [secret.inputs[w] for w in range(pattern.n_wires)]
    spec_plain = prepared.with_inits([PLUS if t[0] == "diag" else t for t in prepared.inits])
    server = Server(prepared, _input_vectors(pattern, spec_plain, secret, inputs, F), server_rng)
    out = []
    for ev in transcript.instructions():
        if ev["basis"] == "z":
            req = Request(ev["site"], Basis.z(), None)
        else:
            req = Request(ev["site"], Basis.x(grid_to_angles(np.array(ev["grid"]), F)), tuple(ev["grid"]))
        out.append(server.measure(req))
    return out


# -- blindness audit ----------------------------------------------------------------------


def _site_samples(transcripts) -> dict:
    out: dict[int, list] = {}
    for tr in transcripts:
        for ev in tr.instructions():
            if ev.get("basis") == "x":
                out.setdefault(ev["site"], []).append(tuple(ev["grid"][1:]))
    return out


def _uniformity(samples: list, N: int) -> tuple[float, str]:
    arr = np.asarray(samples, dtype=np.int64)
    n, width = arr.shape
    if width == 0:
        return 1.0, "empty"
    if N**width * 5 <= n:
        codes = np.ravel_multi_index(arr.T, (N,) * width)
        counts = np.bincount(codes, minlength=N**width)
        return float(stats.chisquare(counts).pvalue), "joint"
    ps = [float(stats.chisquare(np.bincount(arr[:, j], minlength=N)).pvalue) for j in range(width)]
    return min(1.0, min(ps) * width), "marginal"


def _two_sample(a: list, b: list, N: int) -> float:
    A, B = np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)
    width = A.shape[1]
    if width == 0:
        return 1.0

    def test(ca, cb):
        table = np.vstack([ca, cb])
        table = table[:, table.sum(axis=0) > 0]
        if table.shape[1] < 2:
            return 1.0
        return float(stats.chi2_contingency(table).pvalue)

    if N**width * 5 <= min(len(A), len(B)):
        shape = (N,) * width
        ca = np.bincount(np.ravel_multi_index(A.T, shape), minlength=N**width)
        cb = np.bincount(np.ravel_multi_index(B.T, shape), minlength=N**width)
        return test(ca, cb)
    ps = [test(np.bincount(A[:, j], minlength=N), np.bincount(B[:, j], minlength=N)) for j in range(width)]
    return min(1.0, min(ps) * width)


def blindness_audit(groups: dict, alpha: float = 0.01, min_samples: int = 1000) -> dict:
    """Chi-square uniformity per site, and a two-sample test between each pair of programs.

    ``groups`` maps a program label to its transcripts.  p-values are reported raw
    and Bonferroni-adjusted over all tests of the report; a test is flagged when
    its adjusted p-value is below ``alpha``.
    """
    if not groups:
        raise InsufficientSamples("no transcripts")
    for label, trs in groups.items():
        if len(trs) < min_samples:
            raise InsufficientSamples(f"group {label!r} has {len(trs)} transcripts, need {min_samples}")
    first = next(iter(groups.values()))[0]
    N = angle_grid_size(first.field)
    per_group = {label: _site_samples(trs) for label, trs in groups.items()}
    tests = []
    histograms = {}
    for label, sites in per_group.items():
        histograms[label] = {}
        for site, samples in sorted(sites.items()):
            p, mode = _uniformity(samples, N)
            tests.append({"test": "uniformity", "group": label, "site": site, "mode": mode, "p": p, "n": len(samples)})
            arr = np.asarray(samples, dtype=np.int64)
            histograms[label][str(site)] = [np.bincount(arr[:, j], minlength=N).tolist() for j in range(arr.shape[1])]
    labels = list(per_group)
    for i in range(len(labels)):
        for j in range(i + 1, len(labels)):
            a, b = per_group[labels[i]], per_group[labels[j]]
            if sorted(a) != sorted(b):
                raise ValueError(f"programs {labels[i]!r} and {labels[j]!r} differ in shape")
            for site in sorted(a):
                p = _two_sample(a[site], b[site], N)
                tests.append({"test": "two-sample", "groups": [labels[i], labels[j]], "site": site, "p": p})
    m = max(len(tests), 1)
    for t in tests:
        t["p_adjusted"] = min(1.0, t["p"] * m)
        t["flagged"] = t["p_adjusted"] < alpha
    return {
        "alpha": alpha,
        "grid_size": N,
        "samples": {label: len(trs) for label, trs in groups.items()},
        "tests": tests,
        "histograms": histograms,
        "min_p_adjusted": min((t["p_adjusted"] for t in tests), default=1.0),
        "flagged": sum(t["flagged"] for t in tests),
        "passed": not any(t["flagged"] for t in tests),
    }


def audit_programs(F: Field, programs: dict, runs: int, seed: int) -> tuple[dict, dict]:
    """Run each program ``runs`` times with distinct seeds; returns (transcripts, report)."""
    groups = {}
    seeds = np.random.SeedSequence(seed).generate_state(runs, dtype=np.uint32)
    for label, prog in programs.items():
        trs = []
        for s in seeds:
            res = run_protocol(prog.arch, prog, F, int(s), check_reference=False)
            res.transcript.label = label
            trs.append(res.transcript)
        groups[label] = trs
    return groups, blindness_audit(groups, min_samples=min(1000, runs))


def h_program(F: Field) -> Program:
    return Program("brickwork", 2, [{"gate": "hadamard", "layer": 0, "wire": 0}], 1, [0, 0], label="H")


def t_program(F: Field) -> Program:
    grid = [int(g) for g in t_grid(F)]
    return Program("brickwork", 2, [{"gate": "diag", "layer": 0, "wire": 0, "grid": grid}], 1, [0, 0], label="T")


# -- overhead ------------------------------------------------------------------------------


def overhead_report(arch: str, shape: dict, F: Field) -> list[dict]:
    """Resource counts per architecture, measured from the generated specs.

    shape: brickwork {"n", "depth"}; open-ended {"n", "blocks"}; decorated {"rows", "cols"}.
    """
    from .resources import build_brickwork, build_lattice, build_open_ended, decorate

    rows = []

    def row(name, spec, measured, note=""):
        n_edges = len(spec.edges)
        rows.append({
            "architecture": name,
            "qudits": spec.n,
            "entanglers": n_edges,
            "entanglers_by_power": spec.edge_counts(),
            "measurements": measured,
            "messages": 2 * measured,
            "note": note,
        })

    if arch == "brickwork":
        n, depth = int(shape.get("n", 2)), int(shape.get("depth", 1))
        unit = build_brickwork(2, 1, F)
        row("brickwork unit", unit, unit.n, "one 2 x 5 elementary unit; size independent of d")
        for cz_only in (False, True):
            spec = build_brickwork(n, depth, F, cz_only)
            row("brickwork" + (" (CZ-only)" if cz_only else ""), spec, spec.n)
        extra = 10 * (F.p - 1)
        rows.append({
            "architecture": "brickwork (CZ-only, extra blocks)",
            "qudits": extra * (spec.n // unit.n),
            "entanglers": None,
            "entanglers_by_power": {},
            "measurements": extra * (spec.n // unit.n),
            "messages": 2 * extra * (spec.n // unit.n),
            "note": "formula row: unit size 10(p-1) when CZ^-1 is built from p-2 further units",
        })
        rows.append({"architecture": "hyper/circular brickwork", "qudits": None, "entanglers": None,
                     "entanglers_by_power": {}, "measurements": None, "messages": None,
                     "note": "prior-work variants; not built here"})
    elif arch == "open-ended":
        n, blocks = int(shape.get("n", 4)), int(shape.get("blocks", 1))
        if blocks == 1:
            spec = build_open_ended(n, F)
        else:
            cols = blocks * (n + 1) + 1
            vertical = [(b * (n + 1) + c, r, 1) for b in range(blocks) for c in range(n + 1) for r in range(n - 1)]
            spec = build_lattice(n, cols, F, vertical)
        row("open-ended", spec, spec.n, f"block n x (n+2) = {n * (n + 2)} qudits")
        rows.append({"architecture": "open-ended (continuous angles)", "qudits": None, "entanglers": None,
                     "entanglers_by_power": {}, "measurements": None, "messages": None,
                     "note": "exact universality with continuous angles is only noted, not built"})
    elif arch == "decorated":
        r, c = int(shape.get("rows", 2)), int(shape.get("cols", 2))
        spec = decorate(build_lattice(r, c, F))
        row("decorated", spec, spec.n)
    else:
        raise ValueError(f"unknown architecture {arch!r}")
    return rows


def steered_clifford_note(F: Field, n: int, m: int, lam: int) -> dict:
    """Certify that steering S(lam) through the open-ended block yields a Clifford gate."""
    G = steered_closed_form(F, n, m, phase_grid(lam, F))
    return {"n": n, "m": m, "lam": lam, "clifford": bool(is_clifford(Gate(G, 2, F.d, "steered"), F, 2))}


def log_timing(label: str, start: float) -> None:
    """Timings go to stderr only so that reports stay byte-identical."""
    print(f"[{label}] {time.perf_counter() - start:.2f}s", file=sys.stderr)
