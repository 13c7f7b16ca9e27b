"""Dense state-vector simulation of graph-state resources under adaptive measurements.

The workhorse is :class:`Register`, which holds a tensor of shape
``(B, d, ..., d)``.  The leading axis runs over ``B`` logical input states that
are pushed through a gadget together, so one pass reconstructs the whole
induced linear map.  Vertices are added lazily (just before a neighbor is
measured) and removed once measured, which keeps brickwork units at d = 5
within a few hundred thousand amplitudes.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable, Protocol

import numpy as np

from .galois import Field
from .gates import Gate, grid_to_angles, phase_grid
from .resources import ResourceSpec

BUILTIN_MAX_AMPLITUDES = 2**28
BUILTIN_MAX_BRANCHES = 3**9
DEFAULT_MAX_AMPLITUDES = BUILTIN_MAX_AMPLITUDES
DEFAULT_MAX_BRANCHES = BUILTIN_MAX_BRANCHES
PROB_TOL = 1e-12


def set_default_caps(amps: int | None = None, branches: int | None = None) -> None:
    """Process-wide caps used when a call does not pass its own; None restores the built-in value."""
    global DEFAULT_MAX_AMPLITUDES, DEFAULT_MAX_BRANCHES
    DEFAULT_MAX_AMPLITUDES = BUILTIN_MAX_AMPLITUDES if amps is None else int(amps)
    DEFAULT_MAX_BRANCHES = BUILTIN_MAX_BRANCHES if branches is None else int(branches)


class CapExceeded(RuntimeError):
    """Memory or branch cap would be exceeded."""


class ZeroProbability(RuntimeError):
    """A forced outcome has zero probability."""


# -- measurement bases -----------------------------------------------------------


@dataclass(frozen=True)
class Basis:
    """Rotated-X basis {D_phi |k_X>} (kind 'x'), or the computational basis (kind 'z')."""

    kind: str
    angles: tuple = ()

    @staticmethod
    def x(angles=None) -> "Basis":
        return Basis("x", tuple(float(a) for a in angles) if angles is not None else ())

    @staticmethod
    def z() -> "Basis":
        return Basis("z")

    @staticmethod
    def y(F: Field) -> "Basis":
        """{S(1)|k_X>}."""
        return Basis.x(grid_to_angles(phase_grid(1, F), F))

    def vectors(self, F: Field) -> np.ndarray:
        """Column k holds basis vector k."""
        if self.kind == "z":
            return np.eye(F.d, dtype=complex)
        if self.kind != "x":
            raise ValueError(f"unknown basis kind {self.kind!r}")
        hx = np.exp(2j * np.pi * F.chi_exponent_table / F.p) / np.sqrt(F.d)
        if self.angles:
            hx = np.exp(1j * np.asarray(self.angles))[:, None] * hx
        return hx


def x_basis_state(k: int, F: Field) -> np.ndarray:
    return Basis.x().vectors(F)[:, k]


def init_vector(tag: tuple, F: Field) -> np.ndarray:
    kind = tag[0]
    if kind == "plus":
        return x_basis_state(0, F)
    if kind == "x":
        return x_basis_state(tag[1], F)
    if kind == "z":
        v = np.zeros(F.d, dtype=complex)
        v[tag[1]] = 1
        return v
    if kind == "diag":
        return np.exp(1j * grid_to_angles(np.array(tag[1]), F)) * x_basis_state(0, F)
    raise ValueError(f"vertex tag {tag!r} has no standalone state")


# -- plain state vectors ------------------------------------------------------------


@dataclass
class StateVector:
    d: int
    n: int
    amplitudes: np.ndarray  # shape (d,)*n

    def copy(self) -> "StateVector":
        return StateVector(self.d, self.n, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def vector(self) -> np.ndarray:
        return self.amplitudes.reshape(-1)

    @classmethod
    def from_vector(cls, vec, d: int) -> "StateVector":
        vec = np.asarray(vec, dtype=complex)
        n = int(round(np.log(vec.size) / np.log(d)))
        if d**n != vec.size:
            raise ValueError("vector length is not a power of d")
        return cls(d, n, vec.reshape((d,) * n))


def product_state(vectors) -> StateVector:
    vectors = [np.asarray(v, dtype=complex) for v in vectors]
    d = vectors[0].size
    amp = np.array(1, dtype=complex)
    for v in vectors:
        amp = np.multiply.outer(amp, v)
    return StateVector(d, len(vectors), amp)


def apply_gate(state: StateVector, g: Gate, sites) -> StateVector:
    sites = [sites] if isinstance(sites, int) else list(sites)
    if len(sites) != g.arity or len(set(sites)) != len(sites):
        raise ValueError("gate arity does not match the site list")
    if g.d != state.d:
        raise ValueError("gate dimension differs from the qudit dimension")
    if any(not 0 <= s < state.n for s in sites):
        raise ValueError(f"site out of range for {state.n} qudits")
    k = g.arity
    U = g.matrix.reshape((state.d,) * (2 * k))
    amp = np.tensordot(U, state.amplitudes, axes=(list(range(k, 2 * k)), sites))
    amp = np.moveaxis(amp, list(range(k)), sites)
    return StateVector(state.d, state.n, amp)


def measure(state: StateVector, site: int, basis: Basis, F: Field, rng=None, forced=None):
    """Projective measurement; returns (outcome, collapsed state with the qudit projected)."""
    B = basis.vectors(F)
    amps = np.tensordot(B.conj().T, state.amplitudes, axes=([1], [site]))  # outcome axis first
    probs = np.sum(np.abs(amps.reshape(F.d, -1)) ** 2, axis=1)
    probs = probs / probs.sum()
    k = _choose(probs, rng, forced)
    post = np.multiply.outer(amps[k] / np.sqrt(probs[k]), B[:, k])
    post = np.moveaxis(post, -1, site)
    return k, StateVector(state.d, state.n, post)


def _choose(probs: np.ndarray, rng, forced) -> int:
    if forced is not None:
        if probs[forced] <= PROB_TOL:
            raise ZeroProbability(f"outcome {forced} has probability {probs[forced]:.3g}")
        return int(forced)
    if rng is None:
        raise ValueError("sampling a measurement needs an rng or a forced outcome")
    u = rng.random()
    k = int(np.searchsorted(np.cumsum(probs), u, side="right"))
    k = min(k, len(probs) - 1)
    while probs[k] <= PROB_TOL:  # guard against round-off at the cdf edges
        k = (k - 1) % len(probs)
    return k


def init_state(spec: ResourceSpec, vertex_states=None, max_amplitudes: int | None = None) -> StateVector:
    """Prepare every vertex, then apply all edges in spec order."""
    F = spec.field
    max_amplitudes = DEFAULT_MAX_AMPLITUDES if max_amplitudes is None else max_amplitudes
    if F.d**spec.n > max_amplitudes:
        raise CapExceeded(f"{F.d}^{spec.n} amplitudes exceed the cap {max_amplitudes}")
    vecs = []
    for v, tag in enumerate(spec.inits):
        if vertex_states is not None and v in vertex_states:
            vecs.append(vertex_states[v])
        else:
            vecs.append(init_vector(tag, F))
    state = product_state(vecs)
    amp = state.amplitudes
    for e in spec.edges:
        amp = amp * _edge_phase(e, F, spec.n)
    return StateVector(F.d, spec.n, amp)


def _edge_phase(e, F: Field, n: int) -> np.ndarray:
    tab = np.exp(2j * np.pi * e.exponent_table(F) / F.p)
    shape = [1] * n
    shape[e.u] = F.d
    shape[e.v] = F.d
    if e.u < e.v:
        return tab.reshape(shape)
    return tab.T.reshape(shape)


def fidelity_phase_invariant(A, B) -> float:
    """|<A,B>| / (|A| |B|) for states or gates (Hilbert-Schmidt inner product)."""
    a = A.matrix if isinstance(A, Gate) else (A.amplitudes if isinstance(A, StateVector) else np.asarray(A))
    b = B.matrix if isinstance(B, Gate) else (B.amplitudes if isinstance(B, StateVector) else np.asarray(B))
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    a, b = a.reshape(-1), b.reshape(-1)
    return float(abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b)))


# -- lazy register ---------------------------------------------------------------------


class Register:
    """Batched partial state over the currently live vertices of a resource."""

    def __init__(self, spec: ResourceSpec, inputs: np.ndarray | None = None, vertex_states=None,
                 max_amplitudes: int | None = None):
        self.spec = spec
        self.F = spec.field
        self.adj = spec.adjacency()
        self.vertex_states = vertex_states or {}
        self.max_amplitudes = DEFAULT_MAX_AMPLITUDES if max_amplitudes is None else max_amplitudes
        # inputs: (B, n_inputs, d) product inputs per batch element
        self.inputs = inputs
        batch = 1 if inputs is None else inputs.shape[0]
        self.tensor = np.ones((batch,), dtype=complex)
        self.sites: list[int] = []
        self.measured: set[int] = set()

    @property
    def batch(self) -> int:
        return self.tensor.shape[0]

    def clone_with(self, tensor: np.ndarray, sites: list[int], measured: set[int]) -> "Register":
        r = Register.__new__(Register)
        r.spec, r.F, r.adj = self.spec, self.F, self.adj
        r.vertex_states, r.max_amplitudes, r.inputs = self.vertex_states, self.max_amplitudes, self.inputs
        r.tensor, r.sites, r.measured = tensor, sites, measured
        return r

    def _vertex_vector(self, v: int) -> np.ndarray:
        if v in self.vertex_states:
            return np.broadcast_to(np.asarray(self.vertex_states[v], dtype=complex), (self.batch, self.F.d))
        tag = self.spec.inits[v]
        if tag[0] == "input":
            if self.inputs is None:
                raise ValueError(f"vertex {v} is an input slot but no inputs were given")
            return self.inputs[:, tag[1], :]
        return np.broadcast_to(init_vector(tag, self.F), (self.batch, self.F.d))

    def add(self, v: int) -> None:
        if v in self.sites or v in self.measured:
            return
        size = self.tensor.size * self.F.d
        if size > self.max_amplitudes:
            raise CapExceeded(f"register would hold {size} amplitudes (cap {self.max_amplitudes})")
        vec = self._vertex_vector(v)
        shape = (self.batch,) + (1,) * len(self.sites) + (self.F.d,)
        self.tensor = self.tensor[..., None] * vec.reshape(shape)
        self.sites.append(v)
        ax_new = len(self.sites)  # axis index of v (axis 0 is the batch)
        for w, e in self.adj[v]:
            if w in self.sites and w != v:
                self._apply_edge(e, self.sites.index(w) + 1, ax_new, w_is_u=(e.u == w))
            elif w in self.measured:
                raise RuntimeError(f"vertex {v} added after its neighbor {w} was measured")

    def _apply_edge(self, e, ax_w: int, ax_v: int, w_is_u: bool) -> None:
        tab = np.exp(2j * np.pi * e.exponent_table(self.F) / self.F.p)
        if not w_is_u:
            tab = tab.T  # now indexed [w, v]
        shape = [1] * self.tensor.ndim
        shape[ax_w] = self.F.d
        shape[ax_v] = self.F.d
        self.tensor = self.tensor * tab.reshape(shape)

    def prepare_for(self, v: int) -> None:
        """Make v and all its neighbors live so v can be measured."""
        self.add(v)
        for w, _ in self.adj[v]:
            self.add(w)

    def outcome_amplitudes(self, v: int, basis: Basis) -> np.ndarray:
        """Tensor with v's axis contracted against each basis vector; outcome axis last."""
        self.prepare_for(v)
        ax = self.sites.index(v) + 1
        B = basis.vectors(self.F)
        return np.tensordot(self.tensor, B.conj(), axes=([ax], [0]))

    def branch(self, v: int, amps_k: np.ndarray, prob: float) -> "Register":
        sites = [s for s in self.sites if s != v]
        return self.clone_with(amps_k / np.sqrt(prob), sites, self.measured | {v})

    def probabilities(self, amps: np.ndarray) -> np.ndarray:
        flat = np.abs(amps.reshape(-1, amps.shape[-1])) ** 2
        return flat.sum(axis=0) / self.batch

    def measure(self, v: int, basis: Basis, rng=None, forced=None):
        """Measure v; returns (outcome, probability, new register)."""
        amps = self.outcome_amplitudes(v, basis)
        probs = self.probabilities(amps)
        k = _choose(probs, rng, forced)
        return k, float(probs[k]), self.branch(v, amps[..., k], probs[k])

    def finish(self, outputs: list[int]) -> np.ndarray:
        """Matrix [output basis, batch] over the given output vertices (all others measured)."""
        for v in outputs:
            self.add(v)
        live = [s for s in self.sites if s not in outputs]
        unmeasured = [v for v in range(self.spec.n) if v not in self.measured and v not in outputs]
        if live or unmeasured:
            raise RuntimeError(f"vertices left unmeasured: {sorted(set(live) | set(unmeasured))}")
        order = [0] + [self.sites.index(v) + 1 for v in outputs]
        t = np.transpose(self.tensor, order)
        return t.reshape(self.batch, -1).T


# -- pattern protocol ---------------------------------------------------------------------


@dataclass(frozen=True)
class Request:
    vertex: int
    basis: Basis
    grid: tuple | None = None  # basis angles on the hiding grid; None for a Z measurement


class PatternRun(Protocol):  # pragma: no cover - structural type
    def next_request(self) -> Request | None: ...
    def record(self, outcome: int) -> None: ...
    def copy(self) -> "PatternRun": ...
    def outputs(self) -> list[int]: ...


class MeasurementPatternLike(Protocol):  # pragma: no cover
    def start(self) -> PatternRun: ...


def basis_inputs(F: Field, n_inputs: int) -> np.ndarray:
    """All d^k computational basis product inputs; wire 0 is the most significant digit."""
    d = F.d
    B = d**n_inputs
    out = np.zeros((B, n_inputs, d), dtype=complex)
    for b in range(B):
        r = b
        for j in reversed(range(n_inputs)):
            r, digit = divmod(r, d)
            out[b, j, digit] = 1
    return out


def count_inputs(spec: ResourceSpec) -> int:
    return sum(1 for t in spec.inits if t[0] == "input")


@dataclass
class BranchResult:
    outcomes: list
    probability: float
    residual: Gate | None
    run: object = None
    probabilities: list = dc_field(default_factory=list)


def enumerate_branches(spec: ResourceSpec, pattern, logical_sites=None, max_branches: int | None = None,
                       max_amplitudes: int | None = None) -> list[BranchResult]:
    """Every outcome sequence of an adaptive pattern with the induced map on the outputs.

    The logical map is reconstructed by pushing all d^k basis inputs through at once.
    ``logical_sites`` overrides the output vertices reported by the pattern.
    """
    F = spec.field
    max_branches = DEFAULT_MAX_BRANCHES if max_branches is None else max_branches
    k_in = count_inputs(spec)
    reg = Register(spec, basis_inputs(F, k_in) if k_in else None, max_amplitudes=max_amplitudes)
    results: list[BranchResult] = []

    def rec(reg: Register, run, outcomes, probs, prob):
        req = run.next_request()
        if req is None:
            outs = list(logical_sites) if logical_sites is not None else run.outputs()
            mat = reg.finish(outs)
            # rescale so that a unitary gadget yields a unitary residual
            mat = mat * np.sqrt(mat.shape[1]) / np.linalg.norm(mat) if np.linalg.norm(mat) > 0 else mat
            results.append(BranchResult(list(outcomes), prob, Gate(mat, len(outs), F.d, "residual"), run, list(probs)))
            if len(results) > max_branches:
                raise CapExceeded(f"more than {max_branches} branches")
            return
        amps = reg.outcome_amplitudes(req.vertex, req.basis)
        ps = reg.probabilities(amps)
        for k in range(F.d):
            if ps[k] <= PROB_TOL:
                continue
            child = run.copy()
            child.record(k)
            rec(reg.branch(req.vertex, amps[..., k], ps[k]), child, outcomes + [k], probs + [float(ps[k])], prob * ps[k])

    rec(reg, pattern.start(), [], [], 1.0)
    return results


def run_branch(spec: ResourceSpec, pattern, rng=None, forced=None, inputs=None, vertex_states=None,
               logical_sites=None, tamper: Callable | None = None, max_amplitudes: int | None = None,
               basis_batch: bool = True) -> BranchResult:
    """Follow a single path, sampled with ``rng`` or forced outcome by outcome.

    ``inputs`` is an array (B, k, d) of product logical inputs; by default all
    basis inputs are batched so the residual map is available.  ``tamper`` maps
    (step index, request, true outcome) to the reported outcome.
    """
    F = spec.field
    k_in = count_inputs(spec)
    if inputs is None and k_in:
        inputs = basis_inputs(F, k_in) if basis_batch else None
    reg = Register(spec, inputs, vertex_states, max_amplitudes)
    run = pattern.start() if hasattr(pattern, "start") else pattern
    outcomes, probs, prob = [], [], 1.0
    i = 0
    while (req := run.next_request()) is not None:
        f = None if forced is None else forced[i]
        k, p, reg = reg.measure(req.vertex, req.basis, rng, f)
        reported = tamper(i, req, k) if tamper is not None else k
        run.record(reported)
        outcomes.append(reported)
        probs.append(p)
        prob *= p
        i += 1
    outs = list(logical_sites) if logical_sites is not None else run.outputs()
    residual = None
    if outs:
        mat = reg.finish(outs)
        nrm = np.linalg.norm(mat)
        if nrm > 0:
            mat = mat * np.sqrt(mat.shape[1]) / nrm
        residual = Gate(mat, len(outs), F.d, "residual")
    else:
        reg.finish([])
    return BranchResult(outcomes, prob, residual, run, probs)
