"""Invariant suites: algebra, gadgets, mirror, blindness.

Every check is a plain dict ``{"name", "passed", "tolerance", "max_error", ...}``
so reports serialize directly.  Nothing time-dependent goes into a report.
"""

from __future__ import annotations

import itertools
import sys
import time

import numpy as np

from . import blind
from .galois import (
    SUPPORTED_LIFTS,
    Field,
    galois_ring,
    make_field,
    ring_char_exponent,
    ring_trace,
    teichmuller_lift,
)
from .gates import (
    Gate,
    angle_grid_size,
    clock,
    cz,
    decompose_mult,
    equal_up_to_phase,
    ge_gate,
    hadamard,
    is_clifford,
    is_pauli_up_to_phase,
    mult_gate,
    omega,
    phase,
    phase_grid,
    product,
    ring_gate,
    shift,
    t_conjugation_closed_form,
    t_gate,
)
from .mbqc import (
    corrected_residual,
    embed_two,
    grid_gate,
    interpret_output,
    inverse,
    layer_operator,
    mirror_target,
    pattern_brickwork,
    pattern_open_ended,
    repeated,
    steered_closed_form,
    steered_entangler,
    decorated_pattern,
    DecoratedProgram,
    Circuit,
    lattice_pattern,
)
from .resources import Edge, PLUS, ResourceSpec, build_bridged_pair, decorate, hide_graph, intrinsic_gate
from .simulator import (
    Basis,
    CapExceeded,
    ZeroProbability,
    basis_inputs,
    enumerate_branches,
    init_state,
    measure,
    run_branch,
)

SWEEP = ((2, 1), (3, 1), (2, 2), (5, 1), (2, 3), (3, 2))
SUITES = ("algebra", "gadgets", "mirror", "blindness")


def check(name: str, passed: bool, tolerance=None, max_error=None, **detail) -> dict:
    rec = {"name": name, "passed": bool(passed), "tolerance": tolerance,
           "max_error": None if max_error is None else float(max_error)}
    rec.update(detail)
    return rec


def _err(A, B) -> float:
    return float(np.max(np.abs(np.asarray(A) - np.asarray(B))))


def _phase_err(A, B) -> float:
    """Entrywise error after aligning the global phase of A to B."""
    A, B = np.asarray(A), np.asarray(B)
    ip = np.vdot(A.reshape(-1), B.reshape(-1))
    ph = ip / abs(ip) if abs(ip) > 1e-14 else 1.0
    return _err(A * ph, B)


def field_label(F: Field) -> str:
    return f"GF({F.p}^{F.m})"


# -- algebra ------------------------------------------------------------------------------


def field_checks(F: Field) -> list[dict]:
    A, M = F.add_table, F.mul_table
    r = np.arange(F.d)
    a, b, c = np.meshgrid(r, r, r, indexing="ij")
    ok = (
        np.array_equal(A, A.T)
        and np.array_equal(M, M.T)
        and np.array_equal(A[A[a, b], c], A[a, A[b, c]])
        and np.array_equal(M[M[a, b], c], M[a, M[b, c]])
        and np.array_equal(M[a, A[b, c]], A[M[a, b], M[a, c]])
        and np.array_equal(A[0], r)
        and np.array_equal(M[1], r)
        and np.all(A[r, F.neg_table] == 0)
        and np.all(M[r[1:], F.inv_table[1:]] == 1)
    )
    tr = F.trace_table
    lin = np.array_equal(tr[A], (tr[:, None] + tr[None, :]) % F.p)
    lin &= all(np.array_equal(tr[M[F.from_int(k)]], (k * tr) % F.p) for k in range(F.p))
    frob = True
    for x in range(F.d):
        s, y = 0, x
        for _ in range(F.m):
            s = int(A[s, y])
            y = F.pow(y, F.p)
        frob &= s == F.from_int(int(tr[x]))
    chi = np.exp(2j * np.pi * F.chi_exponent_table / F.p)
    chv = np.exp(2j * np.pi * tr / F.p)
    mult_err = _err(chv[:, None] * chv[None, :], chv[A])
    sums = chi.sum(axis=1)
    want = np.zeros(F.d)
    want[0] = F.d
    orth_err = _err(sums, want)
    L = field_label(F)
    return [
        check(f"{L} field axioms", ok),
        check(f"{L} trace linear, surjective, equals Frobenius sum", lin and frob and set(tr.tolist()) == set(range(F.p))),
        check(f"{L} character multiplicative", mult_err <= 1e-12, 1e-12, mult_err),
        check(f"{L} character orthogonality", orth_err <= 1e-12, 1e-12, orth_err),
    ]


def ring_checks(F: Field) -> list[dict]:
    out = []
    for (p, s) in sorted(SUPPORTED_LIFTS):
        if p != F.p:
            continue
        R = galois_ring(F, s)
        lifts = [teichmuller_lift(F.element(a), R) for a in range(F.d)]
        mult = all(R.mul(lifts[a], lifts[b]) == lifts[int(F.mul_table[a, b])] for a in range(F.d) for b in range(F.d))
        red = all(R.reduce(lifts[a]) == a for a in range(F.d))
        fixed = all(R.pow(t, F.d) == t for t in lifts)
        trace_ok = all(ring_trace(t, R) % p == int(F.trace_table[R.reduce(t)]) for t in R.elements())
        out.append(check(f"{field_label(F)} GR({p**s},{F.m}) Teichmuller lift and trace", mult and red and fixed and trace_ok))
    return out


def conjugation_checks(F: Field, tol: float = 1e-12) -> list[dict]:
    d, L = F.d, field_label(F)
    X = [shift(x, F).matrix for x in range(d)]
    Z = [clock(z, F).matrix for z in range(d)]
    H = hadamard(F).matrix
    err_m = err_h = err_s = err_cz = 0.0
    for lam in range(1, d):
        Mm = mult_gate(lam, F).matrix
        inv = int(F.inv_table[lam])
        for x in range(d):
            err_m = max(err_m, _err(Mm @ Z[x] @ Mm.conj().T, Z[F.mul_table[inv, x]]))
            err_m = max(err_m, _err(Mm @ X[x] @ Mm.conj().T, X[F.mul_table[lam, x]]))
    for x in range(d):
        err_h = max(err_h, _err(H @ Z[x] @ H.conj().T, X[F.neg_table[x]]))
        err_h = max(err_h, _err(H @ X[x] @ H.conj().T, Z[x]))
    h2 = _err(H @ H, mult_gate(int(F.neg_table[1]), F).matrix)
    if F.p != 2:
        half = F.from_int(pow(2, -1, F.p))
        for lam in range(1, d):
            S = phase(lam, F).matrix
            for x in range(d):
                coef = np.exp(2j * np.pi * F.trace_table[F.mul_table[half, F.mul_table[lam, F.mul_table[x, x]]]] / F.p)
                want = coef * X[x] @ Z[F.mul_table[lam, x]]
                err_s = max(err_s, _err(S @ X[x] @ S.conj().T, want), _err(S @ Z[x] @ S.conj().T, Z[x]))
    else:
        S = phase(1, F).matrix
        for x in range(d):
            coef = 1j ** ring_char_exponent(F.element(x), F, 2, power=2)
            err_s = max(err_s, _err(S @ X[x] @ S.conj().T, coef * X[x] @ Z[x]), _err(S @ Z[x] @ S.conj().T, Z[x]))
    C = cz(F).matrix
    eye = np.eye(d)
    for x in range(d):
        err_cz = max(err_cz, _err(C @ np.kron(X[x], eye) @ C.conj().T, np.kron(X[x], Z[x])))
        err_cz = max(err_cz, _err(C @ np.kron(Z[x], eye) @ C.conj().T, np.kron(Z[x], eye)))
    return [
        check(f"{L} M(lam) conjugation", err_m <= tol, tol, err_m),
        check(f"{L} Hadamard conjugation", err_h <= tol, tol, err_h),
        check(f"{L} H^2 = M(-1)", h2 <= tol, tol, h2),
        check(f"{L} phase-gate conjugation", err_s <= tol, tol, err_s),
        check(f"{L} CZ conjugation", err_cz <= tol, tol, err_cz),
    ]


def ring_qudit_checks(d: int, tol: float = 1e-12) -> list[dict]:
    X, Z = ring_gate("X", d).matrix, ring_gate("Z", d).matrix
    paulis = {}
    for a, b in itertools.product(range(d), repeat=2):
        paulis[(a, b)] = np.linalg.matrix_power(Z, a) @ np.linalg.matrix_power(X, b)
    comm = max(
        _err(np.linalg.matrix_power(X, b) @ np.linalg.matrix_power(Z, a), omega(d, -a * b) * paulis[(a, b)])
        for a, b in itertools.product(range(d), repeat=2)
    )

    def is_pauli(G):
        return any(equal_up_to_phase(G, P, 1e-9) for P in paulis.values())

    ok = True
    for name in ("H", "S"):
        U = ring_gate(name, d).matrix
        ok &= is_pauli(U @ X @ U.conj().T) and is_pauli(U @ Z @ U.conj().T)
    return [
        check(f"Z_{d} Pauli commutation", comm <= tol, tol, comm),
        check(f"Z_{d} H and S are Clifford", ok),
    ]


def anchor_checks(tol: float = 1e-12) -> list[dict]:
    F2, F3 = make_field(2), make_field(3)
    s2 = _err(phase(1, F2).matrix, np.diag([1, 1j]))
    t2 = _err(t_gate(F2).matrix, np.diag([1, np.exp(1j * np.pi / 4)]))
    w = np.exp(2j * np.pi / 9)
    t3 = _err(t_gate(F3).matrix, np.diag([1, w, w.conjugate()]))
    return [
        check("S at d=2 is diag(1, i)", s2 <= tol, tol, s2),
        check("T at d=2 is diag(1, e^{i pi/4})", t2 <= tol, tol, t2),
        check("T at d=3 is diag(1, w9, w9^-1)", t3 <= tol, tol, t3),
    ]


def t_checks(F: Field, tol: float = 1e-10) -> list[dict]:
    """T X(x) T^dag against the closed form (literal and corrected), and non-Pauliness."""
    T = t_gate(F).matrix
    lit_err = cor_err = 0.0
    non_pauli = True
    for x in range(1, F.d):
        G = T @ shift(x, F).matrix @ T.conj().T
        lit_err = max(lit_err, _phase_err(t_conjugation_closed_form(x, F).matrix, G))
        cor_err = max(cor_err, _phase_err(t_conjugation_closed_form(x, F, corrected=True).matrix, G))
        non_pauli &= is_pauli_up_to_phase(G, F) is None
    L = field_label(F)
    out = [
        check(f"{L} T non-Clifford (X(x) conjugates to a non-Pauli)", non_pauli),
        check(f"{L} T conjugation closed form" + (" (literal p=2 version)" if F.p == 2 else ""),
              lit_err <= tol, tol, lit_err, form="literal"),
    ]
    if F.p == 2:
        out.append(check(f"{L} T conjugation closed form with chi(u^3 x + u x^3)", cor_err <= tol, tol, cor_err,
                         form="corrected"))
    return out


def mult_decomposition_checks(F: Field, tol: float = 1e-10) -> list[dict]:
    worst = 0.0
    for lam in range(1, F.d):
        worst = max(worst, _phase_err(product(decompose_mult(lam, F)).matrix, mult_gate(lam, F).matrix))
    return [check(f"{field_label(F)} M(lam) = H S(lam) H S(lam^-1) H S(lam)", worst <= tol, tol, worst)]


def suite_algebra(fields) -> list[dict]:
    out = anchor_checks()
    for F in fields:
        out += field_checks(F) + ring_checks(F) + conjugation_checks(F) + t_checks(F) + mult_decomposition_checks(F)
        out += ring_qudit_checks(F.d)
    out += ring_qudit_checks(6)
    return out


# -- gadgets -------------------------------------------------------------------------------


BRICKWORK_CASES = (
    ("identity", 0, False),
    ("identity", 0, True),
    ("hadamard", 0, False),
    ("hadamard", 1, False),
    ("cx", 0, False),
    ("diag", 0, False),
    ("diag", 1, False),
)


def brickwork_gadget_check(F: Field, kind: str, wire: int, cz_only: bool, samples: int | None = None,
                           seed: int = 0, tol: float = 1e-9, max_branches: int = 3**8) -> dict:
    """Frame-corrected fidelity on every branch (or on ``samples`` seeded runs)."""
    rng = np.random.default_rng(seed)
    grid = None
    if kind == "diag":
        grid = rng.integers(0, angle_grid_size(F), F.d)
        grid[0] = 0
    spec, pat = pattern_brickwork(kind, F, wire, grid, cz_only)
    target = pat.meta["target"]
    worst, total_p, n = 0.0, 0.0, 0
    if samples is None:
        results = enumerate_branches(spec, pat, max_branches=max_branches)
        total_p = sum(r.probability for r in results)
    else:
        results = (run_branch(spec, pat, rng=rng) for _ in range(samples))
    for r in results:
        G = corrected_residual(r, F).matrix
        fid = abs(np.trace(G.conj().T @ target)) / target.shape[0]
        worst = max(worst, 1 - fid)
        n += 1
    name = f"{field_label(F)} brickwork {kind}" + (f"[wire {wire}]" if kind in ("hadamard", "diag") else "")
    name += " (CZ-only)" if cz_only else ""
    rec = check(name, worst <= tol, tol, worst, branches=n, mode="exhaustive" if samples is None else "sampled")
    if samples is None:
        rec["probability_sum_error"] = abs(total_p - 1)
        rec["passed"] = rec["passed"] and abs(total_p - 1) <= 1e-9
    return rec


def teleport_check(F: Field, tol: float = 1e-10) -> dict:
    """Measuring qudit 1 of CZ(psi (x) |0_X>) with angles phi leaves X(k) H D_phi^dag psi."""
    rng = np.random.default_rng(7)
    d = F.d
    worst = 0.0
    for _ in range(3):
        psi = rng.normal(size=d) + 1j * rng.normal(size=d)
        psi /= np.linalg.norm(psi)
        g = rng.integers(0, angle_grid_size(F), d)
        spec = ResourceSpec(F, (PLUS, PLUS), (Edge(0, 1),))
        state = init_state(spec, {0: psi})
        phi = 2 * np.pi * g / angle_grid_size(F)
        for k in range(d):
            try:
                _, post = measure(state, 0, Basis.x(phi), F, forced=k)
            except ZeroProbability:
                continue
            out = np.tensordot(Basis.x(phi).vectors(F)[:, k].conj(), post.amplitudes, axes=([0], [0]))
            want = shift(k, F).matrix @ hadamard(F).matrix @ np.diag(np.exp(-1j * phi)) @ psi
            worst = max(worst, _phase_err(out / np.linalg.norm(out), want))
    return check(f"{field_label(F)} teleportation step X(k) H D^dag", worst <= tol, tol, worst)


def readout_pipeline_check(F: Field) -> dict:
    """|k_Z> through a brickwork identity unit, read out in Z, frame-corrected."""
    spec, pat = pattern_brickwork("identity", F)
    pat = pat.with_readout()
    rng = np.random.default_rng(3)
    ok = True
    for k in range(F.d):
        inp = np.zeros((1, 2, F.d), dtype=complex)
        inp[0, 0, k] = 1
        inp[0, 1, (k + 1) % F.d] = 1
        res = run_branch(spec, pat, rng=rng, inputs=inp)
        run = res.run
        got = interpret_output([run.readouts[0], run.readouts[1]], run.final_frames(), F)
        ok &= got == [k, (k + 1) % F.d]
    return check(f"{field_label(F)} brickwork identity recovers basis inputs", ok)


def _neighbor_state(state, measured: list[tuple[int, np.ndarray]], keep: list[int]) -> np.ndarray:
    amp = state.amplitudes
    sites = list(range(state.n))
    for site, vec in sorted(measured, key=lambda t: -t[0]):
        amp = np.tensordot(amp, vec.conj(), axes=([site], [0]))
        sites.pop(site)
    order = [sites.index(k) for k in keep]
    v = np.transpose(amp, order).reshape(-1)
    return v / np.linalg.norm(v)


def hair_checks(F: Field, seeds: int = 20, tol: float = 1e-9) -> list[dict]:
    """Hair-simulated X and Z measurements against genuine ones, branch by branch.

    The centre vertex has three neighbours prepared in random states with random
    edge powers, plus a random edge between two of the neighbours.
    """
    d, N = F.d, angle_grid_size(F)
    worst = {"z": 0.0, "x": 0.0}
    branches = {"z": 0, "x": 0}
    sdag = -np.asarray(phase_grid(1, F))
    for seed in range(seeds):
        rng = np.random.default_rng(seed)
        edges = tuple(Edge(0, j, int(rng.integers(1, F.p)) if F.p > 2 else 1) for j in (1, 2, 3))
        if rng.random() < 0.5:
            edges += (Edge(1, 2),)
        base = ResourceSpec(F, (PLUS,) * 4, edges)
        spec = decorate(base, [0])
        h1, h2 = spec.hairs[0]
        states = {}
        for j in (1, 2, 3):
            v = rng.normal(size=d) + 1j * rng.normal(size=d)
            states[j] = v / np.linalg.norm(v)
        deco = init_state(spec, states)
        plain = init_state(base, states)
        phi = rng.integers(0, N, d)
        phi[0] = 0
        for kind in ("z", "x"):
            grids = [sdag, sdag, sdag] if kind == "z" else [-phi, np.zeros(d, int), np.zeros(d, int)]
            bases = [Basis.x(2 * np.pi * g / N) for g in grids]
            for ks in itertools.product(range(d), repeat=3):
                s = deco
                try:
                    for site, B, k in zip((0, h1, h2), bases, ks):
                        _, s = measure(s, site, B, F, forced=k)
                except ZeroProbability:
                    continue
                sim = _neighbor_state(s, [(0, bases[0].vectors(F)[:, ks[0]]), (h1, bases[1].vectors(F)[:, ks[1]]),
                                          (h2, bases[2].vectors(F)[:, ks[2]])], [1, 2, 3])
                if kind == "z":
                    j, B = int(F.add_table[ks[1], F.neg_table[ks[2]]]), Basis.z()
                else:
                    j, B = int(F.add_table[ks[0], F.neg_table[ks[2]]]), bases[0]
                try:
                    _, g = measure(plain, 0, B, F, forced=j)
                except ZeroProbability:
                    worst[kind] = max(worst[kind], 1.0)
                    continue
                gen = _neighbor_state(g, [(0, B.vectors(F)[:, j])], [1, 2, 3])
                worst[kind] = max(worst[kind], 1 - abs(np.vdot(sim, gen)))
                branches[kind] += 1
    L = field_label(F)
    return [
        check(f"{L} hair-simulated Z measurement (outcome k2-k3)", worst["z"] <= tol, tol, worst["z"], branches=branches["z"]),
        check(f"{L} hair-simulated rotated-X measurement (outcome k1-k3)", worst["x"] <= tol, tol, worst["x"], branches=branches["x"]),
    ]


def carving_check(F: Field, decorated: bool, samples: int = 20, tol: float = 1e-9) -> dict:
    """Y-bridges and Z deletions carve CZ couplings out of a 3 x 5 cluster."""
    rng = np.random.default_rng(5)
    N = angle_grid_size(F)
    gates = {(0, 0): tuple(int(g) for g in rng.integers(0, N, F.d)), (1, 2): tuple(int(g) for g in rng.integers(0, N, F.d))}
    prog = DecoratedProgram(2, 5, gates, {(0, 1), (0, 3)})
    spec, pat = decorated_pattern(F, prog, physical=not decorated)
    target = pat.ideal.matrix()
    worst = 0.0
    for _ in range(samples):
        r = run_branch(spec, pat, rng=rng)
        G = corrected_residual(r, F).matrix
        worst = max(worst, 1 - abs(np.trace(G.conj().T @ target)) / target.shape[0])
    how = "hair-simulated" if decorated else "genuine"
    return check(f"{field_label(F)} carved CZ couplings ({how} Y/Z measurements)", worst <= tol, tol, worst, runs=samples)


def carving_exhaustive_check(F: Field, tol: float = 1e-9) -> dict:
    """2 x 3 carving (one Y bridge) over all branches with genuine measurements."""
    prog = DecoratedProgram(2, 3, {}, {(0, 1)})
    spec, pat = decorated_pattern(F, prog, physical=True)
    target = pat.ideal.matrix()
    res = enumerate_branches(spec, pat, max_branches=10**6)
    worst = max(1 - abs(np.trace(corrected_residual(r, F).matrix.conj().T @ target)) / target.shape[0] for r in res)
    total = sum(r.probability for r in res)
    return check(f"{field_label(F)} Y/Z carving reproduces CZ on every branch", worst <= tol and abs(total - 1) <= 1e-9,
                 tol, worst, branches=len(res))


def schmidt_rank(vec: np.ndarray, left_dim: int, cutoff: float = 1e-10) -> tuple[int, np.ndarray]:
    s = np.linalg.svd(vec.reshape(left_dim, -1), compute_uv=False)
    return int(np.sum(s > cutoff)), s


def hiding_checks(F: Field, tol: float = 1e-10) -> list[dict]:
    rng = np.random.default_rng(0)
    d = F.d
    tmpl = build_bridged_pair(1, F)  # top 0, bottom 1, ancilla 2
    results = {}
    for wanted in ((), (2,)):
        ranks, flat = [], True
        for _ in range(5):
            spec, choice = hide_graph(tmpl, wanted, rng)
            st = init_state(spec)
            # cut: top | (bottom, ancilla)
            rank, s = schmidt_rank(st.amplitudes.reshape(-1), d, tol)
            ranks.append(rank)
            flat &= np.max(np.abs(s[:rank] - s[0])) <= tol
        results[bool(wanted)] = (ranks, flat)
    # reduced ancilla state averaged over the secret value
    mixed = 0.0
    for wanted in ((), (2,)):
        rho = np.zeros((d, d), dtype=complex)
        for k in range(d):
            from .resources import x_state, z_state
            from .simulator import init_vector

            v = init_vector(x_state(k) if wanted else z_state(k), F)
            rho += np.outer(v, v.conj()) / d
        mixed = max(mixed, _err(rho, np.eye(d) / d))
    # GE entanglers
    ge_ok, prod_err = True, 0.0
    plus = np.ones(d) / np.sqrt(d)
    for N in range(1, d):
        G = ge_gate(N, F)
        ge_ok &= is_clifford(intrinsic_gate(G, F), F, 1)
        for k in range(d):
            kz = np.zeros(d)
            kz[k] = 1
            out = G.matrix @ np.kron(kz, plus)
            want = np.kron(kz, clock(int(F.mul_table[N, k]), F).matrix @ plus)
            prod_err = max(prod_err, _err(out, want))
    ge1 = equal_up_to_phase(intrinsic_gate(ge_gate(1, F), F), hadamard(F))
    L = field_label(F)
    sev, brid = results[False], results[True]
    return [
        check(f"{L} severed cut has Schmidt rank 1", all(r == 1 for r in sev[0]), tol, ranks=sev[0]),
        check(f"{L} bridged cut is maximally entangled", all(r == d for r in brid[0]) and brid[1], tol, ranks=brid[0]),
        check(f"{L} hidden ancilla reduced state is maximally mixed", mixed <= tol, tol, mixed),
        check(f"{L} GE(N) intrinsic gates are Clifford, GE(1) gives H", ge_ok and ge1),
        check(f"{L} GE(N)|k_Z>|0_X> = |k_Z> Z(Nk)|0_X>", prod_err <= 1e-12, 1e-12, prod_err),
    ]


def suite_gadgets(fields, samples: int = 200, max_branches: int = 3**8) -> list[dict]:
    out = []
    for F in fields:
        exhaustive = F.d**8 <= max_branches
        for kind, wire, cz_only in BRICKWORK_CASES:
            out.append(brickwork_gadget_check(F, kind, wire, cz_only, None if exhaustive else samples,
                                              max_branches=max_branches))
        out.append(teleport_check(F))
        out.append(readout_pipeline_check(F))
        if F.d <= 5:
            out += hair_checks(F)
        if F.d <= 3:
            out.append(carving_exhaustive_check(F))
            out.append(carving_check(F, True))
        out += hiding_checks(F)
    return out


# -- mirror / steering ----------------------------------------------------------------------


def circuits_equal_up_to_phase(c1: Circuit, c2: Circuit, chunk: int = 512, tol: float = 1e-10) -> tuple[bool, float]:
    """Compare two circuits column block by column block with one shared global phase."""
    d, n = c1.field.d, c1.n
    dim = d**n
    ph = None
    worst = 0.0
    for start in range(0, dim, chunk):
        idx = np.arange(start, min(dim, start + chunk))
        batch = np.zeros((idx.size, dim), dtype=complex)
        batch[np.arange(idx.size), idx] = 1
        batch = batch.reshape((idx.size,) + (d,) * n)
        a = c1.apply(batch).reshape(idx.size, -1)
        b = c2.apply(batch).reshape(idx.size, -1)
        if ph is None:
            ip = np.vdot(a.reshape(-1), b.reshape(-1))
            ph = ip / abs(ip)
        worst = max(worst, _err(a * ph, b))
    return worst <= tol, worst


def mirror_checks(F: Field, ns=(2, 3, 4, 5), tol: float = 1e-10) -> list[dict]:
    out = []
    for n in ns:
        ok, err = circuits_equal_up_to_phase(repeated(layer_operator(F, n), n + 1), mirror_target(F, n), tol=tol)
        what = "reversal" if n % 2 == 0 else "reversal with M(-1) on every wire"
        out.append(check(f"{field_label(F)} C_{n}^{n + 1} is the {what}", ok, tol, err))
    return out


def swap_lattice_check(F: Field, tol: float = 1e-9, max_branches: int = 10**6) -> dict:
    spec, pat = pattern_open_ended("mirror", 2, F)
    target = mirror_target(F, 2).matrix()
    res = enumerate_branches(spec, pat, max_branches=max_branches)
    worst = max(1 - abs(np.trace(corrected_residual(r, F).matrix.conj().T @ target)) / target.shape[0] for r in res)
    total = sum(r.probability for r in res)
    return check(f"{field_label(F)} 2 x 4 open-ended lattice implements SWAP", worst <= tol and abs(total - 1) <= 1e-9,
                 tol, worst, branches=len(res))


def steering_checks(F: Field, ns=(3, 4), tol: float = 1e-10) -> list[dict]:
    rng = np.random.default_rng(11)
    N = angle_grid_size(F)
    worst, clifford = 0.0, True
    for n in ns:
        for m in range(2, n + 1):
            for _ in range(2):
                g = rng.integers(0, N, F.d)
                g[0] = 0
                chain, wires = steered_entangler(F, n, m, g)
                closed = embed_two(F, n, wires, steered_closed_form(F, n, m, g))
                _, err = circuits_equal_up_to_phase(chain, closed, tol=tol)
                worst = max(worst, err)
            for lam in range(1, F.d):
                grid = phase_grid(lam, F)
                chain, wires = steered_entangler(F, n, m, grid)
                two = steered_closed_form(F, n, m, grid)
                _, err = circuits_equal_up_to_phase(chain, embed_two(F, n, wires, two), tol=tol)
                worst = max(worst, err)
                clifford &= is_clifford(Gate(two, 2, F.d, "steered"), F, 2)
    L = field_label(F)
    return [
        check(f"{L} steered entangler matches the even/odd closed forms", worst <= tol, tol, worst),
        check(f"{L} steered S(lam) entangler is Clifford", clifford),
    ]


def steering_lattice_check(F: Field, n: int = 3, m: int = 2, samples: int = 10, tol: float = 1e-9) -> dict:
    """Rotated first-row measurement on the lattice gives G C^(n+1)."""
    rng = np.random.default_rng(2)
    grid = phase_grid(1, F)
    spec, pat = pattern_open_ended("entangle", n, F, grid=grid, m=m)
    chain, wires = steered_entangler(F, n, m, grid)
    target = Circuit(F, n).extend(repeated(layer_operator(F, n), n + 1)).extend(chain).matrix()
    worst = 0.0
    for _ in range(samples):
        r = run_branch(spec, pat, rng=rng)
        G = corrected_residual(r, F).matrix
        worst = max(worst, 1 - abs(np.trace(G.conj().T @ target)) / target.shape[0])
    return check(f"{field_label(F)} entangle pattern on the {n} x {n + 2} lattice", worst <= tol, tol, worst, runs=samples)


def hadamard_identity_check(F: Field, tol: float = 1e-10) -> dict:
    S, H = phase(1, F).matrix, hadamard(F).matrix
    err = _phase_err(S @ H @ S @ H.conj().T @ S, H)
    return check(f"{field_label(F)} H = S(1) H S(1) H^dag S(1)", err <= tol, tol, err)


def suite_mirror(fields) -> list[dict]:
    out = []
    for F in fields:
        out.append(hadamard_identity_check(F))
        if F.m == 1 and F.d <= 5:
            out += mirror_checks(F)
            out.append(swap_lattice_check(F))
            out += steering_checks(F)
            out.append(steering_lattice_check(F))
    return out


# -- blindness ------------------------------------------------------------------------------


def blind_correctness_check(F: Field, arch: str, programs: int = 50, seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    shapes = {"brickwork": [(2, 1), (2, 2), (4, 2)], "open-ended": [(2, 1), (3, 2), (4, 1)], "decorated": [(2, 2), (2, 3)]}
    bad = 0
    for i in range(programs):
        n, depth = shapes[arch][i % len(shapes[arch])]
        prog = blind.random_program(arch, F, rng, n, depth)
        res = blind.run_protocol(arch, prog, F, seed + i)
        bad += not res.reference_ok
    return check(f"{field_label(F)} {arch}: blinded run equals unblinded reference", bad == 0, programs=programs, mismatches=bad)


def instruction_grid_check(F: Field) -> dict:
    rng = np.random.default_rng(1)
    aset = blind.AngleSet(F)
    N = aset.size
    ok = True
    for _ in range(200):
        desired = rng.integers(0, N, F.d)
        pad = rng.integers(0, N, F.d)
        pad[0] = 0
        r, x = int(rng.integers(F.d)), int(rng.integers(F.d))
        grid = blind.client_instruct(desired, pad, r, x, F)
        ok &= aset.contains(grid_to_angles_list(grid, F)) and grid[0] == 0
    return check(f"{field_label(F)} instructed angles lie on the hiding grid", ok)


def grid_to_angles_list(grid, F):
    return [2 * np.pi * g / angle_grid_size(F) for g in grid]


def trap_checks(F: Field, seed: int = 0) -> list[dict]:
    rng = np.random.default_rng(seed)
    honest = tampered = nontrap = True
    for arch in blind.ARCHITECTURES:
        for i in range(5):
            prog = blind.random_program(arch, F, rng, 2, 2)
            if arch == "open-ended":
                prog.ops = [op for op in prog.ops if op["gate"] == "diag_in" or op["gate"] == "mirror"] or [{"gate": "mirror"}]
            prog = blind.insert_traps(prog, 1 if arch != "decorated" else 2, rng, F)
            res = blind.run_protocol(arch, prog, F, seed + i, check_reference=False)
            honest &= res.trap_ok is True
            # single-outcome tamper on a trap
            if arch == "decorated":
                v = res.secret.trap_vertices[0]
                hits = [j for j, ev in enumerate(res.transcript.instructions()) if ev["site"] == v]
            else:
                w = next(iter(prog.traps))
                v = res.pattern.final_locations()[w]
                hits = [j for j, ev in enumerate(res.transcript.instructions()) if ev["site"] == v]
            target = hits[0]

            def tamper(j, req, k, target=target):
                return int(F.add_table[k, 1]) if j == target else k

            bad = blind.run_protocol(arch, prog, F, seed + i, tamper=tamper, check_reference=False)
            tampered &= bad.trap_ok is False
            if arch != "decorated":
                data_out = [loc for w2, loc in enumerate(res.pattern.final_locations()) if w2 not in prog.traps]
                hits = [j for j, ev in enumerate(res.transcript.instructions()) if ev["site"] in data_out]

                def tamper2(j, req, k, hits=hits):
                    return int(F.add_table[k, 1]) if j == hits[0] else k

                ok2 = blind.run_protocol(arch, prog, F, seed + i, tamper=tamper2, check_reference=False)
                nontrap &= ok2.trap_ok is True
    L = field_label(F)
    return [
        check(f"{L} honest server passes every trap", honest),
        check(f"{L} single trap outcome +1 is rejected", tampered),
        check(f"{L} tampering a data readout only is accepted", nontrap),
    ]


def audit_check(F: Field, runs: int = 10_000, seed: int = 11, alpha: float = 0.01) -> tuple[dict, dict]:
    groups, report = blind.audit_programs(F, {"H": blind.h_program(F), "T": blind.t_program(F)}, runs, seed)
    raw = min(t["p"] for t in report["tests"])
    rec = check(f"{field_label(F)} blindness audit H vs T over {runs} runs", report["passed"], alpha,
                None, min_p_raw=raw, raw_below_alpha=sum(t["p"] < alpha for t in report["tests"]),
                min_p_adjusted=report["min_p_adjusted"], tests=len(report["tests"]))
    same = [groups["H"][0]] * max(1000, min(runs, 1000))
    degenerate = blind.blindness_audit({"same": same}, alpha, min_samples=len(same))
    rec2 = check(f"{field_label(F)} audit flags identical transcripts", not degenerate["passed"])
    return rec, rec2


def suite_blindness(fields, programs: int = 50, audit_runs: int = 10_000) -> list[dict]:
    out = []
    for F in fields:
        out.append(instruction_grid_check(F))
        for arch in blind.ARCHITECTURES:
            out.append(blind_correctness_check(F, arch, programs))
        out += trap_checks(F)
    F2 = next((F for F in fields if F.d == 2), None)
    if F2 is not None and audit_runs:
        out += list(audit_check(F2, audit_runs))
    return out


# -- driver -------------------------------------------------------------------------------


def default_fields(suite: str) -> list[Field]:
    if suite in ("algebra", "gadgets"):
        return [make_field(p, m) for p, m in SWEEP]
    if suite == "mirror":
        return [make_field(p, m) for p, m in SWEEP]
    return [make_field(2), make_field(3)]


def run_suite(suite: str, fields=None, max_branches: int = 3**8, **kw) -> dict:
    if suite not in SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}")
    fields = fields or default_fields(suite)
    start = time.perf_counter()
    try:
        if suite == "algebra":
            checks = suite_algebra(fields)
        elif suite == "gadgets":
            checks = suite_gadgets(fields, max_branches=max_branches, **kw)
        elif suite == "mirror":
            checks = suite_mirror(fields)
        else:
            checks = suite_blindness(fields, **kw)
        error = None
    except CapExceeded as exc:
        checks, error = [], f"cap exceeded: {exc}"
    blind.log_timing(f"verify {suite}", start)
    # the literal p = 2 T closed form fails for m > 1; listed separately, still a failure
    known = [c["name"] for c in checks if not c["passed"] and c.get("form") == "literal"]
    passed = error is None and all(c["passed"] for c in checks)
    return {
        "suite": suite,
        "fields": [F.to_json() for F in fields],
        "checks": checks,
        "known_failures": known,
        "error": error,
        "passed": passed,
    }


def main_report(report: dict, stream=None) -> None:
    stream = stream or sys.stdout
    for c in report["checks"]:
        flag = "PASS" if c["passed"] else ("KNOWN" if c["name"] in report["known_failures"] else "FAIL")
        err = "" if c["max_error"] is None else f"  err={c['max_error']:.3g}"
        print(f"{flag}  {c['name']}{err}", file=stream)
