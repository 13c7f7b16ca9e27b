"""Acceptance criteria 1-10.

Each criterion records one PASS/FAIL line, printed in the terminal summary
(see conftest.py), then asserts.  Tolerances and runtime budgets are the
required ones.
"""

import time

import pytest

from qudit_blind import verify as V
from qudit_blind.galois import make_field

SWEEP = [make_field(p, m) for p, m in V.SWEEP]  # d in {2, 3, 4, 5, 8, 9}
LOW = [make_field(2), make_field(3), make_field(5)]


def _worst(checks):
    errs = [c["max_error"] for c in checks if c.get("max_error") is not None]
    return max(errs) if errs else 0.0


def _failed(checks):
    return [c["name"] for c in checks if not c["passed"]]


def _record(acceptance, k, checks, elapsed, budget=None, extra=""):
    bad = _failed(checks)
    ok = not bad and (budget is None or elapsed < budget)
    detail = f"{len(checks)} checks, worst err {_worst(checks):.2g}, {elapsed:.1f}s"
    if budget is not None:
        detail += f" (budget {budget:g}s)"
    if extra:
        detail += f"; {extra}"
    if bad:
        detail += f"; failed: {', '.join(bad)}"
    acceptance[k] = (ok, detail)
    return ok, bad


def test_c1_algebra_suite(acceptance):
    start = time.perf_counter()
    checks = []
    for F in SWEEP:
        checks += V.field_checks(F) + V.ring_checks(F) + V.conjugation_checks(F, tol=1e-12)
        checks += V.ring_qudit_checks(F.d)
    elapsed = time.perf_counter() - start
    ok, bad = _record(acceptance, 1, checks, elapsed, 30)
    assert not bad
    assert elapsed < 30


def test_c2_low_dimension_anchors(acceptance):
    checks = V.anchor_checks(tol=1e-12)
    _, bad = _record(acceptance, 2, checks, 0.0)
    assert not bad


# -- criterion 3: the p = 2, m > 1 closed form as printed does not hold ---------------------

_C3: dict = {}
_C3_SECONDS = [0.0]


def _t_checks(F):
    if F.d not in _C3:
        start = time.perf_counter()
        _C3[F.d] = V.t_checks(F, tol=1e-10)
        _C3_SECONDS[0] += time.perf_counter() - start
    return _C3[F.d]


def _by_prefix(checks, text):
    return next(c for c in checks if text in c["name"])


def _form(checks, form):
    return next(c for c in checks if c.get("form") == form)


@pytest.mark.parametrize("F", SWEEP, ids=lambda F: f"d{F.d}")
def test_c3_t_is_not_clifford(F):
    assert _by_prefix(_t_checks(F), "non-Clifford")["passed"]


@pytest.mark.parametrize(
    "F",
    [pytest.param(F, marks=pytest.mark.xfail(strict=True, reason="printed chi(u x^3) term is wrong for m > 1"))
     if F.p == 2 and F.m > 1 else F for F in SWEEP],
    ids=lambda F: f"d{F.d}",
)
def test_c3_literal_closed_form(F):
    c = _form(_t_checks(F), "literal")
    assert c["passed"], c["max_error"]


@pytest.mark.parametrize("F", [F for F in SWEEP if F.p == 2], ids=lambda F: f"d{F.d}")
def test_c3_corrected_closed_form(F):
    c = _form(_t_checks(F), "corrected")
    assert c["passed"], c["max_error"]


def test_c3_summary(acceptance):
    checks = [c for F in SWEEP for c in _t_checks(F)]
    elapsed = _C3_SECONDS[0]
    corrected = [c for c in checks if c.get("form") == "corrected"]
    literal = [c for c in checks if c.get("form") == "literal"]
    non_pauli = [c for c in checks if "non-Clifford" in c["name"]]
    extra = (f"corrected p=2 form holds at d={','.join(str(F.d) for F in SWEEP if F.p == 2)}"
             if all(c["passed"] for c in corrected) else "corrected p=2 form also fails")
    _record(acceptance, 3, literal + non_pauli, elapsed, 60, extra)
    # the literal form failing is covered by the strict xfails above
    assert all(c["passed"] for c in non_pauli + corrected)
    assert elapsed < 60


def test_c4_multiplication_decomposition(acceptance):
    start = time.perf_counter()
    checks = [c for F in SWEEP for c in V.mult_decomposition_checks(F, tol=1e-10)]
    _, bad = _record(acceptance, 4, checks, time.perf_counter() - start)
    assert not bad


@pytest.mark.slow
def test_c5_brickwork_gadgets(acceptance):
    start = time.perf_counter()
    checks = []
    for F in LOW:
        for kind, wire, cz_only in V.BRICKWORK_CASES:
            samples = None if F.d in (2, 3) else 200
            rec = V.brickwork_gadget_check(F, kind, wire, cz_only, samples, tol=1e-9, max_branches=3**8)
            if samples is None:
                assert rec["mode"] == "exhaustive" and rec["branches"] <= 3**8
            checks.append(rec)
    elapsed = time.perf_counter() - start
    _, bad = _record(acceptance, 5, checks, elapsed, 600, "exhaustive at d=2,3, 200 runs at d=5")
    assert not bad
    assert elapsed < 600


@pytest.mark.slow
def test_c6_mirror(acceptance):
    start = time.perf_counter()
    checks = []
    for F in LOW:
        checks += V.mirror_checks(F, ns=(2, 3, 4, 5), tol=1e-10)
        checks.append(V.swap_lattice_check(F, tol=1e-9))
    _, bad = _record(acceptance, 6, checks, time.perf_counter() - start)
    assert not bad


def test_c7_steered_entangler(acceptance):
    start = time.perf_counter()
    checks = [c for F in LOW for c in V.steering_checks(F, ns=(3, 4), tol=1e-10)]
    _, bad = _record(acceptance, 7, checks, time.perf_counter() - start)
    assert not bad


def test_c8_hair_simulations(acceptance):
    start = time.perf_counter()
    checks = [c for F in LOW for c in V.hair_checks(F, seeds=20, tol=1e-9)]
    _, bad = _record(acceptance, 8, checks, time.perf_counter() - start)
    assert not bad


def test_c9_graph_hiding(acceptance):
    start = time.perf_counter()
    checks = [c for F in SWEEP for c in V.hiding_checks(F, tol=1e-10)]
    checks += [V.carving_exhaustive_check(F) for F in LOW[:2]]
    _, bad = _record(acceptance, 9, checks, time.perf_counter() - start)
    assert not bad


@pytest.mark.slow
def test_c10_blind_protocol(acceptance):
    start = time.perf_counter()
    checks = []
    for F in LOW[:2]:
        for arch in ("brickwork", "open-ended", "decorated"):
            checks.append(V.blind_correctness_check(F, arch, programs=50))
        checks += V.trap_checks(F)
    audit, degenerate = V.audit_check(make_field(2), runs=10_000, alpha=0.01)
    checks += [audit, degenerate]
    elapsed = time.perf_counter() - start
    extra = (f"audit over {audit['tests']} tests: min raw p {audit['min_p_raw']:.3g}, "
             f"{audit['raw_below_alpha']} raw p below 0.01, "
             f"min Bonferroni-adjusted p {audit['min_p_adjusted']:.3g} (threshold 0.01 on adjusted)")
    _, bad = _record(acceptance, 10, checks, elapsed, 600, extra)
    assert not bad
    assert elapsed < 600
