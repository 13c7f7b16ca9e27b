"""Command-line entry point: verify, run, replay, audit, overhead.

Exit codes: 0 success, 1 a check failed, 2 usage or configuration error.
"""

from __future__ import annotations

import argparse
import glob
import json
import sys
from dataclasses import dataclass

from . import blind, simulator, verify
from .galois import FieldError, make_field

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    p: int | None = None
    m: int = 1
    modulus: tuple | None = None
    seed: int | None = None
    amps: int | None = None
    branches: int | None = None
    out: str | None = None

    def field(self):
        if self.p is None:
            return None
        try:
            return make_field(self.p, self.m, self.modulus)
        except (FieldError, ValueError) as exc:
            raise UsageError(f"bad field: {exc}") from exc

    def to_json(self) -> dict:
        return {"p": self.p, "m": self.m, "modulus": None if self.modulus is None else list(self.modulus),
                "seed": self.seed, "amps": self.amps, "branches": self.branches, "out": self.out}

    @classmethod
    def from_json(cls, data: dict) -> "RunConfig":
        mod = data.get("modulus")
        return cls(data.get("p"), data.get("m", 1), None if mod is None else tuple(mod), data.get("seed"),
                   data.get("amps"), data.get("branches"), data.get("out"))


def parse_field(text: str) -> tuple[int, int, tuple | None]:
    """'p,m' or 'p,m,c0:c1:...:cm' (modulus coefficients, low degree first)."""
    parts = text.split(",")
    if len(parts) not in (2, 3):
        raise UsageError(f"--field expects p,m[,modulus], got {text!r}")
    try:
        p, m = int(parts[0]), int(parts[1])
        mod = tuple(int(c) for c in parts[2].split(":")) if len(parts) == 3 else None
    except ValueError as exc:
        raise UsageError(f"--field: {exc}") from exc
    return p, m, mod


def parse_caps(text: str) -> dict:
    out = {}
    for item in filter(None, text.split(",")):
        key, _, val = item.partition("=")
        if key not in ("amps", "branches") or not val:
            raise UsageError(f"--caps expects amps=N,branches=N, got {item!r}")
        try:
            out[key] = int(float(val)) if "e" in val.lower() else int(val)
        except ValueError as exc:
            raise UsageError(f"--caps: {exc}") from exc
    return out


def parse_shape(text: str) -> dict:
    out = {}
    for item in filter(None, text.split(",")):
        key, _, val = item.partition("=")
        try:
            out[key] = int(val)
        except ValueError as exc:
            raise UsageError(f"--shape: {exc}") from exc
    return out


def build_config(args) -> RunConfig:
    cfg = RunConfig(seed=getattr(args, "seed", None), out=getattr(args, "out", None))
    if getattr(args, "field", None):
        cfg.p, cfg.m, cfg.modulus = parse_field(args.field)
    if getattr(args, "caps", None):
        caps = parse_caps(args.caps)
        cfg.amps, cfg.branches = caps.get("amps"), caps.get("branches")
    simulator.set_default_caps(cfg.amps, cfg.branches)
    return cfg


def _dump(obj, path: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)


def cmd_verify(args) -> int:
    cfg = build_config(args)
    F = cfg.field()
    kw = {}
    if args.suite == "gadgets" and cfg.branches is not None:
        kw["max_branches"] = cfg.branches
    if args.suite == "blindness" and args.audit_runs is not None:
        kw["audit_runs"] = args.audit_runs
    try:
        report = verify.run_suite(args.suite, [F] if F else None, **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    report["config"] = {k: v for k, v in cfg.to_json().items() if k != "out"}
    verify.main_report(report)
    _dump(report, cfg.out)
    if report["error"]:
        print(report["error"], file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK if report["passed"] else EXIT_FAIL


def _load_program(path: str) -> blind.Program:
    try:
        with open(path) as fh:
            return blind.Program.from_json(json.load(fh))
    except FileNotFoundError as exc:
        raise UsageError(f"no program file {path}") from exc
    except (json.JSONDecodeError, KeyError, blind.ProgramMismatch) as exc:
        raise UsageError(f"malformed program file: {exc}") from exc


def cmd_run(args) -> int:
    cfg = build_config(args)
    if cfg.seed is None:
        raise UsageError("run needs an explicit --seed")
    F = cfg.field() or make_field(2)
    program = _load_program(args.program)
    if args.traps:
        import numpy as np

        program = blind.insert_traps(program, args.traps, np.random.default_rng(np.random.SeedSequence([cfg.seed, 1])), F)
    try:
        res = blind.run_protocol(args.arch, program, F, cfg.seed, max_amplitudes=cfg.amps)
    except blind.ProgramMismatch as exc:
        raise UsageError(str(exc)) from exc
    notes = []
    for op in program.ops:
        if program.arch == "open-ended" and op.get("gate") == "entangle" and "grid" not in op:
            notes.append(blind.steered_clifford_note(F, program.n_wires, int(op["m"]), F.from_int(int(op.get("lam", 1)))))
    out = cfg.out or "transcript.jsonl"
    with open(out, "w") as fh:
        fh.write(res.transcript.to_jsonl())
    if args.secret:
        _dump({"secret": res.secret.to_json(), "program": program.to_json()}, args.secret)
    summary = {
        "outputs": res.outputs,
        "trap_ok": res.trap_ok,
        "reference_ok": res.reference_ok,
        "transcript": out,
        "notes": notes,
    }
    print(json.dumps(summary, sort_keys=True))
    ok = res.reference_ok is not False and res.trap_ok is not False
    return EXIT_OK if ok else EXIT_FAIL


def cmd_replay(args) -> int:
    build_config(args)
    with open(args.transcript) as fh:
        tr = blind.ProtocolTranscript.from_jsonl(fh.read())
    with open(args.secret) as fh:
        data = json.load(fh)
    secret = blind.ClientSecret.from_json(data["secret"])
    program = blind.Program.from_json(data["program"])
    spec, pattern = blind.compile_program(program, tr.field)
    inits = [blind.rotated_plus(secret.pads[v]) if t[0] == "plus" and any(secret.pads[v]) else t
             for v, t in enumerate(spec.inits)]
    prepared = spec.with_inits(inits)
    outcomes = blind.replay(tr, secret, prepared, pattern)
    same = outcomes == tr.outcomes()
    print(json.dumps({"replay_identical": same, "events": len(outcomes)}, sort_keys=True))
    return EXIT_OK if same else EXIT_FAIL


def cmd_audit(args) -> int:
    cfg = build_config(args)
    paths = sorted(p for pattern in args.transcripts for p in glob.glob(pattern))
    if not paths:
        raise UsageError("no transcript files matched")
    groups: dict = {}
    for path in paths:
        with open(path) as fh:
            text = fh.read()
        # a file may hold several transcripts separated by header lines
        chunks, cur = [], []
        for line in text.splitlines():
            if line.startswith('{"arch"') or '"header": true' in line:
                if cur:
                    chunks.append(cur)
                cur = [line]
            elif line.strip():
                cur.append(line)
        if cur:
            chunks.append(cur)
        for chunk in chunks:
            tr = blind.ProtocolTranscript.from_jsonl("\n".join(chunk))
            groups.setdefault(tr.label or "default", []).append(tr)
    try:
        report = blind.blindness_audit(groups, args.alpha, args.min_samples)
    except blind.InsufficientSamples as exc:
        print(f"insufficient samples: {exc}", file=sys.stderr)
        return EXIT_USAGE
    for t in report["tests"]:
        where = t.get("group") or "/".join(t["groups"])
        print(f"{t['test']:<11} {where:<12} site {t['site']:>4}  p={t['p']:.4g}  adj={t['p_adjusted']:.4g}"
              + ("  FLAG" if t["flagged"] else ""))
    _dump(report, cfg.out)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_overhead(args) -> int:
    cfg = build_config(args)
    F = cfg.field() or make_field(2)
    shape = parse_shape(args.shape or "")
    rows = []
    for arch in args.arch.split(","):
        try:
            rows += blind.overhead_report(arch.strip(), shape, F)
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    cols = ["architecture", "qudits", "entanglers", "measurements", "messages", "note"]
    table = [[("-" if r[c] is None else str(r[c])) for c in cols] for r in rows]
    widths = [max(len(c), *(len(t[i]) for t in table)) for i, c in enumerate(cols)]
    print("  ".join(c.ljust(w) for c, w in zip(cols, widths)).rstrip())
    for t in table:
        print("  ".join(v.ljust(w) for v, w in zip(t, widths)).rstrip())
    _dump({"field": F.to_json(), "shape": shape, "rows": rows}, cfg.out)
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qudit-blind", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)

    def common(p):
        p.add_argument("--field", help="p,m[,c0:c1:...:cm]")
        p.add_argument("--caps", help="amps=N,branches=N")
        p.add_argument("--out", help="report / transcript path")
        p.add_argument("--seed", type=int)

    v = sub.add_parser("verify", help="run an invariant suite")
    common(v)
    v.add_argument("--suite", required=True, choices=verify.SUITES)
    v.add_argument("--audit-runs", type=int, default=None, help="transcripts per program in the blindness audit")
    v.set_defaults(func=cmd_verify)

    r = sub.add_parser("run", help="execute a program blindly and write its transcript")
    common(r)
    r.add_argument("--arch", required=True, choices=blind.ARCHITECTURES)
    r.add_argument("--program", required=True)
    r.add_argument("--secret", help="client-side file for the secret (needed for replay)")
    r.add_argument("--traps", type=int, default=0)
    r.set_defaults(func=cmd_run)

    rp = sub.add_parser("replay", help="re-run the server side of a transcript")
    common(rp)
    rp.add_argument("--transcript", required=True)
    rp.add_argument("--secret", required=True)
    rp.set_defaults(func=cmd_replay)

    a = sub.add_parser("audit", help="blindness statistics over transcript files")
    common(a)
    a.add_argument("transcripts", nargs="+", help="files or glob patterns")
    a.add_argument("--alpha", type=float, default=0.01)
    a.add_argument("--min-samples", type=int, default=1000)
    a.set_defaults(func=cmd_audit)

    o = sub.add_parser("overhead", help="resource counts per architecture")
    common(o)
    o.add_argument("--arch", required=True, help="comma-separated architectures")
    o.add_argument("--shape", help="e.g. n=4,depth=1,blocks=1,rows=2,cols=2")
    o.set_defaults(func=cmd_overhead)
    return ap


def main(argv=None) -> int:
    parser = make_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
