"""Command-line front end: ``arraydft {gen,tpg,fsim,bist,topup}``.

Exit codes: 0 when the run succeeds and its coverage claims hold, 1 when a
claim is violated, 2 for usage errors (bad width, incompatible suite, bad files).
"""

from __future__ import annotations

import argparse
import json
import random
import sys
import time
from pathlib import Path

from . import bist as bist_mod
from .ctest_tpg import (
    MULT_EXHAUSTIVE_LAYOUTS,
    RCA_CTEST_LAYOUTS,
    TABLE2_LAYOUTS,
    TABLE2_PHASE,
    explain,
    mult_exhaustive_ctest_vectors,
    mult_table2_vectors,
    rca_ctest_vectors,
    rca_deterministic_layouts,
    rca_deterministic_vectors,
)
from .faultmodel import FaultList, collapsed_faults, is_dft_fault, parse_fault
from .netlist import (
    FA_STRUCTURE,
    MUX_WIRING,
    Netlist,
    NetlistError,
    build_array_mult,
    build_dft_mult,
    build_rca,
    export_netlist,
)
from .sim import (
    SimulationError,
    TestVector,
    adapt_vector,
    coverage,
    fault_sim,
    find_redundant,
    format_vectors,
    parse_vectors,
    report_csv,
    report_json,
)

EXIT_OK, EXIT_CLAIM, EXIT_USAGE = 0, 1, 2

KINDS = ("rca", "mult", "dft-mult", "bist-mult")
SUITES = ("ctest8", "det5", "det4", "table2-5", "exhaustive8")
RCA_SUITES = ("ctest8", "det5", "det4")

# the reconstruction choices every report is tied to
DESIGN = {
    "fa_structure": FA_STRUCTURE,
    "mux_wiring": MUX_WIRING,
    "table2_phase": TABLE2_PHASE,
    "column_chain": "diagonal",
}


class UsageError(Exception):
    pass


def build_circuit(kind: str, n: int) -> Netlist:
    if kind == "rca":
        return build_rca(n)
    if kind == "mult":
        return build_array_mult(n)
    return build_dft_mult(n)


def suite_vectors(suite: str, kind: str, n: int, m: Netlist) -> list[TestVector]:
    """Vectors of a named suite, or of a vector file when ``suite`` is a path."""
    if suite in RCA_SUITES:
        if kind != "rca":
            raise UsageError(f"suite {suite} targets the ripple-carry adder, not {kind}")
        if suite == "ctest8":
            return rca_ctest_vectors(n)
        return rca_deterministic_vectors(n, xor_sum=suite == "det4")
    if suite in ("table2-5", "exhaustive8"):
        if kind == "rca":
            raise UsageError(f"suite {suite} targets the multiplier, not rca")
        vs = mult_table2_vectors(n) if suite == "table2-5" else mult_exhaustive_ctest_vectors(n)
        return [adapt_vector(m, v) for v in vs]
    path = Path(suite)
    if not path.is_file():
        raise UsageError(f"unknown suite or missing vector file: {suite}")
    return [adapt_vector(m, v) for v in parse_vectors(path.read_text(), m)]


def suite_layouts(suite: str):
    return {
        "ctest8": RCA_CTEST_LAYOUTS,
        "det5": rca_deterministic_layouts(False),
        "det4": rca_deterministic_layouts(True),
        "table2-5": TABLE2_LAYOUTS,
        "exhaustive8": MULT_EXHAUSTIVE_LAYOUTS,
    }[suite]


def overhead(n: int) -> tuple[int, float]:
    """Muxes added by the DFT transform and their share of the base gate count."""
    base = len(build_array_mult(n).gates)
    return n - 1, (n - 1) / base


def _write(path: Path, data: bytes | str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(data, str):
        data = data.encode()
    path.write_bytes(data)


def _say(*parts) -> None:
    print(*parts, flush=True)


# ---------------------------------------------------------------------------
# subcommands


def cmd_gen(args) -> int:
    m = build_circuit(args.kind, args.n)
    s = m.summary()
    formats = ("json", "verilog") if args.format == "both" else (args.format,)
    for fmt in formats:
        ext = "json" if fmt == "json" else "v"
        if not args.out:
            out = Path(f"{m.name}.{ext}")
        elif len(formats) == 1:
            out = Path(args.out)
        else:
            out = Path(f"{args.out}.{ext}")
        _write(out, export_netlist(m, fmt))
        _say(f"wrote {out}")
    line = f"kind={args.kind} n={args.n} gates={s['gates']} cells={s['cells']} muxes={s['muxes']} nets={s['nets']}"
    if args.kind in ("dft-mult", "bist-mult"):
        _, ratio = overhead(args.n)
        line += f" mux_overhead={ratio:.6f}"
    if args.kind == "bist-mult":
        line += f" rom_entries={len(TABLE2_LAYOUTS)} session_cycles={bist_mod.SESSION_CYCLES}"
    _say(line)
    return EXIT_OK


def cmd_tpg(args) -> int:
    m = build_circuit(args.kind, args.n)
    if args.suite not in SUITES:
        raise UsageError("tpg needs a named suite")
    vs = suite_vectors(args.suite, args.kind, args.n, m)
    header = f"suite={args.suite} kind={args.kind} n={args.n} " + " ".join(f"{k}={v}" for k, v in DESIGN.items())
    text = format_vectors(m, vs, header)
    if args.out:
        _write(Path(args.out), text)
        _say(f"wrote {len(vs)} vectors to {args.out}")
    else:
        sys.stdout.write(text)
    if args.explain:
        cell = "fa" if args.kind == "rca" else "mult"
        sys.stdout.write(explain(suite_layouts(args.suite), args.n, cell))
    return EXIT_OK


def _fsim_run(m: Netlist, fl: FaultList, vs: list[TestVector]):
    t0 = time.perf_counter()
    matrix = fault_sim(m, fl, vs)
    redundant = find_redundant(m, fl)
    report = coverage(matrix, fl, redundant)
    return report, matrix, (time.perf_counter() - t0) * 1000.0


def cmd_fsim(args) -> int:
    m = build_circuit(args.kind, args.n)
    vs = suite_vectors(args.suite, args.kind, args.n, m)
    fl = collapsed_faults(m, args.scope)
    report, _, runtime_ms = _fsim_run(m, fl, vs)
    meta = {
        "circuit": m.name, "kind": args.kind, "n": args.n, "suite": args.suite, "scope": args.scope,
        "design": DESIGN,
    }
    if args.out:
        formats = ("json", "csv") if args.format == "both" else (args.format,)
        for fmt in formats:
            path = Path(f"{args.out}.{fmt}")
            if fmt == "json":
                _write(path, report_json(report, meta))
            else:
                _write(path, report_csv(report, args.kind, args.n, args.suite, runtime_ms))
            _say(f"wrote {path}")
    _say(f"{m.name} suite={args.suite} vectors={report.vectors} faults={report.total} "
         f"redundant={report.redundant} detected={report.detected} coverage={report.coverage:.4f}%")
    for f in report.undetected:
        _say(f"undetected: {f}")
    return EXIT_OK if report.complete else EXIT_CLAIM


def cmd_bist(args) -> int:
    if args.kind != "bist-mult":
        raise UsageError("bist needs --kind bist-mult")
    m = build_circuit(args.kind, args.n)
    rom = bist_mod.build_decoder_rom(args.n, m)
    ok = True
    session = bist_mod.run_bist_session(m, rom)
    _say(f"fault-free: {session.message()}")
    ok &= session.passed
    log = {"fault_free": session.log()}

    if args.inject:
        fault = parse_fault(args.inject)
        injected = bist_mod.run_bist_session(m, rom, fault)
        _say(f"{fault}: {injected.message()}")
        log["injected"] = {"fault": str(fault), "cycles": injected.log()}
        detectable = not find_redundant(m, [fault], method="structural")
        if detectable and injected.passed and not is_dft_fault(m, fault):
            ok = False

    if args.sweep:
        fl = collapsed_faults(m, args.scope)
        matrix = fault_sim(m, fl, rom.vectors)
        redundant = find_redundant(m, fl)
        sessions = bist_mod.run_bist_sweep(m, rom, fl.faults)
        live = [(f, s, row.any()) for f, s, row in zip(fl.faults, sessions, matrix) if f not in redundant]
        failed = sum(not s.passed for _, s, _ in live)
        disagree = [f for f, s, hit in live if s.passed == bool(hit)]
        missed_core = [f for f, s, _ in live if s.passed and not is_dft_fault(m, f)]
        _say(f"injected: {len(live)}, failed-as-expected: {failed}")
        if disagree:
            _say(f"sessions disagreeing with the detection matrix: {len(disagree)}")
        for f in missed_core:
            _say(f"passed despite fault: {f}")
        ok &= not disagree and not missed_core
        log["sweep"] = {"injected": len(live), "failed": failed, "passed": [str(f) for f, s, _ in live if s.passed]}

    if args.out:
        _write(Path(args.out), json.dumps(log if (args.inject or args.sweep) else log["fault_free"], indent=2) + "\n")
        _say(f"wrote {args.out}")
    return EXIT_OK if ok else EXIT_CLAIM


def cmd_topup(args) -> int:
    """Seeded random search (test_mode held at 1) for the faults a prior fsim left undetected."""
    try:
        prior = json.loads(Path(args.report).read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read report {args.report}: {exc}") from exc
    kind = prior.get("kind", args.kind)
    n = int(prior.get("n", args.n))
    m = build_circuit(kind, n)
    remaining = [parse_fault(s) for s in prior.get("undetected", [])]
    rng = random.Random(args.seed)
    found: list[TestVector] = []
    fixed = {"test_mode": 1} if m.is_dft else {}

    for _ in range(args.rounds):
        if not remaining or len(found) >= args.max_vectors:
            break
        pool = [
            TestVector({p.name: fixed.get(p.name, rng.getrandbits(p.width)) for p in m.inputs})
            for _ in range(64)
        ]
        matrix = fault_sim(m, remaining, pool)
        # greedy: keep the vector that removes the most remaining faults
        while remaining and len(found) < args.max_vectors:
            gains = matrix.sum(axis=0)
            best = int(gains.argmax())
            if gains[best] == 0:
                break
            found.append(TestVector(pool[best].values, f"topup{len(found)}"))
            keep = ~matrix[:, best]
            remaining = [f for f, k in zip(remaining, keep) if k]
            matrix = matrix[keep]

    text = format_vectors(m, found) if found else ""
    _write(Path(args.out), text)
    _say(f"topup: {len(found)} vectors, {len(remaining)} still undetected")
    for f in remaining:
        _say(f"still undetected: {f}")
    return EXIT_OK if not remaining else EXIT_CLAIM


# ---------------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="arraydft", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, kind_default="dft-mult", need_n=True):
        p.add_argument("--kind", choices=KINDS, default=kind_default)
        p.add_argument("--n", type=int, required=need_n, default=None if need_n else 4)

    p = sub.add_parser("gen", help="write a netlist and print its counts")
    common(p)
    p.add_argument("--format", choices=("json", "verilog", "both"), default="json")
    p.add_argument("--out", help="output file (directory or prefix with --format both)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("tpg", help="write a test vector file")
    common(p)
    p.add_argument("--suite", choices=SUITES, required=True)
    p.add_argument("--out")
    p.add_argument("--explain", action="store_true", help="print the per-cell pattern grid")
    p.set_defaults(func=cmd_tpg)

    p = sub.add_parser("fsim", help="fault-simulate a suite and report coverage")
    common(p)
    p.add_argument("--suite", required=True, help=f"one of {', '.join(SUITES)} or a vector file")
    p.add_argument("--scope", choices=("core", "all"), default="core")
    p.add_argument("--format", choices=("json", "csv", "both"), default="both")
    p.add_argument("--out", help="report path prefix")
    p.set_defaults(func=cmd_fsim)

    p = sub.add_parser("bist", help="run the BIST session model")
    common(p, kind_default="bist-mult")
    p.add_argument("--inject", help="fault to inject, e.g. gate:12:in0:sa1")
    p.add_argument("--sweep", action="store_true", help="inject every collapsed fault in turn")
    p.add_argument("--scope", choices=("core", "all"), default="core")
    p.add_argument("--out", help="session log JSON")
    p.set_defaults(func=cmd_bist)

    p = sub.add_parser("topup", help="random top-up vectors for undetected faults")
    common(p, need_n=False)
    p.add_argument("--report", required=True, help="JSON report written by fsim")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rounds", type=int, default=16)
    p.add_argument("--max-vectors", type=int, default=8)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_topup)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = _parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        if args.n is not None and args.n < 1:
            raise UsageError(f"width must be positive, got {args.n}")
        return args.func(args)
    except (UsageError, NetlistError, SimulationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
