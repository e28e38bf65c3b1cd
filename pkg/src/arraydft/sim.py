"""Two-valued good-machine and stuck-at fault simulation.

Two engines produce detection matrices:

* ``serial``: one vector, one fault, one full netlist evaluation at a time in
  plain Python. Slow, but simple enough to serve as the reference.
* ``batched``: vectors are packed into uint64 lanes and each fault is
  propagated event-driven through its fanout cone by a compiled kernel.

Detection only looks at primary output ports.
"""

from __future__ import annotations

import json
import os
import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence
from weakref import WeakKeyDictionary

import numpy as np

from . import _kernel as K
from .faultmodel import Fault, FaultList, check_fault, is_dft_fault
from .netlist import GateKind, Netlist, fanout_map, topological_order

WORKERS_ENV = "ARRAYDFT_WORKERS"


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class TestVector:
    """Integer value per input port (bit k of the int is port bit k)."""

    __test__ = False  # not a pytest class

    values: dict[str, int]
    label: str = ""
    expected: dict[str, int] | None = field(default=None, compare=False)

    def __getitem__(self, port: str) -> int:
        return self.values[port]

    def with_values(self, **changes: int) -> "TestVector":
        vals = dict(self.values)
        vals.update(changes)
        return TestVector(vals, self.label, None)


def check_vector(m: Netlist, v: TestVector) -> None:
    names = {p.name for p in m.inputs}
    if set(v.values) != names:
        missing = sorted(names - set(v.values))
        extra = sorted(set(v.values) - names)
        raise SimulationError(f"vector {v.label!r} does not match {m.name}: missing {missing}, unknown {extra}")
    for p in m.inputs:
        val = v.values[p.name]
        if not 0 <= val < (1 << p.width):
            raise SimulationError(f"vector {v.label!r}: {p.name}={val} does not fit in {p.width} bits")


def adapt_vector(m: Netlist, v: TestVector) -> TestVector:
    """Drop a test_mode assignment when applying a DFT suite to the plain multiplier."""
    if "test_mode" in v.values and not m.has_port("test_mode"):
        vals = {k: x for k, x in v.values.items() if k != "test_mode"}
        return TestVector(vals, v.label)
    return v


# ---------------------------------------------------------------------------
# compiled form

_KIND_CODE = {
    GateKind.AND2: K.K_AND,
    GateKind.OR2: K.K_OR,
    GateKind.NAND2: K.K_NAND,
    GateKind.NOR2: K.K_NOR,
    GateKind.XOR2: K.K_XOR,
    GateKind.NOT: K.K_NOT,
    GateKind.BUF: K.K_BUF,
    GateKind.MUX2: K.K_MUX,
    GateKind.CONST0: K.K_C0,
    GateKind.CONST1: K.K_C1,
}

_PY_OPS = {
    GateKind.AND2: lambda a, b, c: a & b,
    GateKind.OR2: lambda a, b, c: a | b,
    GateKind.NAND2: lambda a, b, c: 1 ^ (a & b),
    GateKind.NOR2: lambda a, b, c: 1 ^ (a | b),
    GateKind.XOR2: lambda a, b, c: a ^ b,
    GateKind.NOT: lambda a, b, c: 1 ^ a,
    GateKind.BUF: lambda a, b, c: a,
    GateKind.MUX2: lambda a, b, c: c if a else b,
    GateKind.CONST0: lambda a, b, c: 0,
    GateKind.CONST1: lambda a, b, c: 1,
}


class Compiled:
    """Array form of a netlist in topological order."""

    def __init__(self, m: Netlist):
        self.netlist = m
        order = topological_order(m)
        self.order = order
        self.pos_of_gate = np.empty(len(m.gates), np.int64)
        self.pos_of_gate[order] = np.arange(len(order))
        n = len(order)
        self.kind = np.empty(n, np.int8)
        ins = np.full((3, n), -1, np.int64)
        self.out = np.empty(n, np.int64)
        for p, gid in enumerate(order):
            g = m.gates[gid]
            self.kind[p] = _KIND_CODE[g.kind]
            ins[: len(g.inputs), p] = g.inputs
            self.out[p] = g.output
        self.in0, self.in1, self.in2 = ins
        readers = fanout_map(m)
        ptr = [0]
        pos = []
        for net in range(m.num_nets):
            pos.extend(sorted(int(self.pos_of_gate[g]) for g, _ in readers[net]))
            ptr.append(len(pos))
        self.rd_ptr = np.array(ptr, np.int64)
        self.rd_pos = np.array(pos, np.int64)
        self.obs: list[tuple[str, int, int]] = [
            (p.name, bit, net) for p in m.outputs for bit, net in enumerate(p.nets)
        ]
        self.obs_nets = np.array([net for _, _, net in self.obs], np.int64)
        self.obs_index = {(name, bit): k for k, (name, bit, _) in enumerate(self.obs)}
        self.observed = np.zeros(m.num_nets, np.bool_)
        self.observed[self.obs_nets] = True
        # fanout-free regions: a net is a stem unless it has exactly one reader and is not observed
        n_readers = np.diff(self.rd_ptr)
        self.is_stem = (n_readers != 1) | self.observed
        self.sole_reader = np.full(m.num_nets, -1, np.int64)
        single = np.flatnonzero(~self.is_stem)
        self.sole_reader[single] = self.rd_pos[self.rd_ptr[single]]
        self.stems = np.flatnonzero(self.is_stem)
        # plain-Python program for the serial engine
        self.py_program = [
            (m.gates[gid].id, _PY_OPS[m.gates[gid].kind], m.gates[gid].inputs, m.gates[gid].output) for gid in order
        ]

    def fault_arrays(self, faults: Sequence[Fault]):
        m = self.netlist
        n = len(faults)
        fk = np.empty(n, np.int64)
        fa = np.empty(n, np.int64)
        fb = np.zeros(n, np.int64)
        fv = np.empty(n, np.int64)
        for i, f in enumerate(faults):
            fv[i] = f.value
            if f.kind == "in":
                fk[i], fa[i], fb[i] = K.F_PIN, self.pos_of_gate[f.gate], f.pin
            elif f.kind == "out":
                fk[i], fa[i] = K.F_STEM, m.gates[f.gate].output
            else:
                port = m.port(f.port)
                if port.dir == "in":
                    fk[i], fa[i] = K.F_STEM, port.nets[f.pin]
                else:
                    fk[i], fa[i] = K.F_OBS, self.obs_index[(f.port, f.pin)]
        return fk, fa, fb, fv


_compiled_cache: "WeakKeyDictionary[Netlist, Compiled]" = WeakKeyDictionary()


def compile_netlist(m: Netlist) -> Compiled:
    c = _compiled_cache.get(m)
    if c is None:
        c = _compiled_cache[m] = Compiled(m)
    return c


# ---------------------------------------------------------------------------
# serial (reference) evaluation


def evaluate(m: Netlist, v: TestVector, fault: Fault | None = None) -> list[int]:
    """Value of every net for one vector, optionally with one fault injected."""
    check_vector(m, v)
    c = compile_netlist(m)
    values = [0] * m.num_nets
    stem_net = -1
    pin_gate = -1
    if fault is not None:
        if fault.kind == "out":
            stem_net = m.gates[fault.gate].output
        elif fault.kind == "in":
            pin_gate = fault.gate
        elif m.port(fault.port).dir == "in":
            stem_net = m.port(fault.port).nets[fault.pin]
    for p in m.inputs:
        word = v.values[p.name]
        for bit, net in enumerate(p.nets):
            values[net] = (word >> bit) & 1
    if stem_net >= 0 and stem_net < m.num_nets and fault.kind == "port":
        values[stem_net] = fault.value
    for gid, op, ins, out in c.py_program:
        args = [values[x] for x in ins]
        if gid == pin_gate:
            args[fault.pin] = fault.value
        args += [0] * (3 - len(args))
        values[out] = op(*args)
        if out == stem_net:
            values[out] = fault.value
    return values


def _outputs_from_values(m: Netlist, values: list[int], fault: Fault | None = None) -> dict[str, int]:
    res = {}
    for p in m.outputs:
        word = 0
        for bit, net in enumerate(p.nets):
            val = values[net]
            if fault is not None and fault.kind == "port" and fault.port == p.name and fault.pin == bit:
                val = fault.value
            word |= int(val) << bit
        res[p.name] = word
    return res


def good_sim(m: Netlist, v: TestVector) -> dict[str, int]:
    """Output port values of the fault-free circuit."""
    return _outputs_from_values(m, evaluate(m, v))


def faulty_sim(m: Netlist, v: TestVector, fault: Fault) -> dict[str, int]:
    check_fault(m, fault)
    return _outputs_from_values(m, evaluate(m, v, fault), fault)


# ---------------------------------------------------------------------------
# batched evaluation


def pack_vectors(m: Netlist, vs: Sequence[TestVector]) -> tuple[np.ndarray, np.ndarray]:
    """Net value words with input ports filled in, and the valid-lane mask."""
    for v in vs:
        check_vector(m, v)
    n_words = max(1, (len(vs) + 63) // 64)
    lanes = n_words * 64
    values = np.zeros((m.num_nets, n_words), np.uint64)
    for p in m.inputs:
        words = np.zeros(lanes, np.uint64)
        words[: len(vs)] = [v.values[p.name] for v in vs]
        for bit, net in enumerate(p.nets):
            bits = ((words >> np.uint64(bit)) & np.uint64(1)).astype(np.uint8)
            values[net] = np.packbits(bits, bitorder="little").view(np.uint64)
    mask = np.zeros(lanes, np.uint8)
    mask[: len(vs)] = 1
    return values, np.packbits(mask, bitorder="little").view(np.uint64).copy()


def output_words(m: Netlist, vs: Sequence[TestVector]) -> tuple[list[tuple[str, int]], np.ndarray]:
    """Good-machine output bits as packed lanes: ((port, bit) per row, words)."""
    c = compile_netlist(m)
    values, _ = pack_vectors(m, vs)
    K.good_values(c.kind, c.in0, c.in1, c.in2, c.out, values)
    return [(name, bit) for name, bit, _ in c.obs], values[c.obs_nets]


def good_values_batched(m: Netlist, vs: Sequence[TestVector]) -> np.ndarray:
    """Good-machine value of every net for every vector, shape (vectors, nets)."""
    c = compile_netlist(m)
    values, _ = pack_vectors(m, vs)
    K.good_values(c.kind, c.in0, c.in1, c.in2, c.out, values)
    bits = np.unpackbits(values.view(np.uint8).reshape(m.num_nets, -1), axis=1, bitorder="little")
    return bits[:, : len(vs)].T.copy()


def good_sim_batched(m: Netlist, vs: Sequence[TestVector]) -> list[dict[str, int]]:
    vals = good_values_batched(m, vs)
    return [_outputs_from_values(m, list(row)) for row in vals]


def _words_to_outputs(m: Netlist, c: Compiled, obs: np.ndarray, count: int) -> list[dict[str, int]]:
    bits = np.unpackbits(obs.view(np.uint8).reshape(obs.shape[0], -1), axis=1, bitorder="little")[:, :count]
    res = []
    for k in range(count):
        outs = {p.name: 0 for p in m.outputs}
        for idx, (name, bit, _) in enumerate(c.obs):
            outs[name] |= int(bits[idx, k]) << bit
        res.append(outs)
    return res


def _run_kernel(c: Compiled, good: np.ndarray, mask: np.ndarray, faults: Sequence[Fault], want_obs: bool):
    fk, fa, fb, fv = c.fault_arrays(faults)
    n_words = good.shape[1]
    detect = np.zeros((len(faults), n_words), np.uint64)
    obs = np.zeros((len(faults) if want_obs else 0, len(c.obs_nets), n_words), np.uint64)
    if len(faults):
        K.fault_sim(c.kind, c.in0, c.in1, c.in2, c.out, c.rd_ptr, c.rd_pos, c.observed, c.obs_nets,
                    good, mask, fk, fa, fb, fv, detect, obs, want_obs)
    return detect, obs


def _parallel(fn, items: Sequence, workers: int) -> np.ndarray:
    """Apply ``fn`` to contiguous chunks of ``items`` and stack the results in order."""
    if workers <= 1 or len(items) < 2 * workers:
        return fn(items)
    bounds = np.linspace(0, len(items), workers + 1).astype(int)
    chunks = [items[bounds[k]:bounds[k + 1]] for k in range(workers)]
    with ThreadPoolExecutor(workers) as pool:
        return np.concatenate(list(pool.map(fn, chunks)), axis=0)


def _run_ffr(c: Compiled, good: np.ndarray, mask: np.ndarray, faults: Sequence[Fault], workers: int) -> np.ndarray:
    fk, fa, fb, fv = c.fault_arrays(faults)
    # observed-port faults address the observed net directly
    obs = fk == K.F_OBS
    fa[obs] = c.obs_nets[fa[obs]]
    n_words = good.shape[1]
    empty = np.zeros((0, len(c.obs_nets), n_words), np.uint64)

    def stem_chunk(stems):
        kinds = np.full(len(stems), K.F_FLIP, np.int64)
        zeros = np.zeros(len(stems), np.int64)
        det = np.zeros((len(stems), n_words), np.uint64)
        K.fault_sim(c.kind, c.in0, c.in1, c.in2, c.out, c.rd_ptr, c.rd_pos, c.observed, c.obs_nets,
                    good, mask, kinds, stems, zeros, zeros, det, empty, False)
        return det

    stem_obs = np.zeros_like(good)
    stem_obs[c.stems] = _parallel(stem_chunk, c.stems, workers)

    def fault_chunk(idx):
        det = np.zeros((len(idx), n_words), np.uint64)
        K.ffr_detect(c.kind, c.in0, c.in1, c.in2, c.out, c.is_stem, c.sole_reader, good, mask,
                     stem_obs, fk[idx], fa[idx], fb[idx], fv[idx], det)
        return det

    return _parallel(fault_chunk, np.arange(len(faults)), workers)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _batched_matrix(m: Netlist, faults: Sequence[Fault], vs: Sequence[TestVector], workers: int,
                    engine: str) -> np.ndarray:
    c = compile_netlist(m)
    good, mask = pack_vectors(m, vs)
    K.good_values(c.kind, c.in0, c.in1, c.in2, c.out, good)
    if engine == "ffr":
        detect = _run_ffr(c, good, mask, faults, workers)
    elif engine == "direct":
        detect = _parallel(lambda ch: _run_kernel(c, good, mask, ch, False)[0], faults, workers)
    else:
        raise ValueError(f"unknown batched engine {engine!r}")
    bits = np.unpackbits(detect.view(np.uint8).reshape(len(faults), -1), axis=1, bitorder="little")
    return bits[:, : len(vs)].astype(bool)


def _serial_matrix(m: Netlist, faults: Sequence[Fault], vs: Sequence[TestVector]) -> np.ndarray:
    matrix = np.zeros((len(faults), len(vs)), bool)
    good = [good_sim(m, v) for v in vs]
    for i, f in enumerate(faults):
        for k, v in enumerate(vs):
            matrix[i, k] = faulty_sim(m, v, f) != good[k]
    return matrix


def fault_sim(
    m: Netlist,
    fl: FaultList | Sequence[Fault],
    vs: Sequence[TestVector],
    mode: str = "batched",
    workers: int | None = None,
    engine: str = "ffr",
) -> np.ndarray:
    """Detection matrix: entry (f, v) is True iff fault f changes an output on vector v.

    ``workers`` threads share the fault list (default from ``ARRAYDFT_WORKERS``).
    The batched ``engine`` is ``"ffr"`` (stem observability plus local
    propagation inside fanout-free regions) or ``"direct"`` (every fault
    propagated through the whole netlist); both give the same matrix.
    """
    faults = list(fl.faults) if isinstance(fl, FaultList) else list(fl)
    if isinstance(fl, FaultList) and fl.netlist is not m:
        raise SimulationError(f"fault list was enumerated from {fl.netlist.name}, not {m.name}")
    for f in faults:
        check_fault(m, f)
    vs = list(vs)
    if not vs:
        return np.zeros((len(faults), 0), bool)
    if mode == "serial":
        return _serial_matrix(m, faults, vs)
    if mode == "batched":
        return _batched_matrix(m, faults, vs, workers or default_workers(), engine)
    raise ValueError(f"unknown simulation mode {mode!r}")


def faulty_outputs_batched(m: Netlist, fault: Fault | None, vs: Sequence[TestVector]) -> list[dict[str, int]]:
    """Output values of the (optionally faulty) circuit for every vector."""
    c = compile_netlist(m)
    good, mask = pack_vectors(m, vs)
    K.good_values(c.kind, c.in0, c.in1, c.in2, c.out, good)
    if fault is None:
        obs = good[c.obs_nets]
    else:
        check_fault(m, fault)
        _, obs = _run_kernel(c, good, mask, [fault], True)
        obs = obs[0]
    return _words_to_outputs(m, c, np.ascontiguousarray(obs), len(vs))


def faulty_outputs_many(m: Netlist, faults: Sequence[Fault], vs: Sequence[TestVector],
                        chunk: int = 2048) -> list[list[dict[str, int]]]:
    """Output values of each faulty circuit for every vector, one list per fault."""
    c = compile_netlist(m)
    good, mask = pack_vectors(m, vs)
    K.good_values(c.kind, c.in0, c.in1, c.in2, c.out, good)
    for f in faults:
        check_fault(m, f)
    res = []
    for lo in range(0, len(faults), chunk):
        _, obs = _run_kernel(c, good, mask, faults[lo:lo + chunk], True)
        res += [_words_to_outputs(m, c, np.ascontiguousarray(o), len(vs)) for o in obs]
    return res


# ---------------------------------------------------------------------------
# redundancy


def _fixed_inputs(m: Netlist) -> dict[str, int]:
    return {"test_mode": 1} if m.is_dft else {}


def structurally_redundant(m: Netlist, faults: Iterable[Fault], fixed: dict[str, int] | None = None) -> set[Fault]:
    """Faults that cannot reach an output once the ``fixed`` inputs are held constant.

    A held input blocks the unselected data pin of every multiplexer it
    selects, and a fault forcing a held net to its held value has no effect.
    """
    fixed = _fixed_inputs(m) if fixed is None else fixed
    const: dict[int, int] = {}
    for name, val in fixed.items():
        for bit, net in enumerate(m.port(name).nets):
            const[net] = (val >> bit) & 1
    blocked = set()
    for g in m.gates:
        if g.kind is GateKind.MUX2 and g.inputs[0] in const:
            blocked.add((g.id, 2 if const[g.inputs[0]] == 0 else 1))
    observable = [False] * m.num_nets
    for p in m.outputs:
        for net in p.nets:
            observable[net] = True
    c = compile_netlist(m)
    gate_obs = [False] * len(m.gates)
    # readers come later in topological order, so each output net is final when its driver is visited
    for gid in reversed(c.order):
        g = m.gates[gid]
        gate_obs[gid] = observable[g.output]
        if not gate_obs[gid]:
            continue
        for pin, net in enumerate(g.inputs):
            if (gid, pin) not in blocked:
                observable[net] = True
    net_obs = observable

    red = set()
    for f in faults:
        if f.kind == "port":
            port = m.port(f.port)
            if port.dir == "out":
                continue
            net = port.nets[f.pin]
            if not net_obs[net] or const.get(net) == f.value:
                red.add(f)
        elif f.kind == "out":
            net = m.gates[f.gate].output
            if not net_obs[net]:
                red.add(f)
        else:
            g = m.gates[f.gate]
            if (g.id, f.pin) in blocked or not gate_obs[g.id] or const.get(g.inputs[f.pin]) == f.value:
                red.add(f)
    return red


def exhaustive_vectors(m: Netlist, fixed: dict[str, int] | None = None) -> list[TestVector]:
    fixed = _fixed_inputs(m) if fixed is None else fixed
    free = [p for p in m.inputs if p.name not in fixed]
    total = sum(p.width for p in free)
    vs = []
    for code in range(1 << total):
        vals = dict(fixed)
        shift = 0
        for p in free:
            vals[p.name] = (code >> shift) & ((1 << p.width) - 1)
            shift += p.width
        vs.append(TestVector(vals, f"exh{code}"))
    return vs


EXHAUSTIVE_LIMIT = 16


def find_redundant(m: Netlist, fl: FaultList | Sequence[Fault], method: str = "auto") -> set[Fault]:
    """Faults no input assignment (with test_mode held at 1 on DFT circuits) can detect.

    ``exhaustive`` simulates every assignment of the free inputs; ``structural``
    uses the observability analysis of :func:`structurally_redundant`.
    ``auto`` picks exhaustive when there are at most 16 free input bits.
    """
    faults = list(fl.faults) if isinstance(fl, FaultList) else list(fl)
    fixed = _fixed_inputs(m)
    free_bits = sum(p.width for p in m.inputs if p.name not in fixed)
    if method == "auto":
        method = "exhaustive" if free_bits <= EXHAUSTIVE_LIMIT else "structural"
    if method == "structural":
        return structurally_redundant(m, faults, fixed)
    if method != "exhaustive":
        raise ValueError(f"unknown redundancy method {method!r}")
    vs = exhaustive_vectors(m, fixed)
    detected = np.zeros(len(faults), bool)
    step = 64 * 256
    for lo in range(0, len(vs), step):
        detected |= fault_sim(m, faults, vs[lo:lo + step]).any(axis=1)
    return {f for f, d in zip(faults, detected) if not d}


# ---------------------------------------------------------------------------
# coverage


@dataclass
class CoverageReport:
    total: int
    detected: int
    redundant: int
    undetected: list[Fault]
    redundant_faults: list[Fault]
    first_detections: list[int]
    vectors: int

    @property
    def coverage(self) -> float:
        denom = self.total - self.redundant
        return 100.0 if denom == 0 else 100.0 * self.detected / denom

    @property
    def complete(self) -> bool:
        return not self.undetected

    def to_dict(self) -> dict:
        return {
            "faults_total": self.total,
            "detected": self.detected,
            "redundant": self.redundant,
            "undetected_count": len(self.undetected),
            "coverage_pct": round(self.coverage, 6),
            "vectors": self.vectors,
            "first_detections": self.first_detections,
            "undetected": [str(f) for f in self.undetected],
            "redundant_faults": [str(f) for f in self.redundant_faults],
        }


def coverage(matrix: np.ndarray, fl: FaultList | Sequence[Fault], redundant: Iterable[Fault] = ()) -> CoverageReport:
    faults = list(fl.faults) if isinstance(fl, FaultList) else list(fl)
    if matrix.shape[0] != len(faults):
        raise SimulationError("detection matrix does not match the fault list")
    red = set(redundant)
    hit = matrix.any(axis=1) if matrix.shape[1] else np.zeros(len(faults), bool)
    first = [0] * matrix.shape[1]
    for row in matrix:
        idx = np.flatnonzero(row)
        if idx.size:
            first[idx[0]] += 1
    undetected = [f for f, h in zip(faults, hit) if not h and f not in red]
    red_list = [f for f, h in zip(faults, hit) if f in red and not h]
    return CoverageReport(
        total=len(faults),
        detected=int(hit.sum()),
        redundant=len(red_list),
        undetected=undetected,
        redundant_faults=red_list,
        first_detections=first,
        vectors=matrix.shape[1],
    )


def per_cell_patterns(m: Netlist, vs: Sequence[TestVector]) -> dict[tuple[int, int], list[tuple[int, ...]]]:
    """Good-machine values seen at each cell's inputs, one tuple per vector.

    Multiplier cells report (X, Y, Cin, Pin); adder cells report (A, B, Cin).
    """
    from .netlist import cell_terminals

    vals = good_values_batched(m, vs)
    res = {}
    for pos, t in sorted(cell_terminals(m).items()):
        if t.x is not None:
            res[pos] = [(int(r[t.x]), int(r[t.y]), int(r[t.cin]), int(r[t.b])) for r in vals]
        else:
            res[pos] = [(int(r[t.a]), int(r[t.b]), int(r[t.cin])) for r in vals]
    return res


# ---------------------------------------------------------------------------
# vector files and reports


def format_vectors(m: Netlist, vs: Sequence[TestVector], header: str = "") -> str:
    """One vector per line as ``name=bits`` fields, bits written MSB first."""
    lines = [f"# {line}" for line in header.splitlines()] if header else []
    for v in vs:
        fields = []
        if v.label:
            fields.append(f"label={v.label}")
        for p in m.inputs:
            fields.append(f"{p.name}={v.values[p.name]:0{p.width}b}")
        lines.append(" ".join(fields))
    return "\n".join(lines) + ("\n" if lines else "")


def parse_vectors(text: str, m: Netlist | None = None) -> list[TestVector]:
    vs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        vals = {}
        label = ""
        for tok in line.split():
            if "=" not in tok:
                raise SimulationError(f"line {lineno}: expected name=bits, got {tok!r}")
            name, bits = tok.split("=", 1)
            if name == "label":
                label = bits
                continue
            if not bits or set(bits) - {"0", "1"}:
                raise SimulationError(f"line {lineno}: {name} has non-binary value {bits!r}")
            if m is not None and m.has_port(name) and len(bits) != m.port(name).width:
                raise SimulationError(f"line {lineno}: {name} has {len(bits)} bits, port is {m.port(name).width} wide")
            vals[name] = int(bits, 2)
        v = TestVector(vals, label)
        if m is not None:
            check_vector(m, adapt_vector(m, v))
        vs.append(v)
    return vs


def report_json(report: CoverageReport, meta: dict) -> str:
    doc = dict(meta)
    doc.update(report.to_dict())
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


CSV_FIELDS = ["circuit", "n", "suite", "vectors", "faults_total", "redundant", "detected", "coverage_pct", "runtime_ms"]


def report_csv(report: CoverageReport, circuit: str, n: int, suite: str, runtime_ms: float) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    w.writerow([circuit, n, suite, report.vectors, report.total, report.redundant, report.detected,
                f"{report.coverage:.4f}", f"{runtime_ms:.1f}"])
    return buf.getvalue()


def region_split(m: Netlist, faults: Iterable[Fault]) -> dict[str, int]:
    counts = {"core": 0, "dft": 0}
    for f in faults:
        counts["dft" if is_dft_fault(m, f) else "core"] += 1
    return counts


__all__ = [
    "TestVector", "check_vector", "adapt_vector", "evaluate", "good_sim", "faulty_sim", "fault_sim",
    "good_values_batched", "good_sim_batched", "output_words", "faulty_outputs_batched", "faulty_outputs_many", "find_redundant",
    "structurally_redundant", "exhaustive_vectors", "coverage", "CoverageReport", "per_cell_patterns",
    "format_vectors", "parse_vectors", "report_json", "report_csv", "compile_netlist",
]
