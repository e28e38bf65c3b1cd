"""Gate-level netlists for ripple-carry adders and array multipliers.

A :class:`Netlist` is an immutable combinational DAG. Nets are dense integers;
every net has exactly one driver (an input-port bit or a gate output). Gates
that belong to an array cell carry a ``(row, col, role)`` tag so that the test
generator and the fault model can find cell terminals without name lookups.

Bit order everywhere is LSB first: ``port.nets[0]`` is bit 0.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, NamedTuple


class NetlistError(ValueError):
    """Raised for malformed netlists or unsupported builder arguments."""


class GateKind(str, Enum):
    AND2 = "AND2"
    OR2 = "OR2"
    NAND2 = "NAND2"
    NOR2 = "NOR2"
    XOR2 = "XOR2"
    NOT = "NOT"
    BUF = "BUF"
    MUX2 = "MUX2"  # inputs: (select, in0, in1)
    CONST0 = "CONST0"
    CONST1 = "CONST1"

    @property
    def arity(self) -> int:
        return _ARITY[self]


_ARITY = {
    GateKind.AND2: 2,
    GateKind.OR2: 2,
    GateKind.NAND2: 2,
    GateKind.NOR2: 2,
    GateKind.XOR2: 2,
    GateKind.NOT: 1,
    GateKind.BUF: 1,
    GateKind.MUX2: 3,
    GateKind.CONST0: 0,
    GateKind.CONST1: 0,
}

CELL_ROLES = ("and", "xor1", "xor2", "carry-and-a", "carry-and-b", "carry-or", "border-mux")
FA_ROLES = ("xor1", "xor2", "carry-and-a", "carry-and-b", "carry-or")

# Recorded in reports so every coverage claim names the reconstruction it holds for.
FA_STRUCTURE = "xor-and-or-5"
MUX_WIRING = "prev-row-right-border-pout"


@dataclass(frozen=True)
class Gate:
    id: int
    kind: GateKind
    inputs: tuple[int, ...]
    output: int
    cell: tuple[int, int, str] | None = None


@dataclass(frozen=True)
class Port:
    name: str
    dir: str
    nets: tuple[int, ...]

    @property
    def width(self) -> int:
        return len(self.nets)


@dataclass(frozen=True, eq=False)
class Netlist:
    """Immutable gate-level netlist. Validated on construction."""

    name: str
    ports: tuple[Port, ...]
    gates: tuple[Gate, ...]
    num_nets: int

    def __post_init__(self):
        _validate(self)

    def port(self, name: str) -> Port:
        for p in self.ports:
            if p.name == name:
                return p
        raise KeyError(name)

    def has_port(self, name: str) -> bool:
        return any(p.name == name for p in self.ports)

    @property
    def inputs(self) -> tuple[Port, ...]:
        return tuple(p for p in self.ports if p.dir == "in")

    @property
    def outputs(self) -> tuple[Port, ...]:
        return tuple(p for p in self.ports if p.dir == "out")

    @property
    def cell_map(self) -> dict[int, tuple[int, int, str]]:
        return {g.id: g.cell for g in self.gates if g.cell is not None}

    @property
    def is_dft(self) -> bool:
        return self.has_port("test_mode")

    def count(self, kind: GateKind) -> int:
        return sum(1 for g in self.gates if g.kind is kind)

    def cells(self) -> list[tuple[int, int]]:
        return sorted({g.cell[:2] for g in self.gates if g.cell and g.cell[2] != "border-mux"})

    def summary(self) -> dict[str, int]:
        return {
            "gates": len(self.gates),
            "cells": len(self.cells()),
            "muxes": self.count(GateKind.MUX2),
            "nets": self.num_nets,
        }


def _validate(m: Netlist) -> None:
    driver = [None] * m.num_nets
    seen_ports = set()
    for p in m.ports:
        if p.name in seen_ports:
            raise NetlistError(f"duplicate port {p.name}")
        seen_ports.add(p.name)
        if p.dir not in ("in", "out"):
            raise NetlistError(f"port {p.name}: bad direction {p.dir!r}")
        if p.dir == "in":
            for net in p.nets:
                if driver[net] is not None:
                    raise NetlistError(f"net {net} has more than one driver")
                driver[net] = ("port", p.name)
    for idx, g in enumerate(m.gates):
        if g.id != idx:
            raise NetlistError(f"gate ids must be dense, got {g.id} at position {idx}")
        if len(g.inputs) != g.kind.arity:
            raise NetlistError(f"gate {g.id}: {g.kind.value} takes {g.kind.arity} inputs")
        if g.cell is not None and g.cell[2] not in CELL_ROLES:
            raise NetlistError(f"gate {g.id}: unknown cell role {g.cell[2]!r}")
        if driver[g.output] is not None:
            raise NetlistError(f"net {g.output} has more than one driver")
        driver[g.output] = ("gate", g.id)
    for g in m.gates:
        for net in g.inputs:
            if not 0 <= net < m.num_nets or driver[net] is None:
                raise NetlistError(f"gate {g.id}: input net {net} is undriven")
    for p in m.outputs:
        for net in p.nets:
            if not 0 <= net < m.num_nets or driver[net] is None:
                raise NetlistError(f"output {p.name}: net {net} is undriven")
    if any(d is None for d in driver):
        raise NetlistError("netlist has undriven nets")
    if len(topological_order(m)) != len(m.gates):
        raise NetlistError("netlist contains a combinational cycle")


def topological_order(m: Netlist) -> list[int]:
    """Gate ids in a topological order (stable with respect to gate id)."""
    gate_of = {g.output: g.id for g in m.gates}
    indeg = [0] * len(m.gates)
    fanout: list[list[int]] = [[] for _ in m.gates]
    for g in m.gates:
        for net in g.inputs:
            src = gate_of.get(net)
            if src is not None:
                indeg[g.id] += 1
                fanout[src].append(g.id)
    ready = deque(g.id for g in m.gates if indeg[g.id] == 0)
    order = []
    while ready:
        gid = ready.popleft()
        order.append(gid)
        for nxt in fanout[gid]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                ready.append(nxt)
    return order


def fanout_map(m: Netlist) -> list[list[tuple[int, int]]]:
    """For each net, the (gate id, pin) pairs that read it."""
    readers: list[list[tuple[int, int]]] = [[] for _ in range(m.num_nets)]
    for g in m.gates:
        for pin, net in enumerate(g.inputs):
            readers[net].append((g.id, pin))
    return readers


class _Builder:
    def __init__(self, name: str):
        self.name = name
        self.ports: list[Port] = []
        self.gates: list[Gate] = []
        self.num_nets = 0

    def input(self, name: str, width: int) -> list[int]:
        nets = list(range(self.num_nets, self.num_nets + width))
        self.num_nets += width
        self.ports.append(Port(name, "in", tuple(nets)))
        return nets

    def output(self, name: str, nets: Iterable[int]) -> None:
        self.ports.append(Port(name, "out", tuple(nets)))

    def gate(self, kind: GateKind, *inputs: int, cell=None) -> int:
        out = self.num_nets
        self.num_nets += 1
        self.gates.append(Gate(len(self.gates), kind, tuple(inputs), out, cell))
        return out

    def full_adder(self, a: int, b: int, cin: int, row: int, col: int) -> tuple[int, int]:
        """S = (A^B)^Cin, Cout = A.B + (A^B).Cin with the first XOR shared."""
        p = self.gate(GateKind.XOR2, a, b, cell=(row, col, "xor1"))
        s = self.gate(GateKind.XOR2, p, cin, cell=(row, col, "xor2"))
        g = self.gate(GateKind.AND2, a, b, cell=(row, col, "carry-and-a"))
        t = self.gate(GateKind.AND2, p, cin, cell=(row, col, "carry-and-b"))
        cout = self.gate(GateKind.OR2, g, t, cell=(row, col, "carry-or"))
        return s, cout

    def build(self) -> Netlist:
        return Netlist(self.name, tuple(self.ports), tuple(self.gates), self.num_nets)


def build_fa() -> Netlist:
    """A single full-adder cell with ports A, B, Cin, S, Cout."""
    return build_rca(1, name="fa")


def build_mult_cell() -> Netlist:
    """A single multiplier cell: AND(X, Y) feeding the FA's A input; B is Pin."""
    b = _Builder("mult_cell")
    x, = b.input("X", 1)
    y, = b.input("Y", 1)
    cin, = b.input("Cin", 1)
    pin, = b.input("Pin", 1)
    xy = b.gate(GateKind.AND2, x, y, cell=(0, 0, "and"))
    s, cout = b.full_adder(xy, pin, cin, 0, 0)
    b.output("Pout", [s])
    b.output("Cout", [cout])
    return b.build()


def build_rca(n: int, name: str | None = None) -> Netlist:
    """Ripple-carry adder; cell i's carry-out drives cell i+1's carry-in."""
    if n < 1:
        raise NetlistError("adder width must be at least 1")
    b = _Builder(name or f"rca_{n}")
    a = b.input("A", n)
    bb = b.input("B", n)
    carry, = b.input("Cin", 1)
    sums = []
    for i in range(n):
        s, carry = b.full_adder(a[i], bb[i], carry, 0, i)
        sums.append(s)
    b.output("S", sums)
    b.output("Cout", [carry])
    return b.build()


def build_array_mult(n: int) -> Netlist:
    """n x n array multiplier computing OUT = X*Y + P_top (+ Cb carries).

    Cell (i, j) adds X[j]&Y[i] at weight i+j. Carries ripple along a row
    (Cin(i,j) = Cout(i,j-1), Cin(i,0) = Cb[i]); partial sums move down the
    diagonal (Pin(i,j) = Pout(i-1,j+1)) and the left-border cell takes the
    previous row's final carry (Pin(i,n-1) = Cout(i-1,n-1)).
    """
    if n < 2:
        raise NetlistError("multiplier width must be at least 2")
    if n % 2:
        raise NetlistError("pair-tiling requires even width")
    b = _Builder(f"mult_{n}")
    x = b.input("X", n)
    y = b.input("Y", n)
    ptop = b.input("P_top", n)
    cb = b.input("Cb", n)
    out = []
    pout_prev: list[int] = []
    cout_prev = -1
    for i in range(n):
        carry = cb[i]
        pout_row = []
        for j in range(n):
            if i == 0:
                pin = ptop[j]
            elif j < n - 1:
                pin = pout_prev[j + 1]
            else:
                pin = cout_prev
            xy = b.gate(GateKind.AND2, x[j], y[i], cell=(i, j, "and"))
            s, carry = b.full_adder(xy, pin, carry, i, j)
            pout_row.append(s)
        out.append(pout_row[0])
        pout_prev, cout_prev = pout_row, carry
    out.extend(pout_prev[1:])
    out.append(cout_prev)
    b.output("OUT", out)
    return b.build()


def apply_dft_transform(m: Netlist) -> Netlist:
    """Insert the test-mode border multiplexers into an array multiplier.

    For every row i >= 1 the left-border Pin(i, n-1) becomes
    MUX2(test_mode, Cout(i-1, n-1), Pout(i-1, 0)). With test_mode = 0 the
    circuit is the original multiplier.
    """
    if m.is_dft:
        raise NetlistError("netlist already has a test_mode port")
    roles = {}
    for g in m.gates:
        if g.cell is not None:
            roles[g.cell] = g
    cells = m.cells()
    if not cells:
        raise NetlistError("netlist has no cell map; expected an array multiplier")
    n = max(c for _, c in cells) + 1
    if len(cells) != n * n or any((i, j, r) not in roles for i, j in cells for r in ("and",) + FA_ROLES):
        raise NetlistError("netlist cell map does not describe an array multiplier")

    tm = m.num_nets
    next_net = tm + 1
    muxes: dict[int, Gate] = {}  # row -> mux gate (ids assigned on renumbering)
    rewire: dict[tuple[int, int], int] = {}  # (gate id, pin) -> new net
    for i in range(1, n):
        func = roles[(i - 1, n - 1, "carry-or")].output
        loop = roles[(i - 1, 0, "xor2")].output
        mux_out = next_net
        next_net += 1
        muxes[i] = Gate(-1, GateKind.MUX2, (tm, func, loop), mux_out, (i, n - 1, "border-mux"))
        for role in ("xor1", "carry-and-a"):
            g = roles[(i, n - 1, role)]
            if g.inputs[1] != func:
                raise NetlistError(f"cell ({i},{n - 1}) left-border Pin is not the previous row's carry")
            rewire[(g.id, 1)] = mux_out

    gates = []
    inserted = set()
    for g in m.gates:
        row = g.cell[0] if g.cell else None
        if row in muxes and row not in inserted and g.cell[:2] == (row, n - 1):
            gates.append(muxes[row])
            inserted.add(row)
        ins = tuple(rewire.get((g.id, pin), net) for pin, net in enumerate(g.inputs))
        gates.append(Gate(-1, g.kind, ins, g.output, g.cell))
    ports = [p for p in m.ports if p.dir == "in"]
    ports.append(Port("test_mode", "in", (tm,)))
    ports.extend(p for p in m.ports if p.dir == "out")
    return _renumber(f"dft_{m.name}", ports, gates)


def _renumber(name: str, ports: list[Port], gates: list[Gate]) -> Netlist:
    """Reassign dense net and gate ids in construction order (inputs, then gates)."""
    mapping: dict[int, int] = {}
    for p in ports:
        if p.dir == "in":
            for net in p.nets:
                mapping[net] = len(mapping)
    new_gates = []
    for g in gates:
        mapping[g.output] = len(mapping)
    for idx, g in enumerate(gates):
        new_gates.append(Gate(idx, g.kind, tuple(mapping[x] for x in g.inputs), mapping[g.output], g.cell))
    new_ports = tuple(Port(p.name, p.dir, tuple(mapping[x] for x in p.nets)) for p in ports)
    return Netlist(name, new_ports, tuple(new_gates), len(mapping))


def build_dft_mult(n: int) -> Netlist:
    return apply_dft_transform(build_array_mult(n))


class CellTerminals(NamedTuple):
    x: int | None
    y: int | None
    a: int  # FA A input (X&Y in a multiplier cell)
    b: int  # FA B input (Pin in a multiplier cell)
    cin: int
    s: int  # sum (Pout in a multiplier cell)
    cout: int


def cell_terminals(m: Netlist) -> dict[tuple[int, int], CellTerminals]:
    """Nets at the boundary of every array cell, keyed by (row, col)."""
    by_cell: dict[tuple[int, int], dict[str, Gate]] = {}
    for g in m.gates:
        if g.cell is not None and g.cell[2] != "border-mux":
            by_cell.setdefault(g.cell[:2], {})[g.cell[2]] = g
    terms = {}
    for pos, roles in by_cell.items():
        x1, x2, cor = roles["xor1"], roles["xor2"], roles["carry-or"]
        andg = roles.get("and")
        terms[pos] = CellTerminals(
            x=andg.inputs[0] if andg else None,
            y=andg.inputs[1] if andg else None,
            a=x1.inputs[0],
            b=x1.inputs[1],
            cin=x2.inputs[1],
            s=x2.output,
            cout=cor.output,
        )
    return terms


# ---------------------------------------------------------------------------
# Export / import


def to_json(m: Netlist) -> dict:
    return {
        "name": m.name,
        "ports": [{"name": p.name, "dir": p.dir, "width": p.width, "nets": list(p.nets)} for p in m.ports],
        "gates": [
            {
                "id": g.id,
                "kind": g.kind.value,
                "inputs": list(g.inputs),
                "output": g.output,
                "cell": list(g.cell) if g.cell else None,
            }
            for g in m.gates
        ],
        "nets": m.num_nets,
    }


def from_json(doc: dict) -> Netlist:
    try:
        return _from_json(doc)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, NetlistError):
            raise
        raise NetlistError(f"malformed netlist document: {exc}") from exc


def _from_json(doc: dict) -> Netlist:
    ports = []
    for p in doc["ports"]:
        if len(p["nets"]) != p["width"]:
            raise NetlistError(f"port {p['name']}: width does not match net list")
        ports.append(Port(p["name"], p["dir"], tuple(p["nets"])))
    gates = tuple(
        Gate(
            g["id"],
            GateKind(g["kind"]),
            tuple(g["inputs"]),
            g["output"],
            tuple(g["cell"]) if g["cell"] is not None else None,
        )
        for g in doc["gates"]
    )
    return Netlist(doc["name"], tuple(ports), gates, doc["nets"])


def import_netlist(data: bytes | str) -> Netlist:
    try:
        doc = json.loads(data)
    except ValueError as exc:
        raise NetlistError(f"netlist is not valid JSON: {exc}") from exc
    return from_json(doc)


_VERILOG_PRIM = {
    GateKind.AND2: "and",
    GateKind.OR2: "or",
    GateKind.NAND2: "nand",
    GateKind.NOR2: "nor",
    GateKind.XOR2: "xor",
    GateKind.NOT: "not",
    GateKind.BUF: "buf",
}

_MUX_UDP = """primitive mux2 (y, s, a, b);
  output y;
  input s, a, b;
  table
    // s a b : y
       0 0 ? : 0;
       0 1 ? : 1;
       1 ? 0 : 0;
       1 ? 1 : 1;
       ? 0 0 : 0;
       ? 1 1 : 1;
  endtable
endprimitive
"""


def to_verilog(m: Netlist) -> str:
    """Structural Verilog: one module of primitive instances (plus a mux2 UDP if needed)."""
    names: dict[int, str] = {}
    for p in m.inputs:
        for k, net in enumerate(p.nets):
            names[net] = f"{p.name}[{k}]"
    extra_bufs = []
    for p in m.outputs:
        for k, net in enumerate(p.nets):
            bit = f"{p.name}[{k}]"
            if net in names:
                extra_bufs.append((bit, names[net]))
            else:
                names[net] = bit
    for net in range(m.num_nets):
        names.setdefault(net, f"n{net}")

    lines = []
    if m.count(GateKind.MUX2):
        lines.append(_MUX_UDP)
    lines.append(f"module {m.name} ({', '.join(p.name for p in m.ports)});")
    for p in m.ports:
        kw = "input" if p.dir == "in" else "output"
        lines.append(f"  {kw} [{p.width - 1}:0] {p.name};")
    internal = [names[n] for n in range(m.num_nets) if names[n].startswith("n")]
    for k in range(0, len(internal), 16):
        lines.append(f"  wire {', '.join(internal[k:k + 16])};")
    for g in m.gates:
        out = names[g.output]
        if g.kind is GateKind.MUX2:
            s, a, b = (names[x] for x in g.inputs)
            lines.append(f"  mux2 g{g.id} ({out}, {s}, {a}, {b});")
        elif g.kind in (GateKind.CONST0, GateKind.CONST1):
            lit = "1'b0" if g.kind is GateKind.CONST0 else "1'b1"
            lines.append(f"  buf g{g.id} ({out}, {lit});")
        else:
            args = ", ".join([out] + [names[x] for x in g.inputs])
            lines.append(f"  {_VERILOG_PRIM[g.kind]} g{g.id} ({args});")
    for k, (bit, src) in enumerate(extra_bufs):
        lines.append(f"  buf ob{k} ({bit}, {src});")
    lines.append("endmodule")
    return "\n".join(lines) + "\n"


def export_netlist(m: Netlist, format: str = "json") -> bytes:
    if format == "json":
        return (json.dumps(to_json(m)) + "\n").encode()
    if format in ("verilog", "structural-verilog", "v"):
        return to_verilog(m).encode()
    raise ValueError(f"unknown netlist format {format!r}")
