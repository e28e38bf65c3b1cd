"""Single stuck-at fault enumeration and structural equivalence collapsing."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Mapping

from .netlist import GateKind, Netlist, fanout_map

SCOPES = ("core", "all")


@dataclass(frozen=True, order=True)
class Fault:
    """A stuck-at fault.

    ``kind`` is ``"in"`` (gate input pin ``pin`` of gate ``gate``), ``"out"``
    (the output net of gate ``gate``) or ``"port"`` (bit ``pin`` of port
    ``port``). For input ports a port fault forces the whole net; for output
    ports it only forces the observed value.
    """

    kind: str
    gate: int
    pin: int
    port: str
    value: int

    def __str__(self) -> str:
        sa = f"sa{self.value}"
        if self.kind == "in":
            return f"gate:{self.gate}:in{self.pin}:{sa}"
        if self.kind == "out":
            return f"gate:{self.gate}:out:{sa}"
        return f"port:{self.port}:{self.pin}:{sa}"

    @property
    def site(self) -> str:
        return str(self).rsplit(":", 1)[0]

    @property
    def polarity(self) -> str:
        return f"SA{self.value}"


def pin_fault(gate: int, pin: int, value: int) -> Fault:
    return Fault("in", gate, pin, "", value)


def out_fault(gate: int, value: int) -> Fault:
    return Fault("out", gate, -1, "", value)


def port_fault(port: str, bit: int, value: int) -> Fault:
    return Fault("port", -1, bit, port, value)


def parse_fault(text: str) -> Fault:
    """Parse ``gate:12:in0:sa1``, ``gate:12:out:sa0`` or ``port:X:3:sa1``."""
    parts = text.strip().lower().split(":")
    try:
        value = {"sa0": 0, "sa1": 1}[parts[-1]]
        if parts[0] == "gate" and len(parts) == 4:
            if parts[2] == "out":
                return out_fault(int(parts[1]), value)
            if parts[2].startswith("in"):
                return pin_fault(int(parts[1]), int(parts[2][2:]), value)
        if parts[0] == "port" and len(parts) == 4:
            # port names are case sensitive
            name = text.strip().split(":")[1]
            return port_fault(name, int(parts[2]), value)
    except (KeyError, ValueError, IndexError):
        pass
    raise ValueError(f"cannot parse fault {text!r}")


def is_dft_fault(m: Netlist, f: Fault) -> bool:
    if f.kind == "port":
        return f.port == "test_mode"
    cell = m.gates[f.gate].cell
    return cell is not None and cell[2] == "border-mux"


def check_fault(m: Netlist, f: Fault) -> None:
    if f.value not in (0, 1):
        raise ValueError(f"{f}: stuck value must be 0 or 1")
    if f.kind == "port":
        if not m.has_port(f.port) or not 0 <= f.pin < m.port(f.port).width:
            raise ValueError(f"{f}: no such port bit in {m.name}")
        return
    if not 0 <= f.gate < len(m.gates):
        raise ValueError(f"{f}: no such gate in {m.name}")
    if f.kind == "in" and not 0 <= f.pin < len(m.gates[f.gate].inputs):
        raise ValueError(f"{f}: no such pin")
    if f.kind not in ("in", "out"):
        raise ValueError(f"{f}: bad site kind")


@dataclass(frozen=True, eq=False)
class FaultList:
    faults: tuple[Fault, ...]
    class_map: Mapping[Fault, Fault]
    scope: str
    collapsed: bool
    netlist: Netlist = field(repr=False)

    def __len__(self) -> int:
        return len(self.faults)

    def __iter__(self):
        return iter(self.faults)

    def members(self, rep: Fault) -> list[Fault]:
        return [f for f, r in self.class_map.items() if r == rep]

    def classes(self) -> dict[Fault, list[Fault]]:
        out: dict[Fault, list[Fault]] = {f: [] for f in self.faults}
        for f, r in self.class_map.items():
            out[r].append(f)
        return out


def enumerate_faults(m: Netlist, scope: str = "core") -> FaultList:
    """Two faults per port bit, gate input pin and gate output.

    ``scope="core"`` drops the border multiplexers and the test_mode port.
    """
    if scope not in SCOPES:
        raise ValueError(f"scope must be one of {SCOPES}")
    faults: list[Fault] = []
    for p in m.inputs:
        if scope == "core" and p.name == "test_mode":
            continue
        for bit in range(p.width):
            faults += [port_fault(p.name, bit, 0), port_fault(p.name, bit, 1)]
    for g in m.gates:
        if scope == "core" and g.cell is not None and g.cell[2] == "border-mux":
            continue
        for pin in range(len(g.inputs)):
            faults += [pin_fault(g.id, pin, 0), pin_fault(g.id, pin, 1)]
        faults += [out_fault(g.id, 0), out_fault(g.id, 1)]
    for p in m.outputs:
        for bit in range(p.width):
            faults += [port_fault(p.name, bit, 0), port_fault(p.name, bit, 1)]
    return FaultList(tuple(faults), {f: f for f in faults}, scope, False, m)


class _UnionFind:
    def __init__(self, items):
        self.parent = {x: x for x in items}
        self.rank = {x: i for i, x in enumerate(items)}

    def find(self, x):
        root = x
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[x] != root:
            self.parent[x], x = root, self.parent[x]
        return root

    def union(self, a, b):
        if a not in self.parent or b not in self.parent:
            return
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return
        # the earlier-enumerated fault stays the representative
        if self.rank[rb] < self.rank[ra]:
            ra, rb = rb, ra
        self.parent[rb] = ra


# (input stuck value, output stuck value) pairs that are equivalent per gate kind
_GATE_EQUIV = {
    GateKind.AND2: ((0, 0),),
    GateKind.NAND2: ((0, 1),),
    GateKind.OR2: ((1, 1),),
    GateKind.NOR2: ((1, 0),),
    GateKind.NOT: ((0, 1), (1, 0)),
    GateKind.BUF: ((0, 0), (1, 1)),
}


def collapse_equivalent(fl: FaultList) -> FaultList:
    """Merge structurally equivalent faults (gate rules and fanout-free nets)."""
    m = fl.netlist
    universe = list(fl.class_map)
    uf = _UnionFind(universe)

    for g in m.gates:
        for vin, vout in _GATE_EQUIV.get(g.kind, ()):
            for pin in range(len(g.inputs)):
                uf.union(pin_fault(g.id, pin, vin), out_fault(g.id, vout))

    readers = fanout_map(m)
    observers: list[list[tuple[str, int]]] = [[] for _ in range(m.num_nets)]
    for p in m.outputs:
        for bit, net in enumerate(p.nets):
            observers[net].append((p.name, bit))
    stem_of: dict[int, tuple[str, int, int]] = {}
    for p in m.inputs:
        for bit, net in enumerate(p.nets):
            stem_of[net] = ("port", p.name, bit)
    for g in m.gates:
        stem_of[g.output] = ("out", "", g.id)
    for net in range(m.num_nets):
        if len(readers[net]) + len(observers[net]) != 1:
            continue
        kind, name, idx = stem_of[net]
        for v in (0, 1):
            stem = port_fault(name, idx, v) if kind == "port" else out_fault(idx, v)
            if readers[net]:
                gid, pin = readers[net][0]
                branch = pin_fault(gid, pin, v)
            else:
                branch = port_fault(*observers[net][0], v)
            uf.union(stem, branch)

    class_map = {f: uf.find(fl.class_map[f]) for f in universe}
    reps = []
    seen = set()
    for f in universe:
        r = class_map[f]
        if r not in seen:
            seen.add(r)
            reps.append(r)
    return FaultList(tuple(reps), class_map, fl.scope, True, m)


def collapsed_faults(m: Netlist, scope: str = "core") -> FaultList:
    return collapse_equivalent(enumerate_faults(m, scope))


def export_csv(fl: FaultList) -> str:
    """One row per fault of the universe: fault_id, site, polarity, class_representative, scope."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["fault_id", "site", "polarity", "class_representative", "scope"])
    m = fl.netlist
    for idx, f in enumerate(fl.class_map):
        region = "dft" if is_dft_fault(m, f) else "core"
        w.writerow([idx, f.site, f.polarity, str(fl.class_map[f]), region])
    return buf.getvalue()
