"""Behavioral model of the multiplier BIST: counter, decoder ROM and comparator.

A 3-bit counter walks the five decoder entries. Each entry holds the
stimulus of a cell and its adjacent cell (8 bits) plus their responses
(4 bits); the stimulus is tiled over the array to form the primary inputs.
The comparator checks the full product word against a stored golden word.
One extra cycle latches the verdict, so a session always takes six cycles.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Sequence

from .ctest_tpg import TABLE2_LAYOUTS, expand_pair, pair_stimulus
from .faultmodel import Fault, check_fault
from .netlist import Netlist, build_dft_mult, cell_terminals
from .sim import TestVector, faulty_outputs_batched, faulty_outputs_many, faulty_sim, good_sim, good_values_batched

COUNTER_BITS = 3  # counts 0..5
APPLY_CYCLES = 5
SESSION_CYCLES = APPLY_CYCLES + 1


class BistError(ValueError):
    pass


@dataclass(frozen=True)
class RomEntry:
    stimulus: tuple[int, ...]  # X, Y, Cin, Pin of the cell, then of the adjacent cell
    response: tuple[int, ...]  # Cout, Pout of the cell, then of the adjacent cell

    @property
    def word(self) -> int:
        """The 12 decoder outputs, stimulus bits first (MSB)."""
        value = 0
        for bit in self.stimulus + self.response:
            value = (value << 1) | bit
        return value

    def __str__(self) -> str:
        s = "".join(map(str, self.stimulus))
        r = "".join(map(str, self.response))
        return f"{s[:4]}/{s[4:]} -> {r[:2]}/{r[2:]}"


@dataclass(frozen=True)
class DecoderRom:
    n: int
    entries: tuple[RomEntry, ...]
    vectors: tuple[TestVector, ...]  # each entry expanded over the array
    golden: tuple[int, ...]  # expected OUT word per entry

    def __len__(self) -> int:
        return len(self.entries)


def build_decoder_rom(n: int, netlist: Netlist | None = None) -> DecoderRom:
    if n < 2 or n % 2:
        raise BistError("pair-tiling requires even width")
    m = netlist if netlist is not None else build_dft_mult(n)
    if m.port("X").width != n:
        raise BistError(f"netlist {m.name} is not {n} bits wide")
    terms = cell_terminals(m)
    entries, vectors = [], []
    stimuli = [pair_stimulus(lay) for lay in TABLE2_LAYOUTS]
    for k, (cell, adj) in enumerate(stimuli):
        vectors.append(expand_pair(cell, adj, n, label=f"rom{k}"))
    values = good_values_batched(m, vectors)
    for k, (cell, adj) in enumerate(stimuli):
        adj_pos = (0, 1) if cell[0] != adj[0] else (1, 0)
        row = values[k]
        resp = []
        for pos in ((0, 0), adj_pos):
            t = terms[pos]
            resp += [int(row[t.cout]), int(row[t.s])]
        entries.append(RomEntry(cell + adj, tuple(resp)))
    golden = tuple(good_sim(m, v)["OUT"] for v in vectors)
    return DecoderRom(n, tuple(entries), tuple(vectors), golden)


@dataclass(frozen=True)
class CycleRecord:
    cycle: int
    counter: int
    rom_entry: int | None
    outputs: int | None
    golden: int | None
    match: bool


@dataclass(frozen=True)
class BistSession:
    n: int
    cycles: tuple[CycleRecord, ...]
    verdict: str  # "pass" or "fail"
    fail_cycle: int | None = None
    fault: Fault | None = field(default=None)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def message(self) -> str:
        if self.passed:
            return f"PASS in {len(self.cycles)} cycles"
        return f"FAIL at cycle {self.fail_cycle}"

    def log(self) -> list[dict]:
        digits = (2 * self.n + 3) // 4
        hexed = lambda x: None if x is None else f"{x:0{digits}x}"  # noqa: E731
        return [
            {
                "cycle": c.cycle,
                "rom_entry": c.rom_entry,
                "outputs_hex": hexed(c.outputs),
                "golden_hex": hexed(c.golden),
                "match": c.match,
            }
            for c in self.cycles
        ]

    def log_json(self) -> str:
        return json.dumps(self.log(), indent=2) + "\n"


def _check_target(m: Netlist, rom: DecoderRom) -> None:
    if not m.is_dft:
        raise BistError("BIST needs the DFT multiplier (no test_mode port)")
    if m.port("X").width != rom.n:
        raise BistError(f"ROM built for n={rom.n}, netlist is n={m.port('X').width}")
    if any(v.values["test_mode"] != 1 for v in rom.vectors):
        raise BistError("test_mode must be held at 1 during a session")


def _session(rom: DecoderRom, outs: Sequence[int], fault: Fault | None) -> BistSession:
    records = []
    fail_cycle = None
    for counter in range(APPLY_CYCLES):
        match = outs[counter] == rom.golden[counter]
        if not match and fail_cycle is None:
            fail_cycle = counter + 1
        records.append(CycleRecord(counter + 1, counter, counter, outs[counter], rom.golden[counter], match))
    # the last cycle only latches the comparator verdict
    records.append(CycleRecord(SESSION_CYCLES, APPLY_CYCLES, None, None, None, fail_cycle is None))
    verdict = "pass" if fail_cycle is None else "fail"
    return BistSession(rom.n, tuple(records), verdict, fail_cycle, fault)


def run_bist_session(m: Netlist, rom: DecoderRom, fault: Fault | None = None, engine: str = "batched") -> BistSession:
    """Apply the ROM in test mode, compare every product word, latch the verdict.

    ``engine="serial"`` evaluates each cycle with the plain-Python simulator.
    """
    _check_target(m, rom)
    if fault is not None:
        check_fault(m, fault)
    if engine == "batched":
        outs = [o["OUT"] for o in faulty_outputs_batched(m, fault, rom.vectors)]
    elif engine == "serial":
        sim = (lambda v: good_sim(m, v)) if fault is None else (lambda v: faulty_sim(m, v, fault))
        outs = [sim(v)["OUT"] for v in rom.vectors]
    else:
        raise ValueError(f"unknown engine {engine!r}")
    return _session(rom, outs, fault)


def run_bist_sweep(m: Netlist, rom: DecoderRom, faults: Sequence[Fault]) -> list[BistSession]:
    """One session per injected fault, simulated together."""
    _check_target(m, rom)
    faults = list(faults)
    outs = faulty_outputs_many(m, faults, rom.vectors)
    return [_session(rom, [o["OUT"] for o in fo], f) for f, fo in zip(faults, outs)]
