"""C-test pattern generation for ripple-carry adders and array multipliers.

Suites are generated, not searched: each vector is a closed *layout* of cell
patterns (uniform, alternating rows, or alternating along the row chain)
that is then realized on the primary inputs.

Multiplier cell patterns are indexed by ``(XY, Cin, Pin)`` read as a binary
number; adder cell patterns by ``(A, B, Cin)``. In the multiplier the row
chain is the carry (Cin -> Cout, towards higher j) and the column chain is the
partial sum (Pout(i-1, j+1) -> Pin(i, j)). With the DFT multiplexers in test
mode the left-border Pin of row i reads Pout(i-1, 0).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

from .netlist import Netlist, build_dft_mult
from .sim import TestVector, good_sim_batched


class UnrealizableLayout(ValueError):
    """A layout cannot be produced from the primary inputs."""


class GroupKind(str, Enum):
    SIMPLE = "simple"
    COMPLEMENTARY_ROW = "complementary-row"
    COMPLEMENTARY_COLUMN = "complementary-column"
    TOTALLY_COMPLEMENTARY = "totally-complementary"


def _maj(a: int, b: int, c: int) -> int:
    return (a & b) | (a & c) | (b & c)


@dataclass(frozen=True)
class FaCellPattern:
    index: int
    a: int
    b: int
    cin: int
    group: GroupKind

    @property
    def cout(self) -> int:
        return _maj(self.a, self.b, self.cin)

    @property
    def s(self) -> int:
        return self.a ^ self.b ^ self.cin


@dataclass(frozen=True)
class MultCellPattern:
    index: int
    xy: int
    cin: int
    pin: int
    group: GroupKind

    @property
    def cout(self) -> int:
        return _maj(self.xy, self.cin, self.pin)

    @property
    def pout(self) -> int:
        return self.xy ^ self.cin ^ self.pin


@dataclass(frozen=True)
class PropagationGroup:
    kind: GroupKind
    members: tuple[int, ...]


@dataclass(frozen=True)
class PropagationTable:
    cell: str  # "fa" or "mult"
    patterns: tuple
    groups: tuple[PropagationGroup, ...]

    def __getitem__(self, idx: int):
        return self.patterns[idx]

    def __len__(self) -> int:
        return len(self.patterns)

    def group_of(self, idx: int) -> GroupKind:
        return self.patterns[idx].group


def _groups(patterns) -> tuple[PropagationGroup, ...]:
    out = []
    for kind in GroupKind:
        members = tuple(p.index for p in patterns if p.group is kind)
        if members:
            out.append(PropagationGroup(kind, members))
    return tuple(out)


def build_fa_propagation_table() -> PropagationTable:
    pats = []
    for idx in range(8):
        a, b, cin = (idx >> 2) & 1, (idx >> 1) & 1, idx & 1
        kind = GroupKind.SIMPLE if _maj(a, b, cin) == cin else GroupKind.COMPLEMENTARY_ROW
        pats.append(FaCellPattern(idx, a, b, cin, kind))
    return PropagationTable("fa", tuple(pats), _groups(pats))


def build_mult_propagation_table() -> PropagationTable:
    pats = []
    for idx in range(8):
        xy, cin, pin = (idx >> 2) & 1, (idx >> 1) & 1, idx & 1
        row_same = _maj(xy, cin, pin) == cin
        col_same = (xy ^ cin ^ pin) == pin
        if row_same and col_same:
            kind = GroupKind.SIMPLE
        elif row_same:
            kind = GroupKind.COMPLEMENTARY_COLUMN
        elif not col_same:
            kind = GroupKind.TOTALLY_COMPLEMENTARY
        else:
            # carry complemented with the sum chain unchanged cannot happen for a full adder
            raise AssertionError(f"pattern {idx} fits no propagation group")
        pats.append(MultCellPattern(idx, xy, cin, pin, kind))
    return PropagationTable("mult", tuple(pats), _groups(pats))


FA_TABLE = build_fa_propagation_table()
MULT_TABLE = build_mult_propagation_table()


# ---------------------------------------------------------------------------
# layouts


@dataclass(frozen=True)
class Uniform:
    p: int

    def at(self, i: int, j: int) -> int:
        return self.p

    def __str__(self) -> str:
        return f"Uniform({self.p})"


@dataclass(frozen=True)
class RowAlternating:
    """Every row is uniform; rows alternate p (even rows) and q (odd rows)."""

    p: int
    q: int

    def at(self, i: int, j: int) -> int:
        return self.p if i % 2 == 0 else self.q

    def __str__(self) -> str:
        return f"RowAlternating({self.p},{self.q})"


@dataclass(frozen=True)
class Checkerboard:
    """Patterns alternate along the row chain: p on even columns, q on odd.

    Because the partial-sum chain runs diagonally, column-chain neighbours
    also alternate, and with cell (i, j) drawn at weight i + j this is a
    checkerboard of the physical array. For an adder it is the alternating
    row of the complementary group.
    """

    p: int
    q: int

    def at(self, i: int, j: int) -> int:
        return self.p if j % 2 == 0 else self.q

    def __str__(self) -> str:
        return f"Checkerboard({self.p},{self.q})"


Layout = Union[Uniform, RowAlternating, Checkerboard]


def layout_grid(layout: Layout, rows: int, cols: int) -> list[list[int]]:
    return [[layout.at(i, j) for j in range(cols)] for i in range(rows)]


def chain_violations(table: PropagationTable, layout: Layout, n: int, loopback: bool = True) -> list[str]:
    """Every internal chain edge whose upstream output differs from the downstream input."""
    bad = []
    if table.cell == "fa":
        for j in range(1, n):
            up, down = table[layout.at(0, j - 1)], table[layout.at(0, j)]
            if up.cout != down.cin:
                bad.append(f"carry ({j - 1})->({j})")
        return bad
    for i in range(n):
        for j in range(n):
            cell = table[layout.at(i, j)]
            if j > 0 and table[layout.at(i, j - 1)].cout != cell.cin:
                bad.append(f"carry ({i},{j - 1})->({i},{j})")
            if i == 0:
                continue
            if j < n - 1:
                src = table[layout.at(i - 1, j + 1)].pout
                edge = f"sum ({i - 1},{j + 1})->({i},{j})"
            elif loopback:
                src = table[layout.at(i - 1, 0)].pout
                edge = f"loopback ({i - 1},0)->({i},{j})"
            else:
                src = table[layout.at(i - 1, n - 1)].cout
                edge = f"carry ({i - 1},{n - 1})->({i},{j})"
            if src != cell.pin:
                bad.append(edge)
    return bad


def verify_closure(table: PropagationTable, layout: Layout, n: int = 4, loopback: bool = True) -> bool:
    """True iff every internal chain edge of the layout is consistent."""
    return not chain_violations(table, layout, n, loopback)


# ---------------------------------------------------------------------------
# realization on primary inputs


def realize_rca(layout: Layout, n: int, label: str = "") -> TestVector:
    bad = chain_violations(FA_TABLE, layout, n)
    if bad:
        raise UnrealizableLayout(f"{layout} is not closed: {bad[0]}")
    a = b = 0
    for j in range(n):
        pat = FA_TABLE[layout.at(0, j)]
        a |= pat.a << j
        b |= pat.b << j
    return TestVector({"A": a, "B": b, "Cin": FA_TABLE[layout.at(0, 0)].cin}, label or str(layout))


def realize_mult(layout: Layout, n: int, label: str = "") -> TestVector:
    """Primary inputs (test_mode = 1) that put every cell of the DFT multiplier on its target pattern.

    X[j] & Y[i] must reproduce the target XY grid, which is possible only
    when the XY = 1 cells form a full rectangle. All-zero XY is realized with
    X all ones and Y all zeros so the AND gates' X pins stay sensitized.
    """
    if n % 2:
        raise UnrealizableLayout("pair-tiling requires even width")
    bad = chain_violations(MULT_TABLE, layout, n)
    if bad:
        raise UnrealizableLayout(f"{layout} is not closed: {bad[0]}")
    grid = [[MULT_TABLE[layout.at(i, j)] for j in range(n)] for i in range(n)]
    rows = [i for i in range(n) if any(c.xy for c in grid[i])]
    cols = [j for j in range(n) if any(grid[i][j].xy for i in range(n))]
    if not rows:
        x, y = (1 << n) - 1, 0
    else:
        x = sum(1 << j for j in cols)
        y = sum(1 << i for i in rows)
    for i in range(n):
        for j in range(n):
            got = ((x >> j) & 1) & ((y >> i) & 1)
            if got != grid[i][j].xy:
                raise UnrealizableLayout(
                    f"{layout}: cell ({i},{j}) needs XY={grid[i][j].xy} but X/Y can only give {got}"
                )
    cb = sum(grid[i][0].cin << i for i in range(n))
    ptop = sum(grid[0][j].pin << j for j in range(n))
    return TestVector({"X": x, "Y": y, "P_top": ptop, "Cb": cb, "test_mode": 1}, label or str(layout))


# ---------------------------------------------------------------------------
# suites

RCA_CTEST_LAYOUTS = tuple(Uniform(p) for p in (0, 2, 3, 4, 5, 7)) + (Checkerboard(6, 1), Checkerboard(1, 6))

# Row order: uniform (1,0,0,1); the two totally complementary
# alternations along the row (X interlaced); the two complementary-column
# alternations between rows (Y interlaced).
TABLE2_LAYOUTS = (
    Uniform(1),
    Checkerboard(2, 5),
    Checkerboard(5, 2),
    RowAlternating(4, 3),
    RowAlternating(3, 4),
)

MULT_EXHAUSTIVE_LAYOUTS = (
    Uniform(0),
    Uniform(1),
    Uniform(6),
    Uniform(7),
    RowAlternating(3, 4),
    RowAlternating(4, 3),
    Checkerboard(2, 5),
    Checkerboard(5, 2),
)

TABLE2_PHASE = "even-cell"  # the pattern named first sits on column 0 / row 0


def rca_ctest_vectors(n: int) -> list[TestVector]:
    """Eight vectors that apply all eight FA patterns to every adder cell."""
    if n < 1:
        raise ValueError("adder width must be at least 1")
    return [realize_rca(lay, n, f"ctest{k}:{lay}") for k, lay in enumerate(RCA_CTEST_LAYOUTS)]


def rca_deterministic_layouts(xor_sum: bool = False) -> tuple[Layout, ...]:
    uniforms = (3, 4) if xor_sum else (2, 3, 4)
    return tuple(Uniform(p) for p in uniforms) + (Checkerboard(6, 1), Checkerboard(1, 6))


def rca_deterministic_vectors(n: int, xor_sum: bool = False) -> list[TestVector]:
    """Every cell receives FA patterns {1,2,3,4,6} (or {1,3,4,6} with ``xor_sum``)."""
    if n < 1:
        raise ValueError("adder width must be at least 1")
    return [realize_rca(lay, n, f"det{k}:{lay}") for k, lay in enumerate(rca_deterministic_layouts(xor_sum))]


def _with_responses(vs: list[TestVector], n: int, netlist: Netlist | None) -> list[TestVector]:
    m = netlist if netlist is not None else build_dft_mult(n)
    outs = good_sim_batched(m, vs)
    return [TestVector(v.values, v.label, o) for v, o in zip(vs, outs)]


def _check_even(n: int) -> None:
    if n < 2 or n % 2:
        raise ValueError("pair-tiling requires even width")


def mult_table2_vectors(n: int, netlist: Netlist | None = None) -> list[TestVector]:
    """The five test-mode vectors for the DFT multiplier, with simulated responses."""
    _check_even(n)
    vs = [realize_mult(lay, n, f"t2v{k + 1}:{lay}") for k, lay in enumerate(TABLE2_LAYOUTS)]
    return _with_responses(vs, n, netlist)


def mult_exhaustive_ctest_vectors(n: int, netlist: Netlist | None = None) -> list[TestVector]:
    """Eight test-mode vectors giving every cell all eight (XY, Cin, Pin) patterns."""
    _check_even(n)
    vs = [realize_mult(lay, n, f"ex{k}:{lay}") for k, lay in enumerate(MULT_EXHAUSTIVE_LAYOUTS)]
    return _with_responses(vs, n, netlist)


# ---------------------------------------------------------------------------
# cell-pair view used by the BIST decoder


CellStimulus = tuple[int, int, int, int]  # (X, Y, Cin, Pin)


def pair_stimulus(layout: Layout) -> tuple[CellStimulus, CellStimulus]:
    """(X, Y, Cin, Pin) of cell (0, 0) and of its adjacent cell.

    The adjacent cell is the next one along the direction in which the layout
    alternates: (0, 1) for a checkerboard, (1, 0) for alternating rows.
    """
    v = realize_mult(layout, 2)
    adj = (1, 0) if isinstance(layout, RowAlternating) else (0, 1)

    def cell(i, j):
        pat = MULT_TABLE[layout.at(i, j)]
        return ((v["X"] >> j) & 1, (v["Y"] >> i) & 1, pat.cin, pat.pin)

    return cell(0, 0), cell(*adj)


def expand_pair(cell: CellStimulus, adjacent: CellStimulus, n: int, label: str = "") -> TestVector:
    """Tile a two-cell stimulus over the n x n array.

    If X differs between the two cells they are neighbours along a row and
    the stimulus repeats with period two in j; if Y differs they are
    neighbours between rows and it repeats in i; otherwise it is uniform.
    """
    _check_even(n)
    cx, cy, cc, cp = cell
    ax, ay, ac, ap = adjacent
    ones = (1 << n) - 1
    even = sum(1 << k for k in range(0, n, 2))
    odd = ones ^ even

    def interlace(first, second):
        return (even if first else 0) | (odd if second else 0)

    if cx != ax and cy == ay:
        x = interlace(cx, ax)
        y = ones if cy else 0
        cb = ones if cc else 0
        ptop = interlace(cp, ap)
    elif cy != ay and cx == ax:
        x = ones if cx else 0
        y = interlace(cy, ay)
        cb = interlace(cc, ac)
        ptop = ones if cp else 0
    elif cell == adjacent:
        x, y = (ones if cx else 0), (ones if cy else 0)
        cb, ptop = (ones if cc else 0), (ones if cp else 0)
    else:
        raise UnrealizableLayout(f"cell pair {cell}/{adjacent} has no tiling")
    return TestVector({"X": x, "Y": y, "P_top": ptop, "Cb": cb, "test_mode": 1}, label)


# ---------------------------------------------------------------------------
# text rendering


def explain(layouts: Sequence[Layout], n: int, cell: str = "mult") -> str:
    """Per-cell pattern index grids, one block per vector.

    Columns are printed most significant first (j = n-1 on the left), as the
    array is usually drawn.
    """
    table = MULT_TABLE if cell == "mult" else FA_TABLE
    rows = n if cell == "mult" else 1
    blocks = []
    for k, lay in enumerate(layouts):
        closed = "closed" if verify_closure(table, lay, n) else "NOT closed"
        lines = [f"vector {k}: {lay} ({closed})"]
        for i in range(rows):
            lines.append("  " + " ".join(str(lay.at(i, j)) for j in reversed(range(n))))
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"
