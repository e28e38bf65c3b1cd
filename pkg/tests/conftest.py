import itertools

import pytest

from arraydft.netlist import Gate, GateKind, Netlist, Port
from arraydft.sim import TestVector


def single_gate(kind: GateKind) -> Netlist:
    """One gate wired straight to ports in0.., out."""
    k = kind.arity
    ports = [Port(f"in{i}", "in", (i,)) for i in range(k)] + [Port("out", "out", (k,))]
    return Netlist(f"one_{kind.value}", tuple(ports), (Gate(0, kind, tuple(range(k)), k),), k + 1)


def all_vectors(m: Netlist, **fixed):
    free = [p for p in m.inputs if p.name not in fixed]
    for combo in itertools.product(*(range(1 << p.width) for p in free)):
        vals = dict(zip((p.name for p in free), combo))
        vals.update(fixed)
        yield TestVector(vals)


@pytest.fixture(scope="session")
def dft4():
    from arraydft.netlist import build_dft_mult

    return build_dft_mult(4)
