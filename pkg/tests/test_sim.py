import os
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from arraydft.ctest_tpg import mult_exhaustive_ctest_vectors, mult_table2_vectors, rca_ctest_vectors
from arraydft.faultmodel import collapsed_faults, enumerate_faults, parse_fault, pin_fault, port_fault
from arraydft.netlist import build_array_mult, build_dft_mult, build_fa, build_rca
from arraydft.sim import (
    CSV_FIELDS,
    SimulationError,
    TestVector,
    adapt_vector,
    coverage,
    default_workers,
    fault_sim,
    faulty_outputs_batched,
    faulty_outputs_many,
    faulty_sim,
    find_redundant,
    format_vectors,
    good_sim,
    good_sim_batched,
    output_words,
    parse_vectors,
    report_csv,
    report_json,
    structurally_redundant,
)


def fa(a, b, c):
    return TestVector({"A": a, "B": b, "Cin": c})


def test_fa_examples():
    m = build_fa()
    assert good_sim(m, fa(1, 1, 0)) == {"S": 0, "Cout": 1}
    assert good_sim(m, fa(0, 0, 1)) == {"S": 1, "Cout": 0}


def test_rca8_overflow():
    out = good_sim(build_rca(8), TestVector({"A": 0xFF, "B": 0x01, "Cin": 0}))
    assert out == {"S": 0, "Cout": 1}


def test_missing_or_oversized_input():
    m = build_fa()
    with pytest.raises(SimulationError):
        good_sim(m, TestVector({"A": 1, "B": 0}))
    with pytest.raises(SimulationError):
        good_sim(m, TestVector({"A": 2, "B": 0, "Cin": 0}))


def test_empty_vector_list_gives_empty_matrix():
    m = build_fa()
    fl = collapsed_faults(m, "all")
    mat = fault_sim(m, fl, [])
    assert mat.shape == (len(fl), 0)
    assert coverage(mat, fl).detected == 0


def test_sum_output_sa0_detected():
    m = build_fa()
    sum_xor = next(g.id for g in m.gates if g.cell[2] == "xor2")
    from arraydft.faultmodel import out_fault

    mat = fault_sim(m, [out_fault(sum_xor, 0)], [fa(0, 0, 1)])
    assert mat[0, 0]


def test_batched_matches_good_sim():
    m = build_dft_mult(4)
    rng = random.Random(1)
    vs = [TestVector({p.name: rng.getrandbits(p.width) for p in m.inputs}) for _ in range(150)]
    assert good_sim_batched(m, vs) == [good_sim(m, v) for v in vs]
    names, words = output_words(m, vs)
    assert len(names) == 8 and words.shape == (8, 3)


SUITES = [
    ("rca6-ctest", lambda: build_rca(6), lambda: rca_ctest_vectors(6)),
    ("dft4-table2", lambda: build_dft_mult(4), lambda: mult_table2_vectors(4)),
    ("dft4-exh", lambda: build_dft_mult(4), lambda: mult_exhaustive_ctest_vectors(4)),
    ("dft6-table2", lambda: build_dft_mult(6), lambda: mult_table2_vectors(6)),
]


@pytest.mark.parametrize("name,build,suite", SUITES, ids=[s[0] for s in SUITES])
@pytest.mark.parametrize("scope", ["core", "all"])
def test_serial_and_batched_identical(name, build, suite, scope):
    m = build()
    fl = collapsed_faults(m, scope)
    vs = suite()
    serial = fault_sim(m, fl, vs, mode="serial")
    assert np.array_equal(serial, fault_sim(m, fl, vs, engine="ffr"))
    assert np.array_equal(serial, fault_sim(m, fl, vs, engine="direct"))
    assert np.array_equal(serial, fault_sim(m, fl, vs, workers=3))


def test_engines_agree_on_many_vectors():
    m = build_dft_mult(8)
    fl = collapsed_faults(m, "all")
    rng = random.Random(5)
    vs = [TestVector({p.name: rng.getrandbits(p.width) for p in m.inputs}) for _ in range(200)]
    assert np.array_equal(fault_sim(m, fl, vs, engine="ffr"), fault_sim(m, fl, vs, engine="direct"))


def test_worker_env(monkeypatch):
    monkeypatch.setenv("ARRAYDFT_WORKERS", "3")
    assert default_workers() == 3
    monkeypatch.setenv("ARRAYDFT_WORKERS", "0")
    assert default_workers() == 1


def test_faulty_outputs_agree_with_serial():
    m = build_dft_mult(4)
    vs = mult_table2_vectors(4)
    faults = list(collapsed_faults(m, "all"))[::7]
    many = faulty_outputs_many(m, faults, vs, chunk=5)
    for f, outs in zip(faults, many):
        assert outs == [faulty_sim(m, v, f) for v in vs]
        assert outs == faulty_outputs_batched(m, f, vs)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 2**16 - 1), min_size=1, max_size=12), st.integers(0, 2**16 - 1))
def test_adding_vectors_never_loses_detections(seeds, extra):
    m = build_dft_mult(4)
    fl = collapsed_faults(m, "all")

    def vec(s):
        r = random.Random(s)
        return TestVector({p.name: r.getrandbits(p.width) for p in m.inputs})

    vs = [vec(s) for s in seeds]
    before = fault_sim(m, fl, vs).any(axis=1)
    after = fault_sim(m, fl, vs + [vec(extra)]).any(axis=1)
    assert not (before & ~after).any()


def test_coverage_arithmetic():
    from arraydft.faultmodel import out_fault

    faults = [out_fault(k, 0) for k in range(100)]
    mat = np.ones((100, 2), bool)
    assert coverage(mat, faults).coverage == 100.0
    mat[17] = False
    rep = coverage(mat, faults)
    assert rep.coverage == pytest.approx(99.0)
    assert rep.undetected == [faults[17]]
    rep = coverage(mat, faults, redundant=[faults[17]])
    assert rep.coverage == 100.0 and rep.redundant == 1
    assert rep.first_detections == [99, 0]


def test_nodft_multiplier_is_not_fully_tested():
    m = build_array_mult(4)
    fl = collapsed_faults(m)
    vs = [adapt_vector(m, v) for v in mult_table2_vectors(4)]
    rep = coverage(fault_sim(m, fl, vs), fl, find_redundant(m, fl))
    assert rep.redundant == 0
    assert rep.coverage < 100.0 and rep.undetected


def test_redundancy_methods_agree(dft4):
    for scope in ("core", "all"):
        fl = collapsed_faults(dft4, scope)
        ex = find_redundant(dft4, fl, method="exhaustive")
        assert ex == find_redundant(dft4, fl, method="structural")
        assert len(ex) == {"core": 24, "all": 28}[scope]


def test_redundant_faults_sit_on_left_border_carry(dft4):
    red = structurally_redundant(dft4, collapsed_faults(dft4), {"test_mode": 1})
    cells = {dft4.gates[f.gate].cell[:2] for f in red if f.kind != "port"}
    assert cells == {(i, 3) for i in range(3)}


def test_table2_covers_dft4_core(dft4):
    fl = collapsed_faults(dft4)
    mat = fault_sim(dft4, fl, mult_table2_vectors(4))
    red = find_redundant(dft4, fl)
    assert all(mat[k].any() for k, f in enumerate(fl) if f not in red)


def test_vector_file_round_trip(dft4):
    vs = mult_table2_vectors(4)
    text = format_vectors(dft4, vs, "suite=table2-5\nn=4")
    assert text.startswith("# suite=table2-5\n# n=4\n")
    back = parse_vectors(text, dft4)
    assert [v.values for v in back] == [v.values for v in vs]
    assert [v.label for v in back] == [v.label for v in vs]
    assert "X=1111 Y=0000" in text.splitlines()[2]


@pytest.mark.parametrize("line", ["X=10a1", "X=101", "nonsense"])
def test_vector_file_rejects(dft4, line):
    with pytest.raises(SimulationError):
        parse_vectors(line + " Y=0000 P_top=0000 Cb=0000 test_mode=1", dft4)


def test_reports(dft4):
    fl = collapsed_faults(dft4)
    rep = coverage(fault_sim(dft4, fl, mult_table2_vectors(4)), fl, find_redundant(dft4, fl))
    import json

    doc = json.loads(report_json(rep, {"circuit": dft4.name}))
    assert doc["coverage_pct"] == 100.0 and doc["undetected"] == []
    assert doc["faults_total"] == 422 and doc["redundant"] == 24
    csv_text = report_csv(rep, "dft-mult", 4, "table2-5", 1.5)
    header, row = csv_text.splitlines()
    assert header.split(",") == CSV_FIELDS
    assert row.startswith("dft-mult,4,table2-5,5,422,24,398,100.0000,")


def test_fault_must_exist(dft4):
    with pytest.raises(ValueError):
        fault_sim(dft4, [pin_fault(10_000, 0, 1)], mult_table2_vectors(4))
    with pytest.raises(ValueError):
        fault_sim(dft4, [port_fault("Z", 0, 1)], mult_table2_vectors(4))


def test_fault_list_must_match_netlist():
    fl = enumerate_faults(build_dft_mult(4))
    with pytest.raises(SimulationError):
        fault_sim(build_dft_mult(4), fl, mult_table2_vectors(4))


def test_parse_fault_used_for_injection(dft4):
    f = parse_fault("gate:12:in0:sa1")
    v = mult_table2_vectors(4)[1]
    assert faulty_sim(dft4, v, f) != good_sim(dft4, v)
