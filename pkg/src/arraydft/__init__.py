"""Netlists, stuck-at fault simulation, C-test generation and BIST for array multipliers."""

from .bist import BistSession, DecoderRom, build_decoder_rom, run_bist_session, run_bist_sweep
from .ctest_tpg import (
    Checkerboard,
    RowAlternating,
    Uniform,
    mult_exhaustive_ctest_vectors,
    mult_table2_vectors,
    rca_ctest_vectors,
    rca_deterministic_vectors,
    verify_closure,
)
from .faultmodel import Fault, FaultList, collapse_equivalent, collapsed_faults, enumerate_faults, parse_fault
from .netlist import (
    Netlist,
    apply_dft_transform,
    build_array_mult,
    build_dft_mult,
    build_fa,
    build_mult_cell,
    build_rca,
    export_netlist,
    import_netlist,
)
from .sim import TestVector, coverage, fault_sim, find_redundant, good_sim

__version__ = "0.1.0"
