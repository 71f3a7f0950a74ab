"""Table layout and production wiring shared by the inside and outside passes.

The dynamic program stores every four-index table in one block indexed by a
table id.  Chain-side states encode how a unit's strand-side is charged by its
enclosing loop and whether a bond has been exposed on that side:

    ``E``  top level - no charges;
    ``M``  inside a multiloop - branch/unpaired alpha-charges, bonds forbidden;
    ``B0`` inside a kissing loop, beta-charges, no bond exposed yet;
    ``B1`` inside a kissing loop, at least one bond exposed.

A closing arc later admits a chain only when the flags are consistent: a
multiloop closure requires M-sides (no bonds), a kissing closure requires B1
(at least one exposed bond).  Hybrid bookkeeping rides on the chain tables as a
trailing-bond state: NONE (last unit is not a lone bond), PENDING (trailing
bond, its run not yet charged), ACTIVE (trailing bond inside a charged run).
"""

from __future__ import annotations

import numpy as np

# --- side states -------------------------------------------------------------

SIDE_E, SIDE_M, SIDE_B0, SIDE_B1 = 0, 1, 2, 3
N_SIDE = 4

CLASS_E, CLASS_M, CLASS_B = 0, 1, 2
SIDE_CLASS = np.array([CLASS_E, CLASS_M, CLASS_B, CLASS_B], dtype=np.int64)

RHO_NONE, RHO_PENDING, RHO_ACTIVE = 0, 1, 2

# --- four-index table ids ----------------------------------------------------

TRI_E, TRI_M, TRI_K, TRI_F = 0, 1, 2, 3      # R-spanning tight, S-side context
TRA_E, TRA_M, TRA_K, TRA_F = 4, 5, 6, 7      # S-spanning tight, R-side context
TSQ = 8                                      # both-spanning tight

CH1_BASE = 9                                 # single non-bond unit, both-flush
GU_BASE = 25                                 # gap-prefixed unit, right-flush
CH2N_BASE = 41                               # chains of >= 2 units, trailing non-bond
CH2P_BASE = 57                               # chains, trailing bond, run PENDING
CH2A_BASE = 61                               # chains, trailing bond, run ACTIVE
N_T4 = 65

# Map a side state to the tight-table id that self-charges that side.
TRI_FOR_SIDE = np.array([TRI_E, TRI_M, TRI_F, TRI_K], dtype=np.int64)
TRA_FOR_SIDE = np.array([TRA_E, TRA_M, TRA_F, TRA_K], dtype=np.int64)

# Bond-state index for trailing-bond chain tables: side must be E or B1.
BOND_SIDE = {SIDE_E: 0, SIDE_B1: 1}


def ch1_id(cr: int, cs: int) -> int:
    return CH1_BASE + 4 * cr + cs


def gu_id(cr: int, cs: int) -> int:
    return GU_BASE + 4 * cr + cs


def ch2n_id(cr: int, cs: int) -> int:
    return CH2N_BASE + 4 * cr + cs


def ch2p_id(cr: int, cs: int) -> int:
    return CH2P_BASE + 2 * BOND_SIDE[cr] + BOND_SIDE[cs]


def ch2a_id(cr: int, cs: int) -> int:
    return CH2A_BASE + 2 * BOND_SIDE[cr] + BOND_SIDE[cs]


# --- secondary (two-index) table ids ----------------------------------------

QB, QE, QM, QM1, QK, QS, QSM, QSK = 0, 1, 2, 3, 4, 5, 6, 7
N_S2 = 8

# Per side class: the any-segment, branch-segment and bare-run weights.
WSEG_FOR_CLASS = np.array([QS, QSM, QSK], dtype=np.int64)
ASEG_FOR_CLASS = np.array([QE, QM, QK], dtype=np.int64)

# --- lookup-table ids (one row each in the LUT block) ------------------------

LUT_WHA, LUT_WIP, LUT_GEXT, LUT_UPM, LUT_UPB, LUT_UP1 = 0, 1, 2, 3, 4, 5
N_LUT = 6

ULUT_FOR_CLASS = np.array([LUT_UP1, LUT_UPM, LUT_UPB], dtype=np.int64)

# --- single-unit (CH1) build rows --------------------------------------------
# Rows (cr, cs, tight_tid, bf_r_state, bf_s_state): the unit table plus which
# side states pay a branch charge.  A side paying the charge of its own closing
# arc is listed as -1 (no inline factor; the table self-charges that strand).

_ch1_rows = []
for cr in range(N_SIDE):
    for cs in range(N_SIDE):
        if cr != SIDE_B1:  # R-spanning unit exposes only its arc on R
            _ch1_rows.append((cr, cs, int(TRI_FOR_SIDE[cs]), cr, -1))
        if cs != SIDE_B1:  # S-spanning unit exposes only its arc on S
            _ch1_rows.append((cr, cs, int(TRA_FOR_SIDE[cr]), -1, cs))
        if cr != SIDE_B1 and cs != SIDE_B1:  # both-spanning unit
            _ch1_rows.append((cr, cs, TSQ, cr, cs))
CH1_ROWS = np.array(_ch1_rows, dtype=np.int64)

# --- chain attach combinations ----------------------------------------------
# A unit with side flag g extends a prefix with side state c when both carry
# the same charge class; B-flags accumulate by OR.

_side_joins = {
    (SIDE_E, SIDE_E): SIDE_E,
    (SIDE_M, SIDE_M): SIDE_M,
    (SIDE_B0, SIDE_B0): SIDE_B0,
    (SIDE_B0, SIDE_B1): SIDE_B1,
    (SIDE_B1, SIDE_B0): SIDE_B1,
    (SIDE_B1, SIDE_B1): SIDE_B1,
}

_attach = []
for (pr, gr), outr in _side_joins.items():
    for (ps, gs), outs in _side_joins.items():
        _attach.append((pr, ps, gr, gs, outr, outs))
ATTACH_ROWS = np.array(_attach, dtype=np.int64)

# Bond attachment: allowed on E/B sides only; the result side flags the bond.
_bond_out = {SIDE_E: SIDE_E, SIDE_B0: SIDE_B1, SIDE_B1: SIDE_B1}
BOND_ROWS = np.array(
    [(cr, cs, outr, outs)
     for cr, outr in _bond_out.items()
     for cs, outs in _bond_out.items()],
    dtype=np.int64,
)


def all_t4_ids() -> list[int]:
    return list(range(N_T4))
