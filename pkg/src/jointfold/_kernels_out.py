"""Scatter kernels for the outside pass over filled inside tables.

Every inside production ``result += f1 * f2 * ... * fk`` has one scatter block
here: the result cell's accumulated outside multiplier ``o`` adds
``o * (product of the other factors)`` to each table factor's multiplier, and
``o * (full summand)`` to the unpaired-mass range of every bare-run factor.
No division appears anywhere, so cells with inside value zero propagate
exactly zero probability mass.

Traversal is the exact reverse of the fill: the root seeds first, slices run
by decreasing first-strand width, second-strand spans by decreasing width
inside a slice (gapped units, then single-unit sums, then tights), chains are
scattered last in each slice because same-slice tights consume them; the
per-strand layer sweeps top-down once all four-index mass has landed on it.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from . import _schema as S
from ._kernels import (
    BOND_SIDE_OF,
    BOND_TO_S16,
    CO_BB,
    CO_BF0,
    CO_BM,
    CO_SIG0,
    CO_WA1,
    CO_WB1,
)


@njit(cache=True, nogil=True)
def _radd(diff, a, b, v):
    """Add ``v`` to every vertex in ``[a, b]`` of a difference array."""
    if b >= a and v != 0.0:
        diff[a] += v
        diff[b + 1] -= v


@njit(cache=True, nogil=True)
def scatter_secondary(L, theta, sec, osec, pairm, lut, coef, dun):
    """Reverse sweep of the single-strand fill, widest spans first."""
    bM = coef[CO_BM]
    bB = coef[CO_BB]
    wA1 = coef[CO_WA1]
    uM = lut[S.LUT_UPM, 1]
    uB = lut[S.LUT_UPB, 1]
    for w in range(L, 0, -1):
        for i in range(1, L - w + 2):
            j = i + w - 1
            # segment sums delegate to their charged cores
            oqs = osec[S.QS, i, j]
            if oqs != 0.0:
                osec[S.QE, i, j] += oqs
                _radd(dun, i, j, oqs)
            oqsm = osec[S.QSM, i, j]
            if oqsm != 0.0:
                osec[S.QM, i, j] += oqsm
                _radd(dun, i, j, oqsm * lut[S.LUT_UPM, w])
            oqsk = osec[S.QSK, i, j]
            if oqsk != 0.0:
                osec[S.QK, i, j] += oqsk
                _radd(dun, i, j, oqsk * lut[S.LUT_UPB, w])
            # free / multi / kissing run recursions
            oqe = osec[S.QE, i, j]
            oqm = osec[S.QM, i, j]
            oqk = osec[S.QK, i, j]
            oqm1 = osec[S.QM1, i, j]
            if oqe != 0.0:
                osec[S.QE, i + 1, j] += oqe
                _radd(dun, i, i, oqe * sec[S.QE, i + 1, j])
            if oqm != 0.0:
                osec[S.QM, i + 1, j] += oqm * uM
                _radd(dun, i, i, oqm * uM * sec[S.QM, i + 1, j])
            if oqk != 0.0:
                osec[S.QK, i + 1, j] += oqk * uB
                _radd(dun, i, i, oqk * uB * sec[S.QK, i + 1, j])
            for q in range(i + 1, j + 1):
                closed = sec[S.QB, i, q]
                if closed == 0.0:
                    continue
                if oqe != 0.0:
                    osec[S.QB, i, q] += oqe * (1.0 + sec[S.QE, q + 1, j])
                    _radd(dun, q + 1, j, oqe * closed)
                    osec[S.QE, q + 1, j] += oqe * closed
                if oqm != 0.0:
                    osec[S.QB, i, q] += oqm * bM * (lut[S.LUT_UPM, j - q] + sec[S.QM, q + 1, j])
                    _radd(dun, q + 1, j, oqm * bM * closed * lut[S.LUT_UPM, j - q])
                    osec[S.QM, q + 1, j] += oqm * bM * closed
                if oqk != 0.0:
                    osec[S.QB, i, q] += oqk * bB * (lut[S.LUT_UPB, j - q] + sec[S.QK, q + 1, j])
                    _radd(dun, q + 1, j, oqk * bB * closed * lut[S.LUT_UPB, j - q])
                    osec[S.QK, q + 1, j] += oqk * bB * closed
                if oqm1 != 0.0:
                    osec[S.QB, i, q] += oqm1 * bM * lut[S.LUT_UPM, j - q]
                    _radd(dun, q + 1, j, oqm1 * bM * closed * lut[S.LUT_UPM, j - q])
            # closed-arc productions
            oqb = osec[S.QB, i, j]
            if oqb != 0.0 and w >= 2 and pairm[i, j] > 0.0:
                base = oqb * pairm[i, j]
                gap = w - 2
                if gap >= theta:
                    _radd(dun, i + 1, j - 1, base * lut[S.LUT_WHA, gap])
                for p in range(i + 1, j):
                    for q in range(p + 1, j):
                        inner = sec[S.QB, p, q]
                        if inner != 0.0:
                            wip = lut[S.LUT_WIP, (p - i - 1) + (j - q - 1)]
                            osec[S.QB, p, q] += base * wip
                            _radd(dun, i + 1, p - 1, base * wip * inner)
                            _radd(dun, q + 1, j - 1, base * wip * inner)
                for p in range(i + 2, j):
                    left = sec[S.QM, i + 1, p - 1]
                    right = sec[S.QM1, p, j - 1]
                    osec[S.QM, i + 1, p - 1] += base * wA1 * bM * right
                    osec[S.QM1, p, j - 1] += base * wA1 * bM * left


@njit(cache=True, nogil=True)
def seed_root(n, m, t4, o4, secr, secs, osr, oss, px, opx):
    """Distribute the root's unit of outside mass over its productions."""
    osr[S.QS, 1, n] += secs[S.QS, 1, m]
    oss[S.QS, 1, m] += secr[S.QS, 1, n]
    for a in range(1, n + 1):
        for b in range(a, n + 1):
            for c in range(1, m + 1):
                for d in range(c, m + 1):
                    fr1 = secr[S.QS, 1, a - 1]
                    fs1 = secs[S.QS, 1, c - 1]
                    fr2 = secr[S.QS, b + 1, n]
                    fs2 = secs[S.QS, d + 1, m]
                    f = fr1 * fs1 * fr2 * fs2
                    o4[S.CH1_BASE, a, b, c, d] += f
                    o4[S.CH2N_BASE, a, b, c, d] += f
                    o4[S.CH2P_BASE, a, b, c, d] += f
                    o4[S.CH2A_BASE, a, b, c, d] += f
                    inner = (t4[S.CH1_BASE, a, b, c, d]
                             + t4[S.CH2N_BASE, a, b, c, d]
                             + t4[S.CH2P_BASE, a, b, c, d]
                             + t4[S.CH2A_BASE, a, b, c, d])
                    if a == b and c == d:
                        opx[a, c] += f
                        inner += px[a, c]
                    if inner != 0.0:
                        osr[S.QS, 1, a - 1] += fs1 * inner * fr2 * fs2
                        oss[S.QS, 1, c - 1] += fr1 * inner * fr2 * fs2
                        osr[S.QS, b + 1, n] += fr1 * fs1 * inner * fs2
                        oss[S.QS, d + 1, m] += fr1 * fs1 * inner * fr2


@njit(cache=True, nogil=True)
def scatter_slice(i, j, m, t4, o4, secr, secs, osr, oss, pr, ps, px, opx,
                  lut, coef, dur, dus):
    """Reverse of one slice fill: spread multipliers to every summand factor."""
    wA1 = coef[CO_WA1]
    bM = coef[CO_BM]
    wB1 = coef[CO_WB1]
    bB = coef[CO_BB]
    wS0 = coef[CO_SIG0]
    prv = pr[i, j]
    rw = j - i + 1

    # --- gapped units, single-unit sums, tights, by decreasing S-width ------
    for sw in range(m, 0, -1):
        for h in range(1, m - sw + 2):
            l = h + sw - 1

            # gapped units: charged gap segments before a right-flush unit
            for s in range(16):
                if s == 15:
                    continue
                og = o4[S.GU_BASE + s, i, j, h, l]
                if og != 0.0:
                    wr_t = S.WSEG_FOR_CLASS[S.SIDE_CLASS[s >> 2]]
                    ws_t = S.WSEG_FOR_CLASS[S.SIDE_CLASS[s & 3]]
                    for p in range(i, j + 1):
                        wgr = secr[wr_t, i, p - 1]
                        for u in range(h, l + 1):
                            wgs = secs[ws_t, h, u - 1]
                            o4[S.CH1_BASE + s, p, j, u, l] += og * wgr * wgs
                            unit = t4[S.CH1_BASE + s, p, j, u, l]
                            if unit != 0.0:
                                osr[wr_t, i, p - 1] += og * wgs * unit
                                oss[ws_t, h, u - 1] += og * wgr * unit

            # single-unit sums: tights with inline branch charges per context
            for r in range(S.CH1_ROWS.shape[0]):
                oc = o4[S.CH1_BASE + S.CH1_ROWS[r, 0] * 4 + S.CH1_ROWS[r, 1], i, j, h, l]
                if oc != 0.0:
                    fr = S.CH1_ROWS[r, 3]
                    fs = S.CH1_ROWS[r, 4]
                    fR = 1.0 if fr < 0 else coef[CO_BF0 + fr]
                    fS = 1.0 if fs < 0 else coef[CO_BF0 + fs]
                    o4[S.CH1_ROWS[r, 2], i, j, h, l] += oc * fR * fS

            # R-spanning tight: arc (i, j) over a full-S-span core
            if prv > 0.0 and rw >= 3:
                for cs in range(4):
                    tri_t = S.TRI_FOR_SIDE[cs]
                    bsd = BOND_SIDE_OF[cs]
                    ot = o4[tri_t, i, j, h, l]
                    if ot == 0.0:
                        continue
                    base = ot * prv
                    cm = base * wA1 * bM
                    c2 = cm * bM
                    ck = base * wB1 * bB
                    many_t = S.CH2N_BASE + 4 * S.SIDE_M + cs
                    kis_t = S.CH2N_BASE + 4 * S.SIDE_B1 + cs
                    for p in range(i + 1, j):
                        qm_l = secr[S.QM, i + 1, p - 1]
                        up_l = lut[S.LUT_UPM, p - i - 1]
                        qsm_l = secr[S.QSM, i + 1, p - 1]
                        qsk_l = secr[S.QSK, i + 1, p - 1]
                        for q in range(p + 1, j):
                            qsm_r = secr[S.QSM, q + 1, j - 1]
                            qm_r = secr[S.QM, q + 1, j - 1]
                            qsk_r = secr[S.QSK, q + 1, j - 1]
                            core = t4[tri_t, p, q, h, l]
                            wip = lut[S.LUT_WIP, (p - i - 1) + (j - q - 1)]
                            o4[tri_t, p, q, h, l] += base * wip + c2 * (qm_l * qsm_r + up_l * qm_r)
                            if core != 0.0:
                                mass = base * wip * core
                                _radd(dur, i + 1, p - 1, mass)
                                _radd(dur, q + 1, j - 1, mass)
                                osr[S.QM, i + 1, p - 1] += c2 * core * qsm_r
                                osr[S.QSM, q + 1, j - 1] += c2 * core * qm_l
                                _radd(dur, i + 1, p - 1, c2 * core * up_l * qm_r)
                                osr[S.QM, q + 1, j - 1] += c2 * core * up_l
                            many = t4[many_t, p, q, h, l]
                            o4[many_t, p, q, h, l] += cm * qsm_l * qsm_r
                            if many != 0.0:
                                osr[S.QSM, i + 1, p - 1] += cm * qsm_r * many
                                osr[S.QSM, q + 1, j - 1] += cm * qsm_l * many
                            ksum = t4[kis_t, p, q, h, l]
                            o4[kis_t, p, q, h, l] += ck * qsk_l * qsk_r
                            if bsd >= 0:
                                sb = 2 * 1 + bsd
                                o4[S.CH2P_BASE + sb, p, q, h, l] += ck * qsk_l * qsk_r
                                o4[S.CH2A_BASE + sb, p, q, h, l] += ck * qsk_l * qsk_r
                                ksum += t4[S.CH2P_BASE + sb, p, q, h, l] + t4[S.CH2A_BASE + sb, p, q, h, l]
                            if ksum != 0.0:
                                osr[S.QSK, i + 1, p - 1] += ck * qsk_r * ksum
                                osr[S.QSK, q + 1, j - 1] += ck * qsk_l * ksum
                    if l == h and (cs == S.SIDE_E or cs == S.SIDE_B1):
                        for p in range(i + 1, j):
                            pb = px[p, h]
                            if pb != 0.0:
                                ql = secr[S.QSK, i + 1, p - 1]
                                qr = secr[S.QSK, p + 1, j - 1]
                                opx[p, h] += ck * ql * qr
                                osr[S.QSK, i + 1, p - 1] += ck * pb * qr
                                osr[S.QSK, p + 1, j - 1] += ck * pb * ql

            # S-spanning tight: arc (h, l) over a full-R-span core
            psv = ps[h, l]
            if psv > 0.0 and sw >= 3:
                for cr in range(4):
                    tra_t = S.TRA_FOR_SIDE[cr]
                    bsd = BOND_SIDE_OF[cr]
                    ot = o4[tra_t, i, j, h, l]
                    if ot == 0.0:
                        continue
                    base = ot * psv
                    cm = base * wA1 * bM
                    c2 = cm * bM
                    ck = base * wB1 * bB
                    many_t = S.CH2N_BASE + 4 * cr + S.SIDE_M
                    kis_t = S.CH2N_BASE + 4 * cr + S.SIDE_B1
                    for u in range(h + 1, l):
                        qm_l = secs[S.QM, h + 1, u - 1]
                        up_l = lut[S.LUT_UPM, u - h - 1]
                        qsm_l = secs[S.QSM, h + 1, u - 1]
                        qsk_l = secs[S.QSK, h + 1, u - 1]
                        for v in range(u + 1, l):
                            qsm_r = secs[S.QSM, v + 1, l - 1]
                            qm_r = secs[S.QM, v + 1, l - 1]
                            qsk_r = secs[S.QSK, v + 1, l - 1]
                            core = t4[tra_t, i, j, u, v]
                            wip = lut[S.LUT_WIP, (u - h - 1) + (l - v - 1)]
                            o4[tra_t, i, j, u, v] += base * wip + c2 * (qm_l * qsm_r + up_l * qm_r)
                            if core != 0.0:
                                mass = base * wip * core
                                _radd(dus, h + 1, u - 1, mass)
                                _radd(dus, v + 1, l - 1, mass)
                                oss[S.QM, h + 1, u - 1] += c2 * core * qsm_r
                                oss[S.QSM, v + 1, l - 1] += c2 * core * qm_l
                                _radd(dus, h + 1, u - 1, c2 * core * up_l * qm_r)
                                oss[S.QM, v + 1, l - 1] += c2 * core * up_l
                            many = t4[many_t, i, j, u, v]
                            o4[many_t, i, j, u, v] += cm * qsm_l * qsm_r
                            if many != 0.0:
                                oss[S.QSM, h + 1, u - 1] += cm * qsm_r * many
                                oss[S.QSM, v + 1, l - 1] += cm * qsm_l * many
                            ksum = t4[kis_t, i, j, u, v]
                            o4[kis_t, i, j, u, v] += ck * qsk_l * qsk_r
                            if bsd >= 0:
                                sb = 2 * bsd + 1
                                o4[S.CH2P_BASE + sb, i, j, u, v] += ck * qsk_l * qsk_r
                                o4[S.CH2A_BASE + sb, i, j, u, v] += ck * qsk_l * qsk_r
                                ksum += t4[S.CH2P_BASE + sb, i, j, u, v] + t4[S.CH2A_BASE + sb, i, j, u, v]
                            if ksum != 0.0:
                                oss[S.QSK, h + 1, u - 1] += ck * qsk_r * ksum
                                oss[S.QSK, v + 1, l - 1] += ck * qsk_l * ksum
                    if i == j and (cr == S.SIDE_E or cr == S.SIDE_B1):
                        for u in range(h + 1, l):
                            pb = px[i, u]
                            if pb != 0.0:
                                ql = secs[S.QSK, h + 1, u - 1]
                                qr = secs[S.QSK, u + 1, l - 1]
                                opx[i, u] += ck * ql * qr
                                oss[S.QSK, h + 1, u - 1] += ck * pb * qr
                                oss[S.QSK, u + 1, l - 1] += ck * pb * ql

            # both-spanning tight: remove arc (i, j); core keeps the S-arc
            if prv > 0.0 and psv > 0.0 and rw >= 3 and sw >= 3:
                ot = o4[S.TSQ, i, j, h, l]
                if ot != 0.0:
                    base = ot * prv
                    cm = base * wA1 * bM
                    c2 = cm * bM
                    ck = base * wB1 * bB
                    for p in range(i + 1, j):
                        qm_l = secr[S.QM, i + 1, p - 1]
                        up_l = lut[S.LUT_UPM, p - i - 1]
                        qsm_l = secr[S.QSM, i + 1, p - 1]
                        qsk_l = secr[S.QSK, i + 1, p - 1]
                        for q in range(p, j):
                            qsm_r = secr[S.QSM, q + 1, j - 1]
                            qm_r = secr[S.QM, q + 1, j - 1]
                            qsk_r = secr[S.QSK, q + 1, j - 1]
                            core = t4[S.TSQ, p, q, h, l]
                            wip = lut[S.LUT_WIP, (p - i - 1) + (j - q - 1)]
                            o4[S.TSQ, p, q, h, l] += base * wip + c2 * (qm_l * qsm_r + up_l * qm_r)
                            if core != 0.0:
                                mass = base * wip * core
                                _radd(dur, i + 1, p - 1, mass)
                                _radd(dur, q + 1, j - 1, mass)
                                osr[S.QM, i + 1, p - 1] += c2 * core * qsm_r
                                osr[S.QSM, q + 1, j - 1] += c2 * core * qm_l
                                _radd(dur, i + 1, p - 1, c2 * core * up_l * qm_r)
                                osr[S.QM, q + 1, j - 1] += c2 * core * up_l
                            many = t4[S.TRA_M, p, q, h, l]
                            o4[S.TRA_M, p, q, h, l] += cm * qsm_l * qsm_r
                            if many != 0.0:
                                osr[S.QSM, i + 1, p - 1] += cm * qsm_r * many
                                osr[S.QSM, q + 1, j - 1] += cm * qsm_l * many
                            kis = t4[S.TRA_K, p, q, h, l]
                            o4[S.TRA_K, p, q, h, l] += ck * qsk_l * qsk_r
                            if kis != 0.0:
                                osr[S.QSK, i + 1, p - 1] += ck * qsk_r * kis
                                osr[S.QSK, q + 1, j - 1] += ck * qsk_l * kis

    # --- chains, scattered last: same-slice tights consume them -------------
    if rw >= 2:
        npre = j - i
        pre_all = np.zeros((16, npre, m + 2, m + 2))
        pre_n = np.zeros((16, npre, m + 2, m + 2))
        pre_p = np.zeros((4, npre, m + 2, m + 2))
        pre_a = np.zeros((4, npre, m + 2, m + 2))
        for s in range(16):
            for i1 in range(i, j):
                for c in range(1, m + 1):
                    for h1 in range(c, m + 1):
                        v = t4[S.CH1_BASE + s, i, i1, c, h1] + t4[S.CH2N_BASE + s, i, i1, c, h1]
                        if v != 0.0:
                            pre_n[s, i1 - i, c, h1] = v
                            pre_all[s, i1 - i, c, h1] = v
        for sb in range(4):
            s = BOND_TO_S16[sb]
            for i1 in range(i, j):
                for c in range(1, m + 1):
                    for h1 in range(c, m + 1):
                        vp = t4[S.CH2P_BASE + sb, i, i1, c, h1]
                        va = t4[S.CH2A_BASE + sb, i, i1, c, h1]
                        pre_p[sb, i1 - i, c, h1] = vp
                        pre_a[sb, i1 - i, c, h1] = va
                        if vp != 0.0 or va != 0.0:
                            pre_all[s, i1 - i, c, h1] += vp + va
        o_all = np.zeros((16, npre, m + 2, m + 2))
        o_n = np.zeros((16, npre, m + 2, m + 2))
        o_p = np.zeros((4, npre, m + 2, m + 2))
        o_a = np.zeros((4, npre, m + 2, m + 2))

        for c in range(1, m + 1):
            for d in range(c + 1, m + 1):
                # non-bond unit after any prefix
                for r in range(S.ATTACH_ROWS.shape[0]):
                    prr = S.ATTACH_ROWS[r, 0]
                    prs = S.ATTACH_ROWS[r, 1]
                    gur = S.ATTACH_ROWS[r, 2]
                    gus = S.ATTACH_ROWS[r, 3]
                    outr = S.ATTACH_ROWS[r, 4]
                    outs = S.ATTACH_ROWS[r, 5]
                    oc = o4[S.CH2N_BASE + outr * 4 + outs, i, j, c, d]
                    if oc == 0.0:
                        continue
                    spre = prr * 4 + prs
                    gu_t = S.GU_BASE + gur * 4 + gus
                    for i1 in range(i, j):
                        for h1 in range(c, d):
                            gv = t4[gu_t, i1 + 1, j, h1 + 1, d]
                            if gv != 0.0:
                                o_all[spre, i1 - i, c, h1] += oc * gv
                            pv = pre_all[spre, i1 - i, c, h1]
                            if pv != 0.0:
                                o4[gu_t, i1 + 1, j, h1 + 1, d] += oc * pv
                    if (prr == 0 or prr == 3) and (prs == 0 or prs == 3):
                        gv = t4[gu_t, i + 1, j, c + 1, d]
                        if gv != 0.0:
                            opx[i, c] += oc * gv
                        if px[i, c] != 0.0:
                            o4[gu_t, i + 1, j, c + 1, d] += oc * px[i, c]
                bond = px[j, d]
                if bond != 0.0:
                    # bond at (j, d) with at least one non-bare gap: run restarts
                    for r in range(S.BOND_ROWS.shape[0]):
                        cr = S.BOND_ROWS[r, 0]
                        cs = S.BOND_ROWS[r, 1]
                        outr = S.BOND_ROWS[r, 2]
                        outs = S.BOND_ROWS[r, 3]
                        oc = o4[S.CH2P_BASE + 2 * BOND_SIDE_OF[outr] + BOND_SIDE_OF[outs], i, j, c, d]
                        if oc == 0.0:
                            continue
                        clr = S.SIDE_CLASS[cr]
                        cls = S.SIDE_CLASS[cs]
                        wr_t = S.WSEG_FOR_CLASS[clr]
                        ws_t = S.WSEG_FOR_CLASS[cls]
                        ar_t = S.ASEG_FOR_CLASS[clr]
                        as_t = S.ASEG_FOR_CLASS[cls]
                        ur_l = S.ULUT_FOR_CLASS[clr]
                        spre = cr * 4 + cs
                        br = BOND_SIDE_OF[cr]
                        bs = BOND_SIDE_OF[cs]
                        ob = oc * bond
                        acc = 0.0
                        for i1 in range(i, j):
                            wgr = secr[wr_t, i1 + 1, j - 1]
                            agr = secr[ar_t, i1 + 1, j - 1]
                            ugr = lut[ur_l, j - i1 - 1]
                            for h1 in range(c, d):
                                wgs = secs[ws_t, h1 + 1, d - 1]
                                o_n[spre, i1 - i, c, h1] += ob * wgr * wgs
                                pn = pre_n[spre, i1 - i, c, h1]
                                if pn != 0.0:
                                    acc += pn * wgr * wgs
                                    osr[wr_t, i1 + 1, j - 1] += ob * pn * wgs
                                    oss[ws_t, h1 + 1, d - 1] += ob * pn * wgr
                                if br >= 0 and bs >= 0:
                                    asg = secs[as_t, h1 + 1, d - 1]
                                    fac = agr * wgs + ugr * asg
                                    o_p[2 * br + bs, i1 - i, c, h1] += ob * fac
                                    o_a[2 * br + bs, i1 - i, c, h1] += ob * fac
                                    pb2 = (pre_p[2 * br + bs, i1 - i, c, h1]
                                           + pre_a[2 * br + bs, i1 - i, c, h1])
                                    if pb2 != 0.0:
                                        acc += pb2 * fac
                                        osr[ar_t, i1 + 1, j - 1] += ob * pb2 * wgs
                                        oss[ws_t, h1 + 1, d - 1] += ob * pb2 * agr
                                        _radd(dur, i1 + 1, j - 1, ob * pb2 * ugr * asg)
                                        oss[as_t, h1 + 1, d - 1] += ob * pb2 * ugr
                        if br >= 0 and bs >= 0:
                            lone = px[i, c]
                            agr0 = secr[ar_t, i + 1, j - 1]
                            ugr0 = lut[ur_l, j - i - 1]
                            wgs0 = secs[ws_t, c + 1, d - 1]
                            asg0 = secs[as_t, c + 1, d - 1]
                            opx[i, c] += ob * (agr0 * wgs0 + ugr0 * asg0)
                            if lone != 0.0:
                                acc += lone * (agr0 * wgs0 + ugr0 * asg0)
                                osr[ar_t, i + 1, j - 1] += ob * lone * wgs0
                                oss[ws_t, c + 1, d - 1] += ob * lone * agr0
                                _radd(dur, i + 1, j - 1, ob * lone * ugr0 * asg0)
                                oss[as_t, c + 1, d - 1] += ob * lone * ugr0
                        if acc != 0.0:
                            opx[j, d] += oc * acc
                    # bond at (j, d) linked across bare gaps: run continues
                    for sb in range(4):
                        oc = o4[S.CH2A_BASE + sb, i, j, c, d]
                        if oc == 0.0:
                            continue
                        ob = oc * bond
                        acc = 0.0
                        for i1 in range(i, j):
                            g1 = j - i1 - 1
                            for h1 in range(c, d):
                                ge = lut[S.LUT_GEXT, g1 + (d - h1 - 1)]
                                o_p[sb, i1 - i, c, h1] += ob * wS0 * ge
                                o_a[sb, i1 - i, c, h1] += ob * ge
                                pv = pre_p[sb, i1 - i, c, h1] * wS0 + pre_a[sb, i1 - i, c, h1]
                                if pv != 0.0:
                                    acc += pv * ge
                                    mass = ob * pv * ge
                                    _radd(dur, i1 + 1, j - 1, mass)
                                    _radd(dus, h1 + 1, d - 1, mass)
                        lone = px[i, c]
                        ge0 = lut[S.LUT_GEXT, (j - i - 1) + (d - c - 1)]
                        opx[i, c] += ob * wS0 * ge0
                        if lone != 0.0:
                            acc += lone * wS0 * ge0
                            mass = ob * lone * wS0 * ge0
                            _radd(dur, i + 1, j - 1, mass)
                            _radd(dus, c + 1, d - 1, mass)
                        if acc != 0.0:
                            opx[j, d] += oc * acc

        # hand accumulated prefix mass to the underlying chain tables
        for s in range(16):
            for k in range(npre):
                i1 = i + k
                for c in range(1, m + 1):
                    for h1 in range(c, m + 1):
                        v = o_all[s, k, c, h1] + o_n[s, k, c, h1]
                        if v != 0.0:
                            o4[S.CH1_BASE + s, i, i1, c, h1] += v
                            o4[S.CH2N_BASE + s, i, i1, c, h1] += v
        for sb in range(4):
            s = BOND_TO_S16[sb]
            for k in range(npre):
                i1 = i + k
                for c in range(1, m + 1):
                    for h1 in range(c, m + 1):
                        va = o_all[s, k, c, h1]
                        vp = va + o_p[sb, k, c, h1]
                        if vp != 0.0:
                            o4[S.CH2P_BASE + sb, i, i1, c, h1] += vp
                        vaa = va + o_a[sb, k, c, h1]
                        if vaa != 0.0:
                            o4[S.CH2A_BASE + sb, i, i1, c, h1] += vaa
