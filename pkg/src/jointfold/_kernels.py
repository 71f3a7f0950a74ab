"""Compiled fill kernels for the joint inside pass.

Every kernel is a plain-loop ``@njit`` function over preallocated arrays; the
pure-Python twins (``.py_func``) run the identical code without compilation and
back the cross-checks in the test suite.  Table ids, side states and production
wiring come from ``_schema``; model-dependent constants arrive in a small
``coef`` vector and in the lookup block ``lut``.

Dependency discipline: a slice (fixed sub-interval of the first strand) reads
only cells of strictly narrower first-strand intervals, plus cells of its own
slice written earlier in the in-slice order (chains, then per S-width: tights,
single-unit sums, gapped units).  Slices of equal width never read each other,
which is what makes the width-synchronized thread fan-out deterministic.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from . import _schema as S

# coef vector layout
CO_WA1, CO_BM, CO_WB1, CO_BB, CO_SIG0, CO_BF0 = 0, 1, 2, 3, 4, 5
N_COEF = 9

# bond-state pair (2*r + s over {E->0, B1->1}) -> full 16-state slot
BOND_TO_S16 = np.array([0, 3, 12, 15], dtype=np.int64)
# side state -> bond-state index, -1 where a trailing bond is impossible
BOND_SIDE_OF = np.array([0, -1, -1, 1], dtype=np.int64)


@njit(cache=True, nogil=True)
def fill_secondary(L, theta, sec, pairm, lut, coef):
    """Single-strand tables: closed arcs plus charged segment sums."""
    bM = coef[CO_BM]
    wA1 = coef[CO_WA1]
    bB = coef[CO_BB]
    uM = lut[S.LUT_UPM, 1]
    uB = lut[S.LUT_UPB, 1]
    for x in range(1, L + 2):
        sec[S.QS, x, x - 1] = 1.0
        sec[S.QSM, x, x - 1] = 1.0
        sec[S.QSK, x, x - 1] = 1.0
    for w in range(1, L + 1):
        for i in range(1, L - w + 2):
            j = i + w - 1
            if w >= 2 and pairm[i, j] > 0.0:
                acc = 0.0
                gap = w - 2
                if gap >= theta:
                    acc += lut[S.LUT_WHA, gap]
                for p in range(i + 1, j):
                    for q in range(p + 1, j):
                        inner = sec[S.QB, p, q]
                        if inner != 0.0:
                            acc += lut[S.LUT_WIP, (p - i - 1) + (j - q - 1)] * inner
                many = 0.0
                for p in range(i + 2, j):
                    many += sec[S.QM, i + 1, p - 1] * sec[S.QM1, p, j - 1]
                acc += wA1 * bM * many
                sec[S.QB, i, j] = pairm[i, j] * acc
            first = 0.0
            for q in range(i + 1, j + 1):
                first += sec[S.QB, i, q] * lut[S.LUT_UPM, j - q]
            sec[S.QM1, i, j] = bM * first
            am = uM * sec[S.QM, i + 1, j]
            ae = sec[S.QE, i + 1, j]
            ak = uB * sec[S.QK, i + 1, j]
            for q in range(i + 1, j + 1):
                closed = sec[S.QB, i, q]
                if closed != 0.0:
                    am += bM * closed * (lut[S.LUT_UPM, j - q] + sec[S.QM, q + 1, j])
                    ae += closed * (1.0 + sec[S.QE, q + 1, j])
                    ak += bB * closed * (lut[S.LUT_UPB, j - q] + sec[S.QK, q + 1, j])
            sec[S.QM, i, j] = am
            sec[S.QE, i, j] = ae
            sec[S.QK, i, j] = ak
            sec[S.QS, i, j] = 1.0 + ae
            sec[S.QSM, i, j] = lut[S.LUT_UPM, w] + am
            sec[S.QSK, i, j] = lut[S.LUT_UPB, w] + ak


@njit(cache=True, nogil=True)
def fill_slice(i, j, m, t4, secr, secs, pr, ps, px, lut, coef):
    """All four-index tables on first-strand interval [i, j], every S-span."""
    wA1 = coef[CO_WA1]
    bM = coef[CO_BM]
    wB1 = coef[CO_WB1]
    bB = coef[CO_BB]
    wS0 = coef[CO_SIG0]
    rw = j - i + 1

    # --- chains: prefix x (gapped unit | bond), results are both-flush -------
    if rw >= 2:
        npre = j - i  # prefix right end ranges over i .. j-1
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
                    spre = prr * 4 + prs
                    gu_t = S.GU_BASE + gur * 4 + gus
                    acc = 0.0
                    for i1 in range(i, j):
                        for h1 in range(c, d):
                            pv = pre_all[spre, i1 - i, c, h1]
                            if pv != 0.0:
                                acc += pv * t4[gu_t, i1 + 1, j, h1 + 1, d]
                    if (prr == 0 or prr == 3) and (prs == 0 or prs == 3):
                        lone = px[i, c]
                        if lone != 0.0:
                            acc += lone * t4[gu_t, i + 1, j, c + 1, d]
                    if acc != 0.0:
                        t4[S.CH2N_BASE + outr * 4 + outs, i, j, c, d] += acc
                # bond at (j, d) with at least one non-bare gap: run restarts
                bond = px[j, d]
                if bond != 0.0:
                    for r in range(S.BOND_ROWS.shape[0]):
                        cr = S.BOND_ROWS[r, 0]
                        cs = S.BOND_ROWS[r, 1]
                        outr = S.BOND_ROWS[r, 2]
                        outs = S.BOND_ROWS[r, 3]
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
                        acc = 0.0
                        for i1 in range(i, j):
                            wgr = secr[wr_t, i1 + 1, j - 1]
                            agr = secr[ar_t, i1 + 1, j - 1]
                            ugr = lut[ur_l, j - i1 - 1]
                            for h1 in range(c, d):
                                pn = pre_n[spre, i1 - i, c, h1]
                                if pn != 0.0:
                                    acc += pn * wgr * secs[ws_t, h1 + 1, d - 1]
                                if br >= 0 and bs >= 0:
                                    pb = pre_p[2 * br + bs, i1 - i, c, h1] + pre_a[2 * br + bs, i1 - i, c, h1]
                                    if pb != 0.0:
                                        acc += pb * (agr * secs[ws_t, h1 + 1, d - 1]
                                                     + ugr * secs[as_t, h1 + 1, d - 1])
                        if br >= 0 and bs >= 0:
                            lone = px[i, c]
                            if lone != 0.0:
                                acc += lone * (secr[ar_t, i + 1, j - 1] * secs[ws_t, c + 1, d - 1]
                                               + lut[ur_l, j - i - 1] * secs[as_t, c + 1, d - 1])
                        if acc != 0.0:
                            t4[S.CH2P_BASE + 2 * BOND_SIDE_OF[outr] + BOND_SIDE_OF[outs], i, j, c, d] += bond * acc
                    # bond at (j, d) linked across bare gaps: run continues
                    for sb in range(4):
                        acc = 0.0
                        for i1 in range(i, j):
                            g1 = j - i1 - 1
                            for h1 in range(c, d):
                                pv = pre_p[sb, i1 - i, c, h1] * wS0 + pre_a[sb, i1 - i, c, h1]
                                if pv != 0.0:
                                    acc += pv * lut[S.LUT_GEXT, g1 + (d - h1 - 1)]
                        lone = px[i, c]
                        if lone != 0.0:
                            acc += lone * wS0 * lut[S.LUT_GEXT, (j - i - 1) + (d - c - 1)]
                        if acc != 0.0:
                            t4[S.CH2A_BASE + sb, i, j, c, d] += bond * acc

    # --- tights, single-unit sums, gapped units, by increasing S-width ------
    prv = pr[i, j]
    for sw in range(1, m + 1):
        for h in range(1, m - sw + 2):
            l = h + sw - 1

            # R-spanning tight: arc (i, j) over a full-S-span core
            if prv > 0.0 and rw >= 3:
                for cs in range(4):
                    tri_t = S.TRI_FOR_SIDE[cs]
                    bsd = BOND_SIDE_OF[cs]
                    acc = 0.0
                    for p in range(i + 1, j):
                        qm_l = secr[S.QM, i + 1, p - 1]
                        up_l = lut[S.LUT_UPM, p - i - 1]
                        qsm_l = secr[S.QSM, i + 1, p - 1]
                        qsk_l = secr[S.QSK, i + 1, p - 1]
                        for q in range(p + 1, j):
                            core = t4[tri_t, p, q, h, l]
                            if core != 0.0:
                                acc += lut[S.LUT_WIP, (p - i - 1) + (j - q - 1)] * core
                                flanks = qm_l * secr[S.QSM, q + 1, j - 1] + up_l * secr[S.QM, q + 1, j - 1]
                                if flanks != 0.0:
                                    acc += wA1 * bM * bM * flanks * core
                            many = t4[S.CH2N_BASE + 4 * S.SIDE_M + cs, p, q, h, l]
                            if many != 0.0:
                                acc += wA1 * bM * qsm_l * secr[S.QSM, q + 1, j - 1] * many
                            kis = t4[S.CH2N_BASE + 4 * S.SIDE_B1 + cs, p, q, h, l]
                            if bsd >= 0:
                                sb = 2 * 1 + bsd
                                kis += t4[S.CH2P_BASE + sb, p, q, h, l] + t4[S.CH2A_BASE + sb, p, q, h, l]
                            if kis != 0.0:
                                acc += wB1 * bB * qsk_l * secr[S.QSK, q + 1, j - 1] * kis
                    if l == h and (cs == S.SIDE_E or cs == S.SIDE_B1):
                        lone = 0.0
                        for p in range(i + 1, j):
                            if px[p, h] != 0.0:
                                lone += (secr[S.QSK, i + 1, p - 1] * px[p, h]
                                         * secr[S.QSK, p + 1, j - 1])
                        acc += wB1 * bB * lone
                    if acc != 0.0:
                        t4[tri_t, i, j, h, l] = prv * acc

            # S-spanning tight: arc (h, l) over a full-R-span core
            psv = ps[h, l]
            if psv > 0.0 and sw >= 3:
                for cr in range(4):
                    tra_t = S.TRA_FOR_SIDE[cr]
                    bsd = BOND_SIDE_OF[cr]
                    acc = 0.0
                    for u in range(h + 1, l):
                        qm_l = secs[S.QM, h + 1, u - 1]
                        up_l = lut[S.LUT_UPM, u - h - 1]
                        qsm_l = secs[S.QSM, h + 1, u - 1]
                        qsk_l = secs[S.QSK, h + 1, u - 1]
                        for v in range(u + 1, l):
                            core = t4[tra_t, i, j, u, v]
                            if core != 0.0:
                                acc += lut[S.LUT_WIP, (u - h - 1) + (l - v - 1)] * core
                                flanks = qm_l * secs[S.QSM, v + 1, l - 1] + up_l * secs[S.QM, v + 1, l - 1]
                                if flanks != 0.0:
                                    acc += wA1 * bM * bM * flanks * core
                            many = t4[S.CH2N_BASE + 4 * cr + S.SIDE_M, i, j, u, v]
                            if many != 0.0:
                                acc += wA1 * bM * qsm_l * secs[S.QSM, v + 1, l - 1] * many
                            kis = t4[S.CH2N_BASE + 4 * cr + S.SIDE_B1, i, j, u, v]
                            if bsd >= 0:
                                sb = 2 * bsd + 1
                                kis += t4[S.CH2P_BASE + sb, i, j, u, v] + t4[S.CH2A_BASE + sb, i, j, u, v]
                            if kis != 0.0:
                                acc += wB1 * bB * qsk_l * secs[S.QSK, v + 1, l - 1] * kis
                    if i == j and (cr == S.SIDE_E or cr == S.SIDE_B1):
                        lone = 0.0
                        for u in range(h + 1, l):
                            if px[i, u] != 0.0:
                                lone += (secs[S.QSK, h + 1, u - 1] * px[i, u]
                                         * secs[S.QSK, u + 1, l - 1])
                        acc += wB1 * bB * lone
                    if acc != 0.0:
                        t4[tra_t, i, j, h, l] = psv * acc

            # both-spanning tight: remove arc (i, j); core keeps the S-arc
            # (the core may occupy a single R-vertex, so q starts at p)
            if prv > 0.0 and psv > 0.0 and rw >= 3 and sw >= 3:
                acc = 0.0
                for p in range(i + 1, j):
                    qm_l = secr[S.QM, i + 1, p - 1]
                    up_l = lut[S.LUT_UPM, p - i - 1]
                    qsm_l = secr[S.QSM, i + 1, p - 1]
                    qsk_l = secr[S.QSK, i + 1, p - 1]
                    for q in range(p, j):
                        core = t4[S.TSQ, p, q, h, l]
                        if core != 0.0:
                            acc += lut[S.LUT_WIP, (p - i - 1) + (j - q - 1)] * core
                            flanks = qm_l * secr[S.QSM, q + 1, j - 1] + up_l * secr[S.QM, q + 1, j - 1]
                            if flanks != 0.0:
                                acc += wA1 * bM * bM * flanks * core
                        many = t4[S.TRA_M, p, q, h, l]
                        if many != 0.0:
                            acc += wA1 * bM * qsm_l * secr[S.QSM, q + 1, j - 1] * many
                        kis = t4[S.TRA_K, p, q, h, l]
                        if kis != 0.0:
                            acc += wB1 * bB * qsk_l * secr[S.QSK, q + 1, j - 1] * kis
                if acc != 0.0:
                    t4[S.TSQ, i, j, h, l] = prv * acc

            # single-unit sums: tights with inline branch charges per context
            for r in range(S.CH1_ROWS.shape[0]):
                v = t4[S.CH1_ROWS[r, 2], i, j, h, l]
                if v != 0.0:
                    fr = S.CH1_ROWS[r, 3]
                    fs = S.CH1_ROWS[r, 4]
                    fR = 1.0 if fr < 0 else coef[CO_BF0 + fr]
                    fS = 1.0 if fs < 0 else coef[CO_BF0 + fs]
                    t4[S.CH1_BASE + S.CH1_ROWS[r, 0] * 4 + S.CH1_ROWS[r, 1], i, j, h, l] += fR * fS * v

            # gapped units: charged gap segments before a right-flush unit
            for s in range(16):
                if s == 15:  # both-side bond exposure needs a lone bond: not a unit
                    continue
                wr_t = S.WSEG_FOR_CLASS[S.SIDE_CLASS[s >> 2]]
                ws_t = S.WSEG_FOR_CLASS[S.SIDE_CLASS[s & 3]]
                acc = 0.0
                for p in range(i, j + 1):
                    wgr = secr[wr_t, i, p - 1]
                    for u in range(h, l + 1):
                        unit = t4[S.CH1_BASE + s, p, j, u, l]
                        if unit != 0.0:
                            acc += wgr * secs[ws_t, h, u - 1] * unit
                if acc != 0.0:
                    t4[S.GU_BASE + s, i, j, h, l] = acc


@njit(cache=True, nogil=True)
def root_scan(n, m, t4, secr, secs, px):
    """Total partition function: free segments around one flush chain region."""
    total = secr[S.QS, 1, n] * secs[S.QS, 1, m]
    for a in range(1, n + 1):
        for b in range(a, n + 1):
            for c in range(1, m + 1):
                for d in range(c, m + 1):
                    inner = (t4[S.CH1_BASE, a, b, c, d]
                             + t4[S.CH2N_BASE, a, b, c, d]
                             + t4[S.CH2P_BASE, a, b, c, d]
                             + t4[S.CH2A_BASE, a, b, c, d])
                    if a == b and c == d:
                        inner += px[a, c]
                    if inner != 0.0:
                        total += (secr[S.QS, 1, a - 1] * secs[S.QS, 1, c - 1] * inner
                                  * secr[S.QS, b + 1, n] * secs[S.QS, d + 1, m])
    return total
