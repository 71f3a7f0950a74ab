"""Outside pass: per-subclass probabilities and base-pairing probability matrices.

The scatter kernels walk the fill in reverse, accumulating one outside
multiplier per inside cell; the probability that a structure drawn from the
ensemble uses a given cell is ``inside * outside / q_joint``.  Per-vertex
unpaired probabilities come from range commits made wherever a production
leaves a stretch of vertices bare, so the per-vertex partition of unity is an
actual cross-check rather than a definition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels_out as KO
from . import _schema as S
from .energy import EnergyModel
from .inside import (
    InsideTables,
    NumericalOverflowError,
    SecondaryTables,
    SubclassLabel,
    _as_strand,
    _build_coef,
    _build_luts,
    _pair_matrix,
    _table_id,
    all_labels,
    fold,
    mccaskill,
)
from .model import Strand, UsageError

__all__ = [
    "BppMatrices",
    "OutsideTables",
    "outside_tables",
    "secondary_bpp",
    "joint_bpp",
]


@dataclass(frozen=True)
class BppMatrices:
    """Marginal pairing probabilities for one strand pair.

    Arrays are stored 0-based: entry ``p_rr[i-1, j-1]`` is the probability that
    vertices R[i] and R[j] are bonded (symmetric storage, zero diagonal);
    ``p_rs[i-1, j-1]`` covers the bond (R[i], S[j]); ``unpaired_r[i-1]`` is the
    probability that R[i] touches no arc of any kind.
    """

    p_rr: np.ndarray  # (n, n), symmetric
    p_ss: np.ndarray  # (m, m), symmetric
    p_rs: np.ndarray  # (n, m)
    unpaired_r: np.ndarray  # (n,)
    unpaired_s: np.ndarray  # (m,)

    @property
    def n(self) -> int:
        return self.p_rr.shape[0]

    @property
    def m(self) -> int:
        return self.p_ss.shape[0]

    def max_normalization_error(self) -> float:
        """Largest deviation from the per-vertex partition of unity."""
        err = 0.0
        for i in range(self.n):
            total = self.unpaired_r[i] + self.p_rr[i, :].sum() + self.p_rs[i, :].sum()
            err = max(err, abs(total - 1.0))
        for j in range(self.m):
            total = self.unpaired_s[j] + self.p_ss[j, :].sum() + self.p_rs[:, j].sum()
            err = max(err, abs(total - 1.0))
        return err


@dataclass(frozen=True, slots=True)
class OutsideTables:
    """Outside multipliers for every inside table, plus unpaired vertex mass.

    ``data`` mirrors the inside four-index block slot for slot; multiplying a
    slot elementwise with its inside twin and dividing by ``q_joint`` gives the
    probability that the ensemble uses that cell, which is what ``table``
    returns.  ``unpaired_mass_r[i]`` is the summed weight of all structures in
    which R[i+1] is unpaired (0-based vector, length n).
    """

    inside: InsideTables
    data: np.ndarray  # (N_T4, n+2, n+2, m+2, m+2) outside multipliers
    out_sec_r: np.ndarray  # (8, n+2, n+2)
    out_sec_s: np.ndarray  # (8, m+2, m+2)
    out_bond: np.ndarray  # (n+2, m+2)
    unpaired_mass_r: np.ndarray  # (n,)
    unpaired_mass_s: np.ndarray  # (m,)

    def multiplier(self, label: SubclassLabel) -> np.ndarray:
        """Raw outside multiplier table for one advertised label."""
        return self.data[_table_id(label)]

    def table(self, label: SubclassLabel) -> np.ndarray:
        """Probability that the ensemble uses each cell of one labelled table."""
        tid = _table_id(label)
        return self.inside.data[tid] * self.data[tid] / self.inside.q_joint

    @property
    def tables(self) -> dict[SubclassLabel, np.ndarray]:
        """One probability table per advertised label."""
        return {lab: self.table(lab) for lab in all_labels()}

    def _sec_prob(self, row: int, strand_r: bool) -> np.ndarray:
        ins = self.inside.sec_r.data if strand_r else self.inside.sec_s.data
        out = self.out_sec_r if strand_r else self.out_sec_s
        return ins[row] * out[row] / self.inside.q_joint

    @property
    def p_arc_r(self) -> np.ndarray:
        """Probability of each closed first-strand arc span (1-based, padded)."""
        return self._sec_prob(S.QB, True)

    @property
    def p_arc_s(self) -> np.ndarray:
        return self._sec_prob(S.QB, False)

    @property
    def p_multi_r(self) -> np.ndarray:
        """Probability of each charged multi-run span on the first strand."""
        return self._sec_prob(S.QM, True)

    @property
    def p_multi_s(self) -> np.ndarray:
        return self._sec_prob(S.QM, False)

    @property
    def p_seg_r(self) -> np.ndarray:
        """Probability of each free-segment span on the first strand."""
        return self._sec_prob(S.QS, True)

    @property
    def p_seg_s(self) -> np.ndarray:
        return self._sec_prob(S.QS, False)

    def max_probability_excess(self) -> float:
        """Largest amount by which any per-cell probability exceeds one."""
        q = self.inside.q_joint
        worst = 0.0
        for tid in range(S.N_T4):
            top = float((self.inside.data[tid] * self.data[tid]).max())
            worst = max(worst, top / q - 1.0)
        for row in range(S.N_S2):
            worst = max(worst, float((self.inside.sec_r.data[row] * self.out_sec_r[row]).max()) / q - 1.0)
            worst = max(worst, float((self.inside.sec_s.data[row] * self.out_sec_s[row]).max()) / q - 1.0)
        return max(worst, 0.0)

    def bpp(self) -> BppMatrices:
        """Assemble the three pairing matrices and the unpaired vectors."""
        ins = self.inside
        n, m = ins.strand_r.length, ins.strand_s.length
        q = ins.q_joint
        t4, o4 = ins.data, self.data

        rr = ins.sec_r.data[S.QB] * self.out_sec_r[S.QB]
        rr = rr + np.einsum("aijhl,aijhl->ij", t4[S.TRI_E:S.TRI_F + 1], o4[S.TRI_E:S.TRI_F + 1])
        rr = rr + np.einsum("ijhl,ijhl->ij", t4[S.TSQ], o4[S.TSQ])
        ss = ins.sec_s.data[S.QB] * self.out_sec_s[S.QB]
        ss = ss + np.einsum("aijhl,aijhl->hl", t4[S.TRA_E:S.TRA_F + 1], o4[S.TRA_E:S.TRA_F + 1])

        p_rr = (rr / q)[1:n + 1, 1:n + 1]
        p_rr = p_rr + p_rr.T
        p_ss = (ss / q)[1:m + 1, 1:m + 1]
        p_ss = p_ss + p_ss.T
        p_rs = (ins.bond_weight * self.out_bond / q)[1:n + 1, 1:m + 1]
        return BppMatrices(p_rr, p_ss, p_rs,
                           self.unpaired_mass_r / q, self.unpaired_mass_s / q)


def outside_tables(inside: InsideTables, *, compiled: bool = True) -> OutsideTables:
    """Run the full outside scatter over filled inside tables.

    The pass is sequential: slices run by decreasing first-strand width, the
    reverse of the fill, and the per-strand sweeps come last.
    """
    n, m = inside.strand_r.length, inside.strand_s.length
    theta = inside.model.theta
    t4 = inside.data
    secr, secs = inside.sec_r.data, inside.sec_s.data

    o4 = np.zeros_like(t4)
    osr = np.zeros_like(secr)
    oss = np.zeros_like(secs)
    opx = np.zeros_like(inside.bond_weight)
    dur = np.zeros(n + 3)
    dus = np.zeros(m + 3)

    seed = KO.seed_root if compiled else KO.seed_root.py_func
    scat = KO.scatter_slice if compiled else KO.scatter_slice.py_func
    sweep = KO.scatter_secondary if compiled else KO.scatter_secondary.py_func

    seed(n, m, t4, o4, secr, secs, osr, oss, inside.bond_weight, opx)
    for w in range(n, 0, -1):
        for i in range(1, n - w + 2):
            scat(i, i + w - 1, m, t4, o4, secr, secs, osr, oss,
                 inside.pair_r, inside.pair_s, inside.bond_weight, opx,
                 inside.luts, inside.coef, dur, dus)
    sweep(n, theta, secr, osr, inside.pair_r, inside.luts, inside.coef, dur)
    sweep(m, theta, secs, oss, inside.pair_s, inside.luts, inside.coef, dus)

    for arr in (o4, osr, oss, opx, dur, dus):
        if not np.all(np.isfinite(arr)):
            raise NumericalOverflowError(
                "outside scatter produced a non-finite multiplier; the model's "
                "weights overflow double precision at these sizes")
    return OutsideTables(inside, o4, osr, oss, opx,
                         np.cumsum(dur)[1:n + 1].copy(),
                         np.cumsum(dus)[1:m + 1].copy())


def _check_strand(given: Strand, held: Strand, name: str) -> None:
    if given.bases != held.bases:
        raise UsageError(
            f"inside tables were filled for {name} sequence {held.bases!r}, "
            f"got {given.bases!r}")


def secondary_bpp(seq: Strand | str, model: EnergyModel,
                  inside: SecondaryTables | None = None, *,
                  compiled: bool = True) -> np.ndarray:
    """Arc probabilities for one strand alone, as an L-by-L symmetric matrix.

    ``inside`` takes pre-filled single-strand tables; when omitted they are
    computed here.  Entry ``[i-1, j-1]`` is the probability that vertices i
    and j (1-based) form an arc.
    """
    strand = _as_strand(seq, "R")
    if inside is None:
        inside = mccaskill(strand, model, compiled=compiled)
    else:
        _check_strand(strand, inside.strand, "the")
    L = strand.length
    lut = _build_luts(model, 2 * L + 4)
    coef = _build_coef(model)
    pairm = _pair_matrix(strand, model)

    osec = np.zeros_like(inside.data)
    osec[S.QS, 1, L] = 1.0
    dun = np.zeros(L + 3)
    sweep = KO.scatter_secondary if compiled else KO.scatter_secondary.py_func
    sweep(L, model.theta, inside.data, osec, pairm, lut, coef, dun)
    if not np.all(np.isfinite(osec)):
        raise NumericalOverflowError(
            "outside sweep produced a non-finite multiplier")

    prob = (inside.data[S.QB] * osec[S.QB] / inside.q)[1:L + 1, 1:L + 1]
    return prob + prob.T


def joint_bpp(seq_r: Strand | str, seq_s: Strand | str, model: EnergyModel,
              inside: InsideTables | None = None, *, jobs: int = 1,
              compiled: bool = True) -> BppMatrices:
    """All three pairing matrices and both unpaired vectors for a strand pair.

    ``inside`` takes the pre-filled tables from ``fold``; when omitted the
    fill runs here first (``jobs`` threads).  The outside scatter itself is
    sequential.
    """
    r = _as_strand(seq_r, "R")
    s = _as_strand(seq_s, "S")
    if inside is None:
        inside = fold(r, s, model, jobs=jobs, compiled=compiled)
    else:
        _check_strand(r, inside.strand_r, "first")
        _check_strand(s, inside.strand_s, "second")
        if inside.model != model:
            raise UsageError("inside tables were filled under a different model")
    out = outside_tables(inside, compiled=compiled)
    bpp = out.bpp()
    if not math.isfinite(bpp.max_normalization_error()):
        raise NumericalOverflowError("probability assembly produced non-finite entries")
    return bpp
