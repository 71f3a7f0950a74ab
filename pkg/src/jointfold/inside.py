"""Inside dynamic program: joint partition function over two interacting strands.

The fill computes one four-index table per advertised subclass label (tights,
single units, gap-prefixed units, chains) plus per-strand segment tables, and
returns the total ``q_joint`` as the weight sum over all valid joint
structures.  Cells are filled by increasing first-strand span, then increasing
second-strand span, so every right-hand-side cell precedes its consumers;
slices of equal first-strand width are mutually independent and may be
distributed across worker threads without changing a single bit of the result.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels as K
from . import _schema as S
from .decomp import TightType
from .energy import EnergyModel
from .model import Strand, UsageError, pair_admissible

__all__ = [
    "Context",
    "Shape",
    "SubclassLabel",
    "SecondaryTables",
    "InsideTables",
    "MemoryBudgetError",
    "NumericalOverflowError",
    "InternalConsistencyError",
    "all_labels",
    "estimate_memory_bytes",
    "mccaskill",
    "fold",
    "count_dp",
    "DEFAULT_BUDGET_MB",
    "BUDGET_ENV_VAR",
]

BUDGET_ENV_VAR = "RIP_MEM_BUDGET_MB"
DEFAULT_BUDGET_MB = 4096


class MemoryBudgetError(RuntimeError):
    """Raised instead of allocating tables beyond the configured budget."""


class NumericalOverflowError(ArithmeticError):
    """Raised when a filled table contains a non-finite entry."""


class InternalConsistencyError(RuntimeError):
    """Raised when a self-check that must hold by construction fails."""


class Context(enum.Enum):
    """Outer-loop context of an exposed strand side."""

    E = "E"  # top level: no charges
    M = "M"  # multi-loop side: branch/unpaired charges, no exposed bonds
    K = "K"  # kissing-loop side with at least one exposed bond
    F = "F"  # kissing-loop side whose exposed elements are all arcs


class Shape(enum.Enum):
    """Structural role of a labelled table."""

    JOINT = "joint"  # top-level chain region (both contexts E)
    TIGHT = "tight"  # one recursively-closed crossing unit
    DOUBLE_TIGHT = "double_tight"  # chain of two or more units, both ends flush
    RIGHT_TIGHT = "right_tight"  # gap segments then one unit, right end flush
    SEGMENT = "segment"  # single-strand interval (two-index tables)


# side-state id <-> API context tag
_SIDE_FOR_CONTEXT = {Context.E: S.SIDE_E, Context.M: S.SIDE_M,
                     Context.K: S.SIDE_B1, Context.F: S.SIDE_B0}
_CONTEXT_FOR_SIDE = {v: k for k, v in _SIDE_FOR_CONTEXT.items()}


@dataclass(frozen=True, slots=True)
class SubclassLabel:
    """Identity of one four-index table in the inside family.

    ``rt_flags`` lists the chain-edge element kinds the table pins down
    ("rA": rightmost element is an arc unit, "rB": rightmost is a bond);
    ``run_state`` refines trailing-bond chains by whether the trailing bond
    run has been charged its initiation weight ("active") or not yet
    ("pending").
    """

    shape: Shape
    tight_type: TightType | None = None
    r_context: Context | None = None
    s_context: Context | None = None
    rt_flags: tuple[str, ...] | None = None
    run_state: str | None = None

    def __post_init__(self) -> None:
        if self.run_state not in (None, "pending", "active"):
            raise UsageError(f"unknown run_state: {self.run_state!r}")
        if self.rt_flags is not None:
            bad = set(self.rt_flags) - {"lA", "lB", "rA", "rB"}
            if bad:
                raise UsageError(f"unknown rt_flags: {sorted(bad)}")


def _chain_label(shape: Shape, cr: Context, cs: Context, rho: int) -> SubclassLabel:
    if rho == S.RHO_NONE:
        return SubclassLabel(shape, None, cr, cs, rt_flags=("rA",))
    state = "pending" if rho == S.RHO_PENDING else "active"
    return SubclassLabel(shape, None, cr, cs, rt_flags=("rB",), run_state=state)


def all_labels() -> tuple[SubclassLabel, ...]:
    """Every advertised subclass label, in storage order."""
    ctx = [Context.E, Context.M, Context.K, Context.F]
    out: list[SubclassLabel] = []
    for c in ctx:  # first-strand-spanning tights, keyed by S-side context
        out.append(SubclassLabel(Shape.TIGHT, TightType.R_SPANNING, None, c))
    for c in ctx:  # second-strand-spanning tights, keyed by R-side context
        out.append(SubclassLabel(Shape.TIGHT, TightType.S_SPANNING, c, None))
    out.append(SubclassLabel(Shape.TIGHT, TightType.BOTH_SPANNING, None, None))
    for cr in ctx:  # single units with both side contexts (no K,K unit exists)
        for cs in ctx:
            if (cr, cs) != (Context.K, Context.K):
                out.append(SubclassLabel(Shape.TIGHT, None, cr, cs))
    for cr in ctx:  # gap-prefixed right-flush units
        for cs in ctx:
            if (cr, cs) != (Context.K, Context.K):
                out.append(SubclassLabel(Shape.RIGHT_TIGHT, None, cr, cs,
                                         rt_flags=("rA",)))
    for cr in ctx:  # chains: top-level state pair is the Joint shape
        for cs in ctx:
            shape = Shape.JOINT if (cr, cs) == (Context.E, Context.E) else Shape.DOUBLE_TIGHT
            out.append(_chain_label(shape, cr, cs, S.RHO_NONE))
    for cr in (Context.E, Context.K):
        for cs in (Context.E, Context.K):
            shape = Shape.JOINT if (cr, cs) == (Context.E, Context.E) else Shape.DOUBLE_TIGHT
            out.append(_chain_label(shape, cr, cs, S.RHO_PENDING))
            out.append(_chain_label(shape, cr, cs, S.RHO_ACTIVE))
    return tuple(out)


def _table_id(label: SubclassLabel) -> int:
    """Storage slot for a label; raises UsageError for unknown labels."""
    if label.shape == Shape.TIGHT and label.tight_type is not None:
        if label.tight_type == TightType.R_SPANNING:
            return int(S.TRI_FOR_SIDE[_SIDE_FOR_CONTEXT[label.s_context]])
        if label.tight_type == TightType.S_SPANNING:
            return int(S.TRA_FOR_SIDE[_SIDE_FOR_CONTEXT[label.r_context]])
        if label.tight_type == TightType.BOTH_SPANNING:
            return S.TSQ
        raise UsageError("single bonds are weighted inline, not tabled")
    cr = _SIDE_FOR_CONTEXT[label.r_context]
    cs = _SIDE_FOR_CONTEXT[label.s_context]
    if label.shape == Shape.TIGHT:
        return S.ch1_id(cr, cs)
    if label.shape == Shape.RIGHT_TIGHT:
        return S.gu_id(cr, cs)
    if label.shape in (Shape.JOINT, Shape.DOUBLE_TIGHT):
        if label.run_state is None:
            return S.ch2n_id(cr, cs)
        if label.run_state == "pending":
            return S.ch2p_id(cr, cs)
        return S.ch2a_id(cr, cs)
    raise UsageError(f"label has no four-index table: {label}")


@dataclass(frozen=True, slots=True)
class SecondaryTables:
    """Single-strand tables: closed arcs plus charged segment sums."""

    strand: Strand
    model: EnergyModel
    data: np.ndarray  # (8, L+2, L+2), 1-based spans

    @property
    def q(self) -> float:
        """Partition function over the whole strand."""
        return float(self.data[S.QS, 1, self.strand.length])

    @property
    def q_b(self) -> np.ndarray:
        return self.data[S.QB]

    @property
    def q_e(self) -> np.ndarray:
        return self.data[S.QE]

    @property
    def q_m(self) -> np.ndarray:
        return self.data[S.QM]

    @property
    def q_m1(self) -> np.ndarray:
        return self.data[S.QM1]

    @property
    def q_k(self) -> np.ndarray:
        return self.data[S.QK]

    @property
    def q_s(self) -> np.ndarray:
        return self.data[S.QS]

    @property
    def q_sm(self) -> np.ndarray:
        return self.data[S.QSM]

    @property
    def q_sk(self) -> np.ndarray:
        return self.data[S.QSK]


@dataclass(frozen=True, slots=True)
class InsideTables:
    """Filled inside tables for a strand pair plus the total weight sum."""

    strand_r: Strand
    strand_s: Strand
    model: EnergyModel
    q_joint: float
    sec_r: SecondaryTables
    sec_s: SecondaryTables
    data: np.ndarray  # (N_T4, n+2, n+2, m+2, m+2)
    bond_weight: np.ndarray  # (n+2, m+2) admissible-bond indicator/weight
    pair_r: np.ndarray
    pair_s: np.ndarray
    luts: np.ndarray
    coef: np.ndarray

    def table(self, label: SubclassLabel) -> np.ndarray:
        """Four-index view for one advertised label."""
        return self.data[_table_id(label)]

    @property
    def tables(self) -> dict[SubclassLabel, np.ndarray]:
        """One table view per advertised label."""
        return {lab: self.data[_table_id(lab)] for lab in all_labels()}

    @property
    def labels(self) -> tuple[SubclassLabel, ...]:
        return all_labels()


def estimate_memory_bytes(n: int, m: int) -> int:
    """Exact bytes of the persistent arrays a fold of sizes (n, m) allocates."""
    four = S.N_T4 * (n + 2) * (n + 2) * (m + 2) * (m + 2)
    sec = S.N_S2 * ((n + 2) * (n + 2) + (m + 2) * (m + 2))
    pairs = (n + 2) * (n + 2) + (m + 2) * (m + 2) + (n + 2) * (m + 2)
    luts = S.N_LUT * (n + m + 4)
    return 8 * (four + sec + pairs + luts) + 8 * K.N_COEF


def _as_strand(seq: Strand | str, name: str) -> Strand:
    strand = seq if isinstance(seq, Strand) else Strand(name, seq)
    if strand.length < 1:
        raise UsageError(f"strand {strand.name!r} is empty")
    return strand


def _weight(energy: float, kt: float) -> float:
    return math.exp(-energy / kt)


def _build_luts(model: EnergyModel, width: int) -> np.ndarray:
    lut = np.zeros((S.N_LUT, width))
    kt = model.kT
    d = np.arange(width, dtype=np.float64)
    with np.errstate(over="ignore"):  # inf propagates to the overflow check
        lut[S.LUT_WHA] = np.exp(-(model.hairpin_const + model.hairpin_per_base * d) / kt)
        lut[S.LUT_WIP] = np.exp(-(model.interior_const + model.interior_per_base * d) / kt)
        lut[S.LUT_GEXT] = np.exp(-(model.hybrid_scale * model.hybrid_gap_per_base * d) / kt)
        lut[S.LUT_UPM] = np.exp(-model.multi_unpaired * d / kt)
        lut[S.LUT_UPB] = np.exp(-model.kissing_unpaired * d / kt)
    lut[S.LUT_UP1] = 1.0
    return lut


def _build_coef(model: EnergyModel) -> np.ndarray:
    kt = model.kT
    coef = np.zeros(K.N_COEF)
    coef[K.CO_WA1] = _weight(model.multi_close, kt)
    coef[K.CO_BM] = _weight(model.multi_branch, kt)
    coef[K.CO_WB1] = _weight(model.kissing_close, kt)
    coef[K.CO_BB] = _weight(model.kissing_branch, kt)
    coef[K.CO_SIG0] = _weight(model.hybrid_init, kt)
    coef[K.CO_BF0 + S.SIDE_E] = 1.0
    coef[K.CO_BF0 + S.SIDE_M] = coef[K.CO_BM]
    coef[K.CO_BF0 + S.SIDE_B0] = coef[K.CO_BB]
    coef[K.CO_BF0 + S.SIDE_B1] = coef[K.CO_BB]
    return coef


def _pair_matrix(strand: Strand, model: EnergyModel) -> np.ndarray:
    L = strand.length
    mat = np.zeros((L + 2, L + 2))
    for i in range(1, L + 1):
        for j in range(i + 1, L + 1):
            if pair_admissible(strand.base(i), strand.base(j), model.pair_policy):
                mat[i, j] = 1.0
    return mat


def _bond_matrix(r: Strand, s: Strand, model: EnergyModel) -> np.ndarray:
    px = np.zeros((r.length + 2, s.length + 2))
    if model.exterior_ok:
        for i in range(1, r.length + 1):
            for h in range(1, s.length + 1):
                if pair_admissible(r.base(i), s.base(h), model.pair_policy):
                    px[i, h] = 1.0
    return px


def _resolve_budget(budget_mb: float | None) -> float:
    if budget_mb is not None:
        return float(budget_mb)
    env = os.environ.get(BUDGET_ENV_VAR)
    if env is not None:
        try:
            return float(env)
        except ValueError as exc:
            raise UsageError(f"{BUDGET_ENV_VAR} must be a number, got {env!r}") from exc
    return float(DEFAULT_BUDGET_MB)


def _secondary(strand: Strand, model: EnergyModel, lut: np.ndarray,
               coef: np.ndarray, compiled: bool) -> SecondaryTables:
    fill = K.fill_secondary if compiled else K.fill_secondary.py_func
    L = strand.length
    sec = np.zeros((S.N_S2, L + 2, L + 2))
    fill(L, model.theta, sec, _pair_matrix(strand, model), lut, coef)
    if not np.all(np.isfinite(sec)):
        raise NumericalOverflowError(
            f"single-strand fill for {strand.name!r} produced a non-finite "
            "entry; the model's weights overflow double precision")
    return SecondaryTables(strand, model, sec)


def mccaskill(seq: Strand | str, model: EnergyModel, *,
              compiled: bool = True) -> SecondaryTables:
    """Single-strand tables and partition function (``.q``) for one sequence."""
    strand = _as_strand(seq, "R")
    lut = _build_luts(model, 2 * strand.length + 4)
    return _secondary(strand, model, lut, _build_coef(model), compiled)


def fold(seq_r: Strand | str, seq_s: Strand | str, model: EnergyModel, *,
         jobs: int = 1, budget_mb: float | None = None,
         compiled: bool = True) -> InsideTables:
    """Fill every inside table for the pair and return them with ``q_joint``.

    ``jobs`` > 1 distributes independent same-width slices across threads;
    the result is byte-identical to the serial fill.  ``budget_mb`` caps the
    persistent allocation (default from ``RIP_MEM_BUDGET_MB``, else 4096).
    """
    r = _as_strand(seq_r, "R")
    s = _as_strand(seq_s, "S")
    n, m = r.length, s.length

    need = estimate_memory_bytes(n, m)
    budget = _resolve_budget(budget_mb)
    if need > budget * 1024 * 1024:
        raise MemoryBudgetError(
            f"fold of sizes ({n}, {m}) requires {need} bytes "
            f"({need / 2**20:.1f} MiB) of tables, over the budget of "
            f"{budget:.0f} MiB; raise {BUDGET_ENV_VAR} to proceed")

    lut = _build_luts(model, n + m + 4)
    coef = _build_coef(model)
    sec_r = _secondary(r, model, lut, coef, compiled)
    sec_s = _secondary(s, model, lut, coef, compiled)
    pr = _pair_matrix(r, model)
    ps = _pair_matrix(s, model)
    px = _bond_matrix(r, s, model)

    try:
        t4 = np.zeros((S.N_T4, n + 2, n + 2, m + 2, m + 2))
    except MemoryError as exc:
        raise MemoryBudgetError(
            f"allocation of {need} bytes failed for sizes ({n}, {m})") from exc

    fill = K.fill_slice if compiled else K.fill_slice.py_func
    scan = K.root_scan if compiled else K.root_scan.py_func
    secr, secs = sec_r.data, sec_s.data

    def run_slice(i: int, j: int) -> None:
        fill(i, j, m, t4, secr, secs, pr, ps, px, lut, coef)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            for w in range(1, n + 1):
                futures = [pool.submit(run_slice, i, i + w - 1)
                           for i in range(1, n - w + 2)]
                for f in futures:
                    f.result()
    else:
        for w in range(1, n + 1):
            for i in range(1, n - w + 2):
                run_slice(i, i + w - 1)

    q = float(scan(n, m, t4, secr, secs, px))
    if not math.isfinite(q) or not np.all(np.isfinite(t4)):
        raise NumericalOverflowError(
            "table fill produced a non-finite entry; the model's weights "
            "overflow double precision at these sizes")
    return InsideTables(r, s, model, q, sec_r, sec_s, t4, px, pr, ps, lut, coef)


def count_dp(n: int, m: int, theta: int, *, jobs: int = 1,
             compiled: bool = True) -> int:
    """Number of valid joint structures on unconstrained strands, via the fill.

    ``m`` = 0 counts single-strand structures of length ``n``.
    """
    if n < 1:
        raise UsageError("first strand length must be at least 1")
    model = EnergyModel.unit(theta=theta)
    if m == 0:
        q = mccaskill(Strand.unspecified("R", n), model, compiled=compiled).q
    else:
        q = fold(Strand.unspecified("R", n), Strand.unspecified("S", m), model,
                 jobs=jobs, compiled=compiled).q_joint
    rounded = round(q)
    if abs(q - rounded) > 1e-6 * max(1.0, abs(q)):
        raise InternalConsistencyError(
            f"unit-weight fill returned non-integral total {q!r} for "
            f"sizes ({n}, {m}, theta={theta})")
    return int(rounded)
