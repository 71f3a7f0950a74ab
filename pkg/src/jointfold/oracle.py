"""Brute-force ground truth: exhaustive enumeration, counts, partition sums, probabilities.

Two independent tiers:

* ``all_subset_structures`` (tiny sizes) walks every vertex-disjoint subset of
  the complete arc candidate set and keeps what ``validate`` accepts — no
  structural insight at all.
* ``enumerate_structures`` (small sizes) recursively builds per-strand
  noncrossing arc sets and order-preserving bond matchings, then filters every
  candidate through ``validate``.  It shares no recursion with the dynamic
  program it gates.

Enumeration happens once per (n, m, policy) with no gap filtering; every
structure is cached with its minimal hairpin gap, so queries at any ``theta``
are cheap filters over the cached cell.  Per-structure loop-feature vectors
turn partition sums for many energy models into one matrix-vector product each.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from jointfold.model import (
    DEFAULT_MIN_HAIRPIN_GAP,
    NO_HAIRPIN,
    FoldConfig,
    JointStructure,
    PairPolicy,
    Strand,
    UsageError,
    earc,
    min_hairpin_gap,
    pair_admissible,
    rarc,
    sarc,
    validate,
)
from jointfold.energy import FEATURE_COUNT, EnergyModel, features_of
from jointfold.outside import BppMatrices

__all__ = [
    "EnumConfig",
    "enumerate_structures",
    "count",
    "brute_partition",
    "brute_bpp",
    "all_subset_structures",
    "clear_cache",
]

MAX_ORACLE_GRID = 64  # refuse enumeration when n*m exceeds this
MAX_ORACLE_STRAND = 12  # ... or either strand alone exceeds this
DEFAULT_MAX_STRUCTURES = 10_000_000


@dataclass(frozen=True, slots=True)
class EnumConfig:
    """What to enumerate: strand lengths, gap threshold, pairing policy, safety cap."""

    n: int
    m: int
    theta: int = DEFAULT_MIN_HAIRPIN_GAP
    pair_policy: PairPolicy = PairPolicy.ANY
    max_structures: int = DEFAULT_MAX_STRUCTURES

    def __post_init__(self) -> None:
        if self.n < 0 or self.m < 0:
            raise UsageError(f"strand lengths must be >= 0, got ({self.n}, {self.m})")
        if self.theta < 0:
            raise UsageError(f"theta must be >= 0, got {self.theta}")


@dataclass
class _Cell:
    """Everything enumerated for one (n, m, policy, sequences) key, theta-free."""

    n: int
    m: int
    seq_r: str
    seq_s: str
    blob: bytes  # per-structure arc lists, flat encoding
    offsets: np.ndarray  # (K+1,) int64 into blob
    h_star: np.ndarray  # (K,) int32 minimal hairpin gap
    n_ext: np.ndarray  # (K,) int16 exterior-bond count
    features: Optional[np.ndarray] = None  # (K, FEATURE_COUNT) int16, lazy
    events: Optional[dict] = None  # lazy column-index lists for probability sums

    @property
    def size(self) -> int:
        return len(self.h_star)


_CELLS: dict[tuple, _Cell] = {}


def clear_cache() -> None:
    """Drop all cached enumeration cells (mainly for tests)."""
    _CELLS.clear()


def _noncrossing_sets(lo: int, hi: int, admissible) -> Iterator[tuple[tuple[int, int], ...]]:
    """All noncrossing, vertex-disjoint interior arc sets on [lo, hi], no gap filter."""
    if lo >= hi:
        yield ()
        return
    for rest in _noncrossing_sets(lo + 1, hi, admissible):
        yield rest
    for j in range(lo + 1, hi + 1):
        if admissible(lo, j):
            for left in _noncrossing_sets(lo + 1, j - 1, admissible):
                for right in _noncrossing_sets(j + 1, hi, admissible):
                    yield ((lo, j),) + left + right


def _matchings(free_r: tuple[int, ...], free_s: tuple[int, ...], admissible) -> Iterator[tuple]:
    """All order-preserving partial matchings between two free-vertex lists."""

    def rec(ir: int, is_: int) -> Iterator[tuple]:
        yield ()
        for pr in range(ir, len(free_r)):
            for ps in range(is_, len(free_s)):
                if admissible(free_r[pr], free_s[ps]):
                    head = (free_r[pr], free_s[ps])
                    for rest in rec(pr + 1, ps + 1):
                        yield (head,) + rest

    return rec(0, 0)


def _encode(r_pairs, s_pairs, ext_pairs) -> bytes:
    out = bytearray((len(r_pairs), len(s_pairs), len(ext_pairs)))
    for pairs in (r_pairs, s_pairs, ext_pairs):
        for a, b in pairs:
            out.append(a)
            out.append(b)
    return bytes(out)


def _decode(blob, lo: int) -> tuple[list, list, list]:
    nr, ns, ne = blob[lo], blob[lo + 1], blob[lo + 2]
    pos = lo + 3
    lists = []
    for k in (nr, ns, ne):
        pairs = [(blob[pos + 2 * t], blob[pos + 2 * t + 1]) for t in range(k)]
        lists.append(pairs)
        pos += 2 * k
    return lists[0], lists[1], lists[2]


def _cell_key(n: int, m: int, policy: PairPolicy, seq_r: Optional[str], seq_s: Optional[str]):
    if policy is PairPolicy.CANONICAL:
        return (n, m, "canonical", seq_r, seq_s)
    return (n, m, "any")


def _check_scale(cfg: EnumConfig) -> None:
    if cfg.n * cfg.m > MAX_ORACLE_GRID or max(cfg.n, cfg.m) > MAX_ORACLE_STRAND:
        raise UsageError(
            f"enumeration refused: ({cfg.n}, {cfg.m}) is beyond the oracle scale "
            f"(grid cap {MAX_ORACLE_GRID}, strand cap {MAX_ORACLE_STRAND})"
        )


def _strands(cfg: EnumConfig, seq_r: Optional[str], seq_s: Optional[str]) -> tuple[Strand, Strand]:
    r = Strand("R", seq_r) if seq_r is not None else Strand.unspecified("R", cfg.n)
    s = Strand("S", seq_s) if seq_s is not None else Strand.unspecified("S", cfg.m)
    if r.length != cfg.n or s.length != cfg.m:
        raise UsageError("sequence length does not match the enumeration config")
    return r, s


def _build_cell(cfg: EnumConfig, seq_r: Optional[str], seq_s: Optional[str]) -> _Cell:
    _check_scale(cfg)
    r_strand, s_strand = _strands(cfg, seq_r, seq_s)
    policy = cfg.pair_policy
    base_cfg = FoldConfig(theta=0, pair_policy=policy)

    adm_r = lambda i, j: pair_admissible(r_strand.base(i), r_strand.base(j), policy)
    adm_s = lambda i, j: pair_admissible(s_strand.base(i), s_strand.base(j), policy)
    adm_e = lambda i, j: pair_admissible(r_strand.base(i), s_strand.base(j), policy)

    blob = bytearray()
    offsets = [0]
    h_star: list[int] = []
    n_ext: list[int] = []

    all_r = list(range(1, cfg.n + 1))
    all_s = list(range(1, cfg.m + 1))
    for r_set in _noncrossing_sets(1, cfg.n, adm_r):
        used_r = {v for p in r_set for v in p}
        free_r = tuple(v for v in all_r if v not in used_r)
        for s_set in _noncrossing_sets(1, cfg.m, adm_s):
            used_s = {v for p in s_set for v in p}
            free_s = tuple(v for v in all_s if v not in used_s)
            for ext in _matchings(free_r, free_s, adm_e):
                js = JointStructure(
                    r_strand,
                    s_strand,
                    tuple(rarc(a, b) for a, b in r_set),
                    tuple(sarc(a, b) for a, b in s_set),
                    tuple(earc(a, b) for a, b in ext),
                )
                if validate(js, base_cfg) is not None:
                    continue
                if len(h_star) >= cfg.max_structures:
                    raise UsageError(
                        f"enumeration refused: more than {cfg.max_structures} structures"
                    )
                blob += _encode(r_set, s_set, ext)
                offsets.append(len(blob))
                h_star.append(min(min_hairpin_gap(js), NO_HAIRPIN))
                n_ext.append(len(ext))
    return _Cell(
        n=cfg.n,
        m=cfg.m,
        seq_r=r_strand.bases,
        seq_s=s_strand.bases,
        blob=bytes(blob),
        offsets=np.asarray(offsets, dtype=np.int64),
        h_star=np.asarray(h_star, dtype=np.int32),
        n_ext=np.asarray(n_ext, dtype=np.int16),
    )


def _get_cell(cfg: EnumConfig, seq_r: Optional[str], seq_s: Optional[str]) -> _Cell:
    if seq_r is not None:
        seq_r = seq_r.upper()
    if seq_s is not None:
        seq_s = seq_s.upper()
    key = _cell_key(cfg.n, cfg.m, cfg.pair_policy, seq_r, seq_s)
    cell = _CELLS.get(key)
    if cell is None:
        cell = _build_cell(cfg, seq_r, seq_s)
        _CELLS[key] = cell
    return cell


def _structure_at(cell: _Cell, k: int) -> JointStructure:
    r_pairs, s_pairs, ext_pairs = _decode(cell.blob, int(cell.offsets[k]))
    return JointStructure.build(
        cell.n, cell.m, r_pairs, s_pairs, ext_pairs, seq_r=cell.seq_r, seq_s=cell.seq_s
    )


def enumerate_structures(
    cfg: EnumConfig, seq_r: Optional[str] = None, seq_s: Optional[str] = None
) -> Iterator[JointStructure]:
    """Yield every valid structure exactly once, in a deterministic order."""
    cell = _get_cell(cfg, seq_r, seq_s)
    for k in range(cell.size):
        if cell.h_star[k] >= cfg.theta:
            yield _structure_at(cell, k)


def count(cfg: EnumConfig, seq_r: Optional[str] = None, seq_s: Optional[str] = None) -> int:
    """Number of valid structures for the config."""
    cell = _get_cell(cfg, seq_r, seq_s)
    return int(np.count_nonzero(cell.h_star >= cfg.theta))


def _ensure_features(cell: _Cell) -> np.ndarray:
    if cell.features is None:
        feats = np.zeros((cell.size, FEATURE_COUNT), dtype=np.int16)
        for k in range(cell.size):
            feats[k] = features_of(_structure_at(cell, k), check=False)
        cell.features = feats
    return cell.features


def _weights(cell: _Cell, model: EnergyModel) -> np.ndarray:
    """Boltzmann weight per cached structure, zeroed where the model excludes it."""
    feats = _ensure_features(cell)
    coeffs = model.feature_coefficients()
    energy = np.zeros(cell.size, dtype=np.float64)
    for col, c in enumerate(coeffs):
        if c != 0.0:
            energy += c * feats[:, col]
    w = np.exp(-energy / model.kT)
    w[cell.h_star < model.theta] = 0.0
    if not model.exterior_ok:
        w[cell.n_ext > 0] = 0.0
    return w


def _model_cfg(model: EnergyModel, max_structures: int, n: int, m: int) -> EnumConfig:
    return EnumConfig(
        n=n, m=m, theta=model.theta, pair_policy=model.pair_policy, max_structures=max_structures
    )


def brute_partition(
    seq_r: str, seq_s: str, model: EnergyModel, max_structures: int = DEFAULT_MAX_STRUCTURES
) -> float:
    """Sum of Boltzmann weights over the enumerated ensemble."""
    cfg = _model_cfg(model, max_structures, len(seq_r), len(seq_s))
    cell = _get_cell(cfg, seq_r, seq_s)
    return float(_weights(cell, model).sum())


def _ensure_events(cell: _Cell) -> dict:
    """Column index lists: which cached structures contain each pairing/unpaired event."""
    if cell.events is not None:
        return cell.events
    n, m = cell.n, cell.m
    rr_pairs = [(i, j) for i in range(1, n + 1) for j in range(i + 1, n + 1)]
    ss_pairs = [(h, l) for h in range(1, m + 1) for l in range(h + 1, m + 1)]
    rs_pairs = [(i, j) for i in range(1, n + 1) for j in range(1, m + 1)]
    rows: dict[tuple, list[int]] = {}
    for k in range(cell.size):
        r_pairs, s_pairs, ext_pairs = _decode(cell.blob, int(cell.offsets[k]))
        used_r = {v for p in r_pairs for v in p} | {a for a, _ in ext_pairs}
        used_s = {v for p in s_pairs for v in p} | {b for _, b in ext_pairs}
        for key in (
            [("rr",) + p for p in r_pairs]
            + [("ss",) + p for p in s_pairs]
            + [("rs",) + p for p in ext_pairs]
            + [("ur", v) for v in range(1, n + 1) if v not in used_r]
            + [("us", v) for v in range(1, m + 1) if v not in used_s]
        ):
            rows.setdefault(key, []).append(k)
    cell.events = {
        "rr": rr_pairs,
        "ss": ss_pairs,
        "rs": rs_pairs,
        "rows": {key: np.asarray(idx, dtype=np.int64) for key, idx in rows.items()},
    }
    return cell.events


def brute_bpp(
    seq_r: str, seq_s: str, model: EnergyModel, max_structures: int = DEFAULT_MAX_STRUCTURES
) -> BppMatrices:
    """Per-arc probability matrices and unpaired vectors by direct weight sums."""
    cfg = _model_cfg(model, max_structures, len(seq_r), len(seq_s))
    cell = _get_cell(cfg, seq_r, seq_s)
    w = _weights(cell, model)
    q = w.sum()
    if q <= 0.0:
        raise UsageError("empty ensemble: partition function is zero")
    events = _ensure_events(cell)
    rows = events["rows"]

    def mass(key) -> float:
        idx = rows.get(key)
        return float(w[idx].sum()) if idx is not None else 0.0

    n, m = cell.n, cell.m
    p_rr = np.zeros((n, n))
    p_ss = np.zeros((m, m))
    p_rs = np.zeros((n, m))
    for i, j in events["rr"]:
        p_rr[i - 1, j - 1] = p_rr[j - 1, i - 1] = mass(("rr", i, j)) / q
    for h, l in events["ss"]:
        p_ss[h - 1, l - 1] = p_ss[l - 1, h - 1] = mass(("ss", h, l)) / q
    for i, j in events["rs"]:
        p_rs[i - 1, j - 1] = mass(("rs", i, j)) / q
    unpaired_r = np.array([mass(("ur", v)) / q for v in range(1, n + 1)])
    unpaired_s = np.array([mass(("us", v)) / q for v in range(1, m + 1)])
    return BppMatrices(p_rr, p_ss, p_rs, unpaired_r, unpaired_s)


def all_subset_structures(
    cfg: EnumConfig, seq_r: Optional[str] = None, seq_s: Optional[str] = None
) -> list[JointStructure]:
    """Tier-zero generator: every subset of the full arc candidate list, filtered.

    Branches that reuse a vertex are skipped early — exactly the subsets the
    vertex-reuse check of ``validate`` would discard — so the survivors equal
    the full 2^(arcs) sweep.  Intended for tiny sizes only.
    """
    if cfg.n > 4 or cfg.m > 4:
        raise UsageError("subset enumeration is limited to strand lengths <= 4")
    r_strand, s_strand = _strands(cfg, seq_r, seq_s)
    full_cfg = FoldConfig(theta=cfg.theta, pair_policy=cfg.pair_policy)
    candidates = (
        [rarc(i, j) for i in range(1, cfg.n + 1) for j in range(i + 1, cfg.n + 1)]
        + [sarc(h, l) for h in range(1, cfg.m + 1) for l in range(h + 1, cfg.m + 1)]
        + [earc(i, j) for i in range(1, cfg.n + 1) for j in range(1, cfg.m + 1)]
    )
    out: list[JointStructure] = []

    def rec(idx: int, used_r: frozenset, used_s: frozenset, chosen: tuple) -> None:
        if idx == len(candidates):
            js = JointStructure(
                r_strand,
                s_strand,
                tuple(a for a in chosen if a.kind.name == "R_INTERIOR"),
                tuple(a for a in chosen if a.kind.name == "S_INTERIOR"),
                tuple(a for a in chosen if a.kind.name == "EXTERIOR"),
            )
            if validate(js, full_cfg) is None:
                out.append(js)
            return
        rec(idx + 1, used_r, used_s, chosen)
        arc = candidates[idx]
        if arc.kind.name == "R_INTERIOR":
            touch_r, touch_s = {arc.a, arc.b}, set()
        elif arc.kind.name == "S_INTERIOR":
            touch_r, touch_s = set(), {arc.a, arc.b}
        else:
            touch_r, touch_s = {arc.a}, {arc.b}
        if not (touch_r & used_r) and not (touch_s & used_s):
            rec(idx + 1, used_r | touch_r, used_s | touch_s, chosen + (arc,))

    rec(0, frozenset(), frozenset(), ())
    return out
