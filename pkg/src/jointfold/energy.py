"""Loop-based energy model: loop extraction, additive free energy, Boltzmann weights.

A valid joint structure decomposes uniquely into loops:

* ``Hairpin``   — an interior arc with no arc endpoint inside its span.
* ``Interior``  — an interior arc with exactly one maximal interior arc and no
  exterior bond directly inside (covers stacked pairs and bulges).
* ``Multi``     — an interior arc with >= 2 maximal interior arcs and no exterior
  bond directly inside; charged ``multi_close + multi_branch*(t+1) +
  multi_unpaired*c2``.
* ``Kissing``   — an interior arc with at least one exterior bond directly
  inside; charged ``kissing_close + kissing_branch*(t+1) + kissing_unpaired*c2``
  where ``t`` counts only maximal *interior* arcs (exterior bonds carry no
  per-branch charge).
* ``Hybrid``    — a maximal run of >= 2 consecutive exterior bonds whose gaps on
  both strands contain no arc endpoint; charged once with ``hybrid_init`` plus
  ``hybrid_scale * gap_energy`` per consecutive gap pair.  Gap vertices belong
  to the hybrid, not to the enclosing loop's isolated-vertex count.

Unpaired vertices outside every interior arc and every hybrid gap belong to no
loop and carry zero energy (they still count as unpaired events for
probability accounting — see ``external_unpaired``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

from jointfold.model import (
    Arc,
    ArcKind,
    FoldConfig,
    JointStructure,
    PairPolicy,
    UsageError,
    validate,
    DEFAULT_MIN_HAIRPIN_GAP,
)

__all__ = [
    "EnergyModel",
    "LoopKind",
    "Loop",
    "loops_of",
    "external_unpaired",
    "loop_energy",
    "loop_sort_key",
    "structure_energy",
    "boltzmann",
    "features_of",
    "FEATURE_COUNT",
    "PARAM_KEYS",
]

FEATURE_COUNT = 12

PARAM_KEYS = (
    "kT",
    "theta",
    "alpha1",
    "alpha2",
    "alpha3",
    "beta1",
    "beta2",
    "beta3",
    "sigma0",
    "sigma",
    "gamma",
    "hairpin_const",
    "hairpin_per_base",
    "interior_const",
    "interior_per_base",
    "pair_policy",
)


@dataclass(frozen=True, slots=True)
class EnergyModel:
    """All loop-energy parameters plus the structural configuration.

    The default instance is the unit-weight model: every structure gets
    Boltzmann weight exactly 1, so the partition function counts structures.
    """

    kT: float = 1.0
    theta: int = DEFAULT_MIN_HAIRPIN_GAP
    pair_policy: PairPolicy = PairPolicy.ANY
    hairpin_const: float = 0.0
    hairpin_per_base: float = 0.0
    interior_const: float = 0.0
    interior_per_base: float = 0.0
    multi_close: float = 0.0  # per multi-loop
    multi_branch: float = 0.0  # per branch, t+1 branches
    multi_unpaired: float = 0.0  # per isolated vertex
    kissing_close: float = 0.0
    kissing_branch: float = 0.0
    kissing_unpaired: float = 0.0
    hybrid_init: float = 0.0  # once per hybrid run
    hybrid_scale: float = 1.0  # scales gap energies, in (0, 1]
    hybrid_gap_per_base: float = 0.0  # gap energy is this times total gap length
    exterior_ok: bool = True  # False shuts off all R-S bonds (factorized ensemble)

    def __post_init__(self) -> None:
        if not self.kT > 0:
            raise UsageError(f"kT must be positive, got {self.kT}")
        if not 0 < self.hybrid_scale <= 1:
            raise UsageError(f"hybrid_scale must be in (0, 1], got {self.hybrid_scale}")
        if self.theta < 0:
            raise UsageError(f"theta must be >= 0, got {self.theta}")

    @classmethod
    def unit(cls, theta: int = DEFAULT_MIN_HAIRPIN_GAP, **kw) -> "EnergyModel":
        """The counting model: all energies zero."""
        return cls(theta=theta, **kw)

    @property
    def fold_config(self) -> FoldConfig:
        return FoldConfig(theta=self.theta, pair_policy=self.pair_policy)

    def hairpin_energy(self, i: int, j: int) -> float:
        """Energy of a hairpin closed by (i, j): affine in the enclosed length."""
        return self.hairpin_const + self.hairpin_per_base * (j - i - 1)

    def interior_energy(self, i: int, j: int, h: int, l: int) -> float:
        """Energy of an interior loop (i,j) around (h,l): affine in the two gap lengths."""
        return self.interior_const + self.interior_per_base * ((h - i - 1) + (j - l - 1))

    def hybrid_gap_energy(self, gap_r: int, gap_s: int) -> float:
        """Unscaled energy of one gap pair inside a hybrid."""
        return self.hybrid_gap_per_base * (gap_r + gap_s)

    def feature_coefficients(self) -> tuple[float, ...]:
        """Coefficients paired with ``features_of``: energy = dot(features, coefficients)."""
        return (
            self.hairpin_const,
            self.hairpin_per_base,
            self.interior_const,
            self.interior_per_base,
            self.multi_close,
            self.multi_branch,
            self.multi_unpaired,
            self.kissing_close,
            self.kissing_branch,
            self.kissing_unpaired,
            self.hybrid_init,
            self.hybrid_scale * self.hybrid_gap_per_base,
        )

    @classmethod
    def from_text(cls, text: str) -> "EnergyModel":
        """Parse ``key = value`` lines; unknown keys are errors, missing keys default."""
        values: dict[str, str] = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"parameter line {lineno} is not 'key = value': {raw!r}")
            key, _, val = line.partition("=")
            key, val = key.strip(), val.strip()
            if key not in PARAM_KEYS:
                raise UsageError(f"unknown parameter key {key!r} on line {lineno}")
            values[key] = val

        def num(key: str, default: float) -> float:
            if key not in values:
                return default
            try:
                return float(values[key])
            except ValueError:
                raise UsageError(f"parameter {key!r} is not a number: {values[key]!r}") from None

        policy = PairPolicy.ANY
        if "pair_policy" in values:
            try:
                policy = PairPolicy(values["pair_policy"].lower())
            except ValueError:
                raise UsageError(f"pair_policy must be 'any' or 'canonical', got {values['pair_policy']!r}") from None
        theta = num("theta", DEFAULT_MIN_HAIRPIN_GAP)
        if theta != int(theta):
            raise UsageError(f"theta must be an integer, got {theta}")
        return cls(
            kT=num("kT", 1.0),
            theta=int(theta),
            pair_policy=policy,
            hairpin_const=num("hairpin_const", 0.0),
            hairpin_per_base=num("hairpin_per_base", 0.0),
            interior_const=num("interior_const", 0.0),
            interior_per_base=num("interior_per_base", 0.0),
            multi_close=num("alpha1", 0.0),
            multi_branch=num("alpha2", 0.0),
            multi_unpaired=num("alpha3", 0.0),
            kissing_close=num("beta1", 0.0),
            kissing_branch=num("beta2", 0.0),
            kissing_unpaired=num("beta3", 0.0),
            hybrid_init=num("sigma0", 0.0),
            hybrid_scale=num("sigma", 1.0),
            hybrid_gap_per_base=num("gamma", 0.0),
        )

    @classmethod
    def from_file(cls, path) -> "EnergyModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_text(fh.read())


class LoopKind(Enum):
    HAIRPIN = "hairpin"
    INTERIOR = "interior"
    MULTI = "multi"
    KISSING = "kissing"
    HYBRID = "hybrid"


@dataclass(frozen=True, slots=True)
class Loop:
    """One loop: closing arc (empty for hybrids), member arcs, unpaired intervals.

    ``unpaired`` holds inclusive intervals ("R"|"S", lo, hi); ``t`` counts maximal
    interior-arc members and ``c2`` isolated vertices (Multi/Kissing only).
    """

    kind: LoopKind
    closing: tuple[Arc, ...]
    members: tuple[Arc, ...]
    unpaired: tuple[tuple[str, int, int], ...]
    t: int = 0
    c2: int = 0

    @property
    def unpaired_total(self) -> int:
        return sum(hi - lo + 1 for _, lo, hi in self.unpaired)


def loop_sort_key(loop: Loop):
    """Canonical ordering of a structure's loops (used for exact-sum comparisons)."""
    if loop.kind is LoopKind.HYBRID:
        return (2, loop.members[0].a, loop.members[0].b)
    arc = loop.closing[0]
    return (0 if arc.kind is ArcKind.R_INTERIOR else 1, arc.a, arc.b)


def _intervals(vertices: Iterable[int], tag: str) -> tuple[tuple[str, int, int], ...]:
    out = []
    run_lo: Optional[int] = None
    prev: Optional[int] = None
    for v in sorted(vertices):
        if run_lo is None:
            run_lo = prev = v
        elif v == prev + 1:
            prev = v
        else:
            out.append((tag, run_lo, prev))
            run_lo = prev = v
    if run_lo is not None:
        out.append((tag, run_lo, prev))
    return tuple(out)


def _hybrid_runs(js: JointStructure) -> list[tuple[Arc, ...]]:
    """Maximal runs of >= 2 consecutive exterior bonds with arc-free gaps on both strands."""
    ext = js.ext_arcs
    if len(ext) < 2:
        return []
    r_ends = {p for a in js.r_arcs for p in (a.a, a.b)} | {e.a for e in ext}
    s_ends = {p for a in js.s_arcs for p in (a.a, a.b)} | {e.b for e in ext}

    def linked(u: Arc, v: Arc) -> bool:
        return not any(u.a < p < v.a for p in r_ends) and not any(u.b < p < v.b for p in s_ends)

    runs: list[tuple[Arc, ...]] = []
    start = 0
    for k in range(len(ext)):
        if k + 1 == len(ext) or not linked(ext[k], ext[k + 1]):
            if k + 1 - start >= 2:
                runs.append(ext[start : k + 1])
            start = k + 1
    return runs


def _closing_loop(
    js: JointStructure,
    tag: str,
    arcs: tuple[Arc, ...],
    arc: Arc,
    hybrid_owned: set[tuple[str, int]],
) -> Loop:
    inside = [c for c in arcs if arc.a < c.a and c.b < arc.b]
    kids = [c for c in inside if not any(d.a < c.a and c.b < d.b for d in inside)]
    end = (lambda e: e.a) if tag == "R" else (lambda e: e.b)
    ext_kids = [
        e
        for e in js.ext_arcs
        if arc.a < end(e) < arc.b and not any(k.a < end(e) < k.b for k in kids)
    ]
    endpoints = {p for a in arcs for p in (a.a, a.b)} | {end(e) for e in js.ext_arcs}
    unpaired = [
        v
        for v in range(arc.a + 1, arc.b)
        if v not in endpoints and not any(k.a < v < k.b for k in kids)
    ]
    own = [v for v in unpaired if (tag, v) not in hybrid_owned]
    members = tuple(sorted(kids)) + tuple(sorted(ext_kids))
    if not kids and not ext_kids:
        return Loop(LoopKind.HAIRPIN, (arc,), (), _intervals(own, tag))
    if not ext_kids and len(kids) == 1:
        return Loop(LoopKind.INTERIOR, (arc,), members, _intervals(own, tag))
    kind = LoopKind.MULTI if not ext_kids else LoopKind.KISSING
    return Loop(kind, (arc,), members, _intervals(own, tag), t=len(kids), c2=len(own))


def loops_of(js: JointStructure, check: bool = True) -> list[Loop]:
    """The unique loop decomposition of a valid structure, in canonical order.

    Pass ``check=False`` only when the caller has already validated ``js``.
    """
    if check:
        bad = validate(js, FoldConfig(theta=0, pair_policy=PairPolicy.ANY))
        if bad is not None:
            raise UsageError(f"structure is not valid: {bad}")
    loops: list[Loop] = []
    hybrid_owned: set[tuple[str, int]] = set()
    for run in _hybrid_runs(js):
        gaps: list[tuple[str, int, int]] = []
        for u, v in zip(run, run[1:]):
            if u.a + 1 <= v.a - 1:
                gaps.append(("R", u.a + 1, v.a - 1))
            if u.b + 1 <= v.b - 1:
                gaps.append(("S", u.b + 1, v.b - 1))
        for tag, lo, hi in gaps:
            hybrid_owned.update((tag, v) for v in range(lo, hi + 1))
        loops.append(Loop(LoopKind.HYBRID, (), tuple(run), tuple(sorted(gaps))))
    for tag, arcs in (("R", js.r_arcs), ("S", js.s_arcs)):
        for arc in arcs:
            loops.append(_closing_loop(js, tag, arcs, arc, hybrid_owned))
    loops.sort(key=loop_sort_key)
    return loops


def external_unpaired(js: JointStructure) -> tuple[tuple[str, int, int], ...]:
    """Top-level unpaired intervals: vertices under no interior arc, no bond, no hybrid gap."""
    owned: set[tuple[str, int]] = set()
    for loop in loops_of(js):
        for tag, lo, hi in loop.unpaired:
            owned.update((tag, v) for v in range(lo, hi + 1))
    out: list[tuple[str, int, int]] = []
    for tag, length, arcs, end in (
        ("R", js.n, js.r_arcs, lambda e: e.a),
        ("S", js.m, js.s_arcs, lambda e: e.b),
    ):
        endpoints = {p for a in arcs for p in (a.a, a.b)} | {end(e) for e in js.ext_arcs}
        covered = lambda v: any(a.a < v < a.b for a in arcs)
        free = [
            v
            for v in range(1, length + 1)
            if v not in endpoints and not covered(v) and (tag, v) not in owned
        ]
        out.extend(_intervals(free, tag))
    return tuple(out)


def loop_energy(loop: Loop, m: EnergyModel) -> float:
    """Free-energy contribution of one loop under the model."""
    if loop.kind is LoopKind.HAIRPIN:
        arc = loop.closing[0]
        return m.hairpin_energy(arc.a, arc.b)
    if loop.kind is LoopKind.INTERIOR:
        arc, kid = loop.closing[0], loop.members[0]
        return m.interior_energy(arc.a, arc.b, kid.a, kid.b)
    if loop.kind is LoopKind.MULTI:
        return m.multi_close + m.multi_branch * (loop.t + 1) + m.multi_unpaired * loop.c2
    if loop.kind is LoopKind.KISSING:
        return m.kissing_close + m.kissing_branch * (loop.t + 1) + m.kissing_unpaired * loop.c2
    total = 0.0
    for u, v in zip(loop.members, loop.members[1:]):
        total += m.hybrid_gap_energy(v.a - u.a - 1, v.b - u.b - 1)
    return m.hybrid_init + m.hybrid_scale * total


def structure_energy(js: JointStructure, m: EnergyModel) -> float:
    """Additive free energy: the sum of loop energies in canonical order."""
    total = 0.0
    for loop in loops_of(js):
        total += loop_energy(loop, m)
    return total


def boltzmann(js: JointStructure, m: EnergyModel) -> float:
    """Boltzmann weight exp(-F/kT); exactly 1.0 for every structure in the unit model."""
    f = structure_energy(js, m)
    return 1.0 if f == 0.0 else math.exp(-f / m.kT)


def features_of(js: JointStructure, check: bool = True) -> tuple[float, ...]:
    """Model-independent loop statistics; energy = dot(features, model.feature_coefficients())."""
    f = [0.0] * FEATURE_COUNT
    for loop in loops_of(js, check=check):
        if loop.kind is LoopKind.HAIRPIN:
            f[0] += 1.0
            f[1] += loop.unpaired_total
        elif loop.kind is LoopKind.INTERIOR:
            f[2] += 1.0
            f[3] += loop.unpaired_total
        elif loop.kind is LoopKind.MULTI:
            f[4] += 1.0
            f[5] += loop.t + 1
            f[6] += loop.c2
        elif loop.kind is LoopKind.KISSING:
            f[7] += 1.0
            f[8] += loop.t + 1
            f[9] += loop.c2
        else:
            f[10] += 1.0
            f[11] += loop.unpaired_total
    return tuple(f)
