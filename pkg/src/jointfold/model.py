"""Core data model: strands, arcs, joint structures, validity, and arc relations.

Conventions used throughout the package:

* Indices are 1-based.  ``R[1]`` is the 5' end of the first strand; ``S[1]`` is
  the 3' end of the second strand (the two strands face each other), so exterior
  bonds drawn left-to-right connect increasing indices on both strands.
* Empty intervals follow ``seg(i, i-1) = empty``; strand lengths may be zero.
* ``theta`` (minimum hairpin gap) constrains only interior arcs that close a
  hairpin, i.e. arcs with no other arc endpoint strictly inside their span on
  the same strand.  Exterior bonds are never gap-constrained.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional

__all__ = [
    "UsageError",
    "PairPolicy",
    "FoldConfig",
    "Strand",
    "ArcKind",
    "Arc",
    "rarc",
    "sarc",
    "earc",
    "JointStructure",
    "ViolationKind",
    "Violation",
    "AncestorInfo",
    "SubsumeRelation",
    "pair_admissible",
    "validate",
    "is_valid",
    "ancestors",
    "subsumes",
    "r_descendants",
    "s_descendants",
    "closes_hairpin",
    "min_hairpin_gap",
    "NO_HAIRPIN",
    "NUCLEOTIDES",
    "WILDCARD",
    "CANONICAL_PAIRS",
    "DEFAULT_MIN_HAIRPIN_GAP",
]

NUCLEOTIDES = "ACGUN"
WILDCARD = "N"
CANONICAL_PAIRS = frozenset(
    {("A", "U"), ("U", "A"), ("C", "G"), ("G", "C"), ("G", "U"), ("U", "G")}
)
DEFAULT_MIN_HAIRPIN_GAP = 3


class UsageError(ValueError):
    """API misuse (out-of-range index, unknown parameter, ...) — not a structural Violation."""


class PairPolicy(Enum):
    """Which nucleotide pairs may form a bond (identical rule for interior and exterior arcs)."""

    ANY = "any"
    CANONICAL = "canonical"


@dataclass(frozen=True, slots=True)
class FoldConfig:
    """Structural configuration: minimum hairpin gap and pairing policy."""

    theta: int = DEFAULT_MIN_HAIRPIN_GAP
    pair_policy: PairPolicy = PairPolicy.ANY

    def __post_init__(self) -> None:
        if self.theta < 0:
            raise UsageError(f"theta must be >= 0, got {self.theta}")


@dataclass(frozen=True, slots=True)
class Strand:
    """One RNA strand: a name tag and its bases (1-based access via ``base(i)``)."""

    name: str
    bases: str

    def __post_init__(self) -> None:
        object.__setattr__(self, "bases", self.bases.upper())
        bad = set(self.bases) - set(NUCLEOTIDES)
        if bad:
            raise UsageError(f"invalid nucleotide(s) {sorted(bad)} in strand {self.name!r}")

    @classmethod
    def unspecified(cls, name: str, length: int) -> "Strand":
        """An all-wildcard strand of the given length (used for pure counting)."""
        if length < 0:
            raise UsageError(f"strand length must be >= 0, got {length}")
        return cls(name, WILDCARD * length)

    @property
    def length(self) -> int:
        return len(self.bases)

    def base(self, i: int) -> str:
        """1-based nucleotide access."""
        if not 1 <= i <= len(self.bases):
            raise UsageError(f"index {i} out of range for strand {self.name!r} (length {len(self.bases)})")
        return self.bases[i - 1]


class ArcKind(Enum):
    R_INTERIOR = "R"
    S_INTERIOR = "S"
    EXTERIOR = "RS"


@dataclass(frozen=True, slots=True, order=True)
class Arc:
    """A single bond.

    Interior arcs live on one strand with ``a < b``; exterior arcs connect
    ``R[a]`` with ``S[b]``.
    """

    kind: ArcKind
    a: int
    b: int

    def __post_init__(self) -> None:
        if self.a < 1 or self.b < 1:
            raise UsageError(f"arc endpoints must be >= 1, got ({self.a}, {self.b})")
        if self.kind is not ArcKind.EXTERIOR and not self.a < self.b:
            raise UsageError(f"interior arc requires a < b, got ({self.a}, {self.b})")

    def __str__(self) -> str:  # compact witness rendering
        if self.kind is ArcKind.R_INTERIOR:
            return f"(R{self.a},R{self.b})"
        if self.kind is ArcKind.S_INTERIOR:
            return f"(S{self.a},S{self.b})"
        return f"(R{self.a},S{self.b})"


def rarc(i: int, j: int) -> Arc:
    """Interior arc (R[i], R[j])."""
    return Arc(ArcKind.R_INTERIOR, i, j)


def sarc(h: int, l: int) -> Arc:
    """Interior arc (S[h], S[l])."""
    return Arc(ArcKind.S_INTERIOR, h, l)


def earc(i: int, j: int) -> Arc:
    """Exterior bond (R[i], S[j])."""
    return Arc(ArcKind.EXTERIOR, i, j)


def _canonical(arcs: Iterable[Arc], kind: ArcKind, label: str) -> tuple[Arc, ...]:
    out = tuple(sorted(set(arcs)))
    for arc in out:
        if arc.kind is not kind:
            raise UsageError(f"{label} may only contain {kind.name} arcs, got {arc}")
    return out


@dataclass(frozen=True, slots=True)
class JointStructure:
    """Two strands plus three arc sets, stored in canonical sorted order (hashable value)."""

    r: Strand
    s: Strand
    r_arcs: tuple[Arc, ...] = ()
    s_arcs: tuple[Arc, ...] = ()
    ext_arcs: tuple[Arc, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "r_arcs", _canonical(self.r_arcs, ArcKind.R_INTERIOR, "r_arcs"))
        object.__setattr__(self, "s_arcs", _canonical(self.s_arcs, ArcKind.S_INTERIOR, "s_arcs"))
        object.__setattr__(self, "ext_arcs", _canonical(self.ext_arcs, ArcKind.EXTERIOR, "ext_arcs"))

    @classmethod
    def build(
        cls,
        n: int,
        m: int,
        r_pairs: Iterable[tuple[int, int]] = (),
        s_pairs: Iterable[tuple[int, int]] = (),
        ext_pairs: Iterable[tuple[int, int]] = (),
        seq_r: Optional[str] = None,
        seq_s: Optional[str] = None,
    ) -> "JointStructure":
        """Convenience constructor from plain index pairs (wildcard strands by default)."""
        r = Strand("R", seq_r) if seq_r is not None else Strand.unspecified("R", n)
        s = Strand("S", seq_s) if seq_s is not None else Strand.unspecified("S", m)
        if r.length != n or s.length != m:
            raise UsageError("sequence length does not match the declared strand length")
        return cls(
            r,
            s,
            tuple(rarc(i, j) for i, j in r_pairs),
            tuple(sarc(h, l) for h, l in s_pairs),
            tuple(earc(i, j) for i, j in ext_pairs),
        )

    @property
    def n(self) -> int:
        return self.r.length

    @property
    def m(self) -> int:
        return self.s.length

    @property
    def all_arcs(self) -> tuple[Arc, ...]:
        return self.ext_arcs + self.r_arcs + self.s_arcs


class ViolationKind(Enum):
    VERTEX_REUSE = "vertex reuse"
    INTERIOR_CROSSING = "interior crossing"
    EXTERNAL_PSEUDOKNOT = "external pseudoknot"
    ZIG_ZAG = "zig-zag"
    HAIRPIN_TOO_SMALL = "hairpin too small"
    INADMISSIBLE_PAIR = "inadmissible pair"


@dataclass(frozen=True, slots=True)
class Violation:
    """First structural defect found, with the offending arc(s) as witness."""

    kind: ViolationKind
    witness: tuple[Arc, ...]

    def __str__(self) -> str:
        arcs = ", ".join(str(a) for a in self.witness)
        return f"{self.kind.value}: {arcs}"


@dataclass(frozen=True, slots=True)
class AncestorInfo:
    """Interior arcs covering one exterior bond, innermost first, per strand."""

    r_ancestors: tuple[Arc, ...]
    s_ancestors: tuple[Arc, ...]
    r_parent: Optional[Arc]
    s_parent: Optional[Arc]


class SubsumeRelation(Enum):
    R_SUBSUMES_S = "R subsumes S"
    S_SUBSUMES_R = "S subsumes R"
    EQUIVALENT = "equivalent"
    NEITHER = "neither"
    INDEPENDENT = "independent"


def pair_admissible(x: str, y: str, policy: PairPolicy) -> bool:
    """Whether nucleotides x and y may bond; the wildcard pairs with anything."""
    if policy is PairPolicy.ANY:
        return True
    if x == WILDCARD or y == WILDCARD:
        return True
    return (x, y) in CANONICAL_PAIRS


def r_descendants(js: JointStructure, arc: Arc) -> tuple[Arc, ...]:
    """Exterior bonds whose R endpoint lies strictly inside the given R arc."""
    return tuple(e for e in js.ext_arcs if arc.a < e.a < arc.b)


def s_descendants(js: JointStructure, arc: Arc) -> tuple[Arc, ...]:
    """Exterior bonds whose S endpoint lies strictly inside the given S arc."""
    return tuple(e for e in js.ext_arcs if arc.a < e.b < arc.b)


def subsumes(js: JointStructure, r_arc: Arc, s_arc: Arc) -> SubsumeRelation:
    """Classify the dependency between one R arc and one S arc.

    The arcs are independent when they share no exterior descendant.  Otherwise
    an arc is subsumed in the other when every one of its own exterior
    descendants has its opposite endpoint strictly inside the other arc;
    equivalent means subsumed both ways.
    """
    if r_arc not in js.r_arcs:
        raise UsageError(f"{r_arc} is not an R arc of the structure")
    if s_arc not in js.s_arcs:
        raise UsageError(f"{s_arc} is not an S arc of the structure")
    dr = r_descendants(js, r_arc)
    ds = s_descendants(js, s_arc)
    if not set(dr) & set(ds):
        return SubsumeRelation.INDEPENDENT
    r_inside_s = all(s_arc.a < e.b < s_arc.b for e in dr)
    s_inside_r = all(r_arc.a < e.a < r_arc.b for e in ds)
    if r_inside_s and s_inside_r:
        return SubsumeRelation.EQUIVALENT
    if s_inside_r:
        return SubsumeRelation.R_SUBSUMES_S
    if r_inside_s:
        return SubsumeRelation.S_SUBSUMES_R
    return SubsumeRelation.NEITHER


def ancestors(js: JointStructure, e: Arc) -> AncestorInfo:
    """All interior arcs covering the exterior bond ``e``, innermost first, with parents."""
    if e not in js.ext_arcs:
        raise UsageError(f"{e} is not an exterior bond of the structure")
    by_nesting = lambda arc: (arc.b - arc.a, arc.a)
    a_r = tuple(sorted((arc for arc in js.r_arcs if arc.a < e.a < arc.b), key=by_nesting))
    a_s = tuple(sorted((arc for arc in js.s_arcs if arc.a < e.b < arc.b), key=by_nesting))
    return AncestorInfo(a_r, a_s, a_r[0] if a_r else None, a_s[0] if a_s else None)


def _check_ranges(js: JointStructure) -> None:
    n, m = js.n, js.m
    for arc in js.r_arcs:
        if arc.b > n:
            raise UsageError(f"R arc {arc} exceeds strand length {n}")
    for arc in js.s_arcs:
        if arc.b > m:
            raise UsageError(f"S arc {arc} exceeds strand length {m}")
    for arc in js.ext_arcs:
        if arc.a > n or arc.b > m:
            raise UsageError(f"exterior bond {arc} exceeds strand lengths ({n}, {m})")


def _find_vertex_reuse(js: JointStructure) -> Optional[Violation]:
    used_r: dict[int, Arc] = {}
    used_s: dict[int, Arc] = {}
    for arc in js.ext_arcs:
        for used, v in ((used_r, arc.a), (used_s, arc.b)):
            if v in used:
                return Violation(ViolationKind.VERTEX_REUSE, (arc, used[v]))
            used[v] = arc
    for arcs, used in ((js.r_arcs, used_r), (js.s_arcs, used_s)):
        for arc in arcs:
            for v in (arc.a, arc.b):
                if v in used:
                    return Violation(ViolationKind.VERTEX_REUSE, (arc, used[v]))
                used[v] = arc
    return None


def _find_interior_crossing(js: JointStructure) -> Optional[Violation]:
    for arcs in (js.r_arcs, js.s_arcs):
        for k, outer in enumerate(arcs):
            for inner in arcs[k + 1 :]:
                if outer.a < inner.a < outer.b < inner.b:
                    return Violation(ViolationKind.INTERIOR_CROSSING, (outer, inner))
    return None


def _find_external_pseudoknot(js: JointStructure) -> Optional[Violation]:
    arcs = js.ext_arcs  # canonical order: increasing R endpoint
    for k, left in enumerate(arcs):
        for right in arcs[k + 1 :]:
            if right.b < left.b:
                return Violation(ViolationKind.EXTERNAL_PSEUDOKNOT, (left, right))
    return None


def _find_zig_zag(js: JointStructure) -> Optional[Violation]:
    for r_arc in js.r_arcs:
        for s_arc in js.s_arcs:
            if subsumes(js, r_arc, s_arc) is SubsumeRelation.NEITHER:
                return Violation(ViolationKind.ZIG_ZAG, (r_arc, s_arc))
    return None


def closes_hairpin(js: JointStructure, arc: Arc) -> bool:
    """True when no arc endpoint of any kind lies strictly inside ``arc`` on its strand."""
    if arc.kind is ArcKind.R_INTERIOR:
        own, ext_end = js.r_arcs, lambda e: e.a
    else:
        own, ext_end = js.s_arcs, lambda e: e.b
    for other in own:
        if other is not arc and (arc.a < other.a < arc.b or arc.a < other.b < arc.b):
            return False
    for e in js.ext_arcs:
        if arc.a < ext_end(e) < arc.b:
            return False
    return True


NO_HAIRPIN = 1 << 30


def min_hairpin_gap(js: JointStructure) -> int:
    """Smallest enclosed length over hairpin-closing arcs (NO_HAIRPIN when none exist).

    A structure that is valid at theta=0 is valid at theta iff
    ``min_hairpin_gap(js) >= theta``, since the gap rule binds only
    hairpin-closing arcs and hairpin-ness does not depend on theta.
    """
    gaps = [
        arc.b - arc.a - 1
        for arcs in (js.r_arcs, js.s_arcs)
        for arc in arcs
        if closes_hairpin(js, arc)
    ]
    return min(gaps) if gaps else NO_HAIRPIN


def _find_small_hairpin(js: JointStructure, theta: int) -> Optional[Violation]:
    for arcs in (js.r_arcs, js.s_arcs):
        for arc in arcs:
            if arc.b - arc.a - 1 < theta and closes_hairpin(js, arc):
                return Violation(ViolationKind.HAIRPIN_TOO_SMALL, (arc,))
    return None


def _find_inadmissible_pair(js: JointStructure, policy: PairPolicy) -> Optional[Violation]:
    for arc in js.ext_arcs:
        if not pair_admissible(js.r.base(arc.a), js.s.base(arc.b), policy):
            return Violation(ViolationKind.INADMISSIBLE_PAIR, (arc,))
    for arc in js.r_arcs:
        if not pair_admissible(js.r.base(arc.a), js.r.base(arc.b), policy):
            return Violation(ViolationKind.INADMISSIBLE_PAIR, (arc,))
    for arc in js.s_arcs:
        if not pair_admissible(js.s.base(arc.a), js.s.base(arc.b), policy):
            return Violation(ViolationKind.INADMISSIBLE_PAIR, (arc,))
    return None


def validate(js: JointStructure, config: FoldConfig = FoldConfig()) -> Optional[Violation]:
    """Return None when the structure is valid, else the first Violation found.

    Categories are scanned in a fixed order (vertex reuse, interior crossing,
    external pseudoknot, zig-zag, small hairpin, inadmissible pair); within a
    category, exterior bonds are scanned left-to-right, then R arcs, then S arcs.
    Out-of-range indices raise UsageError instead.
    """
    _check_ranges(js)
    return (
        _find_vertex_reuse(js)
        or _find_interior_crossing(js)
        or _find_external_pseudoknot(js)
        or _find_zig_zag(js)
        or _find_small_hairpin(js, config.theta)
        or _find_inadmissible_pair(js, config.pair_policy)
    )


def is_valid(js: JointStructure, config: FoldConfig = FoldConfig()) -> bool:
    """Shorthand for ``validate(js, config) is None``."""
    return validate(js, config) is None
