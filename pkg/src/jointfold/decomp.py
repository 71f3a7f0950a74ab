"""Tight substructures and the canonical decomposition tree of a joint structure.

A *tight* is the smallest ancestor-closed group of inter-strand bonds together
with every interior arc covering any of them; each valid structure splits
uniquely into an ordered sequence of tights and arc-free-of-bonds segments.
``decompose`` turns a structure into a canonical tree built from that split,
``recompose`` inverts it, and ``tree_energy`` evaluates the energy by walking
the tree — an independent route that must agree exactly with the flat
loop-decomposition sum.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterator, Optional

from jointfold.energy import (
    EnergyModel,
    Loop,
    LoopKind,
    _intervals,
    loop_energy,
    loop_sort_key,
)
from jointfold.model import (
    Arc,
    ArcKind,
    FoldConfig,
    JointStructure,
    PairPolicy,
    Strand,
    UsageError,
    validate,
)

__all__ = [
    "TightType",
    "NodeLabel",
    "TreeNode",
    "DecompositionTree",
    "SubStructure",
    "TightnessError",
    "classify_tight",
    "tight_of",
    "tight_partition",
    "is_double_tight",
    "decompose",
    "recompose",
    "tree_loops",
    "tree_energy",
]


class TightType(Enum):
    """What spans a tight: an R arc, an S arc, both, or a lone bond."""

    R_SPANNING = "r-spanning"
    S_SPANNING = "s-spanning"
    BOTH_SPANNING = "both-spanning"
    SINGLE_BOND = "single-bond"


class NodeLabel(Enum):
    """Node labels of decomposition trees.

    ``RIGHT_TIGHT`` and ``MULTI_BODY`` complete the label vocabulary but never
    appear in canonical trees produced by :func:`decompose`.
    """

    JOINT = "joint"
    TIGHT = "tight"
    DOUBLE_TIGHT = "double-tight"
    RIGHT_TIGHT = "right-tight"
    SEGMENT = "segment"
    EMPTY_SEGMENT = "empty-segment"
    CLOSED_SEGMENT = "closed-segment"
    INTERIOR_ARC = "interior-arc"
    EXTERIOR_ARC = "exterior-arc"
    MULTI_BODY = "multi-body"


class TightnessError(UsageError):
    """Raised when a substructure fails one of the tightness conditions."""


@dataclass(frozen=True, slots=True)
class TreeNode:
    """One decomposition-tree node; spans are inclusive and may be empty (lo > hi)."""

    label: NodeLabel
    r_span: Optional[tuple[int, int]]
    s_span: Optional[tuple[int, int]]
    case: str = ""
    children: tuple["TreeNode", ...] = ()
    tight_type: Optional[TightType] = None
    arc: Optional[Arc] = None


@dataclass(frozen=True, slots=True)
class DecompositionTree:
    """Canonical decomposition of one joint structure (strands kept for inversion)."""

    root: TreeNode
    r: Strand
    s: Strand

    def iter_nodes(self) -> Iterator[TreeNode]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))


@dataclass(frozen=True, slots=True)
class SubStructure:
    """Arcs of a structure restricted to one rectangle of strand positions."""

    r_span: tuple[int, int]
    s_span: tuple[int, int]
    r_arcs: tuple[Arc, ...]
    s_arcs: tuple[Arc, ...]
    ext_arcs: tuple[Arc, ...]

    @classmethod
    def from_structure(cls, js: JointStructure) -> "SubStructure":
        return cls((1, js.n), (1, js.m), js.r_arcs, js.s_arcs, js.ext_arcs)


def _restrict(sub: SubStructure, r_span: tuple[int, int], s_span: tuple[int, int]) -> SubStructure:
    r_lo, r_hi = r_span
    s_lo, s_hi = s_span
    return SubStructure(
        r_span,
        s_span,
        tuple(a for a in sub.r_arcs if r_lo <= a.a and a.b <= r_hi),
        tuple(a for a in sub.s_arcs if s_lo <= a.a and a.b <= s_hi),
        tuple(e for e in sub.ext_arcs if r_lo <= e.a <= r_hi and s_lo <= e.b <= s_hi),
    )


def _tight_members(sub: SubStructure, seed: Arc) -> tuple[set[Arc], set[Arc], set[Arc]]:
    """Close ``seed`` under covering-arc membership: bonds, R ancestors, S ancestors."""
    ext = {seed}
    while True:
        r_anc = {a for a in sub.r_arcs if any(a.a < e.a < a.b for e in ext)}
        s_anc = {a for a in sub.s_arcs if any(a.a < e.b < a.b for e in ext)}
        grown = ext | {
            e
            for e in sub.ext_arcs
            if any(a.a < e.a < a.b for a in r_anc) or any(a.a < e.b < a.b for a in s_anc)
        }
        if grown == ext:
            return ext, r_anc, s_anc
        ext = grown


def _tight_of_sub(sub: SubStructure, seed: Arc) -> SubStructure:
    ext, r_anc, s_anc = _tight_members(sub, seed)
    r_pts = [e.a for e in ext] + [p for a in r_anc for p in (a.a, a.b)]
    s_pts = [e.b for e in ext] + [p for a in s_anc for p in (a.a, a.b)]
    return _restrict(sub, (min(r_pts), max(r_pts)), (min(s_pts), max(s_pts)))


def _tight_partition_sub(sub: SubStructure) -> list[SubStructure]:
    parts: list[SubStructure] = []
    for e in sub.ext_arcs:
        if any(e in t.ext_arcs for t in parts):
            continue
        parts.append(_tight_of_sub(sub, e))
    return parts


def tight_of(js: JointStructure, bond: Arc) -> SubStructure:
    """The tight containing ``bond``: closure, ancestors, and everything their spans sweep."""
    if bond not in js.ext_arcs:
        raise UsageError(f"bond {bond} is not an exterior bond of the structure")
    return _tight_of_sub(SubStructure.from_structure(js), bond)


def tight_partition(js: JointStructure) -> list[SubStructure]:
    """All tights of ``js`` in left-to-right order (empty when there are no bonds)."""
    return _tight_partition_sub(SubStructure.from_structure(js))


def classify_tight(sub: SubStructure) -> TightType:
    """Type of a tight substructure; raises naming the violated condition otherwise."""
    if not sub.ext_arcs:
        raise TightnessError("not tight: contains no exterior bond")
    r_pts = [p for a in sub.r_arcs for p in (a.a, a.b)] + [e.a for e in sub.ext_arcs]
    s_pts = [p for a in sub.s_arcs for p in (a.a, a.b)] + [e.b for e in sub.ext_arcs]
    if (min(r_pts), max(r_pts)) != sub.r_span or (min(s_pts), max(s_pts)) != sub.s_span:
        raise TightnessError(
            f"not tight: spans {sub.r_span}/{sub.s_span} are not flush with the "
            f"content bounds ({min(r_pts)}, {max(r_pts)})/({min(s_pts)}, {max(s_pts)})"
        )
    if len(sub.ext_arcs) == 1 and not sub.r_arcs and not sub.s_arcs:
        return TightType.SINGLE_BOND
    r_spanning = any((a.a, a.b) == sub.r_span for a in sub.r_arcs)
    s_spanning = any((a.a, a.b) == sub.s_span for a in sub.s_arcs)
    if r_spanning and s_spanning:
        return TightType.BOTH_SPANNING
    if r_spanning:
        return TightType.R_SPANNING
    if s_spanning:
        return TightType.S_SPANNING
    parts = _tight_partition_sub(sub)
    if len(parts) > 1:
        raise TightnessError(f"not tight: splits into {len(parts)} tight components")
    only = parts[0]
    if (
        only.r_span != sub.r_span
        or only.s_span != sub.s_span
        or set(only.r_arcs) != set(sub.r_arcs)
        or set(only.s_arcs) != set(sub.s_arcs)
        or set(only.ext_arcs) != set(sub.ext_arcs)
    ):
        raise TightnessError("not tight: strictly contains the tight of its bonds")
    raise TightnessError(
        "not tight: no spanning arc on either strand "
        "(such a substructure only arises inside zig-zag structures)"
    )


def is_double_tight(sub: SubStructure) -> tuple[bool, Optional[tuple[int, int, int, int]]]:
    """Whether ``sub`` is two-or-more tights flush at all four corners.

    Returns ``(True, (a, c, b, d))`` where the leading tight ends at R position
    ``a`` / S position ``c`` and the trailing tight starts at ``b`` / ``d``.
    """
    parts = _tight_partition_sub(sub)
    if len(parts) < 2:
        return False, None
    first, last = parts[0], parts[-1]
    if first.r_span[0] != sub.r_span[0] or first.s_span[0] != sub.s_span[0]:
        return False, None
    if last.r_span[1] != sub.r_span[1] or last.s_span[1] != sub.s_span[1]:
        return False, None
    return True, (first.r_span[1], first.s_span[1], last.r_span[0], last.s_span[0])


# --- canonical tree construction ---------------------------------------------


def _empty_leaf(tag: str, lo: int, hi: int) -> TreeNode:
    span = (lo, hi)
    if tag == "R":
        return TreeNode(NodeLabel.EMPTY_SEGMENT, span, None)
    return TreeNode(NodeLabel.EMPTY_SEGMENT, None, span)


def _segment_tree(tag: str, lo: int, hi: int, arcs: tuple[Arc, ...]) -> TreeNode:
    """Decompose one strand interval holding no exterior bonds (cases c1/c2)."""
    inside = [a for a in arcs if lo <= a.a and a.b <= hi]
    if not inside:
        return _empty_leaf(tag, lo, hi)
    first = min(inside, key=lambda a: a.a)
    arc_leaf = (
        TreeNode(NodeLabel.INTERIOR_ARC, (first.a, first.b), None, arc=first)
        if tag == "R"
        else TreeNode(NodeLabel.INTERIOR_ARC, None, (first.a, first.b), arc=first)
    )
    closed_children = (arc_leaf, _segment_tree(tag, first.a + 1, first.b - 1, arcs))
    closed = (
        TreeNode(NodeLabel.CLOSED_SEGMENT, (first.a, first.b), None, "c2", closed_children)
        if tag == "R"
        else TreeNode(NodeLabel.CLOSED_SEGMENT, None, (first.a, first.b), "c2", closed_children)
    )
    children = (_empty_leaf(tag, lo, first.a - 1), closed, _segment_tree(tag, first.b + 1, hi, arcs))
    if tag == "R":
        return TreeNode(NodeLabel.SEGMENT, (lo, hi), None, "c1", children)
    return TreeNode(NodeLabel.SEGMENT, None, (lo, hi), "c1", children)


def _spanning_arc(arcs: tuple[Arc, ...], span: tuple[int, int]) -> Arc:
    for a in arcs:
        if (a.a, a.b) == span:
            return a
    raise AssertionError(f"no arc spans {span}")


def _tight_node(tsub: SubStructure) -> TreeNode:
    ttype = classify_tight(tsub)
    if ttype is TightType.SINGLE_BOND:
        bond = tsub.ext_arcs[0]
        leaf = TreeNode(NodeLabel.EXTERIOR_ARC, (bond.a, bond.a), (bond.b, bond.b), arc=bond)
        return TreeNode(
            NodeLabel.TIGHT, tsub.r_span, tsub.s_span, "b:single-bond", (leaf,), ttype
        )
    if ttype in (TightType.R_SPANNING, TightType.BOTH_SPANNING):
        i, j = tsub.r_span
        arc = _spanning_arc(tsub.r_arcs, tsub.r_span)
        remainder = _restrict(tsub, (i + 1, j - 1), tsub.s_span)
        parts = _tight_partition_sub(remainder)
        if ttype is TightType.BOTH_SPANNING or len(parts) == 1:
            core_sub = parts[0]
            assert len(parts) == 1 and core_sub.s_span == tsub.s_span
            core = _tight_node(core_sub)
            if ttype is TightType.BOTH_SPANNING:
                assert core.tight_type in (TightType.S_SPANNING, TightType.BOTH_SPANNING)
                case = "b:both-spanning"
            else:
                assert core.tight_type in (TightType.R_SPANNING, TightType.SINGLE_BOND)
                case = "b:r-spanning/core-tight"
        else:
            core = _chain_node(parts, remainder)
            case = "b:r-spanning/core-chain"
        p, q = core.r_span
        arc_leaf = TreeNode(NodeLabel.INTERIOR_ARC, (arc.a, arc.b), None, arc=arc)
        children = (
            arc_leaf,
            _segment_tree("R", i + 1, p - 1, remainder.r_arcs),
            core,
            _segment_tree("R", q + 1, j - 1, remainder.r_arcs),
        )
        return TreeNode(NodeLabel.TIGHT, tsub.r_span, tsub.s_span, case, children, ttype)
    h, l = tsub.s_span
    arc = _spanning_arc(tsub.s_arcs, tsub.s_span)
    remainder = _restrict(tsub, tsub.r_span, (h + 1, l - 1))
    parts = _tight_partition_sub(remainder)
    if len(parts) == 1:
        core_sub = parts[0]
        assert core_sub.r_span == tsub.r_span
        core = _tight_node(core_sub)
        assert core.tight_type in (TightType.S_SPANNING, TightType.SINGLE_BOND)
        case = "b:s-spanning/core-tight"
    else:
        core = _chain_node(parts, remainder)
        case = "b:s-spanning/core-chain"
    c, d = core.s_span
    arc_leaf = TreeNode(NodeLabel.INTERIOR_ARC, None, (arc.a, arc.b), arc=arc)
    children = (
        arc_leaf,
        _segment_tree("S", h + 1, c - 1, remainder.s_arcs),
        core,
        _segment_tree("S", d + 1, l - 1, remainder.s_arcs),
    )
    return TreeNode(NodeLabel.TIGHT, tsub.r_span, tsub.s_span, case, children, ttype)


def _chain_node(parts: list[SubStructure], remainder: SubStructure) -> TreeNode:
    """Two flush tights around an arbitrary middle region (the double-tight split)."""
    first, last = parts[0], parts[-1]
    r_span = (first.r_span[0], last.r_span[1])
    s_span = (first.s_span[0], last.s_span[1])
    middle = _restrict(
        remainder,
        (first.r_span[1] + 1, last.r_span[0] - 1),
        (first.s_span[1] + 1, last.s_span[0] - 1),
    )
    children = (_tight_node(first), _joint_tree(middle), _tight_node(last))
    return TreeNode(NodeLabel.DOUBLE_TIGHT, r_span, s_span, "dt", children)


def _joint_tree(sub: SubStructure) -> TreeNode:
    parts = _tight_partition_sub(sub)
    if not parts:
        if not sub.r_arcs and not sub.s_arcs:
            leaf = TreeNode(NodeLabel.EMPTY_SEGMENT, sub.r_span, sub.s_span)
            return TreeNode(NodeLabel.SEGMENT, sub.r_span, sub.s_span, "a1-empty", (leaf,))
        children = (
            _segment_tree("R", sub.r_span[0], sub.r_span[1], sub.r_arcs),
            _segment_tree("S", sub.s_span[0], sub.s_span[1], sub.s_arcs),
        )
        return TreeNode(NodeLabel.JOINT, sub.r_span, sub.s_span, "a1", children)
    last = parts[-1]
    if len(parts) == 1 and last.r_span == sub.r_span and last.s_span == sub.s_span:
        return _tight_node(last)
    assert all(e.a <= last.r_span[1] and e.b <= last.s_span[1] for e in sub.ext_arcs)
    prefix = _restrict(
        sub,
        (sub.r_span[0], last.r_span[0] - 1),
        (sub.s_span[0], last.s_span[0] - 1),
    )
    children = (
        _joint_tree(prefix),
        _tight_node(last),
        _segment_tree("R", last.r_span[1] + 1, sub.r_span[1], sub.r_arcs),
        _segment_tree("S", last.s_span[1] + 1, sub.s_span[1], sub.s_arcs),
    )
    return TreeNode(NodeLabel.JOINT, sub.r_span, sub.s_span, "a2", children)


def decompose(js: JointStructure) -> DecompositionTree:
    """The unique canonical decomposition tree of a valid structure."""
    bad = validate(js, FoldConfig(theta=0, pair_policy=PairPolicy.ANY))
    if bad is not None:
        raise UsageError(f"cannot decompose an invalid structure: {bad}")
    return DecompositionTree(_joint_tree(SubStructure.from_structure(js)), js.r, js.s)


def recompose(tree: DecompositionTree) -> JointStructure:
    """Rebuild the structure a tree describes; raises on malformed trees."""
    r_arcs: list[Arc] = []
    s_arcs: list[Arc] = []
    ext_arcs: list[Arc] = []
    internal = {
        NodeLabel.JOINT,
        NodeLabel.TIGHT,
        NodeLabel.DOUBLE_TIGHT,
        NodeLabel.SEGMENT,
        NodeLabel.CLOSED_SEGMENT,
    }
    stack = [tree.root]
    while stack:
        node = stack.pop()
        if node.label in (NodeLabel.INTERIOR_ARC, NodeLabel.EXTERIOR_ARC):
            if node.arc is None or node.children:
                raise UsageError(f"malformed tree: bad arc leaf {node.label.value}")
            if node.arc.kind is ArcKind.R_INTERIOR:
                r_arcs.append(node.arc)
            elif node.arc.kind is ArcKind.S_INTERIOR:
                s_arcs.append(node.arc)
            else:
                ext_arcs.append(node.arc)
            if (node.label is NodeLabel.EXTERIOR_ARC) != (node.arc.kind is ArcKind.EXTERIOR):
                raise UsageError("malformed tree: arc kind does not match leaf label")
        elif node.label is NodeLabel.EMPTY_SEGMENT:
            if node.children:
                raise UsageError("malformed tree: empty segment with children")
        elif node.label in internal:
            stack.extend(node.children)
        else:
            raise UsageError(f"malformed tree: label {node.label.value} never appears in canonical trees")
    return JointStructure(tree.r, tree.s, tuple(r_arcs), tuple(s_arcs), tuple(ext_arcs))


# --- energy by tree walk ------------------------------------------------------

_RUN, _INT, _EXT = 0, 1, 2


def _walk(node: TreeNode, emitted: list[tuple[Arc, str, list]]) -> tuple[list, list]:
    """Exposed content of ``node`` per strand; interior-arc loops pushed to ``emitted``."""
    label = node.label
    if label is NodeLabel.EMPTY_SEGMENT:
        r_toks = []
        s_toks = []
        if node.r_span is not None and node.r_span[0] <= node.r_span[1]:
            r_toks.append((_RUN, node.r_span[0], node.r_span[1]))
        if node.s_span is not None and node.s_span[0] <= node.s_span[1]:
            s_toks.append((_RUN, node.s_span[0], node.s_span[1]))
        return r_toks, s_toks
    if label is NodeLabel.EXTERIOR_ARC:
        return [(_EXT, node.arc)], [(_EXT, node.arc)]
    if label is NodeLabel.INTERIOR_ARC:
        tok = [(_INT, node.arc)]
        return (tok, []) if node.arc.kind is ArcKind.R_INTERIOR else ([], tok)
    if label is NodeLabel.CLOSED_SEGMENT:
        arc = node.children[0].arc
        inner_r, inner_s = _walk(node.children[1], emitted)
        if arc.kind is ArcKind.R_INTERIOR:
            emitted.append((arc, "R", inner_r))
            return [(_INT, arc)], []
        emitted.append((arc, "S", inner_s))
        return [], [(_INT, arc)]
    if label is NodeLabel.TIGHT and node.tight_type is not TightType.SINGLE_BOND:
        arc_leaf, left, core, right = node.children
        arc = arc_leaf.arc
        left_r, left_s = _walk(left, emitted)
        core_r, core_s = _walk(core, emitted)
        right_r, right_s = _walk(right, emitted)
        if node.tight_type in (TightType.R_SPANNING, TightType.BOTH_SPANNING):
            emitted.append((arc, "R", left_r + core_r + right_r))
            return [(_INT, arc)], core_s
        emitted.append((arc, "S", left_s + core_s + right_s))
        return core_r, [(_INT, arc)]
    # single-bond tights, joints, double-tights, segments: concatenate children
    r_toks = []
    s_toks = []
    for child in node.children:
        child_r, child_s = _walk(child, emitted)
        r_toks += child_r
        s_toks += child_s
    return r_toks, s_toks


def tree_loops(tree: DecompositionTree) -> list[Loop]:
    """Loops read off the decomposition tree, in the same canonical order as ``loops_of``."""
    emitted: list[tuple[Arc, str, list]] = []
    root_r, root_s = _walk(tree.root, emitted)
    seqs = {"R": [toks for _, tag, toks in emitted if tag == "R"] + [root_r],
            "S": [toks for _, tag, toks in emitted if tag == "S"] + [root_s]}
    linked: dict[str, set[tuple[Arc, Arc]]] = {"R": set(), "S": set()}
    bonds: set[Arc] = set()
    for tag in ("R", "S"):
        for toks in seqs[tag]:
            prev = None
            for tok in toks:
                if tok[0] == _EXT:
                    bonds.add(tok[1])
                    if prev is not None:
                        linked[tag].add((prev, tok[1]))
                    prev = tok[1]
                elif tok[0] == _INT:
                    prev = None
    both = linked["R"] & linked["S"]
    ext = sorted(bonds)
    loops: list[Loop] = []
    owned: set[tuple[str, int]] = set()
    start = 0
    for k in range(len(ext)):
        if k + 1 == len(ext) or (ext[k], ext[k + 1]) not in both:
            if k + 1 - start >= 2:
                run = tuple(ext[start : k + 1])
                gaps: list[tuple[str, int, int]] = []
                for u, v in zip(run, run[1:]):
                    if u.a + 1 <= v.a - 1:
                        gaps.append(("R", u.a + 1, v.a - 1))
                    if u.b + 1 <= v.b - 1:
                        gaps.append(("S", u.b + 1, v.b - 1))
                for tag, lo, hi in gaps:
                    owned.update((tag, x) for x in range(lo, hi + 1))
                loops.append(Loop(LoopKind.HYBRID, (), run, tuple(sorted(gaps))))
            start = k + 1
    for arc, tag, toks in emitted:
        kids = [tok[1] for tok in toks if tok[0] == _INT]
        ext_kids = [tok[1] for tok in toks if tok[0] == _EXT]
        own = [
            x
            for tok in toks
            if tok[0] == _RUN
            for x in range(tok[1], tok[2] + 1)
            if (tag, x) not in owned
        ]
        members = tuple(sorted(kids)) + tuple(sorted(ext_kids))
        if not members:
            loops.append(Loop(LoopKind.HAIRPIN, (arc,), (), _intervals(own, tag)))
        elif not ext_kids and len(kids) == 1:
            loops.append(Loop(LoopKind.INTERIOR, (arc,), members, _intervals(own, tag)))
        else:
            kind = LoopKind.MULTI if not ext_kids else LoopKind.KISSING
            loops.append(
                Loop(kind, (arc,), members, _intervals(own, tag), t=len(kids), c2=len(own))
            )
    loops.sort(key=loop_sort_key)
    return loops


def tree_energy(tree: DecompositionTree, model: EnergyModel) -> float:
    """Total energy summed over the tree's loops in canonical order."""
    return sum(loop_energy(loop, model) for loop in tree_loops(tree))
