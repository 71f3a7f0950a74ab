"""Energy-layer tests: loop extraction, additive energies, Boltzmann weights, parameter files."""

import math

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from jointfold.model import FoldConfig, JointStructure, PairPolicy, UsageError, earc, is_valid, rarc, sarc
from jointfold.energy import (
    EnergyModel,
    Loop,
    LoopKind,
    boltzmann,
    external_unpaired,
    features_of,
    loop_energy,
    loops_of,
    structure_energy,
)


def build(n, m, r=(), s=(), ext=()):
    return JointStructure.build(n, m, r, s, ext)


# Distinct primes keep every coefficient separable in energy assertions.
PROBE = EnergyModel(
    kT=1.0,
    theta=0,
    hairpin_const=2.0,
    hairpin_per_base=3.0,
    interior_const=5.0,
    interior_per_base=7.0,
    multi_close=11.0,
    multi_branch=13.0,
    multi_unpaired=17.0,
    kissing_close=19.0,
    kissing_branch=23.0,
    kissing_unpaired=29.0,
    hybrid_init=31.0,
    hybrid_scale=0.5,
    hybrid_gap_per_base=37.0,
)


class TestLoopsOf:
    def test_single_hairpin(self):
        loops = loops_of(build(5, 0, r=[(1, 5)]))
        assert [l.kind for l in loops] == [LoopKind.HAIRPIN]
        assert loops[0].closing == (rarc(1, 5),)
        assert loops[0].unpaired == (("R", 2, 4),)

    def test_minimal_hybrid(self):
        loops = loops_of(build(2, 2, ext=[(1, 1), (2, 2)]))
        assert [l.kind for l in loops] == [LoopKind.HYBRID]
        assert loops[0].members == (earc(1, 1), earc(2, 2))
        assert loops[0].unpaired == ()

    def test_kissing_from_single_covered_bond(self):
        loops = loops_of(build(10, 2, r=[(1, 10)], ext=[(3, 2)]))
        assert [l.kind for l in loops] == [LoopKind.KISSING]
        k = loops[0]
        assert k.t == 0 and k.c2 == 7
        assert k.members == (earc(3, 2),)

    def test_interior_loop_and_stack(self):
        loops = loops_of(build(8, 0, r=[(1, 8), (3, 6)]))
        kinds = {l.closing[0]: l.kind for l in loops}
        assert kinds[rarc(1, 8)] is LoopKind.INTERIOR
        assert kinds[rarc(3, 6)] is LoopKind.HAIRPIN
        stack = loops_of(build(6, 0, r=[(1, 6), (2, 5)]))
        assert {l.kind for l in stack} == {LoopKind.INTERIOR, LoopKind.HAIRPIN}

    def test_multi_loop(self):
        js = build(11, 0, r=[(1, 11), (2, 4), (5, 7)])
        loops = loops_of(js)
        multi = next(l for l in loops if l.kind is LoopKind.MULTI)
        assert multi.t == 2 and multi.c2 == 3
        assert multi.members == (rarc(2, 4), rarc(5, 7))

    def test_hybrid_gap_vertices_leave_the_enclosing_loop(self):
        # Both bonds hang below one R arc with an arc-free gap at R3: the gap
        # vertex belongs to the hybrid, so the kissing loop keeps only R5.
        js = build(6, 2, r=[(1, 6)], ext=[(2, 1), (4, 2)])
        loops = loops_of(js)
        kiss = next(l for l in loops if l.kind is LoopKind.KISSING)
        hyb = next(l for l in loops if l.kind is LoopKind.HYBRID)
        assert hyb.unpaired == (("R", 3, 3),)
        assert kiss.c2 == 1 and kiss.unpaired == (("R", 5, 5),)

    def test_blocked_gap_breaks_the_run(self):
        # An S hairpin inside the S-side gap splits the two bonds into
        # singleton runs: no hybrid loop forms.
        js = build(3, 4, s=[(2, 3)], ext=[(1, 1), (3, 4)])
        loops = loops_of(js)
        assert [l.kind for l in loops] == [LoopKind.HAIRPIN]

    def test_runs_of_three(self):
        loops = loops_of(build(3, 3, ext=[(1, 1), (2, 2), (3, 3)]))
        assert [l.kind for l in loops] == [LoopKind.HYBRID]
        assert len(loops[0].members) == 3

    def test_invalid_structure_rejected(self):
        with pytest.raises(UsageError):
            loops_of(build(4, 0, r=[(1, 3), (2, 4)]))

    def test_deterministic_order(self):
        js = build(6, 6, r=[(1, 5)], s=[(3, 6)], ext=[(4, 4)])
        assert loops_of(js) == loops_of(js)


class TestStructureEnergy:
    def test_empty_structure(self):
        assert structure_energy(build(4, 3), PROBE) == 0.0

    def test_single_hairpin_energy(self):
        assert structure_energy(build(5, 0, r=[(1, 5)]), PROBE) == 2.0 + 3.0 * 3

    def test_interior_loop_energy(self):
        # Gaps of 1 and 2 around the inner arc.
        js = build(9, 0, r=[(1, 9), (3, 6)])
        inner = 2.0 + 3.0 * 2  # hairpin (3,6)
        outer = 5.0 + 7.0 * 3
        assert structure_energy(js, PROBE) == pytest.approx(inner + outer, abs=0)

    def test_multi_loop_energy(self):
        js = build(11, 0, r=[(1, 11), (2, 4), (5, 7)])
        hairpins = 2 * (2.0 + 3.0 * 1)
        multi = 11.0 + 13.0 * 3 + 17.0 * 3
        assert structure_energy(js, PROBE) == pytest.approx(hairpins + multi, abs=0)

    def test_kissing_and_hybrid_energy(self):
        js = build(6, 2, r=[(1, 6)], ext=[(2, 1), (4, 2)])
        kissing = 19.0 + 23.0 * 1 + 29.0 * 1
        hybrid = 31.0 + 0.5 * 37.0 * 1
        assert structure_energy(js, PROBE) == pytest.approx(kissing + hybrid, abs=0)

    def test_hybrid_charged_once_per_run(self):
        three = structure_energy(build(3, 3, ext=[(1, 1), (2, 2), (3, 3)]), PROBE)
        two = structure_energy(build(2, 2, ext=[(1, 1), (2, 2)]), PROBE)
        assert three == two == 31.0  # no gaps, init only, regardless of run length

    def test_additivity_is_exact(self):
        js = build(11, 2, r=[(1, 11), (2, 4), (5, 7)], ext=[(9, 1)])
        total = 0.0
        for loop in loops_of(js):
            total += loop_energy(loop, PROBE)
        assert structure_energy(js, PROBE) == total


class TestBoltzmann:
    def test_unit_model_weight_is_exactly_one(self):
        unit = EnergyModel.unit(theta=0)
        for js in (
            build(3, 3),
            build(5, 0, r=[(1, 5)]),
            build(2, 2, ext=[(1, 1), (2, 2)]),
            build(6, 2, r=[(1, 6)], ext=[(2, 1), (4, 2)]),
        ):
            assert boltzmann(js, unit) == 1.0

    def test_hairpin_at_kt(self):
        m = EnergyModel(hairpin_const=1.0, theta=3)
        assert boltzmann(build(5, 0, r=[(1, 5)]), m) == pytest.approx(math.exp(-1.0), rel=1e-15)
        assert boltzmann(build(5, 0, r=[(1, 5)]), m) == pytest.approx(0.367879441, abs=1e-9)

    def test_matches_energy_exponential(self):
        js = build(6, 2, r=[(1, 6)], ext=[(2, 1), (4, 2)])
        m = EnergyModel(kT=0.7, theta=0, kissing_close=1.5, hybrid_init=-0.3)
        assert boltzmann(js, m) == math.exp(-structure_energy(js, m) / 0.7)


class TestFeatures:
    def test_features_reproduce_energy(self):
        for js in (
            build(5, 0, r=[(1, 5)]),
            build(9, 0, r=[(1, 9), (3, 6)]),
            build(11, 0, r=[(1, 11), (2, 4), (5, 7)]),
            build(6, 2, r=[(1, 6)], ext=[(2, 1), (4, 2)]),
            build(3, 3, ext=[(1, 1), (2, 2), (3, 3)]),
            build(6, 6, r=[(1, 5)], s=[(3, 6)], ext=[(4, 4)]),
        ):
            feats = features_of(js)
            coeffs = PROBE.feature_coefficients()
            dot = sum(f * c for f, c in zip(feats, coeffs))
            assert dot == pytest.approx(structure_energy(js, PROBE), rel=1e-12, abs=1e-12)


class TestParameterFile:
    def test_roundtrip_of_all_keys(self):
        text = """
        # sample parameter set
        kT = 0.8
        theta = 1
        alpha1 = 1.0
        alpha2 = 2.0
        alpha3 = 3.0
        beta1 = 4.0   # kissing close
        beta2 = 5.0
        beta3 = 6.0
        sigma0 = 7.0
        sigma = 0.25
        gamma = 8.0
        hairpin_const = 9.0
        hairpin_per_base = 10.0
        interior_const = 11.0
        interior_per_base = 12.0
        pair_policy = canonical
        """
        m = EnergyModel.from_text(text)
        assert m.kT == 0.8 and m.theta == 1
        assert (m.multi_close, m.multi_branch, m.multi_unpaired) == (1.0, 2.0, 3.0)
        assert (m.kissing_close, m.kissing_branch, m.kissing_unpaired) == (4.0, 5.0, 6.0)
        assert (m.hybrid_init, m.hybrid_scale, m.hybrid_gap_per_base) == (7.0, 0.25, 8.0)
        assert (m.hairpin_const, m.hairpin_per_base) == (9.0, 10.0)
        assert (m.interior_const, m.interior_per_base) == (11.0, 12.0)
        assert m.pair_policy is PairPolicy.CANONICAL

    def test_missing_keys_default_to_unit_model(self):
        assert EnergyModel.from_text("") == EnergyModel()

    def test_unknown_key_is_error(self):
        with pytest.raises(UsageError):
            EnergyModel.from_text("delta = 3")

    def test_malformed_line_is_error(self):
        with pytest.raises(UsageError):
            EnergyModel.from_text("kT 0.5")

    def test_invalid_values_are_errors(self):
        with pytest.raises(UsageError):
            EnergyModel.from_text("kT = hot")
        with pytest.raises(UsageError):
            EnergyModel.from_text("kT = -1")
        with pytest.raises(UsageError):
            EnergyModel.from_text("sigma = 0")
        with pytest.raises(UsageError):
            EnergyModel.from_text("sigma = 1.5")
        with pytest.raises(UsageError):
            EnergyModel.from_text("theta = 2.5")


def _pairs(length, max_arcs):
    cands = [(i, j) for i in range(1, length + 1) for j in range(i + 1, length + 1)]
    if not cands:
        return st.just([])
    return st.lists(st.sampled_from(cands), unique=True, max_size=max_arcs)


def _ext(n, m, max_arcs):
    cands = [(i, j) for i in range(1, n + 1) for j in range(1, m + 1)]
    if not cands:
        return st.just([])
    return st.lists(st.sampled_from(cands), unique=True, max_size=max_arcs)


@st.composite
def valid_structures(draw):
    n = draw(st.integers(0, 6))
    m = draw(st.integers(0, 6))
    js = build(n, m, r=draw(_pairs(n, 2)), s=draw(_pairs(m, 2)), ext=draw(_ext(n, m, 3)))
    assume(is_valid(js, FoldConfig(theta=0)))
    return js


class TestVertexAccounting:
    @given(valid_structures())
    def test_partition_of_vertices(self, js):
        # Every vertex is an arc endpoint XOR lies in exactly one unpaired
        # interval (loop-owned or top-level).
        seen = {}
        for loop in loops_of(js):
            for tag, lo, hi in loop.unpaired:
                for v in range(lo, hi + 1):
                    assert (tag, v) not in seen
                    seen[(tag, v)] = loop.kind
        for tag, lo, hi in external_unpaired(js):
            for v in range(lo, hi + 1):
                assert (tag, v) not in seen
                seen[(tag, v)] = "external"
        endpoints = set()
        for arc in js.r_arcs:
            endpoints.update({("R", arc.a), ("R", arc.b)})
        for arc in js.s_arcs:
            endpoints.update({("S", arc.a), ("S", arc.b)})
        for arc in js.ext_arcs:
            endpoints.update({("R", arc.a), ("S", arc.b)})
        assert not endpoints & set(seen)
        everything = {("R", v) for v in range(1, js.n + 1)} | {("S", v) for v in range(1, js.m + 1)}
        assert endpoints | set(seen) == everything

    @given(valid_structures())
    def test_every_arc_appears_in_loops(self, js):
        closing = {l.closing[0] for l in loops_of(js) if l.closing}
        assert closing == set(js.r_arcs) | set(js.s_arcs)
        in_hybrids = {a for l in loops_of(js) if l.kind is LoopKind.HYBRID for a in l.members}
        assert in_hybrids <= set(js.ext_arcs)

    @given(valid_structures())
    def test_unit_weight_everywhere(self, js):
        assert boltzmann(js, EnergyModel.unit(theta=0)) == 1.0
