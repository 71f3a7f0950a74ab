"""Oracle tests: enumeration fixtures, tier cross-checks, brute sums and probabilities."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jointfold.energy import EnergyModel, boltzmann, features_of, structure_energy
from jointfold.model import FoldConfig, UsageError, validate
from jointfold.oracle import (
    EnumConfig,
    all_subset_structures,
    brute_bpp,
    brute_partition,
    clear_cache,
    count,
    enumerate_structures,
)


def arcs_key(js):
    return (
        tuple((a.a, a.b) for a in js.r_arcs),
        tuple((a.a, a.b) for a in js.s_arcs),
        tuple((a.a, a.b) for a in js.ext_arcs),
    )


class TestCounts:
    @pytest.mark.parametrize(
        "n,m,theta,expected",
        [
            (1, 0, 3, 1),
            (1, 1, 3, 2),
            (1, 1, 0, 2),
            (2, 1, 1, 3),
            (2, 1, 0, 4),
            (5, 0, 3, 2),
            (0, 0, 0, 1),
            (0, 0, 3, 1),
            # frozen regression anchors
            (2, 2, 0, 9),
            (3, 3, 0, 62),
            (3, 3, 1, 30),
            (4, 4, 0, 498),
            (4, 4, 1, 214),
            (4, 4, 3, 163),
            (5, 5, 0, 4490),
            (5, 5, 3, 1165),
            (7, 0, 0, 127),
            (7, 0, 1, 37),
            (7, 0, 3, 8),
            (0, 7, 3, 8),
            (6, 3, 1, 569),
        ],
    )
    def test_frozen_counts(self, n, m, theta, expected):
        assert count(EnumConfig(n, m, theta=theta)) == expected

    def test_single_strand_theta0_is_noncrossing_set_count(self):
        # With no gap rule, one strand of length L has the classic noncrossing
        # partial-matching counts: 1, 1, 2, 4, 9, 21, 51, 127.
        expected = [1, 1, 2, 4, 9, 21, 51, 127]
        got = [count(EnumConfig(L, 0, theta=0)) for L in range(8)]
        assert got == expected

    def test_mirror_symmetry(self):
        for theta in (0, 1, 3):
            assert count(EnumConfig(5, 3, theta=theta)) == count(EnumConfig(3, 5, theta=theta))


class TestEnumerate:
    def test_two_structures_at_1x1(self):
        got = [arcs_key(js) for js in enumerate_structures(EnumConfig(1, 1, theta=0))]
        assert ((), (), ()) in got and ((), (), ((1, 1),)) in got
        assert len(got) == 2

    def test_exact_stream_for_2x1(self):
        got = {arcs_key(js) for js in enumerate_structures(EnumConfig(2, 1, theta=1))}
        assert got == {((), (), ()), ((), (), ((1, 1),)), ((), (), ((2, 1),))}

    def test_no_duplicates(self):
        seen = [arcs_key(js) for js in enumerate_structures(EnumConfig(4, 3, theta=0))]
        assert len(seen) == len(set(seen))

    def test_deterministic_order(self):
        a = [arcs_key(js) for js in enumerate_structures(EnumConfig(4, 4, theta=1))]
        b = [arcs_key(js) for js in enumerate_structures(EnumConfig(4, 4, theta=1))]
        assert a == b

    def test_everything_yielded_is_valid(self):
        for theta in (0, 3):
            cfg = EnumConfig(4, 4, theta=theta)
            for js in enumerate_structures(cfg):
                assert validate(js, FoldConfig(theta=theta)) is None

    def test_gap_filter_matches_validate(self):
        # The cached minimal-gap filter must agree with re-validating at theta.
        base = list(enumerate_structures(EnumConfig(5, 2, theta=0)))
        for theta in (1, 2, 3):
            direct = {arcs_key(js) for js in base if validate(js, FoldConfig(theta=theta)) is None}
            filtered = {arcs_key(js) for js in enumerate_structures(EnumConfig(5, 2, theta=theta))}
            assert filtered == direct


class TestTierAgreement:
    @pytest.mark.parametrize("n,m", [(3, 3), (4, 2), (4, 4), (2, 4)])
    @pytest.mark.parametrize("theta", [0, 1, 3])
    def test_subset_sweep_equals_recursive_enumeration(self, n, m, theta):
        cfg = EnumConfig(n, m, theta=theta)
        tier0 = {arcs_key(js) for js in all_subset_structures(cfg)}
        tier1 = {arcs_key(js) for js in enumerate_structures(cfg)}
        assert tier0 == tier1

    def test_subset_sweep_rejects_large_inputs(self):
        with pytest.raises(UsageError):
            all_subset_structures(EnumConfig(5, 2, theta=0))


class TestCaps:
    def test_structure_cap_refusal(self):
        clear_cache()
        with pytest.raises(UsageError):
            count(EnumConfig(4, 4, theta=0, max_structures=10))
        clear_cache()

    def test_scale_refusal(self):
        with pytest.raises(UsageError):
            count(EnumConfig(13, 0, theta=0))
        with pytest.raises(UsageError):
            count(EnumConfig(9, 9, theta=0))


RANDOM_MODELS = [
    EnergyModel(
        kT=0.9,
        theta=1,
        hairpin_const=0.4,
        hairpin_per_base=-0.2,
        interior_const=0.3,
        interior_per_base=0.1,
        multi_close=0.5,
        multi_branch=-0.1,
        multi_unpaired=0.2,
        kissing_close=-0.3,
        kissing_branch=0.25,
        kissing_unpaired=-0.15,
        hybrid_init=0.6,
        hybrid_scale=0.8,
        hybrid_gap_per_base=0.05,
    ),
    EnergyModel(
        kT=1.3,
        theta=0,
        hairpin_const=-0.5,
        interior_per_base=-0.3,
        multi_branch=0.4,
        kissing_unpaired=0.3,
        hybrid_init=-0.2,
        hybrid_scale=0.5,
        hybrid_gap_per_base=-0.1,
    ),
]


class TestBrutePartition:
    def test_unit_1x1(self):
        assert brute_partition("N", "N", EnergyModel.unit(theta=0)) == 2.0

    def test_hairpin_at_kt(self):
        m = EnergyModel(hairpin_const=1.0, theta=3)
        assert brute_partition("NNNNN", "", m) == pytest.approx(1 + math.exp(-1), rel=1e-14)

    def test_unit_equals_count(self):
        for n, m_ in [(3, 2), (4, 4), (5, 1)]:
            for theta in (0, 1, 3):
                q = brute_partition("N" * n, "N" * m_, EnergyModel.unit(theta=theta))
                assert q == count(EnumConfig(n, m_, theta=theta))

    @pytest.mark.parametrize("model", RANDOM_MODELS)
    def test_matches_direct_boltzmann_sum(self, model):
        cfg = EnumConfig(4, 3, theta=model.theta, pair_policy=model.pair_policy)
        direct = sum(boltzmann(js, model) for js in enumerate_structures(cfg))
        assert brute_partition("NNNN", "NNN", model) == pytest.approx(direct, rel=1e-12)

    def test_exterior_disabled_factorizes(self):
        model = EnergyModel.unit(theta=1, exterior_ok=False)
        joint = brute_partition("NNNN", "NNN", model)
        left = brute_partition("NNNN", "", model)
        right = brute_partition("", "NNN", model)
        assert joint == pytest.approx(left * right, rel=1e-12)

    def test_canonical_policy_prunes(self):
        model = EnergyModel.unit(theta=0)
        from dataclasses import replace
        from jointfold.model import PairPolicy

        canon = replace(model, pair_policy=PairPolicy.CANONICAL)
        assert brute_partition("AA", "AA", canon) == 1.0  # no admissible bond at all
        # Here every pair that could form is admissible, so the counts agree.
        assert brute_partition("NN", "NU", canon) == brute_partition("NN", "NU", model)
        # And a mixed case: only the exterior A-U bonds survive the policy.
        assert brute_partition("AA", "UU", canon) == 6.0


class TestFeatureScoring:
    def test_features_match_structure_energy(self):
        for model in RANDOM_MODELS:
            coeffs = model.feature_coefficients()
            for js in enumerate_structures(EnumConfig(4, 4, theta=0)):
                dot = sum(f * c for f, c in zip(features_of(js), coeffs))
                assert dot == pytest.approx(structure_energy(js, model), rel=1e-12, abs=1e-12)


class TestBruteBpp:
    def test_unit_1x1_bond_probability(self):
        bpp = brute_bpp("N", "N", EnergyModel.unit(theta=0))
        assert bpp.p_rs[0, 0] == pytest.approx(0.5, abs=1e-15)
        assert bpp.unpaired_r[0] == pytest.approx(0.5, abs=1e-15)

    def test_unit_5x0_hairpin_probability(self):
        bpp = brute_bpp("NNNNN", "", EnergyModel.unit(theta=3))
        assert bpp.p_rr[0, 4] == pytest.approx(0.5, abs=1e-15)
        assert bpp.p_rr[4, 0] == pytest.approx(0.5, abs=1e-15)
        assert bpp.p_rr[0, 1] == 0.0

    def test_weighted_two_structure_ensemble(self):
        m = EnergyModel(hairpin_const=1.0, theta=3)
        bpp = brute_bpp("NNNNN", "", m)
        expect = math.exp(-1) / (1 + math.exp(-1))
        assert bpp.p_rr[0, 4] == pytest.approx(expect, rel=1e-12)

    @pytest.mark.parametrize("model", RANDOM_MODELS)
    def test_per_vertex_normalization(self, model):
        bpp = brute_bpp("NNNNN", "NNNN", model)
        assert bpp.max_normalization_error() <= 1e-12

    def test_normalization_with_exterior_disabled(self):
        model = EnergyModel.unit(theta=1, exterior_ok=False)
        bpp = brute_bpp("NNNN", "NNN", model)
        assert bpp.max_normalization_error() <= 1e-12
        assert np.all(bpp.p_rs == 0.0)
