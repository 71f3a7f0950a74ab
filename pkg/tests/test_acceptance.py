"""Acceptance gates: oracle equivalence, reductions, soundness, determinism.

Each test covers one advertised criterion at its stated tolerance and prints a
single ``CRITERION k ...: PASS/FAIL`` line (visible under ``pytest -s``; the
``pytest -v`` PASSED/FAILED row carries the same verdict).
"""

import random
import time

import numpy as np

from test_decomp import PROBE
from test_inside import random_model, random_seq
from test_model import ZIGZAG, ZIGZAG_DROP_LEFT, ZIGZAG_DROP_RIGHT

from jointfold import oracle
from jointfold.cli import FOLD_FILES, main as cli_main
from jointfold.decomp import NodeLabel, decompose, recompose, tree_energy
from jointfold.energy import EnergyModel, structure_energy
from jointfold.inside import count_dp, estimate_memory_bytes, fold, mccaskill
from jointfold.model import FoldConfig, Strand, ViolationKind, validate
from jointfold.outside import joint_bpp, outside_tables, secondary_bpp

LEAF_LABELS = (NodeLabel.INTERIOR_ARC, NodeLabel.EXTERIOR_ARC,
               NodeLabel.EMPTY_SEGMENT)


def report(k: int, name: str, ok: bool, detail: str) -> None:
    print(f"CRITERION {k} ({name}): {'PASS' if ok else 'FAIL'} — {detail}")


def grid_count(n: int, m: int, theta: int) -> int:
    if n == 0 and m == 0:
        return 1
    if n == 0:
        return count_dp(m, 0, theta)
    return count_dp(n, m, theta)


def joint_q(n: int, m: int, model: EnergyModel) -> float:
    if n == 0 and m == 0:
        return 1.0
    if m == 0:
        return mccaskill(Strand.unspecified("R", n), model).q
    if n == 0:
        return mccaskill(Strand.unspecified("S", m), model).q
    return fold(Strand.unspecified("R", n), Strand.unspecified("S", m),
                model).q_joint


def test_criterion_1_counts_match_oracle_exactly():
    mismatches = 0
    cells = 0
    for theta in (0, 1, 3):
        for n in range(8):
            for m in range(8):
                dp = grid_count(n, m, theta)
                ref = oracle.count(oracle.EnumConfig(n=n, m=m, theta=theta))
                cells += 1
                if dp != ref:
                    mismatches += 1
    ok = mismatches == 0
    report(1, "count oracle equivalence", ok,
           f"{cells} cells over n,m<=7, theta in {{0,1,3}}, {mismatches} mismatches")
    assert ok


def test_criterion_2_partition_matches_oracle_1e_9_relative():
    rng = random.Random(20260822)
    worst = 0.0
    comparisons = 0
    for _ in range(20):
        base = random_model(rng, scale=2.0)  # parameters in [-2kT, 2kT]
        for theta in (0, 1):
            model = EnergyModel(**{**_fields(base), "theta": theta})
            for n in range(8):
                for m in range(8):
                    q_dp = joint_q(n, m, model)
                    q_ref = oracle.brute_partition("N" * n, "N" * m, model)
                    worst = max(worst, abs(q_dp - q_ref) / q_ref)
                    comparisons += 1
    ok = worst <= 1e-9
    report(2, "partition oracle equivalence", ok,
           f"20 models x theta {{0,1}} x n,m<=7 ({comparisons} comparisons), "
           f"max |dQ|/Q = {worst:.3e} (tol 1e-9)")
    assert ok


def _fields(model: EnergyModel) -> dict:
    return {name: getattr(model, name) for name in (
        "kT", "theta", "pair_policy", "hairpin_const", "hairpin_per_base",
        "interior_const", "interior_per_base", "multi_close", "multi_branch",
        "multi_unpaired", "kissing_close", "kissing_branch", "kissing_unpaired",
        "hybrid_init", "hybrid_scale", "hybrid_gap_per_base", "exterior_ok")}


def test_criterion_3_bpp_matches_oracle_1e_9_absolute():
    rng = random.Random(30260822)
    worst = 0.0
    comparisons = 0
    for _ in range(10):
        base = random_model(rng, scale=2.0)
        for theta in (0, 1):
            model = EnergyModel(**{**_fields(base), "theta": theta})
            for n in range(1, 7):
                for m in range(1, 7):
                    mats = joint_bpp(Strand.unspecified("R", n),
                                     Strand.unspecified("S", m), model)
                    ref = oracle.brute_bpp("N" * n, "N" * m, model)
                    dev = max(
                        float(np.max(np.abs(mats.p_rr - ref.p_rr))),
                        float(np.max(np.abs(mats.p_ss - ref.p_ss))),
                        float(np.max(np.abs(mats.p_rs - ref.p_rs))))
                    worst = max(worst, dev)
                    comparisons += 1
    ok = worst <= 1e-9
    report(3, "probability oracle equivalence", ok,
           f"10 models x theta {{0,1}} x n,m<=6 ({comparisons} comparisons), "
           f"max |dP| = {worst:.3e} (tol 1e-9)")
    assert ok


def test_criterion_4_exterior_disabled_reduces_to_single_strands():
    rng = random.Random(40260822)
    worst_q = 0.0
    worst_p = 0.0
    for k in range(50):
        model = random_model(rng, theta=(0, 1, 3)[k % 3], exterior_ok=False)
        seq_r = random_seq(rng, rng.randint(1, 12))
        seq_s = random_seq(rng, rng.randint(1, 12))
        tables = fold(seq_r, seq_s, model)
        q_factored = mccaskill(seq_r, model).q * mccaskill(seq_s, model).q
        worst_q = max(worst_q, abs(tables.q_joint - q_factored) / q_factored)
        p_rr = outside_tables(tables).bpp().p_rr
        p_single = secondary_bpp(seq_r, model)
        denom = np.maximum(np.abs(p_single), 1.0)
        worst_p = max(worst_p, float(np.max(np.abs(p_rr - p_single) / denom)))
        assert np.array_equal(p_rr == 0.0, p_single == 0.0)
    ok = worst_q <= 1e-12 and worst_p <= 1e-12
    report(4, "factorized-ensemble reduction", ok,
           f"50 random pairs len<=12, max |dQ|/Q = {worst_q:.3e}, "
           f"max relative |dP| = {worst_p:.3e} (tol 1e-12)")
    assert ok


def test_criterion_5_per_vertex_normalization_at_15():
    rng = random.Random(50260822)
    worst = 0.0
    for k in range(100):
        model = random_model(rng, theta=(0, 1, 3)[k % 3])
        mats = joint_bpp(random_seq(rng, 15), random_seq(rng, 15), model)
        worst = max(worst, mats.max_normalization_error())
    ok = worst <= 1e-9
    report(5, "per-vertex normalization", ok,
           f"100 random folds at N=M=15, max error = {worst:.3e} (tol 1e-9)")
    assert ok


def test_criterion_6_grammar_soundness_on_all_small_structures():
    structures = 0
    for n in range(7):
        for m in range(7):
            cfg = oracle.EnumConfig(n=n, m=m, theta=0)
            for js in oracle.enumerate_structures(cfg):
                tree = decompose(js)
                for node in tree.iter_nodes():
                    if not node.children:
                        assert node.label in LEAF_LABELS, (n, m, js)
                assert recompose(tree) == js
                assert tree_energy(tree, PROBE) == structure_energy(js, PROBE)
                structures += 1
    report(6, "grammar soundness", True,
           f"{structures} enumerated structures with n,m<=6: decompose, leaf "
           "form, recompose inversion, and exact tree-walk energy all hold")


def test_criterion_7_zig_zag_gate():
    cfg = FoldConfig(theta=0)
    violation = validate(ZIGZAG, cfg)
    rejected = violation is not None and violation.kind is ViolationKind.ZIG_ZAG
    left_ok = validate(ZIGZAG_DROP_LEFT, cfg) is None
    right_ok = validate(ZIGZAG_DROP_RIGHT, cfg) is None
    ok = rejected and left_ok and right_ok
    report(7, "zig-zag gate", ok,
           "6x6 example rejected as zig-zag; dropping leftmost or rightmost "
           "exterior arc makes it valid")
    assert ok


def test_criterion_8_complexity_smoke():
    rng = random.Random(80260822)
    model = random_model(rng, theta=3)

    t0 = time.perf_counter()
    tables = fold(random_seq(rng, 30), random_seq(rng, 30), model)
    t_30 = time.perf_counter() - t0
    assert tables.q_joint > 0.0

    measured = (tables.data.nbytes + tables.sec_r.data.nbytes
                + tables.sec_s.data.nbytes + tables.bond_weight.nbytes
                + tables.pair_r.nbytes + tables.pair_s.nbytes
                + tables.luts.nbytes + tables.coef.nbytes)
    formula = estimate_memory_bytes(30, 30)
    mem_ratio = measured / formula
    mem_ok = abs(mem_ratio - 1.0) <= 0.10

    seq_m = random_seq(rng, 10)
    seq_20 = random_seq(rng, 20)
    seq_40 = seq_20 + random_seq(rng, 20)
    fold(seq_20, seq_m, model)  # warm the compiled kernels on this shape family
    t_20 = min(_timed_fold(seq_20, seq_m, model) for _ in range(3))
    t_40 = _timed_fold(seq_40, seq_m, model)
    factor = t_40 / t_20
    scale_ok = factor <= 20.0

    ok = mem_ok and scale_ok
    report(8, "complexity smoke", ok,
           f"fold 30x30 in {t_30:.2f}s; doubling N at M=10 scaled wall time "
           f"x{factor:.1f} (bound 20); memory {measured} B vs formula "
           f"{formula} B (ratio {mem_ratio:.4f}, bound 10%)")
    assert ok


def _timed_fold(seq_r: str, seq_s: str, model: EnergyModel) -> float:
    t0 = time.perf_counter()
    fold(seq_r, seq_s, model)
    return time.perf_counter() - t0


def test_criterion_9_cmd_fold_outputs_byte_identical(tmp_path, capsys):
    (tmp_path / "r.txt").write_text("GGCAUCGUACGG\n", encoding="ascii")
    (tmp_path / "s.txt").write_text("CCGUACGAUG\n", encoding="ascii")
    (tmp_path / "p.txt").write_text(
        "theta = 1\npair_policy = canonical\nhairpin_const = 0.9\n"
        "alpha1 = 0.4\nbeta1 = 0.5\nsigma0 = -0.6\ngamma = 0.2\n",
        encoding="ascii")
    dirs = [tmp_path / d for d in ("run_a", "run_b", "run_par")]
    for out_dir, extra in zip(dirs, ([], [], ["--parallel"])):
        rc = cli_main(["fold", "--seq1", str(tmp_path / "r.txt"),
                       "--seq2", str(tmp_path / "s.txt"),
                       "--params", str(tmp_path / "p.txt"),
                       "--out", str(out_dir), *extra])
        assert rc == 0
    capsys.readouterr()
    identical = all(
        (dirs[0] / name).read_bytes()
        == (dirs[1] / name).read_bytes()
        == (dirs[2] / name).read_bytes()
        for name in FOLD_FILES)
    report(9, "output determinism", identical,
           "five output files byte-identical across repeated and parallel runs")
    assert identical
