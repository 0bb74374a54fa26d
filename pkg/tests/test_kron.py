"""Gap scans, inclusion ladders, greedy periods, and matrix systems."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import kronlab
from kronlab import (
    BudgetExceededError,
    FrequencyMatrix,
    FrequencyTuple,
    KroneckerInstance,
    PrecisionBudgetError,
    TorusPoint,
    WindowPolicy,
    WindowTooNarrowError,
    almost_period_quality,
    build_extended,
    convergent_sequence,
    frac_mult,
    gap_scan,
    greedy_almost_period,
    inclusion_length_ladder,
    matrix_solution_scan,
    max_pair_residual,
    orbit_sample,
    solve_in_interval,
    torus_norm,
)
from kronlab.kron import _achieved_differences

GOLDEN_EPS06_SOLUTIONS = [
    0, 8, 13, 21, 34, 42, 47, 55, 68, 76, 89, 97, 102, 110, 123, 131, 136,
    144, 152, 157, 165, 178, 186, 191, 199,
]


@pytest.fixture(scope="module")
def golden_seq25(golden_freq):
    return convergent_sequence(golden_freq, 2.0, 25)


class TestInstance:
    def test_epsilon_validation(self, golden_freq):
        with pytest.raises(ValueError):
            KroneckerInstance.homogeneous(golden_freq, 0.0)
        with pytest.raises(ValueError):
            KroneckerInstance.homogeneous(golden_freq, 0.6)
        KroneckerInstance.homogeneous(golden_freq, 0.5)

    def test_dimension_mismatch(self, pair_freq):
        with pytest.raises(ValueError):
            KroneckerInstance(pair_freq, TorusPoint([0.1]), 0.1)


class TestSolveInInterval:
    def test_golden_first_hit(self, golden_freq):
        inst = KroneckerInstance.homogeneous(golden_freq, 0.06)
        assert solve_in_interval(inst, 1, 20) == 8

    def test_none_when_absent(self, golden_freq):
        inst = KroneckerInstance.homogeneous(golden_freq, 0.01)
        assert solve_in_interval(inst, 1, 50) is None
        assert solve_in_interval(inst, 1, 55) == 55

    def test_pair_system(self, pair_freq):
        inst = KroneckerInstance.homogeneous(pair_freq, 0.1)
        assert solve_in_interval(inst, 1, 1000) == 41

    def test_half_epsilon_accepts_everything(self, golden_freq):
        inst = KroneckerInstance.homogeneous(golden_freq, 0.5)
        assert solve_in_interval(inst, 7, 9) == 7

    def test_empty_window(self, golden_freq):
        inst = KroneckerInstance.homogeneous(golden_freq, 0.1)
        with pytest.raises(ValueError):
            solve_in_interval(inst, 5, 4)

    def test_respects_target(self, golden_freq):
        theta = TorusPoint([0.3])
        inst = KroneckerInstance(golden_freq, theta, 0.05)
        q = solve_in_interval(inst, 0, 10_000)
        res = kronlab.torus_dist(frac_mult(golden_freq, q), theta)
        assert res <= 0.05 + 2.0 ** -52


class TestGapScan:
    def test_golden_solution_set(self, golden_freq):
        inst = KroneckerInstance.homogeneous(golden_freq, 0.06)
        scan = gap_scan(inst, 0, 200)
        assert scan.solutions.tolist() == GOLDEN_EPS06_SOLUTIONS
        assert scan.l_hat == 13
        assert not scan.truncated
        assert scan.gaps.tolist() == np.diff(scan.solutions).tolist()

    def test_every_solution_verifies(self, golden_freq):
        inst = KroneckerInstance.homogeneous(golden_freq, 0.06)
        scan = gap_scan(inst, 0, 200)
        for q in scan.solutions.tolist():
            assert torus_norm(frac_mult(golden_freq, q)) <= 0.06 + 2.0 ** -52

    def test_half_epsilon_gap_one(self, golden_freq):
        inst = KroneckerInstance.homogeneous(golden_freq, 0.5)
        assert gap_scan(inst, 0, 100).l_hat == 1

    def test_narrow_window(self, golden_freq):
        inst = KroneckerInstance.homogeneous(golden_freq, 0.01)
        with pytest.raises(WindowTooNarrowError) as exc:
            gap_scan(inst, 0, 5)
        assert exc.value.found == 1

    def test_truncation_flag(self, golden_freq):
        inst = KroneckerInstance.homogeneous(golden_freq, 0.06)
        scan = gap_scan(inst, 0, 30)
        assert scan.solutions.tolist() == [0, 8, 13, 21]
        assert scan.l_hat == 8
        assert scan.truncated  # the edge gap 30-21 exceeds l_hat

    def test_negative_window_symmetric(self, golden_freq):
        inst = KroneckerInstance.homogeneous(golden_freq, 0.06)
        scan = gap_scan(inst, -200, 200)
        sols = set(scan.solutions.tolist())
        assert sols == {-q for q in sols}

    def test_budget_guard(self):
        f = FrequencyTuple.parse("golden-1", bits=64)
        inst = KroneckerInstance.homogeneous(f, 0.1)
        with pytest.raises(PrecisionBudgetError):
            gap_scan(inst, 0, f.q_max + 10)


class TestPairResidual:
    def test_two_solution_law_observed(self, golden_freq):
        inst = KroneckerInstance.homogeneous(golden_freq, 0.06)
        scan = gap_scan(inst, 0, 200)
        worst = max_pair_residual(scan)
        assert worst <= 2 * 0.06 + 2.0 ** -31
        assert worst == pytest.approx(0.1114, abs=0.001)

    def test_achieved_differences_fft_path_matches_direct(self):
        rng = np.random.default_rng(7)
        # 2100**2 > 4e6 forces the autocorrelation path
        sols = np.unique(rng.integers(0, 60_000, size=2100)).astype(np.int64)
        assert len(sols) * len(sols) > 4_000_000
        got = _achieved_differences(sols)
        want = np.unique((sols[None, :] - sols[:, None]).ravel())
        want = want[want > 0]
        assert np.array_equal(got, want)

    def test_single_solution_difference_set_empty(self, golden_freq):
        inst = KroneckerInstance.homogeneous(golden_freq, 0.06)
        scan = gap_scan(inst, 0, 200)
        lone = kronlab.GapScan(
            instance=scan.instance, window=(0, 0),
            solutions=np.asarray([0], dtype=np.int64),
            gaps=np.asarray([], dtype=np.int64), l_hat=0, truncated=False)
        assert max_pair_residual(lone) == 0.0


class TestWindowPolicy:
    def test_seed_scaling(self):
        p = WindowPolicy()
        assert p.seed(0.1, 1) == 10_000
        assert p.seed(0.01, 2) == 500_000
        assert p.seed(0.5, 1) == 10_000


class TestInclusionLadder:
    def test_golden_ladder_values(self, golden_freq):
        eps = [0.1, 0.05, 0.025, 0.0125, 0.00625]
        rows = inclusion_length_ladder(golden_freq, TorusPoint([0.0]), eps)
        assert [r.l_hat for r in rows] == [8, 13, 34, 55, 144]
        assert all(not r.truncated for r in rows)
        assert all(r.scan is not None for r in rows)

    def test_rows_keep_epsilon_order(self, golden_freq):
        eps = [0.2, 0.1]
        rows = inclusion_length_ladder(golden_freq, TorusPoint([0.0]), eps)
        assert [r.epsilon for r in rows] == eps

    def test_ladder_validation(self, golden_freq):
        t = TorusPoint([0.0])
        with pytest.raises(ValueError):
            inclusion_length_ladder(golden_freq, t, [])
        with pytest.raises(ValueError):
            inclusion_length_ladder(golden_freq, t, [0.6])
        with pytest.raises(ValueError):
            inclusion_length_ladder(golden_freq, t, [0.05, 0.1])

    def test_budget_capped_row_survives(self, golden_freq):
        policy = WindowPolicy(seed_min=50, budget=50)
        rows = inclusion_length_ladder(
            golden_freq, TorusPoint([0.0]), [0.01], policy)
        assert len(rows) == 1
        assert rows[0].truncated
        assert rows[0].l_hat == 0
        assert rows[0].scan is None


class TestGreedyAlmostPeriod:
    def test_small_example(self, golden_seq25):
        ap = greedy_almost_period(golden_seq25, 30, k0=1)
        assert ap.tau == 29
        assert ap.coefficients == (0, 0, 1, 0, 1)
        assert abs(ap.tau - 30) < golden_seq25.denominators[0]

    def test_target_below_floor(self, golden_seq25):
        ap = greedy_almost_period(golden_seq25, 1, k0=3)
        assert ap.tau == 0
        assert ap.coefficients == ()
        assert ap.residual == 0.0

    def test_negative_mirrors_positive(self, golden_seq25):
        pos = greedy_almost_period(golden_seq25, 777, k0=2)
        neg = greedy_almost_period(golden_seq25, -777, k0=2)
        assert neg.tau == -pos.tau
        assert neg.coefficients == pos.coefficients

    def test_k0_validation(self, golden_seq25):
        with pytest.raises(ValueError):
            greedy_almost_period(golden_seq25, 100, k0=0)
        with pytest.raises(ValueError):
            greedy_almost_period(golden_seq25, 100, k0=26)

    @given(st.integers(min_value=-(10 ** 6), max_value=10 ** 6),
           st.integers(min_value=1, max_value=8))
    @settings(max_examples=200)
    def test_expansion_contract(self, golden_seq25, target, k0):
        seq = golden_seq25
        ap = greedy_almost_period(seq, target, k0)
        dens = seq.denominators
        # the expansion reconstructs |tau| exactly
        total = sum(p * dens[k0 - 1 + i] for i, p in enumerate(ap.coefficients))
        assert total == abs(ap.tau)
        assert abs(ap.tau - target) < dens[k0 - 1]
        # each coefficient respects the next denominator ratio
        for i, p in enumerate(ap.coefficients):
            k = k0 + i
            assert p >= 0
            if k < len(dens):
                assert p <= dens[k] // dens[k - 1]
        if ap.tau != 0:
            assert ap.residual == torus_norm(frac_mult(seq.frequency, ap.tau))


class TestAlmostPeriodQuality:
    def test_golden_quality_record(self, golden_seq20):
        rec = almost_period_quality(golden_seq20, 3, [97, 500, 1000])
        assert rec.eta == 1.0
        assert rec.max_residual == pytest.approx(0.05070309126019967, rel=1e-12)
        assert rec.c2_hat == pytest.approx(0.13520824336053247, rel=1e-12)
        assert rec.consistent
        assert rec.max_reeval_gap <= 2.0 ** -32
        assert [e.tau for e in rec.entries] == [97, 500, 1000]

    def test_deeper_base_improves_residual(self, golden_seq20):
        # targets chosen off the denominator grid so the low levels matter
        targets = [100, 503, 998]
        shallow = almost_period_quality(golden_seq20, 2, targets)
        deep = almost_period_quality(golden_seq20, 5, targets)
        assert deep.max_residual < shallow.max_residual
        assert shallow.max_residual == pytest.approx(0.20208, abs=0.0005)
        assert deep.max_residual == pytest.approx(0.0174475, abs=0.0001)

    def test_eta_hypothesis_guard(self, pair_freq):
        seq = convergent_sequence(pair_freq, 4.0, 6)
        with pytest.raises(ValueError):
            almost_period_quality(seq, 1, [100], nu=1.1)

    def test_k0_guard(self, golden_seq20):
        with pytest.raises(ValueError):
            almost_period_quality(golden_seq20, 0, [100])


class TestFrequencyMatrix:
    def test_parse_shape(self):
        mat = FrequencyMatrix.parse("1,0;0,sqrt(2)")
        assert (mat.m, mat.n) == (2, 2)
        assert mat.descriptors() == "1,0;0,sqrt(2)"

    def test_ragged_rejected(self):
        with pytest.raises(ValueError):
            FrequencyMatrix.parse("1,0;1")

    def test_apply_matches_frac_mult(self, golden_freq):
        mat = FrequencyMatrix.parse("golden-1")
        for q in (0, 1, 13, -55, 4181):
            assert mat.apply([q]) == frac_mult(golden_freq, q)

    def test_apply_validation(self):
        mat = FrequencyMatrix.parse("golden-1,sqrt(2)")
        with pytest.raises(ValueError):
            mat.apply([1])
        with pytest.raises(PrecisionBudgetError):
            mat.apply([1, mat.q_max + 1])


class TestMatrixScan:
    def test_single_column_matches_gap_scan(self, golden_freq):
        mat = FrequencyMatrix.parse("golden-1")
        inst = KroneckerInstance.homogeneous(golden_freq, 0.06)
        want = gap_scan(inst, 0, 200).solutions.tolist()
        got = matrix_solution_scan(mat, TorusPoint([0.0]), 0.06, [(0, 200)])
        assert [q for (q,) in got] == want

    def test_decoupled_system_is_product(self, golden_freq, sqrt2_freq):
        mat = FrequencyMatrix.parse("golden-1,0;0,sqrt(2)-1")
        eps = 0.11
        a = gap_scan(KroneckerInstance.homogeneous(golden_freq, eps), 0, 60)
        b = gap_scan(KroneckerInstance.homogeneous(sqrt2_freq, eps), 0, 60)
        want = {(x, y) for x in a.solutions.tolist() for y in b.solutions.tolist()}
        got = matrix_solution_scan(
            mat, TorusPoint([0.0, 0.0]), eps, [(0, 60), (0, 60)])
        assert set(got) == want
        assert got == sorted(got)

    def test_wide_epsilon_returns_box(self):
        mat = FrequencyMatrix.parse("pi-3")
        got = matrix_solution_scan(mat, TorusPoint([0.0]), 0.5, [(-2, 2)])
        assert got == [(-2,), (-1,), (0,), (1,), (2,)]

    def test_volume_budget(self):
        mat = FrequencyMatrix.parse("pi-3,e-2")
        with pytest.raises(BudgetExceededError):
            matrix_solution_scan(mat, TorusPoint([0.0]), 0.1,
                                 [(0, 99), (0, 99)], budget=100)

    def test_box_validation(self):
        mat = FrequencyMatrix.parse("pi-3")
        with pytest.raises(ValueError):
            matrix_solution_scan(mat, TorusPoint([0.0]), 0.1, [(5, 4)])
        with pytest.raises(ValueError):
            matrix_solution_scan(mat, TorusPoint([0.0]), 0.1, [(0, 1), (0, 1)])
        with pytest.raises(ValueError):
            matrix_solution_scan(mat, TorusPoint([0.0, 0.0]), 0.1, [(0, 1)])


class TestExtendedSystem:
    def test_shape_and_identity_rows(self):
        mat = FrequencyMatrix.parse("golden-1,sqrt(2)-1")
        ext = build_extended(mat, TorusPoint([0.3]))
        assert (ext.a_hat.m, ext.a_hat.n) == (3, 2)
        assert ext.theta_hat == (0.0, 0.0, 0.3)
        # identity rows land exactly on the lattice for integer vectors
        pt = ext.a_hat.apply([17, -40])
        assert pt[0] == 0.0 and pt[1] == 0.0

    def test_solution_sets_agree(self, golden_freq):
        mat = FrequencyMatrix.parse("golden-1")
        theta = TorusPoint([0.3])
        ext = build_extended(mat, theta)
        direct = matrix_solution_scan(mat, theta, 0.1, [(0, 500)])
        via_ext = matrix_solution_scan(ext.a_hat, ext.theta_hat, 0.1, [(0, 500)])
        assert direct == via_ext

    def test_dimension_mismatch(self):
        mat = FrequencyMatrix.parse("golden-1")
        with pytest.raises(ValueError):
            build_extended(mat, TorusPoint([0.1, 0.2]))


class TestOrbitSample:
    def test_integer_lattice_rational_matrix(self):
        mat = FrequencyMatrix.parse("0.5,0;0,0.5")
        pts = orbit_sample(mat, "integer", 9)
        assert len(pts) == 9
        assert set(pts) <= {(0.0, 0.0), (0.0, 0.5), (0.5, 0.0), (0.5, 0.5)}

    def test_integer_lattice_row_major(self):
        mat = FrequencyMatrix.parse("0.25")
        pts = orbit_sample(mat, "integer", 4)
        assert pts == [(0.0,), (0.25,), (0.5,), (0.75,)]

    def test_real_lattice_deterministic_and_distinct(self):
        mat = FrequencyMatrix.parse("1;sqrt(2)")
        a = orbit_sample(mat, "real", 64)
        b = orbit_sample(mat, "real", 64)
        assert a == b
        assert len(set(a)) == 64

    def test_count_and_lattice_validation(self):
        mat = FrequencyMatrix.parse("pi-3")
        with pytest.raises(ValueError):
            orbit_sample(mat, "integer", 0)
        with pytest.raises(ValueError):
            orbit_sample(mat, "hex", 10)
