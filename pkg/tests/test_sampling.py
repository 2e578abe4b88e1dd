"""Utility fields, pattern selection, baselines, and the error decomposition."""

import numpy as np
import pytest

from tenact import (
    ModeApproximations,
    ObservationSet,
    Pattern,
    ProblemSpec,
    UtilityField,
    admm_sweep,
    coherence_baseline,
    combine_utilities,
    fold,
    init_state,
    lemma_decomposition,
    leverage_utility,
    pattern_utility,
    random_baseline,
    select_batch,
    svd,
    variance_utility,
)
from tenact.linalg import shrink_factors
from tenact.sampling import LEVERAGE, VARIANCE


def crandom(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def random_committee(rng, shape, n, with_omega=False):
    approx = [crandom(rng, shape) for _ in range(n)]
    w = rng.random(n) + 0.1
    w /= w.sum()
    omega = None
    if with_omega:
        mask = rng.random(shape) < 0.3
        common = crandom(rng, shape)
        for a in approx:
            a[mask] = common[mask]
        omega = ObservationSet.from_mask(common, mask)
    return ModeApproximations(approx=approx, weights=w, omega=omega)


def element_patterns(shape):
    return [
        Pattern(id=i, elements=np.array([idx]), kind="element")
        for i, idx in enumerate(np.ndindex(*shape))
    ]


class TestVarianceUtility:
    def test_identical_committee_is_zero(self):
        rng = np.random.default_rng(0)
        a = crandom(rng, (3, 4))
        ma = ModeApproximations(approx=[a.copy(), a.copy()], weights=np.array([0.5, 0.5]))
        assert not variance_utility(ma).field.any()

    def test_two_member_disagreement(self):
        base = np.zeros((2, 2), dtype=complex)
        up, down = base.copy(), base.copy()
        d = 0.8
        up[0, 1] += d / 2
        down[0, 1] -= d / 2
        ma = ModeApproximations(approx=[up, down], weights=np.array([0.5, 0.5]))
        v = variance_utility(ma).field
        assert v[0, 1] == pytest.approx(d * d / 4, abs=1e-15)
        v[0, 1] = 0
        assert not v.any()

    def test_total_variance_two_paths(self):
        rng = np.random.default_rng(1)
        ma = random_committee(rng, (4, 3, 2), 3)
        v = variance_utility(ma).field
        mean = sum(w * a for w, a in zip(ma.weights, ma.approx))
        want = sum(
            w * np.linalg.norm(a - mean) ** 2 for w, a in zip(ma.weights, ma.approx)
        )
        assert np.abs(v).sum() == pytest.approx(want, rel=1e-12)

    def test_exactly_zero_on_observed_entries(self):
        rng = np.random.default_rng(2)
        ma = random_committee(rng, (5, 4), 3, with_omega=True)
        v = variance_utility(ma).field
        assert not v.reshape(-1)[ma.omega.flat].any()
        assert (v >= 0).all()

    def test_committee_of_one_rejected(self):
        ma = ModeApproximations(approx=[np.zeros((2, 2), dtype=complex)], weights=np.array([1.0]))
        with pytest.raises(ValueError):
            variance_utility(ma)


class TestLeverageUtility:
    def _state_after_sweep(self, seed, shape=(6, 5, 4), fraction=0.5):
        rng = np.random.default_rng(seed)
        truth = crandom(rng, shape)
        mask = rng.random(shape) < fraction
        omega = ObservationSet.from_mask(truth, mask)
        p = ProblemSpec(shape=shape, omega=omega, solver="admm")
        st = init_state(p)
        admm_sweep(st, p)
        return st, p

    def test_cold_start_cache_missing(self):
        p = ProblemSpec(shape=(3, 3), omega=ObservationSet.empty((3, 3)), solver="admm")
        with pytest.raises(ValueError):
            leverage_utility(init_state(p), p)

    def test_zero_factors_give_zero_field(self):
        # empty observations: every L is the SVT of a zero matrix
        p = ProblemSpec(shape=(4, 4, 2), omega=ObservationSet.empty((4, 4, 2)), solver="admm")
        st = init_state(p)
        admm_sweep(st, p)
        assert not leverage_utility(st, p).field.any()

    def test_flat_coherence_gives_constant_field(self):
        # orthogonal factors with flat row norms on both sides
        p = ProblemSpec(shape=(4, 4), omega=ObservationSet.empty((4, 4)), solver="admm")
        st = init_state(p)
        dft = np.fft.fft(np.eye(4)) / 2.0
        st.mode_svd = [svd(dft), svd(dft.conj().T)]
        field = leverage_utility(st, p).field
        assert np.allclose(field, field.flat[0])

    def test_mean_separability(self):
        from tenact.linalg import leverage_scores

        st, p = self._state_after_sweep(3)
        field = leverage_utility(st, p).field
        want = 0.0
        for k in range(3):
            pair = leverage_scores(st.mode_svd[k], 1e-6)
            want += (1 / 3) * pair.left.mean() * pair.right.mean()
        assert field.mean() == pytest.approx(want, rel=1e-10)

    def test_matches_per_mode_outer_product_fold(self):
        from tenact.linalg import leverage_scores

        st, p = self._state_after_sweep(4)
        field = leverage_utility(st, p).field
        want = np.zeros(p.shape)
        for k in range(3):
            pair = leverage_scores(st.mode_svd[k], 1e-6)
            want += (1 / 3) * fold(np.outer(pair.left, pair.right), k, p.shape)
        assert np.allclose(field, want, atol=1e-12)


class TestCombine:
    def test_zero_variance_cases(self):
        rng = np.random.default_rng(5)
        z = UtilityField(field=np.zeros((3, 3)), method=VARIANCE)
        l = UtilityField(field=rng.random((3, 3)), method=LEVERAGE)
        s = combine_utilities(z, l, "sum")
        assert np.allclose(s.field, l.field / l.field.max())
        prod = combine_utilities(z, l, "product")
        assert not prod.field.any()

    def test_identical_fields_preserve_argmax(self):
        rng = np.random.default_rng(6)
        f = rng.random((4, 5))
        v = UtilityField(field=f, method=VARIANCE)
        l = UtilityField(field=f.copy(), method=LEVERAGE)
        norm = f / f.max()
        s = combine_utilities(v, l, "sum")
        prod = combine_utilities(v, l, "product")
        assert np.allclose(s.field, 2 * norm)
        assert np.allclose(prod.field, norm**2)
        assert np.argmax(s.field) == np.argmax(f)
        assert np.argmax(prod.field) == np.argmax(f)

    def test_argmax_matches_bruteforce(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            a, b = rng.random((4, 4)), rng.random((4, 4))
            v = UtilityField(field=a, method=VARIANCE)
            l = UtilityField(field=b, method=LEVERAGE)
            for mode, op in (("sum", np.add), ("product", np.multiply)):
                got = combine_utilities(v, l, mode).field
                want = op(a / a.max(), b / b.max())
                assert np.argmax(got) == np.argmax(want)

    def test_method_tags_enforced(self):
        f = UtilityField(field=np.ones((2, 2)), method=VARIANCE)
        with pytest.raises(ValueError):
            combine_utilities(f, f, "sum")


class TestPatternUtility:
    def test_ones_field_fiber(self):
        u = UtilityField(field=np.ones((8, 3)), method=VARIANCE)
        fiber = Pattern(id=0, elements=np.array([[i, 1] for i in range(8)]), kind="fiber", mode=0)
        assert pattern_utility(u, fiber) == 8.0

    def test_singleton_degenerates_to_element(self):
        rng = np.random.default_rng(8)
        f = rng.random((4, 4))
        u = UtilityField(field=f, method=VARIANCE)
        one = Pattern(id=3, elements=np.array([[2, 1]]), kind="element")
        assert pattern_utility(u, one) == f[2, 1]

    def test_matches_sum_oracle(self):
        rng = np.random.default_rng(9)
        f = rng.random((5, 6))
        u = UtilityField(field=f, method=VARIANCE)
        rows = rng.integers(0, 5, size=4)
        cols = rng.integers(0, 6, size=4)
        pat = Pattern(id=0, elements=np.stack([rows, cols], axis=1), kind="element")
        assert pattern_utility(u, pat) == pytest.approx(
            sum(f[r, c] for r, c in zip(rows, cols)), rel=1e-15
        )

    def test_out_of_range_rejected(self):
        u = UtilityField(field=np.ones((2, 2)), method=VARIANCE)
        with pytest.raises(ValueError):
            pattern_utility(u, Pattern(id=0, elements=np.array([[0, 2]])))


class TestSelectBatch:
    def test_strict_max_selected_first(self):
        f = np.zeros((3, 3))
        f[1, 1] = 5.0
        u = UtilityField(field=f, method=VARIANCE)
        pats = element_patterns((3, 3))
        assert select_batch(u, pats, 1)[0].id == 4

    def test_ties_break_to_smallest_id(self):
        u = UtilityField(field=np.ones((2, 3)), method=VARIANCE)
        pats = element_patterns((2, 3))
        chosen = select_batch(u, pats, 4)
        assert [p.id for p in chosen] == [0, 1, 2, 3]

    def test_matches_bruteforce_sort(self):
        rng = np.random.default_rng(10)
        for _ in range(30):
            f = rng.random((4, 5))
            u = UtilityField(field=f, method=VARIANCE)
            pats = element_patterns((4, 5))
            got = [p.id for p in select_batch(u, pats, 7)]
            order = sorted(range(len(pats)), key=lambda i: (-pattern_utility(u, pats[i]), i))
            assert got == order[:7]

    def test_scale_invariance(self):
        rng = np.random.default_rng(11)
        f = rng.random((4, 4))
        pats = element_patterns((4, 4))
        base = [p.id for p in select_batch(UtilityField(field=f, method=VARIANCE), pats, 5)]
        for c in (1e-7, 3.7, 1e8):
            scaled = [p.id for p in select_batch(UtilityField(field=c * f, method=VARIANCE), pats, 5)]
            assert scaled == base

    def test_count_exceeding_candidates_rejected(self):
        u = UtilityField(field=np.ones((2, 2)), method=VARIANCE)
        with pytest.raises(ValueError):
            select_batch(u, element_patterns((2, 2)), 5)


class TestRandomBaseline:
    def test_all_candidates_returned(self):
        pats = element_patterns((2, 2))
        chosen = random_baseline(pats, 4, seed=3)
        assert sorted(p.id for p in chosen) == [0, 1, 2, 3]

    def test_reproducible(self):
        pats = element_patterns((3, 3))
        a = [p.id for p in random_baseline(pats, 4, seed=9)]
        b = [p.id for p in random_baseline(pats, 4, seed=9)]
        assert a == b

    def test_roughly_uniform(self):
        pats = element_patterns((2, 2))
        counts = np.zeros(4)
        n = 10_000
        for s in range(n):
            counts[random_baseline(pats, 1, seed=s)[0].id] += 1
        # binomial(n, 1/4): four sigma band
        sigma = np.sqrt(n * 0.25 * 0.75)
        assert (np.abs(counts - n / 4) < 4 * sigma).all()


class TestCoherenceBaseline:
    def _solved_state(self, seed):
        rng = np.random.default_rng(seed)
        truth = crandom(rng, (5, 4, 3))
        omega = ObservationSet.from_mask(truth, rng.random((5, 4, 3)) < 0.5)
        p = ProblemSpec(shape=(5, 4, 3), omega=omega, solver="admm")
        st = init_state(p)
        admm_sweep(st, p)
        return st, p

    def test_rank_zero_state_degenerates_to_tiebreak(self):
        p = ProblemSpec(shape=(3, 3), omega=ObservationSet.empty((3, 3)), solver="admm")
        st = init_state(p)
        admm_sweep(st, p)
        pats = element_patterns((3, 3))
        assert [pi.id for pi in coherence_baseline(st, pats, 3)] == [0, 1, 2]

    def test_matches_mode0_leverage_bruteforce(self):
        from tenact.linalg import leverage_scores

        st, p = self._solved_state(12)
        pats = element_patterns((5, 4, 3))
        got = [pi.id for pi in coherence_baseline(st, pats, 6)]
        pair = leverage_scores(st.mode_svd[0], 1e-6)
        field = fold(np.outer(pair.left, pair.right), 0, (5, 4, 3))
        u = UtilityField(field=field, method=LEVERAGE)
        order = sorted(range(len(pats)), key=lambda i: (-pattern_utility(u, pats[i]), i))
        assert got == order[:6]


class TestLemmaDecomposition:
    def test_perfect_committee(self):
        rng = np.random.default_rng(13)
        truth = crandom(rng, (4, 4))
        ma = ModeApproximations(approx=[truth.copy(), truth.copy()], weights=np.array([0.5, 0.5]))
        rep = lemma_decomposition(ma, truth)
        assert rep.mu_tot == rep.mu == 0.0
        assert not rep.mu_i.any()
        assert rep.residual == 0.0

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_identity_on_random_complex_committees(self, n):
        rng = np.random.default_rng(14 + n)
        for _ in range(50):
            shape = tuple(rng.integers(2, 9, size=rng.integers(2, 4)))
            ma = random_committee(rng, shape, n)
            truth = crandom(rng, shape)
            rep = lemma_decomposition(ma, truth)
            assert rep.residual <= 1e-9 * max(1.0, rep.mu_tot)

    def test_fully_sampled_committee_vanishes(self):
        # full observation forces every member onto the data, so both the
        # disagreement and the mean error vanish
        rng = np.random.default_rng(15)
        truth = crandom(rng, (4, 3))
        omega = ObservationSet.from_mask(truth, np.ones((4, 3), dtype=bool))
        members = [truth.copy() for _ in range(3)]
        ma = ModeApproximations(approx=members, weights=np.full(3, 1 / 3), omega=omega)
        rep = lemma_decomposition(ma, truth)
        scale = float(np.sum(np.abs(truth) ** 2))
        assert rep.mu <= 1e-28 * scale and rep.mu_tot <= 1e-28 * scale

    def test_shape_mismatch_rejected(self):
        ma = ModeApproximations(
            approx=[np.zeros((2, 2), dtype=complex)] * 2, weights=np.array([0.5, 0.5])
        )
        with pytest.raises(ValueError):
            lemma_decomposition(ma, np.zeros((3, 3), dtype=complex))
