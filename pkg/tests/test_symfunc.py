"""Cone algebra: frozen examples against brute-force oracles, plus properties."""

import json
import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hessianlab.errors import InputError
from hessianlab.symfunc import (
    ConeReport,
    cone_mask,
    elementary_symmetric,
    elementary_symmetric_table,
    in_cone,
    reduced_symmetric,
    sample_cone,
    symmetric_gradient,
    verify_cone_inequalities,
)


def brute_force_sk(lam, k):
    """Independent oracle: direct subset-sum expansion."""
    n = len(lam)
    if k == 0:
        return 1.0
    if k < 0 or k > n:
        return 0.0
    return sum(math.prod(lam[i] for i in idx) for idx in combinations(range(n), k))


finite_vecs = st.lists(
    st.floats(min_value=-10, max_value=10, allow_nan=False, allow_infinity=False),
    min_size=1,
    max_size=10,
)


class TestElementarySymmetric:
    def test_all_ones(self):
        assert elementary_symmetric(np.ones(3), 2) == 3.0  # C(3,2)

    def test_k_above_n_is_zero(self):
        assert elementary_symmetric(np.array([1.0, 2.0, 3.0]), 4) == 0.0

    def test_negative_k_is_zero(self):
        assert elementary_symmetric(np.array([1.0, 2.0, 3.0]), -1) == 0.0

    def test_k_zero_is_one(self):
        assert elementary_symmetric(np.array([-5.0, 7.0]), 0) == 1.0

    def test_oracle_example(self):
        # subset-sum oracle: 1*2 + 1*3 + 2*3 = 11
        assert elementary_symmetric(np.array([1.0, 2.0, 3.0]), 2) == 11.0

    def test_rejects_nonfinite(self):
        with pytest.raises(InputError):
            elementary_symmetric(np.array([1.0, np.nan]), 1)

    @given(finite_vecs, st.integers(min_value=0, max_value=11))
    @settings(max_examples=200, deadline=None)
    def test_matches_brute_force(self, entries, k):
        lam = np.asarray(entries)
        got = elementary_symmetric(lam, k)
        want = brute_force_sk(entries, k)
        scale = max(1.0, abs(got), abs(want))
        assert abs(got - want) <= 1e-12 * scale

    @given(st.lists(st.integers(min_value=-6, max_value=6), min_size=1, max_size=12),
           st.integers(min_value=0, max_value=12))
    @settings(max_examples=200, deadline=None)
    def test_integer_inputs_exact(self, entries, k):
        lam = np.asarray(entries, dtype=float)
        assert elementary_symmetric(lam, k) == brute_force_sk(entries, k)

    def test_batched(self):
        lam = np.array([[1.0, 2.0, 3.0], [1.0, 1.0, 1.0]])
        np.testing.assert_allclose(elementary_symmetric(lam, 2), [11.0, 3.0])

    def test_large_n_stable(self):
        lam = np.linspace(0.5, 2.0, 64)
        table = elementary_symmetric_table(lam, 10)
        assert np.all(np.isfinite(table))
        # spot check degrees 1 and 2 against direct sums
        assert abs(table[1] - lam.sum()) < 1e-10 * abs(lam.sum())
        s2 = (lam.sum() ** 2 - (lam**2).sum()) / 2
        assert abs(table[2] - s2) < 1e-10 * abs(s2)


class TestReducedSymmetric:
    def test_delete_and_sum(self):
        assert reduced_symmetric(np.array([1.0, 2.0, 3.0]), 1, {0}) == 5.0

    def test_s0_convention(self):
        assert reduced_symmetric(np.array([1.0, 2.0, 3.0]), 0, {1}) == 1.0

    def test_two_entry_example(self):
        assert reduced_symmetric(np.array([4.0, 1.0, -1.0]), 2, {2}) == 4.0

    def test_out_of_range_index(self):
        with pytest.raises(InputError):
            reduced_symmetric(np.array([1.0, 2.0]), 1, {5})

    def test_duplicate_indices(self):
        with pytest.raises(InputError):
            reduced_symmetric(np.array([1.0, 2.0, 3.0]), 1, [0, 0])

    @given(finite_vecs, st.integers(min_value=0, max_value=5))
    @settings(max_examples=100, deadline=None)
    def test_matches_deletion_oracle(self, entries, k):
        if len(entries) < 2:
            return
        lam = np.asarray(entries)
        got = reduced_symmetric(lam, k, {0})
        want = brute_force_sk(entries[1:], k)
        scale = max(1.0, abs(got), abs(want))
        assert abs(got - want) <= 1e-12 * scale


class TestSymmetricGradient:
    def test_symmetry(self):
        np.testing.assert_allclose(symmetric_gradient(np.ones(3), 2), [2.0, 2.0, 2.0])

    def test_deletion_example(self):
        np.testing.assert_allclose(
            symmetric_gradient(np.array([3.0, 2.0, -1.0]), 2), [1.0, 2.0, 5.0]
        )

    def test_m_one_is_ones(self):
        np.testing.assert_allclose(
            symmetric_gradient(np.array([9.0, -4.0, 0.3]), 1), [1.0, 1.0, 1.0]
        )

    def test_finite_difference_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(25):
            n = int(rng.integers(2, 7))
            m = int(rng.integers(1, n + 1))
            lam = rng.normal(size=n)
            grad = symmetric_gradient(lam, m)
            eps = 1e-6
            for i in range(n):
                up, dn = lam.copy(), lam.copy()
                up[i] += eps
                dn[i] -= eps
                fd = (elementary_symmetric(up, m) - elementary_symmetric(dn, m)) / (2 * eps)
                assert abs(grad[i] - fd) <= 1e-6 * max(1.0, abs(fd))

    def test_positive_on_cone(self):
        rng = np.random.default_rng(1)
        lam = sample_cone(rng, 4, 2, 500)
        grads = symmetric_gradient(lam, 2)
        assert np.all(grads > 0)

    def test_expansion_identity_exact(self):
        # S_k = S_{k;i} + lam_i S_{k-1;i} to 1e-12 relative
        rng = np.random.default_rng(2)
        for _ in range(50):
            n = int(rng.integers(2, 8))
            lam = rng.normal(size=n) * 3
            for k in range(1, n + 1):
                sk = elementary_symmetric(lam, k)
                for i in range(n):
                    rhs = reduced_symmetric(lam, k, {i}) + lam[i] * reduced_symmetric(
                        lam, k - 1, {i}
                    )
                    assert abs(sk - rhs) <= 1e-12 * max(1.0, abs(sk), abs(rhs))


class TestInCone:
    def test_example_inside(self):
        rep = in_cone(np.array([3.0, 2.0, -1.0]), 2)
        assert rep.in_cone
        np.testing.assert_allclose(rep.s_values, [4.0, 1.0])

    def test_example_outside(self):
        rep = in_cone(np.array([3.0, 1.0, -1.0]), 2)
        assert not rep.in_cone
        assert rep.s_values[1] == -1.0

    def test_all_ones_any_m(self):
        for n in range(1, 7):
            for m in range(1, n + 1):
                assert in_cone(np.ones(n), m).in_cone

    def test_margin_normalization(self):
        rep = in_cone(np.ones(4), 2)
        assert rep.margin == pytest.approx(1.0)

    def test_m_out_of_range(self):
        with pytest.raises(InputError):
            in_cone(np.ones(3), 4)

    @given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=8),
           st.floats(0.01, 100.0))
    @settings(max_examples=150, deadline=None)
    def test_positive_homogeneity(self, entries, t):
        lam = np.asarray(entries)
        m = max(1, len(entries) // 2)
        assert in_cone(lam, m).in_cone == in_cone(t * lam, m).in_cone

    @given(st.lists(st.floats(-5, 5, allow_nan=False), min_size=2, max_size=8),
           st.randoms())
    @settings(max_examples=150, deadline=None)
    def test_permutation_invariance(self, entries, rand):
        lam = list(entries)
        m = max(1, len(entries) // 2)
        before = in_cone(np.asarray(lam), m).in_cone
        rand.shuffle(lam)
        assert in_cone(np.asarray(lam), m).in_cone == before

    def test_sorted_cone_has_m_positive_entries(self):
        rng = np.random.default_rng(3)
        for n, m in [(3, 2), (4, 2), (5, 3)]:
            lam = sample_cone(rng, n, m, 2000)
            ls = np.sort(lam, axis=-1)[:, ::-1]
            assert np.all(ls[:, m - 1] > 0)


class TestVerificationSuite:
    def test_small_suite_passes(self):
        rep = verify_cone_inequalities(3, 2, 2000, seed=7)
        assert rep.all_pass()
        assert rep.theta_hat > 0
        assert set(rep.results) == {
            "monotonicity",
            "restricted_positivity",
            "expansion_identity",
            "product_lower_bound",
            "product_bound",
            "gradient_lower_bound",
            "weighted_cauchy_schwarz",
            "maclaurin",
        }

    def test_halfspace_trivial(self):
        rep = verify_cone_inequalities(2, 1, 1000, seed=3)
        assert rep.all_pass()

    def test_json_shape(self):
        rep = verify_cone_inequalities(3, 2, 500, seed=1)
        doc = json.loads(rep.to_json())
        for name, entry in doc.items():
            if name == "_meta":
                continue
            assert set(entry) == {"pass", "fail", "worst_slack", "witness"}
            assert entry["pass"] + entry["fail"] == 500

    def test_sharded_matches_serial(self):
        serial = verify_cone_inequalities(3, 2, 3000, seed=9, workers=1)
        sharded = verify_cone_inequalities(3, 2, 3000, seed=9, workers=3)
        # same total counts; shards draw independent substreams so the
        # worst slack may differ, but pass/fail totals must agree on zero fails
        for name in serial.results:
            assert serial.results[name].fails == 0
            assert sharded.results[name].fails == 0
            assert (
                sharded.results[name].passes + sharded.results[name].fails == 3000
            )

    def test_sharded_deterministic(self):
        a = verify_cone_inequalities(4, 2, 2000, seed=5, workers=2)
        b = verify_cone_inequalities(4, 2, 2000, seed=5, workers=2)
        assert a.to_json() == b.to_json()

    def test_rejects_bad_range(self):
        with pytest.raises(InputError):
            verify_cone_inequalities(3, 3, 100, seed=0)

    def test_theta_explicit_bound(self):
        rep = verify_cone_inequalities(4, 2, 5000, seed=11)
        assert rep.theta_hat >= rep.theta_explicit - 1e-12


def test_cone_mask_matches_in_cone():
    rng = np.random.default_rng(5)
    lam = rng.uniform(-1, 3, size=(500, 4))
    mask = cone_mask(lam, 2)
    for row, flag in zip(lam, mask):
        assert in_cone(row, 2).in_cone == bool(flag)
