import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from noisysort.seqcore import (
    DomainError,
    Energy,
    as_sequence,
    displacement_inversion,
    is_sorted,
    sample_comparison,
    sorted_of,
    swap_probability,
    swap_probability_array,
    weighted_inversion,
    weighted_inversion_batch,
)

from conftest import within_sigmas

# mpmath, 30 digits: e^2 / (e^2 + 1)
SP_2_1_E = 0.880797077977882444059729141302


def brute_w(s):
    return sum(s[i] - s[j] for i, j in itertools.combinations(range(len(s)), 2) if s[i] > s[j])


class TestSwapProbability:
    def test_equal_elements_are_a_coin(self):
        assert swap_probability(5, 5, Energy(math.e)) == 0.5

    def test_inverted_pair(self):
        assert swap_probability(2, 1, Energy(math.e)) == pytest.approx(SP_2_1_E, rel=1e-15)

    def test_lambda_one_is_fair(self):
        assert swap_probability(1, 2, Energy(1.0)) == 0.5

    def test_no_overflow_for_huge_gaps(self):
        e = Energy(math.exp(50))
        assert swap_probability(0, 1e6, e) == 0.0
        assert swap_probability(1e6, 0, e) == 1.0

    @pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
    def test_rejects_non_finite(self, bad):
        with pytest.raises(DomainError):
            swap_probability(bad, 1.0, Energy(2.0))

    @pytest.mark.parametrize("lam", [0.0, -1.0, math.nan, math.inf])
    def test_rejects_bad_lambda(self, lam):
        with pytest.raises(DomainError):
            Energy(lam)

    def test_noise_constructor(self):
        e = Energy.from_noise(5.0)
        assert e.lam == math.exp(0.2)
        assert e.log_lam == 0.2

    @given(st.floats(-50, 50), st.floats(-50, 50), st.floats(0.01, 100))
    def test_complementary(self, a, b, lam):
        e = Energy(lam)
        assert abs(swap_probability(a, b, e) + swap_probability(b, a, e) - 1.0) <= 2.3e-16

    @given(st.floats(-20, 20), st.floats(0.0, 5.0), st.floats(1.01, 20))
    def test_monotone_in_gap(self, d, extra, lam):
        e = Energy(lam)
        assert swap_probability(d + extra, 0.0, e) >= swap_probability(d, 0.0, e)

    def test_array_matches_scalar(self):
        a = np.array([0.0, 1.0, 3.0, -2.0])
        b = np.array([1.0, 0.0, 3.0, 5.0])
        e = Energy(1.7)
        expected = [swap_probability(x, y, e) for x, y in zip(a, b)]
        np.testing.assert_allclose(swap_probability_array(a, b, e.log_lam), expected, rtol=1e-14)


class TestWeightedInversion:
    @pytest.mark.parametrize("s, w", [((5, 2, 3), 5), ((1, 2, 3), 0), ((3, 2, 1), 4), ((2, 3, 1), 3)])
    def test_examples(self, s, w):
        assert weighted_inversion(s) == w
        assert displacement_inversion(s) == pytest.approx(w, rel=1e-9)

    def test_single_element(self):
        assert displacement_inversion((7,)) == 0

    def test_identity_exhaustive(self):
        rng = np.random.default_rng(7)
        for n in range(1, 8):
            for _ in range(3):
                ms = rng.integers(0, 6, size=n).astype(float)
                for s in set(itertools.permutations(ms)):
                    w = weighted_inversion(s)
                    assert w == brute_w(s)
                    assert displacement_inversion(s) == pytest.approx(w, rel=1e-9, abs=1e-12)

    @settings(max_examples=200)
    @given(st.lists(st.integers(-20, 20), min_size=1, max_size=9))
    def test_zero_iff_sorted(self, xs):
        s = as_sequence(xs)
        assert (weighted_inversion(s) == 0) == (s == sorted_of(s)) == is_sorted(s)

    def test_batch(self):
        states = np.array([[5, 2, 3], [1, 2, 3], [3, 2, 1]], dtype=float)
        np.testing.assert_array_equal(weighted_inversion_batch(states), [5, 0, 4])


class TestSortedOf:
    def test_examples(self):
        assert sorted_of((5, 2, 3)) == (2, 3, 5)
        assert sorted_of((4,)) == (4,)
        assert sorted_of((2, 2, 1)) == (1, 2, 2)

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            sorted_of(())


class TestSampleComparison:
    N = 100_000

    def _freq(self, a, b, e, seed=0):
        rng = np.random.default_rng(seed)
        return sum(sample_comparison(a, b, e, rng) for _ in range(self.N))

    def test_equal_elements(self):
        assert within_sigmas(self._freq(3, 3, Energy(4.0)), self.N, 0.5)

    def test_inverted_pair(self):
        assert within_sigmas(self._freq(2, 1, Energy(math.e), 1), self.N, SP_2_1_E)

    def test_fair_at_lambda_one(self):
        assert within_sigmas(self._freq(1, 9, Energy(1.0), 2), self.N, 0.5)

    def test_deterministic(self):
        e = Energy(2.0)
        a = [sample_comparison(1, 2, e, np.random.default_rng(3)) for _ in range(5)]
        b = [sample_comparison(1, 2, e, np.random.default_rng(3)) for _ in range(5)]
        assert a == b
