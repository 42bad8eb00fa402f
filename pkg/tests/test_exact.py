import itertools
import math

import numpy as np
import pytest

from noisysort.exact import (
    NumericError,
    StateSpaceTooLarge,
    adj_better_margin,
    arborescence_bruteforce,
    arborescence_weight,
    build_matrix,
    detailed_balance_residual,
    enumerate_states,
    gibbs_distribution,
    kolmogorov_cycle_ratio,
    multinomial,
    stationary_residual,
    stationary_solve,
    stationary_tree,
    verify_adj_better,
    verify_ratio_lemma,
)
from noisysort.kernels import ChainKind
from noisysort.mixing import tv_distance
from noisysort.seqcore import DomainError, Energy

E = Energy(math.e)
# mpmath, 30 digits
E_M4 = 0.0183156388887341802937180212732
SP_2_1_E = 0.880797077977882444059729141302


class TestEnumerate:
    @pytest.mark.parametrize("ms, size", [((1, 2, 3), 6), ((1, 1, 2), 3), ((1, 1, 2, 2), 6),
                                          ((1, 2, 3, 4, 5, 6, 7), 5040)])
    def test_sizes(self, ms, size):
        space = enumerate_states(ms)
        assert len(space) == size == multinomial(ms)
        assert len(set(space.states)) == size
        assert list(space.states) == sorted(space.states)

    def test_cap(self):
        with pytest.raises(StateSpaceTooLarge, match="40320.*5040"):
            enumerate_states(range(8))
        assert len(enumerate_states(range(8), cap=40320)) == 40320


class TestBuildMatrix:
    def test_two_state(self):
        P = build_matrix("adj", (1, 2), E).rows
        r = 1.0 / (1.0 + math.e ** 2)
        np.testing.assert_allclose(P, [[1 - r, r], [SP_2_1_E, 1 - SP_2_1_E]], rtol=1e-14)

    @pytest.mark.parametrize("kind", list(ChainKind))
    def test_all_equal_identity(self, kind):
        np.testing.assert_array_equal(build_matrix(kind, (3, 3, 3), E).rows, [[1.0]])


class TestStationary:
    def test_trivial_space(self):
        np.testing.assert_array_equal(stationary_solve(np.eye(1)), [1.0])

    def test_two_state(self):
        pi = stationary_solve(build_matrix("adj", (1, 2), E))
        assert pi[0] == pytest.approx(SP_2_1_E, rel=1e-14)

    @pytest.mark.parametrize("lam", [math.exp(0.2), math.e, math.exp(3), 0.7])
    def test_gibbs_matches_solve(self, lam):
        e = Energy(lam)
        space = enumerate_states((1, 2, 3))
        gibbs = gibbs_distribution(space, e)
        for kind in (ChainKind.ADJ, ChainKind.ANY_STAR):
            assert tv_distance(stationary_solve(build_matrix(kind, space, e)), gibbs) <= 1e-10

    def test_gibbs_weights(self):
        space = enumerate_states((1, 2, 3))
        np.testing.assert_array_equal(space.weights(), [0, 1, 1, 3, 3, 4])
        g = gibbs_distribution(space, E)
        np.testing.assert_allclose(g / g[0], np.exp(-2.0 * np.array([0, 1, 1, 3, 3, 4])),
                                   rtol=1e-13)

    def test_gibbs_uniform_at_one(self):
        np.testing.assert_allclose(gibbs_distribution(enumerate_states((1, 2, 2, 5)),
                                                      Energy(1.0)), np.full(12, 1 / 12))

    def test_gibbs_one_outlier_staircase(self):
        lam = 1.7
        space = enumerate_states((1, 1, 4))
        g = gibbs_distribution(space, Energy(lam))
        inversions = np.array([s[s.index(4.0):].count(1.0) for s in space.states])
        expected = lam ** (-2.0 * 3.0 * inversions)
        np.testing.assert_allclose(g, expected / expected.sum(), rtol=1e-13)

    def test_residual_error(self):
        # reducible: the replaced system is singular
        P = np.array([[1.0, 0.0], [0.0, 1.0]])
        with pytest.raises((NumericError, np.linalg.LinAlgError)):
            stationary_solve(P)


class TestTreeTheorem:
    def test_two_state(self):
        q, r = 0.3, 0.6
        P = np.array([[1 - q, q], [r, 1 - r]])
        np.testing.assert_allclose(stationary_tree(P), [r / (q + r), q / (q + r)], rtol=1e-14)
        assert arborescence_bruteforce(P, 0) == r
        assert arborescence_bruteforce(P, 1) == q

    def test_three_state_complete(self):
        rng = np.random.default_rng(0)
        W = rng.uniform(0.05, 0.3, size=(3, 3))
        np.fill_diagonal(W, 0.0)
        P = W + np.diag(1.0 - W.sum(axis=1))
        # hand enumeration: each root has three in-trees
        roots = {
            0: W[1, 0] * W[2, 0] + W[1, 2] * W[2, 0] + W[1, 0] * W[2, 1],
            1: W[0, 1] * W[2, 1] + W[0, 2] * W[2, 1] + W[0, 1] * W[2, 0],
            2: W[0, 2] * W[1, 2] + W[0, 1] * W[1, 2] + W[0, 2] * W[1, 0],
        }
        for root, total in roots.items():
            assert arborescence_bruteforce(P, root) == pytest.approx(total, rel=1e-14)
            assert arborescence_weight(P, root) == pytest.approx(total, rel=1e-12)

    @pytest.mark.parametrize("kind", list(ChainKind))
    @pytest.mark.parametrize("ms", [(1, 2, 3), (1, 1, 2), (1, 1, 2, 2)])
    def test_tree_vs_solve(self, kind, ms):
        P = build_matrix(kind, ms, E)
        assert tv_distance(stationary_tree(P), stationary_solve(P)) <= 1e-8
        W = [arborescence_bruteforce(P, r) for r in range(len(P))]
        np.testing.assert_allclose(np.array(W) / sum(W), stationary_solve(P), atol=1e-12)

    def test_four_state_random(self):
        rng = np.random.default_rng(4)
        W = rng.uniform(0.0, 0.3, size=(4, 4)) * (rng.random((4, 4)) < 0.8)
        np.fill_diagonal(W, 0.0)
        W[np.arange(4), (np.arange(4) + 1) % 4] += 0.05  # keep it irreducible
        P = W + np.diag(1.0 - W.sum(axis=1))
        for r in range(4):
            assert arborescence_weight(P, r) == pytest.approx(arborescence_bruteforce(P, r),
                                                              rel=1e-12)

    def test_guards(self):
        with pytest.raises(StateSpaceTooLarge):
            stationary_tree(build_matrix("adj", (1, 2, 3, 4, 5, 6), E))
        with pytest.raises(StateSpaceTooLarge):
            arborescence_bruteforce(build_matrix("adj", (1, 2, 3, 4), E), 0)
        with pytest.raises(NumericError, match="irreducible"):
            stationary_tree(np.eye(3))

    @pytest.mark.parametrize("log_lam", [6.0, 12.0, -4.6])
    def test_tree_far_from_one(self, log_lam):
        e = Energy(math.exp(log_lam))
        P = build_matrix("any-star", (1, 2, 3, 4), e)
        assert tv_distance(stationary_tree(P), gibbs_distribution(P.space, e)) <= 1e-12


class TestReversibility:
    @pytest.mark.parametrize("kind", [ChainKind.ADJ, ChainKind.ANY_STAR])
    def test_reversible(self, kind):
        P = build_matrix(kind, (1, 2, 2, 4), E)
        assert detailed_balance_residual(P, stationary_solve(P)) <= 1e-10
        assert detailed_balance_residual(P, gibbs_distribution(P.space, E)) <= 1e-10

    def test_any_is_not_reversible(self):
        P = build_matrix("any", (1, 2, 3), E)
        assert detailed_balance_residual(P, stationary_solve(P)) > 1e-6

    def test_witness_cycle(self):
        cycle = [(1, 2, 3), (2, 1, 3), (2, 3, 1), (3, 2, 1)]
        P = build_matrix("any", (1, 2, 3), E)
        assert kolmogorov_cycle_ratio(P, cycle) == pytest.approx(E_M4, rel=1e-12)
        assert kolmogorov_cycle_ratio(build_matrix("any", (1, 2, 3), Energy(1.0)), cycle) == 1.0
        Pa = build_matrix("adj", (1, 2, 3), E)
        ring = [(1, 2, 3), (2, 1, 3), (2, 3, 1), (3, 2, 1), (3, 1, 2), (1, 3, 2)]
        assert kolmogorov_cycle_ratio(Pa, ring) == pytest.approx(1.0, abs=1e-10)

    def test_zero_edge_rejected(self):
        P = build_matrix("adj", (1, 2, 3), E)
        with pytest.raises(DomainError):
            kolmogorov_cycle_ratio(P, [(1, 2, 3), (3, 2, 1)])


class TestAdjBetter:
    @pytest.mark.parametrize("triple", [(1, 2, 3), (1, 1, 2)])
    def test_holds_for_lambda_above_one(self, triple):
        pi_adj, pi_any, holds = verify_adj_better(*triple, E)
        assert holds and pi_adj > pi_any

    def test_lambda_below_one_literal_claim_is_false(self):
        # exact solves: for lambda < 1 the chains sort towards the reversed order
        pi_adj, pi_any, holds = verify_adj_better(1, 2, 3, Energy(0.7))
        assert not holds and pi_adj < pi_any

    def test_lambda_below_one_mirrored(self):
        assert adj_better_margin(1, 2, 3, Energy(0.7), state=(3, 2, 1)) > 0

    def test_rejects_lambda_one(self):
        with pytest.raises(DomainError):
            verify_adj_better(1, 2, 3, Energy(1.0))
        with pytest.raises(DomainError):
            verify_ratio_lemma(1, 2, 3, e=Energy(1.0))

    @pytest.mark.parametrize("triple, lam", [((1, 2, 3), math.e), ((1, 2, 4), math.e ** 2)])
    def test_ratio_lemma(self, triple, lam):
        rows = verify_ratio_lemma(*triple, e=Energy(lam))
        assert rows and all(r[4] for r in rows)
        assert all(r[2] < r[3] for r in rows)


TRIPLES = [t for t in itertools.combinations_with_replacement(range(5), 3) if t[0] != t[2]]


def test_adj_better_strict_at_large_lambda():
    # true margins reach 4e-18: positive, but below a 1e-12 slack
    e = Energy(math.exp(5))
    assert all(adj_better_margin(*t, e) > 0 for t in TRIPLES)
    assert all(r[2] < r[3] for t in TRIPLES for r in verify_ratio_lemma(*t, e=e))


@pytest.mark.parametrize("lam", [0.5, 0.7])
def test_adj_better_mirrored_below_one(lam):
    assert all(adj_better_margin(*t, Energy(lam), state=t[::-1]) > 1e-3 for t in TRIPLES)
