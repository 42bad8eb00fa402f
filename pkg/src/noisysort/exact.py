"""Exact analysis on enumerated state spaces.

Stationary distributions come from three independent routes: a direct linear
solve, the Gibbs closed form ``pi(s) ~ lam**(-2 w(s))`` and the Markov chain
tree theorem (Laplacian minors, with a brute-force arborescence count as the
small-case oracle).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from collections import Counter
from typing import Sequence as _Seq

import mpmath
import numpy as np

from .kernels import ChainKind, candidate_pairs, neighbours, swapped
from .seqcore import DomainError, Energy, as_sequence, weighted_inversion

DEFAULT_STATE_CAP = 5040
TREE_STATE_CAP = 200
BRUTE_STATE_CAP = 8
STATIONARY_TOL = 1e-10
STRICT_SLACK = 1e-12
HIGH_PRECISION_DPS = 60


class StateSpaceTooLarge(ValueError):
    pass


class NumericError(ArithmeticError):
    pass


def multinomial(multiset: _Seq[float]) -> int:
    count = factorial(len(multiset))
    for m in Counter(multiset).values():
        count //= factorial(m)
    return count


@dataclass(frozen=True)
class StateSpace:
    """All distinct arrangements of a multiset, in lexicographic order."""

    states: tuple
    index: dict = field(compare=False, repr=False)

    def __len__(self) -> int:
        return len(self.states)

    @property
    def sorted_state(self) -> tuple:
        return self.states[0]

    def weights(self) -> np.ndarray:
        return np.array([weighted_inversion(s) for s in self.states])

    def position(self, s) -> int:
        try:
            return self.index[tuple(map(float, s))]
        except KeyError:
            raise DomainError(f"{tuple(s)} is not a state of this space") from None


def _distinct_permutations(items: list) -> list[tuple]:
    # next-permutation walk starting from the sorted arrangement
    a = sorted(items)
    out = [tuple(a)]
    n = len(a)
    while True:
        k = n - 2
        while k >= 0 and a[k] >= a[k + 1]:
            k -= 1
        if k < 0:
            return out
        m = n - 1
        while a[m] <= a[k]:
            m -= 1
        a[k], a[m] = a[m], a[k]
        a[k + 1:] = reversed(a[k + 1:])
        out.append(tuple(a))


def enumerate_states(multiset, cap: int = DEFAULT_STATE_CAP) -> StateSpace:
    items = list(as_sequence(multiset))
    count = multinomial(items)
    if count > cap:
        raise StateSpaceTooLarge(
            f"state space has {count} arrangements, above the cap of {cap}"
        )
    states = tuple(_distinct_permutations(items))
    return StateSpace(states, {s: k for k, s in enumerate(states)})


@dataclass(frozen=True)
class TransitionMatrix:
    kind: ChainKind
    energy: Energy
    space: StateSpace
    rows: np.ndarray

    def __len__(self) -> int:
        return len(self.space)

    def entry(self, s, t) -> float:
        return float(self.rows[self.space.position(s), self.space.position(t)])


def build_matrix(kind, multiset, e: Energy, cap: int = DEFAULT_STATE_CAP) -> TransitionMatrix:
    kind = ChainKind.parse(kind)
    space = multiset if isinstance(multiset, StateSpace) else enumerate_states(multiset, cap)
    size = len(space)
    rows = np.zeros((size, size))
    for a, s in enumerate(space.states):
        for t, prob in neighbours(kind, s, e).items():
            rows[a, space.index[t]] += prob
        # self-loop by complement
        rows[a, a] = max(0.0, 1.0 - (rows[a].sum() - rows[a, a]))
    return TransitionMatrix(kind, e, space, rows)


def _normalise(pi: np.ndarray) -> np.ndarray:
    pi = np.where((pi < 0) & (pi >= -1e-12), 0.0, pi)
    return pi / pi.sum()


def stationary_residual(P, pi) -> float:
    rows = P.rows if isinstance(P, TransitionMatrix) else np.asarray(P)
    return float(np.max(np.abs(pi @ rows - pi)))


def stationary_solve(P) -> np.ndarray:
    """Solve ``pi P = pi`` with the last balance equation replaced by ``sum(pi) = 1``."""
    rows = P.rows if isinstance(P, TransitionMatrix) else np.asarray(P, dtype=float)
    size = rows.shape[0]
    A = rows.T - np.eye(size)
    A[-1, :] = 1.0
    b = np.zeros(size)
    b[-1] = 1.0
    pi = _normalise(np.linalg.solve(A, b))
    if np.any(pi < 0):
        raise NumericError(f"negative stationary mass {pi.min():.3e}")
    res = stationary_residual(rows, pi)
    if res > STATIONARY_TOL:
        raise NumericError(f"stationary residual {res:.3e} exceeds {STATIONARY_TOL:g}")
    return pi


def gibbs_distribution(space: StateSpace, e: Energy) -> np.ndarray:
    logw = -2.0 * space.weights() * e.log_lam
    logz = np.logaddexp.reduce(logw)
    return np.exp(logw - logz)


def _off_diagonal(P) -> np.ndarray:
    rows = P.rows if isinstance(P, TransitionMatrix) else np.asarray(P, dtype=float)
    W = np.array(rows, dtype=float)
    np.fill_diagonal(W, 0.0)
    return W


def _minor_logdet(W: np.ndarray, root: int) -> float:
    """Log of the Laplacian minor at ``root``, by cancellation-free elimination.

    The minor is an M-matrix whose row excesses are the rates into ``root``.
    Eliminating while carrying those excesses makes every pivot a sum of
    non-negative terms, so the result keeps full relative accuracy even when
    the minor is tiny. Returns ``-inf`` when some state cannot reach ``root``.
    """
    keep = [k for k in range(W.shape[0]) if k != root]
    B = W[np.ix_(keep, keep)].copy()
    excess = W[keep, root].copy()
    total = 0.0
    while len(excess):
        pivot = excess[0] + B[0, 1:].sum()
        if pivot <= 0.0:
            return -np.inf
        total += np.log(pivot)
        f = B[1:, 0] / pivot
        B = B[1:, 1:] + np.outer(f, B[0, 1:])
        np.fill_diagonal(B, 0.0)
        excess = excess[1:] + f * excess[0]
    return float(total)


def arborescence_weights_log(P) -> tuple[np.ndarray, np.ndarray]:
    """Sign and log of the Laplacian minor for every root (sign 0 when the minor vanishes)."""
    W = _off_diagonal(P)
    logs = np.array([_minor_logdet(W, r) for r in range(W.shape[0])])
    signs = np.where(np.isfinite(logs), 1.0, 0.0)
    return signs, logs


def arborescence_weight(P, root: int) -> float:
    """Total weight of in-arborescences rooted at ``root`` via the Laplacian minor."""
    return float(np.exp(_minor_logdet(_off_diagonal(P), root)))


def stationary_tree(P) -> np.ndarray:
    """Stationary distribution from the Markov chain tree theorem."""
    rows = P.rows if isinstance(P, TransitionMatrix) else np.asarray(P, dtype=float)
    size = rows.shape[0]
    if size > TREE_STATE_CAP:
        raise StateSpaceTooLarge(
            f"tree method is limited to {TREE_STATE_CAP} states, got {size}"
        )
    signs, logs = arborescence_weights_log(rows)
    if np.any(signs <= 0):
        raise NumericError("vanishing Laplacian minor; is the chain irreducible?")
    return np.exp(logs - np.logaddexp.reduce(logs))


def arborescence_bruteforce(P, root: int) -> float:
    """Sum of ``prod P(u, parent(u))`` over all spanning in-trees rooted at ``root``.

    Every non-root state picks one positive-probability out-edge; a choice is
    kept when following parents from every state reaches the root.
    """
    rows = P.rows if isinstance(P, TransitionMatrix) else np.asarray(P, dtype=float)
    size = rows.shape[0]
    if size > BRUTE_STATE_CAP:
        raise StateSpaceTooLarge(
            f"brute-force enumeration is limited to {BRUTE_STATE_CAP} states, got {size}"
        )
    others = [u for u in range(size) if u != root]
    options = [[v for v in range(size) if v != u and rows[u, v] > 0] for u in others]
    parent = [-1] * size
    total = 0.0

    def extend(k: int, weight: float) -> None:
        nonlocal total
        if k == len(others):
            total += weight
            return
        u = others[k]
        for v in options[k]:
            parent[u] = v
            # reject a cycle through already-assigned states early
            w = v
            steps = 0
            while w != root and parent[w] >= 0 and w != u and steps <= size:
                w = parent[w]
                steps += 1
            if w != u:
                extend(k + 1, weight * rows[u, v])
        parent[u] = -1

    extend(0, 1.0)
    return total


def detailed_balance_residual(P, pi) -> float:
    rows = P.rows if isinstance(P, TransitionMatrix) else np.asarray(P, dtype=float)
    flow = np.asarray(pi)[:, None] * rows
    return float(np.max(np.abs(flow - flow.T)))


def kolmogorov_cycle_ratio(P, cycle) -> float:
    """Ratio of the forward to the reversed product of transition probabilities.

    ``cycle`` lists state indices (or states); it is closed implicitly when the
    last entry differs from the first.
    """
    rows = P.rows
    idx = [c if isinstance(c, (int, np.integer)) else P.space.position(c) for c in cycle]
    if idx[0] != idx[-1]:
        idx.append(idx[0])
    forward = backward = 1.0
    for u, v in zip(idx, idx[1:]):
        if rows[u, v] <= 0 or rows[v, u] <= 0:
            raise DomainError(f"cycle uses the zero-probability edge {u} -> {v}")
        forward *= rows[u, v]
        backward *= rows[v, u]
    return forward / backward


def _check_strict_energy(e: Energy) -> None:
    if e.log_lam == 0.0:
        raise DomainError("lambda = 1 is the equality case; strict checks exclude it")


def stationary_solve_mp(kind, space: StateSpace, e: Energy, dps: int = HIGH_PRECISION_DPS) -> list:
    """High-precision stationary distribution for small spaces.

    Same replaced-equation solve as :func:`stationary_solve`, carried out in
    ``dps`` decimal digits so that masses near 0 or 1 keep their relative
    accuracy.
    """
    kind = ChainKind.parse(kind)
    size = len(space)
    with mpmath.workdps(dps):
        log_lam = mpmath.mpf(e.log_lam)
        n = len(space.sorted_state)
        pairs = list(candidate_pairs(kind, n))
        pick = mpmath.mpf(1) / len(pairs)
        A = mpmath.zeros(size, size)
        for a, s in enumerate(space.states):
            out = mpmath.mpf(0)
            for i, j in pairs:
                if s[i] == s[j]:
                    continue
                q = 1 / (1 + mpmath.exp(2 * (mpmath.mpf(s[j]) - mpmath.mpf(s[i])) * log_lam))
                if kind is ChainKind.ANY_STAR:
                    q = q ** (j - i)
                A[space.index[swapped(s, i, j)], a] += pick * q
                out += pick * q
            A[a, a] -= out
        for k in range(size):
            A[size - 1, k] = 1
        b = mpmath.zeros(size, 1)
        b[size - 1] = 1
        pi = mpmath.lu_solve(A, b)
        return [pi[k] for k in range(size)]


def verify_adj_better(a: float, b: float, c: float, e: Energy):
    """Stationary mass of the sorted triple under the adjacent and any-pair chains.

    Returns ``(pi_adj, pi_any, holds)`` where ``holds`` means
    ``pi_adj > pi_any + 1e-12``. The solve runs in high precision.
    """
    _check_strict_energy(e)
    a, b, c = as_sequence((a, b, c))
    if not a <= b <= c:
        raise DomainError("expected a <= b <= c")
    if a == c:
        raise DomainError("the three elements must not all be equal")
    space = enumerate_states((a, b, c))
    k = space.position((a, b, c))
    pi_adj = stationary_solve_mp(ChainKind.ADJ, space, e)[k]
    pi_any = stationary_solve_mp(ChainKind.ANY, space, e)[k]
    return float(pi_adj), float(pi_any), bool(pi_adj - pi_any > STRICT_SLACK)


def adj_better_margin(a: float, b: float, c: float, e: Energy, state=None) -> float:
    """Exact ``pi_adj(state) - pi_any(state)``; ``state`` defaults to the sorted triple."""
    space = enumerate_states((a, b, c))
    k = space.position(state if state is not None else sorted((a, b, c)))
    pi_adj = stationary_solve_mp(ChainKind.ADJ, space, e)[k]
    pi_any = stationary_solve_mp(ChainKind.ANY, space, e)[k]
    return pi_adj - pi_any


def verify_ratio_lemma(*elements: float, e: Energy):
    """Compare stationary ratios across every adjacent swap that adds disorder.

    Returns ``(s, s2, ratio_adj, ratio_any, holds)`` for each adjacent swap
    ``s -> s2`` with ``w(s2) > w(s)``; ``holds`` is the strict inequality
    ``ratio_adj < ratio_any`` with a relative slack of 1e-12. Accepts any
    multiset, but the inequality is only proved for three elements.
    """
    _check_strict_energy(e)
    space = enumerate_states(elements)
    pi_adj = stationary_solve_mp(ChainKind.ADJ, space, e)
    pi_any = stationary_solve_mp(ChainKind.ANY, space, e)
    w = space.weights()
    out = []
    n = len(space.sorted_state)
    for k, s in enumerate(space.states):
        for i in range(n - 1):
            if s[i] == s[i + 1]:
                continue
            t = swapped(s, i, i + 1)
            m = space.index[t]
            if w[m] <= w[k]:
                continue
            r_adj = pi_adj[m] / pi_adj[k]
            r_any = pi_any[m] / pi_any[k]
            out.append((s, t, float(r_adj), float(r_any),
                        bool(r_adj * (1 + STRICT_SLACK) < r_any)))
    return out
