"""Total variation, exact mixing times and the any-pair path coupling on binary inputs."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from math import comb

import numpy as np

from .closedform import BinarySpec
from .exact import (
    DEFAULT_STATE_CAP,
    StateSpace,
    build_matrix,
    enumerate_states,
    stationary_solve,
)
from .kernels import ChainKind, candidate_pairs, swapped
from .seqcore import DomainError, Energy, as_sequence, swap_probability

MAX_MIXING_STEPS = 10**6


class MixingTimeout(RuntimeError):
    def __init__(self, steps: int, tv: float):
        super().__init__(f"no mixing within {steps} steps; worst-start TV is {tv:.6g}")
        self.steps = steps
        self.tv = tv


def tv_distance(mu, nu) -> float:
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    if mu.shape != nu.shape:
        raise DomainError(f"distributions of different length: {mu.shape} vs {nu.shape}")
    return 0.5 * float(np.abs(mu - nu).sum())


def worst_start_tv(Pt: np.ndarray, pi: np.ndarray) -> float:
    return 0.5 * float(np.abs(Pt - pi[None, :]).sum(axis=1).max())


def empirical_mixing_time(kind, multiset, e: Energy, eps: float,
                          cap: int = DEFAULT_STATE_CAP,
                          max_steps: int = MAX_MIXING_STEPS) -> int:
    """Smallest ``t`` with ``max_s TV(delta_s P^t, pi) <= eps``.

    The distributions from all start states are evolved together, exactly.
    """
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    P = build_matrix(kind, multiset, e, cap)
    pi = stationary_solve(P)
    Pt = np.eye(len(pi))
    tv = worst_start_tv(Pt, pi)
    t = 0
    while tv > eps:
        if t >= max_steps:
            raise MixingTimeout(t, tv)
        Pt = Pt @ P.rows
        t += 1
        tv = worst_start_tv(Pt, pi)
    return t


def _support_neighbours(kind: ChainKind, s: tuple):
    for i, j in candidate_pairs(kind, len(s)):
        if s[i] != s[j]:
            yield swapped(s, i, j)


def _bfs(kind: ChainKind, source: tuple) -> dict:
    dist = {source: 0}
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in _support_neighbours(kind, u):
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def rho_distance(x, y, kind=ChainKind.ANY, space: StateSpace | None = None) -> int:
    """Fewest transitions from ``x`` to ``y``; swap support is symmetric for every kernel."""
    kind = ChainKind.parse(kind)
    x, y = as_sequence(x), as_sequence(y)
    if sorted(x) != sorted(y):
        raise DomainError("x and y are not arrangements of the same multiset")
    if x == y:
        return 0
    return _bfs(kind, x)[y]


def diameter(kind, multiset) -> int:
    kind = ChainKind.parse(kind)
    space = enumerate_states(multiset)
    return max(max(_bfs(kind, s).values()) for s in space.states)


@dataclass(frozen=True)
class CoupledPair:
    """Two binary sequences one transposition apart, at 0-based positions ``i_star < j_star``."""

    x: tuple
    y: tuple
    i_star: int
    j_star: int

    @classmethod
    def of(cls, x, y) -> "CoupledPair":
        x, y = as_sequence(x), as_sequence(y)
        if len(x) != len(y):
            raise DomainError("x and y differ in length")
        diff = [k for k in range(len(x)) if x[k] != y[k]]
        if len(diff) != 2 or swapped(x, *diff) != y:
            raise DomainError("x and y must differ by exactly one transposition")
        return cls(x, y, diff[0], diff[1])


def _move_probability(s: tuple, i: int, j: int, pick: float, e: Energy) -> float:
    # probability that proposing (i, j) changes s
    if s[i] == s[j]:
        return 0.0
    return pick * swap_probability(s[i], s[j], e)


def coupled_joint_table(pair: CoupledPair, spec: BinarySpec, e: Energy) -> list:
    """Exact joint one-step law of the path coupling, as ``[((x', y'), prob), ...]``.

    Proposals are matched as ``{i*, j*}`` with itself, ``{i*, k}`` with
    ``{j*, k}``, ``{k, j*}`` with ``{k, i*}`` and every other pair with itself;
    matched moves happen together with the smaller of their probabilities, the
    excess moves one side alone, and the rest of the mass stays at ``(x, y)``.
    """
    x, y = pair.x, pair.y
    if sorted(x) != sorted(spec.multiset()):
        raise DomainError("the path coupling is defined for binary inputs only")
    n = len(x)
    pick = 1.0 / comb(n, 2)
    istar, jstar = pair.i_star, pair.j_star
    table: dict = {}

    def add(key, prob):
        if prob > 0.0:
            table[key] = table.get(key, 0.0) + prob

    add((y, y), _move_probability(x, istar, jstar, pick, e))
    add((x, x), _move_probability(y, istar, jstar, pick, e))

    def matched(px_pair, py_pair):
        px = _move_probability(x, *px_pair, pick, e)
        py = _move_probability(y, *py_pair, pick, e)
        x2, y2 = swapped(x, *px_pair), swapped(y, *py_pair)
        add((x2, y2), min(px, py))
        add((x2, y), max(0.0, px - py))
        add((x, y2), max(0.0, py - px))

    for k in range(n):
        if k in (istar, jstar):
            continue
        matched(tuple(sorted((istar, k))), tuple(sorted((jstar, k))))
        matched(tuple(sorted((k, jstar))), tuple(sorted((k, istar))))
    for i, j in candidate_pairs(ChainKind.ANY, n):
        if {i, j} & {istar, jstar}:
            continue
        prob = _move_probability(x, i, j, pick, e)
        add((swapped(x, i, j), swapped(y, i, j)), prob)

    rest = 1.0 - sum(table.values())
    if rest < -1e-12:
        raise ArithmeticError(f"coupling mass exceeds one by {-rest:.3e}")
    add((x, y), max(rest, 0.0))
    return sorted(table.items())


def coupled_step_any(pair: CoupledPair, spec: BinarySpec, e: Energy,
                     rng: np.random.Generator) -> tuple[tuple, tuple]:
    table = coupled_joint_table(pair, spec, e)
    probs = np.array([p for _, p in table])
    k = int(rng.choice(len(table), p=probs / probs.sum()))
    return table[k][0]


def coupling_marginals(table) -> tuple[dict, dict]:
    mx: dict = {}
    my: dict = {}
    for (x2, y2), prob in table:
        mx[x2] = mx.get(x2, 0.0) + prob
        my[y2] = my.get(y2, 0.0) + prob
    return mx, my


def expected_rho(table, kind=ChainKind.ANY) -> float:
    return sum(prob * rho_distance(x2, y2, kind) for (x2, y2), prob in table)


def adjacent_pairs(spec: BinarySpec):
    """Every ordered binary pair ``(x, y)`` at distance one under the any-pair chain."""
    space = enumerate_states(spec.multiset())
    for x in space.states:
        for i, j in candidate_pairs(ChainKind.ANY, len(x)):
            if x[i] != x[j]:
                yield CoupledPair.of(x, swapped(x, i, j))
