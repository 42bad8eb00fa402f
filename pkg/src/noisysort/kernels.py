"""Step samplers and one-step transition probabilities of the three chains.

``ADJ`` swaps a uniformly chosen adjacent pair, ``ANY`` a uniformly chosen
pair ``i < j``, and ``ANY_STAR`` does the same as ``ANY`` but accepts the swap
only if ``j - i`` independent comparisons all agree.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from math import comb
from typing import Iterator

import numpy as np

from .seqcore import DomainError, Energy, swap_probability


class ChainKind(enum.Enum):
    ADJ = "adj"
    ANY = "any"
    ANY_STAR = "any-star"

    @classmethod
    def parse(cls, name: "str | ChainKind") -> "ChainKind":
        if isinstance(name, cls):
            return name
        try:
            return cls(str(name).lower().replace("_", "-"))
        except ValueError:
            raise DomainError(
                f"unknown chain {name!r}; expected one of adj, any, any-star"
            ) from None

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class Move:
    """Trace record of one step; positions are 1-based."""

    i: int
    j: int
    accepted: bool


def pair_count(kind: ChainKind, n: int) -> int:
    return n - 1 if kind is ChainKind.ADJ else comb(n, 2)


def candidate_pairs(kind: ChainKind, n: int) -> Iterator[tuple[int, int]]:
    """0-based position pairs ``(i, j)`` proposed by ``kind``, each equally likely."""
    if kind is ChainKind.ADJ:
        for i in range(n - 1):
            yield i, i + 1
    else:
        for i in range(n - 1):
            for j in range(i + 1, n):
                yield i, j


def acceptance(kind: ChainKind, s: tuple, i: int, j: int, e: Energy) -> float:
    q = swap_probability(s[i], s[j], e)
    if kind is ChainKind.ANY_STAR:
        return q ** (j - i)
    return q


def swapped(s: tuple, i: int, j: int) -> tuple:
    t = list(s)
    t[i], t[j] = t[j], t[i]
    return tuple(t)


def neighbours(kind: ChainKind, s: tuple, e: Energy) -> dict[tuple, float]:
    """Off-diagonal row of the transition matrix at ``s`` as ``{t: P(s, t)}``."""
    n = len(s)
    out: dict[tuple, float] = {}
    if n < 2:
        return out
    pick = 1.0 / pair_count(kind, n)
    for i, j in candidate_pairs(kind, n):
        if s[i] == s[j]:
            continue
        t = swapped(s, i, j)
        out[t] = out.get(t, 0.0) + pick * acceptance(kind, s, i, j, e)
    return out


def transition_probability(kind, s, t, e: Energy) -> float:
    """Exact one-step probability ``P(s, t)``; the diagonal is the complement."""
    kind = ChainKind.parse(kind)
    s, t = tuple(map(float, s)), tuple(map(float, t))
    if len(s) != len(t) or sorted(s) != sorted(t):
        raise DomainError("t is not a rearrangement of s")
    row = neighbours(kind, s, e)
    if s == t:
        return max(0.0, 1.0 - sum(row.values()))
    return row.get(t, 0.0)


def step(kind, s: tuple, e: Energy, rng: np.random.Generator) -> tuple[tuple, Move]:
    """Advance one step from ``s``; returns the next state and the move taken."""
    kind = ChainKind.parse(kind)
    n = len(s)
    if n < 2:
        return s, Move(1, 1, False)
    if kind is ChainKind.ADJ:
        i = int(rng.integers(n - 1))
        j = i + 1
    else:
        i, j = sorted(rng.choice(n, size=2, replace=False).tolist())
    accepted = bool(rng.random() < acceptance(kind, s, i, j, e))
    if accepted and s[i] != s[j]:
        s = swapped(s, i, j)
    return s, Move(i + 1, j + 1, accepted)
