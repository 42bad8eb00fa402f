"""Sequences, the noisy comparator and the total weighted inversion."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence as _Seq

import numpy as np

Sequence = tuple  # tuple of floats; the chain state


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of an operation."""


def as_sequence(values: Iterable[float]) -> tuple:
    """Validate and freeze ``values`` into a state tuple of floats."""
    seq = tuple(float(v) for v in values)
    if not seq:
        raise DomainError("a sequence needs at least one element")
    for v in seq:
        if not math.isfinite(v):
            raise DomainError(f"non-finite element {v!r}")
    return seq


@dataclass(frozen=True)
class Energy:
    """Comparator accuracy ``lam``; ``noise`` is kept when built via ``from_noise``."""

    lam: float
    noise: Optional[float] = None

    def __post_init__(self):
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise DomainError(f"lambda must be finite and > 0, got {self.lam!r}")

    @classmethod
    def from_noise(cls, noise: float) -> "Energy":
        if not (math.isfinite(noise) and noise > 0):
            raise DomainError(f"noise must be finite and > 0, got {noise!r}")
        return cls(math.exp(1.0 / noise), noise)

    @property
    def log_lam(self) -> float:
        if self.noise is not None:
            return 1.0 / self.noise
        return math.log(self.lam)


def _check_pair(a: float, b: float) -> None:
    if not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError(f"non-finite comparison operands {a!r}, {b!r}")


def swap_probability(a: float, b: float, e: Energy) -> float:
    """Probability that a left element ``a`` and a right element ``b`` get swapped.

    Logistic form of ``lam**(a-b) / (lam**(a-b) + lam**(b-a))``; it does not
    overflow for large gaps.
    """
    _check_pair(a, b)
    x = 2.0 * (b - a) * e.log_lam
    if x >= 0:
        z = math.exp(-x)
        return z / (1.0 + z)
    return 1.0 / (1.0 + math.exp(x))


def swap_probability_array(a, b, log_lam: float) -> np.ndarray:
    """Vectorised :func:`swap_probability` (no validation)."""
    x = 2.0 * (np.asarray(b, dtype=float) - np.asarray(a, dtype=float)) * log_lam
    return np.exp(-np.logaddexp(0.0, x))


def weighted_inversion(s: _Seq[float]) -> float:
    """Sum of ``s[i] - s[j]`` over all pairs ``i < j`` with ``s[i] > s[j]``."""
    total = 0.0
    n = len(s)
    for i in range(n):
        si = s[i]
        for j in range(i + 1, n):
            if si > s[j]:
                total += si - s[j]
    return total


def displacement_inversion(s: _Seq[float]) -> float:
    """Weighted inversion via displacements from the sorted order.

    Uses ``sum_i (sorted(s)[i] - s[i]) * i``; equal to
    :func:`weighted_inversion` for every sequence.
    """
    srt = sorted(s)
    # index base is irrelevant: sum(srt) == sum(s)
    total = math.fsum((srt[i] - s[i]) * (i + 1) for i in range(len(s)))
    return max(total, 0.0)


def sorted_of(s: _Seq[float]) -> tuple:
    return tuple(sorted(as_sequence(s)))


def is_sorted(s: _Seq[float]) -> bool:
    return all(s[i] <= s[i + 1] for i in range(len(s) - 1))


def sample_comparison(a: float, b: float, e: Energy, rng: np.random.Generator) -> bool:
    """One noisy comparison; True means the pair gets swapped."""
    return bool(rng.random() < swap_probability(a, b, e))


def weighted_inversion_batch(states: np.ndarray) -> np.ndarray:
    """Weighted inversion of each row of a ``(replicas, n)`` array."""
    states = np.asarray(states, dtype=float)
    n = states.shape[-1]
    diff = states[..., :, None] - states[..., None, :]
    upper = np.triu(np.ones((n, n), dtype=bool), k=1)
    return np.where(upper & (diff > 0), diff, 0.0).sum(axis=(-2, -1))
