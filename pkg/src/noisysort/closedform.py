"""Binary inputs: staircase encoding, coupling and mixing bounds, and the
one-outlier closed forms.

In the one-outlier case the multiset is ``n - 1`` copies of ``a`` and one
``b > a``; state ``i`` (1-based) has ``b`` at position ``i``, so ``i = n`` is
sorted. ``p`` is the probability that a single comparison of ``a`` and ``b``
comes out wrong.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from .kernels import ChainKind
from .seqcore import DomainError, Energy, as_sequence, swap_probability


@dataclass(frozen=True)
class BinarySpec:
    a: float
    b: float
    n_a: int
    n_b: int

    def __post_init__(self):
        if not self.b > self.a:
            raise DomainError(f"need b > a, got a={self.a}, b={self.b}")
        if self.n_a < 1 or self.n_b < 1:
            raise DomainError("need at least one a and one b")

    @property
    def n(self) -> int:
        return self.n_a + self.n_b

    @property
    def n_min(self) -> int:
        return min(self.n_a, self.n_b)

    @property
    def gap(self) -> float:
        return self.b - self.a

    def multiset(self) -> tuple:
        return (float(self.a),) * self.n_a + (float(self.b),) * self.n_b

    def error_probability(self, e: Energy) -> float:
        return 1.0 - swap_probability(self.b, self.a, e)

    def energy_for(self, p: float) -> Energy:
        return lambda_for_p(p, self.gap)

    @classmethod
    def of(cls, s) -> "BinarySpec":
        s = as_sequence(s)
        values = sorted(set(s))
        if len(values) != 2:
            raise DomainError(f"expected exactly two distinct values, got {len(values)}")
        a, b = values
        return cls(a, b, s.count(a), s.count(b))


def p_from_lambda(a: float, b: float, e: Energy) -> float:
    """Error probability of comparing ``a < b``: ``lam**(a-b) / (lam**(a-b) + lam**(b-a))``."""
    return 1.0 - swap_probability(b, a, e)


def lambda_for_p(p: float, gap: float = 1.0) -> Energy:
    """Energy whose comparisons of two elements ``gap`` apart err with probability ``p``."""
    if not 0.0 < p <= 0.5:
        raise DomainError(f"p must lie in (0, 1/2], got {p}")
    if gap <= 0:
        raise DomainError("gap must be positive")
    return Energy(((1.0 - p) / p) ** (1.0 / (2.0 * gap)))


def to_staircase(s, spec: BinarySpec) -> tuple[int, ...]:
    """Number of ``a``'s after each ``b``, in order of appearance of the ``b``'s."""
    s = as_sequence(s)
    if sorted(s) != sorted(spec.multiset()):
        raise DomainError("sequence does not match the binary multiset")
    v = []
    a_seen = 0
    for x in s:
        if x == spec.a:
            a_seen += 1
        else:
            v.append(spec.n_a - a_seen)
    return tuple(v)


def from_staircase(v, spec: BinarySpec) -> tuple:
    v = [int(x) for x in v]
    if len(v) != spec.n_b or any(x < 0 or x > spec.n_a for x in v):
        raise DomainError(f"staircase {v} does not fit {spec.n_b} b's and {spec.n_a} a's")
    if any(v[k] < v[k + 1] for k in range(len(v) - 1)):
        raise DomainError(f"staircase {v} is not non-increasing")
    out = []
    placed = 0
    for x in v:
        before = spec.n_a - x
        out.extend([float(spec.a)] * (before - placed))
        placed = before
        out.append(float(spec.b))
    out.extend([float(spec.a)] * (spec.n_a - placed))
    return tuple(out)


def _check_p(p: float, allow_half: bool = True) -> None:
    hi_ok = p <= 0.5 if allow_half else p < 0.5
    if not (0.0 < p and hi_ok):
        raise DomainError(f"p must lie in (0, 1/2], got {p}")


def coupling_beta_bound(n: int, p: float) -> float:
    """Contraction factor of the any-pair path coupling: ``1 - 2(1 + p(n-2)) / (n(n-1))``."""
    if n < 2:
        raise DomainError("n must be at least 2")
    _check_p(p)
    return 1.0 - 2.0 * (1.0 + p * (n - 2)) / (n * (n - 1))


def coupling_beta_bound_loose(n: int, p: float) -> float:
    if n < 2:
        raise DomainError("n must be at least 2")
    _check_p(p)
    return 1.0 - 2.0 * p / (n - 1)


def mixing_bound_any(n: int, n_a: int, n_b: int, p: float, eps: float) -> float:
    """Upper bound ``n (ln n' - ln eps) / (2p)`` on the any-pair mixing time, ``n' = min(n_a, n_b)``."""
    if n != n_a + n_b:
        raise DomainError(f"n = {n} but n_a + n_b = {n_a + n_b}")
    if n_a < 1 or n_b < 1:
        raise DomainError("need at least one of each value")
    if not 0.0 < eps < 1.0:
        raise DomainError(f"eps must lie in (0, 1), got {eps}")
    _check_p(p)
    return n * (math.log(min(n_a, n_b)) - math.log(eps)) / (2.0 * p)


def outlier_state(n: int, i: int, a: float = 1.0, b: float = 2.0) -> tuple:
    """Sequence with ``b`` at 1-based position ``i`` and ``a`` elsewhere."""
    if not 1 <= i <= n:
        raise DomainError(f"position {i} outside 1..{n}")
    s = [float(a)] * n
    s[i - 1] = float(b)
    return tuple(s)


def outlier_pi_all(kind, n: int, p: float) -> np.ndarray:
    """Closed-form stationary distribution over the outlier positions ``1..n``."""
    kind = ChainKind.parse(kind)
    _check_p(p)
    if n < 1:
        raise DomainError("n must be positive")
    i = np.arange(1, n + 1, dtype=float)
    if kind is ChainKind.ADJ:
        if p == 0.5:
            return np.full(n, 1.0 / n)
        # divide through by (1-p)^n so nothing underflows for large n
        r = p / (1.0 - p)
        return r ** (n - i) * (1.0 - 2.0 * p) / ((1.0 - p) * (1.0 - r ** n))
    if kind is ChainKind.ANY:
        q = 1.0 - p
        return n * p * q / (((n - i + 1) * q + (i - 1) * p) * ((n - i) * q + i * p))
    raise DomainError("closed forms exist for adj and any only")


def outlier_pi(kind, n: int, p: float, i: int) -> float:
    if not 1 <= i <= n:
        raise DomainError(f"position {i} outside 1..{n}")
    return float(outlier_pi_all(kind, n, p)[i - 1])


def outlier_expected_weight_generic(kind, n: int, p: float, gap: float) -> float:
    """Expected weighted inversion ``sum_i (n-i) * gap * pi(i)`` from the stationary law."""
    pi = outlier_pi_all(kind, n, p)
    i = np.arange(1, n + 1, dtype=float)
    return float(math.fsum((n - i) * gap * pi))


def outlier_expected_weight(kind, n: int, p: float, gap: float) -> float:
    """Closed-form expected weighted inversion of the one-outlier chain."""
    kind = ChainKind.parse(kind)
    _check_p(p)
    if gap <= 0:
        raise DomainError("gap must be positive")
    if kind is ChainKind.ADJ:
        if p == 0.5:
            return gap * (n - 1) / 2.0
        r = p / (1.0 - p)
        tail = r ** (n - 1) / ((1.0 - p) * (1.0 - r ** n))
        return n * gap * p * (1.0 / (n * (1.0 - 2.0 * p)) - tail)
    if kind is ChainKind.ANY:
        q = 1.0 - p
        i = np.arange(n, dtype=float)
        terms = i * q / (((i + 1) * q + (n - i - 1) * p) * (i * q + (n - i) * p))
        return n * gap * p * math.fsum(terms)
    raise DomainError("closed forms exist for adj and any only")


@dataclass(frozen=True)
class OutlierBounds:
    n: int
    p: float
    gap: float
    pi_adj_sorted: float
    pi_any_sorted: float
    ew_adj: float
    ew_any: float
    pi_adj_lower: float
    pi_any_upper: float
    ew_adj_upper: float
    ew_any_lower: float
    pi_adj_margin: mpmath.mpf
    ew_adj_margin: mpmath.mpf

    @property
    def pi_adj_ok(self) -> bool:
        return self.pi_adj_margin > 0

    @property
    def pi_any_ok(self) -> bool:
        return self.pi_any_sorted < self.pi_any_upper

    @property
    def ew_adj_ok(self) -> bool:
        return self.ew_adj_margin > 0

    @property
    def ew_any_ok(self) -> bool:
        # fails for small n (e.g. n=3, p=1/4); reported, not asserted
        return self.ew_any > self.ew_any_lower


def _adj_margins(n: int, p: float, gap: float):
    """``pi_adj(sorted) - (1-2p)/(1-p)`` and ``gap p/(1-2p) - E_adj``, evaluated
    from the closed forms in enough digits to resolve ``(p/(1-p))**n``."""
    r = p / (1.0 - p)
    digits = int(n * -math.log10(r)) + 40
    with mpmath.workdps(max(digits, 50)):
        P = mpmath.mpf(p)
        Q = 1 - P
        G = mpmath.mpf(gap)
        denom = Q ** n - P ** n
        pi_sorted = Q ** (n - 1) * (1 - 2 * P) / denom
        ew = n * G * P * (1 / (n * (1 - 2 * P)) - P ** (n - 1) / denom)
        m_pi = pi_sorted - (1 - 2 * P) / Q
        m_ew = G * P / (1 - 2 * P) - ew
        # kept as mpf: the margins can be far below the smallest double
        return +m_pi, +m_ew


def outlier_bounds(n: int, p: float, gap: float = 1.0) -> OutlierBounds:
    _check_p(p, allow_half=False)
    if n < 2:
        raise DomainError("n must be at least 2")
    m_pi, m_ew = _adj_margins(n, p, gap)
    return OutlierBounds(
        n=n,
        p=p,
        gap=gap,
        pi_adj_sorted=outlier_pi(ChainKind.ADJ, n, p, n),
        pi_any_sorted=outlier_pi(ChainKind.ANY, n, p, n),
        ew_adj=outlier_expected_weight(ChainKind.ADJ, n, p, gap),
        ew_any=outlier_expected_weight(ChainKind.ANY, n, p, gap),
        pi_adj_lower=(1.0 - 2.0 * p) / (1.0 - p),
        pi_any_upper=(1.0 - p) / (n * p),
        ew_adj_upper=gap * p / (1.0 - 2.0 * p),
        ew_any_lower=n * gap * p,
        pi_adj_margin=m_pi,
        ew_adj_margin=m_ew,
    )
