"""Noisy-comparison sorting as Markov chains: simulation and exact analysis."""

__version__ = "0.1.0"

from .seqcore import (
    DomainError,
    Energy,
    displacement_inversion,
    sample_comparison,
    sorted_of,
    swap_probability,
    weighted_inversion,
)
from .kernels import ChainKind, Move, step, transition_probability

__all__ = [
    "ChainKind",
    "DomainError",
    "Energy",
    "Move",
    "displacement_inversion",
    "sample_comparison",
    "sorted_of",
    "step",
    "swap_probability",
    "transition_probability",
    "weighted_inversion",
]
