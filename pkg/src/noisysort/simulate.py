"""Replica simulation of the sorting chains and CSV/JSON export.

Each replica owns a Philox stream keyed by ``(seed, replica)``; chains reuse
the same streams, so results depend only on the configuration.
"""

from __future__ import annotations

import csv
import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .kernels import ChainKind, candidate_pairs
from .seqcore import (
    DomainError,
    Energy,
    as_sequence,
    swap_probability_array,
    weighted_inversion_batch,
)

TRAJECTORY_HEADER = ["step", "replica", "chain", "w", "is_sorted"]
SUMMARY_HEADER = ["step", "chain", "mean_w", "min_w", "max_w", "hit_rate"]
DIST_HEADER = ["state_index", "sequence", "w", "pi"]

DEFAULT_STEPS = 100_000
DEFAULT_REPLICAS = 200
DEFAULT_EVERY = 1000
DEFAULT_BURN_IN = 0.5
_CHUNK = 2048


def parse_generator(spec: str) -> tuple:
    """Expand ``descending:N``, ``binary:NA,NB`` or ``outlier:N`` into a start sequence.

    Binary and outlier inputs use ``a = 1`` and ``b = 2`` and start reverse-sorted.
    """
    m = re.fullmatch(r"\s*(descending|binary|outlier)\s*:\s*([0-9,\s]+)", spec or "")
    if not m:
        raise DomainError(f"invalid generator {spec!r}")
    name, args = m.group(1), [int(x) for x in m.group(2).split(",") if x.strip()]
    if name == "descending" and len(args) == 1 and args[0] >= 1:
        return tuple(float(v) for v in range(args[0], 0, -1))
    if name == "binary" and len(args) == 2 and min(args) >= 0 and sum(args) >= 1:
        n_a, n_b = args
        return (2.0,) * n_b + (1.0,) * n_a
    if name == "outlier" and len(args) == 1 and args[0] >= 1:
        return (2.0,) + (1.0,) * (args[0] - 1)
    raise DomainError(f"invalid generator {spec!r}")


def parse_input(text: str) -> tuple:
    try:
        return as_sequence(float(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise DomainError(f"invalid input list {text!r}: {exc}") from None


@dataclass
class ExperimentConfig:
    chains: list
    initial: tuple
    energy: Energy
    steps: int = DEFAULT_STEPS
    replicas: int = DEFAULT_REPLICAS
    seed: int = 0
    every: int = DEFAULT_EVERY
    burn_in: float = DEFAULT_BURN_IN
    out: Optional[Path] = None
    record_states: bool = False
    source: str = ""

    def __post_init__(self):
        self.chains = [ChainKind.parse(c) for c in self.chains]
        self.initial = as_sequence(self.initial)
        if not self.chains:
            raise DomainError("at least one chain is required")
        if self.steps < 1 or self.replicas < 1 or self.every < 1:
            raise DomainError("steps, replicas and checkpoint interval must be >= 1")
        if not 0.0 <= self.burn_in < 1.0:
            raise DomainError("burn-in fraction must lie in [0, 1)")
        if not 0 <= self.seed < 2**64:
            raise DomainError("seed must be an unsigned 64-bit integer")

    def checkpoints(self) -> np.ndarray:
        return checkpoint_steps(self.steps, self.every)

    def metadata(self) -> dict:
        return {
            "version": __version__,
            "chains": [str(c) for c in self.chains],
            "input": list(self.initial),
            "source": self.source,
            "lambda": self.energy.lam,
            "noise": self.energy.noise,
            "steps": self.steps,
            "replicas": self.replicas,
            "seed": self.seed,
            "every": self.every,
            "burn_in": self.burn_in,
        }


@dataclass
class ChainRun:
    kind: ChainKind
    steps: np.ndarray  # checkpoint steps
    w: np.ndarray  # (checkpoints, replicas)
    is_sorted: np.ndarray  # (checkpoints, replicas)
    states: Optional[np.ndarray] = None  # (checkpoints, replicas, n) when recorded

    def post_burn_in(self, burn_in: float) -> np.ndarray:
        """Mask of checkpoints at or after the burn-in step."""
        return self.steps >= burn_in * self.steps[-1]

    def summary_rows(self):
        for k, step in enumerate(self.steps):
            w = self.w[k]
            yield {
                "step": int(step),
                "chain": str(self.kind),
                "mean_w": float(w.mean()),
                "min_w": float(w.min()),
                "max_w": float(w.max()),
                "hit_rate": float(self.is_sorted[k].mean()),
            }


def checkpoint_steps(steps: int, every: int) -> np.ndarray:
    """Multiples of ``every`` from 0, plus the final step."""
    ck = list(range(0, steps + 1, every))
    if ck[-1] != steps:
        ck.append(steps)
    return np.array(ck)


def replica_generators(seed: int, replicas: int) -> list:
    return [np.random.Generator(np.random.Philox(key=[seed, r])) for r in range(replicas)]


def run_chain(kind, initial, e: Energy, steps: int, replicas: int, seed: int = 0,
              every: int = 1, record_states: bool = False) -> ChainRun:
    """Run ``replicas`` independent copies of one chain from ``initial``.

    Every step consumes two uniforms per replica: one picks the pair, one
    decides acceptance.
    """
    kind = ChainKind.parse(kind)
    start = np.asarray(as_sequence(initial), dtype=float)
    n = start.size
    S = np.tile(start, (replicas, 1))
    target = np.sort(start)
    pairs = np.array(list(candidate_pairs(kind, n)), dtype=np.intp).reshape(-1, 2)
    I, J = pairs[:, 0], pairs[:, 1]
    npairs = len(pairs)
    log_lam = e.log_lam
    rows = np.arange(replicas)
    gens = replica_generators(seed, replicas)

    ck = checkpoint_steps(steps, every)
    W = np.empty((len(ck), replicas))
    H = np.empty((len(ck), replicas), dtype=bool)
    X = np.empty((len(ck), replicas, n)) if record_states else None

    def record(k: int) -> None:
        W[k] = weighted_inversion_batch(S)
        H[k] = np.all(S == target, axis=1)
        if X is not None:
            X[k] = S

    record(0)
    next_ck = 1
    t = 0
    while t < steps:
        chunk = min(_CHUNK, steps - t)
        U = np.stack([g.random((chunk, 2)) for g in gens], axis=1)  # (chunk, R, 2)
        for c in range(chunk):
            if npairs:
                k = np.minimum((U[c, :, 0] * npairs).astype(np.intp), npairs - 1)
                i, j = I[k], J[k]
                xi, xj = S[rows, i], S[rows, j]
                acc = swap_probability_array(xi, xj, log_lam)
                if kind is ChainKind.ANY_STAR:
                    acc = acc ** (j - i)
                hit = U[c, :, 1] < acc
                if hit.any():
                    r = rows[hit]
                    S[r, i[hit]] = xj[hit]
                    S[r, j[hit]] = xi[hit]
            t += 1
            if next_ck < len(ck) and t == ck[next_ck]:
                record(next_ck)
                next_ck += 1
    return ChainRun(kind, ck, W, H, X)


@dataclass
class SimulationResult:
    config: ExperimentConfig
    runs: list = field(default_factory=list)

    def run_for(self, kind) -> ChainRun:
        kind = ChainKind.parse(kind)
        for run in self.runs:
            if run.kind is kind:
                return run
        raise KeyError(str(kind))

    def stationary_estimates(self) -> dict:
        out = {}
        for run in self.runs:
            mask = run.post_burn_in(self.config.burn_in)
            hits = run.is_sorted[mask]
            out[str(run.kind)] = {
                "hit_rate": float(hits.mean()),
                "mean_w": float(run.w[mask].mean()),
                "samples": int(hits.size),
            }
        return out


def simulate(config: ExperimentConfig) -> SimulationResult:
    result = SimulationResult(config)
    for kind in config.chains:
        result.runs.append(run_chain(kind, config.initial, config.energy, config.steps,
                                     config.replicas, config.seed, config.every,
                                     config.record_states))
    return result


def _fmt(x: float) -> str:
    return repr(float(x))


def write_simulation(result: SimulationResult, out: Path) -> dict:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "trajectory": out / "trajectory.csv",
        "summary": out / "summary.csv",
        "meta": out / "meta.json",
    }
    runs = result.runs
    with open(paths["trajectory"], "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(TRAJECTORY_HEADER)
        for k, step in enumerate(runs[0].steps):
            for r in range(result.config.replicas):
                for run in runs:
                    writer.writerow([int(step), r, str(run.kind), _fmt(run.w[k, r]),
                                     int(run.is_sorted[k, r])])
    with open(paths["summary"], "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_HEADER)
        rows = [row for run in runs for row in run.summary_rows()]
        order = {str(run.kind): m for m, run in enumerate(runs)}
        rows.sort(key=lambda row: (row["step"], order[row["chain"]]))
        for row in rows:
            writer.writerow([row["step"], row["chain"], _fmt(row["mean_w"]),
                             _fmt(row["min_w"]), _fmt(row["max_w"]), _fmt(row["hit_rate"])])
    meta = {"config": result.config.metadata(),
            "stationary_estimates": result.stationary_estimates()}
    with open(paths["meta"], "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths


def write_distribution(space, pi, out_file: Path) -> Path:
    out_file = Path(out_file)
    out_file.parent.mkdir(parents=True, exist_ok=True)
    w = space.weights()
    with open(out_file, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(DIST_HEADER)
        for k, s in enumerate(space.states):
            seq = ";".join(_fmt_value(v) for v in s)
            writer.writerow([k, seq, _fmt(w[k]), _fmt(pi[k])])
    return out_file


def _fmt_value(v: float) -> str:
    return str(int(v)) if float(v).is_integer() and math.isfinite(v) else repr(v)
