"""Synthetic score matrices from four simple Bernoulli designs.

Each design draws one probability parameter per examinee or per item,
then fills the matrix with independent Bernoulli trials:

  D1  per-examinee ability p_i ~ Uniform[0, 1]
  D2  per-item passing rate p_j ~ Uniform[0, 1]
  D3  per-examinee ability p_i ~ Normal(0.5, 0.2), clamped to [0, 1]
  D4  per-item passing rate p_j ~ Normal(0.5, 0.2), clamped to [0, 1]

Per-examinee designs make people differ, so total scores spread out and
reliability is high; per-item designs give everyone the same success
profile, so total-score variance is binomial noise and reliability sits
near zero.

Determinism contract: the generator is PCG64 seeded directly with the
model seed, all probability parameters are drawn first, then the
uniforms behind the Bernoulli entries are drawn in one row-major block.
Refactors must preserve that draw order or identical seeds would stop
reproducing identical matrices.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .data_model import ExamineeScores, ScoreMatrix, descriptive_stats
from .errors import RangeError, TooSmall
from .reliability import classical_reliability, sub_test_scores
from .splitter import split

__all__ = ["SimModel", "GENERATOR_ID", "generate", "scaling_suite"]

GENERATOR_ID = "numpy-pcg64"

_KINDS = ("D1", "D2", "D3", "D4")
_NORMAL_KINDS = ("D3", "D4")
_PER_EXAMINEE = ("D1", "D3")


@dataclass(frozen=True)
class SimModel:
    """One fully specified simulation: design, matrix size, seed."""

    kind: str
    N: int
    n: int
    seed: int

    def __post_init__(self) -> None:
        if self.kind not in _KINDS:
            raise RangeError(f"unknown simulation design {self.kind!r}")
        if self.N < 2 or self.n < 2:
            raise TooSmall(f"need N >= 2 and n >= 2, got {self.N} x {self.n}")
        if not 0 <= int(self.seed) < 2**64:
            raise RangeError(f"seed must be a 64-bit unsigned integer, got {self.seed}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "seed", int(self.seed))

    def metadata(self) -> dict:
        return {
            "kind": self.kind,
            "N": self.N,
            "n": self.n,
            "seed": self.seed,
            "generator": GENERATOR_ID,
        }


def generate(model: SimModel, *, fixed_p: float | None = None) -> ScoreMatrix:
    """Draw one score matrix under the model.

    ``fixed_p`` bypasses the parameter draw and gives every trial the
    same success probability; it exists for degenerate-case tests (for
    example forcing an all-ones matrix with fixed_p=1).
    """
    rng = np.random.Generator(np.random.PCG64(model.seed))
    count = model.N if model.kind in _PER_EXAMINEE else model.n
    if fixed_p is not None:
        if not 0.0 <= fixed_p <= 1.0:
            raise RangeError(f"fixed_p must lie in [0, 1], got {fixed_p}")
        p = np.full(count, float(fixed_p))
    elif model.kind in _NORMAL_KINDS:
        p = np.clip(rng.normal(0.5, 0.2, size=count), 0.0, 1.0)
    else:
        p = rng.random(count)
    shaped = p[:, None] if model.kind in _PER_EXAMINEE else p[None, :]
    entries = (rng.random((model.N, model.n)) < shaped).astype(np.int8)
    return ScoreMatrix(entries)


def scaling_suite(
    sizes: list[tuple[int, int]],
    model_kind: str,
    seed: int,
) -> list[dict]:
    """Generate, split and score a matrix at each size; tabulate timings.

    Per-size seeds are derived from the master seed through a seed
    sequence, so adding or reordering sizes changes nothing about what
    any given position produces.  Each row reports the size, the derived
    seed, the split wall-clock, the total wall-clock, the achieved
    abs_S, and the classical reliability.
    """
    if not sizes:
        raise TooSmall("scaling suite needs at least one (N, n) size")
    child_seeds = np.random.SeedSequence(seed).generate_state(len(sizes), dtype=np.uint64)
    rows = []
    for (n_examinees, n_items), child in zip(sizes, child_seeds):
        model = SimModel(kind=model_kind, N=n_examinees, n=n_items, seed=int(child))
        started = time.perf_counter()
        m = generate(model)
        split_started = time.perf_counter()
        result = split(m)
        split_seconds = time.perf_counter() - split_started
        scores = sub_test_scores(m, result.assignment)
        # stats describe the reduced test: a dropped odd item is in neither half
        reduced_n = n_items - (result.assignment.dropped_item is not None)
        stats = descriptive_stats(ExamineeScores(scores.combined()), reduced_n)
        report = classical_reliability(scores, stats)
        total_seconds = time.perf_counter() - started
        rows.append(
            {
                "N": n_examinees,
                "n": n_items,
                "seed": int(child),
                "split_seconds": split_seconds,
                "total_seconds": total_seconds,
                "abs_S": result.abs_S,
                "iterations": result.iterations,
                "r_tt": report.r_tt,
            }
        )
    return rows
