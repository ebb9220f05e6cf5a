"""Score matrices, aggregate scores, and person-space descriptive statistics.

A test administration is an N x n binary matrix: N examinees (rows) by
n items (columns), every cell 0 or 1.  Score vectors live in the
N-dimensional person space.  There the test mean and variance have
exact expressions through the norm of the score vector and its angle
against the all-correct reference vector I = (n, ..., n):

    mean     = ||X|| cos(theta_X) / sqrt(N)
    variance = ||X||^2 sin(theta_X)^2 / N        (population convention)
    ||I||    = sqrt(N n^2)

``descriptive_stats`` evaluates both the geometric route and the direct
moment route and requires them to agree to 1e-9 relative, so the two
stay cross-checked on every call.

Totals are exact integers; statistics are binary64 floats.  Missing
responses are not supported: every cell must be exactly 0 or 1.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import DomainViolation, ShapeError, TooSmall

__all__ = [
    "ScoreMatrix",
    "ItemScores",
    "ExamineeScores",
    "TestStats",
    "load_score_matrix",
    "write_score_matrix",
    "item_totals",
    "examinee_totals",
    "descriptive_stats",
    "mean_from_norms",
    "variance_from_norms",
]

_REL_TOL = 1e-9


def _frozen_int_array(values, dtype=np.int64):
    arr = np.asarray(values, dtype=dtype)
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ScoreMatrix:
    """Immutable N x n matrix of binary item responses.

    ``entries[i, j]`` is examinee i's score on item j, either 0 or 1.
    Optional id tuples label rows and columns; when present their
    lengths must match the matrix dimensions.
    """

    entries: np.ndarray
    examinee_ids: tuple[str, ...] | None = None
    item_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        entries = np.asarray(self.entries)
        if entries.ndim != 2:
            raise ShapeError(f"score matrix must be 2-dimensional, got shape {entries.shape}")
        n_examinees, n_items = entries.shape
        if n_examinees < 2 or n_items < 2:
            raise TooSmall(
                f"need at least 2 examinees and 2 items, got {n_examinees} x {n_items}"
            )
        valid = np.isin(entries, (0, 1))
        if not valid.all():
            i, j = np.argwhere(~valid)[0]
            raise DomainViolation(
                f"non-binary value {entries[i, j]!r} at row {i + 1}, column {j + 1}"
            )
        frozen = entries.astype(np.int8, copy=True)
        frozen.setflags(write=False)
        object.__setattr__(self, "entries", frozen)
        for name, ids, expected in (
            ("examinee_ids", self.examinee_ids, n_examinees),
            ("item_ids", self.item_ids, n_items),
        ):
            if ids is not None:
                ids = tuple(str(v) for v in ids)
                if len(ids) != expected:
                    raise ShapeError(f"{name} has {len(ids)} labels for {expected} rows/columns")
                object.__setattr__(self, name, ids)

    @property
    def n_examinees(self) -> int:
        return self.entries.shape[0]

    @property
    def n_items(self) -> int:
        return self.entries.shape[1]


@dataclass(frozen=True)
class ItemScores:
    """Per-item totals: number of correct responses to each item."""

    totals: np.ndarray

    def __post_init__(self):
        totals = np.asarray(self.totals)
        if totals.ndim != 1 or totals.size < 1:
            raise ShapeError("item totals must be a nonempty 1-dimensional vector")
        if not np.issubdtype(totals.dtype, np.integer) or (totals < 0).any():
            raise DomainViolation("item totals must be nonnegative integers")
        object.__setattr__(self, "totals", _frozen_int_array(totals))

    @property
    def n_items(self) -> int:
        return self.totals.size

    def as_ints(self) -> list[int]:
        """Totals as plain Python integers, for exact arithmetic."""
        return [int(t) for t in self.totals]


@dataclass(frozen=True)
class ExamineeScores:
    """Per-examinee totals: number of items each examinee got right."""

    totals: np.ndarray

    def __post_init__(self):
        totals = np.asarray(self.totals)
        if totals.ndim != 1 or totals.size < 1:
            raise ShapeError("examinee totals must be a nonempty 1-dimensional vector")
        if not np.issubdtype(totals.dtype, np.integer) or (totals < 0).any():
            raise DomainViolation("examinee totals must be nonnegative integers")
        object.__setattr__(self, "totals", _frozen_int_array(totals))

    @property
    def n_examinees(self) -> int:
        return self.totals.size


@dataclass(frozen=True)
class TestStats:
    """Descriptive statistics of one test, with person-space geometry.

    ``notes`` carries degeneracy flags (e.g. an all-zero score vector
    leaves ``cos_theta_X`` undefined, reported as NaN).
    """

    mean: float
    variance: float
    norm_X: float
    norm_I: float
    cos_theta_X: float
    N: int
    n: int
    notes: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "mean": self.mean,
            "variance": self.variance,
            "norm_X": self.norm_X,
            "norm_I": self.norm_I,
            "cos_theta_X": self.cos_theta_X,
            "N": self.N,
            "n": self.n,
            "notes": list(self.notes),
        }


def mean_from_norms(norm_x: float, cos_theta_x: float, n_examinees: int) -> float:
    """Test mean from the score-vector norm and its angle: ||X|| cos(theta)/sqrt(N)."""
    return norm_x * cos_theta_x / math.sqrt(n_examinees)


def variance_from_norms(norm_x: float, cos_theta_x: float, n_examinees: int) -> float:
    """Population test variance from the geometry: ||X||^2 sin(theta)^2 / N."""
    sin_sq = 1.0 - cos_theta_x * cos_theta_x
    return norm_x * norm_x * sin_sq / n_examinees


def _read_text(source) -> str:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            return fh.read().decode("utf-8")
    if isinstance(source, bytes):
        return source.decode("utf-8")
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data


def load_score_matrix(source, *, has_header: bool = False, delimiter: str = ",") -> ScoreMatrix:
    """Parse a delimited text table of 0/1 cells into a ScoreMatrix.

    ``source`` may be a path, bytes, or a file-like object.  Each row is
    one examinee, each column one item.  Cells must be exactly "0" or
    "1" after whitespace trimming; anything else (including blanks) is a
    DomainViolation naming the 1-based row and column.  Ragged rows are
    a ShapeError.  Fewer than 2 rows or columns is TooSmall.
    """
    text = _read_text(source)
    reader = csv.reader(io.StringIO(text), delimiter=delimiter)
    item_ids = None
    rows: list[list[int]] = []
    width = None
    data_row = 0
    for record in reader:
        if not record or all(cell.strip() == "" for cell in record):
            continue
        if has_header and item_ids is None and not rows:
            item_ids = tuple(cell.strip() for cell in record)
            continue
        data_row += 1
        if width is None:
            width = len(record)
        elif len(record) != width:
            raise ShapeError(f"row {data_row} has {len(record)} values, expected {width}")
        parsed = []
        for col, cell in enumerate(record, start=1):
            value = cell.strip()
            if value == "0":
                parsed.append(0)
            elif value == "1":
                parsed.append(1)
            else:
                raise DomainViolation(
                    f"non-binary value {cell.strip()!r} at row {data_row}, column {col}"
                )
        rows.append(parsed)
    if not rows or width is None or len(rows) < 2 or width < 2:
        raise TooSmall(
            f"need at least 2 examinees and 2 items, got {len(rows)} x {width or 0}"
        )
    if item_ids is not None and len(item_ids) != width:
        raise ShapeError(f"header has {len(item_ids)} labels for {width} columns")
    return ScoreMatrix(entries=np.array(rows, dtype=np.int8), item_ids=item_ids)


def write_score_matrix(m: ScoreMatrix, dest, *, delimiter: str = ",", header: bool = False) -> None:
    """Serialize a ScoreMatrix back to delimited text (inverse of load)."""

    def _write(fh):
        writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
        if header and m.item_ids is not None:
            writer.writerow(m.item_ids)
        for row in m.entries:
            writer.writerow([int(v) for v in row])

    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            _write(fh)
    else:
        _write(dest)


def item_totals(m: ScoreMatrix) -> ItemScores:
    """Column sums: totals[j] = number of examinees who got item j right."""
    return ItemScores(m.entries.sum(axis=0, dtype=np.int64))


def examinee_totals(m: ScoreMatrix) -> ExamineeScores:
    """Row sums: totals[i] = number of items examinee i got right."""
    return ExamineeScores(m.entries.sum(axis=1, dtype=np.int64))


def descriptive_stats(x: ExamineeScores, n: int) -> TestStats:
    """Mean, variance, and person-space geometry of a score vector.

    Parameters
    ----------
    x : ExamineeScores
        Observed total scores of the N examinees.
    n : int
        Number of items in the test the scores came from (defines the
        reference vector I = (n, ..., n)).

    Returns
    -------
    TestStats
        With ``mean`` and ``variance`` computed by the direct moment
        formulas and verified against the geometric route
        (||X|| cos(theta)/sqrt(N) and ||X||^2 sin(theta)^2/N) to 1e-9
        relative.  An all-zero score vector yields cos_theta_X = NaN and
        a note, since the angle is undefined at the origin.

    Raises
    ------
    TooSmall
        If fewer than 2 examinees, or n < 1.
    """
    if n < 1:
        raise TooSmall(f"need n >= 1, got {n}")
    big = x.totals.astype(np.int64)
    n_examinees = int(big.size)

    total = int(big.sum())
    sum_sq = int(np.dot(big, big))
    norm_x = math.sqrt(sum_sq)
    norm_i = n * math.sqrt(n_examinees)

    mean = total / n_examinees
    deviations = big - mean
    variance = float(np.dot(deviations, deviations)) / n_examinees

    notes: tuple[str, ...] = ()
    if norm_x == 0.0:
        cos_theta = math.nan
        notes = ("cos_theta_X undefined: all scores are zero",)
    else:
        # cos(theta_X) = sum(X_i * n) / (||X|| * ||I||); the n cancels.
        cos_theta = total / (norm_x * math.sqrt(n_examinees))
        mean_geo = mean_from_norms(norm_x, cos_theta, n_examinees)
        var_geo = variance_from_norms(norm_x, cos_theta, n_examinees)
        if not math.isclose(mean_geo, mean, rel_tol=_REL_TOL, abs_tol=1e-12):
            raise ArithmeticError("geometric and direct means disagree beyond tolerance")
        if not math.isclose(var_geo, variance, rel_tol=_REL_TOL, abs_tol=1e-9):
            raise ArithmeticError("geometric and direct variances disagree beyond tolerance")

    return TestStats(
        mean=mean,
        variance=variance,
        norm_X=norm_x,
        norm_I=norm_i,
        cos_theta_X=cos_theta,
        N=n_examinees,
        n=n,
        notes=notes,
    )
