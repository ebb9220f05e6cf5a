"""Reliability of a battery of tests under summative and weighted scoring.

A battery score is a (possibly weighted) sum of K component test
scores.  Its reliability mixes the component reliabilities with the
between-test covariances: cross terms enter numerator and denominator
identically because the covariance of two distinct observed scores
equals the covariance of their true scores.

Weights can be chosen to minimise the battery score variance subject to
summing to 1 (Lagrange solution W = D^-1 e / (e' D^-1 e)), with an
active-set fallback when that solution goes negative, or taken from the
principal eigenvector of the covariance or correlation matrix.  All
covariances are population covariances (divide by N).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .data_model import ExamineeScores
from .errors import (
    Degenerate,
    DomainViolation,
    RangeError,
    ShapeError,
    SingularMatrix,
    TooSmall,
    ZeroVariance,
)

__all__ = [
    "ComponentTest",
    "BatteryInput",
    "CovMatrix",
    "WeightVector",
    "BatteryReport",
    "covariance_matrix",
    "summative_reliability",
    "weighted_reliability",
    "optimal_weights",
    "nonnegative_weights",
    "eigen_weights",
    "equal_weights",
    "jacobi_eigh",
]

_METHODS = ("lagrange", "nonneg_qp", "eigen_cov", "eigen_corr", "equal")


@dataclass(frozen=True)
class ComponentTest:
    """One test of the battery: its score vector plus summary constants."""

    scores: ExamineeScores
    S_X_sq: float
    r_tt: float
    name: str | None = None

    def __post_init__(self) -> None:
        if not self.S_X_sq >= 0.0:
            raise DomainViolation(f"test variance must be nonnegative, got {self.S_X_sq}")


@dataclass(frozen=True)
class BatteryInput:
    tests: tuple[ComponentTest, ...]

    def __post_init__(self) -> None:
        tests = tuple(self.tests)
        object.__setattr__(self, "tests", tests)
        if not tests:
            raise TooSmall("a battery needs at least one test")
        sizes = {t.scores.n_examinees for t in tests}
        if len(sizes) != 1:
            raise ShapeError(f"all tests must score the same examinees, got sizes {sorted(sizes)}")

    @property
    def k(self) -> int:
        return len(self.tests)

    @property
    def n_examinees(self) -> int:
        return self.tests[0].scores.n_examinees

    def reliability_warnings(self) -> list[str]:
        out = []
        for i, t in enumerate(self.tests):
            if not 0.0 <= t.r_tt <= 1.0:
                out.append(f"test {i} has reliability {t.r_tt} outside [0, 1]")
        return out


@dataclass(frozen=True)
class CovMatrix:
    """Symmetric K x K variance-covariance matrix of component scores."""

    d: np.ndarray

    def __post_init__(self) -> None:
        a = np.array(self.d, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ShapeError("covariance matrix must be square and nonempty")
        scale = max(1.0, float(np.abs(a).max()))
        if float(np.abs(a - a.T).max()) > 1e-12 * scale:
            raise DomainViolation("covariance matrix must be symmetric")
        if (np.diag(a) < 0).any():
            raise DomainViolation("variances on the diagonal must be nonnegative")
        a.setflags(write=False)
        object.__setattr__(self, "d", a)

    @property
    def k(self) -> int:
        return self.d.shape[0]


@dataclass(frozen=True)
class WeightVector:
    """Battery weights summing to 1, with the multiplier that produced them.

    ``lam`` is the Lagrange multiplier for the minimum-variance methods
    and the top eigenvalue for the eigen methods; NaN for equal weights.
    (The JSON key is "lambda"; the field cannot be, as that word is
    reserved in Python.)
    """

    w: tuple[float, ...]
    lam: float
    method: str
    warnings: tuple[str, ...] = field(default=())

    def __post_init__(self) -> None:
        w = tuple(float(v) for v in self.w)
        object.__setattr__(self, "w", w)
        object.__setattr__(self, "warnings", tuple(self.warnings))
        if self.method not in _METHODS:
            raise RangeError(f"unknown weight method {self.method!r}")
        if not w:
            raise ShapeError("weight vector must be nonempty")
        if not math.isclose(sum(w), 1.0, rel_tol=1e-9, abs_tol=1e-9):
            raise DomainViolation(f"weights must sum to 1, got {sum(w)}")
        if self.method == "nonneg_qp" and any(v < 0.0 for v in w):
            raise DomainViolation("nonneg_qp weights must be nonnegative")

    def to_dict(self) -> dict:
        return {
            "w": list(self.w),
            "lambda": self.lam,
            "method": self.method,
            "warnings": list(self.warnings),
        }


@dataclass(frozen=True)
class BatteryReport:
    weights: WeightVector
    r_battery: float
    variance_Y: float
    r_summative: float
    d: CovMatrix
    per_test: tuple[dict, ...]
    warnings: tuple[str, ...]

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.to_dict(),
            "r_battery": self.r_battery,
            "variance_Y": self.variance_Y,
            "r_summative": self.r_summative,
            "covariance_matrix": [list(row) for row in self.d.d],
            "per_test": [dict(p) for p in self.per_test],
            "warnings": list(self.warnings),
        }


def covariance_matrix(b: BatteryInput) -> CovMatrix:
    """Population covariances between all component score vectors.

    The diagonal must reproduce each test's declared variance; a
    mismatch means the caller paired the wrong constants with the wrong
    scores, which is worth failing loudly over.
    """
    n = b.n_examinees
    if n < 2:
        raise TooSmall(f"covariances need at least 2 examinees, got {n}")
    centered = [t.scores.totals.astype(np.float64) for t in b.tests]
    centered = [v - v.mean() for v in centered]
    k = b.k
    d = np.empty((k, k), dtype=np.float64)
    for i in range(k):
        for j in range(i, k):
            c = float(np.dot(centered[i], centered[j])) / n
            d[i, j] = c
            d[j, i] = c
    for i, t in enumerate(b.tests):
        if not math.isclose(d[i, i], t.S_X_sq, rel_tol=1e-9, abs_tol=1e-12):
            raise DomainViolation(
                f"declared variance {t.S_X_sq} of test {i} disagrees with "
                f"its scores ({d[i, i]})"
            )
    return CovMatrix(d)


def _check_dims(b: BatteryInput, d: CovMatrix) -> None:
    if d.k != b.k:
        raise ShapeError(f"covariance matrix is {d.k}x{d.k} for {b.k} tests")


def _cross_sum(a: np.ndarray, w: np.ndarray | None = None) -> float:
    """Sum of 2*cov(i,j) over unordered pairs i<j, optionally weighted."""
    k = a.shape[0]
    total = 0.0
    for i in range(k):
        for j in range(i + 1, k):
            c = 2.0 * a[i, j]
            if w is not None:
                c *= w[i] * w[j]
            total += c
    return total


def summative_reliability(b: BatteryInput, d: CovMatrix) -> float:
    """Battery reliability when every test enters with weight 1."""
    _check_dims(b, d)
    a = d.d
    cross = _cross_sum(a)
    num = sum(t.r_tt * a[i, i] for i, t in enumerate(b.tests)) + cross
    den = float(np.trace(a)) + cross
    if not den > 0.0:
        raise Degenerate(f"battery score variance must be positive, got {den}")
    return num / den


def weighted_reliability(b: BatteryInput, d: CovMatrix, w: WeightVector) -> BatteryReport:
    """Battery reliability under weights W, with the full report.

    The denominator is exactly the battery score variance W' D W, so a
    nonpositive value aborts; the summative figure rides along for
    comparison and degrades to NaN rather than failing the report.
    """
    _check_dims(b, d)
    if len(w.w) != b.k:
        raise ShapeError(f"{len(w.w)} weights for {b.k} tests")
    a = d.d
    wv = np.asarray(w.w, dtype=np.float64)
    cross = _cross_sum(a, wv)
    num = sum(t.r_tt * wv[i] * wv[i] * a[i, i] for i, t in enumerate(b.tests)) + cross
    den = sum(wv[i] * wv[i] * a[i, i] for i in range(b.k)) + cross
    if not den > 0.0:
        raise Degenerate(f"battery score variance must be positive, got {den}")
    r = num / den

    warnings = list(w.warnings) + b.reliability_warnings()
    try:
        r_summ = summative_reliability(b, d)
    except Degenerate as exc:
        r_summ = float("nan")
        warnings.append(f"summative reliability unavailable: {exc}")
    if not 0.0 <= r <= 1.0:
        warnings.append(f"battery reliability {r} falls outside [0, 1]")

    per_test = tuple(
        {
            "name": t.name if t.name is not None else f"test{i}",
            "r_tt": t.r_tt,
            "S_X_sq": t.S_X_sq,
            "N": t.scores.n_examinees,
        }
        for i, t in enumerate(b.tests)
    )
    return BatteryReport(
        weights=w,
        r_battery=r,
        variance_Y=float(wv @ a @ wv),
        r_summative=r_summ,
        d=d,
        per_test=per_test,
        warnings=tuple(warnings),
    )


def optimal_weights(d: CovMatrix) -> WeightVector:
    """Minimum-variance weights W = D^-1 e / (e' D^-1 e).

    Solved directly from D z = e rather than by forming an inverse.
    An ill-conditioned D (condition estimate above 1e12) still returns
    weights but carries a warning.
    """
    a = d.d
    e = np.ones(d.k)
    try:
        z = np.linalg.solve(a, e)
    except np.linalg.LinAlgError:
        raise SingularMatrix("covariance matrix is singular; weights undefined") from None
    warnings = []
    cond = float(np.linalg.cond(a))
    if not math.isfinite(cond) or cond > 1e12:
        warnings.append(
            f"covariance matrix is ill-conditioned (cond ~ {cond:.3g}); "
            "weights may be numerically unstable"
        )
    total = float(z.sum())
    if total == 0.0 or not math.isfinite(total):
        raise Degenerate("e' D^-1 e vanishes; minimum-variance weights undefined")
    w = z / total
    return WeightVector(
        w=tuple(float(v) for v in w),
        lam=2.0 / total,
        method="lagrange",
        warnings=tuple(warnings),
    )


def nonnegative_weights(d: CovMatrix) -> WeightVector:
    """Minimum-variance weights constrained to be nonnegative.

    Active-set elimination: solve the unconstrained problem on the
    current support; if any weight is negative, pin the most negative
    one (lowest index on ties) to zero and re-solve.  At most K rounds.
    """
    a = d.d
    k = d.k
    support = list(range(k))
    while support:
        sub = a[np.ix_(support, support)]
        e = np.ones(len(support))
        try:
            z = np.linalg.solve(sub, e)
        except np.linalg.LinAlgError:
            raise SingularMatrix(
                f"covariance sub-matrix on support {support} is singular"
            ) from None
        total = float(z.sum())
        if total == 0.0 or not math.isfinite(total):
            raise Degenerate("e' D^-1 e vanishes on the current support")
        w_s = z / total
        if (w_s >= 0.0).all():
            w = np.zeros(k)
            w[support] = w_s
            warnings = []
            if len(support) < k:
                warnings.append(
                    f"{k - len(support)} weight(s) pinned to zero to stay nonnegative"
                )
            return WeightVector(
                w=tuple(float(v) for v in w),
                lam=2.0 / total,
                method="nonneg_qp",
                warnings=tuple(warnings),
            )
        support.pop(int(np.argmin(w_s)))  # argmin picks the lowest index on ties
    raise Degenerate("active-set elimination emptied the support")


def jacobi_eigh(a: np.ndarray, tol: float = 1e-10, max_sweeps: int = 100) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi diagonalisation of a small symmetric matrix.

    Returns (eigenvalues, eigenvectors) sorted by descending eigenvalue,
    eigenvectors in columns.  Sweeps Givens rotations over all
    off-diagonal positions until their Frobenius norm falls below
    ``tol`` relative to the matrix scale.
    """
    a = np.array(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ShapeError("eigen decomposition needs a square matrix")
    k = a.shape[0]
    scale = max(1.0, float(np.abs(a).max()))
    if float(np.abs(a - a.T).max()) > 1e-12 * scale:
        raise DomainViolation("eigen decomposition needs a symmetric matrix")
    v = np.eye(k)
    threshold = tol * max(1.0, float(np.linalg.norm(a)))
    for _ in range(max_sweeps):
        sq = a * a
        # cancellation can leave the subtraction a hair below zero
        off = math.sqrt(max(0.0, float(sq.sum() - np.diag(sq).sum())))
        if off <= threshold:
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = float(a[p, q])
                if apq == 0.0:
                    continue
                diff = float(a[q, q] - a[p, p])
                if abs(diff) > abs(apq) * 1e150:
                    # theta = diff / (2 apq) would overflow; for so small
                    # an angle the tangent is apq / diff to first order
                    t = apq / diff
                else:
                    theta = diff / (2.0 * apq)
                    t = math.copysign(1.0, theta) / (abs(theta) + math.hypot(theta, 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # A <- G' A G and V <- V G with the rotation in plane (p, q)
                for r in range(k):
                    arp, arq = a[r, p], a[r, q]
                    a[r, p] = c * arp - s * arq
                    a[r, q] = s * arp + c * arq
                for r in range(k):
                    apr, aqr = a[p, r], a[q, r]
                    a[p, r] = c * apr - s * aqr
                    a[q, r] = s * apr + c * aqr
                for r in range(k):
                    vrp, vrq = v[r, p], v[r, q]
                    v[r, p] = c * vrp - s * vrq
                    v[r, q] = s * vrp + c * vrq
    vals = np.diag(a).copy()
    order = np.argsort(-vals, kind="stable")
    return vals[order], v[:, order]


def eigen_weights(d: CovMatrix, variant: str) -> WeightVector:
    """Weights from the principal eigenvector.

    ``cov_proportional`` scales the principal eigenvector of D itself to
    sum 1; ``corr_scaled`` takes the principal eigenvector U of the
    correlation matrix and scales S^-1 U, undoing the per-test standard
    deviations.  Either can yield negative weights; only the sum-to-1
    constraint is enforced here.
    """
    if variant not in ("cov_proportional", "corr_scaled"):
        raise RangeError(f"unknown eigen variant {variant!r}")
    a = d.d
    if variant == "corr_scaled":
        s = np.sqrt(np.diag(a))
        if (s == 0.0).any():
            raise ZeroVariance("zero-variance test makes the correlation matrix undefined")
        target = a / np.outer(s, s)
    else:
        target = a
    vals, vecs = jacobi_eigh(target)
    warnings = []
    if d.k > 1 and abs(vals[0] - vals[1]) <= 1e-9 * max(1.0, abs(vals[0])):
        warnings.append(
            "top eigenvalue is (near-)repeated; the reported eigenvector is a "
            "deterministic but arbitrary choice"
        )
    u = vecs[:, 0].copy()
    if variant == "corr_scaled":
        u = u / s
    total = float(u.sum())
    if total == 0.0:
        raise Degenerate("principal eigenvector sums to zero; cannot scale to weights")
    w = u / total
    method = "eigen_cov" if variant == "cov_proportional" else "eigen_corr"
    return WeightVector(
        w=tuple(float(v) for v in w),
        lam=float(vals[0]),
        method=method,
        warnings=tuple(warnings),
    )


def equal_weights(k: int) -> WeightVector:
    """The 1/K vector; weighted_reliability with it equals the summative form."""
    if k < 1:
        raise TooSmall(f"need at least one test, got {k}")
    return WeightVector(w=(1.0 / k,) * k, lam=float("nan"), method="equal")
