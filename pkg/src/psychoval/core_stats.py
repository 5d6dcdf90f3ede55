"""Dense symmetric-matrix kernel and scalar statistics.

Everything downstream (reliability, adequacy checks, factor extraction)
rests on the handful of primitives in this module: Pearson correlation,
correlation matrices with per-pair missing handling, a cyclic Jacobi
eigensolver, eigen-based inversion / log-determinant, and the chi-square
upper-tail probability via the regularized incomplete gamma function.

All functions are pure; all variance-like quantities use the n-1
(sample) denominator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import (
    DomainError,
    InsufficientRows,
    LengthMismatch,
    NoConvergence,
    NotPositiveDefinite,
    SingularMatrix,
    ZeroVariance,
)

# Relative cutoff below which an eigenvalue is treated as zero.
SINGULARITY_RTOL = 1e-10

# Jacobi sweep budget and off-diagonal convergence target.
JACOBI_MAX_SWEEPS = 100
JACOBI_TOL = 1e-12

# Incomplete gamma: absolute term tolerance and iteration cap.
GAMMA_TOL = 1e-12
GAMMA_MAX_ITER = 10_000


@dataclass(frozen=True)
class SymMatrix:
    """A dense symmetric matrix with exact symmetry enforced at construction.

    The stored array is read-only; ``values[i, j] == values[j, i]`` holds
    bit-exactly because construction averages the two triangles.
    """

    values: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.values, dtype=float)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {a.shape}")
        if a.size and np.max(np.abs(a - a.T)) > 1e-8 * max(1.0, np.max(np.abs(a))):
            raise ValueError("matrix is not symmetric")
        sym = (a + a.T) / 2.0
        sym.flags.writeable = False
        object.__setattr__(self, "values", sym)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def is_correlation(self, atol: float = 1e-8) -> bool:
        """Unit diagonal and off-diagonals within [-1, 1]."""
        v = self.values
        return bool(
            np.allclose(np.diag(v), 1.0, atol=atol)
            and np.all(np.abs(v) <= 1.0 + atol)
        )

    def __eq__(self, other):
        return isinstance(other, SymMatrix) and np.array_equal(self.values, other.values)

    def __hash__(self):
        return hash((self.values.shape, self.values.tobytes()))


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenpairs of a symmetric matrix, eigenvalues sorted descending.

    Column k of ``eigenvectors`` pairs with ``eigenvalues[k]``; columns are
    orthonormal and each is sign-fixed so its largest-magnitude entry is
    positive (ties broken by lowest index).
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.T


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation of two equal-length vectors (n >= 3).

    Raises LengthMismatch for unequal or too-short input and ZeroVariance
    when either vector is constant. The result is clipped to [-1, 1] to
    absorb last-bit rounding.
    """
    xv = np.asarray(x, dtype=float)
    yv = np.asarray(y, dtype=float)
    if xv.ndim != 1 or yv.ndim != 1 or xv.shape != yv.shape:
        raise LengthMismatch(f"vector lengths {xv.shape} and {yv.shape} differ")
    if xv.size < 3:
        raise LengthMismatch(f"need at least 3 observations, got {xv.size}")
    dx = xv - xv.mean()
    dy = yv - yv.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0:
        raise ZeroVariance("first vector")
    if syy == 0.0:
        raise ZeroVariance("second vector")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return min(1.0, max(-1.0, r))


def correlation_matrix(
    data: np.ndarray,
    items: Sequence[str] | None = None,
    min_rows: int = 3,
) -> SymMatrix:
    """Pearson correlation matrix of a respondents x items table.

    Missing cells are NaN; each pair (i, j) is computed over the rows where
    both columns are present (pairwise deletion), which reduces to the plain
    formula when the table is complete. Each item must have at least
    ``min_rows`` observations and nonzero variance on its complete cases.
    """
    a = np.asarray(data, dtype=float)
    if a.ndim != 2:
        raise ValueError(f"expected a 2-d table, got shape {a.shape}")
    n, p = a.shape
    names = list(items) if items is not None else [f"item{j + 1}" for j in range(p)]
    if len(names) != p:
        raise ValueError("item-name count does not match column count")

    present = ~np.isnan(a)
    for j in range(p):
        col = a[present[:, j], j]
        if col.size < min_rows:
            raise InsufficientRows(
                f"item {names[j]!r} has {col.size} observations, need {min_rows}"
            )
        if col.size and np.all(col == col[0]):
            raise ZeroVariance(f"item {names[j]!r}")

    r = np.eye(p)
    for i in range(p):
        for j in range(i + 1, p):
            both = present[:, i] & present[:, j]
            if int(both.sum()) < min_rows:
                raise InsufficientRows(
                    f"pair ({names[i]!r}, {names[j]!r}) has {int(both.sum())} "
                    f"complete rows, need {min_rows}"
                )
            try:
                r[i, j] = r[j, i] = pearson(a[both, i], a[both, j])
            except ZeroVariance as exc:
                which = names[i] if "first" in str(exc) else names[j]
                raise ZeroVariance(
                    f"item {which!r} within pair ({names[i]!r}, {names[j]!r})"
                ) from None
    return SymMatrix(r)


def sym_eigen(A: SymMatrix, tol: float = JACOBI_TOL,
              max_sweeps: int = JACOBI_MAX_SWEEPS) -> EigenDecomposition:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps over all upper-triangle pairs, annihilating each off-diagonal
    entry with a plane rotation, until the largest off-diagonal magnitude
    drops below ``tol``. Deterministic: fixed sweep order, no pivoting
    heuristics, and a fixed sign convention on the eigenvectors.
    """
    a = np.array(A.values, dtype=float)
    p = a.shape[0]
    v = np.eye(p)

    if p > 1:
        for _ in range(max_sweeps):
            off = np.max(np.abs(a - np.diag(np.diag(a))))
            if off < tol:
                break
            for i in range(p - 1):
                for j in range(i + 1, p):
                    aij = a[i, j]
                    if aij == 0.0:
                        continue
                    # rotation angle from the classic two-sided formula;
                    # for huge theta the sqrt would overflow and t ~ 1/(2 theta)
                    theta = (a[j, j] - a[i, i]) / (2.0 * aij)
                    if abs(theta) > 1e150:
                        t = 0.5 / theta
                    else:
                        t = math.copysign(1.0, theta) / (
                            abs(theta) + math.sqrt(theta * theta + 1.0)
                        )
                    c = 1.0 / math.sqrt(t * t + 1.0)
                    s = t * c

                    row_i = a[i, :].copy()
                    row_j = a[j, :].copy()
                    a[i, :] = c * row_i - s * row_j
                    a[j, :] = s * row_i + c * row_j
                    col_i = a[:, i].copy()
                    col_j = a[:, j].copy()
                    a[:, i] = c * col_i - s * col_j
                    a[:, j] = s * col_i + c * col_j
                    a[i, j] = a[j, i] = 0.0

                    vc_i = v[:, i].copy()
                    vc_j = v[:, j].copy()
                    v[:, i] = c * vc_i - s * vc_j
                    v[:, j] = s * vc_i + c * vc_j
        else:
            # budget exhausted: the final sweep may still have converged
            off = np.max(np.abs(a - np.diag(np.diag(a))))
            if off >= tol:
                raise NoConvergence(
                    f"Jacobi sweeps exhausted (off-diagonal max {off:.3e})",
                    residual=float(off),
                )

    eigenvalues = np.diag(a).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    eigenvalues = eigenvalues[order]
    vectors = v[:, order]

    # sign convention: largest-|entry| of each column made positive
    for k in range(p):
        col = vectors[:, k]
        lead = int(np.argmax(np.abs(col)))
        if col[lead] < 0.0:
            vectors[:, k] = -col
    eigenvalues.flags.writeable = False
    vectors.flags.writeable = False
    return EigenDecomposition(eigenvalues=eigenvalues, eigenvectors=vectors)


def _eigen_checked(A: SymMatrix) -> EigenDecomposition:
    eig = sym_eigen(A)
    lam = eig.eigenvalues
    largest = float(np.max(np.abs(lam))) if lam.size else 0.0
    smallest = float(np.min(np.abs(lam))) if lam.size else 0.0
    if lam.size == 0 or smallest < SINGULARITY_RTOL * largest or largest == 0.0:
        raise SingularMatrix(smallest)
    return eig


def inverse(A: SymMatrix) -> SymMatrix:
    """Inverse of a nonsingular symmetric matrix via its eigendecomposition.

    Raises SingularMatrix when the smallest |eigenvalue| falls below the
    relative singularity threshold.
    """
    eig = _eigen_checked(A)
    v = eig.eigenvectors
    inv = (v / eig.eigenvalues) @ v.T
    return SymMatrix(inv)


def log_determinant(A: SymMatrix) -> float:
    """ln|A| for a positive definite symmetric matrix, as the sum of ln(eigenvalue)."""
    lam = sym_eigen(A).eigenvalues
    largest = float(lam[0]) if lam.size else 0.0
    if lam.size == 0 or float(lam[-1]) <= SINGULARITY_RTOL * max(largest, 0.0):
        raise NotPositiveDefinite(
            f"smallest eigenvalue {float(lam[-1]) if lam.size else 0.0:.3e}"
        )
    return float(np.sum(np.log(lam)))


# --- incomplete gamma / chi-square -------------------------------------------

def _gamma_p_series(a: float, x: float) -> float:
    """Lower regularized gamma P(a, x) by series; accurate for x < a + 1."""
    if x == 0.0:
        return 0.0
    term = 1.0 / a
    total = term
    for n in range(1, GAMMA_MAX_ITER + 1):
        term *= x / (a + n)
        total += term
        if abs(term) < GAMMA_TOL:
            return total * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise NoConvergence("incomplete gamma series did not converge", residual=term)


def _gamma_q_contfrac(a: float, x: float) -> float:
    """Upper regularized gamma Q(a, x) by continued fraction (modified Lentz);
    accurate for x >= a + 1."""
    tiny = 1e-300
    b = x + 1.0 - a
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, GAMMA_MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < tiny:
            d = tiny
        c = b + an / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < GAMMA_TOL:
            return h * math.exp(-x + a * math.log(x) - math.lgamma(a))
    raise NoConvergence("incomplete gamma continued fraction did not converge")


def regularized_gamma_p(a: float, x: float) -> float:
    """Lower regularized incomplete gamma function P(a, x), a > 0, x >= 0."""
    if a <= 0.0:
        raise DomainError(f"shape parameter must be positive, got {a}")
    if x < 0.0:
        raise DomainError(f"argument must be nonnegative, got {x}")
    if x < a + 1.0:
        return _gamma_p_series(a, x)
    return 1.0 - _gamma_q_contfrac(a, x)


def regularized_gamma_q(a: float, x: float) -> float:
    """Upper regularized incomplete gamma function Q(a, x) = 1 - P(a, x)."""
    if a <= 0.0:
        raise DomainError(f"shape parameter must be positive, got {a}")
    if x < 0.0:
        raise DomainError(f"argument must be nonnegative, got {x}")
    if x < a + 1.0:
        return 1.0 - _gamma_p_series(a, x)
    return _gamma_q_contfrac(a, x)


def chi_square_sf(x: float, df: int) -> float:
    """Upper-tail probability P(chi2_df > x), monotone decreasing in x.

    x = 0 returns exactly 1.0.
    """
    if x < 0.0:
        raise DomainError(f"chi-square statistic must be nonnegative, got {x}")
    if df < 1:
        raise DomainError(f"degrees of freedom must be >= 1, got {df}")
    if x == 0.0:
        return 1.0
    return regularized_gamma_q(df / 2.0, x / 2.0)
