"""Exploratory factor analysis: extraction, retention, rotation, assignment.

Extraction offers principal components (all variance) and principal axis
factoring (shared variance only, iterated communalities). Retention uses
the eigenvalue-greater-than-one rule. Rotation offers varimax (orthogonal,
pairwise Kaiser-normalized sweeps) and direct oblimin (oblique, gradient
projection). Every solution passes through a canonical form so identical
inputs yield identical output bytes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core_stats import SymMatrix, inverse, sym_eigen
from .errors import BadFactorCount, NoConvergence

PAF_TOL = 1e-4
PAF_MAX_ITER = 1000
VARIMAX_TOL = 1e-8
VARIMAX_MAX_SWEEPS = 100
OBLIMIN_GTOL = 1e-6
OBLIMIN_MAX_ITER = 1000
OBLIMIN_MAX_HALVINGS = 11
ASSIGN_CUTOFF = 0.4


@dataclass(frozen=True, eq=False)
class FactorSolution:
    """A (possibly rotated) factor solution over a named item set.

    ``loadings`` is the p x m pattern matrix, ``eigenvalues`` the full
    length-p spectrum of the input correlation matrix (the spectrum the
    retention rule sees), ``phi`` the m x m factor correlation matrix
    (identity for orthogonal solutions). ``structure`` is derived as
    loadings @ phi, so pattern and structure coincide exactly when phi is
    the identity.
    """

    items: tuple[str, ...]
    extraction: str  # "pca" | "paf"
    rotation: str  # "none" | "varimax" | "oblimin(<gamma>)"
    loadings: np.ndarray
    eigenvalues: np.ndarray
    phi: np.ndarray
    communalities: np.ndarray
    convergence: dict = field(default_factory=dict)
    heywood: bool = False
    rotation_matrix: np.ndarray | None = field(default=None, repr=False)
    structure: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        L = _frozen(np.asarray(self.loadings, dtype=float))
        lam = _frozen(np.asarray(self.eigenvalues, dtype=float))
        phi = _frozen(np.asarray(self.phi, dtype=float))
        h2 = _frozen(np.asarray(self.communalities, dtype=float))
        p, m = L.shape
        if len(self.items) != p or lam.shape != (p,) or h2.shape != (p,):
            raise ValueError("solution fields disagree on the item count")
        if phi.shape != (m, m):
            raise ValueError("phi shape does not match the factor count")
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "loadings", L)
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "communalities", h2)
        object.__setattr__(self, "structure", _frozen(L @ phi))
        if self.rotation_matrix is not None:
            T = _frozen(np.asarray(self.rotation_matrix, dtype=float))
            object.__setattr__(self, "rotation_matrix", T)

    @property
    def p(self) -> int:
        return self.loadings.shape[0]

    @property
    def m(self) -> int:
        return self.loadings.shape[1]

    @property
    def uniquenesses(self) -> np.ndarray:
        return 1.0 - self.communalities

    @property
    def variance_explained(self) -> np.ndarray:
        """Per-factor proportion of total variance: column SSQ over p."""
        return (self.loadings**2).sum(axis=0) / self.p

    @property
    def cumulative_variance(self) -> np.ndarray:
        return np.cumsum(self.variance_explained)

    def reproduced(self) -> np.ndarray:
        """Model-implied matrix loadings @ phi @ loadings.T + diag(uniqueness)."""
        return self.loadings @ self.phi @ self.loadings.T + np.diag(self.uniquenesses)


@dataclass(frozen=True)
class ItemAssignment:
    item: str
    factor: int | None  # 0-based factor index; None when unassigned
    status: str  # "assigned" | "cross_loaded" | "unassigned"
    loading: float  # the signed primary pattern loading


def _frozen(a: np.ndarray) -> np.ndarray:
    a = a.copy()
    a.flags.writeable = False
    return a


def _item_names(items, p: int) -> tuple[str, ...]:
    if items is None:
        return tuple(f"item{j + 1}" for j in range(p))
    if len(items) != p:
        raise ValueError("item label count does not match matrix dimension")
    return tuple(items)


def _check_m(m: int, p: int) -> None:
    if not 1 <= m <= p:
        raise BadFactorCount(f"factor count {m} outside [1, {p}]")


def extract_pca(R: SymMatrix, m: int, items=None) -> FactorSolution:
    """Principal component extraction: loading column k = sqrt(lambda_k) v_k."""
    p = R.dim
    _check_m(m, p)
    eig = sym_eigen(R)
    lam = np.clip(eig.eigenvalues[:m], 0.0, None)
    loadings = eig.eigenvectors[:, :m] * np.sqrt(lam)
    return FactorSolution(
        items=_item_names(items, p),
        extraction="pca",
        rotation="none",
        loadings=loadings,
        eigenvalues=eig.eigenvalues,
        phi=np.eye(m),
        communalities=(loadings**2).sum(axis=1),
        convergence={"iterations": 0, "delta": 0.0},
    )


def extract_paf(
    R: SymMatrix,
    m: int,
    items=None,
    max_iter: int = PAF_MAX_ITER,
    tol: float = PAF_TOL,
) -> FactorSolution:
    """Principal axis factoring with iterated communalities.

    Initial communalities are squared multiple correlations
    1 - 1/(R^-1)_jj. Each pass replaces diag(R) with the current
    communalities, eigendecomposes, clamps negative eigenvalues to zero,
    and recomputes communalities as row sums of squared loadings, until
    max |delta h2| < tol. A communality exceeding 1 is clamped to 1 with
    the row rescaled (Heywood case, flagged, never silent).
    """
    p = R.dim
    _check_m(m, p)
    full_spectrum = sym_eigen(R).eigenvalues
    smc = 1.0 - 1.0 / np.diag(inverse(R).values)
    h2 = np.clip(smc, 0.0, 1.0)
    heywood = False
    reduced = R.values.copy()
    loadings = np.zeros((p, m))
    delta = math.inf
    iterations = 0
    for iterations in range(1, max_iter + 1):
        np.fill_diagonal(reduced, h2)
        eig = sym_eigen(SymMatrix(reduced))
        lam = np.clip(eig.eigenvalues[:m], 0.0, None)
        loadings = eig.eigenvectors[:, :m] * np.sqrt(lam)
        new_h2 = (loadings**2).sum(axis=1)
        over = new_h2 > 1.0
        if np.any(over):
            heywood = True
            loadings[over] /= np.sqrt(new_h2[over])[:, None]
            new_h2 = np.minimum(new_h2, 1.0)
        delta = float(np.max(np.abs(new_h2 - h2)))
        h2 = new_h2
        if delta < tol:
            break
    else:
        raise NoConvergence(
            f"principal axis factoring: max |delta h2| = {delta:.3e} "
            f"after {max_iter} iterations",
            residual=delta,
        )
    return FactorSolution(
        items=_item_names(items, p),
        extraction="paf",
        rotation="none",
        loadings=loadings,
        eigenvalues=full_spectrum,
        phi=np.eye(m),
        communalities=h2,
        convergence={"iterations": iterations, "delta": delta},
        heywood=heywood,
    )


def retain_kaiser(eigenvalues) -> int:
    """Count of eigenvalues strictly above 1, forced to at least 1.

    The caller can detect the forced case by checking that no eigenvalue
    exceeds 1 even though 1 factor is retained.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    return max(int(np.sum(lam > 1.0)), 1)


def varimax_criterion(loadings: np.ndarray, normalize: bool = True) -> float:
    """Raw varimax criterion: summed per-factor variance of squared loadings.

    With Kaiser normalization (the default, matching the optimizer) rows
    are scaled to unit communality first.
    """
    L = np.asarray(loadings, dtype=float)
    if normalize:
        h = np.sqrt((L**2).sum(axis=1))
        L = L / np.where(h > 0, h, 1.0)[:, None]
    p = L.shape[0]
    sq = L**2
    return float(((sq**2).sum(axis=0) - sq.sum(axis=0) ** 2 / p).sum() / p)


def rotate_varimax(
    solution: FactorSolution,
    tol: float = VARIMAX_TOL,
    max_sweeps: int = VARIMAX_MAX_SWEEPS,
) -> FactorSolution:
    """Orthogonal varimax rotation by pairwise Kaiser-normalized sweeps.

    Each factor pair is rotated by the closed-form angle maximizing the
    pair criterion; sweeps repeat until the relative criterion improvement
    drops below tol. A one-factor solution is returned unchanged with
    rotation still recorded as none.
    """
    if solution.m < 2:
        return solution
    L = solution.loadings.copy()
    p, m = L.shape
    h = np.sqrt((L**2).sum(axis=1))
    scale = np.where(h > 0, h, 1.0)
    L /= scale[:, None]
    T = np.eye(m)
    crit = _normalized_varimax(L)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        for i in range(m - 1):
            for j in range(i + 1, m):
                x = L[:, i]
                y = L[:, j]
                u = x * x - y * y
                v = 2.0 * x * y
                a = u.sum()
                b = v.sum()
                c = (u * u - v * v).sum()
                d = 2.0 * (u * v).sum()
                num = d - 2.0 * a * b / p
                den = c - (a * a - b * b) / p
                angle = 0.25 * math.atan2(num, den)
                if abs(angle) < 1e-15:
                    continue
                cs, sn = math.cos(angle), math.sin(angle)
                rot = np.array([[cs, -sn], [sn, cs]])
                L[:, [i, j]] = L[:, [i, j]] @ rot
                T[:, [i, j]] = T[:, [i, j]] @ rot
        new_crit = _normalized_varimax(L)
        improvement = new_crit - crit
        crit = new_crit
        if improvement <= tol * max(abs(new_crit), 1e-15):
            break
    else:
        raise NoConvergence(
            f"varimax: criterion still improving after {max_sweeps} sweeps",
            residual=improvement,
        )
    L *= scale[:, None]
    rotated = FactorSolution(
        items=solution.items,
        extraction=solution.extraction,
        rotation="varimax",
        loadings=L,
        eigenvalues=solution.eigenvalues,
        phi=np.eye(m),
        communalities=(L**2).sum(axis=1),
        convergence={"sweeps": sweeps, "criterion": crit},
        heywood=solution.heywood,
        rotation_matrix=T,
    )
    return sort_and_sign(rotated)


def _normalized_varimax(L: np.ndarray) -> float:
    p = L.shape[0]
    sq = L**2
    return float(((sq**2).sum(axis=0) - sq.sum(axis=0) ** 2 / p).sum() / p)


def rotate_oblimin(
    solution: FactorSolution,
    gamma: float = 0.0,
    gtol: float = OBLIMIN_GTOL,
    max_iter: int = OBLIMIN_MAX_ITER,
) -> FactorSolution:
    """Direct oblimin rotation by oblique gradient projection.

    Minimizes the oblimin criterion (gamma = 0 is direct quartimin) over
    oblique rotation matrices with unit-length columns, via projected
    gradient steps with doubling/backtracking line search. Returns the
    pattern matrix, factor correlations phi = T'T, and structure =
    pattern @ phi. Rotation never changes the reproduced matrix
    pattern @ phi @ pattern' + diag(uniqueness).
    """
    if solution.m < 2:
        return solution
    A = solution.loadings
    p, m = A.shape
    neutral = np.ones((m, m)) - np.eye(m)
    penalty = np.eye(p) - gamma * np.ones((p, p)) / p

    def criterion(L: np.ndarray) -> tuple[float, np.ndarray]:
        L2 = L * L
        X = L2 @ neutral if gamma == 0.0 else penalty @ L2 @ neutral
        return float((L2 * X).sum() / 4.0), L * X

    T = np.eye(m)
    Ti = np.eye(m)
    L = A.copy()
    f, Gq = criterion(L)
    G = -(L.T @ Gq @ Ti).T
    al = 1.0
    s = math.inf
    converged = False
    iterations = 0
    for iterations in range(max_iter):
        Gp = G - T @ np.diag((T * G).sum(axis=0))
        s = float(np.sqrt((Gp * Gp).sum()))
        if s < gtol:
            converged = True
            break
        al *= 2.0
        Tt, Tti, Lt, ft = T, Ti, L, f
        for _ in range(OBLIMIN_MAX_HALVINGS):
            X = T - al * Gp
            norms = np.sqrt((X * X).sum(axis=0))
            if np.any(norms == 0.0):
                al /= 2.0
                continue
            Tt = X / norms
            try:
                Tti = np.linalg.inv(Tt)
            except np.linalg.LinAlgError:
                al /= 2.0
                continue
            Lt = A @ Tti.T
            ft, Gq = criterion(Lt)
            # sufficient-decrease condition of the projection algorithm
            if ft < f - 0.5 * s * s * al:
                break
            al /= 2.0
        T, Ti, L, f = Tt, Tti, Lt, ft
        G = -(L.T @ Gq @ Ti).T
    if not converged:
        raise NoConvergence(
            f"oblimin: gradient norm {s:.3e} after {max_iter} iterations",
            residual=s,
        )
    phi = T.T @ T
    communalities = ((L @ phi) * L).sum(axis=1)
    rotated = FactorSolution(
        items=solution.items,
        extraction=solution.extraction,
        rotation=f"oblimin({gamma:g})",
        loadings=L,
        eigenvalues=solution.eigenvalues,
        phi=phi,
        communalities=communalities,
        convergence={"iterations": iterations, "gradient_norm": s},
        heywood=solution.heywood,
        rotation_matrix=T,
    )
    return sort_and_sign(rotated)


def sort_and_sign(solution: FactorSolution) -> FactorSolution:
    """Canonical form: columns by descending SSQ, largest-|loading| positive.

    phi rows/columns are permuted and sign-adjusted consistently so
    structure == pattern @ phi keeps holding. Idempotent.
    """
    L = solution.loadings
    m = solution.m
    order = np.argsort(-((L**2).sum(axis=0)), kind="stable")
    L = L[:, order]
    phi = solution.phi[np.ix_(order, order)]
    T = solution.rotation_matrix
    if T is not None:
        T = T[:, order]
    signs = np.ones(m)
    for k in range(m):
        col = L[:, k]
        lead = int(np.argmax(np.abs(col)))
        if col[lead] < 0:
            signs[k] = -1.0
    L = L * signs
    phi = phi * np.outer(signs, signs)
    if T is not None:
        T = T * signs
    return FactorSolution(
        items=solution.items,
        extraction=solution.extraction,
        rotation=solution.rotation,
        loadings=L,
        eigenvalues=solution.eigenvalues,
        phi=phi,
        communalities=solution.communalities,
        convergence=solution.convergence,
        heywood=solution.heywood,
        rotation_matrix=T,
    )


def assign_items(
    solution: FactorSolution, cutoff: float = ASSIGN_CUTOFF
) -> dict[str, ItemAssignment]:
    """Map each item to its dominant factor at the loading cutoff.

    An item is assigned to the factor with the largest |pattern loading|
    when that loading reaches the cutoff, flagged cross_loaded when a
    second factor also reaches it, and unassigned when none does.
    """
    out: dict[str, ItemAssignment] = {}
    for j, item in enumerate(solution.items):
        row = solution.loadings[j]
        magnitudes = np.abs(row)
        k = int(np.argmax(magnitudes))
        if magnitudes[k] < cutoff:
            out[item] = ItemAssignment(item, None, "unassigned", float(row[k]))
            continue
        rest = np.delete(magnitudes, k)
        status = "cross_loaded" if rest.size and rest.max() >= cutoff else "assigned"
        out[item] = ItemAssignment(item, k, status, float(row[k]))
    return out
