"""Pre-factor-analysis assumption checks.

Bartlett's sphericity test asks whether the correlation matrix is
distinguishable from the identity; the Kaiser-Meyer-Olkin statistics
compare raw correlations against partial correlations from the anti-image
matrix, per item (MSA) and overall. Items whose MSA falls below threshold
are pruned one at a time, worst first, because every removal shifts the
remaining MSA values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core_stats import (
    SymMatrix,
    chi_square_sf,
    correlation_matrix,
    inverse,
    log_determinant,
)
from .errors import CannotReachThreshold, SampleTooSmall
from .ingest import AnalysisView

MIN_ITEMS_AFTER_PRUNE = 3


@dataclass(frozen=True)
class AdequacyReport:
    """Bartlett statistic plus KMO/MSA values for one correlation matrix."""

    n: int
    p: int
    bartlett_chi2: float
    bartlett_df: int
    bartlett_p: float
    kmo_overall: float
    msa_per_item: dict[str, float]


@dataclass(frozen=True)
class PruneStep:
    item: str
    msa: float
    kmo_after: float


@dataclass(frozen=True)
class PruneTrail:
    """Record of the iterative low-MSA item removal loop."""

    steps: tuple[PruneStep, ...]
    retained: tuple[str, ...]
    threshold: float
    termination: str  # "all_above_threshold" | "min_items_reached"

    @property
    def removed(self) -> tuple[str, ...]:
        return tuple(s.item for s in self.steps)


@dataclass(frozen=True)
class SampleAdequacyAdvice:
    """Advisory heuristic on sample size; never blocks the pipeline."""

    mean_communality: float
    communality_band: str  # high | moderate | low
    items_per_factor: float
    n: int
    caution: bool
    note: str


def bartlett_sphericity(R: SymMatrix, n: int) -> tuple[float, int, float]:
    """Bartlett's test of sphericity against the identity-matrix null.

    chi2 = -(n - 1 - (2p + 5)/6) * ln|R| with df = p(p-1)/2. An identity
    matrix gives chi2 = 0, p-value 1; any correlation structure pushes the
    determinant below 1 and the statistic up.
    """
    p = R.dim
    if n <= p:
        raise SampleTooSmall(f"n = {n} must exceed the item count p = {p}")
    log_det = log_determinant(R)
    chi2 = -(n - 1.0 - (2.0 * p + 5.0) / 6.0) * log_det
    chi2 = max(chi2, 0.0)
    df = p * (p - 1) // 2
    return chi2, df, chi_square_sf(chi2, df)


def kmo(R: SymMatrix, items: list[str] | None = None
        ) -> tuple[float, dict[str, float], SymMatrix]:
    """Overall KMO, per-item MSA, and the anti-image matrix.

    With S = R^-1, the partial correlation of items i and j given the rest
    is q_ij = -S_ij / sqrt(S_ii * S_jj). KMO compares squared raw against
    squared partial correlations: sum r^2 / (sum r^2 + sum q^2) over
    off-diagonal entries, overall and restricted to each item's row.
    """
    p = R.dim
    names = list(items) if items is not None else [f"item{j + 1}" for j in range(p)]
    s = inverse(R).values
    d = 1.0 / np.sqrt(np.diag(s))
    q = -s * np.outer(d, d)
    np.fill_diagonal(q, 1.0)
    anti_image = SymMatrix(q)

    r2 = R.values**2
    q2 = anti_image.values**2
    np.fill_diagonal(r2, 0.0)
    np.fill_diagonal(q2, 0.0)

    overall = float(r2.sum() / (r2.sum() + q2.sum()))
    row_r2 = r2.sum(axis=1)
    row_q2 = q2.sum(axis=1)
    msa = {name: float(row_r2[j] / (row_r2[j] + row_q2[j])) for j, name in enumerate(names)}
    return overall, msa, anti_image


def msa_prune(view: AnalysisView, threshold: float = 0.5) -> PruneTrail:
    """Iteratively drop the single worst item while its MSA is below threshold.

    One item per pass (the argmin MSA, ties by item order), because MSA
    values shift after each removal. Stops when every item clears the
    threshold or when removal would leave fewer than 3 items; in the latter
    case raises CannotReachThreshold carrying the partial trail.
    """
    items = list(view.items)
    data = view.data
    steps: list[PruneStep] = []

    while True:
        idx = [list(view.items).index(it) for it in items]
        R = correlation_matrix(data[:, idx], items)
        _, msa, _ = kmo(R, items)
        # min() keeps the first minimum, so ties resolve by item order
        worst = min(items, key=lambda it: msa[it])
        if msa[worst] >= threshold:
            return PruneTrail(
                steps=tuple(steps),
                retained=tuple(items),
                threshold=threshold,
                termination="all_above_threshold",
            )
        if len(items) <= MIN_ITEMS_AFTER_PRUNE:
            raise CannotReachThreshold(
                PruneTrail(
                    steps=tuple(steps),
                    retained=tuple(items),
                    threshold=threshold,
                    termination="min_items_reached",
                )
            )
        removed_msa = msa[worst]
        items.remove(worst)
        idx = [list(view.items).index(it) for it in items]
        R_after = correlation_matrix(data[:, idx], items)
        kmo_after, _, _ = kmo(R_after, items)
        steps.append(PruneStep(item=worst, msa=removed_msa, kmo_after=kmo_after))


def sample_adequacy_advice(solution, n: int) -> SampleAdequacyAdvice:
    """Advisory heuristic relating sample size to the fitted solution.

    Mean communality is classed high (>= 0.7), moderate (0.4 to 0.7, lower
    bound closed), or low (< 0.4). The caution flag fires only when the
    band is low, items-per-factor is under 4, and n is under 300. Labeled
    advisory throughout: it never blocks anything.
    """
    communalities = np.asarray(solution.communalities, dtype=float)
    mean_h2 = float(communalities.mean()) if communalities.size else math.nan
    if mean_h2 >= 0.7:
        band = "high"
    elif mean_h2 >= 0.4:
        band = "moderate"
    else:
        band = "low"
    ratio = solution.p / solution.m if solution.m else math.nan
    caution = band == "low" and ratio < 4.0 and n < 300
    if caution:
        note = (
            "advisory heuristic: low mean communality "
            f"({mean_h2:.2f}) with {ratio:.1f} items per factor at n={n}; "
            "consider more items per factor or a larger sample"
        )
    else:
        note = (
            "advisory heuristic: no sample-size caution "
            f"(mean communality {mean_h2:.2f}, {ratio:.1f} items per factor, n={n})"
        )
    return SampleAdequacyAdvice(
        mean_communality=mean_h2,
        communality_band=band,
        items_per_factor=ratio,
        n=n,
        caution=caution,
        note=note,
    )
