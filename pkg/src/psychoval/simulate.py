"""Synthetic Likert data from a specified factor model.

Each respondent draws factor scores from correlated standard normals
(Cholesky of phi), each item adds unique normal noise scaled so the latent
item has unit variance, and the latent value is discretized through fixed
per-item thresholds into Likert categories. Default thresholds are
equal-probability cuts of the standard normal, so the latent-to-observed
map never depends on the sample. Discretization attenuates correlations;
round-trip tolerances downstream account for that.

Model files are plain text: ``key: value`` lines (n, seed, likert, items)
plus indented blocks for ``loadings:``, ``phi:`` and ``thresholds:``.
Full-line ``#`` comments and blank lines are ignored.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core_stats import SymMatrix
from .errors import ConfigError, NotPositiveDefinite, UniquenessNegative
from .ingest import SurveyDataset
from .rng import Rng

SQRT2 = math.sqrt(2.0)
QUANTILE_BRACKET = 12.0
QUANTILE_TOL = 1e-12


def standard_normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / SQRT2))


def normal_quantile(p: float) -> float:
    """Inverse standard normal CDF by bisection on [-12, 12]."""
    if not 0.0 < p < 1.0:
        raise ConfigError(f"quantile probability {p} outside (0, 1)")
    lo, hi = -QUANTILE_BRACKET, QUANTILE_BRACKET
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if standard_normal_cdf(mid) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= QUANTILE_TOL:
            break
    return 0.5 * (lo + hi)


def equal_probability_thresholds(likert_min: int, likert_max: int) -> tuple[float, ...]:
    """Cut points splitting the standard normal into equally likely categories."""
    k = likert_max - likert_min + 1
    return tuple(normal_quantile(c / k) for c in range(1, k))


def cholesky_lower(a: np.ndarray) -> np.ndarray:
    """Lower-triangular Cholesky factor; fails on non-positive pivots."""
    a = np.asarray(a, dtype=float)
    m = a.shape[0]
    L = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1):
            s = a[i, j] - float(L[i, :j] @ L[j, :j])
            if i == j:
                if s <= 0.0:
                    raise NotPositiveDefinite(
                        f"pivot {s:.3e} at row {i} during Cholesky"
                    )
                L[i, j] = math.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    return L


@dataclass(frozen=True)
class FactorModelSpec:
    """A population factor model plus the sampling frame for simulation.

    ``thresholds`` may be omitted (equal-probability cuts), given once for
    all items, or given per item; each item needs exactly
    likert_max - likert_min strictly increasing cut points.
    """

    loadings: np.ndarray
    phi: np.ndarray | None = None
    likert_min: int = 1
    likert_max: int = 7
    n: int = 1
    thresholds: tuple | None = None
    seed: int = 0
    items: tuple[str, ...] | None = None

    def __post_init__(self):
        L = np.asarray(self.loadings, dtype=float)
        if L.ndim != 2 or L.size == 0:
            raise ConfigError("loadings must be a nonempty p x m matrix")
        p, m = L.shape
        phi = np.eye(m) if self.phi is None else np.asarray(self.phi, dtype=float)
        if phi.shape != (m, m):
            raise ConfigError("phi shape does not match the factor count")
        if np.max(np.abs(phi - phi.T)) > 1e-8:
            raise ConfigError("phi must be symmetric")
        if np.max(np.abs(np.diag(phi) - 1.0)) > 1e-8:
            raise ConfigError("phi must have a unit diagonal")
        cholesky_lower(phi)  # positive definiteness check
        if self.likert_min >= self.likert_max:
            raise ConfigError("likert_min must be strictly below likert_max")
        if self.n < 1:
            raise ConfigError("n must be at least 1")

        items = self.items
        if items is None:
            items = tuple(f"item{j + 1}" for j in range(p))
        if len(items) != p:
            raise ConfigError("item label count does not match loadings rows")

        h2 = ((L @ phi) * L).sum(axis=1)
        for j, value in enumerate(h2):
            if value > 1.0 + 1e-12:
                raise UniquenessNegative(items[j])

        cuts = self._normalized_thresholds(p)

        L = L.copy()
        L.flags.writeable = False
        phi = phi.copy()
        phi.flags.writeable = False
        object.__setattr__(self, "loadings", L)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "items", tuple(items))
        object.__setattr__(self, "thresholds", cuts)

    def _normalized_thresholds(self, p: int) -> tuple[tuple[float, ...], ...]:
        need = self.likert_max - self.likert_min
        raw = self.thresholds
        if raw is None:
            shared = equal_probability_thresholds(self.likert_min, self.likert_max)
            per_item = [shared] * p
        elif raw and np.isscalar(raw[0]):
            per_item = [tuple(float(t) for t in raw)] * p
        else:
            per_item = [tuple(float(t) for t in row) for row in raw]
        if len(per_item) != p:
            raise ConfigError("need one threshold row per item")
        for j, row in enumerate(per_item):
            if len(row) != need:
                raise ConfigError(
                    f"item {j}: expected {need} thresholds, got {len(row)}"
                )
            if any(b <= a for a, b in zip(row, row[1:])):
                raise ConfigError(f"item {j}: thresholds must strictly increase")
        return tuple(per_item)

    @property
    def p(self) -> int:
        return self.loadings.shape[0]

    @property
    def m(self) -> int:
        return self.loadings.shape[1]

    @property
    def communalities(self) -> np.ndarray:
        return ((self.loadings @ self.phi) * self.loadings).sum(axis=1)


def population_correlation(spec: FactorModelSpec) -> SymMatrix:
    """Exact latent correlation matrix lambda phi lambda' + diag(1 - h2)."""
    h2 = spec.communalities
    R = spec.loadings @ spec.phi @ spec.loadings.T + np.diag(1.0 - h2)
    np.fill_diagonal(R, 1.0)
    return SymMatrix(R)


def category_probabilities(spec: FactorModelSpec) -> np.ndarray:
    """Per-item closed-form category probabilities implied by the thresholds."""
    k = spec.likert_max - spec.likert_min + 1
    probs = np.empty((spec.p, k))
    for j, cuts in enumerate(spec.thresholds):
        cdf = [0.0] + [standard_normal_cdf(t) for t in cuts] + [1.0]
        probs[j] = np.diff(cdf)
    return probs


def expected_item_means(spec: FactorModelSpec) -> np.ndarray:
    """Threshold-implied expectation of each observed item."""
    probs = category_probabilities(spec)
    categories = np.arange(spec.likert_min, spec.likert_max + 1, dtype=float)
    return probs @ categories


def generate(spec: FactorModelSpec) -> SurveyDataset:
    """Simulate a complete SurveyDataset; deterministic given the seed.

    Draw order per respondent: m factor normals, then p unique normals.
    """
    rng = Rng(spec.seed)
    chol = cholesky_lower(spec.phi)
    unique_sd = np.sqrt(np.clip(1.0 - spec.communalities, 0.0, None))
    n, p, m = spec.n, spec.p, spec.m
    values = np.empty((n, p))
    for i in range(n):
        z = np.array(rng.normals(m))
        factors = chol @ z
        eps = np.array(rng.normals(p))
        latent = spec.loadings @ factors + unique_sd * eps
        for j in range(p):
            values[i, j] = spec.likert_min + bisect_right(spec.thresholds[j], latent[j])
    width = len(str(n))
    respondents = tuple(f"r{i + 1:0{width}d}" for i in range(n))
    return SurveyDataset(
        items=spec.items,
        respondents=respondents,
        values=values,
        likert_min=spec.likert_min,
        likert_max=spec.likert_max,
    )


_SCALAR_KEYS = ("n", "seed", "likert", "items")
_BLOCK_KEYS = ("loadings", "phi", "thresholds")


def parse_model(text: str, n: int | None = None, seed: int | None = None) -> FactorModelSpec:
    """Build a FactorModelSpec from model-file text.

    ``n`` and ``seed`` arguments override the file's values when given.
    """
    scalars: dict[str, str] = {}
    blocks: dict[str, list[list[float]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip()
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if current is not None and line[0] in " \t":
            try:
                blocks[current].append([float(tok) for tok in line.split()])
            except ValueError:
                raise ConfigError(
                    f"line {lineno}: bad number in {current} block"
                ) from None
            continue
        current = None
        key, sep, value = line.partition(":")
        key = key.strip()
        if not sep:
            raise ConfigError(f"line {lineno}: expected 'key: value'")
        value = value.strip()
        if key in _BLOCK_KEYS:
            if value:
                raise ConfigError(f"line {lineno}: {key} block takes no inline value")
            blocks[key] = []
            current = key
        elif key in _SCALAR_KEYS:
            scalars[key] = value
        else:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")

    if "loadings" not in blocks or not blocks["loadings"]:
        raise ConfigError("model file needs a loadings block")
    loadings = _rectangular(blocks["loadings"], "loadings")

    phi = _rectangular(blocks["phi"], "phi") if blocks.get("phi") else None
    thresholds: tuple | None = None
    if blocks.get("thresholds"):
        rows = blocks["thresholds"]
        thresholds = tuple(rows[0]) if len(rows) == 1 else tuple(tuple(r) for r in rows)

    likert_min, likert_max = 1, 7
    if "likert" in scalars:
        likert_min, likert_max = _parse_likert(scalars["likert"])
    items = None
    if "items" in scalars:
        items = tuple(tok.strip() for tok in scalars["items"].split(",") if tok.strip())

    if n is None:
        n = _parse_int(scalars.get("n"), "n") if "n" in scalars else None
    if n is None:
        raise ConfigError("respondent count n given neither in file nor as override")
    if seed is None:
        seed = _parse_int(scalars["seed"], "seed") if "seed" in scalars else 0

    return FactorModelSpec(
        loadings=loadings,
        phi=phi,
        likert_min=likert_min,
        likert_max=likert_max,
        n=n,
        thresholds=thresholds,
        seed=seed,
        items=items,
    )


def load_model(path: str | Path, n: int | None = None, seed: int | None = None) -> FactorModelSpec:
    return parse_model(Path(path).read_text(encoding="utf-8"), n=n, seed=seed)


def _rectangular(rows: list[list[float]], what: str) -> np.ndarray:
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ConfigError(f"{what} block rows have unequal lengths")
    return np.array(rows, dtype=float)


def _parse_likert(text: str) -> tuple[int, int]:
    lo, sep, hi = text.partition(":")
    if not sep:
        raise ConfigError(f"likert bounds {text!r} are not in a:b form")
    return _parse_int(lo.strip(), "likert low"), _parse_int(hi.strip(), "likert high")


def _parse_int(token: str | None, what: str) -> int:
    try:
        return int(token)  # type: ignore[arg-type]
    except (TypeError, ValueError):
        raise ConfigError(f"{what} must be an integer, got {token!r}") from None
