"""Loading, validation, and description of survey response datasets.

The on-disk format is plain CSV: header row with the respondent-id column
first and one column per item, then one row per respondent. Cells hold
integer Likert responses or the declared missing token; nothing is
type-inferred. Scale definitions (named item groupings) live in a
line-oriented sidecar file, ``name: id1,id2,...``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    DuplicateId,
    EmptyAfterDeletion,
    EmptyDataset,
    MissingDataError,
    ParseError,
    RangeError,
)

POLICIES = ("listwise", "pairwise", "strict")


@dataclass(frozen=True)
class SurveyDataset:
    """Rectangular respondents x items table of bounded Likert responses.

    ``values`` is a read-only float array with NaN marking missing cells;
    all non-missing entries are integers within [likert_min, likert_max].
    """

    items: tuple[str, ...]
    respondents: tuple[str, ...]
    values: np.ndarray
    likert_min: int
    likert_max: int

    def __post_init__(self):
        if self.likert_min >= self.likert_max:
            raise ValueError("likert_min must be strictly below likert_max")
        if len(set(self.items)) != len(self.items):
            raise DuplicateId("item", _first_duplicate(self.items))
        if len(set(self.respondents)) != len(self.respondents):
            raise DuplicateId("respondent", _first_duplicate(self.respondents))
        a = np.asarray(self.values, dtype=float)
        if a.shape != (len(self.respondents), len(self.items)):
            raise ValueError(
                f"values shape {a.shape} does not match "
                f"{len(self.respondents)} respondents x {len(self.items)} items"
            )
        finite = a[~np.isnan(a)]
        if finite.size and (
            np.any(finite < self.likert_min) or np.any(finite > self.likert_max)
        ):
            raise ValueError("responses outside Likert bounds")
        a = a.copy()
        a.flags.writeable = False
        object.__setattr__(self, "values", a)
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "respondents", tuple(self.respondents))

    @property
    def n(self) -> int:
        return len(self.respondents)

    @property
    def p(self) -> int:
        return len(self.items)

    def column(self, item: str) -> np.ndarray:
        return self.values[:, self.items.index(item)]

    def subset(self, items: Sequence[str]) -> "SurveyDataset":
        """Dataset restricted to the given items, order preserved as given."""
        idx = [self.items.index(it) for it in items]
        return SurveyDataset(
            items=tuple(items),
            respondents=self.respondents,
            values=self.values[:, idx],
            likert_min=self.likert_min,
            likert_max=self.likert_max,
        )


@dataclass(frozen=True)
class ScaleDefinition:
    """A named, ordered group of item ids intended to measure one construct."""

    name: str
    item_ids: tuple[str, ...]

    def __post_init__(self):
        if not self.item_ids:
            raise ValueError(f"scale {self.name!r} has no items")
        if len(set(self.item_ids)) != len(self.item_ids):
            raise DuplicateId("scale item", _first_duplicate(self.item_ids))
        object.__setattr__(self, "item_ids", tuple(self.item_ids))

    def check_against(self, ds: SurveyDataset) -> None:
        unknown = [it for it in self.item_ids if it not in ds.items]
        if unknown:
            raise ValueError(f"scale {self.name!r} references unknown items {unknown}")


@dataclass(frozen=True)
class AnalysisView:
    """A dataset seen through a missing-data policy.

    ``data`` is the table handed to downstream statistics: listwise views
    contain only complete rows, pairwise views keep NaN and defer exclusion
    to each item pair. ``pair_n[i, j]`` counts complete rows for that pair
    (pairwise only; None otherwise).
    """

    dataset: SurveyDataset
    policy: str
    data: np.ndarray = field(repr=False)
    respondents: tuple[str, ...]
    pair_n: np.ndarray | None = field(default=None, repr=False)

    @property
    def items(self) -> tuple[str, ...]:
        return self.dataset.items

    @property
    def effective_n(self) -> int:
        """Listwise/strict: rows kept. Pairwise: the smallest per-pair count."""
        if self.pair_n is None:
            return len(self.respondents)
        return int(self.pair_n.min())


def _first_duplicate(seq: Iterable[str]) -> str:
    seen = set()
    for s in seq:
        if s in seen:
            return s
        seen.add(s)
    return ""


def load_csv(
    path: str | Path,
    likert_min: int,
    likert_max: int,
    missing_token: str = "NA",
    reverse_coded: Sequence[str] = (),
) -> SurveyDataset:
    """Read a survey CSV into a validated SurveyDataset.

    First header cell names the respondent-id column, the rest are item ids.
    Cells must parse as integers or equal ``missing_token`` exactly.
    Items listed in ``reverse_coded`` are reflected at load time:
    v -> likert_min + likert_max - v.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        return _parse_csv(fh, likert_min, likert_max, missing_token, reverse_coded)


def loads_csv(
    text: str,
    likert_min: int,
    likert_max: int,
    missing_token: str = "NA",
    reverse_coded: Sequence[str] = (),
) -> SurveyDataset:
    """Same as load_csv but from an in-memory string."""
    return _parse_csv(io.StringIO(text), likert_min, likert_max, missing_token, reverse_coded)


def _parse_csv(fh, likert_min, likert_max, missing_token, reverse_coded) -> SurveyDataset:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyDataset("file has no header row") from None
    if len(header) < 2:
        raise ParseError(1, header[0] if header else "", "header needs id column plus items")
    items = [h.strip() for h in header[1:]]
    if len(set(items)) != len(items):
        raise DuplicateId("item", _first_duplicate(items))
    unknown_reversed = [r for r in reverse_coded if r not in items]
    if unknown_reversed:
        raise ValueError(f"reverse-coded items not in header: {unknown_reversed}")
    reflect = {items.index(r) for r in reverse_coded}

    respondents: list[str] = []
    seen_ids: set[str] = set()
    rows: list[list[float]] = []
    for lineno, record in enumerate(reader, start=2):
        if not record or all(not c.strip() for c in record):
            continue
        if len(record) != len(items) + 1:
            raise ParseError(lineno, "", f"expected {len(items) + 1} cells, got {len(record)}")
        rid = record[0].strip()
        if rid in seen_ids:
            raise DuplicateId("respondent", rid)
        seen_ids.add(rid)
        row: list[float] = []
        for j, cell in enumerate(record[1:]):
            cell = cell.strip()
            if cell == missing_token:
                row.append(math.nan)
                continue
            try:
                value = int(cell)
            except ValueError:
                raise ParseError(lineno, items[j], cell) from None
            if value < likert_min or value > likert_max:
                raise RangeError(lineno, items[j], value)
            if j in reflect:
                value = likert_min + likert_max - value
            row.append(float(value))
        respondents.append(rid)
        rows.append(row)

    values = np.array(rows, dtype=float) if rows else np.empty((0, len(items)))
    return SurveyDataset(
        items=tuple(items),
        respondents=tuple(respondents),
        values=values,
        likert_min=likert_min,
        likert_max=likert_max,
    )


def to_csv(ds: SurveyDataset, id_column: str = "respondent",
           missing_token: str = "NA") -> str:
    """Serialize a dataset back to the CSV dialect read by load_csv.

    Integer cells, LF newlines; loading the output reproduces the dataset
    (round-trip identity).
    """
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow([id_column, *ds.items])
    for i, rid in enumerate(ds.respondents):
        cells = [
            missing_token if math.isnan(v) else str(int(v)) for v in ds.values[i]
        ]
        writer.writerow([rid, *cells])
    return out.getvalue()


def complete_cases(ds: SurveyDataset, policy: str = "listwise") -> AnalysisView:
    """Apply a missing-data policy and return the analysis view.

    listwise drops respondents with any missing cell, pairwise defers
    exclusion to each item pair, strict raises on any missing value.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown policy {policy!r}, expected one of {POLICIES}")
    missing = np.isnan(ds.values)
    if policy == "strict":
        if missing.any():
            i, j = map(int, np.argwhere(missing)[0])
            raise MissingDataError(
                f"missing cell at respondent {ds.respondents[i]!r}, item {ds.items[j]!r}"
            )
        return AnalysisView(ds, policy, ds.values, ds.respondents)
    if policy == "listwise":
        keep = ~missing.any(axis=1)
        if ds.n and not keep.any():
            raise EmptyAfterDeletion("every respondent has at least one missing cell")
        kept_ids = tuple(r for r, k in zip(ds.respondents, keep) if k)
        return AnalysisView(ds, policy, ds.values[keep], kept_ids)
    # pairwise: keep all rows, record per-pair complete counts
    present = ~missing
    pair_n = (present.astype(int).T @ present.astype(int))
    return AnalysisView(ds, policy, ds.values, ds.respondents, pair_n=pair_n)


@dataclass(frozen=True)
class ItemSummary:
    item: str
    n: int
    mean: float
    sd: float
    min: float
    max: float
    missing: int


def describe(ds: SurveyDataset) -> list[ItemSummary]:
    """Per-item summary (n, mean, sd with n-1 denominator, min, max, missing)."""
    if ds.n == 0 or ds.p == 0:
        raise EmptyDataset("dataset has no rows or no items")
    out = []
    for j, item in enumerate(ds.items):
        col = ds.values[:, j]
        obs = col[~np.isnan(col)]
        n = int(obs.size)
        if n == 0:
            out.append(ItemSummary(item, 0, math.nan, math.nan, math.nan, math.nan, ds.n))
            continue
        sd = float(np.std(obs, ddof=1)) if n > 1 else math.nan
        out.append(
            ItemSummary(
                item=item,
                n=n,
                mean=float(np.mean(obs)),
                sd=sd,
                min=float(np.min(obs)),
                max=float(np.max(obs)),
                missing=ds.n - n,
            )
        )
    return out


def load_scales(path: str | Path) -> list[ScaleDefinition]:
    """Parse the scale sidecar: one ``name: id1,id2,...`` per line.

    Blank lines and ``#`` comments are ignored; duplicate scale names error.
    """
    return parse_scales(Path(path).read_text(encoding="utf-8"))


def parse_scales(text: str) -> list[ScaleDefinition]:
    scales: list[ScaleDefinition] = []
    names: set[str] = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ParseError(lineno, "", raw.strip())
        name, _, rest = line.partition(":")
        name = name.strip()
        if not name:
            raise ParseError(lineno, "", raw.strip())
        if name in names:
            raise DuplicateId("scale", name)
        names.add(name)
        item_ids = tuple(tok.strip() for tok in rest.split(",") if tok.strip())
        scales.append(ScaleDefinition(name=name, item_ids=item_ids))
    return scales
