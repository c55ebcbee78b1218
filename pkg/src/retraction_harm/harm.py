"""Per-paper harm: the shortfall of a paper's citations against the
mean of its comparator cohort.

An entry is 1 - own / cohort_mean, so 1.0 means the paper was never
cited while the cohort was, 0.0 means it matched the cohort mean, and
values below zero mean it outperformed the cohort (unboundedly so).
Entries are undefined (None / NaN) when the cohort is empty or the
cohort's corresponding citation sum is zero, never coerced to 0.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .comparator import CohortCache, ComparatorAggregate
from .graph import N_OFFSETS, YearlyCitationIndex
from .records import Corpus, PublicationRecord

N_YEARLY = N_OFFSETS - 1  # harm years k = 1..10


def harm_total(c_citations: int, agg: ComparatorAggregate) -> float | None:
    """Total-citation harm, undefined unless the cohort is nonempty with
    a positive citation total."""
    if agg.n_d <= 0 or agg.total_citations <= 0:
        return None
    return 1.0 - c_citations / (agg.total_citations / agg.n_d)


def harm_yearly(c_yearly: int, agg: ComparatorAggregate, k: int) -> float | None:
    """Year-k harm, undefined unless the cohort's year-k sum is positive."""
    if not 1 <= k <= N_YEARLY:
        raise ValueError(f"year offset {k} outside 1..{N_YEARLY}")
    cohort_year = agg.yearly(k)
    if agg.n_d <= 0 or cohort_year <= 0:
        return None
    return 1.0 - c_yearly / (cohort_year / agg.n_d)


@dataclass(frozen=True)
class HarmVector:
    """Total harm plus the ten yearly harms for one citing paper."""

    paper: int
    h0: float | None
    yearly: tuple[float | None, ...]

    def entry(self, k: int) -> float | None:
        """k=0 is total harm; k=1..10 the yearly entries."""
        if k == 0:
            return self.h0
        if 1 <= k <= N_YEARLY:
            return self.yearly[k - 1]
        raise ValueError(f"harm index {k} outside 0..{N_YEARLY}")

    def defined(self) -> list[tuple[int, float]]:
        out = []
        if self.h0 is not None:
            out.append((0, self.h0))
        for k, value in enumerate(self.yearly, start=1):
            if value is not None:
                out.append((k, value))
        return out


def harm_vector(
    record: PublicationRecord,
    year_index: YearlyCitationIndex,
    agg: ComparatorAggregate,
) -> HarmVector:
    """Assemble the harm vector for one paper from its cohort aggregate."""
    own_yearly = year_index.row(record.id)
    return HarmVector(
        paper=record.id,
        h0=harm_total(record.citation_count, agg),
        yearly=tuple(
            harm_yearly(int(own_yearly[k]), agg, k) for k in range(1, N_OFFSETS)
        ),
    )


class HarmTable:
    """Harm vectors for a set of papers, as a dense NaN-masked matrix.

    Column 0 is total harm, columns 1..10 the yearly harms. NaN marks
    undefined entries.
    """

    def __init__(self, ids: np.ndarray, values: np.ndarray) -> None:
        self.ids = ids  # sorted paper ids, shape (m,)
        self.values = values  # shape (m, 11), float64 with NaN

    def __len__(self) -> int:
        return int(self.ids.size)

    def row(self, paper_id: int) -> np.ndarray:
        pos = int(np.searchsorted(self.ids, paper_id))
        if pos >= self.ids.size or self.ids[pos] != paper_id:
            raise KeyError(f"paper id {paper_id} has no harm vector")
        return self.values[pos]

    def rows_for(self, paper_ids: np.ndarray) -> np.ndarray:
        if self.ids.size == 0:
            if paper_ids.size:
                raise KeyError("paper ids missing from harm table")
            return self.values[:0]
        pos = np.searchsorted(self.ids, paper_ids)
        ok = (pos < self.ids.size) & (self.ids[np.minimum(pos, self.ids.size - 1)] == paper_ids)
        if not ok.all():
            raise KeyError("paper ids missing from harm table")
        return self.values[pos]

    def vector(self, paper_id: int) -> HarmVector:
        row = self.row(paper_id)
        entries = [None if np.isnan(v) else float(v) for v in row]
        return HarmVector(paper=paper_id, h0=entries[0], yearly=tuple(entries[1:]))


def compute_harm_table(
    corpus: Corpus,
    year_index: YearlyCitationIndex,
    cohorts: CohortCache,
    paper_ids: set[int] | np.ndarray,
) -> HarmTable:
    """Vectorized harm for many papers at once.

    Aggregates come from the cohort cache; the final arithmetic runs on
    whole arrays with NaN standing in for the undefined guards.
    """
    ids = np.asarray(sorted(paper_ids) if isinstance(paper_ids, set) else paper_ids)
    ids = np.unique(ids.astype(np.int64))
    m = ids.size
    if m == 0:
        return HarmTable(ids, np.empty((0, N_OFFSETS), dtype=np.float64))

    n_d, totals, cohort_yearly = cohorts.batch_arrays(ids)
    pos = np.searchsorted(year_index.ids, ids)
    own_yearly = year_index.counts[pos, 1:N_OFFSETS].astype(np.float64)
    own_total = np.asarray(
        [corpus.record(int(pid)).citation_count for pid in ids], dtype=np.float64
    )

    values = np.full((m, N_OFFSETS), np.nan, dtype=np.float64)
    # Same operation order as harm_total/harm_yearly so the batch path
    # is bit-identical to the scalar one.
    with np.errstate(divide="ignore", invalid="ignore"):
        h0 = 1.0 - own_total / (totals / n_d)
        values[:, 0] = np.where((n_d > 0) & (totals > 0), h0, np.nan)
        hk = 1.0 - own_yearly / (cohort_yearly / n_d[:, None])
        defined = (n_d[:, None] > 0) & (cohort_yearly > 0)
        values[:, 1:] = np.where(defined, hk, np.nan)
    return HarmTable(ids, values)


def format_fraction_percent(value: float) -> str:
    """Render a harm fraction as a percentage with two decimals."""
    scaled = value * 100.0
    if scaled == 0.0:
        scaled = 0.0  # normalize negative zero
    return f"{scaled:.2f}"


def write_harm_csv(
    path: str | Path,
    rows: list[tuple[int, int, int, str, HarmVector]],
) -> None:
    """Write harm rows: (paper, distance, dedup flag, pre/post, vector).

    Undefined entries are left blank; defined entries use full-precision
    repr so the file round-trips exactly.
    """
    header = ["paper_id", "distance", "dedup_flag", "pre_post_flag", "h0"] + [
        f"h{k}" for k in range(1, N_OFFSETS)
    ]
    with open(path, "w", newline="", encoding="utf-8") as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(header)
        for paper_id, distance, dedup_flag, prepost, vec in rows:
            cells = [_cell(vec.h0)] + [_cell(v) for v in vec.yearly]
            writer.writerow([paper_id, distance, dedup_flag, prepost] + cells)


def _cell(value: float | None) -> str:
    return "" if value is None else repr(value)


def read_harm_csv(
    path: str | Path,
) -> list[tuple[int, int, int, str, HarmVector]]:
    rows = []
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        for row in reader:
            vec = HarmVector(
                paper=int(row["paper_id"]),
                h0=_parse_cell(row["h0"]),
                yearly=tuple(
                    _parse_cell(row[f"h{k}"]) for k in range(1, N_OFFSETS)
                ),
            )
            rows.append(
                (
                    int(row["paper_id"]),
                    int(row["distance"]),
                    int(row["dedup_flag"]),
                    row["pre_post_flag"],
                    vec,
                )
            )
    return rows


def _parse_cell(raw: str) -> float | None:
    return None if raw == "" else float(raw)
