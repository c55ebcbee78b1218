"""Comparator cohorts: same venue, publication year within one year,
at least one shared field of study.

`comparator_set` and `aggregate` implement the cohort definition
directly. `CohortCache` is the production path: because cohort
membership depends only on (venue, year, field set), aggregates are
memoized per signature and a paper's own contribution is subtracted
when self-exclusion is on.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from collections.abc import Iterable
from pathlib import Path

import numpy as np

from .graph import YearlyCitationIndex, N_OFFSETS
from .records import Corpus, PublicationRecord

YEAR_WINDOW = 1  # comparator years are {y-1, y, y+1}


@dataclass(frozen=True)
class ComparatorAggregate:
    """Cohort size and summed citation metrics."""

    n_d: int
    total_citations: int
    yearly_citations: tuple[int, ...]  # index 0 is year offset k=1

    def yearly(self, k: int) -> int:
        if not 1 <= k <= N_OFFSETS - 1:
            raise ValueError(f"year offset {k} outside 1..{N_OFFSETS - 1}")
        return self.yearly_citations[k - 1]

    @staticmethod
    def empty() -> "ComparatorAggregate":
        return ComparatorAggregate(0, 0, (0,) * (N_OFFSETS - 1))


class ComparatorKeyIndex:
    """(venue_id, year) -> papers published in that venue-year."""

    def __init__(self, corpus: Corpus) -> None:
        self._corpus = corpus
        self._by_key: dict[tuple[int, int], list[int]] = {}
        for pos, rec in enumerate(corpus.records):
            self._by_key.setdefault((rec.venue_id, rec.year), []).append(pos)

    @property
    def corpus(self) -> Corpus:
        return self._corpus

    def venue_year(self, venue_id: int, year: int) -> list[int]:
        """Positions (corpus order) of papers in one venue-year."""
        return self._by_key.get((venue_id, year), [])

    def window_candidates(self, venue_id: int, year: int) -> list[int]:
        """Positions of papers in the venue within the +-1 year window."""
        out: list[int] = []
        for y in (year - 1, year, year + 1):
            out.extend(self._by_key.get((venue_id, y), []))
        return out


def comparator_set(
    index: ComparatorKeyIndex, paper_id: int, exclude_self: bool = True
) -> set[int]:
    """The cohort D(c): same venue, year within one, sharing a field.

    With `exclude_self` (the default) the paper itself never appears in
    its own cohort.
    """
    corpus = index.corpus
    rec = corpus.record(paper_id)
    out: set[int] = set()
    for pos in index.window_candidates(rec.venue_id, rec.year):
        cand = corpus.records[pos]
        if cand.fields.isdisjoint(rec.fields):
            continue
        if exclude_self and cand.id == paper_id:
            continue
        out.add(cand.id)
    return out


def aggregate(
    corpus: Corpus, year_index: YearlyCitationIndex, cohort: Iterable[int]
) -> ComparatorAggregate:
    """Sum citation metrics over a cohort.

    total_citations sums each member's recorded citation count; the
    yearly entries sum per-member citations at year offsets 1..10.
    """
    n_d = 0
    total = 0
    yearly = np.zeros(N_OFFSETS - 1, dtype=np.int64)
    for pid in cohort:
        rec = corpus.record(pid)
        n_d += 1
        total += rec.citation_count
        yearly += year_index.row(pid)[1:N_OFFSETS]
    return ComparatorAggregate(n_d, total, tuple(int(v) for v in yearly))


class CohortCache:
    """Signature-memoized cohort aggregates.

    Papers sharing (venue, year, field set) have identical candidate
    buckets, so the inclusive aggregate is computed once per signature;
    per-paper self-exclusion is a constant-time subtraction.
    """

    def __init__(
        self,
        corpus: Corpus,
        year_index: YearlyCitationIndex,
        index: ComparatorKeyIndex | None = None,
        exclude_self: bool = True,
    ) -> None:
        self.corpus = corpus
        self.year_index = year_index
        self.index = index if index is not None else ComparatorKeyIndex(corpus)
        self.exclude_self = exclude_self
        self._memo: dict[tuple[int, int, frozenset[int]], tuple[int, int, np.ndarray]] = {}

    def _inclusive(self, rec: PublicationRecord) -> tuple[int, int, np.ndarray]:
        key = (rec.venue_id, rec.year, rec.fields)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        records = self.corpus.records
        counts = self.year_index.counts
        n = 0
        total = 0
        yearly = np.zeros(N_OFFSETS - 1, dtype=np.int64)
        for pos in self.index.window_candidates(rec.venue_id, rec.year):
            cand = records[pos]
            if cand.fields.isdisjoint(rec.fields):
                continue
            n += 1
            total += cand.citation_count
            yearly += counts[pos, 1:N_OFFSETS]
        result = (n, total, yearly)
        self._memo[key] = result
        return result

    def aggregate_for(self, paper_id: int) -> ComparatorAggregate:
        """Cohort aggregate for one paper, honoring self-exclusion."""
        rec = self.corpus.record(paper_id)
        n, total, yearly = self._inclusive(rec)
        if self.exclude_self:
            own = self.year_index.row(paper_id)[1:N_OFFSETS]
            return ComparatorAggregate(
                n - 1,
                total - rec.citation_count,
                tuple(int(v) for v in (yearly - own)),
            )
        return ComparatorAggregate(n, total, tuple(int(v) for v in yearly))

    def write_cohort_sizes(self, path: str | Path, paper_ids: Iterable[int]) -> None:
        """Audit dump: per-paper cohort size as CSV, sorted by paper id."""
        with open(path, "w", newline="", encoding="utf-8") as out:
            writer = csv.writer(out, lineterminator="\n")
            writer.writerow(["paper_id", "cohort_size"])
            for pid in sorted(paper_ids):
                writer.writerow([pid, self.aggregate_for(pid).n_d])

    def batch_arrays(
        self, paper_ids: np.ndarray
    ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Aggregate arrays aligned with `paper_ids`: n_d, totals, yearly.

        Shapes: (m,), (m,), (m, 10). Used by the vectorized harm path.
        """
        m = paper_ids.size
        n_d = np.empty(m, dtype=np.int64)
        totals = np.empty(m, dtype=np.int64)
        yearly = np.empty((m, N_OFFSETS - 1), dtype=np.int64)
        corpus = self.corpus
        year_counts = self.year_index.counts
        ids = self.year_index.ids
        pos_arr = np.searchsorted(ids, paper_ids)
        for i, pid in enumerate(paper_ids.tolist()):
            rec = corpus.record(pid)
            n, total, ysum = self._inclusive(rec)
            if self.exclude_self:
                n_d[i] = n - 1
                totals[i] = total - rec.citation_count
                yearly[i] = ysum - year_counts[pos_arr[i], 1:N_OFFSETS]
            else:
                n_d[i] = n
                totals[i] = total
                yearly[i] = ysum
        return n_d, totals, yearly
