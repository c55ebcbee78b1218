"""Canonical record types shared across the pipeline.

Every downstream stage (graph build, frontier expansion, cohort matching,
harm scoring) consumes the cleaned records defined here. Venue names and
field labels are interned to small integers so records stay compact and
set intersections stay cheap.
"""

from __future__ import annotations

import re
import unicodedata
from dataclasses import dataclass, field
from datetime import date

_WS_RE = re.compile(r"\s+")
_DOI_PREFIXES = (
    "https://doi.org/",
    "http://doi.org/",
    "https://dx.doi.org/",
    "http://dx.doi.org/",
    "doi:",
)

# Month/day assigned to records that only carry a publication year.
SENTINEL_MONTH_DAY = (7, 1)


def normalize_doi(raw: str | None) -> str | None:
    """Lowercase a DOI and strip URL/scheme prefixes; empty input maps to None."""
    if raw is None:
        return None
    doi = raw.strip().lower()
    changed = True
    while changed:
        changed = False
        for prefix in _DOI_PREFIXES:
            if doi.startswith(prefix):
                doi = doi[len(prefix):]
                changed = True
    return doi or None


def normalize_label(raw: str) -> str:
    """Case-fold a field label and collapse internal whitespace."""
    return _WS_RE.sub(" ", raw.strip().casefold())


def normalize_venue(raw: str) -> str:
    """Venue join key: case-folded, punctuation stripped, whitespace collapsed.

    Punctuation-only differences ("Nature: Communications" vs "Nature
    Communications") must not split a venue across datasets.
    """
    folded = raw.strip().casefold()
    cleaned = []
    for ch in folded:
        if unicodedata.category(ch).startswith("P"):
            cleaned.append(" ")
        else:
            cleaned.append(ch)
    return _WS_RE.sub(" ", "".join(cleaned)).strip()


class Interner:
    """Bidirectional string <-> int table with first-seen assignment."""

    def __init__(self) -> None:
        self._by_name: dict[str, int] = {}
        self._names: list[str] = []

    def intern(self, name: str) -> int:
        idx = self._by_name.get(name)
        if idx is None:
            idx = len(self._names)
            self._by_name[name] = idx
            self._names.append(name)
        return idx

    def lookup(self, name: str) -> int | None:
        return self._by_name.get(name)

    def name(self, idx: int) -> str:
        return self._names[idx]

    def __len__(self) -> int:
        return len(self._names)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def names(self) -> list[str]:
        return list(self._names)


@dataclass(slots=True)
class PublicationRecord:
    """One cleaned scholarly work."""

    id: int
    doi: str | None
    title: str
    year: int
    venue_id: int | None
    fields: frozenset[int]
    citation_count: int
    reference_count: int
    pub_date: date | None = None

    @property
    def has_exact_date(self) -> bool:
        return self.pub_date is not None

    def effective_pub_date(self) -> date:
        """Publication date, falling back to the mid-year sentinel."""
        if self.pub_date is not None:
            return self.pub_date
        return date(self.year, *SENTINEL_MONTH_DAY)


@dataclass(slots=True)
class RetractionRecord:
    """One retraction notice, deduplicated by DOI."""

    doi: str
    retraction_date: date
    original_pub_date: date | None = None
    matched_pub_id: int | None = None


@dataclass(slots=True)
class JournalIfRecord:
    """Impact factor linked to an interned venue."""

    venue_id: int
    impact_factor: float


@dataclass(slots=True)
class CitationEdgeRaw:
    """Unvalidated citation edge as read from the edge list."""

    citing_id: int
    cited_id: int


@dataclass
class Corpus:
    """Cleaned analysis corpus plus its intern tables and id index."""

    records: list[PublicationRecord]
    venues: Interner
    fields: Interner
    by_id: dict[int, PublicationRecord] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.by_id:
            self.by_id = {rec.id: rec for rec in self.records}

    def __len__(self) -> int:
        return len(self.records)

    def __contains__(self, paper_id: int) -> bool:
        return paper_id in self.by_id

    def record(self, paper_id: int) -> PublicationRecord:
        try:
            return self.by_id[paper_id]
        except KeyError:
            raise KeyError(f"paper id {paper_id} not in corpus") from None
