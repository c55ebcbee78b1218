"""Parse, clean, and cross-link the three input datasets.

Cleaning rules applied here:

* publications: drop records without a publication year or published
  before 1900, deduplicate by DOI (higher citation count wins, then
  higher reference count, then smaller id), then restrict to the
  analysis corpus (year <= cutoff, venue and fields present);
* retractions: drop null-DOI rows, collapse duplicate DOIs keeping the
  latest retraction date, link to the corpus by DOI;
* journal impact factors: resolve venue names against the intern table,
  keep the maximum IF when a venue appears more than once.

Every dropped record increments a named counter so runs are auditable.
"""

from __future__ import annotations

import csv
import json
import logging
from collections import Counter
from collections.abc import Iterable, Iterator
from datetime import date
from pathlib import Path

from .errors import DataError
from .records import (
    Corpus,
    Interner,
    JournalIfRecord,
    PublicationRecord,
    RetractionRecord,
    normalize_doi,
    normalize_label,
    normalize_venue,
)

log = logging.getLogger(__name__)

MIN_YEAR = 1900
DEFAULT_CUTOFF_YEAR = 2013


class DropCounters(Counter):
    """Named counters for records removed at each cleaning step."""

    def as_dict(self) -> dict[str, int]:
        return {key: self[key] for key in sorted(self)}


def _parse_date(raw: str | None) -> date | None:
    if not raw:
        return None
    return date.fromisoformat(raw.strip())


def iter_jsonl(path: str | Path) -> Iterator[str]:
    try:
        with open(path, encoding="utf-8") as handle:
            yield from handle
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def load_publications(
    source: Iterable[str],
    counters: DropCounters | None = None,
    venues: Interner | None = None,
    fields: Interner | None = None,
) -> tuple[list[PublicationRecord], Interner, Interner, DropCounters]:
    """Parse a JSONL publication stream into cleaned records.

    Returns the retained records together with the venue/field intern
    tables and the drop counters. Records lacking a publication year or
    published before 1900 are dropped and counted; malformed lines are
    skipped per record.
    """
    counters = counters if counters is not None else DropCounters()
    venues = venues if venues is not None else Interner()
    fields = fields if fields is not None else Interner()
    records: list[PublicationRecord] = []
    seen_ids: set[int] = set()

    for lineno, line in enumerate(source, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            paper_id, year = _identity_fields(obj)
        except (ValueError, KeyError, TypeError) as exc:
            counters["publications_malformed"] += 1
            log.debug("skipping publication line %d: %s", lineno, exc)
            continue
        if year is None:
            counters["publications_missing_year"] += 1
            continue
        if year < MIN_YEAR:
            counters["publications_before_1900"] += 1
            continue
        if paper_id in seen_ids:
            counters["publications_duplicate_id"] += 1
            continue
        try:
            rec = _publication_from_obj(obj, paper_id, year, venues, fields)
        except (ValueError, KeyError, TypeError) as exc:
            counters["publications_malformed"] += 1
            log.debug("skipping publication line %d: %s", lineno, exc)
            continue
        seen_ids.add(paper_id)
        records.append(rec)

    return records, venues, fields, counters


def _identity_fields(obj: dict) -> tuple[int, int | None]:
    if not isinstance(obj, dict):
        raise ValueError("record is not an object")
    paper_id = obj["id"]
    if not isinstance(paper_id, int) or isinstance(paper_id, bool) or paper_id < 0:
        raise ValueError(f"bad id {paper_id!r}")
    year = obj.get("year")
    if year is not None and (not isinstance(year, int) or isinstance(year, bool)):
        raise ValueError(f"bad year {year!r}")
    return paper_id, year


def _publication_from_obj(
    obj: dict, paper_id: int, year: int, venues: Interner, fields: Interner
) -> PublicationRecord:
    venue_raw = obj.get("venue")
    venue_id = None
    if isinstance(venue_raw, str) and venue_raw.strip():
        key = normalize_venue(venue_raw)
        if key:
            venue_id = venues.intern(key)

    field_ids: set[int] = set()
    for label in obj.get("fields") or []:
        if isinstance(label, str) and label.strip():
            field_ids.add(fields.intern(normalize_label(label)))

    pub_date = None
    raw_date = obj.get("pub_date")
    if raw_date:
        try:
            pub_date = _parse_date(raw_date)
        except ValueError:
            pub_date = None  # keep the record, fall back to year sentinel
    if pub_date is not None and pub_date.year != year:
        pub_date = None  # inconsistent date, trust the year field

    return PublicationRecord(
        id=paper_id,
        doi=normalize_doi(obj.get("doi")),
        title=str(obj.get("title") or ""),
        year=year,
        venue_id=venue_id,
        fields=frozenset(field_ids),
        citation_count=max(0, int(obj.get("citation_count") or 0)),
        reference_count=max(0, int(obj.get("reference_count") or 0)),
        pub_date=pub_date,
    )


def dedup_by_doi(
    records: list[PublicationRecord], counters: DropCounters | None = None
) -> list[PublicationRecord]:
    """Keep one record per DOI: highest citation count, then highest
    reference count, then smallest id. Null-DOI records all survive."""
    counters = counters if counters is not None else DropCounters()
    best: dict[str, PublicationRecord] = {}
    for rec in records:
        if rec.doi is None:
            continue
        cur = best.get(rec.doi)
        if cur is None or _dedup_rank(rec) < _dedup_rank(cur):
            best[rec.doi] = rec
    survivors = []
    for rec in records:
        if rec.doi is None or best[rec.doi] is rec:
            survivors.append(rec)
        else:
            counters["publications_duplicate_doi"] += 1
    return survivors


def _dedup_rank(rec: PublicationRecord) -> tuple[int, int, int]:
    return (-rec.citation_count, -rec.reference_count, rec.id)


def filter_analysis_corpus(
    records: list[PublicationRecord],
    cutoff_year: int = DEFAULT_CUTOFF_YEAR,
    counters: DropCounters | None = None,
) -> list[PublicationRecord]:
    """Restrict to records usable for comparison: published in or before
    the cutoff year, with venue and at least one field of study."""
    counters = counters if counters is not None else DropCounters()
    retained = []
    for rec in records:
        if rec.year > cutoff_year:
            counters["publications_after_cutoff"] += 1
        elif rec.venue_id is None:
            counters["publications_missing_venue"] += 1
        elif not rec.fields:
            counters["publications_missing_fields"] += 1
        else:
            retained.append(rec)
    return retained


def build_corpus(
    source: Iterable[str],
    cutoff_year: int = DEFAULT_CUTOFF_YEAR,
    counters: DropCounters | None = None,
) -> tuple[Corpus, DropCounters]:
    """Full publication cleaning chain: load, dedup, filter, index."""
    counters = counters if counters is not None else DropCounters()
    records, venues, fields, counters = load_publications(source, counters)
    records = dedup_by_doi(records, counters)
    records = filter_analysis_corpus(records, cutoff_year, counters)
    records.sort(key=lambda rec: rec.id)
    return Corpus(records=records, venues=venues, fields=fields), counters


def load_retractions(
    source: Iterable[str],
    corpus_by_doi: dict[str, int],
    counters: DropCounters | None = None,
) -> list[RetractionRecord]:
    """Parse the retraction CSV (doi, retraction_date, original_pub_date).

    Null-DOI rows are dropped; duplicate DOIs collapse to the row with
    the latest retraction date; rows whose DOI resolves in the corpus
    get matched_pub_id set, the rest stay unmatched (and never seed the
    frontier). Rows are returned sorted by DOI.
    """
    counters = counters if counters is not None else DropCounters()
    best: dict[str, RetractionRecord] = {}
    reader = csv.DictReader(source)
    for row in reader:
        doi = normalize_doi(row.get("doi"))
        if doi is None:
            counters["retractions_null_doi"] += 1
            continue
        try:
            retraction_date = _parse_date(row.get("retraction_date"))
        except ValueError:
            retraction_date = None
        if retraction_date is None:
            counters["retractions_bad_date"] += 1
            continue
        try:
            original = _parse_date(row.get("original_pub_date"))
        except ValueError:
            original = None
        rec = RetractionRecord(
            doi=doi,
            retraction_date=retraction_date,
            original_pub_date=original,
            matched_pub_id=corpus_by_doi.get(doi),
        )
        cur = best.get(doi)
        if cur is None:
            best[doi] = rec
        else:
            counters["retractions_duplicate_doi"] += 1
            if _retraction_rank(rec) > _retraction_rank(cur):
                best[doi] = rec
    out = [best[doi] for doi in sorted(best)]
    counters["retractions_unmatched"] += sum(
        1 for rec in out if rec.matched_pub_id is None
    )
    return out


def _retraction_rank(rec: RetractionRecord) -> tuple[date, date]:
    return (rec.retraction_date, rec.original_pub_date or date.min)


def load_journal_if(
    source: Iterable[str],
    venues: Interner,
    counters: DropCounters | None = None,
) -> list[JournalIfRecord]:
    """Parse the journal IF CSV (venue, impact_factor) and link venues.

    Venue names resolve by normalized exact match against the corpus
    intern table; conflicting IF values for one venue keep the maximum;
    unresolved venues and negative IFs are dropped with counters.
    """
    counters = counters if counters is not None else DropCounters()
    by_venue: dict[int, float] = {}
    reader = csv.DictReader(source)
    for row in reader:
        raw_venue = row.get("venue")
        if not raw_venue or not raw_venue.strip():
            counters["journal_if_missing_venue"] += 1
            continue
        try:
            impact = float(row.get("impact_factor", ""))
        except (TypeError, ValueError):
            counters["journal_if_bad_value"] += 1
            continue
        if impact < 0 or impact != impact:  # negative or NaN
            counters["journal_if_negative"] += 1
            continue
        venue_id = venues.lookup(normalize_venue(raw_venue))
        if venue_id is None:
            counters["journal_if_unmatched_venue"] += 1
            continue
        if venue_id in by_venue:
            counters["journal_if_duplicate_venue"] += 1
            by_venue[venue_id] = max(by_venue[venue_id], impact)
        else:
            by_venue[venue_id] = impact
    return [
        JournalIfRecord(venue_id=venue_id, impact_factor=by_venue[venue_id])
        for venue_id in sorted(by_venue)
    ]


def corpus_doi_index(records: list[PublicationRecord]) -> dict[str, int]:
    """DOI -> paper id over deduplicated records (unique by invariant)."""
    return {rec.doi: rec.id for rec in records if rec.doi is not None}
