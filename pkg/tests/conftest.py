"""Shared builders for corpus/graph fixtures used across test modules."""

from __future__ import annotations

import json
from datetime import date

import pytest

from retraction_harm.graph import CitationGraph, build_graph
from retraction_harm.records import (
    Corpus,
    Interner,
    PublicationRecord,
    normalize_label,
    normalize_venue,
)


def make_corpus(rows: list[dict]) -> Corpus:
    """Corpus from plain dicts; venue/field names are normalized and interned.

    Row keys: id, year, venue, fields, citation_count, reference_count,
    doi, pub_date (date). Venue defaults to "Venue A", fields to
    ("general",).
    """
    venues = Interner()
    fields = Interner()
    records = []
    for row in rows:
        venue = row.get("venue", "Venue A")
        venue_id = venues.intern(normalize_venue(venue)) if venue else None
        field_labels = row.get("fields", ("general",))
        records.append(
            PublicationRecord(
                id=row["id"],
                doi=row.get("doi"),
                title=row.get("title", f"paper {row['id']}"),
                year=row["year"],
                venue_id=venue_id,
                fields=frozenset(fields.intern(normalize_label(f)) for f in field_labels),
                citation_count=row.get("citation_count", 0),
                reference_count=row.get("reference_count", 0),
                pub_date=row.get("pub_date"),
            )
        )
    records.sort(key=lambda rec: rec.id)
    return Corpus(records=records, venues=venues, fields=fields)


def make_graph(corpus: Corpus, edges: list[tuple[int, int]]) -> CitationGraph:
    return build_graph(corpus.records, edges)


def pub_line(paper_id: int, year=2005, **overrides) -> str:
    """One publications.jsonl line with sensible defaults."""
    obj = {
        "id": paper_id,
        "doi": None,
        "title": f"paper {paper_id}",
        "year": year,
        "venue": "Venue A",
        "fields": ["General"],
        "citation_count": 0,
        "reference_count": 0,
        "pub_date": None,
    }
    obj.update(overrides)
    return json.dumps(obj)


@pytest.fixture
def chain_corpus() -> tuple[Corpus, CitationGraph]:
    """r <- a <- b <- c citation chain; r is id 1, published 2000."""
    corpus = make_corpus(
        [
            {"id": 1, "year": 2000, "doi": "10.1/r"},
            {"id": 2, "year": 2002},
            {"id": 3, "year": 2004},
            {"id": 4, "year": 2006},
        ]
    )
    graph = make_graph(corpus, [(2, 1), (3, 2), (4, 3)])
    return corpus, graph
