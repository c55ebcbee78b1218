"""Naive reference implementation used to check the pipeline.

Recomputes every pipeline output straight from the four input files by
direct definition: cohorts by scanning the whole corpus per paper,
frontier levels by re-scanning the full edge list per distance,
quantiles by an explicit sort. It deliberately shares no code with the
production modules (separate parsing, normalization, aggregation, and
formatting), so agreement between the two is evidence rather than
tautology. Intended for small corpora; everything is O(n^2)-ish.
"""

from __future__ import annotations

import csv
import json
import math
import unicodedata
from datetime import date
from pathlib import Path

_MIDYEAR = (7, 1)
_YEARLY_RANGE = range(1, 11)


def _norm_spaces(text: str) -> str:
    return " ".join(text.split())


def _norm_venue(raw: str) -> str:
    chars = []
    for ch in raw.casefold():
        cat = unicodedata.category(ch)
        chars.append(" " if cat[0] == "P" else ch)
    return _norm_spaces("".join(chars))


def _norm_field(raw: str) -> str:
    return _norm_spaces(raw.casefold())


def _norm_doi(raw):
    if raw is None:
        return None
    text = raw.strip().lower()
    prefixes = [
        "https://doi.org/",
        "http://doi.org/",
        "https://dx.doi.org/",
        "http://dx.doi.org/",
        "doi:",
    ]
    stripped = True
    while stripped:
        stripped = False
        for p in prefixes:
            if text.startswith(p):
                text = text[len(p):]
                stripped = True
    return text if text else None


def _parse_date(raw):
    if not raw or not raw.strip():
        return None
    try:
        return date.fromisoformat(raw.strip())
    except ValueError:
        return None


class OracleRun:
    """Brute-force recomputation of the whole analysis for one dataset."""

    def __init__(
        self,
        publications: str | Path,
        citations: str | Path,
        retractions: str | Path,
        journal_if: str | Path,
        cutoff_year: int = 2013,
        max_distance: int = 6,
        exclude_self: bool = True,
    ) -> None:
        self.cutoff_year = cutoff_year
        self.max_distance = max_distance
        self.exclude_self = exclude_self
        self._load_publications(Path(publications))
        self._load_edges(Path(citations))
        self._load_retractions(Path(retractions))
        self._load_journal_if(Path(journal_if))
        self._yearly_counts()
        self._frontiers()
        self._harm()
        self._tables()

    # ------------------------------------------------------------------
    # loading and cleaning, by direct restatement of the rules
    # ------------------------------------------------------------------

    def _load_publications(self, path: Path) -> None:
        raw = []
        seen = set()
        with open(path, encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                except ValueError:
                    continue
                if not isinstance(obj, dict):
                    continue
                pid = obj.get("id")
                if not isinstance(pid, int) or isinstance(pid, bool) or pid < 0:
                    continue
                year = obj.get("year")
                if not isinstance(year, int) or isinstance(year, bool):
                    continue
                if year < 1900 or pid in seen:
                    continue
                seen.add(pid)
                venue = obj.get("venue")
                fields = set()
                for label in obj.get("fields") or []:
                    if isinstance(label, str) and label.strip():
                        fields.add(_norm_field(label))
                pub_date = _parse_date(obj.get("pub_date"))
                if pub_date is not None and pub_date.year != year:
                    pub_date = None
                raw.append(
                    {
                        "id": pid,
                        "doi": _norm_doi(obj.get("doi")),
                        "year": year,
                        "venue": _norm_venue(venue) if isinstance(venue, str) and venue.strip() else None,
                        "fields": fields,
                        "citation_count": max(0, int(obj.get("citation_count") or 0)),
                        "reference_count": max(0, int(obj.get("reference_count") or 0)),
                        "pub_date": pub_date,
                    }
                )

        self.known_venues = {r["venue"] for r in raw if r["venue"]}

        # DOI dedup: compare every pair the slow way.
        by_doi: dict[str, list[dict]] = {}
        for rec in raw:
            if rec["doi"] is not None:
                by_doi.setdefault(rec["doi"], []).append(rec)
        losers = set()
        for group in by_doi.values():
            if len(group) < 2:
                continue
            winner = group[0]
            for cand in group[1:]:
                if cand["citation_count"] > winner["citation_count"]:
                    winner = cand
                elif cand["citation_count"] == winner["citation_count"]:
                    if cand["reference_count"] > winner["reference_count"]:
                        winner = cand
                    elif (
                        cand["reference_count"] == winner["reference_count"]
                        and cand["id"] < winner["id"]
                    ):
                        winner = cand
            for cand in group:
                if cand is not winner:
                    losers.add(cand["id"])

        self.corpus: dict[int, dict] = {}
        for rec in raw:
            if rec["id"] in losers:
                continue
            if rec["year"] > self.cutoff_year:
                continue
            if rec["venue"] is None or not rec["fields"]:
                continue
            self.corpus[rec["id"]] = rec

    def _load_edges(self, path: Path) -> None:
        pairs = set()
        with open(path, encoding="utf-8") as handle:
            if path.suffix in (".jsonl", ".json"):
                rows = (
                    (json.loads(line)["citing_id"], json.loads(line)["cited_id"])
                    for line in handle
                    if line.strip()
                )
                for citing, cited in rows:
                    pairs.add((int(citing), int(cited)))
            else:
                reader = csv.reader(handle)
                for row in reader:
                    if not row or not row[0].strip().lstrip("-").isdigit():
                        continue
                    pairs.add((int(row[0]), int(row[1])))
        self.edges = sorted(
            (a, b)
            for a, b in pairs
            if a != b and a in self.corpus and b in self.corpus
        )

    def _load_retractions(self, path: Path) -> None:
        best: dict[str, tuple] = {}
        with open(path, encoding="utf-8") as handle:
            for row in csv.DictReader(handle):
                doi = _norm_doi(row.get("doi"))
                if doi is None:
                    continue
                rdate = _parse_date(row.get("retraction_date"))
                if rdate is None:
                    continue
                odate = _parse_date(row.get("original_pub_date"))
                rank = (rdate, odate or date.min)
                if doi not in best or rank > best[doi][0]:
                    best[doi] = (rank, rdate, odate)
        doi_to_id = {
            rec["doi"]: pid for pid, rec in self.corpus.items() if rec["doi"]
        }
        self.retraction_dates: dict[int, date] = {}
        self.retractions = {}
        for doi, (_, rdate, odate) in best.items():
            pid = doi_to_id.get(doi)
            self.retractions[doi] = {
                "retraction_date": rdate,
                "original_pub_date": odate,
                "matched_pub_id": pid,
            }
            if pid is not None:
                self.retraction_dates[pid] = rdate

    def _load_journal_if(self, path: Path) -> None:
        self.if_by_venue: dict[str, float] = {}
        with open(path, encoding="utf-8") as handle:
            for row in csv.DictReader(handle):
                venue = row.get("venue")
                if not venue or not venue.strip():
                    continue
                try:
                    value = float(row.get("impact_factor", ""))
                except ValueError:
                    continue
                if value < 0 or math.isnan(value):
                    continue
                key = _norm_venue(venue)
                if key not in self.known_venues:
                    continue
                if key in self.if_by_venue:
                    self.if_by_venue[key] = max(self.if_by_venue[key], value)
                else:
                    self.if_by_venue[key] = value

    # ------------------------------------------------------------------
    # derived quantities
    # ------------------------------------------------------------------

    def _yearly_counts(self) -> None:
        self.yearly: dict[int, dict[int, int]] = {pid: {} for pid in self.corpus}
        for citing, cited in self.edges:
            k = self.corpus[citing]["year"] - self.corpus[cited]["year"]
            bucket = self.yearly[cited]
            bucket[k] = bucket.get(k, 0) + 1

    def _effective_date(self, pid: int) -> date:
        rec = self.corpus[pid]
        if rec["pub_date"] is not None:
            return rec["pub_date"]
        return date(rec["year"], *_MIDYEAR)

    def _frontiers(self) -> None:
        self.levels_repeat: list[dict[int, date]] = []
        current = dict(self.retraction_dates)
        for _ in range(self.max_distance):
            nxt: dict[int, date] = {}
            for citing, cited in self.edges:
                if cited in current:
                    d = current[cited]
                    if citing not in nxt or d < nxt[citing]:
                        nxt[citing] = d
            self.levels_repeat.append(nxt)
            current = nxt

        self.levels_dedup: list[dict[int, date]] = []
        seen: set[int] = set()
        for level in self.levels_repeat:
            kept = {pid: d for pid, d in level.items() if pid not in seen}
            seen.update(kept)
            self.levels_dedup.append(kept)

        self.prepost: list[dict[str, set[int]]] = []
        for level in self.levels_repeat:
            pre, post = set(), set()
            for pid, rdate in level.items():
                if self._effective_date(pid) < rdate:
                    pre.add(pid)
                else:
                    post.add(pid)
            self.prepost.append({"pre": pre, "post": post})

    def _cohort(self, pid: int) -> list[int]:
        me = self.corpus[pid]
        out = []
        for other_id, other in self.corpus.items():
            if self.exclude_self and other_id == pid:
                continue
            if other["venue"] != me["venue"]:
                continue
            if abs(other["year"] - me["year"]) > 1:
                continue
            if not (other["fields"] & me["fields"]):
                continue
            out.append(other_id)
        return out

    def _harm(self) -> None:
        members: set[int] = set()
        for level in self.levels_repeat:
            members.update(level)
        self.harm: dict[int, list] = {}
        for pid in sorted(members):
            cohort = self._cohort(pid)
            n = len(cohort)
            total = sum(self.corpus[d]["citation_count"] for d in cohort)
            vec = []
            if n > 0 and total > 0:
                vec.append(1.0 - self.corpus[pid]["citation_count"] / (total / n))
            else:
                vec.append(None)
            for k in _YEARLY_RANGE:
                cohort_k = sum(self.yearly[d].get(k, 0) for d in cohort)
                if n > 0 and cohort_k > 0:
                    own = self.yearly[pid].get(k, 0)
                    vec.append(1.0 - own / (cohort_k / n))
                else:
                    vec.append(None)
            self.harm[pid] = vec

    # ------------------------------------------------------------------
    # quartile tables
    # ------------------------------------------------------------------

    @staticmethod
    def _quartiles(values: list[float]):
        if not values:
            return None
        ordered = sorted(values)
        n = len(ordered)

        def at(p: float) -> float:
            pos = p * (n - 1)
            lo = math.floor(pos)
            hi = math.ceil(pos)
            frac = pos - lo
            return ordered[lo] + (ordered[hi] - ordered[lo]) * frac

        return (at(0.25), at(0.5), at(0.75), n)

    def _cells(self, ids) -> dict[str, tuple]:
        cells = {}
        for col in range(11):
            values = [
                self.harm[pid][col]
                for pid in ids
                if self.harm[pid][col] is not None
            ]
            q = self._quartiles(values)
            if q is not None:
                label = "total" if col == 0 else f"Y{col}"
                cells[label] = q
        return cells

    def _tables(self) -> None:
        tables: dict[str, list] = {}

        level1 = sorted(self.levels_repeat[0]) if self.levels_repeat else []
        field_rows = []
        if level1:
            cells = self._cells(level1)
            if cells:
                field_rows.append({"key": ("All",), "n_papers": len(level1), "cells": cells})
            by_field: dict[str, list[int]] = {}
            for pid in level1:
                for label in self.corpus[pid]["fields"]:
                    by_field.setdefault(label, []).append(pid)
            for label in sorted(by_field):
                cells = self._cells(by_field[label])
                if cells:
                    field_rows.append(
                        {"key": (label,), "n_papers": len(by_field[label]), "cells": cells}
                    )
        tables["field"] = field_rows

        for family, variant in (
            ("distance", self.levels_repeat),
            ("distance_dedup", self.levels_dedup),
        ):
            rows = []
            for dist, level in enumerate(variant, start=1):
                ids = sorted(level)
                if not ids:
                    continue
                cells = self._cells(ids)
                if cells:
                    rows.append({"key": (dist,), "n_papers": len(ids), "cells": cells})
            tables[family] = rows

        bins = ((0.0, "0~3"), (3.0, "3~5"), (5.0, "5~10"), (10.0, "10~20"), (20.0, "20~inf"))
        if_rows = []
        for dist, level in enumerate(self.levels_repeat, start=1):
            grouped: dict[int, list[int]] = {}
            for pid in sorted(level):
                impact = self.if_by_venue.get(self.corpus[pid]["venue"])
                if impact is None:
                    continue
                idx = 0
                for b, (edge, _) in enumerate(bins):
                    if impact >= edge:
                        idx = b
                grouped.setdefault(idx, []).append(pid)
            for idx in sorted(grouped):
                cells = self._cells(grouped[idx])
                if cells:
                    if_rows.append(
                        {
                            "key": (dist, bins[idx][1]),
                            "n_papers": len(grouped[idx]),
                            "cells": cells,
                        }
                    )
        tables["if"] = if_rows

        prepost_rows = []
        for dist, split in enumerate(self.prepost, start=1):
            for timing, key in (("After Retraction", "post"), ("Before Retraction", "pre")):
                ids = sorted(split[key])
                if not ids:
                    continue
                cells = self._cells(ids)
                if cells:
                    prepost_rows.append(
                        {"key": (dist, timing), "n_papers": len(ids), "cells": cells}
                    )
        tables["prepost"] = prepost_rows
        self.tables = tables

    # ------------------------------------------------------------------
    # emission in the same table format as the stats module
    # ------------------------------------------------------------------

    _KEY_COLUMNS = {
        "field": ("field",),
        "distance": ("distance",),
        "distance_dedup": ("distance",),
        "if": ("distance", "if_bin"),
        "prepost": ("distance", "timing"),
    }

    def write_tables(self, out_dir: str | Path) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        for family, rows in self.tables.items():
            path = out_dir / f"{family}.csv"
            with open(path, "w", newline="", encoding="utf-8") as out:
                writer = csv.writer(out, lineterminator="\n")
                writer.writerow(
                    list(self._KEY_COLUMNS[family])
                    + ["n_papers", "year_column", "count", "q1", "q2", "q3", "cell"]
                )
                for row in rows:
                    for col in ["total"] + [f"Y{k}" for k in _YEARLY_RANGE]:
                        if col not in row["cells"]:
                            continue
                        q1, q2, q3, count = row["cells"][col]
                        cell = (
                            f"{q2 * 100:.2f} ({q1 * 100:.2f}~{q3 * 100:.2f})"
                        )
                        writer.writerow(
                            [str(v) for v in row["key"]]
                            + [row["n_papers"], col, count, repr(q1), repr(q2), repr(q3), cell]
                        )
