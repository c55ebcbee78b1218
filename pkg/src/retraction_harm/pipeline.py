"""Stage orchestration and on-disk artifacts.

Each CLI subcommand maps to one stage here. Stages read either the raw
inputs named by the run manifest or artifacts produced by earlier
stages, and write their own artifacts atomically (temp file + rename)
so a failed run never leaves half-written outputs. Nothing written here
contains timestamps or machine state: identical manifests and inputs
produce byte-identical output trees.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from datetime import date
from pathlib import Path

import numpy as np

from . import ingest
from .comparator import CohortCache
from .errors import DataError, VerificationError
from .frontier import (
    FrontierLevel,
    PrePostSplit,
    classify_pre_post,
    compute_frontiers,
    dedup_frontiers,
    read_frontier_csv,
    write_frontier_csv,
)
from .graph import (
    CitationGraph,
    build_graph,
    load_graph_cache,
    read_edge_file,
    save_graph_cache,
)
from .harm import HarmTable, read_harm_csv, write_harm_csv, N_OFFSETS
from .manifest import RunManifest
from .oracle import OracleRun
from .records import Corpus, Interner, PublicationRecord, RetractionRecord
from .stats import (
    AnalysisTable,
    distance_analysis,
    field_analysis,
    if_analysis,
    prepost_analysis,
)

TABLE_FAMILIES = ("field", "distance", "distance_dedup", "if", "prepost")

ARTIFACTS = {
    "corpus": "corpus.jsonl",
    "retractions": "retractions_clean.csv",
    "journal_if": "journal_if_clean.csv",
    "counters": "counters.json",
    "graph": "graph.bin",
    "frontiers": "frontiers.csv",
    "harm": "harm.csv",
    "run_manifest": "run_manifest.json",
    "verify_report": "verify_report.json",
}


def artifact(out_dir: Path, name: str) -> Path:
    return out_dir / ARTIFACTS[name]


@contextmanager
def atomic_path(path: Path):
    """Write to a sibling temp file, rename on success, unlink on error."""
    tmp = path.with_name(path.name + ".tmp")
    try:
        yield tmp
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


def _write_json(path: Path, payload) -> None:
    with atomic_path(path) as tmp:
        with open(tmp, "w", encoding="utf-8") as out:
            json.dump(payload, out, indent=2, sort_keys=True)
            out.write("\n")


def _merge_counters(out_dir: Path, new_values: dict) -> None:
    path = artifact(out_dir, "counters")
    current: dict = {}
    if path.exists():
        with open(path, encoding="utf-8") as handle:
            current = json.load(handle)
    current.update(new_values)
    _write_json(path, current)


# ---------------------------------------------------------------------------
# ingest
# ---------------------------------------------------------------------------


def stage_ingest(manifest: RunManifest, out_dir: Path):
    """Clean the three datasets and persist the canonical artifacts."""
    corpus, retractions, if_records, counters = _in_memory_ingest(manifest)

    with atomic_path(artifact(out_dir, "corpus")) as tmp:
        with open(tmp, "w", encoding="utf-8", newline="\n") as out:
            for rec in corpus.records:
                out.write(json.dumps(_record_to_obj(rec, corpus), sort_keys=True) + "\n")

    with atomic_path(artifact(out_dir, "retractions")) as tmp:
        with open(tmp, "w", encoding="utf-8", newline="") as out:
            writer = csv.writer(out, lineterminator="\n")
            writer.writerow(["doi", "retraction_date", "original_pub_date", "matched_pub_id"])
            for rec in retractions:
                writer.writerow(
                    [
                        rec.doi,
                        rec.retraction_date.isoformat(),
                        rec.original_pub_date.isoformat() if rec.original_pub_date else "",
                        rec.matched_pub_id if rec.matched_pub_id is not None else "",
                    ]
                )

    with atomic_path(artifact(out_dir, "journal_if")) as tmp:
        with open(tmp, "w", encoding="utf-8", newline="\n") as out:
            out.write("venue,impact_factor\n")
            rows = sorted(
                (corpus.venues.name(rec.venue_id), rec.impact_factor)
                for rec in if_records
            )
            for name, impact in rows:
                out.write(f"{name},{impact!r}\n")

    _merge_counters(out_dir, counters.as_dict())
    return corpus, retractions, if_records, counters


def _record_to_obj(rec: PublicationRecord, corpus: Corpus) -> dict:
    return {
        "id": rec.id,
        "doi": rec.doi,
        "title": rec.title,
        "year": rec.year,
        "venue": corpus.venues.name(rec.venue_id),
        "fields": sorted(corpus.fields.name(f) for f in rec.fields),
        "citation_count": rec.citation_count,
        "reference_count": rec.reference_count,
        "pub_date": rec.pub_date.isoformat() if rec.pub_date else None,
    }


def read_corpus_artifact(out_dir: Path) -> Corpus:
    path = artifact(out_dir, "corpus")
    if not path.exists():
        raise DataError(f"missing {path.name}; run the ingest stage first")
    raw = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            if line.strip():
                raw.append(json.loads(line))
    venues = Interner()
    fields = Interner()
    for name in sorted({obj["venue"] for obj in raw}):
        venues.intern(name)
    for name in sorted({f for obj in raw for f in obj["fields"]}):
        fields.intern(name)
    records = [
        PublicationRecord(
            id=obj["id"],
            doi=obj["doi"],
            title=obj["title"],
            year=obj["year"],
            venue_id=venues.lookup(obj["venue"]),
            fields=frozenset(fields.lookup(f) for f in obj["fields"]),
            citation_count=obj["citation_count"],
            reference_count=obj["reference_count"],
            pub_date=date.fromisoformat(obj["pub_date"]) if obj["pub_date"] else None,
        )
        for obj in raw
    ]
    records.sort(key=lambda rec: rec.id)
    return Corpus(records=records, venues=venues, fields=fields)


def read_retractions_artifact(out_dir: Path) -> list[RetractionRecord]:
    path = artifact(out_dir, "retractions")
    if not path.exists():
        raise DataError(f"missing {path.name}; run the ingest stage first")
    out = []
    with open(path, encoding="utf-8", newline="") as handle:
        for row in csv.DictReader(handle):
            out.append(
                RetractionRecord(
                    doi=row["doi"],
                    retraction_date=date.fromisoformat(row["retraction_date"]),
                    original_pub_date=(
                        date.fromisoformat(row["original_pub_date"])
                        if row["original_pub_date"]
                        else None
                    ),
                    matched_pub_id=int(row["matched_pub_id"]) if row["matched_pub_id"] else None,
                )
            )
    return out


def read_if_artifact(out_dir: Path, corpus: Corpus) -> dict[int, float]:
    path = artifact(out_dir, "journal_if")
    if not path.exists():
        raise DataError(f"missing {path.name}; run the ingest stage first")
    out: dict[int, float] = {}
    with open(path, encoding="utf-8") as handle:
        handle.readline()
        for line in handle:
            line = line.rstrip("\n")
            if not line:
                continue
            name, _, value = line.rpartition(",")
            venue_id = corpus.venues.lookup(name)
            if venue_id is not None:
                out[venue_id] = float(value)
    return out


def if_by_venue_map(corpus: Corpus, if_records) -> dict[int, float]:
    return {rec.venue_id: rec.impact_factor for rec in if_records}


# ---------------------------------------------------------------------------
# graph build
# ---------------------------------------------------------------------------


def stage_build(manifest: RunManifest, out_dir: Path, corpus: Corpus) -> CitationGraph:
    """Build the citation graph, or reuse a cache keyed on the manifest."""
    digest = manifest.digest()
    cache_path = artifact(out_dir, "graph")
    graph = load_graph_cache(cache_path, digest)
    if graph is None:
        graph = build_graph(corpus.records, read_edge_file(manifest.citations))
        with atomic_path(cache_path) as tmp:
            save_graph_cache(graph, tmp, digest)
    _merge_counters(out_dir, graph.counters.as_dict())
    return graph


# ---------------------------------------------------------------------------
# frontiers and harm
# ---------------------------------------------------------------------------


def retraction_seeds(retractions: list[RetractionRecord]) -> dict[int, date]:
    return {
        rec.matched_pub_id: rec.retraction_date
        for rec in retractions
        if rec.matched_pub_id is not None
    }


def stage_frontiers(
    manifest: RunManifest,
    out_dir: Path,
    graph: CitationGraph,
    retractions: list[RetractionRecord],
) -> tuple[list[FrontierLevel], list[FrontierLevel]]:
    repeats = compute_frontiers(graph, retraction_seeds(retractions), manifest.max_distance)
    dedup = dedup_frontiers(repeats)
    with atomic_path(artifact(out_dir, "frontiers")) as tmp:
        write_frontier_csv(tmp, repeats, dedup)
    return repeats, dedup


def load_frontiers_artifact(out_dir: Path) -> tuple[list[FrontierLevel], list[FrontierLevel]]:
    path = artifact(out_dir, "frontiers")
    if not path.exists():
        raise DataError(f"missing {path.name}; run the frontiers stage first")
    return read_frontier_csv(path)


def stage_harm(
    manifest: RunManifest,
    out_dir: Path,
    corpus: Corpus,
    graph: CitationGraph,
    repeats: list[FrontierLevel],
    dedup: list[FrontierLevel],
) -> HarmTable:
    """Harm vectors for every frontier member, written per level row."""
    from .harm import compute_harm_table

    year_index = graph.yearly_index()
    cohorts = CohortCache(corpus, year_index, exclude_self=manifest.exclude_self)
    union: set[int] = set()
    for level in repeats:
        union.update(level.earliest_retraction)
    table = compute_harm_table(corpus, year_index, cohorts, union)

    rows = []
    for flag, variant in ((0, repeats), (1, dedup)):
        for level in variant:
            split = classify_pre_post(level, corpus)
            for pid in sorted(level.earliest_retraction):
                prepost = "pre" if pid in split.pre else "post"
                rows.append((pid, level.distance, flag, prepost, table.vector(pid)))
    with atomic_path(artifact(out_dir, "harm")) as tmp:
        write_harm_csv(tmp, rows)
    return table


def load_harm_artifact(out_dir: Path) -> HarmTable:
    path = artifact(out_dir, "harm")
    if not path.exists():
        raise DataError(f"missing {path.name}; run the harm stage first")
    rows = read_harm_csv(path)
    by_id: dict[int, list] = {}
    for pid, _, _, _, vec in rows:
        if pid not in by_id:
            by_id[pid] = [vec.h0, *vec.yearly]
    ids = np.asarray(sorted(by_id), dtype=np.int64)
    values = np.full((ids.size, N_OFFSETS), np.nan, dtype=np.float64)
    for row_idx, pid in enumerate(ids.tolist()):
        for col, value in enumerate(by_id[pid]):
            if value is not None:
                values[row_idx, col] = value
    return HarmTable(ids, values)


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------


def stage_stats(
    manifest: RunManifest,
    out_dir: Path,
    corpus: Corpus,
    repeats: list[FrontierLevel],
    dedup: list[FrontierLevel],
    table: HarmTable,
    if_by_venue: dict[int, float],
) -> dict[str, AnalysisTable]:
    """Emit the five analysis families gated by dedup_mode."""
    splits = [classify_pre_post(level, corpus) for level in repeats]

    jobs: dict[str, callable] = {
        "field": lambda: field_analysis(table, repeats[0], corpus),
        "if": lambda: if_analysis(table, repeats, corpus, if_by_venue),
        "prepost": lambda: prepost_analysis(table, splits),
    }
    if manifest.dedup_mode in ("both", "repeats-only"):
        jobs["distance"] = lambda: distance_analysis(table, repeats, "distance")
    if manifest.dedup_mode in ("both", "dedup-only"):
        jobs["distance_dedup"] = lambda: distance_analysis(table, dedup, "distance_dedup")

    tables: dict[str, AnalysisTable] = {}
    if manifest.threads > 1:
        with ThreadPoolExecutor(max_workers=manifest.threads) as pool:
            futures = {name: pool.submit(job) for name, job in jobs.items()}
            tables = {name: future.result() for name, future in futures.items()}
    else:
        tables = {name: job() for name, job in jobs.items()}

    for family in TABLE_FAMILIES:
        if family not in tables:
            continue
        analysis = tables[family]
        with atomic_path(out_dir / f"{family}.csv") as tmp:
            analysis.write_csv(tmp)
        with atomic_path(out_dir / f"{family}.json") as tmp:
            analysis.write_json(tmp)

    _write_run_manifest(manifest, out_dir)
    return tables


def _write_run_manifest(manifest: RunManifest, out_dir: Path) -> None:
    counters_path = artifact(out_dir, "counters")
    counters: dict = {}
    if counters_path.exists():
        with open(counters_path, encoding="utf-8") as handle:
            counters = json.load(handle)
    payload = {
        "config": manifest.config_dict(),
        "input_hashes": manifest.input_hashes,
        "drop_counters": counters,
    }
    _write_json(artifact(out_dir, "run_manifest"), payload)


# ---------------------------------------------------------------------------
# full pipeline and verification
# ---------------------------------------------------------------------------


def run_all(manifest: RunManifest, out_dir: Path) -> dict:
    """ingest -> build -> frontiers -> harm -> stats, all in memory."""
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus, retractions, if_records, _ = stage_ingest(manifest, out_dir)
    graph = stage_build(manifest, out_dir, corpus)
    repeats, dedup = stage_frontiers(manifest, out_dir, graph, retractions)
    table = stage_harm(manifest, out_dir, corpus, graph, repeats, dedup)
    tables = stage_stats(
        manifest, out_dir, corpus, repeats, dedup, table, if_by_venue_map(corpus, if_records)
    )
    return {
        "papers": len(corpus),
        "edges": graph.edge_count,
        "seeds": len(retraction_seeds(retractions)),
        "frontier_sizes": [len(level) for level in repeats],
        "frontier_sizes_dedup": [len(level) for level in dedup],
        "harm_vectors": len(table),
        "tables": {name: len(tables[name].rows) for name in sorted(tables)},
    }


def _compare_levels(side: str, ours: list[FrontierLevel], theirs: list[dict]) -> list[str]:
    problems = []
    if len(ours) != len(theirs):
        return [f"{side}: level count {len(ours)} != {len(theirs)}"]
    for level, expected in zip(ours, theirs):
        got = level.earliest_retraction
        if set(got) != set(expected):
            missing = set(expected) - set(got)
            extra = set(got) - set(expected)
            problems.append(
                f"{side} C{level.distance}: membership differs"
                f" (missing {sorted(missing)[:5]}, extra {sorted(extra)[:5]})"
            )
            continue
        for pid, when in expected.items():
            if got[pid] != when:
                problems.append(
                    f"{side} C{level.distance}: earliest date for {pid}:"
                    f" {got[pid]} != {when}"
                )
                break
    return problems


def _compare_harm(table: HarmTable, expected: dict[int, list], tol: float) -> list[str]:
    problems = []
    if set(table.ids.tolist()) != set(expected):
        return ["harm: member id sets differ"]
    for pid, exp_vec in expected.items():
        got = table.row(pid)
        for col, exp in enumerate(exp_vec):
            value = got[col]
            if exp is None:
                if not np.isnan(value):
                    problems.append(f"harm {pid}[{col}]: expected undefined, got {value}")
                    return problems
            elif np.isnan(value) or abs(value - exp) > tol:
                problems.append(f"harm {pid}[{col}]: {value} != {exp}")
                return problems
    return problems


def _compare_tables(
    ours: dict[str, AnalysisTable], theirs: dict[str, list], tol: float
) -> list[str]:
    problems = []
    for family, expected_rows in theirs.items():
        if family not in ours:
            problems.append(f"table {family}: missing from pipeline output")
            continue
        rows = ours[family].sorted_rows()
        if len(rows) != len(expected_rows):
            problems.append(
                f"table {family}: {len(rows)} rows != {len(expected_rows)}"
            )
            continue
        for row, exp in zip(rows, expected_rows):
            if tuple(row.key) != tuple(exp["key"]):
                problems.append(f"table {family}: key {row.key} != {exp['key']}")
                break
            if row.n_papers != exp["n_papers"]:
                problems.append(
                    f"table {family} {row.key}: n_papers {row.n_papers}"
                    f" != {exp['n_papers']}"
                )
                break
            if set(row.cells) != set(exp["cells"]):
                problems.append(f"table {family} {row.key}: column sets differ")
                break
            bad = False
            for label, summary in row.cells.items():
                q1, q2, q3, count = exp["cells"][label]
                if summary.count != count:
                    problems.append(
                        f"table {family} {row.key} {label}: count"
                        f" {summary.count} != {count}"
                    )
                    bad = True
                    break
                if (
                    abs(summary.q1 - q1) > tol
                    or abs(summary.q2 - q2) > tol
                    or abs(summary.q3 - q3) > tol
                ):
                    problems.append(
                        f"table {family} {row.key} {label}: quartiles differ"
                    )
                    bad = True
                    break
            if bad:
                break
    return problems


def verify(manifest: RunManifest, out_dir: Path, tolerance: float = 1e-9) -> dict:
    """Run pipeline and oracle on the same inputs and compare everything.

    Raises VerificationError when any output differs; the JSON report is
    written either way.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus, retractions, if_records, _ = _in_memory_ingest(manifest)
    graph = build_graph(corpus.records, read_edge_file(manifest.citations))
    repeats = compute_frontiers(graph, retraction_seeds(retractions), manifest.max_distance)
    dedup = dedup_frontiers(repeats)
    year_index = graph.yearly_index()
    cohorts = CohortCache(corpus, year_index, exclude_self=manifest.exclude_self)
    union: set[int] = set()
    for level in repeats:
        union.update(level.earliest_retraction)
    from .harm import compute_harm_table

    table = compute_harm_table(corpus, year_index, cohorts, union)
    splits = [classify_pre_post(level, corpus) for level in repeats]
    tables = {
        "field": field_analysis(table, repeats[0], corpus),
        "distance": distance_analysis(table, repeats, "distance"),
        "distance_dedup": distance_analysis(table, dedup, "distance_dedup"),
        "if": if_analysis(table, repeats, corpus, if_by_venue_map(corpus, if_records)),
        "prepost": prepost_analysis(table, splits),
    }

    oracle = OracleRun(
        manifest.publications,
        manifest.citations,
        manifest.retractions,
        manifest.journal_if,
        cutoff_year=manifest.cutoff_year,
        max_distance=manifest.max_distance,
        exclude_self=manifest.exclude_self,
    )

    problems: list[str] = []
    problems += _compare_levels("repeats", repeats, oracle.levels_repeat)
    problems += _compare_levels("dedup", dedup, oracle.levels_dedup)
    problems += _compare_harm(table, oracle.harm, tolerance)
    problems += _compare_tables(tables, oracle.tables, tolerance)

    report = {
        "ok": not problems,
        "tolerance": tolerance,
        "checked": {
            "levels": len(repeats),
            "harm_vectors": len(table),
            "tables": sorted(tables),
        },
        "problems": problems,
    }
    _write_json(artifact(out_dir, "verify_report"), report)
    if problems:
        raise VerificationError(
            f"{len(problems)} mismatch(es) against the oracle; "
            f"see {artifact(out_dir, 'verify_report')}"
        )
    return report


def _in_memory_ingest(manifest: RunManifest):
    counters = ingest.DropCounters()
    corpus, counters = ingest.build_corpus(
        ingest.iter_jsonl(manifest.publications), manifest.cutoff_year, counters
    )
    doi_index = ingest.corpus_doi_index(corpus.records)
    with open(manifest.retractions, encoding="utf-8", newline="") as handle:
        retractions = ingest.load_retractions(handle, doi_index, counters)
    with open(manifest.journal_if, encoding="utf-8", newline="") as handle:
        if_records = ingest.load_journal_if(handle, corpus.venues, counters)
    return corpus, retractions, if_records, counters
