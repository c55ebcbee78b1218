"""Seeded synthetic corpora in the exact input formats the pipeline ingests.

The generator produces a preferential-attachment citation graph over
yearly cohorts (papers only cite papers published no later than
themselves), retraction notices dated after the retracted paper's
publication, and a journal impact-factor table. It deliberately salts
the files with the messiness the cleaning rules exist for: duplicate
DOIs, pre-1900 and year-less records, missing venues or fields,
duplicate and self-loop edges, dangling endpoints, null-DOI and
duplicate retraction rows, unknown venues and a negative impact factor.

Everything derives from one seed; identical configs produce
byte-identical files.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError

FIELD_POOL = (
    "Biology", "Medicine", "Chemistry", "Physics", "Computer Science",
    "Environmental Science", "Materials Science", "Psychology", "Economics",
    "Engineering", "Mathematics", "Sociology", "Agricultural Science",
    "Geology", "Business", "History", "Education", "Political Science",
    "Philosophy", "Art", "Geography", "Linguistics", "Law",
)

_VENUE_WORDS = (
    "Synthetic", "Applied", "Theoretical", "Clinical", "Computational",
    "Experimental", "Quantitative", "Molecular", "Structural", "Cognitive",
)


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the generator; all derived content is seed-deterministic."""

    seed: int
    n_papers: int = 500
    n_venues: int = 12
    n_fields: int = 8
    year_range: tuple[int, int] = (1998, 2016)
    retraction_fraction: float = 0.04
    attachment_exponent: float = 1.0
    mean_out_degree: float = 5.0

    def validate(self) -> None:
        if self.n_papers <= 0 or self.n_venues <= 0 or self.n_fields <= 0:
            raise ConfigError("paper, venue, and field counts must be positive")
        if self.n_fields > len(FIELD_POOL):
            raise ConfigError(f"n_fields cannot exceed {len(FIELD_POOL)}")
        if not 0.0 <= self.retraction_fraction <= 1.0:
            raise ConfigError("retraction_fraction must lie in [0, 1]")
        if self.attachment_exponent < 0:
            raise ConfigError("attachment_exponent must be >= 0")
        if not self.mean_out_degree > 0:
            raise ConfigError("mean_out_degree must be positive")
        if self.mean_out_degree >= self.n_papers:
            raise ConfigError("mean_out_degree must be smaller than n_papers")
        lo, hi = self.year_range
        if lo > hi or lo < 10:
            raise ConfigError(f"bad year_range {self.year_range}")


@dataclass(frozen=True)
class SynthDataset:
    publications: Path
    citations: Path
    retractions: Path
    journal_if: Path
    manifest: Path


def _venue_display(base: str, variant: int) -> str:
    # Same normalized venue key under all variants.
    forms = (
        base,
        base.lower(),
        base.upper(),
        base.replace(" of ", " of: "),
        base + ",",
    )
    return forms[variant % len(forms)]


def _doi_display(doi: str, variant: int) -> str:
    forms = (
        doi,
        doi.upper(),
        "https://doi.org/" + doi,
        "doi:" + doi,
    )
    return forms[variant % len(forms)]


def generate(config: SynthConfig, out_dir: str | Path) -> SynthDataset:
    """Write the four input files plus a run manifest under `out_dir`."""
    config.validate()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(config.seed)

    venue_names = [
        f"Journal of {_VENUE_WORDS[i % len(_VENUE_WORDS)]} Studies {i}"
        for i in range(config.n_venues)
    ]
    field_names = list(FIELD_POOL[: config.n_fields])
    lo_year, hi_year = config.year_range

    n = config.n_papers
    ids = 101 + 7 * np.arange(n, dtype=np.int64)
    years = rng.integers(lo_year, hi_year + 1, size=n)
    order = np.lexsort((ids, years))  # generation order: by year then id
    ids, years = ids[order], years[order]

    venue_idx = rng.integers(0, config.n_venues, size=n)
    no_venue = rng.random(n) < 0.03
    n_fields_per = rng.integers(1, min(3, config.n_fields) + 1, size=n)
    has_doi = rng.random(n) >= 0.10
    has_date = rng.random(n) < 0.70
    months = rng.integers(1, 13, size=n)
    days = rng.integers(1, 29, size=n)

    fields_per_paper: list[list[str]] = []
    for i in range(n):
        picks = rng.choice(config.n_fields, size=n_fields_per[i], replace=False)
        fields_per_paper.append([field_names[j] for j in sorted(picks)])

    # --- citation edges: yearly cohorts with preferential attachment ----
    edge_src: list[np.ndarray] = []
    edge_dst: list[np.ndarray] = []
    in_degree = np.zeros(n, dtype=np.int64)
    year_values = np.unique(years)
    for year in year_values:
        cohort = np.nonzero(years == year)[0]
        n_candidates = int(np.searchsorted(years, year, side="left"))
        if n_candidates > 0:
            out_deg = rng.poisson(config.mean_out_degree, size=cohort.size)
            out_deg = np.minimum(out_deg, n_candidates)
            total = int(out_deg.sum())
            if total > 0:
                weights = (in_degree[:n_candidates] + 1.0) ** config.attachment_exponent
                weights /= weights.sum()
                cited = rng.choice(n_candidates, size=total, p=weights)
                citing = np.repeat(cohort, out_deg)
                edge_src.append(citing)
                edge_dst.append(cited)
                in_degree[:n_candidates] += np.bincount(cited, minlength=n_candidates)
        if cohort.size >= 2:
            k = max(1, cohort.size // 50) if rng.random() < 0.5 else 0
            if k:
                pairs = rng.choice(cohort.size, size=(k, 2), replace=True)
                keep = pairs[:, 0] != pairs[:, 1]
                if keep.any():
                    edge_src.append(cohort[pairs[keep, 0]])
                    edge_dst.append(cohort[pairs[keep, 1]])
                    np.add.at(in_degree, cohort[pairs[keep, 1]], 1)

    if edge_src:
        src_pos = np.concatenate(edge_src)
        dst_pos = np.concatenate(edge_dst)
    else:
        src_pos = np.empty(0, dtype=np.int64)
        dst_pos = np.empty(0, dtype=np.int64)

    citation_count = np.bincount(dst_pos, minlength=n)
    reference_count = np.bincount(src_pos, minlength=n)

    src_ids = ids[src_pos]
    dst_ids = ids[dst_pos]

    # Noise edges: duplicates, self-loops, dangling endpoints.
    n_edges = src_ids.size
    extra_src: list[int] = []
    extra_dst: list[int] = []
    if n_edges:
        dup_n = max(1, n_edges // 100)
        dup_pick = rng.integers(0, n_edges, size=dup_n)
        extra_src.extend(int(v) for v in src_ids[dup_pick])
        extra_dst.extend(int(v) for v in dst_ids[dup_pick])
        loop_n = max(1, n_edges // 200)
        loop_pick = rng.integers(0, n, size=loop_n)
        extra_src.extend(int(ids[i]) for i in loop_pick)
        extra_dst.extend(int(ids[i]) for i in loop_pick)
        ghost_n = max(1, n_edges // 200)
        ghost_pick = rng.integers(0, n, size=ghost_n)
        ghost_id = int(ids.max()) + 1000
        for i, pick in enumerate(ghost_pick):
            if i % 2 == 0:
                extra_src.append(ghost_id + i)
                extra_dst.append(int(ids[pick]))
            else:
                extra_src.append(int(ids[pick]))
                extra_dst.append(ghost_id + i)

    all_src = np.concatenate([src_ids, np.asarray(extra_src, dtype=np.int64)])
    all_dst = np.concatenate([dst_ids, np.asarray(extra_dst, dtype=np.int64)])
    shuffle = rng.permutation(all_src.size)
    all_src, all_dst = all_src[shuffle], all_dst[shuffle]

    # --- publication records ------------------------------------------
    records: list[dict] = []
    for i in range(n):
        rec: dict = {
            "id": int(ids[i]),
            "title": f"Synthetic finding {int(ids[i])}",
            "year": int(years[i]),
            "citation_count": int(citation_count[i]),
            "reference_count": int(reference_count[i]),
        }
        rec["doi"] = (
            _doi_display(f"10.{1000 + int(venue_idx[i])}/synth.{int(ids[i])}", i)
            if has_doi[i]
            else None
        )
        rec["venue"] = (
            None if no_venue[i] else _venue_display(venue_names[venue_idx[i]], i)
        )
        rec["fields"] = fields_per_paper[i]
        rec["pub_date"] = (
            f"{int(years[i]):04d}-{int(months[i]):02d}-{int(days[i]):02d}"
            if has_date[i]
            else None
        )
        records.append(rec)

    next_id = int(ids.max()) + 1
    specials: list[dict] = []

    def special(year, **overrides) -> dict:
        nonlocal next_id
        rec = {
            "id": next_id,
            "doi": None,
            "title": f"Special record {next_id}",
            "year": year,
            "venue": venue_names[0],
            "fields": [field_names[0]],
            "citation_count": int(rng.integers(0, 20)),
            "reference_count": int(rng.integers(0, 40)),
            "pub_date": None,
        }
        rec.update(overrides)
        next_id += 1
        return rec

    specials.append(special(1850))
    specials.append(special(1899))
    specials.append(special(None))
    specials.append(special(2005, venue=None))
    specials.append(special(2006, fields=[]))

    # Duplicate-DOI clones: loser by citation count, loser by reference
    # count, and a full tie resolved by the smaller id.
    doi_positions = np.nonzero(has_doi)[0]
    if doi_positions.size >= 3:
        picks = rng.choice(doi_positions.size, size=3, replace=False)
        for mode, pick in enumerate(doi_positions[picks]):
            base = records[int(pick)]
            clone = dict(base)
            clone["id"] = next_id
            next_id += 1
            clone["title"] = base["title"] + " (duplicate)"
            if mode == 0:
                clone["citation_count"] = max(0, base["citation_count"] - 1)
            elif mode == 1:
                clone["reference_count"] = max(0, base["reference_count"] - 1)
            # mode 2: exact tie, larger id loses
            specials.append(clone)

    records.extend(specials)
    emit_order = rng.permutation(len(records))

    pub_path = out_dir / "publications.jsonl"
    with open(pub_path, "w", encoding="utf-8", newline="\n") as out:
        for idx in emit_order:
            out.write(json.dumps(records[idx], sort_keys=True) + "\n")

    cite_path = out_dir / "citations.csv"
    with open(cite_path, "w", encoding="utf-8", newline="\n") as out:
        out.write("citing_id,cited_id\n")
        for a, b in zip(all_src.tolist(), all_dst.tolist()):
            out.write(f"{a},{b}\n")

    # --- retractions ----------------------------------------------------
    retr_path = out_dir / "retractions.csv"
    n_retracted = int(round(config.retraction_fraction * n))
    lines = ["doi,retraction_date,original_pub_date"]
    if n_retracted > 0:
        eligible = doi_positions
        n_retracted = min(n_retracted, eligible.size)
        # Bias retractions toward older papers so citation chains have
        # had time to grow to depth 6.
        age = (hi_year - years[eligible] + 1).astype(np.float64)
        weights = age**2 / (age**2).sum()
        chosen = np.sort(
            eligible[rng.choice(eligible.size, size=n_retracted, replace=False, p=weights)]
        )
        for i in chosen:
            doi = f"10.{1000 + int(venue_idx[i])}/synth.{int(ids[i])}"
            pub = np.datetime64(f"{int(years[i]):04d}-{int(months[i]):02d}-{int(days[i]):02d}")
            # At least a year later so the retraction also postdates the
            # mid-year sentinel used for records without a full date.
            retracted_on = pub + np.timedelta64(int(rng.integers(366, 3200)), "D")
            lines.append(f"{doi},{retracted_on},{pub}")
        # noise: duplicate doi (later date wins), null doi, unknown doi
        first = lines[1].split(",")
        later = np.datetime64(first[1]) + np.timedelta64(400, "D")
        lines.append(f"{first[0]},{later},{first[2]}")
        lines.append(",2015-05-05,")
        lines.append("10.9999/unknown.1,2014-03-03,2010-01-01")
    with open(retr_path, "w", encoding="utf-8", newline="\n") as out:
        out.write("\n".join(lines) + "\n")

    # --- journal impact factors -----------------------------------------
    if_path = out_dir / "journal_if.csv"
    lines = ["venue,impact_factor"]
    impact = np.round(np.exp(rng.normal(1.0, 1.0, size=config.n_venues)), 2)
    has_if = rng.random(config.n_venues) < 0.85
    for v in range(config.n_venues):
        if has_if[v]:
            lines.append(f"{_venue_display(venue_names[v], v + 1)},{impact[v]:.2f}")
    if has_if.any():
        v0 = int(np.nonzero(has_if)[0][0])
        lines.append(f"{venue_names[v0]},{impact[v0] - 0.5:.2f}")  # duplicate, lower
    lines.append("Journal of Nowhere Studies 999,4.00")
    lines.append(f"{venue_names[0]},-1.00")
    with open(if_path, "w", encoding="utf-8", newline="\n") as out:
        out.write("\n".join(lines) + "\n")

    manifest_path = out_dir / "manifest.json"
    manifest = {
        "publications": "publications.jsonl",
        "citations": "citations.csv",
        "retractions": "retractions.csv",
        "journal_if": "journal_if.csv",
        "cutoff_year": 2013,
        "synth_seed": config.seed,
    }
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as out:
        json.dump(manifest, out, indent=2, sort_keys=True)
        out.write("\n")

    return SynthDataset(
        publications=pub_path,
        citations=cite_path,
        retractions=retr_path,
        journal_if=if_path,
        manifest=manifest_path,
    )
