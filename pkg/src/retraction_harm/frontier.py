"""Citation-distance sets seeded by retracted papers.

Level 1 holds direct citers of retracted papers; level n+1 holds the
citers of level n. A paper may recur across levels (the duplicate-
preserving variant); `dedup_frontiers` keeps each paper only at its
minimal distance. Every member carries the earliest retraction date
among the retracted papers it reaches through the chain, which drives
the pre/post-retraction split.
"""

from __future__ import annotations

import csv
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from datetime import date
from pathlib import Path

import numpy as np

from .graph import CitationGraph
from .records import Corpus

MAX_DISTANCE = 6


@dataclass(frozen=True)
class FrontierLevel:
    """Papers at one citation distance, with earliest reachable retraction."""

    distance: int
    earliest_retraction: dict[int, date]

    @property
    def members(self) -> frozenset[int]:
        return frozenset(self.earliest_retraction)

    def __len__(self) -> int:
        return len(self.earliest_retraction)

    def __contains__(self, paper_id: int) -> bool:
        return paper_id in self.earliest_retraction


@dataclass(frozen=True)
class PrePostSplit:
    """Members published before vs on-or-after their earliest retraction."""

    distance: int
    pre: frozenset[int]
    post: frozenset[int]


def _gather_citers(
    graph: CitationGraph, member_pos: np.ndarray, member_ord: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Min-merge earliest-retraction ordinals onto all citers of members."""
    starts = graph.rev_indptr[member_pos]
    lens = graph.rev_indptr[member_pos + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    cum0 = np.zeros(lens.size, dtype=np.int64)
    np.cumsum(lens[:-1], out=cum0[1:])
    flat = np.repeat(starts - cum0, lens) + np.arange(total, dtype=np.int64)
    citer_pos = graph.rev_indices[flat]
    citer_ord = np.repeat(member_ord, lens)

    order = np.argsort(citer_pos, kind="stable")
    citer_pos = citer_pos[order]
    citer_ord = citer_ord[order]
    boundary = np.empty(citer_pos.size, dtype=bool)
    boundary[0] = True
    np.not_equal(citer_pos[1:], citer_pos[:-1], out=boundary[1:])
    group_starts = np.nonzero(boundary)[0]
    min_ord = np.minimum.reduceat(citer_ord, group_starts)
    return citer_pos[group_starts], min_ord


def _to_level(
    graph: CitationGraph, distance: int, pos: np.ndarray, ords: np.ndarray
) -> FrontierLevel:
    ids = graph.ids[pos]
    earliest = {
        int(pid): date.fromordinal(int(o)) for pid, o in zip(ids.tolist(), ords.tolist())
    }
    return FrontierLevel(distance=distance, earliest_retraction=earliest)


def direct_citers(
    graph: CitationGraph, retraction_dates: Mapping[int, date]
) -> FrontierLevel:
    """Distance-1 level: papers citing any retracted seed.

    `retraction_dates` maps matched retracted paper ids to their
    retraction dates; each member's earliest_retraction is the minimum
    date over the seeds it cites. An empty seed set yields an empty level.
    """
    if not retraction_dates:
        return FrontierLevel(distance=1, earliest_retraction={})
    seed_ids = sorted(retraction_dates)
    seed_pos = graph.positions(seed_ids)
    seed_ord = np.asarray(
        [retraction_dates[i].toordinal() for i in seed_ids], dtype=np.int64
    )
    pos, ords = _gather_citers(graph, seed_pos, seed_ord)
    return _to_level(graph, 1, pos, ords)


def expand_frontier(graph: CitationGraph, previous: FrontierLevel) -> FrontierLevel:
    """Next level out: distinct citers of the previous level's members.

    Papers already seen at lower distances are *not* excluded here; the
    deduplicated view is derived afterwards by `dedup_frontiers`.
    """
    if previous.distance >= MAX_DISTANCE:
        raise ValueError(f"cannot expand beyond distance {MAX_DISTANCE}")
    if not previous.earliest_retraction:
        return FrontierLevel(distance=previous.distance + 1, earliest_retraction={})
    member_ids = sorted(previous.earliest_retraction)
    member_pos = graph.positions(member_ids)
    member_ord = np.asarray(
        [previous.earliest_retraction[i].toordinal() for i in member_ids],
        dtype=np.int64,
    )
    pos, ords = _gather_citers(graph, member_pos, member_ord)
    return _to_level(graph, previous.distance + 1, pos, ords)


def compute_frontiers(
    graph: CitationGraph,
    retraction_dates: Mapping[int, date],
    max_distance: int = MAX_DISTANCE,
) -> list[FrontierLevel]:
    """Duplicate-preserving levels C1..C_max."""
    if not 1 <= max_distance <= MAX_DISTANCE:
        raise ValueError(f"max_distance must be in 1..{MAX_DISTANCE}")
    levels = [direct_citers(graph, retraction_dates)]
    for _ in range(1, max_distance):
        levels.append(expand_frontier(graph, levels[-1]))
    return levels


def dedup_frontiers(levels: Sequence[FrontierLevel]) -> list[FrontierLevel]:
    """Assign each paper only its minimal citation distance.

    Level n keeps the members not present at any distance < n; their
    earliest_retraction entries carry over unchanged.
    """
    seen: set[int] = set()
    out: list[FrontierLevel] = []
    for level in levels:
        kept = {
            pid: d for pid, d in level.earliest_retraction.items() if pid not in seen
        }
        seen.update(kept)
        out.append(FrontierLevel(distance=level.distance, earliest_retraction=kept))
    return out


def classify_pre_post(
    level: FrontierLevel, corpus: Corpus, exclude_sentinel: bool = False
) -> PrePostSplit:
    """Partition a level by publication date vs earliest retraction date.

    A member published strictly before its earliest reachable retraction
    date is "pre"; publication on the retraction date counts as "post".
    Members without a full date use the mid-year sentinel by default;
    `exclude_sentinel` drops them from the partition instead.
    """
    pre: set[int] = set()
    post: set[int] = set()
    for pid, retraction in level.earliest_retraction.items():
        rec = corpus.record(pid)
        if exclude_sentinel and not rec.has_exact_date:
            continue
        if rec.effective_pub_date() < retraction:
            pre.add(pid)
        else:
            post.add(pid)
    return PrePostSplit(distance=level.distance, pre=frozenset(pre), post=frozenset(post))


def write_frontier_csv(
    path: str | Path,
    repeats: Sequence[FrontierLevel],
    dedup: Sequence[FrontierLevel] | None,
) -> None:
    """Export levels as CSV: distance, paper_id, earliest date, dedup flag."""
    with open(path, "w", newline="", encoding="utf-8") as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["distance", "paper_id", "earliest_retraction_date", "dedup_flag"])
        for flag, variant in ((0, repeats), (1, dedup or [])):
            for level in variant:
                for pid in sorted(level.earliest_retraction):
                    writer.writerow(
                        [
                            level.distance,
                            pid,
                            level.earliest_retraction[pid].isoformat(),
                            flag,
                        ]
                    )


def read_frontier_csv(
    path: str | Path,
) -> tuple[list[FrontierLevel], list[FrontierLevel]]:
    """Inverse of `write_frontier_csv`, rebuilding both variants."""
    by_key: dict[tuple[int, int], dict[int, date]] = {}
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        for row in reader:
            key = (int(row["dedup_flag"]), int(row["distance"]))
            by_key.setdefault(key, {})[int(row["paper_id"])] = date.fromisoformat(
                row["earliest_retraction_date"]
            )
    variants: list[list[FrontierLevel]] = [[], []]
    for flag in (0, 1):
        distances = sorted(d for f, d in by_key if f == flag)
        for d in distances:
            variants[flag].append(
                FrontierLevel(distance=d, earliest_retraction=by_key[(flag, d)])
            )
    return variants[0], variants[1]
