"""Immutable citation graph over the cleaned corpus.

Adjacency is stored CSR-style (offset array + flat neighbor array) in
both directions, over node positions assigned by ascending paper id.
Construction drops dangling edges (either endpoint outside the retained
corpus), self-loops, and duplicate edges, and counts each kind, so the
result is deterministic for any edge input order.
"""

from __future__ import annotations

import csv
import hashlib
import json
import struct
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DataError
from .records import PublicationRecord

# Year-offset buckets: columns 0..10 hold k = year(citer) - year(cited),
# column 11 holds negative offsets, column 12 offsets beyond ten years.
N_OFFSETS = 11
NEG_BUCKET = 11
OVERFLOW_BUCKET = 12
N_BUCKETS = 13

_CACHE_MAGIC = b"RHCG"
_CACHE_VERSION = 2

_MAX_ID = np.iinfo(np.int64).max


@dataclass
class EdgeCounters:
    total: int = 0
    dangling: int = 0
    self_loops: int = 0
    duplicates: int = 0
    retained: int = 0

    def as_dict(self) -> dict[str, int]:
        return {
            "edges_total": self.total,
            "edges_dangling": self.dangling,
            "edges_self_loops": self.self_loops,
            "edges_duplicate": self.duplicates,
            "edges_retained": self.retained,
        }


class CitationGraph:
    """Bidirectional citation structure with id <-> position mapping."""

    def __init__(
        self,
        ids: np.ndarray,
        years: np.ndarray,
        fwd_indptr: np.ndarray,
        fwd_indices: np.ndarray,
        rev_indptr: np.ndarray,
        rev_indices: np.ndarray,
        counters: EdgeCounters | None = None,
    ) -> None:
        self.ids = ids
        self.years = years
        self.fwd_indptr = fwd_indptr
        self.fwd_indices = fwd_indices
        self.rev_indptr = rev_indptr
        self.rev_indices = rev_indices
        self.counters = counters if counters is not None else EdgeCounters()
        self._yearly: YearlyCitationIndex | None = None

    @property
    def node_count(self) -> int:
        return int(self.ids.size)

    @property
    def edge_count(self) -> int:
        return int(self.fwd_indices.size)

    def position(self, paper_id: int) -> int:
        pos = int(np.searchsorted(self.ids, paper_id))
        if pos >= self.ids.size or self.ids[pos] != paper_id:
            raise KeyError(f"paper id {paper_id} not in graph")
        return pos

    def positions(self, paper_ids: Iterable[int]) -> np.ndarray:
        arr = np.asarray(list(paper_ids), dtype=np.int64)
        pos = np.searchsorted(self.ids, arr)
        bad = (pos >= self.ids.size) | (self.ids[np.minimum(pos, self.ids.size - 1)] != arr)
        if bad.any():
            missing = arr[bad][0]
            raise KeyError(f"paper id {missing} not in graph")
        return pos

    def cited_by_pos(self, pos: int) -> np.ndarray:
        """Positions of papers cited by the paper at `pos` (forward)."""
        return self.fwd_indices[self.fwd_indptr[pos]:self.fwd_indptr[pos + 1]]

    def citers_of_pos(self, pos: int) -> np.ndarray:
        """Positions of papers citing the paper at `pos` (reverse)."""
        return self.rev_indices[self.rev_indptr[pos]:self.rev_indptr[pos + 1]]

    def cited_by(self, paper_id: int) -> list[int]:
        return self.ids[self.cited_by_pos(self.position(paper_id))].tolist()

    def citers_of(self, paper_id: int) -> list[int]:
        return self.ids[self.citers_of_pos(self.position(paper_id))].tolist()

    def in_degree(self, paper_id: int) -> int:
        pos = self.position(paper_id)
        return int(self.rev_indptr[pos + 1] - self.rev_indptr[pos])

    def yearly_index(self) -> "YearlyCitationIndex":
        if self._yearly is None:
            self._yearly = YearlyCitationIndex.from_graph(self)
        return self._yearly


class YearlyCitationIndex:
    """Per-paper incoming-citation counts bucketed by year offset.

    Offset k is the citing paper's year minus the cited paper's year;
    k in 0..10 lands in its own column, negative offsets and offsets
    beyond 10 go to the two outer buckets. Bucket sums equal in-degree.
    """

    def __init__(self, ids: np.ndarray, counts: np.ndarray) -> None:
        self.ids = ids
        self.counts = counts  # shape (n, N_BUCKETS), int64

    @classmethod
    def from_graph(cls, graph: CitationGraph) -> "YearlyCitationIndex":
        n = graph.node_count
        counts = np.zeros((n, N_BUCKETS), dtype=np.int64)
        if graph.edge_count:
            # One flat pass over reverse adjacency: row r of rev_indices
            # lists citers of paper r.
            cited_pos = np.repeat(
                np.arange(n, dtype=np.int64), np.diff(graph.rev_indptr)
            )
            citing_pos = graph.rev_indices
            offsets = graph.years[citing_pos].astype(np.int64) - graph.years[
                cited_pos
            ].astype(np.int64)
            buckets = np.where(
                offsets < 0,
                NEG_BUCKET,
                np.where(offsets > N_OFFSETS - 1, OVERFLOW_BUCKET, offsets),
            )
            np.add.at(counts, (cited_pos, buckets), 1)
        return cls(graph.ids, counts)

    def row_pos(self, pos: int) -> np.ndarray:
        return self.counts[pos]

    def row(self, paper_id: int) -> np.ndarray:
        pos = int(np.searchsorted(self.ids, paper_id))
        if pos >= self.ids.size or self.ids[pos] != paper_id:
            raise KeyError(f"paper id {paper_id} not in graph")
        return self.counts[pos]

    def offset_count(self, paper_id: int, k: int) -> int:
        if not 0 <= k <= N_OFFSETS - 1:
            raise ValueError(f"offset {k} outside 0..{N_OFFSETS - 1}")
        return int(self.row(paper_id)[k])


def yearly_citations(graph: CitationGraph, paper_id: int) -> np.ndarray:
    """Counts of incoming citations by year offset for one paper.

    Returns the 13-bucket row (offsets 0..10, negative, overflow);
    unknown ids raise KeyError.
    """
    return graph.yearly_index().row(paper_id)


def _clean_pairs(
    citing: np.ndarray, cited: np.ndarray, ids: np.ndarray, counters: EdgeCounters
) -> tuple[np.ndarray, np.ndarray]:
    counters.total += int(citing.size)
    n = ids.size
    if n == 0:
        counters.dangling += int(citing.size)
        empty = np.empty(0, dtype=np.int64)
        return empty, empty
    cpos = np.searchsorted(ids, citing)
    dpos = np.searchsorted(ids, cited)
    ok = (
        (cpos < n)
        & (dpos < n)
        & (ids[np.minimum(cpos, n - 1)] == citing)
        & (ids[np.minimum(dpos, n - 1)] == cited)
    )
    counters.dangling += int((~ok).sum())
    cpos, dpos = cpos[ok], dpos[ok]
    loops = cpos == dpos
    counters.self_loops += int(loops.sum())
    return cpos[~loops], dpos[~loops]


def build_graph(
    records: list[PublicationRecord],
    edges: Iterable[tuple[int, int]],
    chunk_size: int = 1 << 20,
) -> CitationGraph:
    """Materialize the citation graph from cleaned records and raw edges.

    Edges with either endpoint outside the retained corpus are dropped
    and counted, as are self-loops and duplicates. Adjacency lists come
    out sorted, so any edge input order yields an identical graph.
    """
    ids = np.asarray([rec.id for rec in records], dtype=np.int64)
    if ids.size and np.any(np.diff(ids) <= 0):
        order = np.argsort(ids, kind="stable")
        ids = ids[order]
        records = [records[i] for i in order]
    years = np.asarray([rec.year for rec in records], dtype=np.int32)

    counters = EdgeCounters()
    src_parts: list[np.ndarray] = []
    dst_parts: list[np.ndarray] = []
    buf_src: list[int] = []
    buf_dst: list[int] = []

    def flush() -> None:
        if buf_src:
            cpos, dpos = _clean_pairs(
                np.asarray(buf_src, dtype=np.int64),
                np.asarray(buf_dst, dtype=np.int64),
                ids,
                counters,
            )
            src_parts.append(cpos)
            dst_parts.append(dpos)
            buf_src.clear()
            buf_dst.clear()

    for citing, cited in edges:
        if citing < 0 or cited < 0 or citing > _MAX_ID or cited > _MAX_ID:
            raise DataError(f"edge id out of range: ({citing}, {cited})")
        buf_src.append(citing)
        buf_dst.append(cited)
        if len(buf_src) >= chunk_size:
            flush()
    flush()

    if src_parts:
        src = np.concatenate(src_parts)
        dst = np.concatenate(dst_parts)
        # Sort by (src, dst) then drop duplicate pairs.
        order = np.lexsort((dst, src))
        src, dst = src[order], dst[order]
        if src.size:
            keep = np.empty(src.size, dtype=bool)
            keep[0] = True
            np.not_equal(src[1:], src[:-1], out=keep[1:])
            keep[1:] |= dst[1:] != dst[:-1]
            counters.duplicates = int((~keep).sum())
            src, dst = src[keep], dst[keep]
    else:
        src = np.empty(0, dtype=np.int64)
        dst = np.empty(0, dtype=np.int64)

    counters.retained = int(src.size)
    n = ids.size
    fwd_indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(fwd_indptr, src + 1, 1)
    np.cumsum(fwd_indptr, out=fwd_indptr)
    fwd_indices = dst.copy()

    rev_order = np.lexsort((src, dst))
    rev_indptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(rev_indptr, dst + 1, 1)
    np.cumsum(rev_indptr, out=rev_indptr)
    rev_indices = src[rev_order]

    return CitationGraph(
        ids, years, fwd_indptr, fwd_indices, rev_indptr, rev_indices, counters
    )


def read_edge_file(path: str | Path) -> Iterator[tuple[int, int]]:
    """Stream (citing_id, cited_id) pairs from a CSV or JSONL edge list."""
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as handle:
            if path.suffix in (".jsonl", ".json"):
                for lineno, line in enumerate(handle, start=1):
                    line = line.strip()
                    if not line:
                        continue
                    try:
                        obj = json.loads(line)
                        yield int(obj["citing_id"]), int(obj["cited_id"])
                    except (ValueError, KeyError, TypeError) as exc:
                        raise DataError(
                            f"{path}:{lineno}: bad edge record ({exc})"
                        ) from exc
            else:
                reader = csv.reader(handle)
                header = next(reader, None)
                if header is not None and _looks_like_edge(header):
                    yield int(header[0]), int(header[1])
                for lineno, row in enumerate(reader, start=2):
                    if not row:
                        continue
                    try:
                        yield int(row[0]), int(row[1])
                    except (ValueError, IndexError) as exc:
                        raise DataError(
                            f"{path}:{lineno}: bad edge row {row!r}"
                        ) from exc
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc


def _looks_like_edge(row: list[str]) -> bool:
    try:
        int(row[0]), int(row[1])
    except (ValueError, IndexError):
        return False
    return True


# ---------------------------------------------------------------------------
# Binary cache: little-endian header + fixed-width arrays. The cache is
# keyed on the run-manifest hash; a mismatch invalidates it.
# ---------------------------------------------------------------------------

_HEADER = struct.Struct("<4sI32sQQQ")  # magic, version, hash, n, fwd_nnz, rev_nnz
_COUNTERS = struct.Struct("<QQQQQ")


def save_graph_cache(graph: CitationGraph, path: str | Path, manifest_hash: bytes) -> None:
    if len(manifest_hash) != 32:
        raise ValueError("manifest hash must be 32 bytes (sha256)")
    with open(path, "wb") as out:
        out.write(
            _HEADER.pack(
                _CACHE_MAGIC,
                _CACHE_VERSION,
                manifest_hash,
                graph.node_count,
                graph.fwd_indices.size,
                graph.rev_indices.size,
            )
        )
        c = graph.counters
        out.write(
            _COUNTERS.pack(c.total, c.dangling, c.self_loops, c.duplicates, c.retained)
        )
        graph.ids.astype("<i8").tofile(out)
        graph.years.astype("<i4").tofile(out)
        graph.fwd_indptr.astype("<i8").tofile(out)
        graph.fwd_indices.astype("<i8").tofile(out)
        graph.rev_indptr.astype("<i8").tofile(out)
        graph.rev_indices.astype("<i8").tofile(out)


def load_graph_cache(path: str | Path, manifest_hash: bytes) -> CitationGraph | None:
    """Load a cached graph; returns None when missing or invalidated."""
    path = Path(path)
    if not path.exists():
        return None
    with open(path, "rb") as handle:
        head = handle.read(_HEADER.size)
        if len(head) != _HEADER.size:
            return None
        magic, version, stored_hash, n, fwd_nnz, rev_nnz = _HEADER.unpack(head)
        if magic != _CACHE_MAGIC or version != _CACHE_VERSION:
            return None
        if stored_hash != manifest_hash:
            return None
        raw_counters = handle.read(_COUNTERS.size)
        if len(raw_counters) != _COUNTERS.size:
            return None
        counters = EdgeCounters(*_COUNTERS.unpack(raw_counters))
        try:
            ids = np.fromfile(handle, dtype="<i8", count=n)
            years = np.fromfile(handle, dtype="<i4", count=n)
            fwd_indptr = np.fromfile(handle, dtype="<i8", count=n + 1)
            fwd_indices = np.fromfile(handle, dtype="<i8", count=fwd_nnz)
            rev_indptr = np.fromfile(handle, dtype="<i8", count=n + 1)
            rev_indices = np.fromfile(handle, dtype="<i8", count=rev_nnz)
        except ValueError:
            return None
    if ids.size != n or fwd_indices.size != fwd_nnz or rev_indices.size != rev_nnz:
        return None
    return CitationGraph(
        ids.astype(np.int64),
        years.astype(np.int32),
        fwd_indptr.astype(np.int64),
        fwd_indices.astype(np.int64),
        rev_indptr.astype(np.int64),
        rev_indices.astype(np.int64),
        counters,
    )


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for block in iter(lambda: handle.read(1 << 20), b""):
            digest.update(block)
    return digest.hexdigest()
