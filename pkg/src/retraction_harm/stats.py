"""Stratified quartile summaries of harm distributions.

Each analysis family groups harm values by a stratum key (field,
citation distance, impact-factor bin, pre/post retraction timing) and
reports (Q1, Q2, Q3) per year column. Quartiles use linear
interpolation between closest ranks; undefined harm entries never enter
a stratum; empty strata are omitted rather than emitted as zeros.
"""

from __future__ import annotations

import csv
import json
import re
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .frontier import FrontierLevel, PrePostSplit
from .harm import HarmTable, format_fraction_percent
from .records import Corpus

# Year columns: "total" is the all-years harm, Y1..Y10 the yearly ones.
COLUMNS = ("total",) + tuple(f"Y{k}" for k in range(1, 11))

IF_BIN_EDGES = (0.0, 3.0, 5.0, 10.0, 20.0)
IF_BIN_LABELS = ("0~3", "3~5", "5~10", "10~20", "20~inf")

TIMING_POST = "After Retraction"
TIMING_PRE = "Before Retraction"

ALL_FIELDS_ROW = "All"

_CELL_RE = re.compile(
    r"^\s*(-?\d+(?:\.\d+)?)\s*\(\s*(-?\d+(?:\.\d+)?)\s*~\s*(-?\d+(?:\.\d+)?)\s*\)\s*$"
)


@dataclass(frozen=True)
class QuartileSummary:
    """(Q1, Q2, Q3) and the number of defined observations behind them."""

    q1: float
    q2: float
    q3: float
    count: int


def quantiles(values: Iterable[float] | np.ndarray) -> QuartileSummary | None:
    """Interpolated quartiles of a multiset; None signals an empty stratum."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0:
        return None
    q1, q2, q3 = np.quantile(arr, (0.25, 0.5, 0.75))
    return QuartileSummary(float(q1), float(q2), float(q3), int(arr.size))


def if_bin_label(impact_factor: float) -> str:
    """Half-open IF bins: boundary values land in the upper bin."""
    if impact_factor < 0:
        raise ValueError(f"negative impact factor {impact_factor}")
    for edge, label in zip(reversed(IF_BIN_EDGES), reversed(IF_BIN_LABELS)):
        if impact_factor >= edge:
            return label
    raise AssertionError("unreachable")


def format_cell(summary: QuartileSummary) -> str:
    """Render "median (Q1~Q3)" in percent with two decimals."""
    return (
        f"{format_fraction_percent(summary.q2)} "
        f"({format_fraction_percent(summary.q1)}"
        f"~{format_fraction_percent(summary.q3)})"
    )


def parse_cell(cell: str) -> tuple[float, float, float]:
    """Inverse of `format_cell`: (q1, q2, q3) as fractions."""
    match = _CELL_RE.match(cell)
    if match is None:
        raise ValueError(f"unparseable cell {cell!r}")
    q2, q1, q3 = (float(g) / 100.0 for g in match.groups())
    return q1, q2, q3


@dataclass(frozen=True)
class TableRow:
    key: tuple  # one value per key column
    sort_key: tuple
    n_papers: int
    cells: dict[str, QuartileSummary]


@dataclass
class AnalysisTable:
    family: str
    key_columns: tuple[str, ...]
    rows: list[TableRow]

    def sorted_rows(self) -> list[TableRow]:
        return sorted(self.rows, key=lambda row: row.sort_key)

    def write_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as out:
            writer = csv.writer(out, lineterminator="\n")
            writer.writerow(
                list(self.key_columns)
                + ["n_papers", "year_column", "count", "q1", "q2", "q3", "cell"]
            )
            for row in self.sorted_rows():
                for column in COLUMNS:
                    summary = row.cells.get(column)
                    if summary is None:
                        continue
                    writer.writerow(
                        [str(v) for v in row.key]
                        + [
                            row.n_papers,
                            column,
                            summary.count,
                            repr(summary.q1),
                            repr(summary.q2),
                            repr(summary.q3),
                            format_cell(summary),
                        ]
                    )

    def write_json(self, path: str | Path) -> None:
        doc = {
            "family": self.family,
            "key_columns": list(self.key_columns),
            "columns": list(COLUMNS),
            "rows": [
                {
                    "key": {name: value for name, value in zip(self.key_columns, row.key)},
                    "n_papers": row.n_papers,
                    "cells": {
                        column: {
                            "count": s.count,
                            "q1": s.q1,
                            "q2": s.q2,
                            "q3": s.q3,
                            "cell": format_cell(s),
                        }
                        for column in COLUMNS
                        if (s := row.cells.get(column)) is not None
                    },
                }
                for row in self.sorted_rows()
            ],
        }
        with open(path, "w", encoding="utf-8") as out:
            json.dump(doc, out, indent=2, sort_keys=False)
            out.write("\n")


def _column_cells(values: np.ndarray) -> dict[str, QuartileSummary]:
    """Per-column quartiles over the defined entries of a (m, 11) block."""
    cells: dict[str, QuartileSummary] = {}
    for col, label in enumerate(COLUMNS):
        column = values[:, col]
        summary = quantiles(column[~np.isnan(column)])
        if summary is not None:
            cells[label] = summary
    return cells


def _member_ids(level: FrontierLevel) -> np.ndarray:
    return np.asarray(sorted(level.earliest_retraction), dtype=np.int64)


def field_analysis(
    table: HarmTable, level1: FrontierLevel, corpus: Corpus
) -> AnalysisTable:
    """Harm quartiles per field of study for direct citers.

    A paper with several fields contributes to each of its field rows;
    every paper contributes to the "All" row.
    """
    ids = _member_ids(level1)
    rows: list[TableRow] = []
    if ids.size:
        values = table.rows_for(ids)
        all_cells = _column_cells(values)
        if all_cells:
            rows.append(
                TableRow(
                    key=(ALL_FIELDS_ROW,),
                    sort_key=(0, ALL_FIELDS_ROW),
                    n_papers=int(ids.size),
                    cells=all_cells,
                )
            )
        by_field: dict[int, list[int]] = {}
        for row_idx, pid in enumerate(ids.tolist()):
            for field_id in corpus.record(pid).fields:
                by_field.setdefault(field_id, []).append(row_idx)
        for field_id, row_indices in by_field.items():
            label = corpus.fields.name(field_id)
            cells = _column_cells(values[row_indices])
            if cells:
                rows.append(
                    TableRow(
                        key=(label,),
                        sort_key=(1, label),
                        n_papers=len(row_indices),
                        cells=cells,
                    )
                )
    return AnalysisTable(family="field", key_columns=("field",), rows=rows)


def distance_analysis(
    table: HarmTable, levels: Sequence[FrontierLevel], family: str = "distance"
) -> AnalysisTable:
    """Harm quartiles per citation distance for one frontier variant."""
    rows: list[TableRow] = []
    for level in levels:
        ids = _member_ids(level)
        if ids.size == 0:
            continue
        cells = _column_cells(table.rows_for(ids))
        if cells:
            rows.append(
                TableRow(
                    key=(level.distance,),
                    sort_key=(level.distance,),
                    n_papers=int(ids.size),
                    cells=cells,
                )
            )
    return AnalysisTable(family=family, key_columns=("distance",), rows=rows)


def if_analysis(
    table: HarmTable,
    levels: Sequence[FrontierLevel],
    corpus: Corpus,
    if_by_venue: dict[int, float],
) -> AnalysisTable:
    """Harm quartiles per (distance, impact-factor bin).

    Papers whose venue has no linked impact factor are excluded from
    this analysis only.
    """
    rows: list[TableRow] = []
    for level in levels:
        ids = _member_ids(level)
        if ids.size == 0:
            continue
        values = table.rows_for(ids)
        by_bin: dict[int, list[int]] = {}
        for row_idx, pid in enumerate(ids.tolist()):
            impact = if_by_venue.get(corpus.record(pid).venue_id)
            if impact is None:
                continue
            bin_idx = IF_BIN_LABELS.index(if_bin_label(impact))
            by_bin.setdefault(bin_idx, []).append(row_idx)
        for bin_idx in sorted(by_bin):
            row_indices = by_bin[bin_idx]
            cells = _column_cells(values[row_indices])
            if cells:
                rows.append(
                    TableRow(
                        key=(level.distance, IF_BIN_LABELS[bin_idx]),
                        sort_key=(level.distance, bin_idx),
                        n_papers=len(row_indices),
                        cells=cells,
                    )
                )
    return AnalysisTable(family="if", key_columns=("distance", "if_bin"), rows=rows)


def prepost_analysis(
    table: HarmTable, splits: Sequence[PrePostSplit]
) -> AnalysisTable:
    """Harm quartiles per (distance, citation timing vs retraction)."""
    rows: list[TableRow] = []
    for split in splits:
        for timing, members in ((TIMING_POST, split.post), (TIMING_PRE, split.pre)):
            if not members:
                continue
            ids = np.asarray(sorted(members), dtype=np.int64)
            cells = _column_cells(table.rows_for(ids))
            if cells:
                rows.append(
                    TableRow(
                        key=(split.distance, timing),
                        sort_key=(split.distance, timing),
                        n_papers=int(ids.size),
                        cells=cells,
                    )
                )
    return AnalysisTable(
        family="prepost", key_columns=("distance", "timing"), rows=rows
    )
