"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest -s tests/test_acceptance.py` to see the per-criterion
lines; tolerances are pinned in the assertions.
"""

from __future__ import annotations

import json
import math
import os
import random
import subprocess
import sys
import time
from datetime import date
from pathlib import Path

import numpy as np
import pytest

from retraction_harm.cli import main
from retraction_harm.comparator import (
    ComparatorAggregate,
    ComparatorKeyIndex,
    aggregate,
    comparator_set,
)
from retraction_harm.frontier import (
    classify_pre_post,
    compute_frontiers,
    dedup_frontiers,
    direct_citers,
)
from retraction_harm.harm import harm_total, harm_vector, harm_yearly
from retraction_harm.manifest import load_manifest
from retraction_harm import pipeline
from retraction_harm.stats import if_bin_label, quantiles
from retraction_harm.synth import SynthConfig, generate

from conftest import make_corpus, make_graph


def report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"[ACCEPTANCE] {name}: {status}{suffix}")
    assert ok, f"{name} failed {suffix}"


def test_oracle_equivalence_20_seeds(tmp_path):
    """20 seeded 500-paper corpora: every output matches the brute-force
    oracle (counts exact, reals within 1e-9) in under two minutes."""
    start = time.monotonic()
    vectors_checked = 0
    for seed in range(1, 21):
        workdir = tmp_path / f"seed{seed}"
        dataset = generate(SynthConfig(seed=seed, n_papers=500), workdir / "data")
        manifest = load_manifest(dataset.manifest).with_hashes()
        result = pipeline.verify(manifest, workdir / "out", tolerance=1e-9)
        assert result["ok"], f"seed {seed}: {result['problems'][:3]}"
        vectors_checked += result["checked"]["harm_vectors"]
    elapsed = time.monotonic() - start
    report(
        "oracle-equivalence-20-seeds",
        elapsed < 120.0,
        f"{vectors_checked} harm vectors, {elapsed:.1f}s",
    )


def test_harm_identities():
    """Zero-citation paper with a positive cohort scores exactly 1.0,
    cohort-mean papers score 0.0, guard cases are undefined, never 0."""
    corpus = make_corpus(
        [
            # venue V: a zero-citation paper among cited twins
            {"id": 0, "year": 2000, "venue": "V", "fields": ("bio",), "citation_count": 0},
            {"id": 1, "year": 2000, "venue": "V", "fields": ("bio",), "citation_count": 6},
            {"id": 2, "year": 2000, "venue": "V", "fields": ("bio",), "citation_count": 6},
            # venue W: three identical papers, so each matches its cohort mean
            {"id": 4, "year": 2000, "venue": "W", "fields": ("bio",), "citation_count": 6},
            {"id": 5, "year": 2000, "venue": "W", "fields": ("bio",), "citation_count": 6},
            {"id": 6, "year": 2000, "venue": "W", "fields": ("bio",), "citation_count": 6},
            {"id": 9, "year": 2001},
        ]
    )
    graph = make_graph(corpus, [(9, 1), (9, 2), (9, 4), (9, 5), (9, 6)])
    year_index = graph.yearly_index()
    index = ComparatorKeyIndex(corpus)

    agg0 = aggregate(corpus, year_index, comparator_set(index, 0))
    vec0 = harm_vector(corpus.record(0), year_index, agg0)
    ok = vec0.h0 == 1.0 and vec0.yearly[0] == 1.0

    agg4 = aggregate(corpus, year_index, comparator_set(index, 4))
    vec4 = harm_vector(corpus.record(4), year_index, agg4)
    ok = ok and vec4.h0 == 0.0 and vec4.yearly[0] == 0.0

    empty = ComparatorAggregate.empty()
    ok = ok and harm_total(5, empty) is None and harm_total(0, empty) is None
    zero_year = ComparatorAggregate(n_d=3, total_citations=9, yearly_citations=(0,) * 10)
    ok = ok and harm_yearly(0, zero_year, 1) is None
    report("harm-identities", ok)


def test_scale_equivariance():
    """Scaling every citation count by m in {2, 10} moves no defined harm
    value by more than 1e-12."""
    rnd = random.Random(0)
    worst = 0.0
    for _ in range(500):
        own = rnd.randint(0, 80)
        n_d = rnd.randint(1, 40)
        total = rnd.randint(1, 400)
        year_sum = rnd.randint(1, 200)
        for m in (2, 10):
            agg = ComparatorAggregate(n_d, total, (year_sum,) + (0,) * 9)
            scaled = ComparatorAggregate(n_d, total * m, (year_sum * m,) + (0,) * 9)
            worst = max(worst, abs(harm_total(own, agg) - harm_total(own * m, scaled)))
            worst = max(
                worst, abs(harm_yearly(own, agg, 1) - harm_yearly(own * m, scaled, 1))
            )

    # End to end for total harm: scale the stored citation counts.
    rows = [
        {
            "id": i,
            "year": 2000 + i % 3,
            "fields": ("bio",),
            "citation_count": rnd.randint(0, 30),
        }
        for i in range(50)
    ]
    for m in (2, 10):
        scaled_rows = [dict(r, citation_count=r["citation_count"] * m) for r in rows]
        base_corpus, scaled_corpus = make_corpus(rows), make_corpus(scaled_rows)
        base_index, scaled_index = (
            ComparatorKeyIndex(base_corpus),
            ComparatorKeyIndex(scaled_corpus),
        )
        year_index = make_graph(base_corpus, []).yearly_index()
        for rec in base_corpus.records:
            base_h = harm_total(
                rec.citation_count,
                aggregate(base_corpus, year_index, comparator_set(base_index, rec.id)),
            )
            scaled_h = harm_total(
                rec.citation_count * m,
                aggregate(
                    scaled_corpus, year_index, comparator_set(scaled_index, rec.id)
                ),
            )
            if base_h is None:
                assert scaled_h is None
            else:
                worst = max(worst, abs(base_h - scaled_h))
    report("scale-equivariance", worst <= 1e-12, f"worst drift {worst:.2e}")


def test_dedup_properties():
    """On 50 random graphs, deduplicated levels are pairwise disjoint and
    never larger than their duplicate-preserving counterparts."""
    rnd = random.Random(1234)
    for trial in range(50):
        n = rnd.randint(5, 40)
        corpus = make_corpus([{"id": i, "year": 2000 + i % 8} for i in range(n)])
        edges = [
            (a, b)
            for a in range(n)
            for b in range(n)
            if a != b and rnd.random() < 0.08
        ]
        graph = make_graph(corpus, edges)
        seeds = {s: date(2010, 1, 1) for s in rnd.sample(range(n), rnd.randint(1, 3))}
        levels = compute_frontiers(graph, seeds, 6)
        deduped = dedup_frontiers(levels)
        seen: set[int] = set()
        for level, dd in zip(levels, deduped):
            assert len(dd) <= len(level), f"trial {trial}: dedup grew a level"
            assert not (dd.members & seen), f"trial {trial}: dedup levels overlap"
            seen |= dd.members
    report("dedup-properties", True, "50 graphs")


def test_prepost_boundary():
    """Publication exactly on the earliest retraction date lands in post."""
    boundary = date(2015, 6, 1)
    corpus = make_corpus(
        [
            {"id": 0, "year": 2005},
            {"id": 1, "year": 2015, "pub_date": boundary},
            {"id": 2, "year": 2015, "pub_date": date(2015, 5, 31)},
        ]
    )
    graph = make_graph(corpus, [(1, 0), (2, 0)])
    split = classify_pre_post(direct_citers(graph, {0: boundary}), corpus)
    report("prepost-boundary", split.post == {1} and split.pre == {2})


def test_if_binning():
    """Boundary impact factors land in the upper half-open bin."""
    expected = {
        2.999: "0~3",
        3: "3~5",
        4.999: "3~5",
        5: "5~10",
        9.999: "5~10",
        10: "10~20",
        19.999: "10~20",
        20: "20~inf",
        100: "20~inf",
    }
    ok = all(if_bin_label(value) == label for value, label in expected.items())
    report("if-binning", ok, f"{len(expected)} boundary values")


def test_quantile_correctness():
    """1e4 random multisets: interpolated quartiles match a sort-based
    reference within 1e-12 and always satisfy q1 <= q2 <= q3."""

    def reference(values):
        ordered = sorted(values)
        n = len(ordered)

        def at(p):
            pos = p * (n - 1)
            lo = math.floor(pos)
            hi = math.ceil(pos)
            return ordered[lo] + (ordered[hi] - ordered[lo]) * (pos - lo)

        return at(0.25), at(0.5), at(0.75)

    rnd = random.Random(99)
    worst = 0.0
    for _ in range(10_000):
        values = [rnd.uniform(-1000, 1000) for _ in range(rnd.randint(1, 40))]
        summary = quantiles(values)
        assert summary.q1 <= summary.q2 <= summary.q3
        for got, want in zip((summary.q1, summary.q2, summary.q3), reference(values)):
            worst = max(worst, abs(got - want))
    report("quantile-correctness", worst <= 1e-12, f"worst {worst:.2e}")


def test_determinism_byte_identical_trees(tmp_path):
    """Two `all` runs over one manifest write byte-identical output trees."""
    dataset = generate(SynthConfig(seed=42), tmp_path / "data")
    trees = []
    for name in ("one", "two"):
        out = tmp_path / name
        code = main(
            ["all", "--manifest", str(dataset.manifest), "--output", str(out)]
        )
        assert code == 0
        trees.append(out)
    first, second = trees
    names = sorted(p.name for p in first.iterdir())
    ok = names == sorted(p.name for p in second.iterdir())
    for name in names:
        ok = ok and (first / name).read_bytes() == (second / name).read_bytes()
    report("determinism", ok, f"{len(names)} files compared")


def test_desk_scale_performance(tmp_path):
    """`all` on a corpus that retains 100k+ papers and 1M+ edges, max
    distance 6, both dedup variants: under 60 s wall and 2 GB peak."""
    dataset = generate(
        SynthConfig(
            seed=1,
            n_papers=125_000,
            n_venues=2000,
            mean_out_degree=10.5,
            retraction_fraction=0.01,
        ),
        tmp_path / "data",
    )
    n_edges = sum(1 for _ in open(dataset.citations)) - 1
    assert n_edges >= 1_000_000, f"generator produced only {n_edges} edges"

    env = {
        key: value
        for key, value in os.environ.items()
        if not key.startswith("RETRACTION_HARM_")
    }
    cmd = [
        sys.executable,
        "-m",
        "retraction_harm",
        "all",
        "--manifest",
        str(dataset.manifest),
        "--output",
        str(tmp_path / "out"),
        "--max-distance",
        "6",
        "--dedup",
        "both",
    ]
    stdout_path = tmp_path / "stdout.json"
    start = time.monotonic()
    with open(stdout_path, "wb") as out, open(tmp_path / "stderr.txt", "wb") as err:
        proc = subprocess.Popen(cmd, stdout=out, stderr=err, env=env)
        _, status, rusage = os.wait4(proc.pid, 0)
        proc.returncode = os.waitstatus_to_exitcode(status)
    elapsed = time.monotonic() - start
    assert proc.returncode == 0, (tmp_path / "stderr.txt").read_text()

    peak_gb = rusage.ru_maxrss / (1024 * 1024)  # ru_maxrss is KB on Linux
    summary = json.loads(stdout_path.read_text())
    assert summary["papers"] >= 100_000
    assert (tmp_path / "out" / "distance_dedup.csv").exists()
    report(
        "desk-scale-performance",
        elapsed < 60.0 and peak_gb < 2.0,
        f"{n_edges} edges, {elapsed:.1f}s, peak {peak_gb:.2f} GB",
    )
