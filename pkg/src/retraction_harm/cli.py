"""Command-line entry point.

Subcommands run individual pipeline stages or the whole run; `synth`
generates a seeded dataset and `verify` checks the pipeline against the
brute-force reference on one. Flags override environment variables
(RETRACTION_HARM_*), which override manifest values. Fatal problems
print one JSON error object to stderr and exit with 2 (configuration),
3 (data), or 4 (verification failure).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ConfigError, DataError, PipelineError
from .manifest import RunManifest, apply_overrides, env_overrides, load_manifest
from . import pipeline
from .synth import SynthConfig, generate

DEFAULT_OUTPUT = Path("out")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="retraction-harm",
        description="Quantify citation harm around retracted publications.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--manifest", type=Path, help="run manifest (TOML or JSON)")
        p.add_argument("--output", type=Path, default=None, help="output directory")
        p.add_argument("--threads", type=int, default=None, help="worker bound")
        p.add_argument("--cutoff-year", type=int, default=None, dest="cutoff_year")
        p.add_argument(
            "--max-distance", type=int, default=None, dest="max_distance",
            help="citation distance limit (1..6)",
        )
        p.add_argument(
            "--dedup", default=None, dest="dedup_mode",
            choices=["both", "dedup-only", "repeats-only"],
        )
        p.add_argument(
            "--no-self-exclude", dest="no_self_exclude",
            action="store_const", const=True, default=None,
            help="keep each paper inside its own comparator cohort",
        )

    for name, help_text in (
        ("ingest", "clean the three datasets and report drop counters"),
        ("build", "build (or reuse) the citation graph cache"),
        ("frontiers", "compute citation-distance sets C1..Cn"),
        ("harm", "compute harm vectors for frontier members"),
        ("stats", "emit the stratified quartile tables"),
        ("all", "run the full pipeline"),
    ):
        add_common(sub.add_parser(name, help=help_text))

    synth_p = sub.add_parser("synth", help="generate a seeded synthetic dataset")
    add_common(synth_p)
    synth_p.add_argument("--seed", type=int, default=None)
    synth_p.add_argument("--papers", type=int, default=500)
    synth_p.add_argument("--venues", type=int, default=12)
    synth_p.add_argument(
        "--retraction-fraction", type=float, default=0.04, dest="retraction_fraction"
    )
    synth_p.add_argument(
        "--mean-out-degree", type=float, default=5.0, dest="mean_out_degree"
    )

    verify_p = sub.add_parser(
        "verify", help="compare the pipeline against the brute-force reference"
    )
    add_common(verify_p)
    verify_p.add_argument(
        "--seed", type=int, default=None,
        help="generate and verify a synthetic dataset instead of --manifest",
    )
    return parser


def _collect_overrides(args: argparse.Namespace) -> dict:
    overrides = env_overrides()
    for key in ("cutoff_year", "max_distance", "dedup_mode", "threads", "no_self_exclude"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "output", None) is not None:
        overrides["output_dir"] = args.output
    if getattr(args, "seed", None) is not None:
        overrides["seed"] = args.seed
    return overrides


def _load_effective_manifest(args: argparse.Namespace, overrides: dict) -> RunManifest:
    if args.manifest is None:
        raise ConfigError("--manifest is required for this command")
    manifest = load_manifest(args.manifest)
    manifest = apply_overrides(manifest, overrides)
    manifest.validate()
    return manifest.with_hashes()


def _output_dir(manifest: RunManifest | None, overrides: dict) -> Path:
    if overrides.get("output_dir") is not None:
        return Path(overrides["output_dir"])
    if manifest is not None and manifest.output_dir is not None:
        return manifest.output_dir
    return DEFAULT_OUTPUT


def _emit(summary: dict) -> None:
    print(json.dumps(summary, sort_keys=True))


def _dispatch(args: argparse.Namespace) -> int:
    overrides = _collect_overrides(args)

    if args.command == "synth":
        seed = overrides.get("seed")
        if seed is None:
            raise ConfigError("synth requires --seed (or RETRACTION_HARM_SEED)")
        out_dir = _output_dir(None, overrides)
        config = SynthConfig(
            seed=seed,
            n_papers=args.papers,
            n_venues=args.venues,
            retraction_fraction=args.retraction_fraction,
            mean_out_degree=args.mean_out_degree,
        )
        dataset = generate(config, out_dir)
        _emit(
            {
                "command": "synth",
                "seed": seed,
                "papers": args.papers,
                "manifest": str(dataset.manifest),
            }
        )
        return 0

    if args.command == "verify" and args.manifest is None:
        seed = overrides.get("seed")
        if seed is None:
            raise ConfigError("verify needs --manifest or --seed")
        out_dir = _output_dir(None, overrides)
        dataset = generate(SynthConfig(seed=seed), out_dir / "dataset")
        manifest = apply_overrides(load_manifest(dataset.manifest), overrides)
        manifest.validate()
        manifest = manifest.with_hashes()
    else:
        manifest = _load_effective_manifest(args, overrides)
        out_dir = _output_dir(manifest, overrides)

    out_dir.mkdir(parents=True, exist_ok=True)

    if args.command == "ingest":
        corpus, retractions, if_records, counters = pipeline.stage_ingest(manifest, out_dir)
        _emit(
            {
                "command": "ingest",
                "papers": len(corpus),
                "retractions": len(retractions),
                "journals_with_if": len(if_records),
                "drop_counters": counters.as_dict(),
            }
        )
    elif args.command == "build":
        corpus = pipeline.read_corpus_artifact(out_dir)
        graph = pipeline.stage_build(manifest, out_dir, corpus)
        _emit(
            {
                "command": "build",
                "nodes": graph.node_count,
                "edges": graph.edge_count,
                "edge_counters": graph.counters.as_dict(),
            }
        )
    elif args.command == "frontiers":
        corpus = pipeline.read_corpus_artifact(out_dir)
        graph = pipeline.stage_build(manifest, out_dir, corpus)
        retractions = pipeline.read_retractions_artifact(out_dir)
        repeats, dedup = pipeline.stage_frontiers(manifest, out_dir, graph, retractions)
        _emit(
            {
                "command": "frontiers",
                "sizes": [len(level) for level in repeats],
                "sizes_dedup": [len(level) for level in dedup],
            }
        )
    elif args.command == "harm":
        corpus = pipeline.read_corpus_artifact(out_dir)
        graph = pipeline.stage_build(manifest, out_dir, corpus)
        repeats, dedup = pipeline.load_frontiers_artifact(out_dir)
        table = pipeline.stage_harm(manifest, out_dir, corpus, graph, repeats, dedup)
        _emit({"command": "harm", "harm_vectors": len(table)})
    elif args.command == "stats":
        corpus = pipeline.read_corpus_artifact(out_dir)
        repeats, dedup = pipeline.load_frontiers_artifact(out_dir)
        table = pipeline.load_harm_artifact(out_dir)
        if_by_venue = pipeline.read_if_artifact(out_dir, corpus)
        tables = pipeline.stage_stats(
            manifest, out_dir, corpus, repeats, dedup, table, if_by_venue
        )
        _emit(
            {
                "command": "stats",
                "tables": {name: len(tables[name].rows) for name in sorted(tables)},
            }
        )
    elif args.command == "verify":
        report = pipeline.verify(manifest, out_dir)
        _emit({"command": "verify", "ok": report["ok"], "checked": report["checked"]})
    elif args.command == "all":
        summary = pipeline.run_all(manifest, out_dir)
        summary["command"] = "all"
        _emit(summary)
    else:  # pragma: no cover - argparse enforces choices
        raise ConfigError(f"unknown command {args.command!r}")
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _dispatch(args)
    except PipelineError as exc:
        json.dump(
            {"error": {"code": exc.code, "message": str(exc)}},
            sys.stderr,
            sort_keys=True,
        )
        sys.stderr.write("\n")
        return exc.exit_code
    except OSError as exc:
        json.dump(
            {"error": {"code": DataError.code, "message": str(exc)}},
            sys.stderr,
            sort_keys=True,
        )
        sys.stderr.write("\n")
        return DataError.exit_code


if __name__ == "__main__":
    sys.exit(main())
