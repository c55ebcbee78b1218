"""Run manifest: the single configuration object driving a pipeline run.

A manifest file (TOML or JSON) names the four input files and the
analysis knobs. Flags and environment variables (prefix
``RETRACTION_HARM_``) override file values; every input's content hash
is recorded so outputs are traceable and the graph cache can be
invalidated.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError
from .graph import file_sha256

log = logging.getLogger(__name__)

ENV_PREFIX = "RETRACTION_HARM_"

DEDUP_MODES = ("both", "dedup-only", "repeats-only")
QUANTILE_METHODS = ("linear",)

_INPUT_KEYS = ("publications", "citations", "retractions", "journal_if")
_KNOWN_KEYS = set(_INPUT_KEYS) | {
    "cutoff_year",
    "max_distance",
    "dedup_mode",
    "exclude_self",
    "output_dir",
    "quantile_method",
    "threads",
}


@dataclass(frozen=True)
class RunManifest:
    publications: Path
    citations: Path
    retractions: Path
    journal_if: Path
    cutoff_year: int = 2013
    max_distance: int = 6
    dedup_mode: str = "both"
    exclude_self: bool = True
    output_dir: Path | None = None
    quantile_method: str = "linear"
    threads: int = 1
    input_hashes: dict = field(default_factory=dict)

    def validate(self) -> None:
        for key in _INPUT_KEYS:
            path: Path = getattr(self, key)
            if not path.is_file():
                raise ConfigError(f"{key} input does not exist: {path}")
        if not 1 <= self.max_distance <= 6:
            raise ConfigError(f"max_distance must be in 1..6, got {self.max_distance}")
        if self.dedup_mode not in DEDUP_MODES:
            raise ConfigError(
                f"dedup_mode must be one of {', '.join(DEDUP_MODES)}: {self.dedup_mode}"
            )
        if self.quantile_method not in QUANTILE_METHODS:
            raise ConfigError(f"unsupported quantile method {self.quantile_method!r}")
        if self.threads < 1:
            raise ConfigError("threads must be >= 1")

    def with_hashes(self) -> "RunManifest":
        hashes = {key: file_sha256(getattr(self, key)) for key in _INPUT_KEYS}
        return replace(self, input_hashes=hashes)

    def config_dict(self) -> dict:
        """Semantic configuration (paths as given, no machine specifics)."""
        return {
            "publications": str(self.publications),
            "citations": str(self.citations),
            "retractions": str(self.retractions),
            "journal_if": str(self.journal_if),
            "cutoff_year": self.cutoff_year,
            "max_distance": self.max_distance,
            "dedup_mode": self.dedup_mode,
            "exclude_self": self.exclude_self,
            "quantile_method": self.quantile_method,
        }

    def digest(self) -> bytes:
        """32-byte digest over inputs and semantic config (cache key)."""
        payload = {
            "hashes": self.input_hashes,
            "cutoff_year": self.cutoff_year,
            "max_distance": self.max_distance,
            "dedup_mode": self.dedup_mode,
            "exclude_self": self.exclude_self,
            "quantile_method": self.quantile_method,
        }
        blob = json.dumps(payload, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).digest()


def load_manifest(path: str | Path) -> RunManifest:
    """Parse a TOML or JSON manifest; paths resolve relative to the file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"manifest not found: {path}")
    try:
        if path.suffix == ".toml":
            with open(path, "rb") as handle:
                data = tomllib.load(handle)
        else:
            with open(path, encoding="utf-8") as handle:
                data = json.load(handle)
    except (ValueError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"unparseable manifest {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"manifest {path} must be a table/object")

    for key in data:
        if key not in _KNOWN_KEYS and not key.startswith("synth_"):
            log.warning("ignoring unknown manifest key %r", key)

    missing = [key for key in _INPUT_KEYS if key not in data]
    if missing:
        raise ConfigError(f"manifest missing inputs: {', '.join(missing)}")

    base = path.parent

    def resolve(raw: str) -> Path:
        p = Path(raw)
        return p if p.is_absolute() else base / p

    try:
        manifest = RunManifest(
            publications=resolve(data["publications"]),
            citations=resolve(data["citations"]),
            retractions=resolve(data["retractions"]),
            journal_if=resolve(data["journal_if"]),
            cutoff_year=int(data.get("cutoff_year", 2013)),
            max_distance=int(data.get("max_distance", 6)),
            dedup_mode=str(data.get("dedup_mode", "both")),
            exclude_self=bool(data.get("exclude_self", True)),
            output_dir=Path(data["output_dir"]) if data.get("output_dir") else None,
            quantile_method=str(data.get("quantile_method", "linear")),
            threads=int(data.get("threads", 1)),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad manifest value: {exc}") from exc
    return manifest


_OVERRIDE_CASTS = {
    "cutoff_year": int,
    "max_distance": int,
    "dedup_mode": str,
    "threads": int,
    "output_dir": Path,
    "exclude_self": None,  # handled as a flag below
}


def env_overrides(environ=None) -> dict:
    """Collect RETRACTION_HARM_* variables that mirror CLI flags."""
    environ = environ if environ is not None else os.environ
    out: dict = {}
    mapping = {
        "CUTOFF_YEAR": ("cutoff_year", int),
        "MAX_DISTANCE": ("max_distance", int),
        "DEDUP": ("dedup_mode", str),
        "THREADS": ("threads", int),
        "OUTPUT": ("output_dir", Path),
        "NO_SELF_EXCLUDE": ("no_self_exclude", None),
        "SEED": ("seed", int),
    }
    for suffix, (key, cast) in mapping.items():
        raw = environ.get(ENV_PREFIX + suffix)
        if raw is None or raw == "":
            continue
        if cast is None:
            out[key] = raw.strip().lower() not in ("0", "false", "no")
        else:
            try:
                out[key] = cast(raw)
            except ValueError as exc:
                raise ConfigError(f"bad {ENV_PREFIX}{suffix}={raw!r}: {exc}") from exc
    return out


def apply_overrides(manifest: RunManifest, overrides: dict) -> RunManifest:
    """Layer flag/env overrides on top of manifest values."""
    updates: dict = {}
    for key in ("cutoff_year", "max_distance", "dedup_mode", "threads", "output_dir"):
        if overrides.get(key) is not None:
            updates[key] = overrides[key]
    if overrides.get("no_self_exclude"):
        updates["exclude_self"] = False
    return replace(manifest, **updates) if updates else manifest
