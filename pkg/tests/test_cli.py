"""CLI contract: subcommands, staging order, exit codes, env overrides."""

from __future__ import annotations

import json

import pytest

from retraction_harm.cli import main

pytestmark = pytest.mark.usefixtures("clean_env")


@pytest.fixture
def clean_env(monkeypatch):
    for key in list(__import__("os").environ):
        if key.startswith("RETRACTION_HARM_"):
            monkeypatch.delenv(key)


@pytest.fixture
def dataset(tmp_path):
    code = main(["synth", "--seed", "42", "--output", str(tmp_path / "data")])
    assert code == 0
    return tmp_path / "data" / "manifest.json"


def run(capsys, *argv) -> tuple[int, dict, str]:
    code = main(list(argv))
    captured = capsys.readouterr()
    payload = json.loads(captured.out) if captured.out.strip() else {}
    return code, payload, captured.err


class TestSubcommands:
    def test_synth_writes_dataset(self, tmp_path, capsys):
        code, payload, _ = run(
            capsys, "synth", "--seed", "7", "--output", str(tmp_path / "d")
        )
        assert code == 0
        assert (tmp_path / "d" / "publications.jsonl").exists()
        assert payload["seed"] == 7

    def test_synth_requires_seed(self, tmp_path, capsys):
        code, _, err = run(capsys, "synth", "--output", str(tmp_path))
        assert code == 2
        assert json.loads(err)["error"]["code"] == "config"

    def test_staged_run_matches_all(self, dataset, tmp_path, capsys):
        staged = tmp_path / "staged"
        for command in ("ingest", "build", "frontiers", "harm", "stats"):
            code, _, err = run(
                capsys, command, "--manifest", str(dataset), "--output", str(staged)
            )
            assert code == 0, f"{command} failed: {err}"
        direct = tmp_path / "direct"
        code, _, _ = run(capsys, "all", "--manifest", str(dataset), "--output", str(direct))
        assert code == 0
        for name in ("field.csv", "distance.csv", "distance_dedup.csv", "if.csv",
                     "prepost.csv", "harm.csv", "frontiers.csv", "run_manifest.json"):
            assert (staged / name).read_bytes() == (direct / name).read_bytes(), name

    def test_stats_before_harm_is_dependency_error(self, dataset, tmp_path, capsys):
        out = tmp_path / "out"
        code, _, err = run(
            capsys, "ingest", "--manifest", str(dataset), "--output", str(out)
        )
        assert code == 0
        code, _, err = run(
            capsys, "stats", "--manifest", str(dataset), "--output", str(out)
        )
        assert code == 3
        error = json.loads(err)["error"]
        assert error["code"] == "data"
        assert "frontiers" in error["message"]

    def test_verify_exits_zero_on_synthetic(self, tmp_path, capsys):
        code, payload, _ = run(
            capsys, "verify", "--seed", "42", "--output", str(tmp_path / "v")
        )
        assert code == 0
        assert payload["ok"] is True
        report = json.loads((tmp_path / "v" / "verify_report.json").read_text())
        assert report["ok"] is True
        assert report["problems"] == []

    def test_all_on_1k_fixture_produces_tables_and_manifest(self, tmp_path, capsys):
        code, _, _ = run(
            capsys, "synth", "--seed", "11", "--papers", "1000",
            "--output", str(tmp_path / "fixture"),
        )
        assert code == 0
        out = tmp_path / "out"
        code, payload, _ = run(
            capsys, "all",
            "--manifest", str(tmp_path / "fixture" / "manifest.json"),
            "--output", str(out),
        )
        assert code == 0
        tables = sorted(p.name for p in out.glob("*.csv") if p.name not in
                        ("harm.csv", "frontiers.csv", "retractions_clean.csv",
                         "journal_if_clean.csv"))
        assert tables == [
            "distance.csv", "distance_dedup.csv", "field.csv", "if.csv", "prepost.csv",
        ]
        manifest = json.loads((out / "run_manifest.json").read_text())
        assert set(manifest) == {"config", "drop_counters", "input_hashes"}
        assert len(manifest["input_hashes"]) == 4

    def test_missing_manifest_is_config_error(self, tmp_path, capsys):
        code, _, err = run(
            capsys, "all", "--manifest", str(tmp_path / "nope.json"),
            "--output", str(tmp_path),
        )
        assert code == 2
        assert json.loads(err)["error"]["code"] == "config"

    def test_bad_flag_value_is_config_error(self, dataset, tmp_path, capsys):
        code, _, err = run(
            capsys, "all", "--manifest", str(dataset),
            "--output", str(tmp_path / "o"), "--max-distance", "9",
        )
        assert code == 2


class TestOverrides:
    def test_env_var_overrides_manifest(self, dataset, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("RETRACTION_HARM_MAX_DISTANCE", "2")
        out = tmp_path / "env_out"
        code, payload, _ = run(
            capsys, "all", "--manifest", str(dataset), "--output", str(out)
        )
        assert code == 0
        assert len(payload["frontier_sizes"]) == 2

    def test_flag_beats_env_var(self, dataset, tmp_path, capsys, monkeypatch):
        monkeypatch.setenv("RETRACTION_HARM_MAX_DISTANCE", "2")
        code, payload, _ = run(
            capsys, "all", "--manifest", str(dataset),
            "--output", str(tmp_path / "o"), "--max-distance", "4",
        )
        assert code == 0
        assert len(payload["frontier_sizes"]) == 4

    def test_dedup_mode_gates_table_families(self, dataset, tmp_path, capsys):
        out = tmp_path / "r"
        code, payload, _ = run(
            capsys, "all", "--manifest", str(dataset), "--output", str(out),
            "--dedup", "repeats-only",
        )
        assert code == 0
        assert not (out / "distance_dedup.csv").exists()
        assert (out / "distance.csv").exists()

    def test_no_self_exclude_changes_harm(self, dataset, tmp_path, capsys):
        code, _, _ = run(
            capsys, "all", "--manifest", str(dataset), "--output", str(tmp_path / "a")
        )
        assert code == 0
        code, _, _ = run(
            capsys, "all", "--manifest", str(dataset),
            "--output", str(tmp_path / "b"), "--no-self-exclude",
        )
        assert code == 0
        assert (tmp_path / "a" / "harm.csv").read_bytes() != (
            tmp_path / "b" / "harm.csv"
        ).read_bytes()


class TestDeterminism:
    def test_rerun_is_byte_identical(self, dataset, tmp_path, capsys):
        outs = []
        for name in ("one", "two"):
            out = tmp_path / name
            code, _, _ = run(
                capsys, "all", "--manifest", str(dataset), "--output", str(out)
            )
            assert code == 0
            outs.append(out)
        first, second = outs
        names = sorted(p.name for p in first.iterdir())
        assert names == sorted(p.name for p in second.iterdir())
        for name in names:
            assert (first / name).read_bytes() == (second / name).read_bytes(), name
