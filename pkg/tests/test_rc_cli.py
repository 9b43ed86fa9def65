#!/usr/bin/env python3
# -*- coding: utf-8 -*-

# Built-in modules
import json
from csv import DictReader

# pip modules
import numpy as np
import pytest
from click.testing import CliRunner

# local modules
from rifscascade.rc_cli import (
    EXIT_CONFIG,
    EXIT_FAILURE,
    EXIT_INCONCLUSIVE,
    EXIT_INSUFFICIENT,
    cli,
)
from rifscascade.rc_core import FLAT_DEFAULTS
from rifscascade.rc_utils import VERSION, file_digest

DYADIC = {"contraction.kind": "constant", "contraction.r": 0.5, "placement": "disjoint_pack"}
WORKED = {"contraction.kind": "two_point", "contraction.r1": "1/3", "contraction.r2": "2/3"}
SUBCRITICAL = {
    "offspring.probs": [0.6, 0.0, 0.4],
    "contraction.kind": "uniform",
    "contraction.lo": 0.2,
    "contraction.hi": 0.8,
}


@pytest.fixture
def runner():
    return CliRunner()


def write_config(tmp_path, name, flat):
    path = tmp_path / f"{name}.json"
    path.write_text(json.dumps(flat), encoding="utf-8")
    return str(path)


def simulate(runner, tmp_path, flat, depth, name="realization"):
    output = str(tmp_path / f"{name}.csv")
    result = runner.invoke(
        cli,
        ["simulate", "-c", write_config(tmp_path, name, flat), "--depth", str(depth), "-o", output],
    )
    assert result.exit_code == 0, result.output
    return output


def test_version(runner):
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert VERSION in result.output


def test_defaults(runner):
    result = runner.invoke(cli, ["defaults"])
    assert result.exit_code == 0
    assert json.loads(result.output) == FLAT_DEFAULTS


def test_defaults_described(runner):
    result = runner.invoke(cli, ["defaults", "--describe"])
    assert result.exit_code == 0
    lines = result.output.splitlines()
    assert len(lines) == len(FLAT_DEFAULTS)
    assert lines[0].startswith("offspring.probs")
    assert "[0.0,0.0,1.0]" in lines[0]


def test_simulate_is_reproducible(runner, tmp_path):
    first = simulate(runner, tmp_path, {**DYADIC, "master_seed": 3}, 10, "first")
    second = simulate(runner, tmp_path, {**DYADIC, "master_seed": 3}, 10, "second")
    assert file_digest(first) == file_digest(second)
    assert file_digest(f"{first}.meta.json") == file_digest(f"{second}.meta.json")

    with open(first, "r", encoding="utf-8") as file:
        rows = list(DictReader(file))
    assert sum(row["depth"] == "10" for row in rows) == 1024

    manifest = json.loads((tmp_path / "first.csv.manifest.json").read_text(encoding="utf-8"))
    assert manifest["command"] == "simulate"
    assert manifest["outputs"]["first.csv"] == file_digest(first)


def test_simulate_rejects_bad_probabilities(runner, tmp_path):
    config = write_config(tmp_path, "bad", {"offspring.probs": [0.2, 0.3, 0.4]})
    result = runner.invoke(cli, ["simulate", "-c", config, "-o", str(tmp_path / "bad.csv")])
    assert result.exit_code == EXIT_CONFIG
    assert "offspring.probs" in result.output


def test_simulate_rejects_unknown_keys(runner, tmp_path):
    config = write_config(tmp_path, "typo", {"max_deph": 4})
    result = runner.invoke(cli, ["simulate", "-c", config, "-o", str(tmp_path / "typo.csv")])
    assert result.exit_code == EXIT_CONFIG
    assert "max_deph" in result.output


def test_simulate_without_masses(runner, tmp_path):
    output = str(tmp_path / "plain.csv")
    config = write_config(tmp_path, "plain", WORKED)
    result = runner.invoke(cli, ["simulate", "-c", config, "--depth", "3", "--no-masses", "-o", output])
    assert result.exit_code == 0
    with open(output, "r", encoding="utf-8") as file:
        assert all(row["mass"] == "" for row in DictReader(file))


def test_spectrum_of_the_dyadic_cascade(runner, tmp_path):
    realization = simulate(runner, tmp_path, DYADIC, 10)
    output = str(tmp_path / "spectrum.json")
    svg = str(tmp_path / "spectrum.svg")
    result = runner.invoke(cli, ["spectrum", realization, "-o", output, "--svg", svg])
    assert result.exit_code == 0, result.output

    data = json.loads((tmp_path / "spectrum.json").read_text(encoding="utf-8"))
    assert np.array(data["tau"]) == pytest.approx(np.array(data["q"]) - 1.0, abs=1e-9)
    assert data["depth_window"] == [3, 10]
    assert data["convexity"]["verdict"] == "affine"
    assert (tmp_path / "spectrum.svg").read_text(encoding="utf-8").startswith("<svg")


def test_spectrum_at_a_single_q(runner, tmp_path):
    realization = simulate(runner, tmp_path, WORKED, 8)
    output = str(tmp_path / "one.json")
    result = runner.invoke(cli, ["spectrum", realization, "--q", "1", "-o", output])
    assert result.exit_code == 0, result.output
    data = json.loads((tmp_path / "one.json").read_text(encoding="utf-8"))
    assert data["q"] == [1.0]
    assert data["tau"] == pytest.approx([0.0], abs=1e-9)
    assert data["alpha"] == []


def test_spectrum_of_a_shallow_realization(runner, tmp_path):
    realization = simulate(runner, tmp_path, DYADIC, 2)
    result = runner.invoke(cli, ["spectrum", realization, "-o", str(tmp_path / "shallow.json")])
    assert result.exit_code == EXIT_INSUFFICIENT


def test_spectrum_of_a_malformed_file(runner, tmp_path):
    path = tmp_path / "broken.csv"
    path.write_text("depth,left\n0,0.0\n", encoding="utf-8")
    result = runner.invoke(cli, ["spectrum", str(path), "-o", str(tmp_path / "broken.json")])
    assert result.exit_code == EXIT_CONFIG


def test_small_benchmark(runner, tmp_path):
    output = str(tmp_path / "benchmark.csv")
    result = runner.invoke(
        cli,
        ["benchmark", "--depth", "4", "--seeds", "2", "--q", "0", "--q", "1", "--mc-samples", "100", "-o", output],
    )
    assert result.exit_code == 0, result.output
    with open(output, "r", encoding="utf-8") as file:
        rows = list(DictReader(file))
    assert [float(row["q"]) for row in rows] == [0.0, 1.0]


def test_benchmark_outside_tolerance(runner, tmp_path):
    result = runner.invoke(
        cli,
        [
            "benchmark",
            "--depth", "4",
            "--seeds", "2",
            "--q", "0",
            "--q", "2",
            "--mc-samples", "100",
            "--tolerance", "1e-9",
            "-o", str(tmp_path / "benchmark.csv"),
        ],
    )
    assert result.exit_code == EXIT_FAILURE
    assert "tolerance" in result.output


def test_tangent_on_a_dying_cascade(runner, tmp_path):
    config = write_config(tmp_path, "subcritical", SUBCRITICAL)
    output = str(tmp_path / "tangent.json")
    result = runner.invoke(
        cli, ["tangent", "-c", config, "--n", "3", "--k", "3", "--seeds", "40", "-o", output]
    )
    assert result.exit_code == EXIT_INCONCLUSIVE
    assert "inconclusive" in result.output
    assert json.loads((tmp_path / "tangent.json").read_text(encoding="utf-8"))["verdict"] == "inconclusive"


def test_tangent_against_a_wrong_baseline(runner, tmp_path):
    config = write_config(tmp_path, "worked", WORKED)
    result = runner.invoke(
        cli,
        [
            "tangent",
            "-c", config,
            "--n", "3",
            "--k", "4",
            "--seeds", "40",
            "--baseline-constant", "0.5",
            "-o", str(tmp_path / "tangent.json"),
        ],
    )
    assert result.exit_code == EXIT_FAILURE
    assert "rejected" in result.output


def test_figure1_single_bin(runner, tmp_path):
    result = runner.invoke(
        cli, ["figure1", "--depth", "6", "--bins", "1", "--seed", "2", "--out-dir", str(tmp_path)]
    )
    assert result.exit_code == 0, result.output
    with open(tmp_path / "heatmap.csv", "r", encoding="utf-8") as file:
        masses = [float(row["mass"]) for row in DictReader(file)]
    assert masses == pytest.approx([1.0] * 7, abs=1e-12)


def test_figure1_short_window(runner, tmp_path):
    config = write_config(tmp_path, "worked", WORKED)
    out_dir = tmp_path / "short"
    result = runner.invoke(cli, ["figure1", "-c", config, "--depth", "3", "--out-dir", str(out_dir)])
    assert result.exit_code == 0, result.output
    data = json.loads((out_dir / "spectrum.json").read_text(encoding="utf-8"))
    assert data["short_window"] is True
    assert data["depth_window"] == [1, 3]


@pytest.mark.slow
def test_figure1_defaults(runner, tmp_path):
    result = runner.invoke(cli, ["figure1", "--out-dir", str(tmp_path)])
    assert result.exit_code == 0, result.output

    with open(tmp_path / "heatmap.csv", "r", encoding="utf-8") as file:
        rows = list(DictReader(file))
    assert len(rows) == 21 * 64
    totals = np.zeros(21)
    for row in rows:
        totals[int(row["depth"])] += float(row["mass"])
    assert totals == pytest.approx(np.ones(21), abs=1e-9)

    data = json.loads((tmp_path / "spectrum.json").read_text(encoding="utf-8"))
    assert data["q"][0] == pytest.approx(-0.5)
    assert data["domain"]["q_minus"] == -1.0
    assert data["source"] == "diameter"
    assert data["concavity"]["concave"]
    assert data["concavity"]["alpha_width"] > 0.0

    manifest = json.loads((tmp_path / "figure1.manifest.json").read_text(encoding="utf-8"))
    assert set(manifest["outputs"]) == {
        "realization.csv",
        "realization.csv.meta.json",
        "heatmap.csv",
        "heatmap.svg",
        "spectrum.json",
        "spectrum.svg",
    }
