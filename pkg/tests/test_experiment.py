import csv
import io
import math
from pathlib import Path

import numpy as np
import pytest

from qubo_cleanse.bbo_engine import RunTrace, StepRecord
from qubo_cleanse.cli import main
from qubo_cleanse.experiment import (
    ConfigError,
    ExperimentConfig,
    absolute_deviance,
    analyze_directory,
    binary_entropy,
    hamming_distance,
    removal_probabilities,
    run_experiment,
    summed_input,
)
from qubo_cleanse.task_data import read_dataset_csv

TINY_CONFIG = """\
# tiny experiment
b = 5
n_real = 4
n_valid = 8
n_test = 8
dataset_seed = 1
n_init = 6
n_total = 14
num_reads = 32
num_sweeps = 100
seeds = 0-1
"""


@pytest.mark.parametrize("x, s", [([0] * 9, 0), ([1, 1, 0, 1, 0, 1, 1, 0, 0], 5), ([1] * 9, 9)])
def test_summed_input(x, s):
    assert summed_input(x) == s


def test_absolute_deviance():
    assert absolute_deviance([0] * 9) == 4.5
    assert absolute_deviance([1, 1, 0, 1, 0, 1, 1, 0, 0]) == 0.5
    assert absolute_deviance([1] * 9) == 4.5


def test_binary_entropy():
    assert binary_entropy([0] * 9) == 0.0
    assert binary_entropy([1, 0]) == pytest.approx(math.log(2))
    assert binary_entropy([1] * 9) == 0.0


def test_hamming():
    q = np.array([1] * 64 + [0] * 64)
    assert hamming_distance(q, q) == 0
    assert hamming_distance(q, 1 - q) == 128
    r = q.copy()
    r[5] ^= 1
    assert hamming_distance(q, r) == 1
    with pytest.raises(ValueError):
        hamming_distance(q, q[:-1])


def _trace_with_best(bits):
    rec = StepRecord(1, "init", np.array(bits, dtype=np.uint8), "random", None, 0.5, -0.7, -0.7)
    return RunTrace([rec], len(bits))


def test_removal_probabilities_counting():
    traces = [_trace_with_best([0, 1, 0 if r < 8 else 1]) for r in range(32)]
    p = removal_probabilities(traces)
    np.testing.assert_allclose(p, [1.0, 0.0, 0.25])
    with pytest.raises(ValueError):
        removal_probabilities([])


def test_config_parsing_and_overrides():
    cfg = ExperimentConfig.from_text(TINY_CONFIG, ["ridge_lambda=0.5", "seeds=3,5-6"])
    assert cfg.b == 5 and cfg.ridge_lambda == 0.5 and cfg.seeds == (3, 5, 6)
    assert ExperimentConfig.from_text(cfg.to_text()) == cfg
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("bogus=1")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("b=x")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("n_init=10\nn_total=5")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_text("seeds=")


def _read(path):
    return list(csv.DictReader(io.StringIO(Path(path).read_text())))


@pytest.fixture(scope="module")
def tiny_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("tiny")
    cfg = ExperimentConfig.from_text(TINY_CONFIG)
    summary = run_experiment(cfg, out)
    return cfg, out, summary


def test_experiment_files(tiny_run):
    cfg, out, summary = tiny_run
    n = 2 * cfg.n_real
    removal = _read(out / "removal.csv")
    assert len(removal) == 2 * n
    losses = _read(out / "losses.csv")
    assert {r["split"] for r in losses} == {"train_all", "train_optimized", "valid", "test"}
    assert len(losses) == 8
    inst = _read(out / "instances.csv")
    assert len(inst) == n
    for row in inst:
        sel = [int(r["selected"]) for r in removal if r["instance"] == row["instance"]]
        assert float(row["removal_probability"]) == 1 - np.mean(sel)
    sol = _read(out / "solutions.csv")
    assert all(0 <= int(r["hamming_distance"]) <= n for r in sol)
    energies = _read(out / "energies.csv")
    assert len(energies) == 2 * (cfg.n_total - cfg.n_init)
    timing = _read(out / "timing.csv")
    assert len(timing) == cfg.n_total - cfg.n_init + 1
    meta = (out / "runs" / "seed_0000" / "run.meta").read_text()
    assert "ridge_lambda=1.0" in meta and "sampler.num_sweeps=100" in meta
    assert read_dataset_csv(out / "dataset.csv").n == n


def test_analyze_reproduces_tables(tiny_run):
    _, out, _ = tiny_run
    names = ["removal.csv", "losses.csv", "instances.csv", "solutions.csv", "energies.csv", "timing.csv"]
    before = {name: (out / name).read_bytes() for name in names}
    analyze_directory(out)
    for name in names:
        assert (out / name).read_bytes() == before[name], name


def test_cli_gen(tmp_path, capsys):
    cfg = tmp_path / "c.txt"
    cfg.write_text(TINY_CONFIG)
    assert main(["gen", "--config", str(cfg)]) == 0
    text = capsys.readouterr().out
    assert text.startswith("split,index,provenance,x0")
    assert main(["gen", "--config", str(cfg), "--out", str(tmp_path / "d.csv")]) == 0
    assert (tmp_path / "d.csv").read_text() == text


def test_cli_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.txt"
    bad.write_text("unknown_key=3\n")
    assert main(["gen", "--config", str(bad)]) == 1
    assert main(["gen", "--config", str(tmp_path / "missing.txt")]) == 1
    assert main(["analyze", "--in", str(tmp_path / "nowhere")]) in (1, 2)
    cfg = tmp_path / "big.txt"
    cfg.write_text("b=9\nn_real=20\nn_valid=4\nn_test=4\n")
    assert main(["oracle", "--config", str(cfg)]) == 2


def test_cli_run_analyze_oracle(tmp_path, capsys):
    cfg = tmp_path / "c.txt"
    cfg.write_text(TINY_CONFIG.replace("seeds = 0-1", "seeds = 0"))
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg), "--out", str(out), "--set", "n_total=10"]) == 0
    assert (out / "runs" / "seed_0000" / "trace.csv").exists()
    assert main(["analyze", "--in", str(out)]) == 0
    table = tmp_path / "oracle.csv"
    assert main(["oracle", "--config", str(cfg), "--out", str(table)]) == 0
    rows = _read(table)
    assert len(rows) == 256
    assert "clean selection" in capsys.readouterr().out
