"""Multi-seed experiments, post-hoc analysis and the brute-force oracle.

An experiment directory looks like::

    out/
      config.txt            resolved key=value configuration
      dataset.csv
      runs/seed_0000/trace.csv
      runs/seed_0000/run.meta
      removal.csv losses.csv instances.csv solutions.csv energies.csv timing.csv

Everything except the wall-clock columns is a deterministic function of the
configuration.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .base_learner import LOSS_EPS, TrainSettings, log_loss, train
from .bbo_engine import (
    EngineConfig,
    RunTrace,
    evaluate_selection,
    meta_text,
    run,
    selection_to_hex,
    trace_from_csv,
    trace_to_csv,
    transform_loss,
)
from .samplers import SamplerConfig
from .task_data import Dataset, filter_train, generate_dataset, read_dataset_csv, theoretical_solution, write_dataset_csv

log = logging.getLogger(__name__)

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "AnalysisSummary",
    "summed_input",
    "absolute_deviance",
    "binary_entropy",
    "hamming_distance",
    "removal_probabilities",
    "analyze",
    "run_experiment",
    "analyze_directory",
    "oracle_losses",
    "ORACLE_MAX_N",
]

ORACLE_MAX_N = 16


class ConfigError(ValueError):
    """Invalid or unparsable experiment configuration."""


# --------------------------------------------------------------------------
# per-instance statistics
# --------------------------------------------------------------------------

def summed_input(x) -> int:
    return int(np.asarray(x).sum())


def absolute_deviance(x) -> float:
    """Distance of the popcount from the majority threshold ``b / 2``."""
    x = np.asarray(x)
    return abs(float(x.sum()) - x.shape[0] / 2.0)


def binary_entropy(x) -> float:
    """Entropy in nats of a Bernoulli with ``p`` = fraction of ones, ``0 log 0 = 0``."""
    x = np.asarray(x)
    p = float(x.sum()) / x.shape[0]
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log(p) - (1.0 - p) * math.log(1.0 - p)


def hamming_distance(a, b) -> int:
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"selection shapes differ: {a.shape} vs {b.shape}")
    return int(np.count_nonzero(a != b))


def removal_probabilities(traces, dataset: Dataset | None = None) -> np.ndarray:
    """Fraction of runs whose best selection drops each training instance."""
    traces = list(traces)
    if not traces:
        raise ValueError("need at least one trace")
    best = np.array([t.best_selection for t in traces], dtype=float)
    if dataset is not None and best.shape[1] != dataset.n:
        raise ValueError("trace width does not match the dataset")
    return 1.0 - best.mean(axis=0)


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

def _parse_seeds(text: str) -> tuple[int, ...]:
    seeds: list[int] = []
    for part in str(text).replace(" ", "").split(","):
        if not part:
            continue
        if "-" in part:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    return tuple(seeds)


def _parse_bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment configuration; field names are the config-file keys."""

    b: int = 9
    n_real: int = 64
    n_valid: int = 128
    n_test: int = 128
    dataset_seed: int = 0
    n_init: int = 64
    n_total: int = 320
    num_reads: int = 512
    transform: str = "log"
    loss_floor: float = LOSS_EPS
    ridge_lambda: float = 1.0
    sampler: str = "sa"
    num_sweeps: int = 1000
    trotter_slices: int = 4
    l2_strength: float = 1.0
    l2_scale_by_size: bool = True
    max_iterations: int = 200
    tolerance: float = 1e-8
    seeds: tuple[int, ...] = tuple(range(32))
    output_dir: str = "results"

    def __post_init__(self):
        if not self.seeds:
            raise ConfigError("seed list must not be empty")
        try:
            self.engine_config(self.seeds[0])
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    # -- parsing -----------------------------------------------------------

    @classmethod
    def from_mapping(cls, mapping: dict) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in mapping.items():
            if key not in known:
                raise ConfigError(f"unknown config key {key!r}")
            kind = known[key].type
            try:
                if key == "seeds":
                    value = _parse_seeds(raw) if isinstance(raw, str) else tuple(int(s) for s in raw)
                elif kind in ("int", int):
                    value = int(raw)
                elif kind in ("float", float):
                    value = float(raw)
                elif kind in ("bool", bool):
                    value = _parse_bool(raw) if isinstance(raw, str) else bool(raw)
                else:
                    value = str(raw).strip()
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from exc
            kwargs[key] = value
        try:
            return cls(**kwargs)
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_text(cls, text: str, overrides=()) -> "ExperimentConfig":
        mapping = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected key=value, got {line!r}")
            key, value = line.split("=", 1)
            mapping[key.strip()] = value.strip()
        for item in overrides:
            if "=" not in item:
                raise ConfigError(f"override {item!r} is not key=value")
            key, value = item.split("=", 1)
            mapping[key.strip()] = value.strip()
        return cls.from_mapping(mapping)

    @classmethod
    def from_file(cls, path, overrides=()) -> "ExperimentConfig":
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_text(text, overrides)

    def to_text(self) -> str:
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if f.name == "seeds":
                value = ",".join(str(s) for s in value)
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{f.name}={value}")
        return "\n".join(lines) + "\n"

    # -- derived objects ---------------------------------------------------

    def dataset(self) -> Dataset:
        return generate_dataset(self.b, self.n_real, self.n_valid, self.n_test, self.dataset_seed)

    def train_settings(self) -> TrainSettings:
        return TrainSettings(self.l2_strength, self.max_iterations, self.tolerance, self.l2_scale_by_size)

    def engine_config(self, seed: int) -> EngineConfig:
        return EngineConfig(
            n_init=self.n_init,
            n_total=self.n_total,
            transform=self.transform,
            loss_floor=self.loss_floor,
            ridge_lambda=self.ridge_lambda,
            sampler=SamplerConfig(
                kind=self.sampler,
                num_reads=self.num_reads,
                num_sweeps=self.num_sweeps,
                trotter_slices=self.trotter_slices,
            ),
            learner=self.train_settings(),
            seed=seed,
        )


# --------------------------------------------------------------------------
# analysis
# --------------------------------------------------------------------------

LOSS_SPLITS = ("train_all", "train_optimized", "valid", "test")


@dataclass
class AnalysisSummary:
    seeds: list[int]
    best_raw_loss: np.ndarray
    best_transformed_loss: np.ndarray
    hamming: np.ndarray
    selected: np.ndarray  # (runs, n) best selections
    removal_probability: np.ndarray
    summed: np.ndarray
    deviance: np.ndarray
    entropy: np.ndarray
    split_losses: dict[str, np.ndarray]
    step_time_mean: np.ndarray
    step_time_sem: np.ndarray
    sampling_time_mean: float
    sampling_time_std: float
    provenance: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=bool))


def _best_model_losses(dataset: Dataset, q, settings: TrainSettings) -> dict[str, float]:
    subset = filter_train(dataset, q)
    model = train(subset, settings)
    return {
        "train_all": log_loss(model, dataset.train),
        "train_optimized": log_loss(model, subset) if len(subset) else math.nan,
        "valid": log_loss(model, dataset.valid),
        "test": log_loss(model, dataset.test),
    }


def analyze(traces: list[RunTrace], dataset: Dataset, settings: TrainSettings, seeds=None) -> AnalysisSummary:
    """Aggregate statistics over finished runs."""
    if not traces:
        raise ValueError("need at least one trace")
    seeds = list(seeds) if seeds is not None else list(range(len(traces)))
    theo = theoretical_solution(dataset)
    best = np.array([t.best_selection for t in traces], dtype=np.uint8)
    losses = {s: [] for s in LOSS_SPLITS}
    for q in best:
        for s, v in _best_model_losses(dataset, q, settings).items():
            losses[s].append(v)

    times = np.array([[r.sampling_time for r in t.records if r.phase == "optimize"] for t in traces])
    if times.size:
        mean = times.mean(axis=0)
        sem = times.std(axis=0, ddof=1) / np.sqrt(times.shape[0]) if times.shape[0] > 1 else np.zeros_like(mean)
        all_mean, all_std = float(times.mean()), float(times.std())
    else:
        mean = sem = np.zeros(0)
        all_mean = all_std = 0.0

    X = dataset.train.inputs
    return AnalysisSummary(
        seeds=seeds,
        best_raw_loss=np.array([t.best_record.raw_loss for t in traces]),
        best_transformed_loss=np.array([t.best_record.transformed_loss for t in traces]),
        hamming=np.array([hamming_distance(q, theo) for q in best]),
        selected=best,
        removal_probability=removal_probabilities(traces, dataset),
        summed=np.array([summed_input(x) for x in X]),
        deviance=np.array([absolute_deviance(x) for x in X]),
        entropy=np.array([binary_entropy(x) for x in X]),
        split_losses={k: np.array(v) for k, v in losses.items()},
        step_time_mean=mean,
        step_time_sem=sem,
        sampling_time_mean=all_mean,
        sampling_time_std=all_std,
        provenance=dataset.train_real.copy(),
    )


def _f(x) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def summary_tables(summary: AnalysisSummary, traces: list[RunTrace]) -> dict[str, str]:
    """Render the aggregate CSV files keyed by file name."""
    prov = np.where(summary.provenance, "real", "fake")
    n = summary.selected.shape[1]
    tables = {}
    tables["removal.csv"] = _csv(
        ["run", "instance", "provenance", "selected"],
        [[seed, i, prov[i], int(summary.selected[r, i])]
         for r, seed in enumerate(summary.seeds) for i in range(n)],
    )
    tables["losses.csv"] = _csv(
        ["run", "split", "log_loss"],
        [[seed, s, _f(summary.split_losses[s][r])]
         for r, seed in enumerate(summary.seeds) for s in LOSS_SPLITS],
    )
    tables["instances.csv"] = _csv(
        ["instance", "provenance", "summed_input", "absolute_deviance", "entropy", "removal_probability"],
        [[i, prov[i], int(summary.summed[i]), _f(summary.deviance[i]), _f(summary.entropy[i]),
          _f(summary.removal_probability[i])] for i in range(n)],
    )
    tables["solutions.csv"] = _csv(
        ["run", "best_raw_loss", "best_transformed_loss", "hamming_distance", "best_selection_hex"],
        [[seed, _f(summary.best_raw_loss[r]), _f(summary.best_transformed_loss[r]),
          int(summary.hamming[r]), selection_to_hex(summary.selected[r])]
         for r, seed in enumerate(summary.seeds)],
    )
    tables["energies.csv"] = _csv(
        ["run", "step", "mean", "std"],
        [[seed, rec.step, _f(rec.batch_energy_mean), _f(rec.batch_energy_std)]
         for seed, t in zip(summary.seeds, traces) for rec in t.records if rec.phase == "optimize"],
    )
    steps = [rec.step for rec in traces[0].records if rec.phase == "optimize"]
    timing_rows = [
        [k, len(traces), _f(m), _f(s), _f(m - 1.96 * s), _f(m + 1.96 * s)]
        for k, m, s in zip(steps, summary.step_time_mean, summary.step_time_sem)
    ]
    timing_rows.append(["all", len(traces), _f(summary.sampling_time_mean), _f(summary.sampling_time_std), "", ""])
    tables["timing.csv"] = _csv(
        ["step", "runs", "mean_s", "sem_s", "ci95_low_s", "ci95_high_s"], timing_rows
    )
    return tables


# --------------------------------------------------------------------------
# file layout
# --------------------------------------------------------------------------

def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_text(text, encoding="utf-8")
        os.replace(tmp, path)
    except OSError as exc:
        raise OSError(f"failed writing {path}: {exc}") from exc


def _run_dir(out: Path, seed: int) -> Path:
    return out / "runs" / f"seed_{seed:04d}"


def write_summary(out: Path, summary: AnalysisSummary, traces: list[RunTrace]) -> None:
    for name, text in summary_tables(summary, traces).items():
        _atomic_write(out / name, text)


def run_experiment(config: ExperimentConfig, output_dir=None) -> AnalysisSummary:
    """Run every seed, store traces, then write the aggregate tables.

    Raises
    ------
    RuntimeError
        Wrapping any failing run, with its seed in the message.
    """
    out = Path(output_dir if output_dir is not None else config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    dataset = config.dataset()
    _atomic_write(out / "config.txt", config.to_text())
    write_dataset_csv(dataset, out / "dataset.csv")
    traces = []
    for seed in config.seeds:
        engine_cfg = config.engine_config(seed)
        log.info("run seed=%d", seed)
        try:
            trace = run(dataset, engine_cfg)
        except Exception as exc:
            raise RuntimeError(f"run with seed {seed} failed: {exc}") from exc
        rdir = _run_dir(out, seed)
        _atomic_write(rdir / "trace.csv", trace_to_csv(trace))
        _atomic_write(rdir / "run.meta", meta_text(engine_cfg, {"dataset_seed": config.dataset_seed, "n": dataset.n}))
        traces.append(trace)
    summary = analyze(traces, dataset, config.train_settings(), config.seeds)
    write_summary(out, summary, traces)
    return summary


def load_directory(in_dir) -> tuple[ExperimentConfig, Dataset, list[RunTrace]]:
    in_dir = Path(in_dir)
    config = ExperimentConfig.from_file(in_dir / "config.txt")
    dataset = read_dataset_csv(in_dir / "dataset.csv")
    traces = []
    for seed in config.seeds:
        path = _run_dir(in_dir, seed) / "trace.csv"
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise OSError(f"cannot read trace {path}: {exc}") from exc
        traces.append(trace_from_csv(text, dataset.n))
    return config, dataset, traces


def analyze_directory(in_dir) -> AnalysisSummary:
    """Recompute the aggregate tables from stored traces."""
    config, dataset, traces = load_directory(in_dir)
    summary = analyze(traces, dataset, config.train_settings(), config.seeds)
    write_summary(Path(in_dir), summary, traces)
    return summary


# --------------------------------------------------------------------------
# oracle
# --------------------------------------------------------------------------

def oracle_losses(dataset: Dataset, settings: TrainSettings) -> np.ndarray:
    """Validation loss of every selection, indexed by ``sum_i q_i 2^i``."""
    n = dataset.n
    if n > ORACLE_MAX_N:
        raise ValueError(f"oracle enumeration limited to n <= {ORACLE_MAX_N}, got {n}")
    bits = np.arange(n)
    return np.array([
        evaluate_selection(((v >> bits) & 1).astype(np.uint8), dataset, settings)
        for v in range(1 << n)
    ])


def oracle_table(losses: np.ndarray, n: int, transform: str = "log", floor: float = LOSS_EPS) -> str:
    bits = np.arange(n)
    rows = []
    for v, raw in enumerate(losses):
        q = ((v >> bits) & 1).astype(np.uint8)
        rows.append([selection_to_hex(q), _f(raw), _f(transform_loss(raw, transform, floor))])
    return _csv(["selection_hex", "raw_loss", "transformed_loss"], rows)
