"""Surrogate-guided subset search with postprocessing acceptance.

A run has two phases. The first ``n_init`` steps accept uniformly random,
previously unseen selections. Every later step refits the ridge surrogate on
all earlier (selection, transformed loss) pairs, samples its QUBO, and
accepts the lowest-energy sample not yet evaluated, falling back to a fresh
random selection when the whole batch has been seen before.
"""

from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import asdict, dataclass, field, replace
from typing import Callable

import numpy as np

from .base_learner import LOSS_EPS, TrainSettings, log_loss, train
from .samplers import SampleBatch, SamplerConfig, sample
from .surrogate import expand_many, fit_ridge, to_qubo
from .task_data import Dataset, filter_train

__all__ = [
    "EngineConfig",
    "StepRecord",
    "RunTrace",
    "transform_loss",
    "evaluate_selection",
    "accept_candidate",
    "run",
    "selection_to_hex",
    "selection_from_hex",
    "TRACE_COLUMNS",
]

TRANSFORMS = ("log", "identity")
PHASES = ("init", "optimize")
SAMPLE_TYPES = ("random", "optimal", "suboptimal")


@dataclass(frozen=True)
class EngineConfig:
    n_init: int = 64
    n_total: int = 320
    transform: str = "log"
    loss_floor: float = LOSS_EPS
    ridge_lambda: float = 1.0
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    learner: TrainSettings = field(default_factory=TrainSettings)
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.n_init < self.n_total:
            raise ValueError(f"need 0 <= n_init < n_total, got {self.n_init}, {self.n_total}")
        if self.transform not in TRANSFORMS:
            raise ValueError(f"transform must be one of {TRANSFORMS}")
        if not self.loss_floor > 0:
            raise ValueError("loss_floor must be positive")
        if not self.ridge_lambda > 0:
            raise ValueError("ridge_lambda must be positive")

    @property
    def num_reads(self) -> int:
        return self.sampler.num_reads


@dataclass(frozen=True)
class StepRecord:
    step: int
    phase: str
    accepted: np.ndarray
    sample_type: str
    accepted_energy: float | None
    raw_loss: float
    transformed_loss: float
    best_so_far: float
    sampling_time: float = 0.0
    eval_time: float = 0.0
    batch_energy_mean: float | None = None
    batch_energy_std: float | None = None


@dataclass(frozen=True)
class RunTrace:
    records: list[StepRecord]
    n: int
    config: EngineConfig | None = None

    @property
    def accepted_set(self) -> set[bytes]:
        return {r.accepted.tobytes() for r in self.records}

    @property
    def best_index(self) -> int:
        """0-based position of the lowest transformed loss (first on ties)."""
        return int(np.argmin([r.transformed_loss for r in self.records]))

    @property
    def best_record(self) -> StepRecord:
        return self.records[self.best_index]

    @property
    def best_selection(self) -> np.ndarray:
        return self.best_record.accepted

    def selections(self) -> np.ndarray:
        return np.array([r.accepted for r in self.records], dtype=np.uint8)

    def to_csv(self) -> str:
        return trace_to_csv(self)


# --------------------------------------------------------------------------
# small operations
# --------------------------------------------------------------------------

def transform_loss(raw: float, transform: str = "log", floor: float = LOSS_EPS) -> float:
    """Map a validation loss to the surrogate's regression target."""
    if raw < 0:
        raise ValueError("loss must be non-negative")
    if transform == "log":
        return math.log(max(raw, floor))
    if transform == "identity":
        return float(raw)
    raise ValueError(f"unknown transform {transform!r}")


def evaluate_selection(q, dataset: Dataset, settings: TrainSettings = TrainSettings()) -> float:
    """Validation log-loss of a model trained on the selected training subset."""
    model = train(filter_train(dataset, q), settings)
    return log_loss(model, dataset.valid)


def _key(q: np.ndarray) -> bytes:
    return np.ascontiguousarray(q, dtype=np.uint8).tobytes()


def _random_unseen(n: int, accepted: set[bytes], rng: np.random.Generator) -> np.ndarray:
    if len(accepted) >= 2**n:
        raise RuntimeError(f"all {2**n} selections have already been evaluated")
    cap = 10 * 2 ** min(n, 20)
    for _ in range(cap):
        q = rng.integers(0, 2, size=n, dtype=np.uint8)
        if _key(q) not in accepted:
            return q
    # only reachable for tiny n: walk the space in index order
    for v in range(2**n):
        q = ((v >> np.arange(n)) & 1).astype(np.uint8)
        if _key(q) not in accepted:
            return q
    raise RuntimeError("no unseen selection found")  # pragma: no cover


def accept_candidate(batch: SampleBatch, accepted: set[bytes], rng: np.random.Generator, n: int):
    """Pick the next selection from a sample batch.

    Samples are scanned in ascending energy (read index breaks ties) and the
    first one not in ``accepted`` is taken. It is typed ``"optimal"`` when its
    energy equals the batch minimum and ``"suboptimal"`` otherwise. If every
    sample was seen before, a uniformly random unseen selection is drawn and
    typed ``"random"`` with no energy.

    Returns
    -------
    q : ndarray of uint8
    sample_type : str
    energy : float or None
    """
    if len(batch) == 0:
        raise ValueError("empty sample batch")
    energies = np.asarray(batch.energies, dtype=float)
    order = np.argsort(energies, kind="stable")
    e_min = energies[order[0]]
    tol = 1e-12 * max(1.0, abs(e_min))
    for idx in order:
        q = batch.samples[idx]
        if _key(q) not in accepted:
            e = float(energies[idx])
            kind = "optimal" if e - e_min <= tol else "suboptimal"
            return np.array(q, dtype=np.uint8), kind, e
    return _random_unseen(n, accepted, rng), "random", None


# --------------------------------------------------------------------------
# main loop
# --------------------------------------------------------------------------

def _step_seed(seed: int, step: int) -> int:
    return int(np.random.SeedSequence([seed, step]).generate_state(1, dtype=np.uint32)[0])


def run(dataset: Dataset, config: EngineConfig, progress: Callable[[StepRecord], None] | None = None) -> RunTrace:
    """Execute the full search and return its trace.

    Steps are numbered from 1. Step ``k > n_init`` fits the surrogate on the
    ``k - 1`` earlier records only. The whole run is a deterministic function
    of ``dataset`` and ``config``; only the timing fields vary.
    """
    n = dataset.n
    rng = np.random.default_rng(config.seed)
    accepted: set[bytes] = set()
    selections: list[np.ndarray] = []
    targets: list[float] = []
    records: list[StepRecord] = []
    best = math.inf

    for k in range(1, config.n_total + 1):
        energy = None
        e_mean = e_std = None
        sampling_time = 0.0
        if k <= config.n_init:
            phase = "init"
            q = _random_unseen(n, accepted, rng)
            kind = "random"
        else:
            phase = "optimize"
            coeffs = fit_ridge(expand_many(np.array(selections)), targets, config.ridge_lambda)
            sampler_cfg = replace(config.sampler, seed=_step_seed(config.seed, k))
            batch = sample(to_qubo(coeffs), sampler_cfg)
            sampling_time = batch.sampling_time
            e_mean = float(np.mean(batch.energies))
            e_std = float(np.std(batch.energies))
            q, kind, energy = accept_candidate(batch, accepted, rng, n)

        t0 = time.perf_counter()
        raw = evaluate_selection(q, dataset, config.learner)
        eval_time = time.perf_counter() - t0
        l_k = transform_loss(raw, config.transform, config.loss_floor)
        best = min(best, l_k)

        accepted.add(_key(q))
        selections.append(q)
        targets.append(l_k)
        rec = StepRecord(
            step=k,
            phase=phase,
            accepted=q,
            sample_type=kind,
            accepted_energy=energy,
            raw_loss=raw,
            transformed_loss=l_k,
            best_so_far=best,
            sampling_time=sampling_time,
            eval_time=eval_time,
            batch_energy_mean=e_mean,
            batch_energy_std=e_std,
        )
        records.append(rec)
        if progress is not None:
            progress(rec)
    return RunTrace(records, n, config)


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

TRACE_COLUMNS = [
    "step", "phase", "sample_type", "accepted_energy", "raw_loss",
    "transformed_loss", "best_so_far", "sampling_time_s", "eval_time_s",
    "selection_hex", "batch_energy_mean", "batch_energy_std",
]
TIMING_COLUMNS = ("sampling_time_s", "eval_time_s")


def selection_to_hex(q) -> str:
    """Big-endian hex; bit ``i`` of the integer is ``q[i]``."""
    q = np.asarray(q, dtype=np.uint8)
    n = q.shape[0]
    value = 0
    for i in np.flatnonzero(q):
        value |= 1 << int(i)
    return format(value, "0{}x".format(max(1, (n + 3) // 4)))


def selection_from_hex(text: str, n: int) -> np.ndarray:
    value = int(text, 16)
    if value >> n:
        raise ValueError(f"hex selection {text!r} has bits beyond n={n}")
    return np.array([(value >> i) & 1 for i in range(n)], dtype=np.uint8)


def _fmt(x) -> str:
    return "" if x is None else repr(float(x))


def _parse(x: str):
    return None if x == "" else float(x)


def trace_to_csv(trace: RunTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRACE_COLUMNS)
    for r in trace.records:
        w.writerow([
            r.step, r.phase, r.sample_type, _fmt(r.accepted_energy), _fmt(r.raw_loss),
            _fmt(r.transformed_loss), _fmt(r.best_so_far), _fmt(r.sampling_time),
            _fmt(r.eval_time), selection_to_hex(r.accepted),
            _fmt(r.batch_energy_mean), _fmt(r.batch_energy_std),
        ])
    return buf.getvalue()


def trace_from_csv(text: str, n: int) -> RunTrace:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames != TRACE_COLUMNS:
        raise ValueError(f"unexpected trace header: {reader.fieldnames}")
    records = []
    for row in reader:
        records.append(StepRecord(
            step=int(row["step"]),
            phase=row["phase"],
            accepted=selection_from_hex(row["selection_hex"], n),
            sample_type=row["sample_type"],
            accepted_energy=_parse(row["accepted_energy"]),
            raw_loss=float(row["raw_loss"]),
            transformed_loss=float(row["transformed_loss"]),
            best_so_far=float(row["best_so_far"]),
            sampling_time=float(row["sampling_time_s"]),
            eval_time=float(row["eval_time_s"]),
            batch_energy_mean=_parse(row["batch_energy_mean"]),
            batch_energy_std=_parse(row["batch_energy_std"]),
        ))
    return RunTrace(records, n)


def config_items(config: EngineConfig) -> dict:
    """Flat key/value view of every engine constant, for run metadata."""
    d = asdict(config)
    out = {}
    for key, value in d.items():
        if isinstance(value, dict):
            for sub, v in value.items():
                out[f"{key}.{sub}"] = v
        else:
            out[key] = value
    return out


def meta_text(config: EngineConfig, extra: dict | None = None) -> str:
    items = config_items(config)
    if extra:
        items.update(extra)
    return "".join(f"{k}={v}\n" for k, v in items.items())
