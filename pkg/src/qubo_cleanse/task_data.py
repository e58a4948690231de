"""Noisy majority-bit datasets and selection-vector semantics.

The training split holds ``n_real`` correctly labeled instances followed by
``n_real`` fake copies of the same inputs carrying the minority-bit label.
Validation and test splits are clean.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple

import numpy as np

__all__ = [
    "Instance",
    "Split",
    "Dataset",
    "majority_bit",
    "generate_dataset",
    "filter_train",
    "theoretical_solution",
    "write_dataset_csv",
    "read_dataset_csv",
]

# Above this many patterns a full permutation is too large to materialize.
_SHUFFLE_LIMIT = 1 << 20


class Instance(NamedTuple):
    input: np.ndarray
    label: int


@dataclass(frozen=True)
class Split:
    """An ordered collection of instances stored column-wise.

    ``inputs`` has shape ``(m, b)`` and ``labels`` shape ``(m,)``, both uint8.
    """

    inputs: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=np.uint8)
        labels = np.asarray(self.labels, dtype=np.uint8).reshape(-1)
        if inputs.ndim != 2 or inputs.shape[0] != labels.shape[0]:
            raise ValueError(
                f"inputs {inputs.shape} and labels {labels.shape} do not align"
            )
        inputs.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)

    def __len__(self) -> int:
        return self.labels.shape[0]

    def __iter__(self) -> Iterator[Instance]:
        for x, t in zip(self.inputs, self.labels):
            yield Instance(x, int(t))

    @property
    def b(self) -> int:
        return self.inputs.shape[1]

    @classmethod
    def from_instances(cls, instances, b: int | None = None) -> "Split":
        instances = list(instances)
        if not instances:
            return cls(np.zeros((0, b or 0), dtype=np.uint8), np.zeros(0, dtype=np.uint8))
        inputs = np.array([np.asarray(inst[0]) for inst in instances], dtype=np.uint8)
        labels = np.array([inst[1] for inst in instances], dtype=np.uint8)
        return cls(inputs, labels)


@dataclass(frozen=True)
class Dataset:
    """Train/valid/test splits of the noisy majority-bit task.

    ``train_real[i]`` is True for correctly labeled training instances.
    """

    train: Split
    train_real: np.ndarray
    valid: Split
    test: Split

    def __post_init__(self):
        real = np.asarray(self.train_real, dtype=bool).reshape(-1)
        if real.shape[0] != len(self.train):
            raise ValueError("provenance flags must match the training split length")
        real.setflags(write=False)
        object.__setattr__(self, "train_real", real)

    @property
    def b(self) -> int:
        return self.train.b

    @property
    def n(self) -> int:
        """Number of training instances, i.e. the selection-vector length."""
        return len(self.train)


def majority_bit(x) -> int:
    """Return 1 when more than half of the bits in ``x`` are set."""
    x = np.asarray(x)
    if x.ndim != 1 or x.shape[0] % 2 == 0:
        raise ValueError(f"majority bit needs an odd-length vector, got length {x.size}")
    return int(2 * int(x.sum()) > x.shape[0])


def _majority_rows(inputs: np.ndarray) -> np.ndarray:
    return (2 * inputs.sum(axis=1) > inputs.shape[1]).astype(np.uint8)


def _draw_patterns(b: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """``count`` distinct b-bit patterns as a ``(count, b)`` uint8 array.

    Bit ``c`` of pattern value ``v`` is ``(v >> c) & 1``.
    """
    if (1 << b) <= _SHUFFLE_LIMIT:
        values = rng.permutation(1 << b)[:count]
        return ((values[:, None] >> np.arange(b)) & 1).astype(np.uint8)
    seen: set[bytes] = set()
    rows = []
    while len(rows) < count:
        row = rng.integers(0, 2, size=b, dtype=np.uint8)
        key = row.tobytes()
        if key not in seen:
            seen.add(key)
            rows.append(row)
    return np.array(rows, dtype=np.uint8).reshape(count, b)


def generate_dataset(
    b: int = 9,
    n_real: int = 64,
    n_valid: int = 128,
    n_test: int = 128,
    seed: int = 0,
) -> Dataset:
    """Build a contaminated majority-bit dataset.

    ``n_real + n_valid + n_test`` distinct b-bit patterns are drawn without
    replacement. The first ``n_real`` become training inputs, each used twice:
    once with its majority label (real) and once with the minority label (fake).

    Raises
    ------
    ValueError
        If ``b`` is even or there are not enough distinct patterns.
    """
    if b < 1 or b % 2 == 0:
        raise ValueError(f"bit width must be odd and positive, got {b}")
    if min(n_real, n_valid, n_test) < 0:
        raise ValueError("split sizes must be non-negative")
    total = n_real + n_valid + n_test
    if total > (1 << b):
        raise ValueError(
            f"need {total} distinct patterns but only {1 << b} exist for b={b}"
        )
    rng = np.random.default_rng(seed)
    bits = _draw_patterns(b, total, rng)

    real_x = bits[:n_real]
    valid_x = bits[n_real:n_real + n_valid]
    test_x = bits[n_real + n_valid:]

    real_t = _majority_rows(real_x)
    train = Split(np.vstack([real_x, real_x]), np.concatenate([real_t, 1 - real_t]))
    provenance = np.arange(2 * n_real) < n_real
    return Dataset(
        train=train,
        train_real=provenance,
        valid=Split(valid_x, _majority_rows(valid_x)),
        test=Split(test_x, _majority_rows(test_x)),
    )


def _check_selection(dataset: Dataset, q) -> np.ndarray:
    q = np.asarray(q)
    if q.ndim != 1 or q.shape[0] != dataset.n:
        raise ValueError(
            f"selection length {q.size} does not match {dataset.n} training instances"
        )
    return q.astype(bool)


def filter_train(dataset: Dataset, q) -> Split:
    """Training instances at positions where ``q`` is 1, in order."""
    mask = _check_selection(dataset, q)
    return Split(dataset.train.inputs[mask], dataset.train.labels[mask])


def theoretical_solution(dataset: Dataset) -> np.ndarray:
    """Selection keeping every real instance and dropping every fake one."""
    return dataset.train_real.astype(np.uint8)


# --------------------------------------------------------------------------
# CSV round trip
# --------------------------------------------------------------------------

def _rows(dataset: Dataset):
    for split_name, split in (("train", dataset.train), ("valid", dataset.valid), ("test", dataset.test)):
        for i in range(len(split)):
            if split_name == "train":
                prov = "real" if dataset.train_real[i] else "fake"
            else:
                prov = "clean"
            yield [split_name, i, prov, *(int(v) for v in split.inputs[i]), int(split.labels[i])]


def dataset_to_csv(dataset: Dataset) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["split", "index", "provenance", *(f"x{c}" for c in range(dataset.b)), "label"])
    writer.writerows(_rows(dataset))
    return buf.getvalue()


def write_dataset_csv(dataset: Dataset, path) -> None:
    Path(path).write_text(dataset_to_csv(dataset), encoding="utf-8")


def dataset_from_csv(text: str) -> Dataset:
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    xcols = [h for h in header if h.startswith("x")]
    b = len(xcols)
    if header != ["split", "index", "provenance", *(f"x{c}" for c in range(b)), "label"]:
        raise ValueError(f"unexpected dataset header: {header}")
    parts: dict[str, list] = {"train": [], "valid": [], "test": []}
    provenance = []
    for row in reader:
        if not row:
            continue
        split_name, idx = row[0], int(row[1])
        if split_name not in parts:
            raise ValueError(f"unknown split {split_name!r}")
        if idx != len(parts[split_name]):
            raise ValueError(f"{split_name} rows out of order at index {idx}")
        parts[split_name].append((np.array(row[3:3 + b], dtype=np.uint8), int(row[3 + b])))
        if split_name == "train":
            provenance.append(row[2] == "real")
    return Dataset(
        train=Split.from_instances(parts["train"], b),
        train_real=np.array(provenance, dtype=bool),
        valid=Split.from_instances(parts["valid"], b),
        test=Split.from_instances(parts["test"], b),
    )


def read_dataset_csv(path) -> Dataset:
    return dataset_from_csv(Path(path).read_text(encoding="utf-8"))
