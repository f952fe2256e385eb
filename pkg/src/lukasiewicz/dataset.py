"""Tabular truth-value datasets with a CSV + ``.meta`` sidecar format.

Every row is an object key followed by one value in S_n per attribute.  The
sidecar lists the resolution and which attributes play the input and output
roles, so a dataset doubles as a view from objects to attributes.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from math import lcm
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .logic import ShapeMismatch, TruthValue, parse_fraction
from .relations import FiniteView


class DatasetError(ValueError):
    pass


@dataclass
class Dataset:
    keys: list[str]
    columns: list[str]
    numerators: np.ndarray
    n: int
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.keys = [str(k) for k in self.keys]
        self.columns = list(self.columns)
        self.numerators = np.asarray(self.numerators, dtype=np.int64).reshape(
            len(self.keys), len(self.columns))
        if self.n < 1:
            raise DatasetError("resolution must be at least 1")
        if len(set(self.keys)) != len(self.keys):
            raise DatasetError("keys must be unique")
        if len(set(self.columns)) != len(self.columns):
            raise DatasetError("column names must be unique")
        if self.numerators.size and (self.numerators.min() < 0 or self.numerators.max() > self.n):
            raise DatasetError(f"values must lie in S_{self.n}")
        if not self.inputs and not self.outputs:
            self.inputs = list(self.columns)
        for name in self.inputs + self.outputs:
            if name not in self.columns:
                raise DatasetError(f"unknown column {name!r}")

    @classmethod
    def from_rows(cls, columns: Sequence[str], rows: Iterable[Sequence[int]], n: int,
                  keys: Sequence[str] | None = None, inputs=(), outputs=()) -> "Dataset":
        data = np.array(list(rows), dtype=np.int64).reshape(-1, len(columns))
        if keys is None:
            keys = [f"o{i}" for i in range(len(data))]
        return cls(list(keys), list(columns), data, n, list(inputs), list(outputs))

    def __len__(self):
        return len(self.keys)

    @property
    def shape(self) -> tuple[int, int]:
        return self.numerators.shape

    def index(self, name: str) -> int:
        try:
            return self.columns.index(name)
        except ValueError:
            raise DatasetError(f"unknown column {name!r}") from None

    def column(self, name: str) -> np.ndarray:
        return self.numerators[:, self.index(name)] / self.n

    def matrix(self, names: Sequence[str]) -> np.ndarray:
        """Real-valued submatrix for ``names`` (rows × len(names))."""
        return self.numerators[:, [self.index(c) for c in names]] / self.n

    def value(self, key: str, name: str) -> TruthValue:
        return TruthValue(int(self.numerators[self.keys.index(key), self.index(name)]), self.n)

    def select(self, inputs: Sequence[str], outputs: Sequence[str]) -> "Dataset":
        cols = list(inputs) + [c for c in outputs if c not in inputs]
        idx = [self.index(c) for c in cols]
        return Dataset(self.keys, cols, self.numerators[:, idx], self.n, list(inputs), list(outputs))

    def unique_rows(self, names: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
        """Distinct numerator rows over ``names`` with their multiplicities."""
        sub = self.numerators[:, [self.index(c) for c in names]]
        rows, counts = np.unique(sub, axis=0, return_counts=True)
        return rows, counts

    def view(self) -> FiniteView:
        """The dataset as a view O ⇀ attributes: R(o, α) is the value of α for o."""
        entries = {}
        for i, key in enumerate(self.keys):
            for j, name in enumerate(self.columns):
                if self.numerators[i, j]:
                    entries[(key, name)] = Fraction(int(self.numerators[i, j]), self.n)
        return FiniteView([("O", tuple(self.keys))], [("attribute", tuple(self.columns))], entries)

    # -- serialization --------------------------------------------------------

    def to_csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key"] + self.columns)
        for key, row in zip(self.keys, self.numerators):
            w.writerow([key] + [str(TruthValue(int(v), self.n)) for v in row])
        return buf.getvalue()

    def meta_text(self) -> str:
        return (f"kind: dataset\nlogic: {self.n}\ninputs: {' '.join(self.inputs)}\n"
                f"outputs: {' '.join(self.outputs)}\n")

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.to_csv_text(), encoding="utf-8")
        meta_path(path).write_text(self.meta_text(), encoding="utf-8")
        return path


def meta_path(path: str | Path) -> Path:
    return Path(path).with_suffix(".meta")


def read_meta(path: str | Path) -> dict[str, str]:
    """Parse a ``key: value`` sidecar; missing file gives an empty dict."""
    p = meta_path(path)
    if not p.exists():
        return {}
    meta = {}
    for lineno, line in enumerate(p.read_text(encoding="utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise DatasetError(f"{p}:{lineno}: expected 'key: value'")
        k, v = line.split(":", 1)
        meta[k.strip()] = v.strip()
    return meta


def parse_csv(text: str, n: int | None = None) -> tuple[list[str], list[str], list[list[Fraction]]]:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.reader(lines)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DatasetError("empty dataset file") from None
    if not header or header[0] != "key":
        raise DatasetError("first header column must be 'key'")
    keys, rows = [], []
    for lineno, rec in enumerate(reader, 2):
        if len(rec) != len(header):
            raise DatasetError(f"row {lineno}: expected {len(header)} fields, got {len(rec)}")
        keys.append(rec[0].strip())
        try:
            rows.append([parse_fraction(v) for v in rec[1:]])
        except ValueError as err:
            raise DatasetError(f"row {lineno}: {err}") from None
    return header[1:], keys, rows


def read_dataset(path: str | Path, n: int | None = None) -> Dataset:
    path = Path(path)
    meta = read_meta(path)
    columns, keys, rows = parse_csv(path.read_text(encoding="utf-8"))
    if n is None and "logic" in meta:
        n = int(meta["logic"])
    if n is None:
        n = lcm(1, *(v.denominator for row in rows for v in row))
    nums = []
    for i, row in enumerate(rows):
        out = []
        for v in row:
            k = v * n
            if k.denominator != 1 and abs(k - round(k)) < Fraction(1, 10**3):
                k = Fraction(round(k))  # rounded decimals such as 0.3333
            if k.denominator != 1 or not 0 <= k <= n:
                raise DatasetError(f"row {i + 2}: value {v} is not in S_{n}")
            out.append(int(k))
        nums.append(out)
    inputs = meta.get("inputs", "").split()
    outputs = meta.get("outputs", "").split()
    return Dataset(keys, columns, np.array(nums, dtype=np.int64).reshape(len(keys), len(columns)),
                   n, inputs, outputs)


def check_same_resolution(*datasets: Dataset) -> int:
    ns = {d.n for d in datasets}
    if len(ns) != 1:
        raise ShapeMismatch(f"datasets use different resolutions: {sorted(ns)}")
    return ns.pop()
