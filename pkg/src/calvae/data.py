"""Parsing, filtering, normalization, splitting and batching of the
hourly multi-sensor air-quality CSV distribution.

The source format: semicolon-delimited, comma decimal marks, a header row,
-200 as the missing-value sentinel, and trailing empty fields on every line.
"""
from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime

import numpy as np

from .errors import (
    DegenerateColumnError,
    EmptyDataError,
    ParseError,
    SchemaError,
)

MISSING = -200.0

INPUT_COLUMNS = ("PT08.S1(CO)", "PT08.S2(NMHC)", "PT08.S3(NOx)", "PT08.S4(NO2)")
TARGET_COLUMNS = ("CO(GT)", "NMHC(GT)", "NOx(GT)", "NO2(GT)")
FRAME_COLUMNS = INPUT_COLUMNS + TARGET_COLUMNS


@dataclass
class RawRecord:
    """One data row: timestamp plus every numeric column, sentinel included."""

    timestamp: datetime
    values: dict[str, float]

    def is_missing(self, column: str) -> bool:
        return self.values[column] == MISSING


@dataclass(frozen=True)
class SensorFrame:
    """Complete rows only, chronological order, no sentinel left anywhere.

    inputs holds the four MOS responses, targets the four reference
    concentrations, column order as in INPUT_COLUMNS / TARGET_COLUMNS.
    """

    timestamps: tuple[datetime, ...]
    inputs: np.ndarray  # (n, 4)
    targets: np.ndarray  # (n, 4)

    def __post_init__(self):
        if self.inputs.shape != (len(self.timestamps), len(INPUT_COLUMNS)):
            raise SchemaError("inputs shape does not match row count")
        if self.targets.shape != (len(self.timestamps), len(TARGET_COLUMNS)):
            raise SchemaError("targets shape does not match row count")
        self.inputs.setflags(write=False)
        self.targets.setflags(write=False)

    def __len__(self) -> int:
        return len(self.timestamps)

    def column(self, name: str) -> np.ndarray:
        if name in INPUT_COLUMNS:
            return self.inputs[:, INPUT_COLUMNS.index(name)]
        if name in TARGET_COLUMNS:
            return self.targets[:, TARGET_COLUMNS.index(name)]
        raise SchemaError(f"unknown column {name!r}")

    def take(self, start: int, stop: int) -> "SensorFrame":
        return SensorFrame(self.timestamps[start:stop],
                           self.inputs[start:stop].copy(),
                           self.targets[start:stop].copy())


def _parse_number(text: str) -> float:
    return float(text.replace(",", "."))


def parse_csv(source) -> list[RawRecord]:
    """Parse the raw distribution into one RawRecord per data row.

    source may be a path, a byte stream, or a text stream. Decimal commas are
    converted, trailing empty fields and blank lines are ignored, and the
    header row is consumed. Malformed rows raise ParseError with the 1-based
    line number.
    """
    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    else:
        raw = source.read()
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
        lines = raw.splitlines()

    if not lines:
        raise ParseError(1, "empty file, header expected")

    def split_fields(line: str) -> list[str]:
        fields = line.split(";")
        while fields and fields[-1].strip() == "":
            fields.pop()
        return fields

    header = split_fields(lines[0])
    if "Date" not in header or "Time" not in header:
        raise ParseError(1, "header row with Date and Time columns expected")
    value_columns = [c for c in header if c not in ("Date", "Time")]

    records: list[RawRecord] = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip().strip(";"):
            continue  # the distribution ends with blank / semicolon-only lines
        fields = split_fields(line)
        if len(fields) != len(header):
            raise ParseError(
                lineno, f"expected {len(header)} fields, got {len(fields)}")
        row = dict(zip(header, fields))
        try:
            timestamp = datetime.strptime(
                f"{row['Date']} {row['Time']}", "%d/%m/%Y %H.%M.%S")
        except ValueError as exc:
            raise ParseError(lineno, f"bad timestamp: {exc}") from None
        values = {}
        for col in value_columns:
            try:
                values[col] = _parse_number(row[col])
            except ValueError:
                raise ParseError(
                    lineno, f"unparseable number {row[col]!r} in {col!r}") from None
        records.append(RawRecord(timestamp, values))
    return records


def filter_complete(records: list[RawRecord]) -> SensorFrame:
    """Keep exactly the rows where all 4 inputs and all 4 targets report.

    Chronological order is preserved. An empty result means the wrong file
    was supplied.
    """
    timestamps = []
    inputs = []
    targets = []
    for rec in records:
        if any(rec.is_missing(c) for c in FRAME_COLUMNS):
            continue
        timestamps.append(rec.timestamp)
        inputs.append([rec.values[c] for c in INPUT_COLUMNS])
        targets.append([rec.values[c] for c in TARGET_COLUMNS])
    if not timestamps:
        raise EmptyDataError(
            "no complete rows found; is this the expected sensor CSV?")
    return SensorFrame(tuple(timestamps),
                       np.array(inputs, dtype=np.float64),
                       np.array(targets, dtype=np.float64))


def load_frame(path) -> SensorFrame:
    """parse_csv + filter_complete in one call."""
    return filter_complete(parse_csv(path))


@dataclass(frozen=True)
class Normalizer:
    """Per-column min-max scale: x' = (x - min) / (max - min). Invertible."""

    columns: tuple[str, ...]
    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        self.mins.setflags(write=False)
        self.maxs.setflags(write=False)

    def _check(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        k = len(self.columns)
        if k == 1:
            return values  # single-column normalizers act elementwise
        if values.shape[-1] != k:
            raise SchemaError(
                f"last axis {values.shape[-1]} does not match the "
                f"{k} normalized columns")
        return values

    def apply(self, values):
        return (self._check(values) - self.mins) / (self.maxs - self.mins)

    def invert(self, values):
        """Exact algebraic inverse; accepts values outside [0, 1]."""
        return self._check(values) * (self.maxs - self.mins) + self.mins


def fit_normalizer(frame: SensorFrame, columns) -> Normalizer:
    """Record per-column min and max over all frame rows."""
    columns = tuple(columns)
    mins = []
    maxs = []
    for col in columns:
        v = frame.column(col)
        lo, hi = float(v.min()), float(v.max())
        if hi <= lo:
            raise DegenerateColumnError(
                f"column {col!r} is constant ({lo}); cannot min-max scale")
        mins.append(lo)
        maxs.append(hi)
    if len(columns) == 1:
        # 0-d arrays so a single-column normalizer broadcasts over any shape
        return Normalizer(columns, np.array(mins[0]), np.array(maxs[0]))
    return Normalizer(columns, np.array(mins), np.array(maxs))


def split_train_eval(frame: SensorFrame, train_count: int):
    """First train_count rows train the model; the rest evaluate it."""
    if not 0 < train_count < len(frame):
        raise SchemaError(
            f"train_count must be in (0, {len(frame)}), got {train_count}")
    return frame.take(0, train_count), frame.take(train_count, len(frame))


def batch_indices(n_rows: int, batch_size: int, rng: np.random.Generator):
    """One epoch of batches: a random permutation of 0..n_rows-1 cut into
    consecutive chunks of batch_size (the last chunk may be short)."""
    if batch_size < 1:
        raise SchemaError(f"batch_size must be >= 1, got {batch_size}")
    perm = rng.permutation(n_rows)
    return [perm[i:i + batch_size] for i in range(0, n_rows, batch_size)]


def batches(train: SensorFrame, batch_size: int, seed: int):
    """Seeded single-epoch batching over a training frame."""
    return batch_indices(len(train), batch_size, np.random.default_rng(seed))


def correlation_matrix(frame: SensorFrame) -> np.ndarray:
    """Pearson coefficients over all 8 columns, ordered FRAME_COLUMNS."""
    stacked = np.vstack([frame.column(c) for c in FRAME_COLUMNS])
    for col, row in zip(FRAME_COLUMNS, stacked):
        if np.ptp(row) == 0:
            raise DegenerateColumnError(
                f"column {col!r} is constant; correlation undefined")
    corr = np.corrcoef(stacked)
    # exact unit diagonal and symmetry regardless of rounding
    corr = (corr + corr.T) / 2.0
    np.fill_diagonal(corr, 1.0)
    return corr
