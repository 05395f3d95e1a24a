"""In-memory columnar dataframe with CSV ingestion and row-removal.

Columns are either Numeric (float64 storage, NaN marks null) or Categorical
(object storage of str, None marks null). The dtype inference rule is
deterministic: a column is Numeric iff every non-null token is a signed
integer or decimal literal with an optional exponent. Tokens such as "nan"
or "inf" therefore come out Categorical, which keeps NaN out of numeric
storage entirely and lets NaN double as the null marker.

Frames are immutable after construction; every mutating-flavoured operation
returns a new frame.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import (
    AllNullError,
    EmptyInputError,
    IndexOutOfRangeError,
    InputFileError,
    ParseError,
    UnknownColumnError,
)

DEFAULT_NULL_TOKENS = ("", "NA", "null")

_NUMERIC_TOKEN_RE = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?\Z")


class DType(Enum):
    NUMERIC = "numeric"
    CATEGORICAL = "categorical"

    def __str__(self):
        return self.value


def is_numeric_token(token: str) -> bool:
    return _NUMERIC_TOKEN_RE.match(token) is not None


class Column:
    """A named, typed value vector.

    Numeric data is a float64 ndarray where NaN encodes null; categorical
    data is an object ndarray of str where None encodes null.
    """

    __slots__ = ("name", "dtype", "data")

    def __init__(self, name: str, dtype: DType, data: np.ndarray):
        self.name = name
        self.dtype = dtype
        self.data = data

    @classmethod
    def numeric(cls, name: str, values: Iterable) -> "Column":
        arr = np.array([np.nan if v is None else float(v) for v in values], dtype=np.float64)
        return cls(name, DType.NUMERIC, arr)

    @classmethod
    def categorical(cls, name: str, values: Iterable) -> "Column":
        arr = np.array([None if v is None else str(v) for v in values], dtype=object)
        return cls(name, DType.CATEGORICAL, arr)

    def __len__(self) -> int:
        return len(self.data)

    def null_mask(self) -> np.ndarray:
        if self.dtype is DType.NUMERIC:
            return np.isnan(self.data)
        return np.array([v is None for v in self.data], dtype=bool)

    def non_null_values(self) -> np.ndarray:
        return self.data[~self.null_mask()]

    def cell(self, i: int):
        """Value at row i as float | str | None."""
        v = self.data[i]
        if self.dtype is DType.NUMERIC:
            return None if np.isnan(v) else float(v)
        return v

    def take(self, indices: np.ndarray) -> "Column":
        return Column(self.name, self.dtype, self.data[indices])


@dataclass(frozen=True)
class Factorization:
    """Sorted distinct non-null values plus per-row integer codes.

    codes[i] is the position of row i's value in ``support`` or -1 for null.
    counts[j] is the number of rows holding support[j].
    """

    support: np.ndarray
    codes: np.ndarray
    counts: np.ndarray

    @property
    def n_values(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probability mass over a sorted support of distinct non-null values."""

    support: np.ndarray
    probs: np.ndarray

    def __len__(self) -> int:
        return len(self.support)

    def as_dict(self) -> dict:
        return {v: float(p) for v, p in zip(self.support, self.probs)}


class DataFrame:
    """Ordered collection of equal-length, uniquely named columns."""

    def __init__(self, name: str, columns: Sequence[Column]):
        columns = list(columns)
        if columns:
            n = len(columns[0])
            for col in columns:
                if len(col) != n:
                    raise ValueError(
                        f"column '{col.name}' has {len(col)} rows, expected {n}"
                    )
        names = [c.name for c in columns]
        if len(set(names)) != len(names):
            raise ValueError("column names must be unique within a frame")
        self.name = name
        self.columns = columns
        self._by_name = {c.name: c for c in columns}
        self._facts: dict[str, Factorization] = {}

    @property
    def row_count(self) -> int:
        return len(self.columns[0]) if self.columns else 0

    @property
    def column_names(self) -> list[str]:
        return [c.name for c in self.columns]

    def has_column(self, name: str) -> bool:
        return name in self._by_name

    def column(self, name: str) -> Column:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownColumnError(
                f"no column '{name}' in frame '{self.name}' "
                f"(has: {', '.join(self.column_names)})"
            ) from None

    def factorize(self, name: str) -> Factorization:
        """Cached factorization of a column; frames are immutable so this is safe."""
        fact = self._facts.get(name)
        if fact is None:
            col = self.column(name)
            mask = ~col.null_mask()
            codes = np.full(self.row_count, -1, dtype=np.int64)
            present = col.data[mask]
            if len(present):
                support, inverse = np.unique(present, return_inverse=True)
                codes[mask] = inverse
                counts = np.bincount(inverse, minlength=len(support)).astype(np.int64)
            else:
                support = present
                counts = np.zeros(0, dtype=np.int64)
            fact = Factorization(support=support, codes=codes, counts=counts)
            self._facts[name] = fact
        return fact

    def take(self, indices: np.ndarray, name: str | None = None) -> "DataFrame":
        indices = np.asarray(indices, dtype=np.int64)
        return DataFrame(name or self.name, [c.take(indices) for c in self.columns])

    def row(self, i: int) -> tuple:
        return tuple(c.cell(i) for c in self.columns)

    def head_rows(self, n: int) -> list[tuple]:
        return [self.row(i) for i in range(min(n, self.row_count))]

    def to_csv(self, target, delimiter: str = ",", null_token: str = "") -> None:
        """Write the frame as RFC-4180 CSV; numerics use shortest round-trip repr."""

        def write(fh):
            writer = csv.writer(fh, delimiter=delimiter, lineterminator="\n")
            writer.writerow(self.column_names)
            cols = [(c.dtype is DType.NUMERIC, c.data) for c in self.columns]
            for i in range(self.row_count):
                row = []
                for is_num, data in cols:
                    v = data[i]
                    if is_num:
                        row.append(null_token if np.isnan(v) else repr(float(v)))
                    else:
                        row.append(null_token if v is None else v)
                writer.writerow(row)

        if isinstance(target, (str, bytes)) or hasattr(target, "__fspath__"):
            with open(target, "w", newline="", encoding="utf-8") as fh:
                write(fh)
        else:
            write(target)

    def to_csv_bytes(self, delimiter: str = ",") -> bytes:
        buf = io.StringIO()
        self.to_csv(buf, delimiter=delimiter)
        return buf.getvalue().encode("utf-8")

    def __repr__(self):
        return f"DataFrame({self.name!r}, {self.row_count} rows, {len(self.columns)} cols)"


class RowIndexSet:
    """Sorted, strictly increasing row positions of one frame."""

    __slots__ = ("frame", "indices")

    def __init__(self, frame: DataFrame, indices):
        arr = np.asarray(indices, dtype=np.int64)
        if arr.ndim != 1:
            arr = arr.reshape(-1)
        if len(arr) and (np.any(arr[1:] <= arr[:-1])):
            arr = np.unique(arr)
        if len(arr) and (arr[0] < 0 or arr[-1] >= frame.row_count):
            raise IndexOutOfRangeError(
                f"row index out of range for frame with {frame.row_count} rows"
            )
        self.frame = frame
        self.indices = arr

    def __len__(self) -> int:
        return len(self.indices)


def remove_rows(frame: DataFrame, drop: RowIndexSet) -> DataFrame:
    """New frame without the given rows; retained rows keep their order."""
    if drop.frame is not frame:
        raise ValueError("row set belongs to a different frame")
    keep = np.ones(frame.row_count, dtype=bool)
    keep[drop.indices] = False
    return frame.take(np.flatnonzero(keep))


def column_distribution(col: Column) -> DiscreteDistribution:
    """Relative frequency of the distinct non-null values of a column."""
    mask = ~col.null_mask()
    present = col.data[mask]
    if len(present) == 0:
        raise AllNullError(f"column '{col.name}' holds no non-null values")
    support, counts = np.unique(present, return_counts=True)
    return DiscreteDistribution(support=support, probs=counts / counts.sum())


def distribution_for(frame: DataFrame, name: str) -> DiscreteDistribution:
    """Column distribution computed off the frame's cached factorization."""
    fact = frame.factorize(name)
    total = int(fact.counts.sum())
    if total == 0:
        raise AllNullError(f"column '{name}' holds no non-null values")
    return DiscreteDistribution(support=fact.support, probs=fact.counts / total)


def _infer_and_build(name: str, tokens: list) -> Column:
    numeric = True
    for t in tokens:
        if t is not None and not is_numeric_token(t):
            numeric = False
            break
    if numeric:
        data = np.array(
            [np.nan if t is None else float(t) for t in tokens], dtype=np.float64
        )
        return Column(name, DType.NUMERIC, data)
    return Column(name, DType.CATEGORICAL, np.array(tokens, dtype=object))


def ingest_csv(
    source,
    delimiter: str = ",",
    header: bool = True,
    null_tokens: Iterable[str] = DEFAULT_NULL_TOKENS,
    name: str | None = None,
) -> DataFrame:
    """Load a CSV file (path or text file object) into a typed DataFrame.

    Dtypes are inferred per column: Numeric iff every non-null token parses
    as a signed integer/decimal literal (optional exponent), else Categorical.
    Tokens in ``null_tokens`` become null cells and do not affect the dtype.
    """
    null_set = set(null_tokens)

    def read(fh, frame_name):
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            first = next(reader)
        except StopIteration:
            raise EmptyInputError("CSV has no rows") from None
        if header:
            names = first
            if len(set(names)) != len(names):
                raise ParseError("duplicate column names in header")
        else:
            names = [f"c{i}" for i in range(len(first))]
        width = len(names)
        raw_cols: list[list] = [[] for _ in range(width)]
        n_rows = 0
        rows = reader if header else _chain_first(first, reader)
        for line_no, row in enumerate(rows, start=2 if header else 1):
            if not row and width == 1:
                row = [""]  # blank line in a one-column file is a null cell
            if len(row) != width:
                raise ParseError(
                    f"row {line_no} has {len(row)} fields, expected {width}"
                )
            for j, tok in enumerate(row):
                raw_cols[j].append(None if tok in null_set else tok)
            n_rows += 1
        if n_rows == 0:
            raise EmptyInputError("CSV has a header but no data rows")
        columns = [_infer_and_build(n, toks) for n, toks in zip(names, raw_cols)]
        return DataFrame(frame_name, columns)

    if isinstance(source, (str, bytes)) or hasattr(source, "__fspath__"):
        import os

        frame_name = name or os.path.splitext(os.path.basename(os.fspath(source)))[0]
        try:
            fh = open(source, "r", newline="", encoding="utf-8")
        except OSError as exc:
            raise InputFileError(f"cannot read {source}: {exc}") from exc
        with fh:
            return read(fh, frame_name)
    return read(source, name or "frame")


def _chain_first(first, rest):
    yield first
    yield from rest


def frame_from_rows(name: str, schema: list[tuple[str, DType]], rows: list[tuple]) -> DataFrame:
    """Convenience constructor used heavily by tests and fixtures."""
    cols = []
    for j, (col_name, dtype) in enumerate(schema):
        dtype = DType(dtype)
        vals = [r[j] for r in rows]
        if dtype is DType.NUMERIC:
            cols.append(Column.numeric(col_name, vals))
        else:
            cols.append(Column.categorical(col_name, vals))
    return DataFrame(name, cols)
