"""Row partitions: split an input frame into labeled bins plus an ignore-set.

Three built-in methods:
  - frequency: one bin per most-prevalent value of a column
  - numeric equal-frequency: quantile intervals, ties never split
  - many-to-one: bins keyed by a column the partition attribute maps onto
    functionally and strictly coarsely (year -> decade)

Custom schemes register by name and are validated against a sample frame.

A partition is stored as a dense assignment array (row -> bin id, -1 for the
ignore-set); explicit RowSet index lists materialize lazily since the fast
intervention path only ever needs the assignment.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import (
    AllNullError,
    DegeneratePartitionError,
    IndexOutOfRangeError,
    NotManyToOneError,
    NotNumericError,
)
from .frame import DataFrame, DType, RowIndexSet

FREQUENCY = "frequency"
NUMERIC_EQUAL_FREQ = "numeric_equal_freq"
MANY_TO_ONE = "many_to_one"

IGNORE_LABEL = "other"


@dataclass(frozen=True)
class ValueBin:
    value: object


@dataclass(frozen=True)
class IntervalBin:
    lo: float
    hi: float


@dataclass(frozen=True)
class MappedValueBin:
    via_attribute: str
    value: object


BinKind = Union[ValueBin, IntervalBin, MappedValueBin]


@dataclass(frozen=True)
class RowSet:
    rows: RowIndexSet
    label: str
    source_attribute: str
    bin_kind: Optional[BinKind]  # None only for the ignore-set

    @property
    def size(self) -> int:
        return len(self.rows.indices)


def format_value(v) -> str:
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if f.is_integer() and abs(f) < 1e16:
            return str(int(f))
        return repr(f)
    return str(v)


class RowPartition:
    """Disjoint bins R_1..R_n plus an ignore-set covering one frame's rows."""

    def __init__(
        self,
        frame: DataFrame,
        source_attribute: str,
        method: str,
        n: int,
        assignment: np.ndarray,
        labels,
        kinds,
        frame_index: int = 0,
    ):
        self.frame = frame
        self.source_attribute = source_attribute
        self.method = method
        self.n = n
        self.assignment = np.ascontiguousarray(assignment, dtype=np.int32)
        self.labels = list(labels)
        self.kinds = list(kinds)
        self.frame_index = frame_index
        self._groups = None
        validate_partition(self)

    @property
    def n_bins(self) -> int:
        return len(self.labels)

    def bin_sizes(self) -> np.ndarray:
        return np.bincount(self.assignment + 1, minlength=self.n_bins + 1)[1:]

    def _materialize(self):
        if self._groups is None:
            order = np.argsort(self.assignment, kind="stable").astype(np.int64)
            marks = np.searchsorted(self.assignment[order], np.arange(-1, self.n_bins + 1))
            self._groups = [
                order[marks[i] : marks[i + 1]] for i in range(len(marks) - 1)
            ]
        return self._groups

    def bin_rows(self, b: int) -> np.ndarray:
        """Sorted row indices of bin b (-1 for the ignore-set)."""
        return self._materialize()[b + 1]

    def bin_row_set(self, b: int) -> RowSet:
        return RowSet(
            rows=RowIndexSet(self.frame, self.bin_rows(b)),
            label=self.labels[b],
            source_attribute=self.source_attribute,
            bin_kind=self.kinds[b],
        )

    @property
    def bins(self) -> tuple[RowSet, ...]:
        groups = self._materialize()
        return tuple(
            RowSet(
                rows=RowIndexSet(self.frame, groups[b + 1]),
                label=self.labels[b],
                source_attribute=self.source_attribute,
                bin_kind=self.kinds[b],
            )
            for b in range(self.n_bins)
        )

    @property
    def ignore_set(self) -> RowSet:
        return RowSet(
            rows=RowIndexSet(self.frame, self._materialize()[0]),
            label=IGNORE_LABEL,
            source_attribute=self.source_attribute,
            bin_kind=None,
        )

    @classmethod
    def from_row_sets(
        cls,
        frame: DataFrame,
        source_attribute: str,
        method: str,
        n: int,
        bins,
        frame_index: int = 0,
    ) -> "RowPartition":
        """Build from explicit (label, kind, row indices) triples.

        Rows not claimed by any bin form the ignore-set; overlapping bins
        are rejected.
        """
        assignment = np.full(frame.row_count, -1, dtype=np.int32)
        labels, kinds = [], []
        for b, (label, kind, indices) in enumerate(bins):
            idx = np.asarray(indices, dtype=np.int64)
            if len(idx) and (idx.min() < 0 or idx.max() >= frame.row_count):
                raise IndexOutOfRangeError(f"bin {label!r} indexes outside the frame")
            if np.any(assignment[idx] != -1):
                raise DegeneratePartitionError(f"bin {label!r} overlaps an earlier bin")
            assignment[idx] = b
            labels.append(label)
            kinds.append(kind)
        return cls(frame, source_attribute, method, n, assignment, labels, kinds, frame_index)


def validate_partition(part: RowPartition):
    if len(part.labels) != len(part.kinds):
        raise DegeneratePartitionError("labels and bin kinds out of step")
    if any(not isinstance(l, str) or not l for l in part.labels):
        raise DegeneratePartitionError("every bin needs a non-empty label")
    if len(part.assignment) != part.frame.row_count:
        raise DegeneratePartitionError("assignment length != frame row count")
    if len(part.assignment):
        lo, hi = int(part.assignment.min()), int(part.assignment.max())
        if lo < -1 or hi >= part.n_bins:
            raise DegeneratePartitionError("assignment references unknown bins")


# ---------------------------------------------------------------------------
# Built-in methods

def frequency_partition(frame: DataFrame, attribute: str, n: int) -> RowPartition:
    """One bin per each of the n most frequent non-null values.

    Ties broken by (count desc, value asc); everything else, nulls included,
    goes to the ignore-set.
    """
    fact = frame.factorize(attribute)
    k = min(n, fact.n_values)
    top = np.argsort(-fact.counts, kind="stable")[:k]
    code_to_bin = np.full(max(fact.n_values, 1), -1, dtype=np.int32)
    code_to_bin[top] = np.arange(k, dtype=np.int32)
    assignment = np.where(
        fact.codes >= 0, code_to_bin[np.maximum(fact.codes, 0)], np.int32(-1)
    )
    labels = [format_value(fact.support[i]) for i in top]
    kinds = [ValueBin(_plain(fact.support[i])) for i in top]
    return RowPartition(frame, attribute, FREQUENCY, n, assignment, labels, kinds)


def _plain(v):
    if isinstance(v, np.floating):
        return float(v)
    return v


def numeric_partition(frame: DataFrame, attribute: str, n: int) -> RowPartition:
    """Equal-frequency interval bins over a numeric column.

    Boundary rule: each cut lands after the first value whose cumulative
    count reaches the quantile target, so equal values never straddle two
    bins. Only null rows fall in the ignore-set.
    """
    col = frame.column(attribute)
    if col.dtype is not DType.NUMERIC:
        raise NotNumericError(f"equal-frequency bins need a numeric column, got '{attribute}'")
    fact = frame.factorize(attribute)
    if fact.n_values == 0:
        raise AllNullError(f"column '{attribute}' has no non-null values to bin")

    cum = np.cumsum(fact.counts)
    total = int(cum[-1])
    targets = total * np.arange(1, n) / n
    cuts = np.searchsorted(cum, targets, side="left")
    cuts = np.unique(cuts[cuts < fact.n_values - 1])

    starts = np.concatenate([[0], cuts + 1])
    ends = np.concatenate([cuts, [fact.n_values - 1]])
    code_to_bin = np.searchsorted(ends, np.arange(fact.n_values), side="left").astype(np.int32)
    assignment = np.where(
        fact.codes >= 0, code_to_bin[np.maximum(fact.codes, 0)], np.int32(-1)
    )
    labels = [
        f"[{format_value(fact.support[s])}, {format_value(fact.support[e])}]"
        for s, e in zip(starts, ends)
    ]
    kinds = [
        IntervalBin(float(fact.support[s]), float(fact.support[e]))
        for s, e in zip(starts, ends)
    ]
    return RowPartition(frame, attribute, NUMERIC_EQUAL_FREQ, n, assignment, labels, kinds)


def _functional_and_coarser(frame: DataFrame, a: str, b: str) -> bool:
    fa, fb = frame.factorize(a), frame.factorize(b)
    valid = (fa.codes >= 0) & (fb.codes >= 0)
    if not np.any(valid):
        return False
    ca = fa.codes[valid].astype(np.int64)
    cb = fb.codes[valid].astype(np.int64)
    pairs = np.unique(ca * max(fb.n_values, 1) + cb)
    left = pairs // max(fb.n_values, 1)
    n_a = len(np.unique(left))
    if n_a != len(pairs):  # some A value maps to two B values
        return False
    n_b = len(np.unique(pairs % max(fb.n_values, 1)))
    return n_b < n_a


def mine_many_to_one(frame: DataFrame, attribute: str) -> list[str]:
    """Columns B that attribute maps onto functionally and strictly coarsely.

    Both conditions are checked on the distinct (A, B) value pairs, ignoring
    rows null in either column.
    """
    frame.column(attribute)
    return [
        b
        for b in frame.column_names
        if b != attribute and _functional_and_coarser(frame, attribute, b)
    ]


def many_to_one_partition(frame: DataFrame, attribute: str, via: str, n: int) -> RowPartition:
    """Frequency bins over `via`, labeled by its values, keyed to `attribute`."""
    if not _functional_and_coarser(frame, attribute, via):
        raise NotManyToOneError(
            f"'{attribute}' has no many-to-one relationship with '{via}'"
        )
    base = frequency_partition(frame, via, n)
    kinds = [MappedValueBin(via, k.value) for k in base.kinds]
    return RowPartition(
        frame, attribute, MANY_TO_ONE, n, base.assignment, base.labels, kinds
    )


# ---------------------------------------------------------------------------
# Custom schemes

SchemeFn = Callable[[DataFrame], list]

_SCHEMES: dict[str, SchemeFn] = {}


def register_partition_scheme(name: str, fn: SchemeFn, sample_frame: DataFrame):
    """Register a custom scheme after validating its output on a sample frame."""
    produced = fn(sample_frame)
    if not isinstance(produced, (list, tuple)):
        raise DegeneratePartitionError(f"scheme {name!r} must return a list of partitions")
    for part in produced:
        if not isinstance(part, RowPartition) or part.frame is not sample_frame:
            raise DegeneratePartitionError(
                f"scheme {name!r} must partition the frame it was given"
            )
        validate_partition(part)
    _SCHEMES[name] = fn


def registered_schemes() -> list[str]:
    return sorted(_SCHEMES)


# ---------------------------------------------------------------------------
# Enumeration over a step's inputs

@dataclass(frozen=True)
class PartitionConfig:
    bin_counts: tuple = (5, 10)
    mine_m2o: bool = True
    # frequency/m2o mining over huge-cardinality numeric keys is rarely
    # meaningful and never cheap; opt in by raising the cap
    m2o_max_distinct: int = 1000
    custom: tuple = ()


def _partition_signature(part: RowPartition):
    via = part.kinds[0].via_attribute if part.kinds and isinstance(part.kinds[0], MappedValueBin) else None
    return (part.frame_index, part.method, part.source_attribute, via, tuple(part.labels))


def all_partitions(step, config: Optional[PartitionConfig] = None) -> list[RowPartition]:
    """Every applicable (input frame, method, attribute, bin count) partition.

    Partitions always split input-frame rows, never output rows; multi-input
    steps get partitions per input. Identical partitions produced under two
    bin counts (fewer distinct values than bins) are emitted once.
    """
    config = config if config is not None else PartitionConfig()
    out: list[RowPartition] = []
    seen = set()

    def add(part: RowPartition, frame_index: int):
        part.frame_index = frame_index
        sig = _partition_signature(part)
        if sig not in seen:
            seen.add(sig)
            out.append(part)

    for fi, frame in enumerate(step.inputs):
        if frame.row_count == 0:
            continue
        m2o_pairs = []
        if config.mine_m2o:
            for a in frame.column_names:
                fact = frame.factorize(a)
                if (
                    frame.column(a).dtype is DType.NUMERIC
                    and fact.n_values > config.m2o_max_distinct
                ):
                    continue
                for b in mine_many_to_one(frame, a):
                    m2o_pairs.append((a, b))
        for n in config.bin_counts:
            for a in frame.column_names:
                add(frequency_partition(frame, a, n), fi)
                col = frame.column(a)
                if col.dtype is DType.NUMERIC and frame.factorize(a).n_values > 0:
                    add(numeric_partition(frame, a, n), fi)
            for a, b in m2o_pairs:
                add(many_to_one_partition(frame, a, b, n), fi)
        for name in config.custom:
            fn = _SCHEMES[name]
            for part in fn(frame):
                part.method = f"custom:{name}"
                validate_partition(part)
                add(part, fi)

    return out
