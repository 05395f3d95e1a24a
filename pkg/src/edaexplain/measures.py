"""Per-column interestingness scoring.

Two built-in measures: exceptionality (how far a column's value distribution
moved through a filter/join/union, as a two-sample KS statistic) and
diversity (coefficient of variation of a group-by aggregate). Custom
measures plug in through a registry. Scoring can optionally run against a
uniform sample of the input rows; everything downstream of scoring always
sees the exact frames.

Categorical supports are ordered lexicographically before computing the KS
statistic. KS over cumulative sums is ordering-sensitive, but applying one
fixed total order to both distributions keeps scores comparable across
columns and runs; this choice is documented behavior, not an approximation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import (
    AttributeNotInInputError,
    DataError,
    EmptyDistributionError,
    NotNumericError,
    SingleGroupError,
    UnknownColumnError,
    ZeroMeanError,
)
from .frame import DataFrame, DiscreteDistribution, DType
from .ops import ExploratoryStep, make_step

MeasureFn = Callable[[ExploratoryStep, str], float]


@dataclass(frozen=True)
class InterestingnessScore:
    attribute: str
    value: float
    measure: str


@dataclass(frozen=True)
class SamplingConfig:
    enabled: bool = False
    sample_size: int = 5000
    seed: int = 0

    def __post_init__(self):
        if self.sample_size < 1:
            raise ValueError("sample_size must be >= 1")


def merge_supports(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.union1d(a, b)


def _aligned_probs(dist: DiscreteDistribution, merged: np.ndarray) -> np.ndarray:
    out = np.zeros(len(merged))
    out[np.searchsorted(merged, dist.support)] = dist.probs
    return out


def ks_statistic(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """Largest absolute CDF gap between two discrete distributions.

    The supremum over the merged support of |CDF_p - CDF_q|, in [0, 1].
    """
    if len(p.support) == 0 or len(q.support) == 0:
        raise EmptyDistributionError("KS statistic needs non-empty distributions")
    merged = merge_supports(p.support, q.support)
    gap = np.cumsum(_aligned_probs(p, merged)) - np.cumsum(_aligned_probs(q, merged))
    return float(np.max(np.abs(gap)))


def ks_from_counts(
    counts_p: np.ndarray, total_p: int, counts_q: np.ndarray, total_q: int
) -> float:
    """KS statistic from aligned integer value counts.

    Cumulative sums stay in integers, so the result carries a single
    rounding per CDF entry regardless of support size. Used by the
    incremental intervention path.
    """
    if total_p <= 0 or total_q <= 0:
        raise EmptyDistributionError("KS statistic needs non-empty distributions")
    gap = np.cumsum(counts_p) / total_p - np.cumsum(counts_q) / total_q
    return float(np.max(np.abs(gap)))


# ---------------------------------------------------------------------------
# Built-in measures

def _frame_ks(before: DataFrame, before_col: str, after: DataFrame, after_col: str) -> float:
    # Counts over the merged support, so equal distributions give exactly 0
    # and the intervention fast path reproduces this arithmetic bit for bit.
    fb, fa = before.factorize(before_col), after.factorize(after_col)
    tb, ta = int(fb.counts.sum()), int(fa.counts.sum())
    if tb == 0 or ta == 0:
        raise EmptyDistributionError(
            f"KS of '{after_col}' needs non-null values on both sides"
        )
    merged = merge_supports(fb.support, fa.support)
    cb = np.zeros(len(merged), dtype=np.int64)
    ca = np.zeros(len(merged), dtype=np.int64)
    cb[np.searchsorted(merged, fb.support)] = fb.counts
    ca[np.searchsorted(merged, fa.support)] = fa.counts
    return ks_from_counts(cb, tb, ca, ta)


def exceptionality(step: ExploratoryStep, attribute: str) -> float:
    """KS distance between a column's distribution before and after the step."""
    step.output.column(attribute)
    if step.kind == "union":
        return max(
            _frame_ks(f, attribute, step.output, attribute) for f in step.inputs
        )
    origin = step.column_provenance.get(attribute)
    if origin is None:
        raise AttributeNotInInputError(
            f"column '{attribute}' does not come from any input frame"
        )
    frame_idx, source = origin
    return _frame_ks(step.inputs[frame_idx], source, step.output, attribute)


def diversity(step: ExploratoryStep, attribute: str) -> float:
    """Coefficient of variation of a numeric output column.

    Sample (n-1) variance; the mean's absolute value in the denominator so
    negative-mean aggregates still score non-negative.
    """
    col = step.output.column(attribute)
    if col.dtype is not DType.NUMERIC:
        raise NotNumericError(f"diversity needs a numeric column, '{attribute}' is not")
    values = col.non_null_values()
    if len(values) < 2:
        raise SingleGroupError(
            f"diversity of '{attribute}' undefined with {len(values)} value(s)"
        )
    mean = float(np.mean(values))
    if mean == 0.0:
        raise ZeroMeanError(f"diversity of '{attribute}' undefined at zero mean")
    return float(np.std(values, ddof=1) / abs(mean))


class MeasureRegistry:
    """Named interestingness functions; 'exceptionality' and 'diversity' built in."""

    def __init__(self):
        self._entries: dict[str, MeasureFn] = {
            "exceptionality": exceptionality,
            "diversity": diversity,
        }

    def register(self, name: str, fn: MeasureFn):
        if name in ("exceptionality", "diversity"):
            raise ValueError(f"cannot replace built-in measure {name!r}")
        self._entries[name] = fn

    def get(self, name: str) -> MeasureFn:
        try:
            return self._entries[name]
        except KeyError:
            raise ValueError(f"unknown measure {name!r}") from None

    def names(self):
        return sorted(self._entries)


DEFAULT_REGISTRY = MeasureRegistry()


def measure_for_step(step: ExploratoryStep) -> str:
    return "diversity" if step.kind == "groupby" else "exceptionality"


def sampled_step(step: ExploratoryStep, sampling: SamplingConfig) -> ExploratoryStep:
    """Re-run the step on a uniform without-replacement sample of each input."""
    rng = np.random.default_rng(sampling.seed)
    reduced = []
    for frame in step.inputs:
        k = min(sampling.sample_size, frame.row_count)
        idx = np.sort(rng.choice(frame.row_count, size=k, replace=False))
        reduced.append(frame.take(idx, name=frame.name))
    return make_step(step.op, reduced)


def _default_targets(step: ExploratoryStep, measure: str) -> list:
    if measure == "diversity":
        keys = set(step.op.keys) if step.kind == "groupby" else set()
        return [
            name
            for name in step.output.column_names
            if name not in keys and step.output.column(name).dtype is DType.NUMERIC
        ]
    if measure == "exceptionality":
        if step.kind == "union":
            return list(step.output.column_names)
        return [
            name
            for name in step.output.column_names
            if step.column_provenance.get(name) is not None
        ]
    return list(step.output.column_names)


def score_all_columns(
    step: ExploratoryStep,
    measure: Optional[str] = None,
    sampling: Optional[SamplingConfig] = None,
    restrict: Optional[list] = None,
    registry: Optional[MeasureRegistry] = None,
    diagnostics: Optional[list] = None,
) -> list[InterestingnessScore]:
    """Score every eligible output column; unscorable columns are skipped.

    Skips (single group, zero mean, all-null, no input lineage) are appended
    to `diagnostics` as (attribute, reason) when a list is passed in. With
    sampling enabled, the step is re-run on sampled inputs and scores come
    from that reduced step.
    """
    registry = registry if registry is not None else DEFAULT_REGISTRY
    name = measure if measure is not None else measure_for_step(step)
    fn = registry.get(name)

    if restrict is not None:
        for attr in restrict:
            if not step.output.has_column(attr):
                raise UnknownColumnError(f"no column '{attr}' in the step output")
        targets = list(restrict)
    else:
        targets = _default_targets(step, name)

    scored = step
    if sampling is not None and sampling.enabled:
        scored = sampled_step(step, sampling)

    results = []
    for attr in targets:
        try:
            value = fn(scored, attr)
        except DataError as exc:
            if diagnostics is not None:
                diagnostics.append((attr, str(exc)))
            continue
        results.append(InterestingnessScore(attr, float(value), name))
    return results
