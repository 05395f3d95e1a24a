"""Contribution scoring, candidate assembly, skyline selection, ranking.

The expensive part of explanation generation is the intervention loop:
for every partition bin, remove its rows from the input, re-run the step,
re-score the column, and take the drop. Two execution paths exist:

  - full: literally rebuild the reduced step per bin. Always available,
    used for small frames, min/max aggregates, and custom measures.
  - incremental: joint (bin x value) count matrices turn all per-bin
    reduced scores of one partition into a few bincount/cumsum passes.
    Count arithmetic stays in integers, so results agree with the full
    path to float rounding; a property test pins the equivalence.

Both paths compute the same quantity C(R,A) = I_A(step) - I_A(step without
R); candidates keep bins with positive raw contribution, standardized
against all bins of their partition (population standard deviation - the
choice is pinned by a regression test).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from functools import reduce
from typing import Optional

import numpy as np

from .errors import (
    DataError,
    DegeneratePartitionError,
    EngineError,
    UndefinedContributionError,
)
from .frame import DataFrame, DType, RowIndexSet, remove_rows
from .measures import (
    DEFAULT_REGISTRY,
    InterestingnessScore,
    MeasureRegistry,
    SamplingConfig,
    score_all_columns,
)
from .ops import ExploratoryStep, GroupByOp, make_step
from .partitions import PartitionConfig, RowPartition, RowSet, all_partitions

INCREMENTAL_ROW_THRESHOLD = 20000


@dataclass(frozen=True)
class RankWeights:
    w_i: float = 1.0
    w_c: float = 1.0

    def __post_init__(self):
        if self.w_i < 0 or self.w_c < 0 or self.w_i + self.w_c <= 0:
            raise ValueError("weights must be non-negative with a positive sum")


@dataclass(eq=False)
class ContributionScore:
    raw: float
    standardized: float
    partition: RowPartition
    bin_index: int


@dataclass(eq=False)
class ExplanationCandidate:
    row_set: RowSet
    attribute: str
    interestingness: float
    contribution: ContributionScore


def standardize(scores, target: int) -> float:
    """Z-score of scores[target] against the whole list, population std."""
    arr = np.asarray(scores, dtype=np.float64)
    if arr.size < 2:
        raise DegeneratePartitionError("standardization needs at least two bins")
    s = float(arr.std())
    if s == 0.0:
        raise DegeneratePartitionError("all contributions equal; standardization undefined")
    return float((arr[target] - float(arr.mean())) / s)


# ---------------------------------------------------------------------------
# Full (re-execution) intervention path

def _resolve_rows(step: ExploratoryStep, rows, frame_index):
    if isinstance(rows, RowSet):
        rows = rows.rows
    if isinstance(rows, RowIndexSet):
        for i, f in enumerate(step.inputs):
            if f is rows.frame:
                return i, rows.indices
        raise EngineError("row set does not index any input frame of this step")
    return frame_index, np.asarray(rows, dtype=np.int64)


def intervened_step(step: ExploratoryStep, frame_index: int, rows: np.ndarray) -> ExploratoryStep:
    """Re-execute the operation with `rows` removed from one input frame."""
    frames = list(step.inputs)
    target = frames[frame_index]
    frames[frame_index] = remove_rows(target, RowIndexSet(target, rows))
    return make_step(step.op, frames)


def contribution(
    step: ExploratoryStep,
    rows,
    attribute: str,
    frame_index: int = 0,
    measure: Optional[str] = None,
    registry: Optional[MeasureRegistry] = None,
) -> float:
    """Drop in I_A caused by removing the rows from their input frame.

    `rows` may be a RowSet, a RowIndexSet, or a plain index array (paired
    with frame_index). Raises UndefinedContributionError when the measure
    is undefined on either the full or the reduced step.
    """
    registry = registry if registry is not None else DEFAULT_REGISTRY
    from .measures import measure_for_step

    fn = registry.get(measure if measure is not None else measure_for_step(step))
    frame_index, indices = _resolve_rows(step, rows, frame_index)
    try:
        base = fn(step, attribute)
        reduced = fn(intervened_step(step, frame_index, indices), attribute)
    except DataError as exc:
        raise UndefinedContributionError(str(exc)) from exc
    return base - reduced


def _full_bin_scores(step, part: RowPartition, attribute, fn):
    """(base, per-bin reduced scores) via literal re-execution; NaN = undefined."""
    try:
        base = fn(step, attribute)
    except DataError:
        return None
    out = np.full(part.n_bins, np.nan)
    for b in range(part.n_bins):
        try:
            reduced = intervened_step(step, part.frame_index, part.bin_rows(b))
            out[b] = fn(reduced, attribute)
        except DataError:
            pass
    return base, out


# ---------------------------------------------------------------------------
# Incremental intervention path

# above this many matrix cells, joint counts are built in bin chunks
_JOINT_CELL_CAP = 200_000_000


def _joint_counts(bins, codes, n_bins, m, weights=None):
    """(n_bins, m) counts of (bin, value-code) pairs; negatives ignored."""
    valid = (bins >= 0) & (codes >= 0)
    flat = bins[valid].astype(np.int64) * m + codes[valid]
    if weights is None:
        return np.bincount(flat, minlength=n_bins * m).reshape(n_bins, m)
    return np.bincount(flat, weights=weights[valid], minlength=n_bins * m).reshape(n_bins, m)


class _KSPrep:
    """Shared-support value codes and counts for one scored attribute."""

    def __init__(self, step: ExploratoryStep, attribute: str):
        if step.kind == "union":
            facts = [f.factorize(attribute) for f in step.inputs]
            support = reduce(np.union1d, [f.support for f in facts])
            self.m = len(support)
            self.in_codes = {}
            for j, fact in enumerate(facts):
                if fact.n_values:
                    pos = np.searchsorted(support, fact.support)
                    self.in_codes[j] = np.where(
                        fact.codes >= 0, pos[np.maximum(fact.codes, 0)], -1
                    )
                else:
                    self.in_codes[j] = np.full(len(fact.codes), -1, dtype=np.int64)
            self.out_codes = np.concatenate(
                [self.in_codes[j] for j in range(len(step.inputs))]
            ) if step.inputs else np.zeros(0, np.int64)
            self.dist_frames = list(range(len(step.inputs)))
        else:
            origin = step.column_provenance[attribute]
            fi, src = origin
            fact = step.inputs[fi].factorize(src)
            self.m = fact.n_values
            self.in_codes = {fi: fact.codes}
            out_origin = _origin_in_frame(step, fi)
            self.out_codes = (
                fact.codes[out_origin] if self.m else np.full(len(out_origin), -1, np.int64)
            )
            self.dist_frames = [fi]
        self.in_counts = {}
        self.in_totals = {}
        for j, codes in self.in_codes.items():
            c = np.bincount(codes[codes >= 0], minlength=self.m)
            self.in_counts[j] = c
            self.in_totals[j] = int(c.sum())
        oc = np.bincount(self.out_codes[self.out_codes >= 0], minlength=self.m)
        self.out_counts = oc
        self.out_total = int(oc.sum())

    def base_score(self) -> float:
        if self.out_total == 0 or any(self.in_totals[j] == 0 for j in self.dist_frames):
            return np.nan
        cout = np.cumsum(self.out_counts) / self.out_total
        best = 0.0
        for j in self.dist_frames:
            cin = np.cumsum(self.in_counts[j]) / self.in_totals[j]
            best = max(best, float(np.max(np.abs(cin - cout))))
        return best


def _origin_in_frame(step: ExploratoryStep, fi: int) -> np.ndarray:
    """Originating row in input frame fi per output row; -1 when none."""
    prov = step.provenance
    if prov.kind == "filter":
        return prov.row_origin
    if prov.kind == "join":
        return prov.origins[fi]
    if prov.kind == "union":
        return np.where(prov.frame_origin == fi, prov.union_row_origin, -1)
    raise EngineError(f"no row origins for a {prov.kind} step")


def _ks_bin_scores(step, prep: _KSPrep, part: RowPartition):
    """Per-bin reduced exceptionality for one partition; NaN = undefined."""
    nb, m = part.n_bins, prep.m
    if m == 0 or prep.out_total == 0:
        return np.full(nb, np.nan)
    fi = part.frame_index
    assign = part.assignment

    out_origin = _origin_in_frame(step, fi)
    out_bins = np.where(out_origin >= 0, assign[np.maximum(out_origin, 0)], -1)

    chunk = max(1, min(nb, _JOINT_CELL_CAP // max(m, 1)))
    scores = np.empty(nb)
    cout = np.cumsum(prep.out_counts)

    for lo in range(0, nb, chunk):
        hi = min(nb, lo + chunk)
        sel_out = (out_bins >= lo) & (out_bins < hi)
        j_out = _joint_counts(out_bins[sel_out] - lo, prep.out_codes[sel_out], hi - lo, m)
        out_removed = j_out.sum(axis=1)
        t_out = prep.out_total - out_removed
        cdf_out = (cout[None, :] - np.cumsum(j_out, axis=1)) / np.maximum(t_out, 1)[:, None]

        gap = np.full(hi - lo, -np.inf)
        undefined = t_out == 0
        for j in prep.dist_frames:
            cin = np.cumsum(prep.in_counts[j])
            if j == fi:
                codes = prep.in_codes[j]
                sel_in = (assign >= lo) & (assign < hi)
                j_in = _joint_counts(assign[sel_in] - lo, codes[sel_in], hi - lo, m)
                t_in = prep.in_totals[j] - j_in.sum(axis=1)
                cdf_in = (cin[None, :] - np.cumsum(j_in, axis=1)) / np.maximum(t_in, 1)[:, None]
                undefined |= t_in == 0
            else:
                cdf_in = np.broadcast_to(cin / prep.in_totals[j], (hi - lo, m))
            gap = np.maximum(gap, np.max(np.abs(cdf_in - cdf_out), axis=1))
        gap[undefined] = np.nan
        scores[lo:hi] = gap
    return scores


class _GroupPrep:
    """Group membership and per-aggregate base tallies for a group-by step."""

    def __init__(self, step: ExploratoryStep):
        prov = step.provenance
        self.valid_rows = prov.group_valid_rows
        self.g = prov.group_of_valid_row
        self.n_groups = prov.n_groups
        self.gsize = np.bincount(self.g, minlength=self.n_groups)
        self._agg_cache = {}
        self.step = step

    def agg_tallies(self, src_attr: str):
        """Per-group non-null counts and sums of the source column."""
        if src_attr not in self._agg_cache:
            col = self.step.inputs[0].column(src_attr)
            nn = ~col.null_mask()[self.valid_rows]
            cnt = np.bincount(self.g[nn], minlength=self.n_groups)
            if col.dtype is DType.NUMERIC:
                sums = np.bincount(
                    self.g[nn], weights=col.data[self.valid_rows][nn], minlength=self.n_groups
                )
            else:
                sums = None
            self._agg_cache[src_attr] = (nn, cnt, sums)
        return self._agg_cache[src_attr]


def _cv_or_nan(values: np.ndarray) -> float:
    # mirrors measures.diversity numerics exactly
    if len(values) < 2:
        return np.nan
    mean = float(np.mean(values))
    if mean == 0.0:
        return np.nan
    return float(np.std(values, ddof=1) / abs(mean))


def _diversity_values(prep, step, attribute, alive_row, cnt_row=None, sum_row=None, fn=None):
    """Aggregate values of surviving groups under one bin's removal."""
    if fn is None:  # column carried through unchanged (a group key)
        vals = step.output.column(attribute).data[alive_row]
        return vals[~np.isnan(vals)]
    if fn == "count":
        return cnt_row[alive_row].astype(np.float64)
    present = alive_row & (cnt_row > 0)
    if fn == "sum":
        return sum_row[present]
    return sum_row[present] / np.maximum(cnt_row[present], 1)


def _diversity_bin_scores(step, prep: _GroupPrep, part: RowPartition, attribute, agg_map):
    """(base, per-bin reduced diversity) for mean/sum/count aggregates and keys."""
    nb = part.n_bins
    G = prep.n_groups
    bin_of_valid = part.assignment[prep.valid_rows]
    r_gsize = _joint_counts(bin_of_valid, prep.g, nb, G)
    alive = prep.gsize[None, :] > r_gsize

    if attribute in agg_map:
        src, fn = agg_map[attribute]
        if fn in ("min", "max"):
            return None  # removal can expose a new extremum; full path only
        nn, cnt, sums = prep.agg_tallies(src)
        r_cnt = _joint_counts(bin_of_valid[nn], prep.g[nn], nb, G)
        if fn == "count":
            base = _cv_or_nan(
                _diversity_values(prep, step, attribute, np.ones(G, bool), cnt, None, fn)
            )
            out = np.array(
                [
                    _cv_or_nan(
                        _diversity_values(prep, step, attribute, alive[b], cnt - r_cnt[b], None, fn)
                    )
                    for b in range(nb)
                ]
            )
            return base, out
        col = step.inputs[0].column(src)
        weights = col.data[prep.valid_rows]
        r_sum = _joint_counts(bin_of_valid[nn], prep.g[nn], nb, G, weights=weights[nn])
        base = _cv_or_nan(
            _diversity_values(prep, step, attribute, np.ones(G, bool), cnt, sums, fn)
        )
        out = np.array(
            [
                _cv_or_nan(
                    _diversity_values(
                        prep, step, attribute, alive[b], cnt - r_cnt[b], sums - r_sum[b], fn
                    )
                )
                for b in range(nb)
            ]
        )
        return base, out

    # group-key column: per-group value is fixed, only group survival changes
    base = _cv_or_nan(_diversity_values(prep, step, attribute, np.ones(G, bool)))
    out = np.array(
        [_cv_or_nan(_diversity_values(prep, step, attribute, alive[b])) for b in range(nb)]
    )
    return base, out


# ---------------------------------------------------------------------------
# Candidate assembly

def _incremental_applicable(step, measure_name: str) -> bool:
    if measure_name == "exceptionality":
        return step.kind in ("filter", "join", "union")
    if measure_name == "diversity":
        return step.kind == "groupby"
    return False


def _bin_digest(rows: np.ndarray) -> bytes:
    return hashlib.blake2b(rows.tobytes(), digest_size=16).digest()


def assemble_candidates(
    step: ExploratoryStep,
    scores: list[InterestingnessScore],
    partitions: list[RowPartition],
    registry: Optional[MeasureRegistry] = None,
    exact: Optional[bool] = None,
    incremental_threshold: int = INCREMENTAL_ROW_THRESHOLD,
    diagnostics: Optional[list] = None,
) -> list[ExplanationCandidate]:
    """Score every (partition, attribute, bin) triple; keep raw > 0 winners.

    Raw contributions of all defined bins in a partition form the
    standardization pool. `exact` forces the full path (True) or the
    incremental path (False); None picks by frame size. Semantic duplicates
    (same rows, same attribute, reached through different partitions) keep
    their highest standardized score.
    """
    registry = registry if registry is not None else DEFAULT_REGISTRY
    diags = diagnostics if diagnostics is not None else []
    agg_map = (
        {f"{fn}_{attr}": (attr, fn) for attr, fn in step.op.aggs}
        if isinstance(step.op, GroupByOp)
        else {}
    )

    ks_preps: dict[str, _KSPrep] = {}
    group_prep: Optional[_GroupPrep] = None
    best: dict[tuple, ExplanationCandidate] = {}

    for part in partitions:
        if part.n_bins == 0:
            continue
        frame_rows = step.inputs[part.frame_index].row_count
        for score in scores:
            attr = score.attribute
            use_incremental = (
                exact is not True
                and _incremental_applicable(step, score.measure)
                and (exact is False or frame_rows >= incremental_threshold)
            )
            pair = None
            if use_incremental:
                if score.measure == "exceptionality":
                    if attr not in ks_preps:
                        ks_preps[attr] = _KSPrep(step, attr)
                    prep = ks_preps[attr]
                    base = prep.base_score()
                    pair = None if np.isnan(base) else (base, _ks_bin_scores(step, prep, part))
                else:
                    if group_prep is None:
                        group_prep = _GroupPrep(step)
                    pair = _diversity_bin_scores(step, group_prep, part, attr, agg_map)
            if pair is None:
                pair = _full_bin_scores(step, part, attr, registry.get(score.measure))
            if pair is None:
                diags.append((attr, "interestingness undefined on the full step"))
                continue
            base, reduced = pair
            raws = base - reduced
            defined = np.isfinite(raws)
            n_def = int(defined.sum())
            if n_def < part.n_bins:
                diags.append(
                    (attr, f"{part.n_bins - n_def} bin(s) of {part.method} over "
                           f"'{part.source_attribute}' left the measure undefined")
                )
            if n_def < 2:
                continue
            pool = raws[defined]
            mu = float(pool.mean())
            s = float(pool.std())
            if s == 0.0:
                diags.append(
                    (attr, f"degenerate contributions in {part.method} over "
                           f"'{part.source_attribute}'")
                )
                continue
            for b in np.flatnonzero(defined & (raws > 0)):
                b = int(b)
                rows = part.bin_rows(b)
                key = (part.frame_index, attr, _bin_digest(rows))
                std = (float(raws[b]) - mu) / s
                prior = best.get(key)
                if prior is not None and prior.contribution.standardized >= std:
                    continue
                best[key] = ExplanationCandidate(
                    row_set=part.bin_row_set(b),
                    attribute=attr,
                    interestingness=score.value,
                    contribution=ContributionScore(
                        raw=float(raws[b]),
                        standardized=std,
                        partition=part,
                        bin_index=b,
                    ),
                )

    return list(best.values())


# ---------------------------------------------------------------------------
# Skyline and ranking

def skyline(candidates: list[ExplanationCandidate]) -> list[ExplanationCandidate]:
    """Candidates no other candidate beats on BOTH axes strictly.

    Sweep in decreasing interestingness, carrying the best standardized
    contribution seen among strictly-more-interesting candidates; ties on
    either axis never dominate.
    """
    if not candidates:
        return []
    order = sorted(
        range(len(candidates)),
        key=lambda i: -candidates[i].interestingness,
    )
    kept = set()
    best_c = -np.inf
    i = 0
    while i < len(order):
        j = i
        level = candidates[order[i]].interestingness
        while j < len(order) and candidates[order[j]].interestingness == level:
            j += 1
        group = order[i:j]
        for idx in group:
            # dominated only by a strictly-more-interesting candidate with a
            # strictly higher standardized contribution
            if not candidates[idx].contribution.standardized < best_c:
                kept.add(idx)
        for idx in group:
            best_c = max(best_c, candidates[idx].contribution.standardized)
        i = j
    return [c for i, c in enumerate(candidates) if i in kept]


def rank_top_k(
    candidates: list[ExplanationCandidate], weights: RankWeights, k: int
) -> list[ExplanationCandidate]:
    """Weighted-average ordering, ties by attribute then bin label."""
    if k < 1:
        raise ValueError("k must be >= 1")
    total = weights.w_i + weights.w_c

    def score(c: ExplanationCandidate) -> float:
        return (weights.w_i * c.interestingness + weights.w_c * c.contribution.standardized) / total

    ranked = sorted(candidates, key=lambda c: (-score(c), c.attribute, c.row_set.label))
    return ranked[:k]


# ---------------------------------------------------------------------------
# Pipeline driver

@dataclass
class ExplainConfig:
    bin_counts: tuple = (5, 10)
    sampling: Optional[SamplingConfig] = None
    measure: Optional[str] = None
    columns: Optional[list] = None
    top_k: Optional[int] = None
    weights: RankWeights = field(default_factory=RankWeights)
    mine_m2o: bool = True
    custom_partitions: tuple = ()
    exact_interventions: Optional[bool] = None
    incremental_threshold: int = INCREMENTAL_ROW_THRESHOLD
    registry: Optional[MeasureRegistry] = None
    diagnostics: Optional[list] = None


def explain_step(step: ExploratoryStep, config: Optional[ExplainConfig] = None) -> list:
    """Full pipeline: score columns, partition inputs, pick the skyline.

    Returns rendered Explanations in deterministic rank order (all skyline
    members unless top_k truncates).
    """
    from .render import render_candidate

    cfg = config if config is not None else ExplainConfig()
    diags = cfg.diagnostics if cfg.diagnostics is not None else []

    scores = score_all_columns(
        step,
        measure=cfg.measure,
        sampling=cfg.sampling,
        restrict=cfg.columns,
        registry=cfg.registry,
        diagnostics=diags,
    )
    if not scores:
        return []
    partitions = all_partitions(
        step,
        PartitionConfig(
            bin_counts=tuple(cfg.bin_counts),
            mine_m2o=cfg.mine_m2o,
            custom=tuple(cfg.custom_partitions),
        ),
    )
    candidates = assemble_candidates(
        step,
        scores,
        partitions,
        registry=cfg.registry,
        exact=cfg.exact_interventions,
        incremental_threshold=cfg.incremental_threshold,
        diagnostics=diags,
    )
    winners = skyline(candidates)
    ranked = rank_top_k(winners, cfg.weights, cfg.top_k if cfg.top_k else max(len(winners), 1))
    explanations = []
    for cand in ranked:
        rendered = render_candidate(cand, step)
        if rendered is None:
            diags.append((cand.attribute, f"bin '{cand.row_set.label}' maps to no output group"))
            continue
        explanations.append(rendered)
    return explanations
