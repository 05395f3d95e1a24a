"""Turn winning candidates into captioned chart specifications.

Filter/join/union candidates become side-by-side bars (each bin's share of
input rows next to its share of result rows); group-by candidates become a
bar per bin of mean aggregate values with a horizontal overall-mean line.
The engine emits specs, not images; the optional SVG writer exists for the
CLI, the web client renders natively.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Optional

import numpy as np

from .ops import ExploratoryStep, pretty_print
from .partitions import IntervalBin, MappedValueBin, RowPartition
from .pipeline import ExplanationCandidate, _joint_counts

SIDE_BY_SIDE = "side_by_side_bars"
MEAN_LINE_BARS = "bars_with_mean_line"

SCHEMA_VERSION = "1"


@dataclass(frozen=True, eq=False)
class ChartGroup:
    label: str
    left_value: Optional[float] = None
    right_value: Optional[float] = None
    value: Optional[float] = None


@dataclass(frozen=True, eq=False)
class ChartSpec:
    kind: str
    groups: tuple
    highlighted: str
    axis_titles: dict
    mean_line: Optional[float] = None


@dataclass(frozen=True, eq=False)
class Explanation:
    candidate: ExplanationCandidate
    chart: ChartSpec
    caption: str


def _condition_text(candidate: ExplanationCandidate) -> str:
    kind = candidate.row_set.bin_kind
    label = candidate.row_set.label
    if isinstance(kind, MappedValueBin):
        return f"{kind.via_attribute} = {label}"
    if isinstance(kind, IntervalBin):
        return f"{candidate.row_set.source_attribute} in {label}"
    return f"{candidate.row_set.source_attribute} = {label}"


def _pct(v: float) -> str:
    return f"{100.0 * v:.1f}%"


def render_exceptionality(
    candidate: ExplanationCandidate, step: ExploratoryStep, partition: RowPartition
) -> Explanation:
    """Before/after share of rows per bin, the candidate's bin highlighted."""
    fi = partition.frame_index
    frame = step.inputs[fi]
    n_in = frame.row_count
    n_out = step.output.row_count

    from .pipeline import _origin_in_frame

    origin = _origin_in_frame(step, fi)
    out_bins = np.where(origin >= 0, partition.assignment[np.maximum(origin, 0)], -1)
    out_counts = np.bincount(out_bins + 1, minlength=partition.n_bins + 1)
    in_counts = partition.bin_sizes()

    groups = []
    for b in range(partition.n_bins):
        groups.append(
            ChartGroup(
                label=partition.labels[b],
                left_value=in_counts[b] / n_in,
                right_value=out_counts[b + 1] / n_out,
            )
        )
    ignore_size = n_in - int(in_counts.sum())
    if ignore_size > 0:
        groups.append(
            ChartGroup(
                label="other",
                left_value=ignore_size / n_in,
                right_value=out_counts[0] / n_out,
            )
        )

    b = candidate.contribution.bin_index
    before = in_counts[b] / n_in
    after = out_counts[b + 1] / n_out
    ratio = after / before if before > 0 else 0.0
    caption = (
        f"The distribution of column '{candidate.attribute}' changed: rows where "
        f"{_condition_text(candidate)} are {_pct(after)} of the result vs "
        f"{_pct(before)} before ({ratio:.1f}× change)."
    )
    chart = ChartSpec(
        kind=SIDE_BY_SIDE,
        groups=tuple(groups),
        highlighted=candidate.row_set.label,
        axis_titles={
            "category": partition.source_attribute,
            "value": "share of rows",
            "left": "before",
            "right": "after",
        },
    )
    return Explanation(candidate=candidate, chart=chart, caption=caption)


def _attribute_groups_to_bins(step: ExploratoryStep, partition: RowPartition) -> np.ndarray:
    """Bin of each output group: unanimity, else majority, ties -> ignore (-1)."""
    prov = step.provenance
    shifted = partition.assignment[prov.group_valid_rows] + 1  # 0 = ignore-set
    counts = _joint_counts(shifted, prov.group_of_valid_row, partition.n_bins + 1, prov.n_groups)
    top = counts.max(axis=0)
    winner = counts.argmax(axis=0)
    tied = (counts == top[None, :]).sum(axis=0) > 1
    winner = winner - 1  # back to bin ids, ignore-set = -1
    winner[tied] = -1
    return winner


def render_diversity(
    candidate: ExplanationCandidate, step: ExploratoryStep, partition: RowPartition
) -> Optional[Explanation]:
    """Mean aggregate value per bin against the overall group mean.

    Returns None when the candidate's own bin attributes no output group
    (nothing to draw a bar for).
    """
    values = step.output.column(candidate.attribute).data
    group_bin = _attribute_groups_to_bins(step, partition)

    groups = []
    bar_by_bin = {}
    for b in range(partition.n_bins):
        member_vals = values[(group_bin == b) & ~np.isnan(values)]
        if len(member_vals) == 0:
            continue
        bar = float(np.mean(member_vals))
        bar_by_bin[b] = bar
        groups.append(ChartGroup(label=partition.labels[b], value=bar))

    b = candidate.contribution.bin_index
    if b not in bar_by_bin:
        return None

    overall = values[~np.isnan(values)]
    mean_line = float(np.mean(overall))
    spread = float(np.std(overall))
    v = bar_by_bin[b]
    k = abs(v - mean_line) / spread if spread > 0 else 0.0
    direction = "below" if v < mean_line else "above"
    caption = (
        f"Groups where {_condition_text(candidate)} have mean '{candidate.attribute}' "
        f"of {v:.2f}, {k:.1f} standard deviations {direction} the overall mean "
        f"{mean_line:.2f}."
    )
    chart = ChartSpec(
        kind=MEAN_LINE_BARS,
        groups=tuple(groups),
        highlighted=candidate.row_set.label,
        mean_line=mean_line,
        axis_titles={
            "category": partition.source_attribute,
            "value": f"mean {candidate.attribute}",
        },
    )
    return Explanation(candidate=candidate, chart=chart, caption=caption)


def render_candidate(candidate: ExplanationCandidate, step: ExploratoryStep) -> Optional[Explanation]:
    part = candidate.contribution.partition
    if step.kind == "groupby":
        return render_diversity(candidate, step, part)
    return render_exceptionality(candidate, step, part)


# ---------------------------------------------------------------------------
# Serialization

def _group_to_dict(g: ChartGroup) -> dict:
    d = {"label": g.label}
    if g.value is not None:
        d["value"] = g.value
    if g.left_value is not None:
        d["left_value"] = g.left_value
        d["right_value"] = g.right_value
    return d


def explanation_to_dict(e: Explanation) -> dict:
    chart = {
        "kind": e.chart.kind,
        "groups": [_group_to_dict(g) for g in e.chart.groups],
        "highlighted": e.chart.highlighted,
        "axis_titles": e.chart.axis_titles,
    }
    if e.chart.mean_line is not None:
        chart["mean_line"] = e.chart.mean_line
    return {
        "attribute": e.candidate.attribute,
        "bin_label": e.candidate.row_set.label,
        "interestingness": e.candidate.interestingness,
        "std_contribution": e.candidate.contribution.standardized,
        "raw_contribution": e.candidate.contribution.raw,
        "chart": chart,
        "caption": e.caption,
    }


def build_payload(step: ExploratoryStep, explanations: list) -> dict:
    """The versioned envelope served over HTTP and printed by the CLI."""
    return {
        "version": SCHEMA_VERSION,
        "step": {
            "op": pretty_print(step.op),
            "inputs": [f.name for f in step.inputs],
        },
        "explanations": [explanation_to_dict(e) for e in explanations],
    }


def serialize_explanations(explanations: list, format: str = "json") -> bytes:
    if format == "json":
        body = json.dumps(
            [explanation_to_dict(e) for e in explanations],
            indent=2,
            ensure_ascii=False,
        )
        return (body + "\n").encode("utf-8")
    if format == "text":
        if not explanations:
            return b""
        return ("\n".join(e.caption for e in explanations) + "\n").encode("utf-8")
    raise ValueError(f"unknown serialization format {format!r}")


def load_schema() -> dict:
    """The published v1 JSON schema for explanation payloads."""
    text = resources.files("edaexplain").joinpath("schemas/explanation_v1.json").read_text()
    return json.loads(text)


# ---------------------------------------------------------------------------
# Minimal SVG writer (CLI convenience; the web client draws its own charts)

def _svg_escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def render_svg(e: Explanation, width: int = 640, height: int = 400) -> str:
    chart = e.chart
    pad = 40
    plot_w, plot_h = width - 2 * pad, height - 2 * pad - 40
    n = len(chart.groups)
    if n == 0:
        return f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}"/>'

    if chart.kind == SIDE_BY_SIDE:
        values = [(g.left_value, g.right_value) for g in chart.groups]
        vmax = max(max(l, r) for l, r in values) or 1.0
        vmin = 0.0
    else:
        flat = [g.value for g in chart.groups]
        if chart.mean_line is not None:
            flat.append(chart.mean_line)
        vmax = max(max(flat), 0.0)
        vmin = min(min(flat), 0.0)
        if vmax == vmin:
            vmax = vmin + 1.0

    def y_of(v: float) -> float:
        return pad + plot_h * (1 - (v - vmin) / (vmax - vmin))

    slot = plot_w / n
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="11">'
    ]
    baseline = y_of(0.0)
    for i, g in enumerate(chart.groups):
        x0 = pad + i * slot
        hl = g.label == chart.highlighted
        if chart.kind == SIDE_BY_SIDE:
            bw = slot * 0.35
            for k, (v, fill) in enumerate(zip((g.left_value, g.right_value), ("#8888cc", "#cc8844"))):
                top = y_of(v)
                color = "#d62728" if hl else fill
                parts.append(
                    f'<rect x="{x0 + slot*0.1 + k*bw:.1f}" y="{min(top, baseline):.1f}" '
                    f'width="{bw:.1f}" height="{abs(baseline-top):.1f}" fill="{color}" '
                    f'opacity="{1.0 if k else 0.55}"/>'
                )
        else:
            top = y_of(g.value)
            color = "#d62728" if hl else "#4477aa"
            parts.append(
                f'<rect x="{x0 + slot*0.15:.1f}" y="{min(top, baseline):.1f}" '
                f'width="{slot*0.7:.1f}" height="{abs(baseline-top):.1f}" fill="{color}"/>'
            )
        parts.append(
            f'<text x="{x0 + slot/2:.1f}" y="{pad + plot_h + 14}" text-anchor="middle">'
            f"{_svg_escape(g.label)}</text>"
        )
    if chart.kind == MEAN_LINE_BARS and chart.mean_line is not None:
        ym = y_of(chart.mean_line)
        parts.append(
            f'<line x1="{pad}" y1="{ym:.1f}" x2="{pad + plot_w}" y2="{ym:.1f}" '
            f'stroke="#d62728" stroke-dasharray="5,3" stroke-width="1.5"/>'
        )
    parts.append(
        f'<text x="{width/2}" y="{height - 12}" text-anchor="middle">'
        f"{_svg_escape(e.caption)}</text>"
    )
    parts.append("</svg>")
    return "".join(parts)
