"""Shared fixture builders and independent oracles.

The oracles here deliberately avoid the package's numpy code paths: CDF gaps
run on collections.Counter, moments come from the statistics module, and the
intervention oracle pushes the reduced frame through a CSV round trip before
re-executing. Tests compare engine output against these.
"""

import io
import statistics
from collections import Counter

import numpy as np

import edaexplain as e

LETTERS = list("abcdefg")


def column_values(frame, name):
    """Non-null cell values of one column as plain Python objects."""
    col = frame.column(name)
    out = []
    for i in range(frame.row_count):
        v = col.cell(i)
        if v is None:
            continue
        if isinstance(v, float) and v != v:
            continue
        out.append(v)
    return out


def oracle_cdf_gap(before, after):
    """Max |CDF difference| over the merged support, plain Python."""
    cb, ca = Counter(before), Counter(after)
    if not cb or not ca:
        return None
    tb, ta = sum(cb.values()), sum(ca.values())
    gap = accb = acca = 0.0
    for v in sorted(set(cb) | set(ca)):
        accb += cb.get(v, 0) / tb
        acca += ca.get(v, 0) / ta
        gap = max(gap, abs(accb - acca))
    return gap


def oracle_cv(values):
    if len(values) < 2:
        return None
    m = statistics.fmean(values)
    if m == 0.0:
        return None
    return statistics.stdev(values) / abs(m)


def oracle_score(step, attribute):
    """Interestingness recomputed without the engine's measure code."""
    if step.kind == "groupby":
        if step.output.column(attribute).dtype is not e.DType.NUMERIC:
            return None
        return oracle_cv(column_values(step.output, attribute))
    after = column_values(step.output, attribute)
    if step.kind == "union":
        gaps = [oracle_cdf_gap(column_values(f, attribute), after) for f in step.inputs]
        if any(g is None for g in gaps):
            return None
        return max(gaps)
    origin = step.column_provenance.get(attribute)
    if origin is None:
        return None
    fi, src = origin
    return oracle_cdf_gap(column_values(step.inputs[fi], src), after)


def csv_round_trip(frame):
    buf = io.StringIO()
    frame.to_csv(buf)
    buf.seek(0)
    return e.ingest_csv(buf, name=frame.name)


def oracle_contribution(step, remove, frame_index, attribute):
    """Score drop after removing rows, via serialize / re-ingest / re-execute.

    Returns None when either side's measure is undefined.
    """
    full = oracle_score(step, attribute)
    if full is None:
        return None
    target = step.inputs[frame_index]
    keep = np.setdiff1d(np.arange(target.row_count), np.asarray(remove))
    if len(keep) == 0:
        return None
    reduced = csv_round_trip(target.take(keep, name=target.name))
    new_inputs = list(step.inputs)
    new_inputs[frame_index] = reduced
    reduced_step = e.make_step(step.op, new_inputs)
    part = oracle_score(reduced_step, attribute)
    if part is None:
        return None
    return full - part


def random_frame(rng, max_rows=12, name="t", letters=None, min_rows=2):
    """Small mixed-type frame; categorical cells never look numeric."""
    letters = letters if letters is not None else LETTERS
    n = int(rng.integers(min_rows, max_rows + 1))
    rows = []
    for _ in range(n):
        rows.append([
            str(rng.choice(letters)),
            float(rng.integers(0, 6)),
            str(rng.choice(letters[:3])),
            float(rng.integers(-3, 4)),
        ])
    return e.frame_from_rows(
        name,
        [("c1", "categorical"), ("n1", "numeric"),
         ("c2", "categorical"), ("n2", "numeric")],
        rows,
    )


def random_step(rng, kind=None):
    """A valid step of the requested (or random) kind over random frames."""
    kind = kind if kind is not None else str(rng.choice(["filter", "groupby", "join", "union"]))
    if kind == "filter":
        frame = random_frame(rng)
        column = str(rng.choice(["n1", "n2", "c1"]))
        if column.startswith("n"):
            op = e.FilterOp(column, str(rng.choice([">", ">=", "<", "<=", "==", "!="])),
                            float(rng.integers(-2, 5)))
        else:
            op = e.FilterOp(column, str(rng.choice(["==", "!="])), str(rng.choice(LETTERS)))
        return e.make_step(op, [frame])
    if kind == "groupby":
        frame = random_frame(rng)
        aggs = [("n1", str(rng.choice(["mean", "sum", "count", "min", "max"])))]
        if rng.random() < 0.4:
            aggs.append(("n2", "sum"))
        return e.make_step(e.GroupByOp((str(rng.choice(["c1", "c2"])),), tuple(aggs)), [frame])
    if kind == "join":
        left = e.frame_from_rows(
            "L", [("k", "categorical"), ("a", "numeric")],
            [[str(rng.choice(LETTERS[:4])), float(rng.integers(0, 5))]
             for _ in range(int(rng.integers(2, 13)))],
        )
        right = e.frame_from_rows(
            "R", [("k", "categorical"), ("b", "numeric")],
            [[str(rng.choice(LETTERS[:4])), float(rng.integers(0, 5))]
             for _ in range(int(rng.integers(2, 13)))],
        )
        return e.make_step(e.JoinOp("k"), [left, right])
    one = random_frame(rng, name="u1")
    other = random_frame(rng, name="u2")
    return e.make_step(e.UnionOp(), [one, other])
