"""Parsing and execution of the four exploratory operations.

The operation DSL is deliberately tiny (one predicate per filter, single
join key); an equivalent JSON encoding is accepted anywhere DSL text is.
Execution is pure: frames in, new frame out, inputs untouched. Alongside
the output frame we keep row-level provenance (which input rows produced
each output row/group), which later powers both intervention shortcuts and
chart rendering.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import (
    ArityError,
    OpSyntaxError,
    SchemaMismatchError,
    TypeMismatchError,
    UnknownColumnError,
)
from .frame import Column, DataFrame, DType

COMPARATORS = ("<", "<=", ">", ">=", "==", "!=")
AGG_FNS = ("mean", "sum", "count", "min", "max")


@dataclass(frozen=True)
class FilterOp:
    column: str
    comparator: str
    literal: Union[float, str]


@dataclass(frozen=True)
class GroupByOp:
    keys: tuple[str, ...]
    aggs: tuple[tuple[str, str], ...]  # (attribute, fn)


@dataclass(frozen=True)
class JoinOp:
    on: str
    kind: str = "inner"


@dataclass(frozen=True)
class UnionOp:
    pass


OperationSpec = Union[FilterOp, GroupByOp, JoinOp, UnionOp]


def op_kind(op: OperationSpec) -> str:
    if isinstance(op, FilterOp):
        return "filter"
    if isinstance(op, GroupByOp):
        return "groupby"
    if isinstance(op, JoinOp):
        return "join"
    if isinstance(op, UnionOp):
        return "union"
    raise TypeError(f"not an operation spec: {op!r}")


def op_arity(op: OperationSpec) -> tuple[int, int | None]:
    """(min, max) number of input frames; max None means unbounded."""
    kind = op_kind(op)
    if kind in ("filter", "groupby"):
        return (1, 1)
    return (2, None)


# ---------------------------------------------------------------------------
# DSL parsing

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_.\-]*")
_TOKEN_RE = re.compile(
    r"""\s*(?:
        (?P<cmp><=|>=|==|!=|<|>)
      | (?P<punct>[(),])
      | (?P<quoted>"(?:[^"\\]|\\.)*"|'(?:[^'\\]|\\.)*')
      | (?P<word>[^\s(),<>=!"']+)
    )""",
    re.VERBOSE,
)

_NUMBER_RE = re.compile(r"[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?\Z")


def _tokenize(text: str) -> list[str]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.end() == pos:
            remainder = text[pos:].strip()
            if not remainder:
                break
            raise OpSyntaxError(f"cannot tokenize {remainder[:20]!r}", len(tokens))
        tokens.append(m.group().strip())
        pos = m.end()
    return tokens


class _TokenStream:
    def __init__(self, tokens):
        self.tokens = tokens
        self.i = 0

    def peek(self):
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def next(self, what: str) -> str:
        tok = self.peek()
        if tok is None:
            raise OpSyntaxError(f"expected {what}, found end of input", self.i)
        self.i += 1
        return tok

    def expect(self, literal: str):
        tok = self.next(repr(literal))
        if tok != literal:
            raise OpSyntaxError(f"expected {literal!r}, found {tok!r}", self.i - 1)

    def done(self):
        if self.i < len(self.tokens):
            raise OpSyntaxError(f"unexpected trailing input {self.peek()!r}", self.i)


def _unquote(tok: str) -> str:
    body = tok[1:-1]
    return re.sub(r"\\(.)", r"\1", body)


def _parse_ident(ts: _TokenStream) -> str:
    tok = ts.next("column name")
    if tok.startswith(('"', "'")):
        return _unquote(tok)
    if not _IDENT_RE.fullmatch(tok):
        raise OpSyntaxError(f"invalid column name {tok!r}", ts.i - 1)
    return tok


def _parse_literal(ts: _TokenStream) -> Union[float, str]:
    tok = ts.next("literal")
    if tok.startswith(('"', "'")):
        return _unquote(tok)
    if _NUMBER_RE.fullmatch(tok):
        return float(tok)
    return tok


def _validate(op: OperationSpec) -> OperationSpec:
    if isinstance(op, FilterOp) and op.comparator not in COMPARATORS:
        raise OpSyntaxError(f"unknown comparator {op.comparator!r}")
    if isinstance(op, GroupByOp):
        overlap = set(op.keys) & {attr for attr, _ in op.aggs}
        if overlap:
            raise OpSyntaxError(
                f"group keys also aggregated: {', '.join(sorted(overlap))}"
            )
        for attr, fn in op.aggs:
            if fn not in AGG_FNS:
                raise OpSyntaxError(f"unknown aggregate function {fn!r}")
    if isinstance(op, JoinOp) and op.kind != "inner":
        raise OpSyntaxError(f"unsupported join kind {op.kind!r}")
    return op


def _from_json(obj: dict) -> OperationSpec:
    try:
        kind = obj["op"].lower()
    except (KeyError, AttributeError):
        raise OpSyntaxError("JSON operation needs an 'op' field") from None
    try:
        if kind == "filter":
            lit = obj["literal"]
            lit = float(lit) if isinstance(lit, (int, float)) and not isinstance(lit, bool) else str(lit)
            return _validate(FilterOp(str(obj["column"]), str(obj["comparator"]), lit))
        if kind == "groupby":
            keys = tuple(str(k) for k in obj["keys"])
            aggs = tuple((str(a), str(fn)) for a, fn in obj["aggs"])
            return _validate(GroupByOp(keys, aggs))
        if kind == "join":
            return _validate(JoinOp(str(obj["on"]), str(obj.get("kind", "inner"))))
        if kind == "union":
            return UnionOp()
    except KeyError as exc:
        raise OpSyntaxError(f"JSON {kind} operation needs a {exc.args[0]!r} field") from None
    except (TypeError, ValueError) as exc:
        raise OpSyntaxError(f"bad JSON {kind} operation: {exc}") from None
    raise OpSyntaxError(f"unknown operation {kind!r}")


def parse_operation(text) -> OperationSpec:
    """Parse DSL text (or a JSON object / JSON string) into an OperationSpec."""
    if isinstance(text, dict):
        return _from_json(text)
    text = text.strip()
    if text.startswith("{"):
        try:
            obj = json.loads(text)
        except json.JSONDecodeError as exc:
            raise OpSyntaxError(f"bad JSON operation: {exc}") from exc
        return _from_json(obj)

    ts = _TokenStream(_tokenize(text))
    keyword = ts.next("operation keyword").upper()
    if keyword == "FILTER":
        column = _parse_ident(ts)
        cmp_tok = ts.next("comparator")
        if cmp_tok not in COMPARATORS:
            raise OpSyntaxError(f"expected comparator, found {cmp_tok!r}", ts.i - 1)
        literal = _parse_literal(ts)
        ts.done()
        return _validate(FilterOp(column, cmp_tok, literal))
    if keyword == "GROUPBY":
        keys = [_parse_ident(ts)]
        while ts.peek() == ",":
            ts.expect(",")
            keys.append(_parse_ident(ts))
        agg_kw = ts.next("'AGG'")
        if agg_kw.upper() != "AGG":
            raise OpSyntaxError(f"expected 'AGG', found {agg_kw!r}", ts.i - 1)
        aggs = [_parse_agg(ts)]
        while ts.peek() == ",":
            ts.expect(",")
            aggs.append(_parse_agg(ts))
        ts.done()
        return _validate(GroupByOp(tuple(keys), tuple(aggs)))
    if keyword == "JOIN":
        on_kw = ts.next("'ON'")
        if on_kw.upper() != "ON":
            raise OpSyntaxError(f"expected 'ON', found {on_kw!r}", ts.i - 1)
        column = _parse_ident(ts)
        ts.done()
        return JoinOp(column)
    if keyword == "UNION":
        ts.done()
        return UnionOp()
    raise OpSyntaxError(f"unknown operation keyword {keyword!r}", 0)


def _parse_agg(ts: _TokenStream) -> tuple[str, str]:
    fn = ts.next("aggregate function").lower()
    if fn not in AGG_FNS:
        raise OpSyntaxError(f"unknown aggregate function {fn!r}", ts.i - 1)
    ts.expect("(")
    attr = _parse_ident(ts)
    ts.expect(")")
    return (attr, fn)


def _format_ident(name: str) -> str:
    if _IDENT_RE.fullmatch(name):
        return name
    return '"' + name.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _format_literal(lit) -> str:
    if isinstance(lit, float):
        return repr(lit)
    if _IDENT_RE.fullmatch(lit) and not _NUMBER_RE.fullmatch(lit):
        return lit
    return '"' + lit.replace("\\", "\\\\").replace('"', '\\"') + '"'


def pretty_print(op: OperationSpec) -> str:
    if isinstance(op, FilterOp):
        return f"FILTER {_format_ident(op.column)} {op.comparator} {_format_literal(op.literal)}"
    if isinstance(op, GroupByOp):
        keys = ", ".join(_format_ident(k) for k in op.keys)
        aggs = ", ".join(f"{fn}({_format_ident(a)})" for a, fn in op.aggs)
        return f"GROUPBY {keys} AGG {aggs}"
    if isinstance(op, JoinOp):
        return f"JOIN ON {_format_ident(op.on)}"
    if isinstance(op, UnionOp):
        return "UNION"
    raise TypeError(f"not an operation spec: {op!r}")


def op_to_json(op: OperationSpec) -> dict:
    if isinstance(op, FilterOp):
        return {
            "op": "filter",
            "column": op.column,
            "comparator": op.comparator,
            "literal": op.literal,
        }
    if isinstance(op, GroupByOp):
        return {"op": "groupby", "keys": list(op.keys), "aggs": [list(a) for a in op.aggs]}
    if isinstance(op, JoinOp):
        return {"op": "join", "on": op.on, "kind": op.kind}
    return {"op": "union"}


# ---------------------------------------------------------------------------
# Execution

@dataclass
class Provenance:
    """Row-level lineage from output back to input frames."""

    kind: str
    # filter: input row per output row
    row_origin: np.ndarray | None = None
    # union: (input frame, row within it) per output row
    frame_origin: np.ndarray | None = None
    union_row_origin: np.ndarray | None = None
    # join: per input frame, the contributing row per output row
    origins: tuple[np.ndarray, ...] | None = None
    # groupby: rows with non-null keys and the group each belongs to
    group_valid_rows: np.ndarray | None = None
    group_of_valid_row: np.ndarray | None = None
    n_groups: int = 0

    def rows_of_group(self, g: int) -> np.ndarray:
        return self.group_valid_rows[self.group_of_valid_row == g]


@dataclass
class ExploratoryStep:
    """An executed exploration step: inputs, operation, and its output."""

    inputs: tuple[DataFrame, ...]
    op: OperationSpec
    output: DataFrame
    provenance: Provenance
    # output column -> (input frame index, source column) or None when synthetic
    column_provenance: dict[str, tuple[int, str] | None] = field(default_factory=dict)

    @property
    def kind(self) -> str:
        return op_kind(self.op)


def _check_filter_types(col: Column, op: FilterOp):
    if col.dtype is DType.NUMERIC:
        if not isinstance(op.literal, float):
            raise TypeMismatchError(
                f"numeric column '{op.column}' filtered with non-numeric literal {op.literal!r}"
            )
    else:
        if not isinstance(op.literal, str):
            raise TypeMismatchError(
                f"categorical column '{op.column}' filtered with numeric literal {op.literal!r}"
            )
        if op.comparator not in ("==", "!="):
            raise TypeMismatchError(
                f"ordering comparator {op.comparator!r} not defined for categorical column "
                f"'{op.column}'"
            )


def _filter_mask(frame: DataFrame, op: FilterOp) -> np.ndarray:
    col = frame.column(op.column)
    _check_filter_types(col, op)
    null = col.null_mask()
    if col.dtype is DType.NUMERIC:
        x, lit = col.data, op.literal
        mask = {
            "<": lambda: x < lit,
            "<=": lambda: x <= lit,
            ">": lambda: x > lit,
            ">=": lambda: x >= lit,
            "==": lambda: x == lit,
            "!=": lambda: x != lit,
        }[op.comparator]()
    else:
        eq = col.data == op.literal
        mask = eq if op.comparator == "==" else ~eq
    return mask & ~null  # nulls never satisfy a predicate


def _execute_filter(frame: DataFrame, op: FilterOp):
    keep = np.flatnonzero(_filter_mask(frame, op))
    out = frame.take(keep, name="result")
    prov = Provenance(kind="filter", row_origin=keep)
    col_prov = {name: (0, name) for name in frame.column_names}
    return out, prov, col_prov


def _combine_key_codes(frame: DataFrame, keys: tuple[str, ...]):
    """Rows with non-null keys and a lexicographic group code per such row."""
    facts = [frame.factorize(k) for k in keys]
    valid = facts[0].codes >= 0
    for f in facts[1:]:
        valid &= f.codes >= 0
    valid_rows = np.flatnonzero(valid)
    combined = facts[0].codes[valid_rows]
    for f in facts[1:]:
        card = max(f.n_values, 1)
        combined = combined * card + f.codes[valid_rows]
        # refactorize to keep codes small; np.unique preserves the sort order
        _, combined = np.unique(combined, return_inverse=True)
    return valid_rows, combined


def _group_minmax(values, nn, ginv, n_groups, fn):
    out = np.full(n_groups, np.nan)
    vals = values[nn]
    groups = ginv[nn]
    if len(vals) == 0:
        return out
    order = np.argsort(groups, kind="stable")
    sorted_groups = groups[order]
    sorted_vals = vals[order]
    present, starts = np.unique(sorted_groups, return_index=True)
    reducer = np.minimum if fn == "min" else np.maximum
    out[present] = reducer.reduceat(sorted_vals, starts)
    return out


def _execute_groupby(frame: DataFrame, op: GroupByOp):
    for k in op.keys:
        frame.column(k)
    valid_rows, combined = _combine_key_codes(frame, op.keys)
    group_codes, first_idx, ginv = np.unique(
        combined, return_index=True, return_inverse=True
    )
    n_groups = len(group_codes)
    rep_rows = valid_rows[first_idx]

    columns = []
    for k in op.keys:
        src = frame.column(k)
        columns.append(Column(k, src.dtype, src.data[rep_rows]))

    for attr, fn in op.aggs:
        src = frame.column(attr)
        if fn != "count" and src.dtype is not DType.NUMERIC:
            raise TypeMismatchError(f"{fn}() needs a numeric column, '{attr}' is categorical")
        nn = ~src.null_mask()[valid_rows]
        name = f"{fn}_{attr}"
        if fn == "count":
            counts = np.bincount(ginv[nn], minlength=n_groups).astype(np.float64)
            columns.append(Column(name, DType.NUMERIC, counts))
            continue
        values = src.data[valid_rows]
        if fn in ("min", "max"):
            agg = _group_minmax(values, nn, ginv, n_groups, fn)
        else:
            sums = np.bincount(ginv[nn], weights=values[nn], minlength=n_groups)
            counts = np.bincount(ginv[nn], minlength=n_groups)
            if fn == "sum":
                agg = np.where(counts > 0, sums, np.nan)
            else:  # mean
                with np.errstate(invalid="ignore"):
                    agg = np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)
        columns.append(Column(name, DType.NUMERIC, agg))

    out = DataFrame("result", columns)
    prov = Provenance(
        kind="groupby",
        group_valid_rows=valid_rows,
        group_of_valid_row=ginv,
        n_groups=n_groups,
    )
    col_prov: dict[str, tuple[int, str] | None] = {k: (0, k) for k in op.keys}
    for attr, fn in op.aggs:
        col_prov[f"{fn}_{attr}"] = None  # synthetic aggregate column
    return out, prov, col_prov


def _ragged_arange(lengths: np.ndarray) -> np.ndarray:
    total = int(lengths.sum())
    if total == 0:
        return np.zeros(0, dtype=np.int64)
    ends = np.cumsum(lengths)
    return np.arange(total, dtype=np.int64) - np.repeat(ends - lengths, lengths)


def _join_pair(left: DataFrame, right: DataFrame, on: str):
    lcol, rcol = left.column(on), right.column(on)
    if lcol.dtype is not rcol.dtype:
        raise TypeMismatchError(
            f"join column '{on}' is {lcol.dtype} on one side and {rcol.dtype} on the other"
        )
    lf, rf = left.factorize(on), right.factorize(on)

    if rf.n_values == 0 or lf.n_values == 0:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty

    # map right support values onto left support positions (-1 when absent)
    pos = np.searchsorted(lf.support, rf.support)
    clipped = np.clip(pos, 0, lf.n_values - 1)
    hit = (pos < lf.n_values) & (lf.support[clipped] == rf.support)
    support_map = np.where(hit, clipped, -1)

    r_lcodes = np.where(rf.codes >= 0, support_map[np.maximum(rf.codes, 0)], -1)
    r_rows = np.flatnonzero(r_lcodes >= 0)
    r_sorted = r_rows[np.argsort(r_lcodes[r_rows], kind="stable")]
    match_counts = np.bincount(
        r_lcodes[r_rows], minlength=lf.n_values
    ).astype(np.int64)
    offsets = np.concatenate([[0], np.cumsum(match_counts)[:-1]]).astype(np.int64)

    l_rows = np.flatnonzero((lf.codes >= 0) & (match_counts[np.maximum(lf.codes, 0)] > 0))
    reps = match_counts[lf.codes[l_rows]]
    left_origin = np.repeat(l_rows, reps)
    gather = np.repeat(offsets[lf.codes[l_rows]], reps) + _ragged_arange(reps)
    right_origin = r_sorted[gather]
    return left_origin, right_origin


def _unique_name(name: str, used: set) -> str:
    while name in used:
        name = name + "_r"
    return name


def _execute_join(inputs: tuple[DataFrame, ...], op: JoinOp):
    on = op.on
    # fold pairwise; origins[i][j] = row of input i behind output row j
    acc = inputs[0]
    acc.column(on)
    origins = [np.arange(acc.row_count, dtype=np.int64)]
    # accumulated output columns as (name, frame_idx, source_name)
    out_schema: list[tuple[str, int, str]] = [
        (name, 0, name) for name in acc.column_names
    ]
    for idx in range(1, len(inputs)):
        right = inputs[idx]
        left_origin, right_origin = _join_pair(acc, right, on)
        origins = [o[left_origin] for o in origins]
        origins.append(right_origin)
        used = {name for name, _, _ in out_schema}
        for cname in right.column_names:
            if cname == on:
                continue
            out_schema.append((_unique_name(cname, used), idx, cname))
            used.add(out_schema[-1][0])
        # materialize the accumulator for the next fold round
        cols = []
        for name, fi, src in out_schema:
            src_col = inputs[fi].column(src)
            cols.append(Column(name, src_col.dtype, src_col.data[origins[fi]]))
        acc = DataFrame("result", cols)

    prov = Provenance(kind="join", origins=tuple(origins))
    col_prov = {name: (fi, src) for name, fi, src in out_schema}
    return acc, prov, col_prov


def _execute_union(inputs: tuple[DataFrame, ...]):
    first = inputs[0]
    order = first.column_names
    for other in inputs[1:]:
        if set(other.column_names) != set(order):
            raise SchemaMismatchError(
                f"union inputs disagree on columns: {order} vs {other.column_names}"
            )
        for name in order:
            if other.column(name).dtype is not first.column(name).dtype:
                raise SchemaMismatchError(f"union column '{name}' has mixed dtypes")
    cols = []
    for name in order:
        parts = [f.column(name).data for f in inputs]
        dtype = first.column(name).dtype
        cols.append(Column(name, dtype, np.concatenate(parts)))
    out = DataFrame("result", cols)
    frame_origin = np.concatenate(
        [np.full(f.row_count, i, dtype=np.int64) for i, f in enumerate(inputs)]
    )
    row_origin = np.concatenate(
        [np.arange(f.row_count, dtype=np.int64) for f in inputs]
    )
    prov = Provenance(kind="union", frame_origin=frame_origin, union_row_origin=row_origin)
    col_prov = {name: (0, name) for name in order}
    return out, prov, col_prov


def _execute(op: OperationSpec, inputs):
    inputs = tuple(inputs)
    lo, hi = op_arity(op)
    if len(inputs) < lo or (hi is not None and len(inputs) > hi):
        raise ArityError(
            f"{op_kind(op)} takes {lo}{'' if hi == lo else '+'} input frame(s), got {len(inputs)}"
        )
    _validate(op)
    if isinstance(op, FilterOp):
        return inputs, *_execute_filter(inputs[0], op)
    if isinstance(op, GroupByOp):
        return inputs, *_execute_groupby(inputs[0], op)
    if isinstance(op, JoinOp):
        return inputs, *_execute_join(inputs, op)
    return inputs, *_execute_union(inputs)


def execute(op: OperationSpec, inputs) -> DataFrame:
    """Run the operation and return the output frame."""
    _, out, _, _ = _execute(op, inputs)
    return out


def make_step(op: OperationSpec, inputs) -> ExploratoryStep:
    """Execute and bundle operation, inputs, output, and provenance."""
    inputs, out, prov, col_prov = _execute(op, inputs)
    return ExploratoryStep(
        inputs=inputs, op=op, output=out, provenance=prov, column_provenance=col_prov
    )
