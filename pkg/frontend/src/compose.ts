// Builds operation DSL strings from the step-composer form. The quoting and
// literal rules mirror the server's grammar, so anything composed here parses
// server-side; validateForm catches the type errors the engine would reject
// (ordered comparison on a categorical column, non-numeric literal, ...)
// before a request is made.

import { FrameSummary } from "./types.js";

export const COMPARATORS = ["<", "<=", ">", ">=", "==", "!="] as const;
export const AGG_FNS = ["mean", "sum", "count", "min", "max"] as const;

export type Comparator = (typeof COMPARATORS)[number];
export type AggFn = (typeof AGG_FNS)[number];

export interface FilterForm {
    kind: "filter";
    column: string;
    comparator: Comparator;
    literal: string;
    literalType: "number" | "text";
}

export interface GroupByForm {
    kind: "groupby";
    keys: string[];
    aggs: { fn: AggFn; column: string }[];
}

export interface JoinForm {
    kind: "join";
    on: string;
}

export interface UnionForm {
    kind: "union";
}

export type StepForm = FilterForm | GroupByForm | JoinForm | UnionForm;

export class ComposeError extends Error {}

const PLAIN_IDENT = /^[A-Za-z_][A-Za-z0-9_.\-]*$/;
const NUMBER_TOKEN = /^[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?$/;

function quote(s: string): string {
    return '"' + s.replace(/\\/g, "\\\\").replace(/"/g, '\\"') + '"';
}

export function formatIdent(name: string): string {
    if (name === "") {
        throw new ComposeError("column name is empty");
    }
    return PLAIN_IDENT.test(name) ? name : quote(name);
}

function formatLiteral(form: FilterForm): string {
    if (form.literalType === "number") {
        const v = Number(form.literal.trim());
        if (form.literal.trim() === "" || !Number.isFinite(v)) {
            throw new ComposeError(`not a number: ${JSON.stringify(form.literal)}`);
        }
        return String(v);
    }
    // bare words survive unquoted unless they would read back as a number
    if (PLAIN_IDENT.test(form.literal) && !NUMBER_TOKEN.test(form.literal)) {
        return form.literal;
    }
    return quote(form.literal);
}

export function composeStep(form: StepForm): string {
    switch (form.kind) {
        case "filter":
            return `FILTER ${formatIdent(form.column)} ${form.comparator} ` +
                formatLiteral(form);
        case "groupby": {
            if (form.keys.length === 0) {
                throw new ComposeError("group-by needs at least one key");
            }
            if (form.aggs.length === 0) {
                throw new ComposeError("group-by needs at least one aggregate");
            }
            const keys = form.keys.map(formatIdent).join(", ");
            const aggs = form.aggs
                .map((a) => `${a.fn}(${formatIdent(a.column)})`)
                .join(", ");
            return `GROUPBY ${keys} AGG ${aggs}`;
        }
        case "join":
            return `JOIN ON ${formatIdent(form.on)}`;
        case "union":
            return "UNION";
    }
}

function dtypeOf(frames: FrameSummary[], column: string): string | undefined {
    for (const f of frames) {
        const col = f.columns.find((c) => c.name === column);
        if (col) return col.dtype;
    }
    return undefined;
}

// Problems that would bounce off the engine; empty list means submittable.
export function validateForm(form: StepForm, inputs: FrameSummary[]): string[] {
    const problems: string[] = [];
    const known = (name: string) =>
        inputs.some((f) => f.columns.some((c) => c.name === name));

    if (form.kind === "filter") {
        if (!form.column) problems.push("pick a column");
        else if (!known(form.column)) problems.push(`no column ${form.column}`);
        const dtype = dtypeOf(inputs, form.column);
        const ordered = form.comparator !== "==" && form.comparator !== "!=";
        if (dtype === "categorical" && ordered) {
            problems.push("ordered comparison needs a numeric column");
        }
        if (form.literalType === "number") {
            if (!Number.isFinite(Number(form.literal.trim())) || form.literal.trim() === "") {
                problems.push("literal is not a number");
            }
        } else if (dtype === "numeric") {
            problems.push("text literal against a numeric column");
        }
    } else if (form.kind === "groupby") {
        if (form.keys.length === 0) problems.push("pick at least one key");
        if (form.aggs.length === 0) problems.push("pick at least one aggregate");
        for (const k of form.keys) {
            if (!known(k)) problems.push(`no column ${k}`);
        }
        for (const a of form.aggs) {
            if (!known(a.column)) problems.push(`no column ${a.column}`);
            else if (a.fn !== "count" && dtypeOf(inputs, a.column) === "categorical") {
                problems.push(`${a.fn} needs a numeric column, ${a.column} is categorical`);
            }
            if (form.keys.includes(a.column)) {
                problems.push(`${a.column} is both a key and aggregated`);
            }
        }
    } else if (form.kind === "join") {
        if (!form.on) problems.push("pick a join key");
        else if (inputs.length >= 2 &&
            !inputs.every((f) => f.columns.some((c) => c.name === form.on))) {
            problems.push(`every input needs a ${form.on} column`);
        }
        if (inputs.length < 2) problems.push("join needs two input frames");
    } else if (form.kind === "union") {
        if (inputs.length < 2) problems.push("union needs two input frames");
    }
    return problems;
}
