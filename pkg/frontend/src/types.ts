// Mirrors the engine's explanation payload schema (version 1) and the
// session service's response bodies. Charts render straight from these
// values; nothing is recomputed client-side.

export const SUPPORTED_SCHEMA_VERSION = "1";

export interface ChartGroup {
    label: string;
    left_value?: number;
    right_value?: number;
    value?: number;
}

export interface ChartSpec {
    kind: string;
    groups: ChartGroup[];
    highlighted: string;
    axis_titles?: Record<string, string>;
    mean_line?: number;
}

export interface Explanation {
    attribute: string;
    bin_label: string;
    interestingness: number;
    std_contribution: number;
    raw_contribution: number;
    chart: ChartSpec;
    caption: string;
}

export interface ExplanationPayload {
    version: string;
    step: { op: string; inputs: string[] };
    explanations: Explanation[];
}

export interface ColumnSummary {
    name: string;
    dtype: string;
}

export interface FrameSummary {
    name: string;
    row_count: number;
    columns: ColumnSummary[];
    sample?: (string | number | null)[][];
}

export interface StepResult {
    output: FrameSummary;
    explanations: ExplanationPayload;
}

export interface HistoryStep {
    op: string;
    inputs: string[];
    output: string;
    n_explanations: number;
    captions: string[];
}
