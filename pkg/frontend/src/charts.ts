// SVG renderers for the engine's chart specs. Bars are drawn directly from
// the payload values (scaled to pixels, never re-aggregated); the bin named
// by `highlighted` gets the accent color and a data-label marker.

import {
    ChartGroup,
    ChartSpec,
    Explanation,
    ExplanationPayload,
    SUPPORTED_SCHEMA_VERSION,
} from "./types.js";

export const SIDE_BY_SIDE = "side_by_side_bars";
export const MEAN_LINE_BARS = "bars_with_mean_line";

const WIDTH = 560;
const HEIGHT = 300;
const PAD = { top: 16, right: 12, bottom: 48, left: 44 };

const BEFORE_FILL = "#8888cc";
const AFTER_FILL = "#cc8844";
const BAR_FILL = "#4477aa";
const ACCENT = "#d62728";

export function escapeXml(s: string): string {
    return s
        .replace(/&/g, "&amp;")
        .replace(/</g, "&lt;")
        .replace(/>/g, "&gt;")
        .replace(/"/g, "&quot;");
}

interface Scale {
    (v: number): number;
}

function linearScale(lo: number, hi: number, outLo: number, outHi: number): Scale {
    const span = hi - lo || 1;
    return (v) => outLo + ((v - lo) / span) * (outHi - outLo);
}

function groupExtent(chart: ChartSpec): [number, number] {
    let lo = 0;
    let hi = 0;
    for (const g of chart.groups) {
        for (const v of [g.left_value, g.right_value, g.value]) {
            if (v === undefined) continue;
            lo = Math.min(lo, v);
            hi = Math.max(hi, v);
        }
    }
    if (chart.mean_line !== undefined) {
        lo = Math.min(lo, chart.mean_line);
        hi = Math.max(hi, chart.mean_line);
    }
    return lo === hi ? [lo, hi + 1] : [lo, hi];
}

function bar(x: number, yZero: number, yTop: number, w: number, fill: string): string {
    const y = Math.min(yTop, yZero);
    const h = Math.abs(yZero - yTop);
    return `<rect x="${x.toFixed(1)}" y="${y.toFixed(1)}" width="${w.toFixed(1)}" ` +
        `height="${h.toFixed(1)}" fill="${fill}"/>`;
}

function groupOpen(g: ChartGroup, highlighted: boolean): string {
    const cls = highlighted ? "group highlighted" : "group";
    return `<g class="${cls}" data-label="${escapeXml(g.label)}">`;
}

function legend(chart: ChartSpec): string {
    const titles = chart.axis_titles ?? {};
    if (chart.kind !== SIDE_BY_SIDE || !titles.left || !titles.right) {
        return "";
    }
    const x = WIDTH - PAD.right - 120;
    const entries: [string, string][] = [
        [titles.left, BEFORE_FILL],
        [titles.right, AFTER_FILL],
    ];
    return entries
        .map(([label, fill], i) =>
            `<g class="legend"><rect x="${x}" y="${PAD.top + i * 16}" width="10" ` +
            `height="10" fill="${fill}"/><text x="${x + 14}" y="${PAD.top + i * 16 + 9}">` +
            `${escapeXml(label)}</text></g>`)
        .join("");
}

function axisLabels(chart: ChartSpec, plotBottom: number): string {
    const titles = chart.axis_titles ?? {};
    const parts: string[] = [];
    if (titles.category) {
        parts.push(`<text x="${WIDTH / 2}" y="${plotBottom + 34}" text-anchor="middle" ` +
            `class="axis-title">${escapeXml(titles.category)}</text>`);
    }
    if (titles.value) {
        parts.push(`<text x="12" y="${HEIGHT / 2}" text-anchor="middle" class="axis-title" ` +
            `transform="rotate(-90 12 ${HEIGHT / 2})">${escapeXml(titles.value)}</text>`);
    }
    return parts.join("");
}

export function renderChartSvg(chart: ChartSpec): string | null {
    if (chart.kind !== SIDE_BY_SIDE && chart.kind !== MEAN_LINE_BARS) {
        return null;
    }
    const n = chart.groups.length;
    const plotW = WIDTH - PAD.left - PAD.right;
    const plotH = HEIGHT - PAD.top - PAD.bottom;
    const [lo, hi] = groupExtent(chart);
    const y = linearScale(lo, hi, PAD.top + plotH, PAD.top);
    const slot = n > 0 ? plotW / n : plotW;
    const yZero = y(0);

    const parts: string[] = [
        `<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 ${WIDTH} ${HEIGHT}" ` +
        `width="${WIDTH}" height="${HEIGHT}" font-family="sans-serif" font-size="11">`,
    ];

    chart.groups.forEach((g, i) => {
        const x0 = PAD.left + i * slot;
        const hl = g.label === chart.highlighted;
        parts.push(groupOpen(g, hl));
        if (chart.kind === SIDE_BY_SIDE) {
            const bw = slot * 0.32;
            const left = g.left_value ?? 0;
            const right = g.right_value ?? 0;
            parts.push(bar(x0 + slot * 0.14, yZero, y(left), bw, hl ? ACCENT : BEFORE_FILL));
            parts.push(bar(x0 + slot * 0.14 + bw, yZero, y(right), bw, hl ? ACCENT : AFTER_FILL));
        } else {
            parts.push(bar(x0 + slot * 0.15, yZero, y(g.value ?? 0), slot * 0.7,
                hl ? ACCENT : BAR_FILL));
        }
        parts.push(`<text x="${(x0 + slot / 2).toFixed(1)}" y="${PAD.top + plotH + 14}" ` +
            `text-anchor="middle">${escapeXml(g.label)}</text>`);
        parts.push("</g>");
    });

    if (chart.kind === MEAN_LINE_BARS && chart.mean_line !== undefined) {
        const ym = y(chart.mean_line).toFixed(1);
        parts.push(`<line class="mean-line" x1="${PAD.left}" y1="${ym}" ` +
            `x2="${PAD.left + plotW}" y2="${ym}" stroke="${ACCENT}" ` +
            `stroke-width="1.5" stroke-dasharray="5,3"/>`);
    }
    parts.push(legend(chart));
    parts.push(axisLabels(chart, PAD.top + plotH));
    parts.push("</svg>");
    return parts.join("");
}

export function renderExplanationHtml(exp: Explanation): string {
    const svg = renderChartSvg(exp.chart);
    const caption = `<figcaption class="caption">${escapeXml(exp.caption)}</figcaption>`;
    if (svg === null) {
        // chart kind from a newer engine: show the payload instead of guessing
        const raw = escapeXml(JSON.stringify(exp, null, 2));
        return `<figure class="explanation unknown-kind"><pre class="raw-json">${raw}</pre>` +
            `${caption}</figure>`;
    }
    return `<figure class="explanation">${svg}${caption}</figure>`;
}

export function renderPayloadHtml(payload: ExplanationPayload): string {
    if (payload.version !== SUPPORTED_SCHEMA_VERSION) {
        return `<div class="banner version-mismatch">This client renders explanation ` +
            `payloads of version ${SUPPORTED_SCHEMA_VERSION}; the server sent version ` +
            `${escapeXml(String(payload.version))}. Update the client.</div>`;
    }
    if (payload.explanations.length === 0) {
        return `<div class="empty-state">No interesting pattern detected for ` +
            `<code>${escapeXml(payload.step.op)}</code>.</div>`;
    }
    return payload.explanations.map(renderExplanationHtml).join("\n");
}
