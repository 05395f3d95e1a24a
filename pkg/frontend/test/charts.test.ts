import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { dirname, join } from "node:path";
import { describe, expect, it } from "vitest";

import { escapeXml, renderChartSvg, renderExplanationHtml, renderPayloadHtml } from "../src/charts.js";
import type { ChartSpec, Explanation, ExplanationPayload } from "../src/types.js";

const GOLDEN_DIR = join(dirname(fileURLToPath(import.meta.url)), "golden");

function loadGolden(name: string): ExplanationPayload {
  return JSON.parse(readFileSync(join(GOLDEN_DIR, name), "utf8"));
}

function highlightedLabels(html: string): string[] {
  const out: string[] = [];
  const re = /<g class="group highlighted" data-label="([^"]*)">/g;
  let m: RegExpExecArray | null;
  while ((m = re.exec(html)) !== null) out.push(m[1]);
  return out;
}

// bar rects only, ignoring the legend swatches
function withoutLegend(svg: string): string {
  return svg.replace(/<g class="legend">.*?<\/g>/g, "");
}

describe("golden filter payload", () => {
  const payload = loadGolden("filter_decades.json");
  const exp = payload.explanations[0];

  it("renders exactly one highlighted group matching bin_label", () => {
    const html = renderPayloadHtml(payload);
    expect(highlightedLabels(html)).toEqual([exp.bin_label]);
  });

  it("includes the caption verbatim", () => {
    const html = renderPayloadHtml(payload);
    expect(html).toContain(exp.caption);
    expect(html).toContain(`<figcaption class="caption">${escapeXml(exp.caption)}</figcaption>`);
  });

  it("renders one group element per chart group", () => {
    const html = renderPayloadHtml(payload);
    const groups = html.match(/<g class="group(?: highlighted)?" data-label=/g) ?? [];
    expect(groups.length).toBe(exp.chart.groups.length);
  });

  it("draws two bars per group with heights proportional to the payload values", () => {
    const svg = withoutLegend(renderChartSvg(exp.chart)!);
    const heights = [...svg.matchAll(/<rect[^>]* height="([0-9.]+)"/g)].map((m) => parseFloat(m[1]));
    expect(heights.length).toBe(exp.chart.groups.length * 2);
    // coordinates are written with one decimal, so compare at that grain
    const values = exp.chart.groups.flatMap((g) => [g.left_value ?? 0, g.right_value ?? 0]);
    const vmax = Math.max(...values);
    const hmax = Math.max(...heights);
    values.forEach((v, i) => {
      expect(heights[i]).toBeCloseTo((v / vmax) * hmax, 0);
    });
  });

  it("labels the axes and the before/after legend from the payload", () => {
    const svg = renderChartSvg(exp.chart)!;
    expect(svg).toContain("decade");
    expect(svg).toContain("share of rows");
    expect(svg).toMatch(/<g class="legend">.*before/);
    expect(svg).toMatch(/<g class="legend">.*after/);
  });
});

describe("golden group-by payload", () => {
  const payload = loadGolden("groupby_decades.json");
  const exp = payload.explanations[0];

  it("renders exactly one highlighted group matching bin_label", () => {
    const html = renderPayloadHtml(payload);
    expect(highlightedLabels(html)).toEqual([exp.bin_label]);
  });

  it("includes the caption verbatim", () => {
    const html = renderPayloadHtml(payload);
    expect(html).toContain(exp.caption);
  });

  it("draws the mean line dashed", () => {
    const svg = renderChartSvg(exp.chart)!;
    expect(svg).toMatch(/<line class="mean-line"[^>]*stroke-dasharray="5,3"/);
  });

  it("places the mean line on the same value scale as the bars", () => {
    const svg = withoutLegend(renderChartSvg(exp.chart)!);
    const tops = [...svg.matchAll(/<rect[^>]* y="([0-9.]+)"/g)].map((m) => parseFloat(m[1]));
    const line = /<line class="mean-line" x1="[0-9.]+" y1="([0-9.]+)"/.exec(svg);
    expect(line).not.toBeNull();
    const yLine = parseFloat(line![1]);
    // infer the linear value scale from the first two bars and check the
    // line lands where that scale puts mean_line (coords carry one decimal)
    const values = exp.chart.groups.map((g) => g.value ?? 0);
    const slope = (tops[0] - tops[1]) / (values[1] - values[0]);
    const predicted = tops[0] - (exp.chart.mean_line! - values[0]) * slope;
    expect(yLine).toBeCloseTo(predicted, 0);
  });
});

describe("payload envelope handling", () => {
  const payload = loadGolden("filter_decades.json");

  it("shows a version banner instead of charts when the version is unsupported", () => {
    const html = renderPayloadHtml({ ...payload, version: "2" });
    expect(html).toContain('class="banner version-mismatch"');
    expect(html).toContain("version 2");
    expect(html).not.toContain("<figure");
  });

  it("shows an empty state naming the operation when there are no explanations", () => {
    const html = renderPayloadHtml({ ...payload, explanations: [] });
    expect(html).toContain('class="empty-state"');
    expect(html).toContain("No interesting pattern detected");
    expect(html).toContain(escapeXml(payload.step.op));
  });

  it("falls back to raw JSON for an unknown chart kind, keeping the caption", () => {
    const exp: Explanation = {
      ...payload.explanations[0],
      chart: { ...payload.explanations[0].chart, kind: "hexbin_heatmap" },
    };
    const html = renderExplanationHtml(exp);
    expect(html).toContain('class="raw-json"');
    expect(html).toContain("hexbin_heatmap");
    expect(html).toContain(escapeXml(exp.caption));
    expect(html).not.toContain("<svg");
  });
});

describe("markup safety", () => {
  it("escapes XML specials", () => {
    expect(escapeXml('a & b < c > d "e"')).toBe("a &amp; b &lt; c &gt; d &quot;e&quot;");
    expect(escapeXml("plain")).toBe("plain");
  });

  it("escapes hostile labels and captions in rendered output", () => {
    const chart: ChartSpec = {
      kind: "bars_with_mean_line",
      groups: [
        { label: '<script>"x"</script>', value: 2.0 },
        { label: "a&b", value: 1.0 },
      ],
      highlighted: "a&b",
      mean_line: 1.5,
    };
    const svg = renderChartSvg(chart)!;
    expect(svg).not.toContain("<script>");
    expect(svg).toContain("&lt;script&gt;");
    expect(svg).toContain('data-label="a&amp;b"');

    const exp: Explanation = {
      attribute: "v",
      bin_label: "a&b",
      interestingness: 0.5,
      std_contribution: 1.0,
      raw_contribution: 0.1,
      chart,
      caption: 'see <b>bold</b> & "quotes"',
    };
    const html = renderExplanationHtml(exp);
    expect(html).toContain("see &lt;b&gt;bold&lt;/b&gt; &amp; &quot;quotes&quot;");
    expect(html).not.toContain("<b>bold</b>");
  });

  it("renders an empty chart without bars", () => {
    const svg = renderChartSvg({ kind: "side_by_side_bars", groups: [], highlighted: "" })!;
    expect(svg).toContain("<svg");
    expect(svg).not.toContain("<rect");
  });

  it("returns null for unknown chart kinds", () => {
    expect(renderChartSvg({ kind: "sparkline", groups: [], highlighted: "" })).toBeNull();
  });
});
