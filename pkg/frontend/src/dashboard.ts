/** Experimenter dashboard: live session progress plus, for complete
 * sessions, the before/after paired chart, r / MAD readouts, and the
 * per-stimulus mean with SD error bars across sessions. Chart builders
 * are pure SVG-string functions. */

import { Results } from "./types.js";

export interface ChartGeometry {
  width: number;
  height: number;
  margin: number;
}

const CHART: ChartGeometry = { width: 640, height: 240, margin: 36 };

const xPos = (i: number, n: number, g: ChartGeometry) =>
  g.margin + (i * (g.width - 2 * g.margin)) / Math.max(1, n - 1);

// pleasantness -3..+3 mapped top-down
const yPos = (value: number, g: ChartGeometry) =>
  g.margin + ((3 - value) * (g.height - 2 * g.margin)) / 6;

function polyline(values: number[], cls: string, g: ChartGeometry): string {
  const points = values
    .map((v, i) => `${xPos(i, values.length, g).toFixed(1)},${yPos(v, g).toFixed(1)}`)
    .join(" ");
  return `<polyline class="${cls}" fill="none" points="${points}" />`;
}

/** Paired before/after series for one participant; one x position per stimulus. */
export function beforeAfterChart(
  before: number[],
  after: number[],
  g: ChartGeometry = CHART,
): string {
  const axis =
    `<line class="axis" x1="${g.margin}" y1="${yPos(0, g)}" x2="${g.width - g.margin}" y2="${yPos(0, g)}" />` +
    before
      .map(
        (_, i) =>
          `<circle class="x-tick" data-stimulus="${i}" cx="${xPos(i, before.length, g).toFixed(1)}" cy="${yPos(-3, g)}" r="1.5" />`,
      )
      .join("");
  return (
    `<svg viewBox="0 0 ${g.width} ${g.height}" class="before-after-chart">` +
    axis +
    polyline(before, "before-line", g) +
    polyline(after, "after-line", g) +
    `</svg>`
  );
}

/** Mean per stimulus with SD error bars across sessions. */
export function aggregateChart(
  means: number[],
  sds: (number | null)[] | null,
  g: ChartGeometry = CHART,
): string {
  const bars = means
    .map((mean, i) => {
      const x = xPos(i, means.length, g);
      const sd = sds?.[i];
      const whisker =
        sd == null
          ? ""
          : `<line class="error-bar" data-stimulus="${i}" x1="${x.toFixed(1)}" y1="${yPos(mean - sd, g).toFixed(1)}" x2="${x.toFixed(1)}" y2="${yPos(mean + sd, g).toFixed(1)}" />`;
      return (
        `<circle class="mean-dot" data-stimulus="${i}" cx="${x.toFixed(1)}" cy="${yPos(mean, g).toFixed(1)}" r="3" />` +
        whisker
      );
    })
    .join("");
  return `<svg viewBox="0 0 ${g.width} ${g.height}" class="aggregate-chart">${bars}</svg>`;
}

export interface SessionSummary {
  sessionId: string;
  phase: string;
  progressDone: number;
  progressTotal: number;
  results: Results | null;
}

export function aggregateStats(resultsList: Results[]): {
  means: number[];
  sds: (number | null)[] | null;
} {
  const scored = resultsList.filter((r) => r.normalized_scores !== null);
  if (scored.length === 0) return { means: [], sds: null };
  const n = scored[0].normalized_scores!.length;
  const means = Array.from({ length: n }, (_, i) => {
    const total = scored.reduce((acc, r) => acc + r.normalized_scores![i], 0);
    return total / scored.length;
  });
  if (scored.length < 2) return { means, sds: null };
  const sds = means.map((mean, i) => {
    const ss = scored.reduce((acc, r) => acc + (r.normalized_scores![i] - mean) ** 2, 0);
    return Math.sqrt(ss / (scored.length - 1));
  });
  return { means, sds };
}

const fmt = (x: number) => x.toFixed(3);

export function renderDashboard(sessions: SessionSummary[]): string {
  if (sessions.length === 0) {
    return `<div class="empty-state"><h2>No sessions yet</h2><p>Create one from the participant page.</p></div>`;
  }
  const rows = sessions
    .map((s) => {
      const status =
        s.results === null
          ? `${s.phase} (${s.progressDone}/${s.progressTotal})`
          : `complete, r=${fmt(s.results.analysis?.r ?? NaN)}, MAD=${fmt(s.results.analysis?.mad ?? NaN)}`;
      return `<tr data-session="${s.sessionId}"><td>${s.sessionId}</td><td>${status}</td></tr>`;
    })
    .join("");

  const completed = sessions.map((s) => s.results).filter((r): r is Results => r !== null);
  const charts = completed
    .map((r) =>
      r.analysis
        ? `<section class="session-chart" data-session="${r.session_id}">` +
          `<h3>${r.session_id}: r=${fmt(r.analysis.r)}, MAD=${fmt(r.analysis.mad)}</h3>` +
          beforeAfterChart(r.analysis.before, r.analysis.after) +
          `</section>`
        : "",
    )
    .join("");

  const { means, sds } = aggregateStats(completed);
  const aggregate =
    means.length > 0
      ? `<section class="aggregate"><h3>Mean pleasantness across sessions</h3>${aggregateChart(means, sds)}</section>`
      : "";

  return (
    `<table class="session-table"><thead><tr><th>session</th><th>status</th></tr></thead>` +
    `<tbody>${rows}</tbody></table>` +
    charts +
    aggregate
  );
}
