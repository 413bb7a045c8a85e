// Pure presentation helpers. The row list preserves the service response
// order exactly; scores render with three decimals.

import type { QueryResponse } from "./api.js";

export interface ResultRow {
  rank: number;
  id: string;
  scoreText: string;
  audioUrl: string;
  barWidthPct: number;
}

export function resultRows(response: QueryResponse): ResultRow[] {
  return response.results.map((r, i) => ({
    rank: i + 1,
    id: r.id,
    scoreText: r.score.toFixed(3),
    audioUrl: r.audio_url,
    barWidthPct: Math.round(Math.max(0, Math.min(1, (r.score + 1) / 2)) * 100),
  }));
}

export function statusLine(response: QueryResponse): string {
  return `${response.results.length} results · ${response.backend} · ${response.latency_ms.toFixed(0)} ms`;
}

function escapeHtml(text: string): string {
  return text.replace(/[&<>"']/g, (c) => `&#${c.charCodeAt(0)};`);
}

export function resultListHtml(response: QueryResponse): string {
  const rows = resultRows(response)
    .map(
      (row) => `
  <li class="result" data-id="${escapeHtml(row.id)}">
    <span class="rank">${row.rank}</span>
    <span class="rid">${escapeHtml(row.id)}</span>
    <span class="bar"><span class="fill" style="width:${row.barWidthPct}%"></span></span>
    <span class="score">${row.scoreText}</span>
    <button class="play" data-url="${escapeHtml(row.audioUrl)}">play</button>
  </li>`,
    )
    .join("");
  return `<ul class="results">${rows}\n</ul>`;
}
