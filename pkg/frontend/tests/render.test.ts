import { describe, expect, it } from "vitest";

import type { QueryResponse } from "../src/api.js";
import { resultListHtml, resultRows, statusLine } from "../src/render.js";

// recorded service fixture: the rendered list must match it exactly
const FIXTURE: QueryResponse = {
  results: [
    { id: "r007", score: 0.98765, audio_url: "/api/audio/r007" },
    { id: "r001", score: 0.6543, audio_url: "/api/audio/r001" },
    { id: "r014", score: 0.65004, audio_url: "/api/audio/r014" },
    { id: "r003", score: -0.1204, audio_url: "/api/audio/r003" },
    { id: "r009", score: -0.9, audio_url: "/api/audio/r009" },
  ],
  backend: "encoder",
  latency_ms: 41.8,
};

describe("resultRows", () => {
  it("preserves response order and ids exactly", () => {
    const rows = resultRows(FIXTURE);
    expect(rows.map((r) => r.id)).toEqual(["r007", "r001", "r014", "r003", "r009"]);
    expect(rows.map((r) => r.rank)).toEqual([1, 2, 3, 4, 5]);
  });

  it("renders scores with three decimals", () => {
    const rows = resultRows(FIXTURE);
    expect(rows.map((r) => r.scoreText)).toEqual(["0.988", "0.654", "0.650", "-0.120", "-0.900"]);
  });

  it("never filters results", () => {
    expect(resultRows(FIXTURE)).toHaveLength(FIXTURE.results.length);
  });

  it("maps cosine scores onto a 0..100 bar", () => {
    const rows = resultRows(FIXTURE);
    expect(rows[0].barWidthPct).toBe(99);
    expect(rows[4].barWidthPct).toBe(5);
  });
});

describe("resultListHtml", () => {
  it("keeps the fixture order, ids and 3-decimal scores in the markup", () => {
    const html = resultListHtml(FIXTURE);
    const idOrder = [...html.matchAll(/class="rid">([^<]+)</g)].map((m) => m[1]);
    expect(idOrder).toEqual(["r007", "r001", "r014", "r003", "r009"]);
    const scores = [...html.matchAll(/class="score">([^<]+)</g)].map((m) => m[1]);
    expect(scores).toEqual(["0.988", "0.654", "0.650", "-0.120", "-0.900"]);
    for (const r of FIXTURE.results) {
      expect(html).toContain(`data-url="${r.audio_url}"`);
    }
  });

  it("escapes markup in ids", () => {
    const html = resultListHtml({
      results: [{ id: "<img src=x>", score: 0.5, audio_url: "/api/audio/x" }],
      backend: "encoder",
      latency_ms: 1,
    });
    expect(html).not.toContain("<img");
  });
});

describe("statusLine", () => {
  it("summarizes count, backend and latency", () => {
    expect(statusLine(FIXTURE)).toBe("5 results · encoder · 42 ms");
  });
});
