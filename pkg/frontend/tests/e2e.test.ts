// Relevance-feedback loop against the real search service.
//
// A fixture corpus is indexed by the backend, the service is spawned as
// a subprocess, and the test drives the same state transitions the UI
// uses: search, mark the best same-class hit as positive, resubmit, and
// require precision@10 for the query's class not to decrease.

import { execFileSync, spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { applyResults, emptyState, markPositive, toSearchRequest } from "../src/state";
import type { ResultRow, SearchResponse, SessionQueryState } from "./helpers";

const PYTHON = process.env.PYTHON ?? "python3";
const HERE = dirname(fileURLToPath(import.meta.url));

function backendAvailable(): boolean {
  try {
    execFileSync(PYTHON, ["-c", "import imsearch"], { stdio: "ignore" });
    return true;
  } catch {
    return false;
  }
}

const available = backendAvailable();

describe.skipIf(!available)("relevance feedback end to end", () => {
  const port = 30000 + (process.pid % 2000);
  const baseUrl = `http://127.0.0.1:${port}`;
  let server: ChildProcess | null = null;
  let labels: Record<string, string> = {};

  beforeAll(async () => {
    const workspace = mkdtempSync(join(tmpdir(), "imsearch-ui-e2e-"));
    execFileSync(PYTHON, [join(HERE, "fixtures", "build_fixture.py"), workspace], {
      stdio: "inherit",
    });
    labels = JSON.parse(readFileSync(join(workspace, "labels.json"), "utf-8"));
    server = spawn(
      PYTHON,
      ["-m", "imsearch.cli", "serve", "--port", String(port), "--indexRoot",
       join(workspace, "indices")],
      { stdio: "ignore" },
    );
    await waitForServer(`${baseUrl}/indices`, 30_000);
  }, 120_000);

  afterAll(() => {
    server?.kill();
  });

  async function submit(state: SessionQueryState): Promise<ResultRow[]> {
    const response = await fetch(`${baseUrl}/search`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(toSearchRequest(state)),
    });
    expect(response.status).toBe(200);
    const body = (await response.json()) as SearchResponse;
    return body.results;
  }

  function precisionAt10(rows: ResultRow[], wanted: string): number {
    const top = rows.slice(0, 10);
    const hits = top.filter((row) => labels[row.imageId] === wanted).length;
    return hits / 10;
  }

  it("mark-and-resubmit keeps precision@10 from decreasing", async () => {
    const queryId = "class00-000";
    const queryClass = labels[queryId];
    expect(queryClass).toBe("class00");

    let state = emptyState(["fixture"], 30);
    state = markPositive(state, { imageId: queryId });
    const first = await submit(state);
    state = applyResults(state, first);
    const before = precisionAt10(first, queryClass);
    expect(before).toBeGreaterThan(0.5); // the class dominates by construction

    const bestSameClass = first.find(
      (row) => row.imageId !== queryId && labels[row.imageId] === queryClass,
    );
    expect(bestSameClass).toBeDefined();

    state = markPositive(state, { imageId: bestSameClass!.imageId });
    const second = await submit(state);
    const after = precisionAt10(second, queryClass);
    expect(after).toBeGreaterThanOrEqual(before);
  }, 60_000);

  it("server order is preserved verbatim in the state", async () => {
    let state = emptyState(["fixture"], 15);
    state = markPositive(state, { imageId: "class01-000" });
    const rows = await submit(state);
    state = applyResults(state, rows);
    expect(state.lastResults.map((r) => r.imageId)).toEqual(rows.map((r) => r.imageId));
    expect(rows.map((r) => r.rank)).toEqual(rows.map((_, i) => i + 1));
  });

  it("negative feedback changes the next page", async () => {
    let state = emptyState(["fixture"], 20);
    state = markPositive(state, { imageId: "class02-000" });
    const first = await submit(state);

    const offClass = first.find((row) => labels[row.imageId] !== "class02");
    expect(offClass).toBeDefined();
    const { markNegative } = await import("../src/state");
    state = markNegative(state, { imageId: offClass!.imageId });
    const second = await submit(state);
    expect(second.map((r) => r.imageId)).not.toEqual(first.map((r) => r.imageId));
  });
});

if (!available) {
  console.warn("imsearch backend not importable; relevance-feedback e2e skipped");
}

async function waitForServer(url: string, timeoutMs: number): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  let lastError: unknown = null;
  while (Date.now() < deadline) {
    try {
      const response = await fetch(url);
      if (response.ok) return;
    } catch (error) {
      lastError = error;
    }
    await new Promise((resolve) => setTimeout(resolve, 200));
  }
  throw new Error(`service did not come up at ${url}: ${lastError}`);
}
