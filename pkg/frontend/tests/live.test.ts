/**
 * End-to-end check against a live backend service:
 *  - 10 seeded pending items with distinct entropies render in server order;
 *  - accepting the top item shrinks the queue and bumps the resolved count;
 *  - a second session resolving the same item sees a conflict and refetches.
 *
 * Requires the backend package installed (`littriage` on PATH).
 */
import { ChildProcess, execFileSync, spawn } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { QueueStore } from "../src/store.js";
import { renderQueue } from "../src/view.js";

const PORT = 8600 + (process.pid % 200);
const BASE = `http://127.0.0.1:${PORT}`;

let workdir: string;
let server: ChildProcess;

function seedCorpus(): string {
  // each item mixes the vocabularies of a different class pair, so the
  // model is torn between different classes -> a spread of distinct entropies
  const pairs = [
    [0, 1], [0, 2], [0, 3], [0, 4], [1, 2],
    [1, 3], [1, 4], [2, 3], [2, 4], [3, 4],
  ] as const;
  const lines: string[] = [];
  for (let k = 0; k < 10; k++) {
    const tokens: string[] = [];
    for (const cls of pairs[k]!) {
      for (let j = 0; j < 3; j++) {
        tokens.push(`class${cls}sig0${j}`, `class${cls}sig0${j}`);
      }
    }
    tokens.push(`term00${k % 10}`, `term01${k % 10}`);
    lines.push(
      JSON.stringify({
        id: `ui-${String(k).padStart(3, "0")}`,
        title: `Candidate article ${k}`,
        abstract: tokens.join(" "),
        source: "pubmed",
      }),
    );
  }
  return lines.join("\n") + "\n";
}

async function waitForHealth(): Promise<void> {
  for (let attempt = 0; attempt < 80; attempt++) {
    try {
      const resp = await fetch(`${BASE}/healthz`);
      if (resp.status === 200) {
        return;
      }
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 250));
  }
  throw new Error("backend service did not become healthy");
}

beforeAll(async () => {
  workdir = mkdtempSync(join(tmpdir(), "curation-ui-live-"));
  const corpus = join(workdir, "corpus.jsonl");
  const model = join(workdir, "model.json");
  execFileSync("littriage", ["synth", "--n", "300", "--seed", "41", "--out", corpus]);
  execFileSync("littriage", [
    "train",
    "--corpus",
    corpus,
    "--model-out",
    model,
    "--n-trees",
    "20",
    "--seed",
    "5",
  ]);
  server = spawn(
    "littriage",
    [
      "serve",
      "--host",
      "127.0.0.1",
      "--port",
      String(PORT),
      "--store",
      join(workdir, "store"),
      "--forest-model",
      model,
    ],
    { stdio: "ignore" },
  );
  await waitForHealth();
  const enqueue = await new ApiClient(BASE).enqueueCorpus(seedCorpus());
  expect(enqueue.enqueued).toBe(10);
}, 120_000);

afterAll(() => {
  server?.kill();
  rmSync(workdir, { recursive: true, force: true });
});

describe("curation UI against a live service", () => {
  it("renders 10 pending items with distinct entropies in server order", async () => {
    const items = await new ApiClient(BASE).queue();
    expect(items).toHaveLength(10);
    const entropies = items.map((it) => it.entropy);
    expect(new Set(entropies).size).toBe(10);
    const sorted = [...entropies].sort((a, b) => b - a);
    expect(entropies).toEqual(sorted);

    const html = renderQueue(items);
    const positions = items.map((it) => html.indexOf(`data-id="${it.id}"`));
    expect(positions.every((p) => p >= 0)).toBe(true);
    expect(positions).toEqual([...positions].sort((a, b) => a - b));
  }, 30_000);

  it("accept removes the top item and bumps the resolved count; a second session conflicts and refetches", async () => {
    const sessionA = new QueueStore(new ApiClient(BASE));
    const sessionB = new QueueStore(new ApiClient(BASE));
    await sessionA.refresh();
    await sessionB.refresh();
    const top = sessionA.getState().items[0]!;
    expect(sessionB.getState().items[0]!.id).toBe(top.id);
    const resolvedBefore = sessionA.getState().stats!.items_resolved;

    await sessionA.submit({ itemId: top.id, choice: "accept" });
    expect(sessionA.getState().items).toHaveLength(9);
    expect(sessionA.getState().stats!.items_resolved).toBe(resolvedBefore + 1);
    const serverQueue = await new ApiClient(BASE).queue();
    expect(sessionA.getState().items.map((it) => it.id)).toEqual(serverQueue.map((it) => it.id));

    // session B still shows the stale item; resolving it surfaces the conflict
    expect(sessionB.getState().items).toHaveLength(10);
    await sessionB.submit({ itemId: top.id, choice: "accept" });
    expect(sessionB.getState().banner?.kind).toBe("conflict");
    expect(sessionB.getState().banner?.message).toContain(top.id);
    expect(sessionB.getState().items.map((it) => it.id)).toEqual(serverQueue.map((it) => it.id));
    expect(sessionB.getState().stats!.items_resolved).toBe(resolvedBefore + 1);
  }, 30_000);
});
