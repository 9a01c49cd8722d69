import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { QueueStore } from "../src/store.js";
import { QueueItem } from "../src/types.js";
import { RecordedCall, emptyStats, fakeFetch, makeItem } from "./helpers.js";

const BASE = "http://triage.test";

function storeWith(responder: (call: RecordedCall) => { status: number; body: unknown }) {
  const { fetch, calls } = fakeFetch(responder);
  return { store: new QueueStore(new ApiClient(BASE, fetch)), calls };
}

function queueResponder(items: () => QueueItem[], stats = () => ({ ...emptyStats })) {
  return (call: RecordedCall) => {
    if (call.url.includes("/queue")) {
      return { status: 200, body: items() };
    }
    if (call.url.includes("/stats")) {
      return { status: 200, body: stats() };
    }
    throw new Error(`unexpected call ${call.url}`);
  };
}

describe("QueueStore.refresh", () => {
  it("mirrors the server queue and stats", async () => {
    const items = [makeItem(), makeItem()];
    const { store } = storeWith(queueResponder(() => items));
    await store.refresh();
    expect(store.getState().items).toEqual(items);
    expect(store.getState().stats).toEqual(emptyStats);
    expect(store.getState().offline).toBe(false);
  });

  it("raises the unreachable banner when the service is down", async () => {
    const { fetch } = fakeFetch(() => {
      throw new Error("ECONNREFUSED");
    });
    const store = new QueueStore(new ApiClient(BASE, fetch));
    await store.refresh();
    expect(store.getState().offline).toBe(true);
    expect(store.getState().banner?.kind).toBe("error");
    expect(store.getState().banner?.message).toContain("retry");
  });
});

describe("QueueStore.submit", () => {
  it("removes the item optimistically and refreshes stats on accept", async () => {
    const items = [makeItem(), makeItem()];
    let resolved = 0;
    const { store, calls } = storeWith((call) => {
      if (call.url.includes("/feedback")) {
        resolved += 1;
        return { status: 200, body: { ...items[0]!, status: "accepted" } };
      }
      return queueResponder(
        () => items,
        () => ({ ...emptyStats, items_resolved: resolved }),
      )(call);
    });
    await store.refresh();
    await store.submit({ itemId: items[0]!.id, choice: "accept" });
    expect(store.getState().items.map((it) => it.id)).toEqual([items[1]!.id]);
    expect(store.getState().stats?.items_resolved).toBe(1);
    expect(calls.filter((c) => c.url.includes("/feedback"))).toHaveLength(1);
  });

  it("blocks same-label corrections client-side without a network call", async () => {
    const item = makeItem({ predicted: "primary_rct" });
    const { store, calls } = storeWith(queueResponder(() => [item]));
    await store.refresh();
    const before = calls.length;
    await store.submit({ itemId: item.id, choice: "correct", correctedLabel: "primary_rct" });
    expect(calls.length).toBe(before);
    expect(store.getState().banner?.message).toContain("accept instead");
    expect(store.getState().items).toHaveLength(1);
  });

  it("refetches on 409 and keeps the conflict notice", async () => {
    const first = makeItem();
    const rest = [makeItem()];
    let conflicted = false;
    const { store } = storeWith((call) => {
      if (call.url.includes("/feedback")) {
        conflicted = true;
        return { status: 409, body: { error: "already resolved" } };
      }
      return queueResponder(() => (conflicted ? rest : [first, ...rest]))(call);
    });
    await store.refresh();
    await store.submit({ itemId: first.id, choice: "accept" });
    expect(store.getState().items).toEqual(rest);
    expect(store.getState().banner?.kind).toBe("conflict");
    expect(store.getState().banner?.message).toContain(first.id);
  });

  it("re-queues the item visually on network failure", async () => {
    const items = [makeItem(), makeItem(), makeItem()];
    const target = items[1]!;
    const { store } = storeWith((call) => {
      if (call.url.includes("/feedback")) {
        throw new Error("network down");
      }
      return queueResponder(() => items)(call);
    });
    await store.refresh();
    await store.submit({ itemId: target.id, choice: "accept" });
    expect(store.getState().items.map((it) => it.id)).toEqual(items.map((it) => it.id));
    expect(store.getState().banner?.kind).toBe("error");
  });

  it("notifies subscribers on every state change", async () => {
    const { store } = storeWith(queueResponder(() => [makeItem()]));
    const seen: number[] = [];
    store.subscribe((state) => seen.push(state.items.length));
    await store.refresh();
    expect(seen.at(-1)).toBe(1);
  });
});
