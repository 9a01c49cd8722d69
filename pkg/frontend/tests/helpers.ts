import { FetchLike } from "../src/api.js";
import { QueueItem } from "../src/types.js";

let nextCreated = 0;

export function makeItem(overrides: Partial<QueueItem> = {}): QueueItem {
  return {
    id: `item-${nextCreated}`,
    title: "A study of something",
    abstract: "Background and methods of the study.",
    source: "pubmed",
    backend: "forest",
    predicted: "systematic_review",
    probabilities: [0.1, 0.6, 0.1, 0.1, 0.1],
    entropy: 1.2,
    status: "pending",
    final_label: null,
    created_at: nextCreated++,
    resolved_at: null,
    ...overrides,
  };
}

export interface RecordedCall {
  url: string;
  method: string;
  body: unknown;
}

export type Responder = (call: RecordedCall) => { status: number; body: unknown };

function parseBody(body: string | undefined): unknown {
  if (body === undefined) {
    return null;
  }
  try {
    return JSON.parse(body);
  } catch {
    return body;
  }
}

/** Scriptable fetch double that records every call. */
export function fakeFetch(responder: Responder): { fetch: FetchLike; calls: RecordedCall[] } {
  const calls: RecordedCall[] = [];
  const fetch: FetchLike = async (url, init) => {
    const call: RecordedCall = {
      url,
      method: init?.method ?? "GET",
      body: parseBody(init?.body),
    };
    calls.push(call);
    const { status, body } = responder(call);
    return {
      status,
      json: async () => body,
      text: async () => JSON.stringify(body),
    };
  };
  return { fetch, calls };
}

export const emptyStats = {
  documents_classified: 0,
  items_resolved: 0,
  per_class_counts: {},
  estimated_minutes_saved: 0,
};
