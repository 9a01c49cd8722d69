import {
  ClassifyResponse,
  DocClass,
  QueueItem,
  Stats,
  classifyResponseSchema,
  healthSchema,
  queueItemSchema,
  queueSchema,
  statsSchema,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

/** The item was already resolved by another session (HTTP 409). */
export class ConflictError extends ApiError {
  constructor(message: string) {
    super(409, message);
    this.name = "ConflictError";
  }
}

export type FetchLike = (
  url: string,
  init?: {
    method?: string;
    headers?: Record<string, string>;
    body?: string;
  },
) => Promise<{ status: number; json(): Promise<unknown>; text(): Promise<string> }>;

async function errorMessage(resp: { json(): Promise<unknown> }): Promise<string> {
  try {
    const body = (await resp.json()) as { error?: string };
    return body.error ?? "request failed";
  } catch {
    return "request failed";
  }
}

/** Thin typed client over the triage HTTP API. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request(path: string, init?: Parameters<FetchLike>[1]): Promise<unknown> {
    const resp = await this.fetchImpl(this.baseUrl + path, init);
    if (resp.status === 409) {
      throw new ConflictError(await errorMessage(resp));
    }
    if (resp.status >= 400) {
      throw new ApiError(resp.status, await errorMessage(resp));
    }
    return resp.json();
  }

  private post(path: string, body: unknown): Promise<unknown> {
    return this.request(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
    });
  }

  async queue(limit = 50): Promise<QueueItem[]> {
    return queueSchema.parse(await this.request(`/queue?limit=${limit}`));
  }

  async stats(): Promise<Stats> {
    return statsSchema.parse(await this.request("/stats"));
  }

  async classify(title: string, abstract: string, backend = "forest"): Promise<ClassifyResponse> {
    return classifyResponseSchema.parse(await this.post("/classify", { title, abstract, backend }));
  }

  async accept(itemId: string): Promise<QueueItem> {
    return queueItemSchema.parse(
      await this.post("/feedback", { item_id: itemId, decision: "accept" }),
    );
  }

  async correct(itemId: string, label: DocClass): Promise<QueueItem> {
    return queueItemSchema.parse(
      await this.post("/feedback", { item_id: itemId, decision: { correct: label } }),
    );
  }

  async enqueueCorpus(jsonl: string): Promise<{ enqueued: number }> {
    return (await this.request("/documents", {
      method: "POST",
      headers: { "content-type": "application/jsonl" },
      body: jsonl,
    })) as { enqueued: number };
  }

  async retrain(minNewLabels?: number): Promise<{ retrained: boolean }> {
    return (await this.post("/retrain", { min_new_labels: minNewLabels ?? null })) as {
      retrained: boolean;
    };
  }

  async health(): Promise<{ status: string; model_versions: Record<string, number> }> {
    return healthSchema.parse(await this.request("/healthz"));
  }
}
