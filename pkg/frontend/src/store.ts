import { ApiClient, ConflictError } from "./api.js";
import { DecisionDraft, QueueItem, Stats } from "./types.js";

export interface Banner {
  kind: "error" | "conflict" | "info";
  message: string;
}

export interface StoreState {
  items: QueueItem[];
  stats: Stats | null;
  banner: Banner | null;
  /** True while the last load failed and the service looks unreachable. */
  offline: boolean;
}

export type Listener = (state: StoreState) => void;

/**
 * Session state for one reviewer: mirrors the server queue, applies
 * decisions optimistically, and reconciles on conflicts. Every displayed
 * field comes from a service response; the store never invents state.
 */
export class QueueStore {
  private state: StoreState = { items: [], stats: null, banner: null, offline: false };
  private listeners: Listener[] = [];

  constructor(
    private readonly api: ApiClient,
    private readonly queueLimit = 50,
  ) {}

  getState(): StoreState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private setState(patch: Partial<StoreState>): void {
    this.state = { ...this.state, ...patch };
    for (const listener of this.listeners) {
      listener(this.state);
    }
  }

  /** Fetch queue and stats; on failure raise the service-unreachable banner. */
  async refresh(): Promise<void> {
    try {
      const [items, stats] = await Promise.all([
        this.api.queue(this.queueLimit),
        this.api.stats(),
      ]);
      this.setState({ items, stats, offline: false, banner: null });
    } catch (err) {
      this.setState({
        offline: true,
        banner: { kind: "error", message: `service unreachable: ${String(err)} — retry` },
      });
    }
  }

  /** Client-side mirror of the server's validation rules. */
  validate(draft: DecisionDraft): string | null {
    const item = this.state.items.find((it) => it.id === draft.itemId);
    if (!item) {
      return `item ${draft.itemId} is not in the queue`;
    }
    if (draft.choice === "correct") {
      if (!draft.correctedLabel) {
        return "pick a label to correct to";
      }
      if (draft.correctedLabel === item.predicted) {
        return "corrected label equals the prediction — use accept instead";
      }
    }
    return null;
  }

  /**
   * Optimistic submit: the item leaves the queue immediately; a 409 from a
   * concurrent session restores consistency by refetching; a network failure
   * visually re-queues the item.
   */
  async submit(draft: DecisionDraft): Promise<void> {
    const problem = this.validate(draft);
    if (problem) {
      this.setState({ banner: { kind: "error", message: problem } });
      return;
    }
    const index = this.state.items.findIndex((it) => it.id === draft.itemId);
    const item = this.state.items[index]!;
    this.setState({
      items: this.state.items.filter((it) => it.id !== draft.itemId),
      banner: null,
    });
    try {
      if (draft.choice === "accept") {
        await this.api.accept(draft.itemId);
      } else {
        await this.api.correct(draft.itemId, draft.correctedLabel!);
      }
      const stats = await this.api.stats();
      this.setState({ stats });
    } catch (err) {
      if (err instanceof ConflictError) {
        this.setState({
          banner: { kind: "conflict", message: `${item.id} was resolved in another session` },
        });
        await this.refresh();
        // refresh clears the banner on success; keep the conflict notice
        this.setState({
          banner: { kind: "conflict", message: `${item.id} was resolved in another session` },
        });
      } else {
        const restored = [...this.state.items];
        restored.splice(Math.min(index, restored.length), 0, item);
        this.setState({
          items: restored,
          banner: { kind: "error", message: `decision failed: ${String(err)}` },
        });
      }
    }
  }
}
