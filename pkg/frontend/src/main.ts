import { ApiClient } from "./api.js";
import { decisionForKey } from "./shortcuts.js";
import { QueueStore } from "./store.js";
import { renderApp } from "./view.js";
import { DocClass } from "./types.js";

const STATS_POLL_MS = 15_000;

export function mount(root: HTMLElement, baseUrl: string): QueueStore {
  const store = new QueueStore(new ApiClient(baseUrl));

  store.subscribe((state) => {
    root.innerHTML = renderApp(state);
  });

  root.addEventListener("click", (event) => {
    const button = (event.target as HTMLElement).closest<HTMLButtonElement>("button[data-action]");
    if (!button) {
      return;
    }
    const { action, id, label } = button.dataset;
    if (action === "retry") {
      void store.refresh();
    } else if (action === "accept" && id) {
      void store.submit({ itemId: id, choice: "accept" });
    } else if (action === "correct" && id && label) {
      void store.submit({ itemId: id, choice: "correct", correctedLabel: label as DocClass });
    }
  });

  document.addEventListener("keydown", (event) => {
    if (event.target instanceof HTMLInputElement || event.target instanceof HTMLTextAreaElement) {
      return;
    }
    const draft = decisionForKey(event.key, store.getState().items[0]);
    if (draft) {
      void store.submit(draft);
    }
  });

  void store.refresh();
  window.setInterval(() => void store.refresh(), STATS_POLL_MS);
  return store;
}

declare global {
  interface Window {
    littriageMount?: typeof mount;
  }
}

if (typeof window !== "undefined") {
  window.littriageMount = mount;
}
