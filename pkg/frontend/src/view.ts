import { Banner, StoreState } from "./store.js";
import { DOC_CLASSES, QueueItem, Stats, confidenceOf } from "./types.js";

const ABSTRACT_PREVIEW_CHARS = 160;

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function truncateAbstract(abstract: string): string {
  if (abstract.length <= ABSTRACT_PREVIEW_CHARS) {
    return abstract;
  }
  return abstract.slice(0, ABSTRACT_PREVIEW_CHARS - 1).trimEnd() + "…";
}

function probabilityBars(item: QueueItem): string {
  return DOC_CLASSES.map((cls, i) => {
    const p = item.probabilities[i]!;
    const highlight = cls === item.predicted ? " class-row--top" : "";
    return (
      `<div class="class-row${highlight}" data-class="${cls}">` +
      `<span class="class-name">${cls}</span>` +
      `<span class="class-prob">${p.toFixed(2)}</span>` +
      `</div>`
    );
  }).join("");
}

export function renderItem(item: QueueItem, position: number): string {
  const shortcuts =
    position === 0
      ? `<div class="shortcuts">a: accept · ${DOC_CLASSES.map(
          (cls, i) => `${i + 1}: ${cls}`,
        ).join(" · ")}</div>`
      : "";
  return (
    `<article class="item" data-id="${escapeHtml(item.id)}">` +
    `<h3>${escapeHtml(item.title)}</h3>` +
    `<p class="abstract">${escapeHtml(truncateAbstract(item.abstract))}</p>` +
    `<p class="verdict">predicted <strong>${item.predicted}</strong>` +
    ` · confidence ${confidenceOf(item).toFixed(2)}` +
    ` · entropy ${item.entropy.toFixed(3)}</p>` +
    probabilityBars(item) +
    `<div class="actions">` +
    `<button data-action="accept" data-id="${escapeHtml(item.id)}">Accept</button>` +
    DOC_CLASSES.map(
      (cls) =>
        `<button data-action="correct" data-id="${escapeHtml(item.id)}" data-label="${cls}">` +
        `${cls}</button>`,
    ).join("") +
    `</div>` +
    shortcuts +
    `</article>`
  );
}

/** Items appear exactly in server order (entropy desc, created_at asc, id asc). */
export function renderQueue(items: QueueItem[]): string {
  if (items.length === 0) {
    return `<p class="empty">Nothing pending — the queue is clear.</p>`;
  }
  return items.map((item, i) => renderItem(item, i)).join("\n");
}

export function minutesToHours(minutes: number): string {
  return (minutes / 60).toFixed(1);
}

export function renderStats(stats: Stats | null): string {
  if (!stats) {
    return `<p class="stats-pending">stats unavailable</p>`;
  }
  const perClass = DOC_CLASSES.map(
    (cls) => `<li>${cls}: ${stats.per_class_counts[cls] ?? 0}</li>`,
  ).join("");
  return (
    `<dl class="stats">` +
    `<dt>Documents classified</dt><dd>${stats.documents_classified}</dd>` +
    `<dt>Items resolved</dt><dd>${stats.items_resolved}</dd>` +
    `<dt>Estimated reviewer time saved</dt>` +
    `<dd>${minutesToHours(stats.estimated_minutes_saved)} hours</dd>` +
    `</dl><ul class="per-class">${perClass}</ul>`
  );
}

export function renderBanner(banner: Banner | null): string {
  if (!banner) {
    return "";
  }
  const retry = banner.kind === "error" ? `<button data-action="retry">Retry</button>` : "";
  return `<div class="banner banner--${banner.kind}">${escapeHtml(banner.message)}${retry}</div>`;
}

export function renderApp(state: StoreState): string {
  return (
    renderBanner(state.banner) +
    `<section id="stats-panel">${renderStats(state.stats)}</section>` +
    `<section id="queue-panel">${renderQueue(state.items)}</section>`
  );
}
