import { DOC_CLASSES, DecisionDraft, QueueItem } from "./types.js";

/**
 * Keyboard mapping for the top-of-queue item:
 *   a      accept the prediction
 *   1..5   correct to the class at that position (broad_synthesis .. excluded)
 * Returns null for unmapped keys or an empty queue.
 */
export function decisionForKey(key: string, top: QueueItem | undefined): DecisionDraft | null {
  if (!top) {
    return null;
  }
  if (key === "a") {
    return { itemId: top.id, choice: "accept" };
  }
  const slot = Number.parseInt(key, 10);
  if (slot >= 1 && slot <= DOC_CLASSES.length) {
    return { itemId: top.id, choice: "correct", correctedLabel: DOC_CLASSES[slot - 1]! };
  }
  return null;
}
