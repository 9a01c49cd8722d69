import { z } from "zod";

export const DOC_CLASSES = [
  "broad_synthesis",
  "systematic_review",
  "primary_rct",
  "primary_non_rct",
  "excluded",
] as const;

export type DocClass = (typeof DOC_CLASSES)[number];

export const docClassSchema = z.enum(DOC_CLASSES);

export const queueItemSchema = z.object({
  id: z.string(),
  title: z.string(),
  abstract: z.string(),
  source: z.string(),
  backend: z.string(),
  predicted: docClassSchema,
  probabilities: z.array(z.number()).length(DOC_CLASSES.length),
  entropy: z.number(),
  status: z.string(),
  final_label: docClassSchema.nullable(),
  created_at: z.number(),
  resolved_at: z.number().nullable(),
});

export type QueueItem = z.infer<typeof queueItemSchema>;

export const queueSchema = z.array(queueItemSchema);

export const statsSchema = z.object({
  documents_classified: z.number(),
  items_resolved: z.number(),
  per_class_counts: z.record(z.string(), z.number()),
  estimated_minutes_saved: z.number(),
});

export type Stats = z.infer<typeof statsSchema>;

export const classifyResponseSchema = z.object({
  predicted: docClassSchema,
  probabilities: z.array(z.number()).length(DOC_CLASSES.length),
  entropy: z.number(),
});

export type ClassifyResponse = z.infer<typeof classifyResponseSchema>;

export const healthSchema = z.object({
  status: z.string(),
  model_versions: z.record(z.string(), z.number()),
});

/** What the reviewer chose for one queue item. */
export interface DecisionDraft {
  itemId: string;
  choice: "accept" | "correct";
  correctedLabel?: DocClass;
}

/** Confidence shown next to a prediction: the top class probability. */
export function confidenceOf(item: QueueItem): number {
  return Math.max(...item.probabilities);
}
