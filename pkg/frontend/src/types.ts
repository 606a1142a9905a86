export type DimensionOrder = "valence_first" | "arousal_first";

export type Valence = "negative" | "neutral" | "positive";
export type Arousal = "low" | "high";

export const VALENCE_VALUES: readonly Valence[] = [
  "negative",
  "neutral",
  "positive",
];
export const AROUSAL_VALUES: readonly Arousal[] = ["low", "high"];

/** One queue item as served by GET /queue/next. */
export interface QueueItem {
  done: false;
  utterance_id: string;
  rank: number;
  cluster_id: number;
  cluster_size: number;
  audio_url: string;
  context_url: string | null;
  dimension_order: DimensionOrder;
  annotator: string;
  queue_size: number;
}

export interface QueueDone {
  done: true;
  queue_size: number;
  labeled: number;
}

export type QueueResponse = QueueItem | QueueDone;

export interface Progress {
  queue_size: number;
  labeled: number;
  percent: number;
  overlap_n: number;
  by_annotator: Record<string, number>;
}

/** Body of POST /label. Erroneous items must carry null dimensions. */
export interface LabelSubmission {
  utterance_id: string;
  annotator: string;
  valence: Valence | null;
  arousal: Arousal | null;
  erroneous: boolean;
  order: DimensionOrder;
}

export interface LabelResponse {
  status: "ok";
  superseded: boolean;
}
