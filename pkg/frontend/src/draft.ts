import type {
  Arousal,
  DimensionOrder,
  LabelSubmission,
  QueueItem,
  Valence,
} from "./types";

/** The in-flight annotation for the current clip. Nothing else persists
 *  on the client side. */
export interface LabelDraft {
  valence: Valence | null;
  arousal: Arousal | null;
  erroneous: boolean;
}

export function emptyDraft(): LabelDraft {
  return { valence: null, arousal: null, erroneous: false };
}

/** Submit is allowed when both dimensions are chosen XOR the clip is
 *  flagged erroneous (an erroneous clip carries no labels). */
export function canSubmit(draft: LabelDraft): boolean {
  if (draft.erroneous) {
    return draft.valence === null && draft.arousal === null;
  }
  return draft.valence !== null && draft.arousal !== null;
}

/** Dimensions in the order this item must present them. */
export function presentation(order: DimensionOrder):
    ["valence", "arousal"] | ["arousal", "valence"] {
  return order === "valence_first"
    ? ["valence", "arousal"]
    : ["arousal", "valence"];
}

/** The second dimension stays hidden until the first is answered. */
export function revealSecond(draft: LabelDraft, order: DimensionOrder):
    boolean {
  const [first] = presentation(order);
  return draft.erroneous || draft[first] !== null;
}

export function toSubmission(
  draft: LabelDraft,
  item: QueueItem,
): LabelSubmission {
  if (!canSubmit(draft)) {
    throw new Error("draft is not submittable");
  }
  return {
    utterance_id: item.utterance_id,
    annotator: item.annotator,
    valence: draft.erroneous ? null : draft.valence,
    arousal: draft.erroneous ? null : draft.arousal,
    erroneous: draft.erroneous,
    order: item.dimension_order,
  };
}
