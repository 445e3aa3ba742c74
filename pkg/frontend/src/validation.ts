import { Choice, ItemView } from "./types";

export interface DraftJudgments {
  // keyed by `${itemIndex}:${aspect}`
  itemChoices: Map<string, Choice>;
  preference: Choice | null;
  justification: string;
}

export function emptyDraft(): DraftJudgments {
  return { itemChoices: new Map(), preference: null, justification: "" };
}

export interface Problem {
  itemIndex: number | null;
  message: string;
}

/**
 * Mirror of the service-side rules: every judgeable aspect of every item
 * needs a choice, and the conversation-level preference needs a non-empty
 * justification. Items with no judgeable aspects are skipped entirely.
 */
export function validateDraft(items: ItemView[], draft: DraftJudgments): Problem[] {
  const problems: Problem[] = [];
  for (const item of items) {
    for (const aspect of item.judgeable_aspects) {
      if (!draft.itemChoices.has(`${item.index}:${aspect}`)) {
        problems.push({
          itemIndex: item.index,
          message: `question ${item.index + 1}: choose an option for ${aspect}`,
        });
      }
    }
  }
  if (draft.preference === null) {
    problems.push({ itemIndex: null, message: "choose an overall preference" });
  } else if (draft.justification.trim() === "") {
    problems.push({ itemIndex: null, message: "preference needs a justification" });
  }
  return problems;
}

export function canSubmit(items: ItemView[], draft: DraftJudgments): boolean {
  return validateDraft(items, draft).length === 0;
}
