import { describe, expect, it } from "vitest";

import { ItemView } from "../src/types";
import { canSubmit, emptyDraft, validateDraft } from "../src/validation";

function item(index: number, aspects: ItemView["judgeable_aspects"]): ItemView {
  return {
    index,
    question: `Q${index}?`,
    answer_a: "alpha",
    answer_b: "beta",
    answer_a_cannot_find: false,
    answer_b_cannot_find: false,
    highlight_a: [[0, 5]],
    highlight_b: [[6, 10]],
    judgeable_aspects: aspects,
  };
}

describe("validateDraft", () => {
  it("flags every missing aspect with an item pointer", () => {
    const items = [item(0, ["correctness", "naturalness"]), item(1, ["correctness"])];
    const problems = validateDraft(items, emptyDraft());
    const itemProblems = problems.filter((p) => p.itemIndex !== null);
    expect(itemProblems).toHaveLength(3);
    expect(itemProblems.map((p) => p.itemIndex)).toEqual([0, 0, 1]);
  });

  it("skips items with no judgeable aspects", () => {
    const problems = validateDraft([item(0, [])], emptyDraft());
    expect(problems.filter((p) => p.itemIndex !== null)).toHaveLength(0);
  });

  it("requires a preference", () => {
    const problems = validateDraft([], emptyDraft());
    expect(problems.map((p) => p.message)).toContain("choose an overall preference");
  });

  it("requires a non-blank justification", () => {
    const draft = emptyDraft();
    draft.preference = "A";
    draft.justification = "   ";
    const problems = validateDraft([], draft);
    expect(problems.map((p) => p.message)).toContain("preference needs a justification");
  });

  it("passes when everything is filled in", () => {
    const items = [item(0, ["correctness"])];
    const draft = emptyDraft();
    draft.itemChoices.set("0:correctness", "B");
    draft.preference = "neither";
    draft.justification = "both answers wander off topic";
    expect(validateDraft(items, draft)).toEqual([]);
    expect(canSubmit(items, draft)).toBe(true);
  });
});
