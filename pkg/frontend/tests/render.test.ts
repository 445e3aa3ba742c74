import { beforeEach, describe, expect, it, vi } from "vitest";

import { AnnotationApi } from "../src/api";
import { renderTask } from "../src/render";
import { JudgmentSubmission, TaskView } from "../src/types";

const SECTION = "Alpha grew in the north. Beta lived by the sea.";

function sampleTask(): TaskView {
  return {
    task_id: "task-1",
    context: {
      title: "T",
      background: "Some background prose.",
      section_header: "History",
      section_text: SECTION,
    },
    items: [
      {
        index: 0,
        question: "Where did Alpha grow?",
        answer_a: "Alpha grew in the north.",
        answer_b: "Beta lived by the sea.",
        answer_a_cannot_find: false,
        answer_b_cannot_find: false,
        highlight_a: [[10, 15]],
        highlight_b: [[25, 29]],
        judgeable_aspects: ["correctness", "naturalness", "completeness"],
      },
      {
        index: 1,
        question: "Who ruled?",
        answer_a: "Beta lived by the sea.",
        answer_b: "I cannot find the answer.",
        answer_a_cannot_find: false,
        answer_b_cannot_find: true,
        highlight_a: [[25, 47]],
        highlight_b: [],
        judgeable_aspects: ["correctness"],
      },
      {
        index: 2,
        question: "Same answer?",
        answer_a: "Alpha grew in the north.",
        answer_b: "Alpha grew in the north.",
        answer_a_cannot_find: false,
        answer_b_cannot_find: false,
        highlight_a: [[0, 24]],
        highlight_b: [[0, 24]],
        judgeable_aspects: [],
      },
    ],
  };
}

function fakeApi(submitted: JudgmentSubmission[]): AnnotationApi {
  const api = new AnnotationApi("");
  api.submitJudgment = async (j) => {
    submitted.push(j);
  };
  return api;
}

function highlightedText(root: HTMLElement, cls: string): string {
  return Array.from(root.querySelectorAll(`.section-text .${cls}`))
    .map((n) => n.textContent)
    .join("");
}

describe("renderTask", () => {
  let root: HTMLElement;

  beforeEach(() => {
    document.body.innerHTML = "<div id='app'></div>";
    root = document.getElementById("app") as HTMLElement;
  });

  it("clicking an answer highlights exactly the service offsets", () => {
    renderTask(root, sampleTask(), fakeApi([]), "annie", () => {});
    const answerA = root.querySelector<HTMLElement>(".item[data-index='0'] .answer-a")!;
    answerA.click();
    expect(highlightedText(root, "hl-a")).toBe(SECTION.slice(10, 15));
    answerA.click();
    expect(highlightedText(root, "hl-a")).toBe("");
  });

  it("both sides can be highlighted at once in distinct styles", () => {
    renderTask(root, sampleTask(), fakeApi([]), "annie", () => {});
    root.querySelector<HTMLElement>(".item[data-index='0'] .answer-a")!.click();
    root.querySelector<HTMLElement>(".item[data-index='0'] .answer-b")!.click();
    expect(highlightedText(root, "hl-a")).toBe(SECTION.slice(10, 15));
    expect(highlightedText(root, "hl-b")).toBe(SECTION.slice(25, 29));
  });

  it("cannot-find answers have no highlight handler", () => {
    renderTask(root, sampleTask(), fakeApi([]), "annie", () => {});
    const answerB = root.querySelector<HTMLElement>(".item[data-index='1'] .answer-b")!;
    expect(answerB.classList.contains("no-highlight")).toBe(true);
    answerB.click();
    expect(highlightedText(root, "hl-b")).toBe("");
  });

  it("one-sided cannot-find items show only the correctness widget", () => {
    renderTask(root, sampleTask(), fakeApi([]), "annie", () => {});
    const item = root.querySelector(".item[data-index='1']")!;
    expect(item.querySelectorAll(".choice-correctness")).toHaveLength(1);
    expect(item.querySelectorAll(".choice-naturalness")).toHaveLength(0);
    expect(item.querySelectorAll(".choice-completeness")).toHaveLength(0);
  });

  it("identical-answer items render read-only", () => {
    renderTask(root, sampleTask(), fakeApi([]), "annie", () => {});
    const item = root.querySelector(".item[data-index='2']")!;
    expect(item.classList.contains("read-only")).toBe(true);
    expect(item.querySelectorAll("input")).toHaveLength(0);
  });

  it("never leaks system identity or dataset names", () => {
    renderTask(root, sampleTask(), fakeApi([]), "annie", () => {});
    const text = root.innerHTML.toLowerCase();
    expect(text).not.toContain("assignment");
    expect(text).not.toContain("system1");
    expect(text).not.toContain("system2");
  });

  it("submit stays disabled until every aspect and the preference are set", () => {
    renderTask(root, sampleTask(), fakeApi([]), "annie", () => {});
    const button = root.querySelector<HTMLButtonElement>("button.submit")!;
    expect(button.disabled).toBe(true);

    const pick = (selector: string, value: string) => {
      const input = root.querySelector<HTMLInputElement>(
        `${selector} input[value='${value}']`,
      )!;
      input.checked = true;
      input.dispatchEvent(new Event("change", { bubbles: true }));
    };
    pick(".item[data-index='0'] .choice-correctness", "A");
    pick(".item[data-index='0'] .choice-naturalness", "B");
    pick(".item[data-index='0'] .choice-completeness", "both");
    pick(".item[data-index='1'] .choice-correctness", "neither");
    expect(button.disabled).toBe(true);

    pick(".preference", "A");
    expect(button.disabled).toBe(true); // justification still missing
    const justification = root.querySelector<HTMLTextAreaElement>(".justification")!;
    justification.value = "A stays closer to the text";
    justification.dispatchEvent(new Event("input", { bubbles: true }));
    expect(button.disabled).toBe(false);
  });

  it("submits one judgment per aspect plus the preference, then advances", async () => {
    const submitted: JudgmentSubmission[] = [];
    const onComplete = vi.fn();
    renderTask(root, sampleTask(), fakeApi(submitted), "annie", onComplete);

    const pick = (selector: string, value: string) => {
      const input = root.querySelector<HTMLInputElement>(
        `${selector} input[value='${value}']`,
      )!;
      input.checked = true;
      input.dispatchEvent(new Event("change", { bubbles: true }));
    };
    pick(".item[data-index='0'] .choice-correctness", "A");
    pick(".item[data-index='0'] .choice-naturalness", "B");
    pick(".item[data-index='0'] .choice-completeness", "both");
    pick(".item[data-index='1'] .choice-correctness", "neither");
    pick(".preference", "A");
    const justification = root.querySelector<HTMLTextAreaElement>(".justification")!;
    justification.value = "A stays closer to the text";
    justification.dispatchEvent(new Event("input", { bubbles: true }));

    root.querySelector<HTMLButtonElement>("button.submit")!.click();
    await vi.waitFor(() => expect(onComplete).toHaveBeenCalled());

    expect(submitted).toHaveLength(5);
    const preference = submitted[submitted.length - 1];
    expect(preference.aspect).toBe("preference");
    expect(preference.item_index).toBeNull();
    expect(preference.justification).toBe("A stays closer to the text");
    for (const j of submitted.slice(0, 4)) {
      expect(j.task_id).toBe("task-1");
      expect(j.annotator_id).toBe("annie");
    }
  });

  it("surfaces a service rejection and re-enables submit", async () => {
    const api = new AnnotationApi("");
    api.submitJudgment = async () => {
      throw new Error("duplicate judgment");
    };
    renderTask(root, sampleTask(), api, "annie", () => {});

    const pick = (selector: string, value: string) => {
      const input = root.querySelector<HTMLInputElement>(
        `${selector} input[value='${value}']`,
      )!;
      input.checked = true;
      input.dispatchEvent(new Event("change", { bubbles: true }));
    };
    pick(".item[data-index='0'] .choice-correctness", "A");
    pick(".item[data-index='0'] .choice-naturalness", "B");
    pick(".item[data-index='0'] .choice-completeness", "both");
    pick(".item[data-index='1'] .choice-correctness", "neither");
    pick(".preference", "A");
    const justification = root.querySelector<HTMLTextAreaElement>(".justification")!;
    justification.value = "reason";
    justification.dispatchEvent(new Event("input", { bubbles: true }));

    const button = root.querySelector<HTMLButtonElement>("button.submit")!;
    button.click();
    await vi.waitFor(() => {
      expect(root.querySelector(".service-error")?.textContent).toContain(
        "duplicate judgment",
      );
    });
    expect(button.disabled).toBe(false);
  });
});
