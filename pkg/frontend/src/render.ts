import { AnnotationApi } from "./api";
import { HighlightState, segmentText } from "./highlight";
import { Aspect, CHOICES, CHOICE_LABELS, Choice, ItemView, TaskView } from "./types";
import { DraftJudgments, canSubmit, emptyDraft, validateDraft } from "./validation";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

export class TaskController {
  readonly highlights = new HighlightState();
  readonly draft: DraftJudgments = emptyDraft();

  constructor(
    readonly root: HTMLElement,
    readonly task: TaskView,
    readonly api: AnnotationApi,
    readonly annotatorId: string,
    readonly onComplete: () => void,
  ) {}

  render(): void {
    this.root.textContent = "";
    const layout = el("div", "task");

    const left = el("div", "context-pane");
    left.appendChild(el("h2", "section-header", this.task.context.section_header));
    left.appendChild(el("p", "background", this.task.context.background));
    left.appendChild(this.buildSectionPane());
    layout.appendChild(left);

    const right = el("div", "items-pane");
    for (const item of this.task.items) {
      right.appendChild(this.buildItem(item));
    }
    right.appendChild(this.buildPreferenceBlock());
    right.appendChild(this.buildSubmitRow());
    layout.appendChild(right);
    this.root.appendChild(layout);
  }

  private buildSectionPane(): HTMLElement {
    const pane = el("div", "section-text");
    const text = this.task.context.section_text;
    const a = this.highlights.activeIntervals(this.task.items, "a");
    const b = this.highlights.activeIntervals(this.task.items, "b");
    for (const seg of segmentText(text.length, a, b)) {
      const cls = seg.marking === "none" ? "" : `hl-${seg.marking}`;
      pane.appendChild(el("span", cls, text.slice(seg.start, seg.end)));
    }
    return pane;
  }

  private refreshSection(): void {
    const old = this.root.querySelector(".section-text");
    if (old) old.replaceWith(this.buildSectionPane());
  }

  private buildItem(item: ItemView): HTMLElement {
    const box = el("div", "item");
    box.dataset.index = String(item.index);
    box.appendChild(el("p", "question", `Q${item.index + 1}. ${item.question}`));
    box.appendChild(this.buildAnswer(item, "a", item.answer_a));
    box.appendChild(this.buildAnswer(item, "b", item.answer_b));

    if (item.judgeable_aspects.length === 0) {
      box.classList.add("read-only");
      box.appendChild(el("p", "note", "Both systems gave the same answer."));
      return box;
    }
    for (const aspect of item.judgeable_aspects) {
      box.appendChild(this.buildChoiceRow(aspect, item.index));
    }
    return box;
  }

  private buildAnswer(item: ItemView, side: "a" | "b", text: string): HTMLElement {
    const label = side === "a" ? "System A" : "System B";
    const node = el("div", `answer answer-${side}`, `${label}: ${text}`);
    const intervals = side === "a" ? item.highlight_a : item.highlight_b;
    if (intervals.length === 0) {
      // cannot-find answers and offset-less data render without highlight
      node.classList.add("no-highlight");
      return node;
    }
    node.addEventListener("click", () => {
      const on = this.highlights.toggle(item.index, side);
      node.classList.toggle("active", on);
      this.refreshSection();
    });
    return node;
  }

  private buildChoiceRow(aspect: Aspect, itemIndex: number): HTMLElement {
    const row = el("div", `choice-row choice-${aspect}`);
    row.appendChild(el("span", "aspect-label", aspect));
    const group = `item-${itemIndex}-${aspect}`;
    for (const choice of CHOICES) {
      const wrap = el("label", undefined, CHOICE_LABELS[choice]);
      const input = el("input");
      input.type = "radio";
      input.name = group;
      input.value = choice;
      input.addEventListener("change", () => {
        this.draft.itemChoices.set(`${itemIndex}:${aspect}`, choice);
        this.refreshSubmit();
      });
      wrap.prepend(input);
      row.appendChild(wrap);
    }
    return row;
  }

  private buildPreferenceBlock(): HTMLElement {
    const block = el("div", "preference");
    block.appendChild(el("p", undefined, "Which system would you prefer overall?"));
    for (const choice of CHOICES) {
      const wrap = el("label", undefined, CHOICE_LABELS[choice]);
      const input = el("input");
      input.type = "radio";
      input.name = "preference";
      input.value = choice;
      input.addEventListener("change", () => {
        this.draft.preference = choice;
        this.refreshSubmit();
      });
      wrap.prepend(input);
      block.appendChild(wrap);
    }
    const justification = el("textarea", "justification");
    justification.placeholder = "Briefly justify your preference";
    justification.addEventListener("input", () => {
      this.draft.justification = justification.value;
      this.refreshSubmit();
    });
    block.appendChild(justification);
    return block;
  }

  private buildSubmitRow(): HTMLElement {
    const row = el("div", "submit-row");
    const problems = el("ul", "problems");
    const button = el("button", "submit", "Submit");
    button.disabled = true;
    button.addEventListener("click", () => void this.submit(button, problems));
    row.appendChild(problems);
    row.appendChild(button);
    return row;
  }

  private refreshSubmit(): void {
    const button = this.root.querySelector<HTMLButtonElement>("button.submit");
    const list = this.root.querySelector<HTMLUListElement>("ul.problems");
    if (!button || !list) return;
    button.disabled = !canSubmit(this.task.items, this.draft);
    list.textContent = "";
    for (const problem of validateDraft(this.task.items, this.draft)) {
      list.appendChild(el("li", undefined, problem.message));
    }
  }

  private async submit(button: HTMLButtonElement, problems: HTMLElement): Promise<void> {
    button.disabled = true;
    try {
      for (const [key, choice] of this.draft.itemChoices) {
        const [index, aspect] = key.split(":");
        await this.api.submitJudgment({
          annotator_id: this.annotatorId,
          task_id: this.task.task_id,
          aspect,
          choice,
          item_index: Number(index),
          justification: "",
        });
      }
      await this.api.submitJudgment({
        annotator_id: this.annotatorId,
        task_id: this.task.task_id,
        aspect: "preference",
        choice: this.draft.preference as Choice,
        item_index: null,
        justification: this.draft.justification,
      });
      this.onComplete();
    } catch (err) {
      // surface the service rejection verbatim and let the user retry
      problems.textContent = "";
      problems.appendChild(el("li", "service-error", String((err as Error).message)));
      button.disabled = false;
    }
  }
}

export function renderTask(
  root: HTMLElement,
  task: TaskView,
  api: AnnotationApi,
  annotatorId: string,
  onComplete: () => void,
): TaskController {
  const controller = new TaskController(root, task, api, annotatorId, onComplete);
  controller.render();
  return controller;
}
