import { AnnotationApi, ServiceError } from "./api";
import { renderTask } from "./render";

function el(tag: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (text !== undefined) node.textContent = text;
  return node;
}

async function runTaskLoop(root: HTMLElement, api: AnnotationApi, annotatorId: string) {
  const task = await api.nextTask(annotatorId);
  if (task === null) {
    root.textContent = "";
    root.appendChild(el("p", "All tasks complete. Thank you!"));
    return;
  }
  renderTask(root, task, api, annotatorId, () => {
    void runTaskLoop(root, api, annotatorId);
  });
}

async function runOnboarding(root: HTMLElement, api: AnnotationApi, annotatorId: string) {
  const questionIds = await api.fetchQuiz();
  root.textContent = "";
  const form = document.createElement("form");
  for (const qid of questionIds) {
    const row = el("div");
    const wrap = el("label", qid);
    const input = document.createElement("input");
    input.type = "text";
    input.name = qid;
    wrap.appendChild(input);
    row.appendChild(wrap);
    form.appendChild(row);
  }
  const submit = document.createElement("button");
  submit.textContent = "Start";
  form.appendChild(submit);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const data = new FormData(form);
    const responses: Record<string, string> = {};
    for (const [key, value] of data.entries()) responses[key] = String(value);
    void api.submitOnboarding(annotatorId, responses).then((passed) => {
      if (passed) {
        void runTaskLoop(root, api, annotatorId);
      } else {
        root.textContent = "";
        root.appendChild(el("p", "Onboarding quiz not passed. Access is locked."));
      }
    });
  });
  root.appendChild(form);
}

export async function start(root: HTMLElement, api: AnnotationApi, annotatorId: string) {
  try {
    await runTaskLoop(root, api, annotatorId);
  } catch (err) {
    if (err instanceof ServiceError && err.status === 403) {
      await runOnboarding(root, api, annotatorId);
    } else {
      throw err;
    }
  }
}

declare global {
  interface Window {
    simcqaStart?: typeof start;
  }
}

if (typeof window !== "undefined") {
  window.simcqaStart = start;
}
