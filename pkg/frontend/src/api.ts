import { JudgmentSubmission, TaskView } from "./types";

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
  }
}

async function raiseForStatus(resp: Response): Promise<void> {
  if (resp.ok) return;
  let detail = `${resp.status}`;
  try {
    const body = await resp.json();
    if (body && typeof body.detail === "string") detail = body.detail;
  } catch {
    // non-JSON error body, keep the status text
  }
  throw new ServiceError(resp.status, detail);
}

export class AnnotationApi {
  constructor(
    private baseUrl: string = "",
    private fetchFn: typeof fetch = fetch,
  ) {}

  async submitOnboarding(
    annotatorId: string,
    responses: Record<string, string>,
  ): Promise<boolean> {
    const resp = await this.fetchFn(`${this.baseUrl}/onboarding`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ annotator_id: annotatorId, responses }),
    });
    await raiseForStatus(resp);
    const body = await resp.json();
    return body.passed === true;
  }

  async fetchQuiz(): Promise<string[]> {
    const resp = await this.fetchFn(`${this.baseUrl}/quiz`);
    await raiseForStatus(resp);
    const body = await resp.json();
    return body.question_ids ?? [];
  }

  /** Next unjudged task, or null when the annotator is done. */
  async nextTask(annotatorId: string): Promise<TaskView | null> {
    const resp = await this.fetchFn(
      `${this.baseUrl}/tasks/next?annotator_id=${encodeURIComponent(annotatorId)}`,
    );
    if (resp.status === 404) return null;
    await raiseForStatus(resp);
    return resp.json();
  }

  async submitJudgment(judgment: JudgmentSubmission): Promise<void> {
    const resp = await this.fetchFn(`${this.baseUrl}/judgments`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(judgment),
    });
    await raiseForStatus(resp);
  }
}
