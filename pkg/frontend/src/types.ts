export type Interval = [number, number];

export type Aspect = "correctness" | "naturalness" | "completeness";

export const CHOICES = ["A", "B", "neither", "both"] as const;
export type Choice = (typeof CHOICES)[number];

export const CHOICE_LABELS: Record<Choice, string> = {
  A: "System A",
  B: "System B",
  neither: "Neither A nor B",
  both: "Both A and B",
};

export interface ItemView {
  index: number;
  question: string;
  answer_a: string;
  answer_b: string;
  answer_a_cannot_find: boolean;
  answer_b_cannot_find: boolean;
  highlight_a: Interval[];
  highlight_b: Interval[];
  judgeable_aspects: Aspect[];
}

export interface ContextView {
  title: string;
  background: string;
  section_header: string;
  section_text: string;
}

export interface TaskView {
  task_id: string;
  context: ContextView;
  items: ItemView[];
}

export interface JudgmentSubmission {
  annotator_id: string;
  task_id: string;
  aspect: string;
  choice: Choice;
  item_index: number | null;
  justification: string;
}
