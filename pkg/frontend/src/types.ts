// Wire types mirroring the annotation service's label API payloads.

export const ERROR_TYPES = [
  "JUMP_IN_REASONING",
  "LOGICAL",
  "CALCULATION",
  "CONCEPTUAL",
] as const;

export const EXEMPTIONS = ["MINOR_ERROR", "SELF_CORRECTED"] as const;

export type ErrorType = (typeof ERROR_TYPES)[number];
export type Exemption = (typeof EXEMPTIONS)[number];

export interface ItemSummary {
  solution_id: string;
  problem_id: string;
  auto_correct: boolean;
  labeled: boolean;
  extracted_answer: string;
}

export interface LabelRecord {
  solution_id: string;
  annotator: string;
  is_false_positive: boolean;
  error_types: string[];
  exemption: string | null;
  answer_part_only: boolean;
  notes: string;
  saved_at: string | null;
}

export interface ItemDetail {
  solution_id: string;
  problem_id: string;
  problem: string;
  gold_answer: string;
  steps: string[];
  text: string;
  extracted_answer: string;
  auto_correct: boolean;
  long_cot: boolean;
  think_part: string;
  judgment_text: string;
  judgment_steps: string[];
  labels: LabelRecord[];
}

export interface Progress {
  run_id: string;
  total: number;
  labeled: number;
  pending: number;
  auto_correct: number;
  auto_correct_labeled: number;
}

// What the annotator is editing before submission.
export interface LabelDraft {
  annotator: string;
  is_false_positive: boolean;
  error_types: ErrorType[];
  exemption: Exemption | null;
  answer_part_only: boolean;
  notes: string;
}

export function emptyDraft(annotator = ""): LabelDraft {
  return {
    annotator,
    is_false_positive: false,
    error_types: [],
    exemption: null,
    answer_part_only: false,
    notes: "",
  };
}
