// Client-side label validation. These rules mirror the server's label
// invariants exactly, so a draft that passes here is never rejected by
// the service (the API contract tests on the service side hold the other
// half of that promise).

import { ERROR_TYPES, EXEMPTIONS, LabelDraft } from "./types.js";

export function validateLabelDraft(draft: LabelDraft): string[] {
  const problems: string[] = [];
  if (!draft.annotator.trim()) {
    problems.push("annotator name is required");
  }
  if (draft.is_false_positive && draft.error_types.length === 0) {
    problems.push("a false positive needs at least one error type");
  }
  if (draft.exemption !== null && draft.is_false_positive) {
    problems.push("an exempted solution cannot be a false positive");
  }
  for (const errorType of draft.error_types) {
    if (!(ERROR_TYPES as readonly string[]).includes(errorType)) {
      problems.push(`unknown error type: ${errorType}`);
    }
  }
  if (draft.exemption !== null && !(EXEMPTIONS as readonly string[]).includes(draft.exemption)) {
    problems.push(`unknown exemption: ${draft.exemption}`);
  }
  return problems;
}

export function isValidDraft(draft: LabelDraft): boolean {
  return validateLabelDraft(draft).length === 0;
}
