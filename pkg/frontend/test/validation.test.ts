import { describe, expect, it } from "vitest";

import { emptyDraft } from "../src/types.js";
import { isValidDraft, validateLabelDraft } from "../src/validation.js";

describe("label draft validation", () => {
  it("accepts a plain not-false-positive label", () => {
    expect(validateLabelDraft({ ...emptyDraft("ann") })).toEqual([]);
  });

  it("requires an annotator", () => {
    expect(validateLabelDraft(emptyDraft(""))).toContain("annotator name is required");
    expect(validateLabelDraft(emptyDraft("   "))).toContain("annotator name is required");
  });

  it("requires at least one error type for a false positive", () => {
    const draft = { ...emptyDraft("ann"), is_false_positive: true };
    expect(validateLabelDraft(draft)).toContain(
      "a false positive needs at least one error type",
    );
    expect(isValidDraft({ ...draft, error_types: ["LOGICAL"] })).toBe(true);
  });

  it("rejects an exemption on a false positive", () => {
    const draft = {
      ...emptyDraft("ann"),
      is_false_positive: true,
      error_types: ["LOGICAL" as const],
      exemption: "MINOR_ERROR" as const,
    };
    expect(validateLabelDraft(draft)).toContain(
      "an exempted solution cannot be a false positive",
    );
  });

  it("accepts exemptions on valid solutions", () => {
    const draft = { ...emptyDraft("ann"), exemption: "SELF_CORRECTED" as const };
    expect(isValidDraft(draft)).toBe(true);
  });

  it("rejects unknown enums", () => {
    const badType = {
      ...emptyDraft("ann"),
      is_false_positive: true,
      error_types: ["NOPE"] as never,
    };
    expect(validateLabelDraft(badType).join(" ")).toContain("unknown error type");
    const badExemption = { ...emptyDraft("ann"), exemption: "NOPE" as never };
    expect(validateLabelDraft(badExemption).join(" ")).toContain("unknown exemption");
  });

  it("mirrors the server contract: every draft it accepts has FP implies error types and exemption implies not-FP", () => {
    const drafts = [
      { ...emptyDraft("a"), is_false_positive: true, error_types: ["CALCULATION" as const] },
      { ...emptyDraft("b"), exemption: "MINOR_ERROR" as const },
      emptyDraft("c"),
    ];
    for (const draft of drafts) {
      if (isValidDraft(draft)) {
        if (draft.is_false_positive) {
          expect(draft.error_types.length).toBeGreaterThan(0);
        }
        if (draft.exemption !== null) {
          expect(draft.is_false_positive).toBe(false);
        }
      }
    }
  });
});
