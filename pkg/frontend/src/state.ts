// Pure review-session state: item filtering, navigation, progress.
// Kept free of DOM access so the whole flow is unit-testable.

import { ItemSummary } from "./types.js";

// Items arrive from the server ordered auto-correct-pending-first; only
// auto-correct items determine the false positive rate, so that is the
// default view. The other filters exist for completeness.
export type Filter = "auto_correct" | "pending" | "all";

export interface ReviewState {
  items: ItemSummary[];
  selectedId: string | null;
  filter: Filter;
}

export function initialState(): ReviewState {
  return { items: [], selectedId: null, filter: "auto_correct" };
}

export function visibleItems(state: ReviewState): ItemSummary[] {
  switch (state.filter) {
    case "auto_correct":
      return state.items.filter((item) => item.auto_correct);
    case "pending":
      return state.items.filter((item) => !item.labeled);
    case "all":
      return state.items;
  }
}

function firstVisibleId(state: ReviewState): string | null {
  const visible = visibleItems(state);
  return visible.length ? visible[0].solution_id : null;
}

export function withItems(state: ReviewState, items: ItemSummary[]): ReviewState {
  const next = { ...state, items };
  const stillVisible = visibleItems(next).some((item) => item.solution_id === state.selectedId);
  return { ...next, selectedId: stillVisible ? state.selectedId : firstVisibleId(next) };
}

export function withFilter(state: ReviewState, filter: Filter): ReviewState {
  const next = { ...state, filter };
  const stillVisible = visibleItems(next).some((item) => item.solution_id === state.selectedId);
  return { ...next, selectedId: stillVisible ? state.selectedId : firstVisibleId(next) };
}

export function select(state: ReviewState, solutionId: string): ReviewState {
  return { ...state, selectedId: solutionId };
}

function step(state: ReviewState, delta: number): ReviewState {
  const visible = visibleItems(state);
  if (!visible.length) {
    return { ...state, selectedId: null };
  }
  const index = visible.findIndex((item) => item.solution_id === state.selectedId);
  if (index < 0) {
    return { ...state, selectedId: visible[0].solution_id };
  }
  const next = (index + delta + visible.length) % visible.length;
  return { ...state, selectedId: visible[next].solution_id };
}

export function selectNext(state: ReviewState): ReviewState {
  return step(state, 1);
}

export function selectPrev(state: ReviewState): ReviewState {
  return step(state, -1);
}

export function markLabeled(state: ReviewState, solutionId: string): ReviewState {
  const items = state.items.map((item) =>
    item.solution_id === solutionId ? { ...item, labeled: true } : item,
  );
  return { ...state, items };
}

// The id to review next after saving: the next unlabeled visible item.
export function nextPendingId(state: ReviewState): string | null {
  const visible = visibleItems(state);
  if (!visible.length) {
    return null;
  }
  const start = Math.max(
    visible.findIndex((item) => item.solution_id === state.selectedId),
    0,
  );
  for (let offset = 1; offset <= visible.length; offset += 1) {
    const candidate = visible[(start + offset) % visible.length];
    if (!candidate.labeled) {
      return candidate.solution_id;
    }
  }
  return null;
}

export interface Counts {
  total: number;
  labeled: number;
  autoCorrect: number;
  autoCorrectLabeled: number;
}

export function progressCounts(items: ItemSummary[]): Counts {
  return {
    total: items.length,
    labeled: items.filter((item) => item.labeled).length,
    autoCorrect: items.filter((item) => item.auto_correct).length,
    autoCorrectLabeled: items.filter((item) => item.auto_correct && item.labeled).length,
  };
}
