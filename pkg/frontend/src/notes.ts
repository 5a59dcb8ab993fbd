// Per-step flags toggled during review are folded into the notes text on
// save, since the label payload has no per-step field. The marker is
// plain text, so it survives the round trip and stays readable in
// reports.

const MARKER = /\n?\[flagged steps: [0-9, ]*\]/g;

export function toggleStep(flagged: ReadonlySet<number>, step: number): Set<number> {
  const next = new Set(flagged);
  if (next.has(step)) {
    next.delete(step);
  } else {
    next.add(step);
  }
  return next;
}

export function composeNotes(notes: string, flagged: ReadonlySet<number>): string {
  const base = notes.replace(MARKER, "").trim();
  if (flagged.size === 0) {
    return base;
  }
  const steps = [...flagged].sort((a, b) => a - b).join(", ");
  const marker = `[flagged steps: ${steps}]`;
  return base ? `${base}\n${marker}` : marker;
}

export function parseFlaggedSteps(notes: string): Set<number> {
  const match = notes.match(/\[flagged steps: ([0-9, ]*)\]/);
  if (!match || !match[1].trim()) {
    return new Set();
  }
  return new Set(
    match[1]
      .split(",")
      .map((part) => Number.parseInt(part.trim(), 10))
      .filter((n) => Number.isFinite(n)),
  );
}
