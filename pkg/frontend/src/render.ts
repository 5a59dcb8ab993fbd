// HTML-safe rendering of solution text with math segments set off
// visually. Inline ($...$, \(...\)) and display ($$...$$, \[...\]) math
// is wrapped in styled spans; no external TeX renderer is loaded, so the
// LaTeX source stays visible and auditable.

export interface Segment {
  kind: "text" | "math";
  content: string;
  display: boolean;
}

const OPENERS: Array<{ open: string; close: string; display: boolean }> = [
  { open: "$$", close: "$$", display: true },
  { open: "\\[", close: "\\]", display: true },
  { open: "\\(", close: "\\)", display: false },
  { open: "$", close: "$", display: false },
];

export function splitMathSegments(text: string): Segment[] {
  const segments: Segment[] = [];
  let buffer = "";
  let i = 0;
  while (i < text.length) {
    const hit = OPENERS.find((o) => text.startsWith(o.open, i));
    if (hit) {
      const end = text.indexOf(hit.close, i + hit.open.length);
      if (end >= 0) {
        if (buffer) {
          segments.push({ kind: "text", content: buffer, display: false });
          buffer = "";
        }
        segments.push({
          kind: "math",
          content: text.slice(i + hit.open.length, end),
          display: hit.display,
        });
        i = end + hit.close.length;
        continue;
      }
    }
    buffer += text[i];
    i += 1;
  }
  if (buffer) {
    segments.push({ kind: "text", content: buffer, display: false });
  }
  return segments;
}

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

export function renderRichText(text: string): string {
  return splitMathSegments(text)
    .map((segment) => {
      if (segment.kind === "text") {
        return escapeHtml(segment.content);
      }
      const cls = segment.display ? "math math-display" : "math";
      return `<span class="${cls}">${escapeHtml(segment.content)}</span>`;
    })
    .join("");
}
