// DOM wiring for the review flow: item list, step-by-step solution view,
// label form with live validation, progress header, keyboard navigation.

import { ApiError, LabelApi } from "./api.js";
import { composeNotes, parseFlaggedSteps, toggleStep } from "./notes.js";
import { renderRichText } from "./render.js";
import {
  Filter,
  ReviewState,
  initialState,
  markLabeled,
  nextPendingId,
  progressCounts,
  select,
  selectNext,
  selectPrev,
  visibleItems,
  withFilter,
  withItems,
} from "./state.js";
import { ERROR_TYPES, EXEMPTIONS, ItemDetail, LabelDraft, emptyDraft } from "./types.js";
import { validateLabelDraft } from "./validation.js";

const ANNOTATOR_KEY = "fpscale.annotator";

function el<T extends HTMLElement>(root: ParentNode, selector: string): T {
  const node = root.querySelector(selector);
  if (!node) {
    throw new Error(`missing element ${selector}`);
  }
  return node as T;
}

export class App {
  private state: ReviewState = initialState();
  private detail: ItemDetail | null = null;
  private draft: LabelDraft = emptyDraft();
  private flaggedSteps: Set<number> = new Set();

  constructor(
    private readonly root: Document,
    private readonly api: LabelApi = new LabelApi(),
  ) {}

  async start(): Promise<void> {
    this.draft.annotator = this.root.defaultView?.localStorage.getItem(ANNOTATOR_KEY) ?? "";
    this.bindStaticHandlers();
    await this.reload();
  }

  private bindStaticHandlers(): void {
    for (const filter of ["auto_correct", "pending", "all"] as Filter[]) {
      el<HTMLButtonElement>(this.root, `#filter-${filter}`).addEventListener("click", () => {
        this.state = withFilter(this.state, filter);
        void this.showSelected();
        this.renderList();
      });
    }
    this.root.addEventListener("keydown", (event) => {
      const target = event.target as HTMLElement | null;
      const tag = target?.tagName ?? "";
      if (tag === "INPUT" || tag === "TEXTAREA" || tag === "SELECT") {
        return;
      }
      if (event.key === "j") {
        this.state = selectNext(this.state);
        void this.showSelected();
        this.renderList();
      } else if (event.key === "k") {
        this.state = selectPrev(this.state);
        void this.showSelected();
        this.renderList();
      }
    });
  }

  private async reload(): Promise<void> {
    const items = await this.api.items();
    this.state = withItems(this.state, items);
    this.renderList();
    await this.showSelected();
    await this.renderProgress();
  }

  private renderList(): void {
    const list = el<HTMLUListElement>(this.root, "#item-list");
    list.innerHTML = "";
    for (const item of visibleItems(this.state)) {
      const entry = this.root.createElement("li");
      entry.dataset.id = item.solution_id;
      entry.className = [
        item.solution_id === this.state.selectedId ? "selected" : "",
        item.labeled ? "labeled" : "pending",
        item.auto_correct ? "auto-correct" : "auto-incorrect",
      ]
        .filter(Boolean)
        .join(" ");
      const status = item.labeled ? "done" : "todo";
      const verdict = item.auto_correct ? "correct" : "incorrect";
      entry.textContent = `${item.problem_id} · ${verdict} · ${status}`;
      entry.addEventListener("click", () => {
        this.state = select(this.state, item.solution_id);
        void this.showSelected();
        this.renderList();
      });
      list.appendChild(entry);
    }
  }

  private async renderProgress(): Promise<void> {
    const counts = progressCounts(this.state.items);
    const serverProgress = await this.api.progress();
    el(this.root, "#progress").textContent =
      `run ${serverProgress.run_id} · labeled ${counts.labeled}/${counts.total} ` +
      `(auto-correct ${counts.autoCorrectLabeled}/${counts.autoCorrect})`;
  }

  private async showSelected(): Promise<void> {
    const pane = el(this.root, "#detail");
    if (!this.state.selectedId) {
      pane.classList.add("empty");
      el(this.root, "#problem").innerHTML = "<em>No items under this filter.</em>";
      return;
    }
    pane.classList.remove("empty");
    this.detail = await this.api.item(this.state.selectedId);
    const existing = this.detail.labels[this.detail.labels.length - 1];
    this.draft = {
      ...emptyDraft(this.draft.annotator),
      answer_part_only: this.detail.long_cot,
    };
    this.flaggedSteps = existing ? parseFlaggedSteps(existing.notes) : new Set();
    if (existing) {
      this.draft = {
        annotator: this.draft.annotator || existing.annotator,
        is_false_positive: existing.is_false_positive,
        error_types: existing.error_types.filter((e): e is (typeof ERROR_TYPES)[number] =>
          (ERROR_TYPES as readonly string[]).includes(e),
        ),
        exemption: (EXEMPTIONS as readonly string[]).includes(existing.exemption ?? "")
          ? (existing.exemption as (typeof EXEMPTIONS)[number])
          : null,
        answer_part_only: existing.answer_part_only,
        notes: composeNotes(existing.notes, new Set()),
      };
    }
    this.renderDetail();
    this.renderForm();
  }

  private renderDetail(): void {
    if (!this.detail) {
      return;
    }
    el(this.root, "#problem").innerHTML = renderRichText(this.detail.problem);
    el(this.root, "#answers").innerHTML =
      `extracted: <span class="answer">${renderRichText(this.detail.extracted_answer || "(none)")}</span>` +
      ` · gold: <span class="answer">${renderRichText(this.detail.gold_answer)}</span>` +
      ` · rule-based: <strong>${this.detail.auto_correct ? "correct" : "incorrect"}</strong>`;

    const think = el<HTMLElement>(this.root, "#think-section");
    if (this.detail.long_cot) {
      think.hidden = false;
      el(this.root, "#think-content").innerHTML = renderRichText(this.detail.think_part);
      el(this.root, "#judgment-note").textContent =
        "Long-CoT solution: judge the answer part only; the hidden reasoning is collapsible for reference.";
    } else {
      think.hidden = true;
      el(this.root, "#judgment-note").textContent = "";
    }

    const steps = el<HTMLOListElement>(this.root, "#steps");
    steps.innerHTML = "";
    this.detail.judgment_steps.forEach((stepText, index) => {
      const item = this.root.createElement("li");
      item.innerHTML = renderRichText(stepText);
      item.title = "click to flag this step";
      if (this.flaggedSteps.has(index + 1)) {
        item.classList.add("flagged");
      }
      item.addEventListener("click", () => {
        this.flaggedSteps = toggleStep(this.flaggedSteps, index + 1);
        item.classList.toggle("flagged");
      });
      steps.appendChild(item);
    });
  }

  private renderForm(): void {
    const form = el<HTMLElement>(this.root, "#label-form");
    const typeBoxes = ERROR_TYPES.map(
      (etype) => el<HTMLInputElement>(form, `#etype-${etype}`),
    );
    const fpBox = el<HTMLInputElement>(form, "#fp-checkbox");
    const exemptionSelect = el<HTMLSelectElement>(form, "#exemption");
    const annotator = el<HTMLInputElement>(form, "#annotator");
    const notes = el<HTMLTextAreaElement>(form, "#notes");

    annotator.value = this.draft.annotator;
    fpBox.checked = this.draft.is_false_positive;
    ERROR_TYPES.forEach((etype, index) => {
      typeBoxes[index].checked = this.draft.error_types.includes(etype);
      typeBoxes[index].disabled = !this.draft.is_false_positive;
    });
    exemptionSelect.value = this.draft.exemption ?? "";
    exemptionSelect.disabled = this.draft.is_false_positive;
    notes.value = this.draft.notes;

    annotator.oninput = () => {
      this.draft.annotator = annotator.value;
      this.root.defaultView?.localStorage.setItem(ANNOTATOR_KEY, annotator.value);
      this.renderValidation();
    };
    fpBox.onchange = () => {
      this.draft.is_false_positive = fpBox.checked;
      if (fpBox.checked) {
        this.draft.exemption = null;
      } else {
        this.draft.error_types = [];
      }
      this.renderForm();
    };
    ERROR_TYPES.forEach((etype, index) => {
      typeBoxes[index].onchange = () => {
        const set = new Set(this.draft.error_types);
        if (typeBoxes[index].checked) {
          set.add(etype);
        } else {
          set.delete(etype);
        }
        this.draft.error_types = ERROR_TYPES.filter((e) => set.has(e));
        this.renderValidation();
      };
    });
    exemptionSelect.onchange = () => {
      const value = exemptionSelect.value;
      this.draft.exemption = value === "" ? null : (value as (typeof EXEMPTIONS)[number]);
      this.renderValidation();
    };
    notes.oninput = () => {
      this.draft.notes = notes.value;
    };
    el<HTMLButtonElement>(form, "#save").onclick = () => void this.save();
    this.renderValidation();
  }

  private renderValidation(): void {
    const problems = validateLabelDraft(this.draft);
    el(this.root, "#validation").textContent = problems.join("; ");
    el<HTMLButtonElement>(this.root, "#save").disabled = problems.length > 0;
  }

  private async save(): Promise<void> {
    if (!this.detail) {
      return;
    }
    const statusLine = el(this.root, "#save-status");
    const problems = validateLabelDraft(this.draft);
    if (problems.length) {
      statusLine.textContent = `not saved: ${problems.join("; ")}`;
      return;
    }
    const payload = {
      ...this.draft,
      notes: composeNotes(this.draft.notes, this.flaggedSteps),
    };
    try {
      await this.api.submitLabel(this.detail.solution_id, payload);
    } catch (error) {
      const message = error instanceof ApiError ? error.message : String(error);
      statusLine.textContent = `rejected by server: ${message}`;
      return;
    }
    statusLine.textContent = "saved";
    this.state = markLabeled(this.state, this.detail.solution_id);
    const next = nextPendingId(this.state);
    if (next) {
      this.state = select(this.state, next);
    }
    this.renderList();
    await this.renderProgress();
    await this.showSelected();
  }
}

export function bootstrap(root: Document): App {
  const app = new App(root);
  void app.start();
  return app;
}
