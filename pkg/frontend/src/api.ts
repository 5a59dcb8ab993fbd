// Thin fetch client for the annotation service's label API.

import { ItemDetail, ItemSummary, LabelDraft, LabelRecord, Progress } from "./types.js";

export class ApiError extends Error {
  constructor(message: string, public status: number) {
    super(message);
    this.name = "ApiError";
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let message = `HTTP ${response.status}`;
  try {
    const body = (await response.json()) as { error?: string };
    if (body.error) {
      message = body.error;
    }
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(message, response.status);
}

export class LabelApi {
  constructor(private readonly base: string = "") {}

  private async get<T>(path: string): Promise<T> {
    const response = await fetch(this.base + path);
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  async items(run?: string): Promise<ItemSummary[]> {
    const query = run ? `?run=${encodeURIComponent(run)}` : "";
    const payload = await this.get<{ run_id: string; items: ItemSummary[] }>(
      `/api/items${query}`,
    );
    return payload.items;
  }

  async item(solutionId: string): Promise<ItemDetail> {
    return this.get<ItemDetail>(`/api/items/${encodeURIComponent(solutionId)}`);
  }

  async progress(): Promise<Progress> {
    return this.get<Progress>("/api/progress");
  }

  async submitLabel(solutionId: string, draft: LabelDraft): Promise<LabelRecord> {
    const response = await fetch(
      `${this.base}/api/items/${encodeURIComponent(solutionId)}/label`,
      {
        method: "PUT",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(draft),
      },
    );
    if (!response.ok) {
      throw await parseError(response);
    }
    const payload = (await response.json()) as { ok: boolean; label: LabelRecord };
    return payload.label;
  }
}
