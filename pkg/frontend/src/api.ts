import type {
  ConstraintsPayload,
  Label,
  SessionView,
  WhatifResult,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

/** What the store needs from the service; ApiClient is the HTTP version. */
export interface SessionApi {
  createSession(body: {
    session_id?: string;
    seed?: number;
    total_rounds?: number;
    explanation_interval?: number;
  }): Promise<{ session_id: string; state: SessionView }>;
  getSession(id: string): Promise<{ state: SessionView }>;
  submitRound(
    id: string,
    diet: number[],
    decisionMs: number,
    feedback: ConstraintsPayload | null,
  ): Promise<{ state: SessionView }>;
  acknowledge(id: string): Promise<{ state: SessionView }>;
  whatif(id: string, constraints: ConstraintsPayload): Promise<WhatifResult>;
  submitQuestionnaire(
    id: string,
    items: number[],
    freeText: string,
  ): Promise<{ satisfaction: number }>;
  getProbes(id: string): Promise<{ probes: number[][] }>;
  submitProbes(id: string, answers: Label[]): Promise<{ understanding: number }>;
}

/** Thin typed client over the session service. */
export class ApiClient implements SessionApi {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "content-type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.base + path, init);
    const text = await response.text();
    let doc: unknown = null;
    if (text) {
      try {
        doc = JSON.parse(text);
      } catch {
        throw new ApiError("BAD_RESPONSE", `non-JSON response (${response.status})`, response.status);
      }
    }
    if (!response.ok) {
      const err = (doc as { error?: { code?: string; message?: string } })?.error;
      throw new ApiError(
        err?.code ?? "HTTP_" + response.status,
        err?.message ?? `request failed with status ${response.status}`,
        response.status,
      );
    }
    return doc as T;
  }

  createSession(body: {
    session_id?: string;
    seed?: number;
    total_rounds?: number;
    explanation_interval?: number;
  }): Promise<{ session_id: string; state: SessionView }> {
    return this.request("POST", "/api/v1/sessions", body);
  }

  getSession(id: string): Promise<{ state: SessionView }> {
    return this.request("GET", `/api/v1/sessions/${encodeURIComponent(id)}`);
  }

  submitRound(
    id: string,
    diet: number[],
    decisionMs: number,
    feedback: ConstraintsPayload | null,
  ): Promise<{ state: SessionView }> {
    return this.request("POST", `/api/v1/sessions/${encodeURIComponent(id)}/rounds`, {
      diet,
      decision_ms: decisionMs,
      feedback,
    });
  }

  acknowledge(id: string): Promise<{ state: SessionView }> {
    return this.request("POST", `/api/v1/sessions/${encodeURIComponent(id)}/ack`);
  }

  whatif(id: string, constraints: ConstraintsPayload): Promise<WhatifResult> {
    return this.request("POST", `/api/v1/sessions/${encodeURIComponent(id)}/feedback`, {
      constraints,
    });
  }

  submitQuestionnaire(
    id: string,
    items: number[],
    freeText: string,
  ): Promise<{ satisfaction: number }> {
    return this.request("POST", `/api/v1/sessions/${encodeURIComponent(id)}/questionnaire`, {
      items,
      free_text: freeText,
    });
  }

  getProbes(id: string): Promise<{ probes: number[][] }> {
    return this.request("GET", `/api/v1/sessions/${encodeURIComponent(id)}/probes`);
  }

  submitProbes(id: string, answers: Label[]): Promise<{ understanding: number }> {
    return this.request("POST", `/api/v1/sessions/${encodeURIComponent(id)}/probes`, {
      answers,
    });
  }
}
