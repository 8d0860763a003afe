// Thin typed client over the session service HTTP API.

import type {
  Advice,
  ApiErrorBody,
  CreateSessionRequest,
  SessionState,
  SessionSummary,
} from "./types.js";

export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, body: ApiErrorBody) {
    super(`${body.code}: ${body.message}`);
    this.status = status;
    this.code = body.code;
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(`${base}${path}`, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  if (!res.ok) {
    let body: ApiErrorBody = { code: "unknown", message: res.statusText };
    try {
      const parsed = (await res.json()) as { detail?: ApiErrorBody | string };
      if (parsed.detail && typeof parsed.detail === "object") body = parsed.detail;
      else if (typeof parsed.detail === "string")
        body = { code: "unknown", message: parsed.detail };
    } catch {
      // non-JSON error body: keep the fallback
    }
    throw new ApiError(res.status, body);
  }
  return (await res.json()) as T;
}

export class AdvisorClient {
  constructor(private readonly base: string) {}

  listEnvs(): Promise<{ envs: string[] }> {
    return request(this.base, "/envs");
  }

  createSession(body: CreateSessionRequest): Promise<SessionState> {
    return request(this.base, "/sessions", {
      method: "POST",
      body: JSON.stringify(body),
    });
  }

  getState(sessionId: string): Promise<SessionState> {
    return request(this.base, `/sessions/${sessionId}`);
  }

  getAdvice(sessionId: string): Promise<Advice> {
    return request(this.base, `/sessions/${sessionId}/advice`);
  }

  step(
    sessionId: string,
    action: number,
    stateVersion: number,
    acceptedAdvice: boolean,
  ): Promise<SessionState> {
    return request(this.base, `/sessions/${sessionId}/step`, {
      method: "POST",
      body: JSON.stringify({
        action,
        state_version: stateVersion,
        accepted_advice: acceptedAdvice,
      }),
    });
  }

  getSummary(sessionId: string): Promise<SessionSummary> {
    return request(this.base, `/sessions/${sessionId}/summary`);
  }
}
