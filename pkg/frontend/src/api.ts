import type {
  ActionResponse,
  Api,
  CreateResponse,
  Debrief,
  ScenarioRow,
} from "./types";

// Service errors arrive as {"error": {"kind", "message"}}; the kind is
// surfaced verbatim so screens can show exactly what the server said.
export class ApiError extends Error {
  kind: string;

  constructor(kind: string, message: string) {
    super(message);
    this.kind = kind;
  }
}

async function request<T>(path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(path, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  if (!res.ok) {
    let kind = `http_${res.status}`;
    let message = res.statusText;
    try {
      const body = await res.json();
      if (body?.error) {
        kind = body.error.kind;
        message = body.error.message;
      }
    } catch {
      // non-JSON error body; keep the status fallback
    }
    throw new ApiError(kind, message);
  }
  return res.json() as Promise<T>;
}

export class HttpApi implements Api {
  constructor(private base = "/api/v1") {}

  listScenarios(): Promise<ScenarioRow[]> {
    return request(`${this.base}/scenarios`);
  }

  createSession(scenarioId: string): Promise<CreateResponse> {
    return request(`${this.base}/sessions`, {
      method: "POST",
      body: JSON.stringify({ scenario_id: scenarioId }),
    });
  }

  submitAction(
    sessionId: string,
    kind: string,
    param: string | null,
    expectedStep: number,
  ): Promise<ActionResponse> {
    return request(`${this.base}/sessions/${sessionId}/actions`, {
      method: "POST",
      body: JSON.stringify({ kind, param, expected_step: expectedStep }),
    });
  }

  getDebrief(sessionId: string): Promise<Debrief> {
    return request(`${this.base}/sessions/${sessionId}/debrief`);
  }
}
