// Thin typed client over the control-service JSON API. Every number the UI
// shows originates here; the client never post-processes poses or distances.

import type {
  ActionKind,
  ActionResult,
  ObservationDto,
  ScenarioSummary,
  SessionCreated,
} from "./types.js";

export class ApiError extends Error {
  constructor(public status: number, public detail: string) {
    super(`HTTP ${status}: ${detail}`);
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  let resp: Response;
  try {
    resp = await fetch(url, init);
  } catch (err) {
    throw new ApiError(0, `service unreachable: ${String(err)}`);
  }
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = await resp.json();
      detail = typeof body.detail === "string" ? body.detail : JSON.stringify(body.detail ?? body);
    } catch {
      // keep statusText
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class NavClient {
  constructor(public baseUrl: string = "") {}

  listScenarios(): Promise<ScenarioSummary[]> {
    return request(`${this.baseUrl}/scenarios`);
  }

  createSession(scenarioId: string, mode: "human" | "policy" = "human"): Promise<SessionCreated> {
    return request(`${this.baseUrl}/sessions`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ scenario_id: scenarioId, mode }),
    });
  }

  observation(sessionId: string): Promise<ObservationDto> {
    return request(`${this.baseUrl}/sessions/${sessionId}/observation`);
  }

  act(sessionId: string, kind: ActionKind): Promise<ActionResult> {
    return request(`${this.baseUrl}/sessions/${sessionId}/action`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ kind }),
    });
  }

  log(sessionId: string): Promise<unknown> {
    return request(`${this.baseUrl}/sessions/${sessionId}/log`);
  }
}
