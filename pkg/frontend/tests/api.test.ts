import { afterEach, describe, expect, it, vi } from "vitest";

import { ApiError, NavClient } from "../src/api.js";

function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

afterEach(() => {
  vi.unstubAllGlobals();
});

describe("NavClient", () => {
  it("lists scenarios from /scenarios", async () => {
    const fetchMock = vi.fn(async () => jsonResponse([{ id: "s1" }]));
    vi.stubGlobal("fetch", fetchMock);
    const client = new NavClient("http://svc");
    const got = await client.listScenarios();
    expect(fetchMock).toHaveBeenCalledWith("http://svc/scenarios", undefined);
    expect(got[0].id).toBe("s1");
  });

  it("posts session create with scenario id and mode", async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ session_id: "x" }, 200));
    vi.stubGlobal("fetch", fetchMock);
    await new NavClient("").createSession("scn-1");
    const [url, init] = fetchMock.mock.calls[0] as [string, RequestInit];
    expect(url).toBe("/sessions");
    expect(init.method).toBe("POST");
    expect(JSON.parse(init.body as string)).toEqual({
      scenario_id: "scn-1",
      mode: "human",
    });
  });

  it("posts actions with the kind payload", async () => {
    const fetchMock = vi.fn(async () => jsonResponse({ ok: 1 }));
    vi.stubGlobal("fetch", fetchMock);
    await new NavClient("").act("sess", "move_forth");
    const [url, init] = fetchMock.mock.calls[0] as [string, RequestInit];
    expect(url).toBe("/sessions/sess/action");
    expect(JSON.parse(init.body as string)).toEqual({ kind: "move_forth" });
  });

  it("surfaces HTTP errors with status and detail", async () => {
    vi.stubGlobal("fetch", vi.fn(async () =>
      jsonResponse({ detail: "session already finished" }, 409)));
    const err = await new NavClient("").act("sess", "stop").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(409);
    expect(err.detail).toContain("finished");
  });

  it("maps network failure to status 0", async () => {
    vi.stubGlobal("fetch", vi.fn(async () => {
      throw new TypeError("fetch failed");
    }));
    const err = await new NavClient("").listScenarios().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(0);
  });
});
