// App wiring: scenario picker -> session -> keyboard/button flight loop.
// All physics lives on the service; this file only moves JSON into the DOM.

import { ApiError, NavClient } from "./api.js";
import { renderProgressChart } from "./chart.js";
import { KEY_LEGEND, actionForKey } from "./keyboard.js";
import {
  UiSessionState,
  applyActionResult,
  applyObservation,
  newSession,
  outcomeSummary,
} from "./state.js";
import { showToast } from "./toast.js";
import type { ActionKind } from "./types.js";

interface App {
  client: NavClient;
  state: UiSessionState | null;
  busy: boolean;
  paused: boolean;
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function renderHeader(app: App): void {
  const state = app.state;
  el("instruction").textContent = state ? state.instruction : "pick a scenario";
  el("step-counter").textContent = state ? `step ${state.stepCount} / ${state.maxSteps}` : "";
  const d = state && state.distances.length > 0
    ? state.distances[state.distances.length - 1]
    : null;
  el("distance").textContent = d === null ? "" : `distance ${d.toFixed(1)} m`;
  const pose = state?.pose;
  el("pose").textContent = pose
    ? `x ${pose.position[0].toFixed(1)}  y ${pose.position[1].toFixed(1)}  ` +
      `z ${pose.position[2].toFixed(1)}  yaw ${pose.yaw.toFixed(1)}°`
    : "";
  renderGimbal(state ? state.gimbal : 0);
}

function renderGimbal(gimbal: number): void {
  // Gauge maps 0 (level) at the top to -90 (straight down) at the bottom.
  const frac = Math.min(Math.max(-gimbal / 90, 0), 1);
  const needle = el("gimbal-needle");
  needle.style.top = `${(frac * 100).toFixed(1)}%`;
  el("gimbal-label").textContent = `${gimbal.toFixed(0)}°`;
}

function renderScene(app: App): void {
  const state = app.state;
  el("schematic").innerHTML = state ? state.schematicSvg : "";
  el("chart").innerHTML = renderProgressChart(state ? state.distances : []);
  const banner = el("banner");
  if (state && state.status === "done") {
    banner.textContent = outcomeSummary(state);
    banner.className = state.outcome === "success" ? "banner ok" : "banner bad";
  } else {
    banner.textContent = "";
    banner.className = "banner";
  }
  setControlsEnabled(app, Boolean(state) && state!.status === "active"
    && !app.busy && !app.paused);
}

function setControlsEnabled(app: App, enabled: boolean): void {
  document.querySelectorAll<HTMLButtonElement>("#controls button").forEach((b) => {
    b.disabled = !enabled;
  });
  el("status").textContent = app.paused
    ? "connection lost — retry"
    : app.busy ? "waiting for service…" : "";
}

async function refreshObservation(app: App): Promise<void> {
  if (!app.state) return;
  const obs = await app.client.observation(app.state.sessionId);
  app.state = applyObservation(app.state, obs);
}

async function submitAction(app: App, kind: ActionKind): Promise<void> {
  if (!app.state || app.state.status !== "active" || app.busy || app.paused) return;
  app.busy = true;
  setControlsEnabled(app, false);
  try {
    const result = await app.client.act(app.state.sessionId, kind);
    app.state = applyActionResult(app.state, result);
    if (result.blocked) {
      showToast(el("toasts"), `blocked: ${kind} rejected by collision check`);
    }
    if (app.state.status === "active") {
      await refreshObservation(app);
    }
  } catch (err) {
    handleError(app, err);
  } finally {
    app.busy = false;
    renderHeader(app);
    renderScene(app);
  }
}

function handleError(app: App, err: unknown): void {
  if (err instanceof ApiError && err.status === 0) {
    app.paused = true;
    showToast(el("toasts"), "service unreachable; input paused");
    el("retry-btn").style.display = "inline-block";
    return;
  }
  if (err instanceof ApiError) {
    showToast(el("toasts"), `service says ${err.status}: ${err.detail}`);
    return;
  }
  showToast(el("toasts"), String(err));
}

async function startSession(app: App, scenarioId: string): Promise<void> {
  try {
    const created = await app.client.createSession(scenarioId, "human");
    app.state = newSession(created);
    await refreshObservation(app);
  } catch (err) {
    handleError(app, err);
  }
  renderHeader(app);
  renderScene(app);
}

export async function bootstrap(client: NavClient = new NavClient("")): Promise<App> {
  const app: App = { client, state: null, busy: false, paused: false };

  const picker = el<HTMLSelectElement>("scenario-select");
  try {
    const scenarios = await client.listScenarios();
    picker.innerHTML = scenarios
      .map((s) => `<option value="${s.id}">${s.id} (${s.group ?? "?"}, ` +
                  `${s.gt_length.toFixed(0)} m)</option>`)
      .join("");
  } catch (err) {
    handleError(app, err);
  }

  el("start-btn").addEventListener("click", () => {
    void startSession(app, picker.value);
  });

  const controls = el("controls");
  controls.innerHTML = KEY_LEGEND
    .map(([key, action]) =>
      `<button data-action="${action}" disabled>` +
      `<span class="key">${key}</span>${action.replace("_", " ")}</button>`)
    .join("");
  controls.addEventListener("click", (event) => {
    const button = (event.target as HTMLElement).closest("button");
    const action = button?.getAttribute("data-action") as ActionKind | null;
    if (action) void submitAction(app, action);
  });

  document.addEventListener("keydown", (event) => {
    const action = actionForKey(event.key);
    if (action) {
      event.preventDefault();
      void submitAction(app, action);
    }
  });

  el("retry-btn").addEventListener("click", () => {
    void (async () => {
      try {
        await refreshObservation(app);
        app.paused = false;
        el("retry-btn").style.display = "none";
      } catch (err) {
        handleError(app, err);
      }
      renderHeader(app);
      renderScene(app);
    })();
  });

  renderHeader(app);
  renderScene(app);
  return app;
}

// Browser entry point; tests import bootstrap() directly instead.
if (typeof document !== "undefined" && document.getElementById("app-root")) {
  void bootstrap();
}
