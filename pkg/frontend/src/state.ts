// Session state mirror. Every field is copied verbatim from a service
// response; there is deliberately no kinematics code in this module (or
// anywhere else in the UI).

import type { ActionResult, ObservationDto, Pose, SessionCreated } from "./types.js";

export interface UiSessionState {
  sessionId: string;
  scenarioId: string;
  instruction: string;
  epsilon: number;
  maxSteps: number;
  stepCount: number;
  pose: Pose | null;
  gimbal: number;
  schematicSvg: string;
  distances: number[]; // d_0 .. d_t as reported by the service
  status: "active" | "done";
  outcome: string | null;
  lastBlocked: boolean;
}

export function newSession(created: SessionCreated): UiSessionState {
  return {
    sessionId: created.session_id,
    scenarioId: created.scenario_id,
    instruction: created.instruction,
    epsilon: created.epsilon,
    maxSteps: created.max_steps,
    stepCount: 0,
    pose: null,
    gimbal: 0,
    schematicSvg: "",
    distances: [],
    status: "active",
    outcome: null,
    lastBlocked: false,
  };
}

export function applyObservation(state: UiSessionState, obs: ObservationDto): UiSessionState {
  const distances =
    state.distances.length === 0 ? [obs.distance_to_goal] : state.distances;
  return {
    ...state,
    pose: obs.camera_pose,
    gimbal: obs.camera_pose.gimbal,
    schematicSvg: obs.schematic_svg,
    stepCount: obs.step_count,
    distances,
    status: obs.status,
  };
}

export function applyActionResult(state: UiSessionState, result: ActionResult): UiSessionState {
  return {
    ...state,
    pose: result.pose,
    gimbal: result.pose.gimbal,
    stepCount: result.step_count,
    distances: [...state.distances, result.distance_to_goal],
    status: result.status,
    outcome: result.outcome,
    lastBlocked: result.blocked,
  };
}

export function outcomeSummary(state: UiSessionState): string {
  if (state.status !== "done") return "";
  const final = state.distances[state.distances.length - 1];
  const label = state.outcome === "success" ? "SUCCESS" : "FAILURE";
  return `${label}, DTG ${final.toFixed(1)} m (ε ${state.epsilon.toFixed(0)} m, ${state.outcome})`;
}
