// One-hand flight bindings: WASD translate, Q/E turn, R/F up/down,
// T/G gimbal, Space stop.

import type { ActionKind } from "./types.js";

const MAP: Record<string, ActionKind> = {
  w: "move_forth",
  s: "move_back",
  a: "move_left",
  d: "move_right",
  q: "turn_left",
  e: "turn_right",
  r: "move_up",
  f: "move_down",
  t: "gimbal_up",
  g: "gimbal_down",
  " ": "stop",
};

export function actionForKey(key: string): ActionKind | null {
  return MAP[key.toLowerCase()] ?? null;
}

export const KEY_LEGEND: Array<[string, ActionKind]> = [
  ["W", "move_forth"], ["S", "move_back"], ["A", "move_left"], ["D", "move_right"],
  ["Q", "turn_left"], ["E", "turn_right"], ["R", "move_up"], ["F", "move_down"],
  ["T", "gimbal_up"], ["G", "gimbal_down"], ["Space", "stop"],
];
