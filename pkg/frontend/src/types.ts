// DTOs mirroring the control-service JSON API.

export type ActionKind =
  | "turn_left" | "turn_right"
  | "move_forth" | "move_left" | "move_right" | "move_back"
  | "move_up" | "move_down"
  | "gimbal_up" | "gimbal_down"
  | "stop";

export interface ScenarioSummary {
  id: string;
  instruction: string;
  group: string | null;
  gt_length: number;
  epsilon: number;
}

export interface Pose {
  position: [number, number, number];
  yaw: number;
  gimbal: number;
}

export interface EntityDto {
  label: string;
  box: [number, number, number, number];
  depth: number;
  occluded_fraction: number;
  bearing: number;
  elevation: number;
}

export interface SessionCreated {
  session_id: string;
  scenario_id: string;
  instruction: string;
  epsilon: number;
  max_steps: number;
  mode: string;
}

export interface ObservationDto {
  entities: EntityDto[];
  camera_pose: Pose;
  schematic_svg: string;
  text: string;
  step_count: number;
  distance_to_goal: number;
  status: "active" | "done";
}

export interface ActionResult {
  pose: Pose;
  blocked: boolean;
  distance_to_goal: number;
  status: "active" | "done";
  step_count: number;
  outcome: string | null;
}
