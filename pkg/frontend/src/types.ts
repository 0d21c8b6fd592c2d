/** Wire types for the /api/v1 scene service and local editor state. */

export type Point = [number, number];

export interface InstanceJson {
  id: number;
  class: string;
  score: number;
  attributes: string[];
  parent: number | null;
  rings: Point[][];
}

export interface SceneJson {
  width: number;
  height: number;
  frozen_background: boolean;
  instances: InstanceJson[];
}

export interface SceneEnvelope {
  id: string;
  revision: number;
  scene: SceneJson;
}

export interface OpResult {
  id: string;
  revision: number;
  changed: number[];
  new_id?: number;
}

export interface AttentionResponse {
  classes: Record<string, number[][]>; // class name -> (heads x tokens)
  n_tokens: number;
  heads: number;
}

export interface RandomizeResult extends OpResult {
  report: { seed: number; strategy: string; missing_classes?: number };
}

export interface ApiErrorBody {
  error: string;
  detail: string;
}

export type Tool =
  | "draw-polygon"
  | "select"
  | "scale"
  | "delete"
  | "duplicate"
  | "attribute-edit";

export type OverlayMode =
  | "class"
  | "instance"
  | "bg"
  | "fg"
  | "preview"
  | "attention";

export interface PolygonDraft {
  points: Point[];
  classId: string;
}

export interface EditorState {
  sceneId: string | null;
  revision: number;
  scene: SceneJson | null;
  selected: number | null;
  tool: Tool;
  overlay: OverlayMode;
  draft: PolygonDraft | null;
  /** Set when the server rejected a mutation as stale; the UI must show a
   * reload prompt and never silently overwrite. */
  staleConflict: boolean;
  mutationInFlight: boolean;
}
