/** Pure editor-state reducers. The scene itself is server truth; local
 * state only adds selection, tool, overlay, and the in-progress sketch.
 * All transitions keep the invariants: the selection always refers to an
 * existing instance, and stale conflicts are surfaced, never absorbed. */

import { shouldClose } from "./geometry.js";
import type {
  EditorState,
  OverlayMode,
  Point,
  SceneEnvelope,
  SceneJson,
  Tool,
} from "./types.js";

export function initialState(): EditorState {
  return {
    sceneId: null,
    revision: 0,
    scene: null,
    selected: null,
    tool: "select",
    overlay: "class",
    draft: null,
    staleConflict: false,
    mutationInFlight: false,
  };
}

function instanceExists(scene: SceneJson | null, id: number | null): boolean {
  if (scene === null || id === null) return false;
  return scene.instances.some((i) => i.id === id);
}

/** Adopt a server scene response; drops a selection that no longer
 * resolves and clears any conflict (the state is fresh again). */
export function adoptScene(
  state: EditorState,
  envelope: SceneEnvelope,
): EditorState {
  const selected = instanceExists(envelope.scene, state.selected)
    ? state.selected
    : null;
  return {
    ...state,
    sceneId: envelope.id,
    revision: envelope.revision,
    scene: envelope.scene,
    selected,
    staleConflict: false,
  };
}

/** A mutation result carries only the new revision; the caller follows
 * up with a GET and then adoptScene. Until then bump the revision so a
 * queued mutation bases itself correctly. */
export function adoptRevision(state: EditorState, revision: number): EditorState {
  return { ...state, revision, staleConflict: false };
}

export function markStale(state: EditorState): EditorState {
  return { ...state, staleConflict: true };
}

export function setMutationInFlight(
  state: EditorState,
  inFlight: boolean,
): EditorState {
  return { ...state, mutationInFlight: inFlight };
}

export function selectInstance(
  state: EditorState,
  id: number | null,
): EditorState {
  if (id !== null && !instanceExists(state.scene, id)) return state;
  return { ...state, selected: id };
}

export function setTool(state: EditorState, tool: Tool): EditorState {
  // leaving the sketch tool cancels any draft without mutating anything
  const draft = tool === "draw-polygon" ? state.draft : null;
  return { ...state, tool, draft };
}

export function setOverlay(state: EditorState, overlay: OverlayMode): EditorState {
  return { ...state, overlay };
}

export function startDraft(state: EditorState, classId: string): EditorState {
  return {
    ...state,
    tool: "draw-polygon",
    draft: { points: [], classId },
  };
}

export type DraftClick =
  | { kind: "continue"; state: EditorState }
  | { kind: "closed"; state: EditorState; ring: Point[]; classId: string };

/** One sketch click: either extends the draft or, within the 8 px snap
 * radius of the first vertex, closes it and hands the ring back for
 * posting. Closing clears the draft; nothing is posted from here. */
export function draftClick(state: EditorState, x: number, y: number): DraftClick {
  if (state.draft === null) return { kind: "continue", state };
  const { points, classId } = state.draft;
  if (shouldClose(points, x, y)) {
    return {
      kind: "closed",
      state: { ...state, draft: null },
      ring: points.slice(),
      classId,
    };
  }
  return {
    kind: "continue",
    state: { ...state, draft: { classId, points: [...points, [x, y]] } },
  };
}

/** Abandon the sketch mid-draw: no mutation may result. */
export function cancelDraft(state: EditorState): EditorState {
  return { ...state, draft: null };
}
