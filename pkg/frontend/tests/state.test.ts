import { describe, expect, it } from "vitest";

import {
  adoptRevision,
  adoptScene,
  cancelDraft,
  draftClick,
  initialState,
  markStale,
  selectInstance,
  setTool,
  startDraft,
} from "../src/state.js";
import type { EditorState, SceneEnvelope, SceneJson } from "../src/types.js";

function scene(ids: number[]): SceneJson {
  return {
    width: 100,
    height: 100,
    frozen_background: false,
    instances: ids.map((id) => ({
      id,
      class: "car",
      score: 1,
      attributes: [],
      parent: null,
      rings: [
        [
          [0, 0],
          [10, 0],
          [10, 10],
          [0, 10],
        ],
      ],
    })),
  };
}

function opened(ids: number[]): EditorState {
  const envelope: SceneEnvelope = { id: "s0001", revision: 1, scene: scene(ids) };
  return adoptScene(initialState(), envelope);
}

describe("adoptScene", () => {
  it("keeps a still-valid selection and clears conflicts", () => {
    let st = selectInstance(opened([1, 2]), 2);
    st = markStale(st);
    st = adoptScene(st, { id: "s0001", revision: 3, scene: scene([1, 2]) });
    expect(st.selected).toBe(2);
    expect(st.revision).toBe(3);
    expect(st.staleConflict).toBe(false);
  });

  it("drops a selection that no longer resolves", () => {
    let st = selectInstance(opened([1, 2]), 2);
    st = adoptScene(st, { id: "s0001", revision: 2, scene: scene([1]) });
    expect(st.selected).toBeNull();
  });
});

describe("selectInstance", () => {
  it("refuses ids that do not exist in the scene", () => {
    const st = opened([1]);
    expect(selectInstance(st, 42).selected).toBeNull();
    expect(selectInstance(st, 1).selected).toBe(1);
  });
});

describe("sketch drafting", () => {
  it("collects points then closes inside the snap radius", () => {
    let st = startDraft(opened([1]), "tree");
    for (const [x, y] of [
      [20, 20],
      [60, 20],
      [40, 60],
    ] as const) {
      const r = draftClick(st, x, y);
      expect(r.kind).toBe("continue");
      st = r.state;
    }
    const closed = draftClick(st, 22, 21);
    expect(closed.kind).toBe("closed");
    if (closed.kind === "closed") {
      expect(closed.ring).toEqual([
        [20, 20],
        [60, 20],
        [40, 60],
      ]);
      expect(closed.classId).toBe("tree");
      expect(closed.state.draft).toBeNull();
    }
  });

  it("cancel mid-draw leaves no draft and produced no ring", () => {
    let st = startDraft(opened([1]), "tree");
    st = draftClick(st, 10, 10).state;
    st = cancelDraft(st);
    expect(st.draft).toBeNull();
  });

  it("switching tools abandons the draft", () => {
    let st = startDraft(opened([1]), "tree");
    st = draftClick(st, 10, 10).state;
    st = setTool(st, "select");
    expect(st.draft).toBeNull();
  });
});

describe("revisions and conflicts", () => {
  it("adoptRevision bumps and clears the stale flag", () => {
    let st = markStale(opened([1]));
    st = adoptRevision(st, 5);
    expect(st.revision).toBe(5);
    expect(st.staleConflict).toBe(false);
  });

  it("markStale only raises the flag", () => {
    const st = markStale(opened([1]));
    expect(st.staleConflict).toBe(true);
    expect(st.revision).toBe(1);
  });
});
