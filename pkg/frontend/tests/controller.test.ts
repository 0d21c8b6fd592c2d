import { describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import type { FetchLike } from "../src/api.js";
import { EditorController, PREVIEW_DEBOUNCE_MS } from "../src/controller.js";
import type { SceneJson } from "../src/types.js";

function scene(ids: number[]): SceneJson {
  return {
    width: 64,
    height: 64,
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

/** Minimal in-memory scene server behind the FetchLike interface.
 * Holds one scene; ops bump the revision, stale base_revision gets a 409. */
function fakeServer(initialIds: number[]) {
  let revision = 1;
  let current = scene(initialIds);
  const requests: { url: string; method: string; body: unknown }[] = [];
  const fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const body = init?.body === undefined ? undefined : JSON.parse(init.body);
    requests.push({ url, method, body });
    const ok = (json: unknown) => ({
      status: 200,
      json: async () => json,
      arrayBuffer: async () => new ArrayBuffer(0),
    });
    if (method === "GET") {
      return ok({ id: "s1", revision, scene: current });
    }
    const base = (body as { base_revision: number }).base_revision;
    if (base !== revision) {
      return {
        status: 409,
        json: async () => ({ error: "stale_revision", detail: "stale" }),
        arrayBuffer: async () => new ArrayBuffer(0),
      };
    }
    revision += 1;
    if (method === "PUT") {
      current = (body as { scene: SceneJson }).scene;
      return ok({ id: "s1", revision });
    }
    if (url.endsWith("/ops/delete")) {
      const target = (body as { instance_id: number }).instance_id;
      current = {
        ...current,
        instances: current.instances.filter((i) => i.id !== target),
      };
      return ok({ id: "s1", revision, changed: [target] });
    }
    return ok({ id: "s1", revision, changed: [] });
  };
  return {
    fetch,
    requests,
    bumpExternally: () => {
      revision += 1;
    },
    get revision() {
      return revision;
    },
  };
}

describe("EditorController", () => {
  it("open adopts the server scene", async () => {
    const server = fakeServer([1, 2]);
    const ctl = new EditorController(new ApiClient("", server.fetch));
    await ctl.open("s1");
    expect(ctl.state.sceneId).toBe("s1");
    expect(ctl.state.revision).toBe(1);
    expect(ctl.state.scene?.instances.map((i) => i.id)).toEqual([1, 2]);
  });

  it("a successful mutation posts the op then reloads the scene", async () => {
    const server = fakeServer([1]);
    const ctl = new EditorController(new ApiClient("", server.fetch));
    await ctl.open("s1");
    ctl.select(1);
    await ctl.move(3, 4);
    expect(ctl.state.revision).toBe(2);
    expect(ctl.state.mutationInFlight).toBe(false);
    const posts = server.requests.filter((r) => r.method === "POST");
    expect(posts).toHaveLength(1);
    expect(posts[0].url).toBe("/api/v1/scenes/s1/ops/move");
    expect(posts[0].body).toEqual({
      instance_id: 1,
      dx: 3,
      dy: 4,
      base_revision: 1,
    });
    // the reload GET followed the op
    const last = server.requests[server.requests.length - 1];
    expect(last.method).toBe("GET");
  });

  it("a 409 marks the state stale and never overwrites", async () => {
    const server = fakeServer([1]);
    const ctl = new EditorController(new ApiClient("", server.fetch));
    await ctl.open("s1");
    ctl.select(1);
    server.bumpExternally(); // someone else edited the scene
    await ctl.remove();
    expect(ctl.state.staleConflict).toBe(true);
    expect(ctl.state.mutationInFlight).toBe(false);
    // the local scene was not replaced and no retry was issued
    expect(ctl.state.scene?.instances.map((i) => i.id)).toEqual([1]);
    expect(
      server.requests.filter((r) => r.method === "POST"),
    ).toHaveLength(1);
    // reload is the recovery path the banner offers
    await ctl.reload();
    expect(ctl.state.staleConflict).toBe(false);
    expect(ctl.state.revision).toBe(server.revision);
  });

  it("refuses a second mutation while one is in flight", async () => {
    const server = fakeServer([1]);
    const ctl = new EditorController(new ApiClient("", server.fetch));
    await ctl.open("s1");
    ctl.select(1);
    const first = ctl.move(1, 0);
    await expect(ctl.move(0, 1)).rejects.toThrow(/in flight/);
    await first;
    // once settled, mutations work again
    await expect(ctl.move(0, 1)).resolves.toBeUndefined();
  });

  it("closing a sketch PUTs the scene with the new instance", async () => {
    const server = fakeServer([1]);
    const ctl = new EditorController(new ApiClient("", server.fetch));
    await ctl.open("s1");
    ctl.sketchStart("tree");
    await ctl.sketchClick(20, 20);
    await ctl.sketchClick(40, 20);
    await ctl.sketchClick(30, 40);
    await ctl.sketchClick(21, 20); // inside the 8 px snap radius
    const put = server.requests.find((r) => r.method === "PUT");
    expect(put).toBeDefined();
    const body = put?.body as { scene: SceneJson };
    expect(body.scene.instances.map((i) => i.id)).toEqual([1, 2]);
    expect(body.scene.instances[1].class).toBe("tree");
    expect(ctl.state.scene?.instances).toHaveLength(2);
    expect(ctl.state.draft).toBeNull();
  });

  it("debounces preview refreshes to one call per quiet period", () => {
    vi.useFakeTimers();
    try {
      let refreshes = 0;
      const server = fakeServer([1]);
      const ctl = new EditorController(new ApiClient("", server.fetch), () => {
        refreshes += 1;
      });
      ctl.schedulePreviewRefresh();
      vi.advanceTimersByTime(PREVIEW_DEBOUNCE_MS - 10);
      ctl.schedulePreviewRefresh(); // resets the timer
      vi.advanceTimersByTime(PREVIEW_DEBOUNCE_MS - 10);
      expect(refreshes).toBe(0);
      vi.advanceTimersByTime(20);
      expect(refreshes).toBe(1);
      vi.advanceTimersByTime(1000);
      expect(refreshes).toBe(1);
    } finally {
      vi.useRealTimers();
    }
  });
});
