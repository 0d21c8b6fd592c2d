import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, StaleRevisionError } from "../src/api.js";
import type { FetchLike } from "../src/api.js";
import type { SceneEnvelope, SceneJson } from "../src/types.js";

interface Recorded {
  url: string;
  method: string;
  body: unknown;
}

/** FetchLike stub: responds from a queue (or a fixed responder) and
 * records every request it saw. */
function fakeFetch(
  respond: (req: Recorded) => { status: number; json: unknown },
): { fetch: FetchLike; calls: Recorded[] } {
  const calls: Recorded[] = [];
  const fetch: FetchLike = async (url, init) => {
    const req: Recorded = {
      url,
      method: init?.method ?? "GET",
      body: init?.body === undefined ? undefined : JSON.parse(init.body),
    };
    calls.push(req);
    const { status, json } = respond(req);
    return {
      status,
      json: async () => json,
      arrayBuffer: async () => new ArrayBuffer(0),
    };
  };
  return { fetch, calls };
}

function emptyScene(): SceneJson {
  return { width: 64, height: 64, frozen_background: false, instances: [] };
}

describe("request plumbing", () => {
  it("prefixes every path with /api/v1 under the base url", async () => {
    const { fetch, calls } = fakeFetch(() => ({
      status: 200,
      json: { scenes: [] },
    }));
    const api = new ApiClient("http://host:8000", fetch);
    await api.listScenes();
    expect(calls[0].url).toBe("http://host:8000/api/v1/scenes");
    expect(calls[0].method).toBe("GET");
  });

  it("parses error bodies into ApiError", async () => {
    const { fetch } = fakeFetch(() => ({
      status: 404,
      json: { error: "not_found", detail: "no such scene" },
    }));
    const api = new ApiClient("", fetch);
    const err = await api.getScene("nope").catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err.status).toBe(404);
    expect(err.code).toBe("not_found");
    expect(err.message).toBe("no such scene");
  });

  it("maps 409 to StaleRevisionError", async () => {
    const { fetch } = fakeFetch(() => ({
      status: 409,
      json: { error: "stale_revision", detail: "scene moved on" },
    }));
    const api = new ApiClient("", fetch);
    const err = await api
      .putScene("s1", emptyScene(), 1)
      .catch((e) => e);
    expect(err).toBeInstanceOf(StaleRevisionError);
    expect(err.status).toBe(409);
  });
});

describe("mutation bodies", () => {
  it("ops carry base_revision alongside their arguments", async () => {
    const { fetch, calls } = fakeFetch(() => ({
      status: 200,
      json: { revision: 3, changed: [1] },
    }));
    const api = new ApiClient("", fetch);
    await api.move("s1", 1, 4, -2, 2);
    expect(calls[0].url).toBe("/api/v1/scenes/s1/ops/move");
    expect(calls[0].method).toBe("POST");
    expect(calls[0].body).toEqual({
      instance_id: 1,
      dx: 4,
      dy: -2,
      base_revision: 2,
    });
  });

  it("addInstance appends with id max+1 and PUTs the whole scene", async () => {
    const { fetch, calls } = fakeFetch(() => ({
      status: 200,
      json: { id: "s1", revision: 6 },
    }));
    const api = new ApiClient("", fetch);
    const scene = emptyScene();
    scene.instances.push({
      id: 7,
      class: "car",
      score: 1,
      attributes: [],
      parent: null,
      rings: [
        [
          [0, 0],
          [4, 0],
          [4, 4],
        ],
      ],
    });
    const envelope: SceneEnvelope = { id: "s1", revision: 5, scene };
    await api.addInstance(envelope, "tree", [
      [10, 10],
      [20, 10],
      [15, 20],
    ]);
    expect(calls[0].method).toBe("PUT");
    expect(calls[0].url).toBe("/api/v1/scenes/s1");
    const body = calls[0].body as {
      base_revision: number;
      scene: SceneJson;
    };
    expect(body.base_revision).toBe(5);
    expect(body.scene.instances).toHaveLength(2);
    const added = body.scene.instances[1];
    expect(added.id).toBe(8);
    expect(added.class).toBe("tree");
    expect(added.rings).toEqual([
      [
        [10, 10],
        [20, 10],
        [15, 20],
      ],
    ]);
    // The envelope the caller held is untouched.
    expect(envelope.scene.instances).toHaveLength(1);
  });
});

describe("mutation serialization", () => {
  it("runs mutations one at a time, in submission order", async () => {
    const events: string[] = [];
    let release: () => void = () => {};
    let first = true;
    const fetch: FetchLike = async (url) => {
      const name = url.includes("move") ? "move" : "delete";
      events.push(`start ${name}`);
      if (first) {
        first = false;
        await new Promise<void>((r) => (release = r));
      }
      events.push(`end ${name}`);
      return {
        status: 200,
        json: async () => ({ revision: 2, changed: [] }),
        arrayBuffer: async () => new ArrayBuffer(0),
      };
    };
    const api = new ApiClient("", fetch);
    const p1 = api.move("s1", 1, 1, 0, 1);
    const p2 = api.delete("s1", 1, true, 1);
    // Give the second call every chance to start early if serialization
    // were broken.
    await new Promise((r) => setTimeout(r, 10));
    expect(events).toEqual(["start move"]);
    release();
    await Promise.all([p1, p2]);
    expect(events).toEqual([
      "start move",
      "end move",
      "start delete",
      "end delete",
    ]);
  });

  it("a failed mutation does not block the next one", async () => {
    let n = 0;
    const { fetch } = fakeFetch(() => {
      n += 1;
      return n === 1
        ? { status: 409, json: { error: "stale_revision", detail: "stale" } }
        : { status: 200, json: { revision: 2, changed: [] } };
    });
    const api = new ApiClient("", fetch);
    await expect(api.move("s1", 1, 1, 0, 1)).rejects.toBeInstanceOf(
      StaleRevisionError,
    );
    await expect(api.move("s1", 1, 1, 0, 2)).resolves.toEqual({
      revision: 2,
      changed: [],
    });
  });
});

describe("raster urls", () => {
  it("encodes kind, fmt and optional res", () => {
    const api = new ApiClient("", fakeFetch(() => ({ status: 200, json: {} })).fetch);
    expect(api.rasterUrl("s1", "class")).toBe(
      "/api/v1/scenes/s1/raster?kind=class&fmt=png",
    );
    expect(api.rasterUrl("s1", "instance", 128)).toBe(
      "/api/v1/scenes/s1/raster?kind=instance&fmt=png&res=128",
    );
  });
});
