/** Typed client for the /api/v1 scene service.
 *
 * Mutations are serialized through a single-slot queue (at most one in
 * flight); a 409 from the server raises StaleRevisionError so the UI
 * can prompt for a reload instead of silently overwriting. */

import type {
  AttentionResponse,
  ApiErrorBody,
  OpResult,
  OverlayMode,
  Point,
  RandomizeResult,
  SceneEnvelope,
  SceneJson,
} from "./types.js";

export type FetchLike = (
  url: string,
  init?: {
    method?: string;
    headers?: Record<string, string>;
    body?: string;
  },
) => Promise<{
  status: number;
  json(): Promise<unknown>;
  arrayBuffer(): Promise<ArrayBuffer>;
}>;

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    detail: string,
  ) {
    super(detail);
  }
}

export class StaleRevisionError extends ApiError {
  constructor(detail: string) {
    super(409, "stale_revision", detail);
  }
}

export class ApiClient {
  private mutationChain: Promise<unknown> = Promise.resolve();

  constructor(
    private base: string,
    private fetchImpl: FetchLike,
  ) {}

  private url(path: string): string {
    return `${this.base}/api/v1${path}`;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const res = await this.fetchImpl(this.url(path), {
      method,
      headers: body === undefined ? {} : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (res.status >= 400) {
      const err = (await res.json()) as ApiErrorBody;
      if (res.status === 409) throw new StaleRevisionError(err.detail);
      throw new ApiError(res.status, err.error, err.detail);
    }
    return (await res.json()) as T;
  }

  /** Serialize mutations: each waits for the previous one to settle. */
  private mutate<T>(fn: () => Promise<T>): Promise<T> {
    const next = this.mutationChain.then(fn, fn);
    this.mutationChain = next.catch(() => undefined);
    return next;
  }

  listScenes(): Promise<{ scenes: { id: string; revision: number }[] }> {
    return this.request("GET", "/scenes");
  }

  createScene(scene: SceneJson): Promise<{ id: string; revision: number }> {
    return this.mutate(() => this.request("POST", "/scenes", { scene }));
  }

  getScene(id: string): Promise<SceneEnvelope> {
    return this.request("GET", `/scenes/${id}`);
  }

  putScene(
    id: string,
    scene: SceneJson,
    baseRevision: number,
  ): Promise<{ id: string; revision: number }> {
    return this.mutate(() =>
      this.request("PUT", `/scenes/${id}`, {
        scene,
        base_revision: baseRevision,
      }),
    );
  }

  /** Sketch: append one instance client-side and PUT the whole scene. */
  addInstance(
    envelope: SceneEnvelope,
    className: string,
    ring: Point[],
  ): Promise<{ id: string; revision: number }> {
    const nextId =
      envelope.scene.instances.reduce((m, i) => Math.max(m, i.id), 0) + 1;
    const scene: SceneJson = {
      ...envelope.scene,
      instances: [
        ...envelope.scene.instances,
        {
          id: nextId,
          class: className,
          score: 1.0,
          attributes: [],
          parent: null,
          rings: [ring],
        },
      ],
    };
    return this.putScene(envelope.id, scene, envelope.revision);
  }

  private op(
    id: string,
    name: string,
    body: Record<string, unknown>,
    baseRevision: number,
  ): Promise<OpResult> {
    return this.mutate(() =>
      this.request("POST", `/scenes/${id}/ops/${name}`, {
        ...body,
        base_revision: baseRevision,
      }),
    );
  }

  move(id: string, instanceId: number, dx: number, dy: number, rev: number) {
    return this.op(id, "move", { instance_id: instanceId, dx, dy }, rev);
  }

  scale(
    id: string,
    instanceId: number,
    factor: number,
    pivot: Point | null,
    rev: number,
  ) {
    return this.op(
      id,
      "scale",
      { instance_id: instanceId, factor, pivot },
      rev,
    );
  }

  delete(id: string, instanceId: number, cascade: boolean, rev: number) {
    return this.op(id, "delete", { instance_id: instanceId, cascade }, rev);
  }

  duplicate(id: string, instanceId: number, offset: Point, rev: number) {
    return this.op(id, "duplicate", { instance_id: instanceId, offset }, rev);
  }

  setAttributes(id: string, instanceId: number, attrs: string[], rev: number) {
    return this.op(
      id,
      "set_attributes",
      { instance_id: instanceId, attributes: attrs },
      rev,
    );
  }

  freezeBackground(id: string, frozen: boolean, rev: number) {
    return this.op(id, "freeze_background", { frozen }, rev);
  }

  rasterUrl(id: string, kind: OverlayMode, res?: number): string {
    const params = new URLSearchParams({ kind, fmt: "png" });
    if (res !== undefined) params.set("res", String(res));
    return this.url(`/scenes/${id}/raster?${params}`);
  }

  async rasterPng(
    id: string,
    kind: "class" | "instance" | "bg" | "fg",
    res?: number,
  ): Promise<ArrayBuffer> {
    const res_ = await this.fetchImpl(this.rasterUrl(id, kind, res));
    if (res_.status >= 400) {
      const err = (await res_.json()) as ApiErrorBody;
      throw new ApiError(res_.status, err.error, err.detail);
    }
    return res_.arrayBuffer();
  }

  async preview(
    id: string,
    style: "attributes" | { tokens_ref: string },
    res: number,
  ): Promise<ArrayBuffer> {
    const res_ = await this.fetchImpl(this.url(`/scenes/${id}/preview`), {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ style, res }),
    });
    if (res_.status >= 400) {
      const err = (await res_.json()) as ApiErrorBody;
      throw new ApiError(res_.status, err.error, err.detail);
    }
    return res_.arrayBuffer();
  }

  attention(id: string, tokensRef: string): Promise<AttentionResponse> {
    return this.request("POST", `/scenes/${id}/attention`, {
      tokens_ref: tokensRef,
    });
  }

  randomize(
    id: string,
    strategy: string,
    seed: number,
    rev: number,
  ): Promise<RandomizeResult> {
    return this.mutate(() =>
      this.request("POST", `/scenes/${id}/style/randomize`, {
        strategy,
        seed,
        base_revision: rev,
      }),
    );
  }

  interpolate(
    id: string,
    from: string,
    to: string,
    steps: number,
    res: number,
  ): Promise<{ id: string; steps: number; frames: string[] }> {
    return this.request("POST", `/scenes/${id}/style/interpolate`, {
      from,
      to,
      steps,
      res,
    });
  }
}
