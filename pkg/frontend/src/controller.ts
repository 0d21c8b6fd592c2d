/** Orchestration between the pure editor state and the API client.
 * DOM-free so the mutation/conflict/debounce behavior is testable. */

import { ApiClient, StaleRevisionError } from "./api.js";
import {
  adoptRevision,
  adoptScene,
  cancelDraft,
  draftClick,
  initialState,
  markStale,
  selectInstance,
  setMutationInFlight,
  setOverlay,
  setTool,
  startDraft,
} from "./state.js";
import type { EditorState, OverlayMode, Point, Tool } from "./types.js";

export const PREVIEW_DEBOUNCE_MS = 150;

export type Listener = (state: EditorState) => void;

export class EditorController {
  state: EditorState = initialState();
  private listeners: Listener[] = [];
  private previewTimer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private api: ApiClient,
    private onPreviewRefresh: () => void = () => {},
  ) {}

  subscribe(fn: Listener): void {
    this.listeners.push(fn);
  }

  private set(state: EditorState): void {
    this.state = state;
    for (const fn of this.listeners) fn(state);
  }

  async open(sceneId: string): Promise<void> {
    const envelope = await this.api.getScene(sceneId);
    this.set(adoptScene(this.state, envelope));
  }

  async reload(): Promise<void> {
    if (this.state.sceneId === null) return;
    await this.open(this.state.sceneId);
  }

  select(id: number | null): void {
    this.set(selectInstance(this.state, id));
  }

  tool(tool: Tool): void {
    this.set(setTool(this.state, tool));
  }

  overlay(mode: OverlayMode): void {
    this.set(setOverlay(this.state, mode));
    this.schedulePreviewRefresh();
  }

  sketchStart(classId: string): void {
    this.set(startDraft(this.state, classId));
  }

  sketchCancel(): void {
    this.set(cancelDraft(this.state));
  }

  /** One canvas click while sketching. Posting happens only on close. */
  async sketchClick(x: number, y: number): Promise<void> {
    const result = draftClick(this.state, x, y);
    this.set(result.state);
    if (result.kind === "closed") {
      const { sceneId, revision, scene } = this.state;
      if (sceneId === null || scene === null) return;
      await this.runMutation(async () => {
        const res = await this.api.addInstance(
          { id: sceneId, revision, scene },
          result.classId,
          result.ring,
        );
        this.set(adoptRevision(this.state, res.revision));
      });
    }
  }

  /** Every mutation funnels through here: one in flight at a time, 409
   * marks the state stale (reload prompt) and never overwrites. */
  private async runMutation(fn: () => Promise<void>): Promise<void> {
    if (this.state.mutationInFlight) {
      throw new Error("mutation already in flight");
    }
    this.set(setMutationInFlight(this.state, true));
    try {
      await fn();
      await this.reload();
      this.schedulePreviewRefresh();
    } catch (err) {
      if (err instanceof StaleRevisionError) {
        this.set(markStale(this.state));
        return;
      }
      throw err;
    } finally {
      this.set(setMutationInFlight(this.state, false));
    }
  }

  private withSelection(
    fn: (sceneId: string, instanceId: number, revision: number) => Promise<unknown>,
  ): Promise<void> {
    const { sceneId, selected, revision } = this.state;
    if (sceneId === null || selected === null) return Promise.resolve();
    return this.runMutation(async () => {
      const res = (await fn(sceneId, selected, revision)) as {
        revision: number;
      };
      this.set(adoptRevision(this.state, res.revision));
    });
  }

  move(dx: number, dy: number): Promise<void> {
    return this.withSelection((s, i, r) => this.api.move(s, i, dx, dy, r));
  }

  scale(factor: number, pivot: Point | null): Promise<void> {
    return this.withSelection((s, i, r) =>
      this.api.scale(s, i, factor, pivot, r),
    );
  }

  remove(cascade = true): Promise<void> {
    return this.withSelection((s, i, r) => this.api.delete(s, i, cascade, r));
  }

  duplicate(offset: Point): Promise<void> {
    return this.withSelection((s, i, r) =>
      this.api.duplicate(s, i, offset, r),
    );
  }

  setAttributes(attrs: string[]): Promise<void> {
    return this.withSelection((s, i, r) =>
      this.api.setAttributes(s, i, attrs, r),
    );
  }

  freezeBackground(frozen: boolean): Promise<void> {
    const { sceneId, revision } = this.state;
    if (sceneId === null) return Promise.resolve();
    return this.runMutation(async () => {
      const res = await this.api.freezeBackground(sceneId, frozen, revision);
      this.set(adoptRevision(this.state, res.revision));
    });
  }

  randomize(strategy: string, seed: number): Promise<void> {
    const { sceneId, revision } = this.state;
    if (sceneId === null) return Promise.resolve();
    return this.runMutation(async () => {
      const res = await this.api.randomize(sceneId, strategy, seed, revision);
      this.set(adoptRevision(this.state, res.revision));
    });
  }

  /** Debounced preview refresh (150 ms). */
  schedulePreviewRefresh(): void {
    if (this.previewTimer !== null) clearTimeout(this.previewTimer);
    this.previewTimer = setTimeout(() => {
      this.previewTimer = null;
      this.onPreviewRefresh();
    }, PREVIEW_DEBOUNCE_MS);
  }
}
