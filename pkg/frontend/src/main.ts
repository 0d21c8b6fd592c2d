/** DOM wiring for the scene editor: canvas overlays, toolbar, attribute
 * chips, and the attention-bar panel. All pixels and weights shown come
 * straight from service responses for the current revision. */

import { ApiClient } from "./api.js";
import { barsForClass, barWidths, classNames, validateRowSums } from "./attention.js";
import { EditorController } from "./controller.js";
import { hitTest, isSelfIntersecting } from "./geometry.js";
import type { EditorState, OverlayMode, Tool } from "./types.js";

const TOOLS: Tool[] = [
  "select",
  "draw-polygon",
  "scale",
  "delete",
  "duplicate",
  "attribute-edit",
];
const OVERLAYS: OverlayMode[] = [
  "class",
  "instance",
  "bg",
  "fg",
  "preview",
  "attention",
];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  cls?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (cls) node.className = cls;
  if (text) node.textContent = text;
  return node;
}

export interface Editor {
  controller: EditorController;
  renderAttention(tokensRef: string): Promise<void>;
}

export function mount(root: HTMLElement, baseUrl: string): Editor {
  const api = new ApiClient(baseUrl, (url, init) =>
    fetch(url, init as RequestInit),
  );

  const canvas = el("canvas", "editor-canvas");
  canvas.width = 512;
  canvas.height = 512;
  const overlayImg = new Image();
  const toolbar = el("div", "toolbar");
  const status = el("div", "status");
  const chips = el("div", "attribute-chips");
  const attentionPanel = el("div", "attention-panel");
  const conflictBanner = el("div", "conflict-banner");
  conflictBanner.style.display = "none";
  const reloadBtn = el("button", "", "Reload scene");
  conflictBanner.append(
    el("span", "", "Scene changed on the server. "),
    reloadBtn,
  );

  const controller = new EditorController(api, () => {
    void refreshOverlay();
  });

  reloadBtn.addEventListener("click", () => {
    void controller.reload();
  });

  for (const tool of TOOLS) {
    const btn = el("button", "tool", tool);
    btn.addEventListener("click", () => controller.tool(tool));
    toolbar.append(btn);
  }
  const overlaySelect = el("select", "overlay-select");
  for (const mode of OVERLAYS) {
    const opt = el("option", "", mode);
    opt.value = mode;
    overlaySelect.append(opt);
  }
  overlaySelect.addEventListener("change", () =>
    controller.overlay(overlaySelect.value as OverlayMode),
  );
  toolbar.append(overlaySelect);

  async function refreshOverlay(): Promise<void> {
    const { sceneId, overlay } = controller.state;
    if (sceneId === null) return;
    if (overlay === "attention") return;
    let buf: ArrayBuffer;
    if (overlay === "preview") {
      buf = await api.preview(sceneId, "attributes", 256);
    } else {
      buf = await api.rasterPng(sceneId, overlay, 256);
    }
    const blob = new Blob([buf], { type: "image/png" });
    const url = URL.createObjectURL(blob);
    overlayImg.onload = () => {
      draw();
      URL.revokeObjectURL(url);
    };
    overlayImg.src = url;
  }

  function sceneToCanvas(state: EditorState): number {
    return state.scene ? canvas.width / state.scene.width : 1;
  }

  function draw(): void {
    const ctx = canvas.getContext("2d");
    const state = controller.state;
    if (ctx === null || state.scene === null) return;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    if (overlayImg.complete && overlayImg.naturalWidth > 0) {
      ctx.drawImage(overlayImg, 0, 0, canvas.width, canvas.height);
    }
    const s = sceneToCanvas(state);
    for (const inst of state.scene.instances) {
      ctx.strokeStyle = inst.id === state.selected ? "#ff5a1f" : "#dddddd";
      ctx.lineWidth = inst.id === state.selected ? 2.5 : 1;
      for (const ring of inst.rings) {
        ctx.beginPath();
        ring.forEach(([x, y], i) =>
          i === 0 ? ctx.moveTo(x * s, y * s) : ctx.lineTo(x * s, y * s),
        );
        ctx.closePath();
        ctx.stroke();
      }
    }
    if (state.draft !== null && state.draft.points.length > 0) {
      ctx.strokeStyle = "#38bdf8";
      ctx.setLineDash([4, 3]);
      ctx.beginPath();
      state.draft.points.forEach(([x, y], i) =>
        i === 0 ? ctx.moveTo(x * s, y * s) : ctx.lineTo(x * s, y * s),
      );
      ctx.stroke();
      ctx.setLineDash([]);
      if (isSelfIntersecting(state.draft.points)) {
        status.textContent =
          "warning: polygon self-intersects (filled even-odd)";
      }
    }
  }

  canvas.addEventListener("click", (ev) => {
    const rect = canvas.getBoundingClientRect();
    const state = controller.state;
    if (state.scene === null) return;
    const s = sceneToCanvas(state);
    const x = (ev.clientX - rect.left) / s;
    const y = (ev.clientY - rect.top) / s;
    if (state.tool === "draw-polygon" && state.draft !== null) {
      void controller.sketchClick(x, y);
      return;
    }
    controller.select(hitTest(state.scene.instances, x, y));
  });

  document.addEventListener("keydown", (ev) => {
    if (ev.key === "Escape") controller.sketchCancel();
    if (ev.key === "Delete" || ev.key === "Backspace") void controller.remove();
  });

  function renderChips(state: EditorState): void {
    chips.replaceChildren();
    if (state.scene === null || state.selected === null) return;
    const inst = state.scene.instances.find((i) => i.id === state.selected);
    if (!inst) return;
    for (const attr of inst.attributes) {
      const chip = el("span", "chip", attr);
      const remove = el("button", "chip-remove", "x");
      remove.addEventListener("click", () => {
        void controller.setAttributes(
          inst.attributes.filter((a) => a !== attr),
        );
      });
      chip.append(remove);
      chips.append(chip);
    }
    const input = el("input") as HTMLInputElement;
    input.placeholder = "add attribute";
    input.addEventListener("keydown", (ev) => {
      if (ev.key === "Enter" && input.value.trim() !== "") {
        void controller.setAttributes([...inst.attributes, input.value.trim()]);
      }
    });
    chips.append(input);
  }

  async function renderAttention(tokensRef: string): Promise<void> {
    const { sceneId } = controller.state;
    if (sceneId === null) return;
    const resp = await api.attention(sceneId, tokensRef);
    attentionPanel.replaceChildren();
    for (const cls of classNames(resp)) {
      const bars = barsForClass(resp, cls);
      validateRowSums(bars);
      const block = el("div", "attention-class");
      block.append(el("h4", "", cls));
      for (const head of bars) {
        const row = el("div", "head-row");
        row.append(el("span", "head-label", `head ${head.head}`));
        const widths = barWidths(head, 240);
        head.weights.forEach((w, i) => {
          const bar = el("span", "token-bar");
          bar.style.width = `${widths[i]}px`;
          // DOM carries the raw value so checks can compare with the JSON
          bar.dataset.weight = String(w);
          bar.title = `token ${i}: ${w.toFixed(4)}`;
          row.append(bar);
        });
        block.append(row);
      }
      attentionPanel.append(block);
    }
  }

  controller.subscribe((state) => {
    conflictBanner.style.display = state.staleConflict ? "block" : "none";
    status.textContent = state.sceneId
      ? `scene ${state.sceneId} @ r${state.revision}` +
        (state.selected !== null ? ` — #${state.selected}` : "")
      : "no scene";
    renderChips(state);
    draw();
  });

  root.append(conflictBanner, toolbar, canvas, chips, attentionPanel, status);
  return { controller, renderAttention };
}
