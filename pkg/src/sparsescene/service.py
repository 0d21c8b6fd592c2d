"""HTTP facade over scenes, manipulations, rasterization, previews, and
style tools. Base path /api/v1.

Scenes live in memory and are persisted as JSON files under the data
directory (write-temp-then-rename). Mutations take a per-scene lock and
bump a revision counter; writers supply the revision they based their
change on and stale writers get 409.
"""

from __future__ import annotations

import base64
import json
import os
import tempfile
import threading
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from . import raster as raster_mod
from .kernels.attention import attention_forward
from .kernels.encoder import load_token_embeddings
from .kernels.toy import ToyWeights, toy_forward
from .scene import (SceneError, SceneGraph, delete_instance,
                    duplicate_instance, move_instance, rebuild_hierarchy,
                    resolve_roles, scale_instance, set_attributes)
from .stylekit import StyleDistribution, StyleError, interpolate_styles, sample_styles
from .vocab import AttributeVocab, ClassVocab, NO_CLASS_ID

DEFAULT_MAX_RES = 512


class ApiError(Exception):
    def __init__(self, status: int, code: str, detail: str = ""):
        super().__init__(detail or code)
        self.status = status
        self.code = code
        self.detail = detail or code


@dataclass
class ServiceConfig:
    data_dir: Path
    class_vocab: ClassVocab
    attr_vocab: AttributeVocab
    weights: ToyWeights
    dist: StyleDistribution | None = None
    tokens_dir: Path | None = None
    max_res: int = DEFAULT_MAX_RES


@dataclass
class _Entry:
    scene: SceneGraph
    revision: int = 1
    lock: threading.Lock = field(default_factory=threading.Lock)


class SceneStore:
    def __init__(self, cfg: ServiceConfig):
        self.cfg = cfg
        self._entries: dict[str, _Entry] = {}
        self._guard = threading.Lock()
        cfg.data_dir.mkdir(parents=True, exist_ok=True)
        for path in sorted(cfg.data_dir.glob("*.json")):
            data = json.loads(path.read_text())
            scene = SceneGraph.from_json(data["scene"], cfg.class_vocab,
                                         cfg.attr_vocab)
            self._entries[path.stem] = _Entry(scene=scene,
                                              revision=data["revision"])

    def ids(self) -> list[str]:
        with self._guard:
            return sorted(self._entries)

    def get(self, scene_id: str) -> _Entry:
        with self._guard:
            entry = self._entries.get(scene_id)
        if entry is None:
            raise ApiError(404, "unknown_scene", f"no scene {scene_id!r}")
        return entry

    def create(self, scene: SceneGraph) -> str:
        with self._guard:
            scene_id = f"s{len(self._entries) + 1:04d}"
            while scene_id in self._entries:
                scene_id = f"s{int(scene_id[1:]) + 1:04d}"
            self._entries[scene_id] = _Entry(scene=scene)
        self._persist(scene_id)
        return scene_id

    def _persist(self, scene_id: str) -> None:
        entry = self.get(scene_id)
        payload = json.dumps({
            "revision": entry.revision,
            "scene": entry.scene.to_json(self.cfg.class_vocab,
                                         self.cfg.attr_vocab),
        }, sort_keys=True)
        target = self.cfg.data_dir / f"{scene_id}.json"
        fd, tmp = tempfile.mkstemp(dir=self.cfg.data_dir, suffix=".tmp")
        with os.fdopen(fd, "w") as f:
            f.write(payload)
        os.replace(tmp, target)

    def mutate(self, scene_id: str, base_revision: int | None, fn):
        """Run fn(scene_copy) under the scene lock; commit only if it
        succeeds and the base revision still matches."""
        entry = self.get(scene_id)
        with entry.lock:
            if base_revision is not None and base_revision != entry.revision:
                raise ApiError(409, "stale_revision",
                               f"scene is at revision {entry.revision}")
            work = entry.scene.clone()
            result = fn(work)
            work.check_forest()
            entry.scene = work
            entry.revision += 1
            revision = entry.revision
        self._persist(scene_id)
        return revision, result


def _changed_ids(before: SceneGraph, after: SceneGraph) -> list[int]:
    changed = set(before.instances) ^ set(after.instances)
    for iid in set(before.instances) & set(after.instances):
        a, b = before.instances[iid], after.instances[iid]
        if (a.parent != b.parent or a.attributes != b.attributes
                or len(a.mask.rings) != len(b.mask.rings)
                or any(not np.array_equal(r1, r2)
                       for r1, r2 in zip(a.mask.rings, b.mask.rings))):
            changed.add(iid)
    return sorted(changed)


def create_app(cfg: ServiceConfig) -> FastAPI:
    app = FastAPI(title="sparsescene")
    store = SceneStore(cfg)
    app.state.store = store

    @app.exception_handler(ApiError)
    async def _api_error(_req, exc: ApiError):
        return JSONResponse(status_code=exc.status,
                            content={"error": exc.code, "detail": exc.detail})

    def parse_scene(payload) -> SceneGraph:
        try:
            return SceneGraph.from_json(payload, cfg.class_vocab, cfg.attr_vocab)
        except (SceneError, KeyError, TypeError, ValueError) as e:
            raise ApiError(400, "invalid_scene", str(e))

    def scene_response(scene_id: str) -> dict:
        entry = store.get(scene_id)
        return {"id": scene_id, "revision": entry.revision,
                "scene": entry.scene.to_json(cfg.class_vocab, cfg.attr_vocab)}

    # -- scene CRUD --------------------------------------------------------

    @app.get("/api/v1/scenes")
    def list_scenes():
        return {"scenes": [{"id": sid, "revision": store.get(sid).revision}
                           for sid in store.ids()]}

    @app.post("/api/v1/scenes", status_code=201)
    async def create_scene(request: Request):
        body = await request.json()
        scene = parse_scene(body.get("scene", body))
        scene_id = store.create(scene)
        return {"id": scene_id, "revision": 1}

    @app.get("/api/v1/scenes/{scene_id}")
    def get_scene(scene_id: str):
        return scene_response(scene_id)

    @app.put("/api/v1/scenes/{scene_id}")
    async def update_scene(scene_id: str, request: Request):
        body = await request.json()
        scene = parse_scene(body["scene"])

        def apply(work: SceneGraph):
            work.width = scene.width
            work.height = scene.height
            work.frozen_background = scene.frozen_background
            work.instances = scene.clone().instances
        revision, _ = store.mutate(scene_id, body.get("base_revision"), apply)
        return {"id": scene_id, "revision": revision}

    # -- manipulations -----------------------------------------------------

    def _manipulate(scene_id: str, body: dict, fn):
        entry = store.get(scene_id)
        before = entry.scene

        def apply(scene: SceneGraph):
            try:
                fn(scene, body)
            except SceneError as e:
                if "no such instance" in str(e):
                    raise ApiError(404, "unknown_instance", str(e))
                raise ApiError(400, "invalid_operation", str(e))
            return _changed_ids(before, scene)

        revision, changed = store.mutate(scene_id, body.get("base_revision"), apply)
        return {"id": scene_id, "revision": revision, "changed": changed}

    @app.post("/api/v1/scenes/{scene_id}/ops/move")
    async def op_move(scene_id: str, request: Request):
        body = await request.json()
        return _manipulate(scene_id, body, lambda s, b: move_instance(
            s, int(b["instance_id"]), float(b["dx"]), float(b["dy"])))

    @app.post("/api/v1/scenes/{scene_id}/ops/scale")
    async def op_scale(scene_id: str, request: Request):
        body = await request.json()
        pivot = tuple(body["pivot"]) if body.get("pivot") else None
        return _manipulate(scene_id, body, lambda s, b: scale_instance(
            s, int(b["instance_id"]), float(b["factor"]), pivot))

    @app.post("/api/v1/scenes/{scene_id}/ops/delete")
    async def op_delete(scene_id: str, request: Request):
        body = await request.json()
        return _manipulate(scene_id, body, lambda s, b: delete_instance(
            s, int(b["instance_id"]), bool(b.get("cascade", True))))

    @app.post("/api/v1/scenes/{scene_id}/ops/duplicate")
    async def op_duplicate(scene_id: str, request: Request):
        body = await request.json()
        new_ids: list[int] = []

        def run(s, b):
            _, nid = duplicate_instance(s, int(b["instance_id"]),
                                        tuple(b.get("offset", (0.0, 0.0))))
            new_ids.append(nid)
        out = _manipulate(scene_id, body, run)
        out["new_id"] = new_ids[0]
        return out

    @app.post("/api/v1/scenes/{scene_id}/ops/set_attributes")
    async def op_set_attributes(scene_id: str, request: Request):
        body = await request.json()

        def run(s, b):
            try:
                ids = {cfg.attr_vocab.resolve(n).id for n in b["attributes"]}
            except KeyError as e:
                raise SceneError(str(e))
            set_attributes(s, int(b["instance_id"]), ids, cfg.attr_vocab)
        return _manipulate(scene_id, body, run)

    @app.post("/api/v1/scenes/{scene_id}/ops/freeze_background")
    async def op_freeze(scene_id: str, request: Request):
        body = await request.json()

        def run(s, b):
            s.frozen_background = bool(b["frozen"])
        return _manipulate(scene_id, body, run)

    @app.post("/api/v1/scenes/{scene_id}/ops/rebuild_hierarchy")
    async def op_rebuild(scene_id: str, request: Request):
        body = await request.json()

        def run(s, b):
            rebuilt = rebuild_hierarchy(s)
            s.instances = rebuilt.instances
        return _manipulate(scene_id, body, run)

    # -- rasterization -----------------------------------------------------

    @app.get("/api/v1/scenes/{scene_id}/raster")
    def get_raster(scene_id: str, kind: str = "class", res: int | None = None,
                   fmt: str = "png"):
        entry = store.get(scene_id)
        scene = entry.scene
        if res is not None and not 1 <= res <= cfg.max_res:
            raise ApiError(400, "bad_resolution",
                           f"res must be in [1, {cfg.max_res}]")
        width = height = res if res is not None else None
        maps = raster_mod.rasterize(scene, width, height)
        if kind in ("bg", "fg"):
            roles = resolve_roles(scene, cfg.class_vocab)
            bg, fg = raster_mod.split_bg_fg(maps, roles)
            maps = bg if kind == "bg" else fg
        elif kind not in ("class", "instance"):
            raise ApiError(400, "bad_kind", "kind must be class|instance|bg|fg")
        plane = maps.instance_map if kind == "instance" else maps.class_map
        if fmt == "raw":
            payload = raster_mod.export_raw(
                raster_mod.LabelMaps(class_map=plane, instance_map=maps.instance_map))
            return Response(content=payload, media_type="application/octet-stream")
        return Response(content=raster_mod.export_png(plane),
                        media_type="image/png")

    # -- previews and attention -------------------------------------------

    def _load_tokens(ref: str) -> np.ndarray:
        if cfg.tokens_dir is None:
            raise ApiError(400, "no_tokens_dir", "service has no token files")
        path = cfg.tokens_dir / Path(ref).name
        if not path.is_file():
            raise ApiError(404, "unknown_tokens", f"no token file {ref!r}")
        tok, _ = load_token_embeddings(path.read_bytes())
        return tok

    def _preview_png(scene: SceneGraph, style, res: int) -> bytes:
        maps = raster_mod.rasterize(scene, res, res)
        attr_plane = tokens = None
        if style == "attributes":
            attr_plane = raster_mod.attribute_plane(scene, maps,
                                                    len(cfg.attr_vocab))
        elif isinstance(style, dict) and "tokens_ref" in style:
            tokens = _load_tokens(style["tokens_ref"])
        rgb = toy_forward(maps.class_map, cfg.weights,
                          attr_plane=attr_plane, tokens=tokens)
        return raster_mod.export_rgb_png(rgb)

    @app.post("/api/v1/scenes/{scene_id}/preview")
    async def preview(scene_id: str, request: Request):
        body = await request.json()
        entry = store.get(scene_id)
        res = int(body.get("res", 64))
        if not 1 <= res <= cfg.max_res:
            raise ApiError(400, "bad_resolution",
                           f"res must be in [1, {cfg.max_res}]")
        png = _preview_png(entry.scene, body.get("style", "attributes"), res)
        return Response(content=png, media_type="image/png")

    @app.post("/api/v1/scenes/{scene_id}/attention")
    async def attention(scene_id: str, request: Request):
        body = await request.json()
        entry = store.get(scene_id)
        tok = _load_tokens(body["tokens_ref"])
        _, weights, _ = attention_forward(tok, cfg.weights.attention)
        maps = raster_mod.rasterize(entry.scene)
        present = sorted(set(np.unique(maps.class_map)) | {NO_CLASS_ID})
        out = {}
        for cid in present:
            name = ("no class" if cid == NO_CLASS_ID
                    else cfg.class_vocab.by_id[int(cid)].name)
            out[name] = weights[int(cid)].tolist()
        return {"classes": out, "n_tokens": tok.shape[0],
                "heads": cfg.weights.attention.heads}

    # -- style -------------------------------------------------------------

    @app.post("/api/v1/scenes/{scene_id}/style/randomize")
    async def randomize(scene_id: str, request: Request):
        body = await request.json()
        if cfg.dist is None:
            raise ApiError(400, "no_distribution", "service has no style distribution")

        def run(s, b):
            try:
                report = sample_styles(s, cfg.dist, cfg.class_vocab,
                                       strategy=b.get("strategy",
                                                      "coherent_bg_random_fg"),
                                       seed=int(b.get("seed", 0)))
            except StyleError as e:
                raise SceneError(str(e))
            return report
        entry = store.get(scene_id)
        before = entry.scene
        reports = {}

        def apply(scene):
            reports["report"] = run(scene, body)
            return _changed_ids(before, scene)
        revision, changed = store.mutate(scene_id, body.get("base_revision"), apply)
        return {"id": scene_id, "revision": revision, "changed": changed,
                "report": reports["report"]}

    @app.post("/api/v1/scenes/{scene_id}/style/interpolate")
    async def interpolate(scene_id: str, request: Request):
        body = await request.json()
        entry = store.get(scene_id)
        steps = int(body.get("steps", 2))
        res = int(body.get("res", 64))
        tok_a = _load_tokens(body["from"])
        tok_b = _load_tokens(body["to"])
        ctx_a, _, _ = attention_forward(tok_a, cfg.weights.attention)
        ctx_b, _, _ = attention_forward(tok_b, cfg.weights.attention)
        try:
            tables = interpolate_styles(ctx_a, ctx_b, steps)
        except StyleError as e:
            raise ApiError(400, "bad_interpolation", str(e))
        maps = raster_mod.rasterize(entry.scene, res, res)
        frames = []
        for table in tables:
            rgb = _toy_with_ctx(maps.class_map, cfg.weights, table)
            frames.append(base64.b64encode(
                raster_mod.export_rgb_png(rgb)).decode())
        return {"id": scene_id, "steps": steps, "frames": frames}

    def _toy_with_ctx(class_map, w: ToyWeights, ctx_table):
        from .kernels.embeddings import apply_contextualized, class_embed
        from .kernels.blocks import s_block_forward
        from .kernels.conv import relu
        sem = class_embed(class_map, w.e_cls)
        sty = apply_contextualized(class_map, ctx_table)
        cond = np.concatenate([sem, sty], axis=2)
        h, wd = class_map.shape
        x = np.broadcast_to(w.x0[None, :, None, None],
                            (1, w.channels, h, wd)).copy()
        y1, _ = s_block_forward(x, cond, w.block1)
        y2, _ = s_block_forward(relu(y1), cond, w.block2)
        return np.einsum("nchw,ck->knhw", y2, w.proj)[:, 0]

    return app
