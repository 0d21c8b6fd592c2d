"""Sparse scene model: class-labeled, attribute-tagged instances with
polygon masks and a containment forest.

Masks are kept as polygons so translation and scaling are exact; pixel
areas and the containment rule are measured on rasterized masks at
canvas resolution.
"""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field

import numpy as np

from .geometry import fill_rings, rings_bbox
from .vocab import AttributeVocab, ClassVocab, BACKGROUND, FOREGROUND

CONTAINMENT_RATIO = 0.7


class SceneError(Exception):
    pass


@dataclass
class InstanceMask:
    rings: list[np.ndarray]

    def __post_init__(self):
        self.rings = [np.asarray(r, dtype=np.float64) for r in self.rings]
        for r in self.rings:
            if r.ndim != 2 or r.shape[1] != 2 or len(r) < 3:
                raise SceneError("every ring needs >= 3 (x, y) points")

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        return rings_bbox(self.rings)

    def rasterize(self, width: int, height: int) -> np.ndarray:
        return fill_rings(self.rings, width, height)

    def area_px(self, width: int, height: int) -> int:
        return int(self.rasterize(width, height).sum())

    def copy(self) -> "InstanceMask":
        return InstanceMask([r.copy() for r in self.rings])


@dataclass
class Instance:
    id: int
    class_id: int
    score: float = 1.0
    mask: InstanceMask = None
    attributes: set[int] = field(default_factory=set)
    parent: int | None = None
    children: list[int] = field(default_factory=list)


class SceneGraph:
    def __init__(self, width: int, height: int, frozen_background: bool = False):
        self.width = int(width)
        self.height = int(height)
        self.frozen_background = frozen_background
        self.instances: dict[int, Instance] = {}

    # -- basic bookkeeping -------------------------------------------------

    def add(self, inst: Instance) -> Instance:
        if inst.id in self.instances:
            raise SceneError(f"duplicate instance id {inst.id}")
        self._clamp(inst)
        self.instances[inst.id] = inst
        return inst

    def new_id(self) -> int:
        return max(self.instances, default=0) + 1

    def get(self, inst_id: int) -> Instance:
        try:
            return self.instances[inst_id]
        except KeyError:
            raise SceneError("no such instance") from None

    def clone(self) -> "SceneGraph":
        return copy.deepcopy(self)

    def _clamp(self, inst: Instance) -> None:
        for ring in inst.mask.rings:
            np.clip(ring[:, 0], 0.0, float(self.width), out=ring[:, 0])
            np.clip(ring[:, 1], 0.0, float(self.height), out=ring[:, 1])

    def descendants(self, inst_id: int) -> list[int]:
        out, stack = [], list(self.get(inst_id).children)
        while stack:
            cur = stack.pop()
            out.append(cur)
            stack.extend(self.instances[cur].children)
        return out

    def roots(self) -> list[int]:
        return [i for i, inst in self.instances.items() if inst.parent is None]

    def check_forest(self) -> None:
        """Raise unless parent/child links form a consistent forest."""
        for inst in self.instances.values():
            if inst.parent is not None:
                parent = self.instances.get(inst.parent)
                if parent is None or inst.id not in parent.children:
                    raise SceneError(f"dangling parent link on instance {inst.id}")
            for c in inst.children:
                child = self.instances.get(c)
                if child is None or child.parent != inst.id:
                    raise SceneError(f"dangling child link on instance {inst.id}")
        for start in self.instances:
            seen, cur = set(), start
            while cur is not None:
                if cur in seen:
                    raise SceneError(f"cycle through instance {start}")
                seen.add(cur)
                cur = self.instances[cur].parent

    # -- serialization -----------------------------------------------------

    def to_json(self, class_vocab: ClassVocab, attr_vocab: AttributeVocab) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "frozen_background": self.frozen_background,
            "instances": [
                {
                    "id": inst.id,
                    "class": class_vocab.by_id[inst.class_id].name,
                    "score": inst.score,
                    "attributes": sorted(
                        attr_vocab.by_id[a].name for a in inst.attributes
                    ),
                    "parent": inst.parent,
                    "rings": [ring.tolist() for ring in inst.mask.rings],
                }
                for inst in sorted(self.instances.values(), key=lambda i: i.id)
            ],
        }

    @classmethod
    def from_json(cls, data, class_vocab: ClassVocab,
                  attr_vocab: AttributeVocab) -> "SceneGraph":
        if isinstance(data, (str, bytes)):
            data = json.loads(data)
        scene = cls(data["width"], data["height"],
                    bool(data.get("frozen_background", False)))
        for rec in data["instances"]:
            scene.add(Instance(
                id=int(rec["id"]),
                class_id=class_vocab.resolve(rec["class"]).id,
                score=float(rec.get("score", 1.0)),
                mask=InstanceMask([np.asarray(r) for r in rec["rings"]]),
                attributes={attr_vocab.resolve(n).id
                            for n in rec.get("attributes", [])},
                parent=rec.get("parent"),
            ))
        for inst in scene.instances.values():
            if inst.parent is not None:
                scene.get(inst.parent).children.append(inst.id)
        scene.check_forest()
        return scene


# -- hierarchy -------------------------------------------------------------

def build_hierarchy(instances: list[Instance], width: int, height: int,
                    ratio: float = CONTAINMENT_RATIO) -> SceneGraph:
    """Link each instance to its smallest qualifying container.

    An instance becomes a child of another when at least `ratio` of its
    rasterized pixel area is covered by the other's mask. Among several
    qualifying containers, the smallest-area one wins; area ties break
    toward the lowest id. Zero-area instances are kept but never linked.
    """
    scene = SceneGraph(width, height)
    for inst in instances:
        inst.parent = None
        inst.children = []
        scene.add(inst)

    masks = {i.id: i.mask.rasterize(width, height) for i in instances}
    areas = {iid: int(m.sum()) for iid, m in masks.items()}

    for inst in instances:
        child_area = areas[inst.id]
        if child_area == 0:
            continue
        best = None
        for other in instances:
            if other.id == inst.id or areas[other.id] == 0:
                continue
            # (area, id) ordering keeps links acyclic even for identical masks
            key = (areas[other.id], other.id)
            if key <= (child_area, inst.id):
                continue
            inter = int((masks[inst.id] & masks[other.id]).sum())
            if inter / child_area >= ratio and (best is None or key < best[0]):
                best = (key, other.id)
        if best is not None:
            inst.parent = best[1]
            scene.get(best[1]).children.append(inst.id)

    scene.check_forest()
    return scene


def rebuild_hierarchy(scene: SceneGraph, ratio: float = CONTAINMENT_RATIO) -> SceneGraph:
    return build_hierarchy(list(scene.instances.values()),
                           scene.width, scene.height, ratio)


def resolve_roles(scene: SceneGraph, class_vocab: ClassVocab) -> dict[int, str]:
    """Role per instance: class default, forced foreground under a
    foreground ancestor."""
    roles: dict[int, str] = {}

    def visit(inst_id: int, ancestor_fg: bool):
        inst = scene.instances[inst_id]
        role = class_vocab.by_id[inst.class_id].default_role
        if ancestor_fg:
            role = FOREGROUND
        roles[inst_id] = role
        for c in inst.children:
            visit(c, role == FOREGROUND)

    for root in scene.roots():
        visit(root, False)
    return roles


# -- manipulations ---------------------------------------------------------

def _affected(scene: SceneGraph, inst_id: int) -> list[int]:
    return [inst_id] + scene.descendants(inst_id)


def move_instance(scene: SceneGraph, inst_id: int, dx: float, dy: float) -> SceneGraph:
    for iid in _affected(scene, inst_id):
        inst = scene.instances[iid]
        for ring in inst.mask.rings:
            ring[:, 0] += dx
            ring[:, 1] += dy
        scene._clamp(inst)
    return scene


def scale_instance(scene: SceneGraph, inst_id: int, factor: float,
                   pivot: tuple[float, float] | None = None) -> SceneGraph:
    if factor <= 0:
        raise SceneError("scale factor must be > 0")
    target = scene.get(inst_id)
    if pivot is None:
        x0, y0, x1, y1 = target.mask.bbox
        pivot = ((x0 + x1) / 2.0, (y0 + y1) / 2.0)
    px, py = pivot
    for iid in _affected(scene, inst_id):
        inst = scene.instances[iid]
        for ring in inst.mask.rings:
            ring[:, 0] = px + (ring[:, 0] - px) * factor
            ring[:, 1] = py + (ring[:, 1] - py) * factor
        scene._clamp(inst)
    return scene


def delete_instance(scene: SceneGraph, inst_id: int, cascade: bool = True) -> SceneGraph:
    inst = scene.get(inst_id)
    doomed = _affected(scene, inst_id) if cascade else [inst_id]
    if not cascade:
        for c in inst.children:
            scene.instances[c].parent = None
    if inst.parent is not None:
        scene.instances[inst.parent].children.remove(inst_id)
    for iid in doomed:
        del scene.instances[iid]
    scene.check_forest()
    return scene


def duplicate_instance(scene: SceneGraph, inst_id: int,
                       offset: tuple[float, float] = (0.0, 0.0)) -> tuple[SceneGraph, int]:
    """Deep-copy the subtree under `inst_id` with fresh ids, translated
    by `offset`. The copy's root keeps the original root's parent."""
    subtree = _affected(scene, inst_id)
    remap = {}
    next_id = scene.new_id()
    for old in subtree:
        remap[old] = next_id
        next_id += 1
    for old in subtree:
        src = scene.instances[old]
        clone = Instance(
            id=remap[old],
            class_id=src.class_id,
            score=src.score,
            mask=src.mask.copy(),
            attributes=set(src.attributes),
            parent=remap.get(src.parent, src.parent) if old != inst_id else src.parent,
            children=[remap[c] for c in src.children],
        )
        scene.add(clone)
    new_root = remap[inst_id]
    root = scene.instances[new_root]
    if root.parent is not None:
        scene.instances[root.parent].children.append(new_root)
    move_instance(scene, new_root, offset[0], offset[1])
    scene.check_forest()
    return scene, new_root


def set_attributes(scene: SceneGraph, inst_id: int, attrs: set[int],
                   attr_vocab: AttributeVocab) -> SceneGraph:
    bad = [a for a in attrs if a not in attr_vocab.by_id]
    if bad:
        raise SceneError(f"unknown attribute ids {sorted(bad)}")
    scene.get(inst_id).attributes = set(attrs)
    return scene
