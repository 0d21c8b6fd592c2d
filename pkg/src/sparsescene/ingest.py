"""Detector-output ingestion: score filtering, alias merging,
class-agnostic NMS over mask IoU, polygonization, attribute linking.

Detection JSON:
    {"image": {"width": W, "height": H},
     "detections": [{"class": str, "score": float,
                     "bbox": [x0, y0, x1, y1],
                     "rle": {"size": [h, w], "counts": [ints]}}]}

RLE is COCO-style: column-major (Fortran order) counts of alternating
0/1 runs, starting with the zero run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

import numpy as np
from skimage import measure

from .geometry import rect_iou
from .scene import Instance, InstanceMask, SceneGraph, build_hierarchy
from .vocab import AttributeVocab, ClassVocab

DEFAULT_SCORE_THRESHOLD = 0.2
DEFAULT_NMS_IOU = 0.7
DEFAULT_ATTR_IOU = 0.5


class IngestError(Exception):
    pass


@dataclass(frozen=True)
class Detection:
    class_name: str
    score: float
    bbox: tuple[float, float, float, float]
    mask: np.ndarray  # (H, W) bool at source resolution
    index: int = 0    # position in the source file, used for tie-breaks

    def __eq__(self, other):
        return (isinstance(other, Detection)
                and self.class_name == other.class_name
                and self.score == other.score
                and self.bbox == other.bbox
                and np.array_equal(self.mask, other.mask))


@dataclass(frozen=True)
class AttributeRegion:
    bbox: tuple[float, float, float, float]
    attributes: frozenset[str]

    def __post_init__(self):
        if not self.attributes:
            raise IngestError("attribute region with empty attribute set")


def decode_rle(counts: list[int], h: int, w: int) -> np.ndarray:
    counts = list(counts)
    if sum(counts) != h * w or any(c < 0 for c in counts):
        raise IngestError("RLE length mismatch")
    flat = np.zeros(h * w, dtype=bool)
    pos, val = 0, False
    for c in counts:
        if val:
            flat[pos:pos + c] = True
        pos += c
        val = not val
    return flat.reshape((h, w), order="F")


def encode_rle(mask: np.ndarray) -> dict:
    flat = np.asarray(mask, dtype=bool).reshape(-1, order="F")
    counts = []
    run_val, run_len = False, 0
    for v in flat:
        if v == run_val:
            run_len += 1
        else:
            counts.append(run_len)
            run_val, run_len = v, 1
    counts.append(run_len)
    return {"size": [mask.shape[0], mask.shape[1]], "counts": counts}


def parse_detections(raw: bytes | str) -> tuple[list[Detection], tuple[int, int]]:
    """Returns (detections, (width, height))."""
    try:
        data = json.loads(raw)
    except json.JSONDecodeError as e:
        raise IngestError(f"malformed JSON: {e}") from e
    try:
        width = int(data["image"]["width"])
        height = int(data["image"]["height"])
    except (KeyError, TypeError) as e:
        raise IngestError("missing image dimensions") from e
    dets = []
    for idx, rec in enumerate(data.get("detections", [])):
        try:
            h, w = rec["rle"]["size"]
            mask = decode_rle(rec["rle"]["counts"], int(h), int(w))
            dets.append(Detection(
                class_name=rec["class"],
                score=float(rec["score"]),
                bbox=tuple(float(v) for v in rec["bbox"]),
                mask=mask,
                index=idx,
            ))
        except IngestError as e:
            raise IngestError(f"record {idx}: {e}") from e
        except (KeyError, TypeError, ValueError) as e:
            raise IngestError(f"record {idx}: bad detection record ({e})") from e
    return dets, (width, height)


def filter_and_merge(dets: list[Detection], alias_map: dict[str, str],
                     vocab: ClassVocab,
                     threshold: float = DEFAULT_SCORE_THRESHOLD) -> list[Detection]:
    if not 0.0 <= threshold <= 1.0:
        raise IngestError("score threshold must be in [0, 1]")
    for alias, canonical in alias_map.items():
        if canonical not in vocab.by_name or canonical in alias_map:
            raise IngestError(f"alias {alias!r} -> unknown or non-canonical "
                              f"class {canonical!r}")
    out = []
    for d in dets:
        if d.score < threshold:
            continue
        name = alias_map.get(d.class_name, d.class_name)
        out.append(replace(d, class_name=name) if name != d.class_name else d)
    return out


def mask_iou(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise IngestError("mask resolution mismatch")
    union = int(np.logical_or(a, b).sum())
    if union == 0:
        return 0.0
    return int(np.logical_and(a, b).sum()) / union


def nms(dets: list[Detection], iou_threshold: float = DEFAULT_NMS_IOU) -> list[Detection]:
    """Greedy class-agnostic suppression: score descending (ties by input
    index ascending); keep a detection iff its mask IoU with every kept
    one is <= threshold."""
    if not 0.0 < iou_threshold <= 1.0:
        raise IngestError("NMS IoU threshold must be in (0, 1]")
    order = sorted(dets, key=lambda d: (-d.score, d.index))
    kept: list[Detection] = []
    for d in order:
        if all(mask_iou(d.mask, k.mask) <= iou_threshold for k in kept):
            kept.append(d)
    return kept


def polygonize(mask: np.ndarray, scale_x: float = 1.0,
               scale_y: float = 1.0) -> list[np.ndarray]:
    """Marching-squares contours of a bitmap; each closed contour becomes
    one ring (holes included, handled later by even-odd fill)."""
    padded = np.pad(mask.astype(np.float64), 1)
    rings = []
    for contour in measure.find_contours(padded, 0.5):
        # (row, col) in padded index space -> canvas (x, y)
        xs = (contour[:, 1] - 1.0 + 0.5) * scale_x
        ys = (contour[:, 0] - 1.0 + 0.5) * scale_y
        ring = np.column_stack([xs, ys])
        if len(ring) >= 3:
            rings.append(ring)
    return rings


def link_attributes(instances: list[Instance],
                    det_bboxes: dict[int, tuple[float, float, float, float]],
                    regions: list[AttributeRegion],
                    attr_vocab: AttributeVocab,
                    iou_threshold: float = DEFAULT_ATTR_IOU) -> int:
    """Add each region's attributes to every instance whose detected bbox
    has IoU > threshold with the region. Returns the count of skipped
    unknown attribute names."""
    skipped = 0
    for region in regions:
        ids = set()
        for name in region.attributes:
            if name in attr_vocab:
                ids.add(attr_vocab.resolve(name).id)
            else:
                skipped += 1
        if not ids:
            continue
        for inst in instances:
            bbox = det_bboxes.get(inst.id)
            if bbox is None:
                continue
            if rect_iou(bbox, region.bbox) > iou_threshold:
                inst.attributes |= ids
    return skipped


def parse_regions(raw: bytes | str) -> list[AttributeRegion]:
    data = json.loads(raw)
    return [AttributeRegion(bbox=tuple(float(v) for v in rec["bbox"]),
                            attributes=frozenset(rec["attributes"]))
            for rec in data]


def ingest_pipeline(raw: bytes | str, vocab: ClassVocab,
                    attr_vocab: AttributeVocab,
                    alias_map: dict[str, str] | None = None,
                    regions: list[AttributeRegion] | None = None,
                    score_threshold: float = DEFAULT_SCORE_THRESHOLD,
                    nms_iou: float = DEFAULT_NMS_IOU,
                    attr_iou: float = DEFAULT_ATTR_IOU) -> SceneGraph:
    dets, (width, height) = parse_detections(raw)
    unknown = [d.class_name for d in dets
               if (alias_map or {}).get(d.class_name, d.class_name) not in vocab]
    if unknown:
        raise IngestError(f"unknown classes in detections: {sorted(set(unknown))}")
    dets = filter_and_merge(dets, alias_map or {}, vocab, score_threshold)
    dets = nms(dets, nms_iou)

    instances, det_bboxes = [], {}
    next_id = 1
    for d in dets:
        h, w = d.mask.shape
        rings = polygonize(d.mask, scale_x=width / w, scale_y=height / h)
        if not rings:
            continue
        instances.append(Instance(
            id=next_id,
            class_id=vocab.resolve(d.class_name).id,
            score=d.score,
            mask=InstanceMask(rings),
        ))
        det_bboxes[next_id] = d.bbox
        next_id += 1

    scene = build_hierarchy(instances, width, height)
    if regions:
        link_attributes(instances, det_bboxes, regions, attr_vocab, attr_iou)
    return scene
