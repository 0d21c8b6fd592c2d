"""Per-class empirical attribute distributions, style randomization, and
spherical interpolation of embedding tables.

Distributions are over exact attribute sets: the empty set is a valid
outcome and a compound set like {blue, red} is a single outcome distinct
from {blue} or {red}.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np

from .scene import SceneGraph
from .vocab import AttributeVocab, ClassVocab, FOREGROUND
from .scene import resolve_roles

STRATEGIES = ("coherent_bg_random_fg", "all_random", "all_coherent")

SLERP_PARALLEL_EPS = 1e-6


class StyleError(Exception):
    pass


@dataclass
class StyleDistribution:
    """per class id: list of (attribute frozenset, probability)."""
    per_class: dict[int, list[tuple[frozenset[int], float]]] = field(
        default_factory=dict)

    def outcomes(self, class_id: int):
        return self.per_class.get(class_id)

    def to_json(self, class_vocab: ClassVocab, attr_vocab: AttributeVocab) -> dict:
        return {
            class_vocab.by_id[cid].name: [
                {"attrs": sorted(attr_vocab.by_id[a].name for a in attrs),
                 "p": p}
                for attrs, p in outcomes
            ]
            for cid, outcomes in sorted(self.per_class.items())
        }

    @classmethod
    def from_json(cls, data, class_vocab: ClassVocab,
                  attr_vocab: AttributeVocab) -> "StyleDistribution":
        per_class = {}
        for cname, outcomes in data.items():
            cid = class_vocab.resolve(cname).id
            per_class[cid] = [
                (frozenset(attr_vocab.resolve(n).id for n in rec["attrs"]),
                 float(rec["p"]))
                for rec in outcomes
            ]
        return cls(per_class)


def fit_distribution(scenes: list[SceneGraph]) -> StyleDistribution:
    """Relative frequency of exact attribute sets per class over all
    instances in the corpus."""
    if not scenes:
        raise StyleError("empty corpus")
    counts: dict[int, Counter] = defaultdict(Counter)
    for scene in scenes:
        for inst in scene.instances.values():
            counts[inst.class_id][frozenset(inst.attributes)] += 1
    per_class = {}
    for cid, counter in counts.items():
        total = sum(counter.values())
        # deterministic outcome order: by sorted attr ids
        outcomes = sorted(counter.items(), key=lambda kv: sorted(kv[0]))
        per_class[cid] = [(attrs, n / total) for attrs, n in outcomes]
    return StyleDistribution(per_class)


def _draw(dist: StyleDistribution, class_id: int,
          rng: np.random.Generator, report: dict) -> set[int]:
    outcomes = dist.outcomes(class_id)
    if not outcomes:
        report["missing_classes"] = report.get("missing_classes", 0) + 1
        return set()
    probs = np.array([p for _, p in outcomes])
    idx = rng.choice(len(outcomes), p=probs / probs.sum())
    return set(outcomes[idx][0])


def sample_styles(scene: SceneGraph, dist: StyleDistribution,
                  class_vocab: ClassVocab,
                  strategy: str = "coherent_bg_random_fg",
                  seed: int = 0) -> dict:
    """Assign sampled attribute sets to every instance in place.

    coherent_bg_random_fg: one shared draw per background class;
    foreground subtree roots draw independently, and within a subtree all
    descendants of one class share a single draw. Returns a report with
    the seed and any classes missing from the distribution.
    """
    if strategy not in STRATEGIES:
        raise StyleError(f"unknown strategy {strategy!r}")
    rng = np.random.default_rng(seed)
    report = {"seed": seed, "strategy": strategy}
    roles = resolve_roles(scene, class_vocab)
    ordered = sorted(scene.instances.values(), key=lambda i: i.id)

    if strategy == "all_random":
        for inst in ordered:
            inst.attributes = _draw(dist, inst.class_id, rng, report)
        return report

    if strategy == "all_coherent":
        shared: dict[int, set[int]] = {}
        for inst in ordered:
            if inst.class_id not in shared:
                shared[inst.class_id] = _draw(dist, inst.class_id, rng, report)
            inst.attributes = set(shared[inst.class_id])
        return report

    # coherent background, randomized foreground
    bg_shared: dict[int, set[int]] = {}
    fg_roots = [i for i in ordered
                if roles[i.id] == FOREGROUND
                and (i.parent is None or roles[i.parent] != FOREGROUND)]
    fg_subtree_ids = set()
    for root in fg_roots:
        fg_subtree_ids.add(root.id)
        fg_subtree_ids.update(scene.descendants(root.id))

    for inst in ordered:
        if inst.id in fg_subtree_ids:
            continue
        if inst.class_id not in bg_shared:
            bg_shared[inst.class_id] = _draw(dist, inst.class_id, rng, report)
        inst.attributes = set(bg_shared[inst.class_id])

    for root in fg_roots:
        root.attributes = _draw(dist, root.class_id, rng, report)
        child_shared: dict[int, set[int]] = {}
        for did in sorted(scene.descendants(root.id)):
            child = scene.instances[did]
            if child.class_id not in child_shared:
                child_shared[child.class_id] = _draw(dist, child.class_id,
                                                     rng, report)
            child.attributes = set(child_shared[child.class_id])
    return report


def slerp(a: np.ndarray, b: np.ndarray, t: float) -> np.ndarray:
    """Great-circle interpolation; linear fallback for near-parallel
    inputs, error for anti-parallel ones (undefined great circle)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise StyleError("slerp of a zero vector")
    cos = float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))
    omega = math.acos(cos)
    if omega < SLERP_PARALLEL_EPS:
        return (1.0 - t) * a + t * b
    if math.pi - omega < SLERP_PARALLEL_EPS:
        raise StyleError("slerp undefined for anti-parallel vectors")
    s = math.sin(omega)
    return (math.sin((1.0 - t) * omega) / s) * a + (math.sin(t * omega) / s) * b


def interpolate_styles(table_a: np.ndarray, table_b: np.ndarray,
                       steps: int) -> list[np.ndarray]:
    """Row-wise slerp between two embedding tables at t = k/(steps-1)."""
    if steps < 2:
        raise StyleError("need at least 2 interpolation steps")
    if table_a.shape != table_b.shape:
        raise StyleError("table shape mismatch")
    a2 = np.atleast_2d(table_a)
    b2 = np.atleast_2d(table_b)
    frames = []
    for k in range(steps):
        t = k / (steps - 1)
        rows = np.stack([slerp(ra, rb, t) for ra, rb in zip(a2, b2)])
        frames.append(rows.reshape(table_a.shape))
    return frames
