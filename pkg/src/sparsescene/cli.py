"""Batch driver: ingestion, rasterization, verification, distribution
fitting, style sampling and interpolation, plus serving the HTTP API.

Thresholds default to the reference pipeline values (score 0.2, NMS IoU
0.7, attribute IoU 0.5, containment 0.7) and are echoed in run headers.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import numpy as np

from . import raster as raster_mod
from .ingest import (DEFAULT_ATTR_IOU, DEFAULT_NMS_IOU,
                     DEFAULT_SCORE_THRESHOLD, IngestError, ingest_pipeline,
                     parse_regions)
from .kernels.attention import attention_forward
from .kernels.encoder import load_token_embeddings
from .kernels.toy import ToyWeights
from .scene import CONTAINMENT_RATIO, SceneGraph, resolve_roles
from .stylekit import (StyleDistribution, StyleError, fit_distribution,
                       interpolate_styles, sample_styles)
from .vocab import AttributeVocab, ClassVocab


def _load_vocabs(vocab_path: str, attrs_path: str):
    cv = ClassVocab.from_json(Path(vocab_path).read_text())
    av = AttributeVocab.from_json(Path(attrs_path).read_text())
    return cv, av


def _echo_header(**params):
    click.echo("# " + json.dumps(params, sort_keys=True), err=True)


@click.group()
def main():
    """Sparse-scene batch tools."""


@main.command()
@click.argument("detections", type=click.Path(exists=True))
@click.option("--vocab", required=True, type=click.Path(exists=True),
              help="Class vocabulary JSON.")
@click.option("--attrs", required=True, type=click.Path(exists=True),
              help="Attribute vocabulary JSON.")
@click.option("--aliases", type=click.Path(exists=True),
              help="Alias map JSON {alias: canonical}.")
@click.option("--regions", type=click.Path(exists=True),
              help="Attribute regions JSON.")
@click.option("--out", "-o", required=True, type=click.Path())
@click.option("--score-threshold", default=DEFAULT_SCORE_THRESHOLD,
              show_default=True, help="Drop detections scoring below this.")
@click.option("--nms-iou", default=DEFAULT_NMS_IOU, show_default=True,
              help="Class-agnostic NMS mask-IoU threshold.")
@click.option("--attr-iou", default=DEFAULT_ATTR_IOU, show_default=True,
              help="Bbox IoU threshold for attribute linking.")
def ingest(detections, vocab, attrs, aliases, regions, out,
           score_threshold, nms_iou, attr_iou):
    """Convert detector output DETECTIONS into a scene JSON."""
    _echo_header(cmd="ingest", score_threshold=score_threshold,
                 nms_iou=nms_iou, attr_iou=attr_iou,
                 containment=CONTAINMENT_RATIO)
    cv, av = _load_vocabs(vocab, attrs)
    alias_map = json.loads(Path(aliases).read_text()) if aliases else {}
    region_list = parse_regions(Path(regions).read_text()) if regions else None
    try:
        scene = ingest_pipeline(Path(detections).read_bytes(), cv, av,
                                alias_map=alias_map, regions=region_list,
                                score_threshold=score_threshold,
                                nms_iou=nms_iou, attr_iou=attr_iou)
    except IngestError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(1)
    Path(out).write_text(json.dumps(scene.to_json(cv, av), sort_keys=True,
                                    indent=2) + "\n")
    click.echo(f"wrote {out} ({len(scene.instances)} instances)")


@main.command("raster")
@click.argument("scene_json", type=click.Path(exists=True))
@click.option("--vocab", required=True, type=click.Path(exists=True))
@click.option("--attrs", required=True, type=click.Path(exists=True))
@click.option("--out", "-o", required=True, type=click.Path())
@click.option("--res", default=None, type=int,
              help="Output resolution (square); defaults to canvas size.")
@click.option("--kind", default="class", show_default=True,
              type=click.Choice(["class", "instance", "bg", "fg"]))
@click.option("--fmt", default="png", show_default=True,
              type=click.Choice(["png", "raw"]))
def raster_cmd(scene_json, vocab, attrs, out, res, kind, fmt):
    """Rasterize a scene JSON into a label-map PNG or raw dump."""
    _echo_header(cmd="raster", kind=kind, res=res, fmt=fmt)
    cv, av = _load_vocabs(vocab, attrs)
    scene = SceneGraph.from_json(Path(scene_json).read_text(), cv, av)
    maps = raster_mod.rasterize(scene, res, res)
    if kind in ("bg", "fg"):
        roles = resolve_roles(scene, cv)
        bg, fg = raster_mod.split_bg_fg(maps, roles)
        maps = bg if kind == "bg" else fg
    plane = maps.instance_map if kind == "instance" else maps.class_map
    if fmt == "raw":
        payload = raster_mod.export_raw(raster_mod.LabelMaps(
            class_map=plane, instance_map=maps.instance_map))
    else:
        payload = raster_mod.export_png(plane)
    Path(out).write_bytes(payload)
    click.echo(f"wrote {out}")


@main.command()
@click.option("--suite", default="all", show_default=True,
              type=click.Choice(["grads", "attention", "blend", "raster", "all"]))
@click.option("--weights", type=click.Path(exists=True),
              help="Optional checkpoint; grads suite perturbation source.")
@click.option("--json-out", type=click.Path(), help="Write the report here.")
def verify(suite, weights, json_out):
    """Run the oracle suites and print a machine-readable report."""
    from .verify import run_suites
    _echo_header(cmd="verify", suite=suite)
    names = None if suite == "all" else [suite]
    kwargs = {}
    if weights:
        from .kernels.checkpoint import load_tensors
        tensors = load_tensors(Path(weights).read_bytes())
        fault = float(tensors.get("grad_fault", np.zeros(1))[0]) \
            if "grad_fault" in tensors else 0.0
        kwargs["grads"] = {"weights_perturbation": fault}
    report = run_suites(names, **kwargs)
    text = json.dumps(report, sort_keys=True, indent=2)
    if json_out:
        Path(json_out).write_text(text + "\n")
    click.echo(text)
    sys.exit(0 if report["passed"] else 1)


@main.command("fit-dist")
@click.argument("scene_jsons", nargs=-1, required=True,
                type=click.Path(exists=True))
@click.option("--vocab", required=True, type=click.Path(exists=True))
@click.option("--attrs", required=True, type=click.Path(exists=True))
@click.option("--out", "-o", required=True, type=click.Path())
def fit_dist(scene_jsons, vocab, attrs, out):
    """Fit per-class attribute-set distributions over scene files."""
    _echo_header(cmd="fit-dist", corpus=len(scene_jsons))
    cv, av = _load_vocabs(vocab, attrs)
    scenes = [SceneGraph.from_json(Path(p).read_text(), cv, av)
              for p in scene_jsons]
    dist = fit_distribution(scenes)
    Path(out).write_text(json.dumps(dist.to_json(cv, av), sort_keys=True,
                                    indent=2) + "\n")
    click.echo(f"wrote {out}")


@main.command()
@click.argument("scene_json", type=click.Path(exists=True))
@click.option("--vocab", required=True, type=click.Path(exists=True))
@click.option("--attrs", required=True, type=click.Path(exists=True))
@click.option("--dist", required=True, type=click.Path(exists=True))
@click.option("--strategy", default="coherent_bg_random_fg", show_default=True,
              type=click.Choice(["coherent_bg_random_fg", "all_random",
                                 "all_coherent"]))
@click.option("--seed", default=0, show_default=True)
@click.option("--out", "-o", required=True, type=click.Path())
def sample(scene_json, vocab, attrs, dist, strategy, seed, out):
    """Randomize instance styles from a fitted distribution."""
    _echo_header(cmd="sample", strategy=strategy, seed=seed)
    cv, av = _load_vocabs(vocab, attrs)
    scene = SceneGraph.from_json(Path(scene_json).read_text(), cv, av)
    d = StyleDistribution.from_json(json.loads(Path(dist).read_text()), cv, av)
    try:
        report = sample_styles(scene, d, cv, strategy=strategy, seed=seed)
    except StyleError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(1)
    Path(out).write_text(json.dumps(scene.to_json(cv, av), sort_keys=True,
                                    indent=2) + "\n")
    click.echo(json.dumps(report, sort_keys=True))


@main.command()
@click.option("--from", "from_path", required=True, type=click.Path(exists=True),
              help="Token-embedding file A.")
@click.option("--to", "to_path", required=True, type=click.Path(exists=True),
              help="Token-embedding file B.")
@click.option("--steps", default=2, show_default=True)
@click.option("--weights", type=click.Path(exists=True),
              help="Toy-model checkpoint; fresh seeded weights if omitted.")
@click.option("--num-classes", default=5, show_default=True)
@click.option("--num-attrs", default=8, show_default=True)
@click.option("--out", "-o", required=True, type=click.Path(),
              help="Output checkpoint holding one ctx table per step.")
def interpolate(from_path, to_path, steps, weights, num_classes,
                num_attrs, out):
    """Slerp contextualized class embeddings between two captions."""
    _echo_header(cmd="interpolate", steps=steps)
    tok_a, _ = load_token_embeddings(Path(from_path).read_bytes())
    tok_b, _ = load_token_embeddings(Path(to_path).read_bytes())
    if weights:
        w = ToyWeights.load(Path(weights).read_bytes())
    else:
        w = ToyWeights.init(num_classes, num_attrs, seed=0,
                            d_lm=tok_a.shape[1])
    ctx_a, _, _ = attention_forward(tok_a, w.attention)
    ctx_b, _, _ = attention_forward(tok_b, w.attention)
    try:
        frames = interpolate_styles(ctx_a, ctx_b, steps)
    except StyleError as e:
        click.echo(f"error: {e}", err=True)
        sys.exit(1)
    from .kernels.checkpoint import save_tensors
    Path(out).write_bytes(save_tensors(
        {f"ctx_{k:03d}": f for k, f in enumerate(frames)}))
    click.echo(f"wrote {out} ({steps} frames)")


@main.command()
@click.option("--data-dir", required=True, type=click.Path())
@click.option("--port", default=8000, show_default=True)
@click.option("--vocab", required=True, type=click.Path(exists=True))
@click.option("--attrs", required=True, type=click.Path(exists=True))
@click.option("--weights", type=click.Path(exists=True))
@click.option("--dist", type=click.Path(exists=True))
@click.option("--tokens-dir", type=click.Path(exists=True))
@click.option("--max-res", default=512, show_default=True)
@click.option("--num-attrs-embed", default=64, show_default=True,
              help="Attribute-embedding rows when initializing fresh weights.")
def serve(data_dir, port, vocab, attrs, weights, dist, tokens_dir, max_res,
          num_attrs_embed):
    """Run the HTTP API (base path /api/v1)."""
    import uvicorn
    from .service import ServiceConfig, create_app
    cv, av = _load_vocabs(vocab, attrs)
    w = (ToyWeights.load(Path(weights).read_bytes()) if weights
         else ToyWeights.init(len(cv), max(len(av), num_attrs_embed), seed=0))
    d = (StyleDistribution.from_json(json.loads(Path(dist).read_text()), cv, av)
         if dist else None)
    cfg = ServiceConfig(data_dir=Path(data_dir), class_vocab=cv,
                        attr_vocab=av, weights=w, dist=d,
                        tokens_dir=Path(tokens_dir) if tokens_dir else None,
                        max_res=max_res)
    uvicorn.run(create_app(cfg), host="127.0.0.1", port=port)


if __name__ == "__main__":
    main()
