import json

import numpy as np
import pytest
from click.testing import CliRunner

from sparsescene.cli import main
from sparsescene.ingest import encode_rle
from sparsescene.kernels.checkpoint import load_tensors, save_tensors
from sparsescene.kernels.encoder import (pseudo_encode_sentence,
                                         save_token_embeddings)
from sparsescene.raster import export_png, import_raw, rasterize
from sparsescene.scene import SceneGraph, build_hierarchy

from conftest import rect_instance
from test_ingest import det, detections_json, square_mask


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def detections_file(tmp_path):
    car = square_mask(64, 64, 8, 8, 40, 32)
    light = square_mask(64, 64, 10, 24, 16, 30)
    tree = square_mask(64, 64, 48, 8, 60, 40)
    blob = detections_json([det("car", 0.9, car, 0),
                            det("light", 0.8, light, 1),
                            det("tree", 0.7, tree, 2)], 64, 64)
    path = tmp_path / "detections.json"
    path.write_bytes(blob)
    return path


def scene_file(tmp_path, class_vocab, attr_vocab, name="scene.json"):
    car = rect_instance(1, 1, 10, 10, 60, 40, attrs={0})
    window = rect_instance(2, 2, 20, 15, 35, 30)
    tree = rect_instance(3, 4, 70, 10, 95, 50, attrs={4})
    scene = build_hierarchy([car, window, tree], 100, 100)
    path = tmp_path / name
    path.write_text(json.dumps(scene.to_json(class_vocab, attr_vocab)))
    return path


class TestIngest:
    def test_writes_scene_json(self, runner, detections_file, vocab_files,
                               tmp_path, class_vocab, attr_vocab):
        vocab, attrs = vocab_files
        out = tmp_path / "scene.json"
        res = runner.invoke(main, ["ingest", str(detections_file),
                                   "--vocab", str(vocab),
                                   "--attrs", str(attrs),
                                   "-o", str(out)])
        assert res.exit_code == 0, res.output
        scene = SceneGraph.from_json(out.read_text(), class_vocab, attr_vocab)
        assert len(scene.instances) == 3
        # the headlight (alias "light") nests inside the car
        light = [i for i in scene.instances.values() if i.class_id == 3][0]
        assert light.parent is not None

    def test_deterministic_output(self, runner, detections_file, vocab_files,
                                  tmp_path):
        vocab, attrs = vocab_files
        outs = []
        for name in ("a.json", "b.json"):
            out = tmp_path / name
            res = runner.invoke(main, ["ingest", str(detections_file),
                                       "--vocab", str(vocab),
                                       "--attrs", str(attrs),
                                       "-o", str(out)])
            assert res.exit_code == 0
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]

    def test_header_echoes_thresholds(self, runner, detections_file,
                                      vocab_files, tmp_path):
        vocab, attrs = vocab_files
        res = runner.invoke(main, ["ingest", str(detections_file),
                                   "--vocab", str(vocab),
                                   "--attrs", str(attrs),
                                   "-o", str(tmp_path / "o.json")])
        header = json.loads(res.stderr.splitlines()[0].lstrip("# "))
        assert header["score_threshold"] == 0.2
        assert header["nms_iou"] == 0.7
        assert header["attr_iou"] == 0.5
        assert header["containment"] == 0.7

    def test_unknown_class_exits_nonzero(self, runner, vocab_files, tmp_path):
        vocab, attrs = vocab_files
        blob = detections_json([det("dragon", 0.9,
                                    square_mask(16, 16, 0, 0, 8, 8))], 16, 16)
        path = tmp_path / "bad.json"
        path.write_bytes(blob)
        res = runner.invoke(main, ["ingest", str(path),
                                   "--vocab", str(vocab),
                                   "--attrs", str(attrs),
                                   "-o", str(tmp_path / "o.json")])
        assert res.exit_code == 1
        assert "error" in res.stderr

    def test_malformed_detections_exit_code(self, runner, vocab_files,
                                            tmp_path):
        vocab, attrs = vocab_files
        path = tmp_path / "broken.json"
        path.write_bytes(b"{nope")
        res = runner.invoke(main, ["ingest", str(path),
                                   "--vocab", str(vocab),
                                   "--attrs", str(attrs),
                                   "-o", str(tmp_path / "o.json")])
        assert res.exit_code == 1


class TestRaster:
    def test_png_matches_library(self, runner, vocab_files, tmp_path,
                                 class_vocab, attr_vocab):
        vocab, attrs = vocab_files
        scene_path = scene_file(tmp_path, class_vocab, attr_vocab)
        out = tmp_path / "class.png"
        res = runner.invoke(main, ["raster", str(scene_path),
                                   "--vocab", str(vocab),
                                   "--attrs", str(attrs),
                                   "-o", str(out)])
        assert res.exit_code == 0, res.output
        scene = SceneGraph.from_json(scene_path.read_text(), class_vocab,
                                     attr_vocab)
        assert out.read_bytes() == export_png(rasterize(scene).class_map)

    def test_raw_at_resolution(self, runner, vocab_files, tmp_path,
                               class_vocab, attr_vocab):
        vocab, attrs = vocab_files
        scene_path = scene_file(tmp_path, class_vocab, attr_vocab)
        out = tmp_path / "class.raw"
        res = runner.invoke(main, ["raster", str(scene_path),
                                   "--vocab", str(vocab),
                                   "--attrs", str(attrs),
                                   "--res", "32", "--fmt", "raw",
                                   "-o", str(out)])
        assert res.exit_code == 0
        maps = import_raw(out.read_bytes())
        assert maps.class_map.shape == (32, 32)

    def test_bg_fg_partition(self, runner, vocab_files, tmp_path,
                             class_vocab, attr_vocab):
        vocab, attrs = vocab_files
        scene_path = scene_file(tmp_path, class_vocab, attr_vocab)
        planes = {}
        for kind in ("bg", "fg"):
            out = tmp_path / f"{kind}.raw"
            res = runner.invoke(main, ["raster", str(scene_path),
                                       "--vocab", str(vocab),
                                       "--attrs", str(attrs),
                                       "--kind", kind, "--fmt", "raw",
                                       "-o", str(out)])
            assert res.exit_code == 0
            planes[kind] = import_raw(out.read_bytes()).class_map
        assert not ((planes["bg"] != 0) & (planes["fg"] != 0)).any()


class TestVerify:
    def test_all_suites_pass(self, runner, tmp_path):
        out = tmp_path / "report.json"
        res = runner.invoke(main, ["verify", "--suite", "all",
                                   "--json-out", str(out)])
        assert res.exit_code == 0, res.output
        report = json.loads(out.read_text())
        assert report["passed"] is True
        assert {s["suite"] for s in report["suites"]} == {
            "grads", "attention", "blend", "raster"}
        assert all(s["passed"] for s in report["suites"])

    def test_injected_gradient_fault_fails(self, runner, tmp_path):
        ckpt = tmp_path / "fault.wts"
        ckpt.write_bytes(save_tensors({"grad_fault": np.array([0.05])}))
        res = runner.invoke(main, ["verify", "--suite", "grads",
                                   "--weights", str(ckpt)])
        assert res.exit_code == 1

    def test_single_suite_report(self, runner):
        res = runner.invoke(main, ["verify", "--suite", "blend"])
        assert res.exit_code == 0
        body = "\n".join(line for line in res.output.splitlines()
                         if not line.startswith("#"))
        report = json.loads(body)
        assert [s["suite"] for s in report["suites"]] == ["blend"]


class TestDistAndSample:
    def test_fit_dist_golden(self, runner, vocab_files, tmp_path,
                             class_vocab, attr_vocab):
        vocab, attrs = vocab_files
        scene_path = scene_file(tmp_path, class_vocab, attr_vocab)
        out = tmp_path / "dist.json"
        res = runner.invoke(main, ["fit-dist", str(scene_path),
                                   "--vocab", str(vocab),
                                   "--attrs", str(attrs),
                                   "-o", str(out)])
        assert res.exit_code == 0, res.output
        dist = json.loads(out.read_text())
        assert dist == {"car": [{"attrs": ["red"], "p": 1.0}],
                        "window": [{"attrs": [], "p": 1.0}],
                        "tree": [{"attrs": ["leafless"], "p": 1.0}]}

    def test_sample_seed_reproducible(self, runner, vocab_files, tmp_path,
                                      class_vocab, attr_vocab):
        vocab, attrs = vocab_files
        scene_path = scene_file(tmp_path, class_vocab, attr_vocab)
        dist = tmp_path / "dist.json"
        dist.write_text(json.dumps({
            "car": [{"attrs": ["red"], "p": 0.5},
                    {"attrs": ["blue"], "p": 0.5}],
            "window": [{"attrs": [], "p": 1.0}],
            "tree": [{"attrs": ["leafless"], "p": 0.5},
                     {"attrs": [], "p": 0.5}]}))
        outs = []
        for name in ("s1.json", "s2.json"):
            out = tmp_path / name
            res = runner.invoke(main, ["sample", str(scene_path),
                                       "--vocab", str(vocab),
                                       "--attrs", str(attrs),
                                       "--dist", str(dist),
                                       "--seed", "11", "-o", str(out)])
            assert res.exit_code == 0, res.output
            outs.append(out.read_bytes())
        assert outs[0] == outs[1]
        report = json.loads(res.output.strip().splitlines()[-1])
        assert report["seed"] == 11


class TestInterpolate:
    def test_endpoint_frames_match_direct_attention(self, runner, tmp_path):
        from sparsescene.kernels.attention import attention_forward
        from sparsescene.kernels.toy import ToyWeights
        a = pseudo_encode_sentence("a red car", d_lm=32)
        b = pseudo_encode_sentence("a blue bus", d_lm=32)
        pa, pb = tmp_path / "a.tok", tmp_path / "b.tok"
        pa.write_bytes(save_token_embeddings(a))
        pb.write_bytes(save_token_embeddings(b))
        out = tmp_path / "frames.wts"
        res = runner.invoke(main, ["interpolate", "--from", str(pa),
                                   "--to", str(pb), "--steps", "3",
                                   "-o", str(out)])
        assert res.exit_code == 0, res.output
        frames = load_tensors(out.read_bytes())
        assert sorted(frames) == ["ctx_000", "ctx_001", "ctx_002"]
        w = ToyWeights.init(5, 8, seed=0, d_lm=32)
        ctx_a, _, _ = attention_forward(a, w.attention)
        ctx_b, _, _ = attention_forward(b, w.attention)
        assert np.abs(frames["ctx_000"] - ctx_a).max() <= 1e-12
        assert np.abs(frames["ctx_002"] - ctx_b).max() <= 1e-12

    def test_too_few_steps_errors(self, runner, tmp_path):
        a = pseudo_encode_sentence("x", d_lm=8)
        pa = tmp_path / "a.tok"
        pa.write_bytes(save_token_embeddings(a))
        res = runner.invoke(main, ["interpolate", "--from", str(pa),
                                   "--to", str(pa), "--steps", "1",
                                   "-o", str(tmp_path / "o.wts")])
        assert res.exit_code == 1
