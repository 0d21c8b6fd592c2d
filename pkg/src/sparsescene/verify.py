"""Self-check suites: each runs an independent oracle against the
production path and reports max errors. Shared by the CLI `verify`
subcommand and the test suite."""

from __future__ import annotations

import time

import numpy as np

from .compositor import blend, blend_backward, blend_multi, blend_multi_backward
from .kernels.attention import AttentionWeights, attention_backward, attention_forward
from .kernels.blocks import (CondWeights, s_avg_block_backward,
                             s_avg_block_forward, s_block_backward,
                             s_block_forward)
from .raster import rasterize
from .scene import Instance, InstanceMask, build_hierarchy

FD_STEP = 1e-6
FD_TOL = 1e-4


def rel_err(analytic: np.ndarray, numeric: np.ndarray) -> float:
    denom = max(float(np.abs(numeric).max()), 1e-12)
    return float(np.abs(analytic - numeric).max()) / denom


def fd_grad(f, x: np.ndarray, step: float = FD_STEP) -> np.ndarray:
    """Central finite differences of scalar f at x, elementwise."""
    g = np.zeros_like(x, dtype=np.float64)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        xp, xm = x.copy(), x.copy()
        xp[i] += step
        xm[i] -= step
        g[i] = (f(xp) - f(xm)) / (2 * step)
    return g


def _suite_result(name: str, checks: dict[str, float], tol: float) -> dict:
    return {
        "suite": name,
        "tolerance": tol,
        "max_errors": checks,
        "passed": all(v <= tol for v in checks.values()),
    }


def suite_grads(trials: int = 5, seed: int = 0,
                weights_perturbation: float = 0.0) -> dict:
    """Finite-difference checks for every differentiable block family.

    `weights_perturbation` injects a fault into the analytic gradients
    (used to prove the suite can fail)."""
    rng = np.random.default_rng(seed)
    checks: dict[str, float] = {}
    t0 = time.time()
    for trial in range(trials):
        x = rng.standard_normal((2, 3, 4, 4))
        cond = rng.standard_normal((4, 4, 3))
        w = CondWeights.init(3, 5, 3, rng)
        r = rng.standard_normal(x.shape)
        _, cache = s_block_forward(x, cond, w)
        dx, dcond, _ = s_block_backward(cache, r)
        dx = dx + weights_perturbation
        checks[f"s_block.dx[{trial}]"] = rel_err(
            dx, fd_grad(lambda v: float((s_block_forward(v, cond, w)[0] * r).sum()), x))
        checks[f"s_block.dcond[{trial}]"] = rel_err(
            dcond, fd_grad(lambda v: float((s_block_forward(x, v, w)[0] * r).sum()), cond))

        cond_full = rng.standard_normal((4, 4, 3))
        w_avg = CondWeights.init(3, 5, 3, rng)
        _, cache = s_avg_block_forward(x, cond, cond_full, w, w_avg)
        dx2, _, dcf, _, _ = s_avg_block_backward(cache, r)
        checks[f"s_avg.dx[{trial}]"] = rel_err(
            dx2, fd_grad(lambda v: float(
                (s_avg_block_forward(v, cond, cond_full, w, w_avg)[0] * r).sum()), x))
        checks[f"s_avg.dcond_full[{trial}]"] = rel_err(
            dcf, fd_grad(lambda v: float(
                (s_avg_block_forward(x, cond, v, w, w_avg)[0] * r).sum()), cond_full))

        tok = rng.standard_normal((5, 8))
        aw = AttentionWeights.init(3, 8, 6, rng)
        ctx, _, cache = attention_forward(tok, aw)
        ra = rng.standard_normal(ctx.shape)
        dtok, _ = attention_backward(cache, ra)
        checks[f"attention.dtok[{trial}]"] = rel_err(
            dtok, fd_grad(lambda v: float((attention_forward(v, aw)[0] * ra).sum()), tok))

        xb = rng.standard_normal((3, 3, 3))
        xf = rng.standard_normal((3, 3, 3))
        al = rng.standard_normal((1, 3, 3))
        _, _, cache = blend(xb, xf, al)
        rb = rng.standard_normal(xb.shape)
        _, _, dl = blend_backward(cache, rb)
        checks[f"blend.dlogit[{trial}]"] = rel_err(
            dl, fd_grad(lambda v: float((blend(xb, xf, v)[0] * rb).sum()), al))

        xfs = [rng.standard_normal((3, 3, 3)) for _ in range(3)]
        als = [rng.standard_normal((1, 3, 3)) for _ in range(3)]
        _, cache = blend_multi(xb, xfs, als)
        _, _, dls = blend_multi_backward(cache, rb)

        def multi_loss(v):
            trial_als = [als[0], v, als[2]]
            return float((blend_multi(xb, xfs, trial_als)[0] * rb).sum())
        checks[f"blend_multi.dlogit[{trial}]"] = rel_err(dls[1], fd_grad(multi_loss, als[1]))

    out = _suite_result("grads", checks, FD_TOL)
    out["runtime_s"] = time.time() - t0
    return out


def suite_attention(seed: int = 0) -> dict:
    """Naive three-loop oracle equality and softmax row sums."""
    rng = np.random.default_rng(seed)
    checks = {}
    for heads in (6, 12):
        c, n, d_lm, h = 5, 7, 16, 64
        w = AttentionWeights.init(c, d_lm, heads, rng)
        tok = rng.standard_normal((n, d_lm))
        ctx, attn, _ = attention_forward(tok, w)

        ctx_oracle = np.zeros_like(ctx)
        attn_oracle = np.zeros_like(attn)
        for ci in range(c + 1):
            concat = []
            for e in range(heads):
                scores = np.zeros(n)
                for ti in range(n):
                    k = tok[ti] @ w.w_k[e]
                    scores[ti] = float(w.queries[ci, e] @ k) / np.sqrt(h)
                ex = np.exp(scores - scores.max())
                a = ex / ex.sum()
                attn_oracle[ci, e] = a
                head = np.zeros(h)
                for ti in range(n):
                    head += a[ti] * (tok[ti] @ w.w_v[e])
                concat.append(head)
            ctx_oracle[ci] = np.concatenate(concat) @ w.w_o
        checks[f"ctx_vs_oracle[h{heads}]"] = float(np.abs(ctx - ctx_oracle).max())
        checks[f"weights_vs_oracle[h{heads}]"] = float(np.abs(attn - attn_oracle).max())
        checks[f"row_sums[h{heads}]"] = float(np.abs(attn.sum(axis=-1) - 1.0).max())
    return _suite_result("attention", checks, 1e-12)


def suite_blend(seed: int = 0) -> dict:
    rng = np.random.default_rng(seed)
    checks = {}
    xb = rng.standard_normal((3, 4, 4))
    xf = rng.standard_normal((3, 4, 4))
    al = rng.standard_normal((1, 4, 4))
    single, _, _ = blend(xb, xf, al)
    multi, _ = blend_multi(xb, [xf], [al])
    checks["n1_equals_blend"] = float(np.abs(single - multi).max())

    xfs = [rng.standard_normal((3, 4, 4)) for _ in range(3)]
    als = [rng.standard_normal((1, 4, 4)) for _ in range(3)]
    got, cache = blend_multi(xb, xfs, als)

    oracle = np.zeros_like(got)
    for kk in range(3):
        for j in range(4):
            for i in range(4):
                logits = [float(a[0, j, i]) for a in als]
                mx = max(logits)
                es = [np.exp(v - mx) for v in logits]
                ws = [e / sum(es) for e in es]
                xfg = sum(ws[o] * float(xfs[o][kk, j, i]) for o in range(3))
                sig = [1.0 / (1.0 + np.exp(-v)) for v in logits]
                alpha = sum(sig[o] * ws[o] for o in range(3))
                oracle[kk, j, i] = float(xb[kk, j, i]) * (1 - alpha) + xfg * alpha
    checks["n3_vs_scalar_oracle"] = float(np.abs(got - oracle).max())
    checks["weights_sum_to_1"] = float(np.abs(cache["weights"].sum(axis=0) - 1.0).max())
    return _suite_result("blend", checks, 1e-12)


def random_scene(rng: np.random.Generator, size: int = 64,
                 n_instances: int = 12, n_classes: int = 5):
    insts = []
    for i in range(1, n_instances + 1):
        cx, cy = rng.uniform(4, size - 4, 2)
        radius = rng.uniform(2, size / 3)
        k = int(rng.integers(3, 9))
        ang = np.sort(rng.uniform(0, 2 * np.pi, k))
        pts = np.column_stack([cx + radius * np.cos(ang),
                               cy + radius * np.sin(ang)])
        insts.append(Instance(id=i, class_id=int(rng.integers(1, n_classes + 1)),
                              mask=InstanceMask([pts])))
    return build_hierarchy(insts, size, size)


def suite_raster(scenes: int = 20, seed: int = 0, size: int = 64) -> dict:
    """Painter's algorithm vs the smallest-covering-instance pixel oracle."""
    rng = np.random.default_rng(seed)
    worst = 0
    for _ in range(scenes):
        scene = random_scene(rng, size=size)
        maps = rasterize(scene)
        masks = {i: inst.mask.rasterize(size, size)
                 for i, inst in scene.instances.items()}
        areas = {i: int(m.sum()) for i, m in masks.items()}
        expect_inst = np.zeros((size, size), dtype=np.int32)
        expect_cls = np.zeros((size, size), dtype=np.int32)
        for j in range(size):
            for i in range(size):
                covering = [(areas[k], -k) for k, m in masks.items() if m[j, i]]
                if covering:
                    _, negk = min(covering)
                    expect_inst[j, i] = -negk
                    expect_cls[j, i] = scene.instances[-negk].class_id
        worst = max(worst,
                    int((maps.instance_map != expect_inst).sum()),
                    int((maps.class_map != expect_cls).sum()))
    return _suite_result("raster", {"mismatched_pixels": float(worst)}, 0.0)


ALL_SUITES = {
    "grads": suite_grads,
    "attention": suite_attention,
    "blend": suite_blend,
    "raster": suite_raster,
}


def run_suites(names: list[str] | None = None, **kwargs) -> dict:
    names = names or list(ALL_SUITES)
    results = [ALL_SUITES[n](**kwargs.get(n, {})) for n in names]
    return {"suites": results, "passed": all(r["passed"] for r in results)}
