import numpy as np
import pytest

from sparsescene.compositor import (BlendError, blend, blend_backward,
                                    blend_multi, blend_multi_backward,
                                    sigmoid)
from sparsescene.verify import fd_grad, rel_err


def make(seed=0, n=2, h=4, w=5):
    rng = np.random.default_rng(seed)
    x_bg = rng.standard_normal((3, h, w))
    x_fgs = [rng.standard_normal((3, h, w)) for _ in range(n)]
    logits = [rng.standard_normal((1, h, w)) for _ in range(n)]
    return x_bg, x_fgs, logits, rng


class TestSigmoid:
    def test_midpoint(self):
        assert sigmoid(np.array([0.0]))[0] == 0.5

    def test_symmetry(self):
        z = np.linspace(-30, 30, 101)
        assert np.allclose(sigmoid(z) + sigmoid(-z), 1.0, atol=1e-15)

    def test_saturation_no_overflow(self):
        z = np.array([-800.0, 800.0])
        s = sigmoid(z)
        assert s[0] == 0.0 and s[1] == 1.0


class TestBlend:
    def test_saturated_positive_logit_selects_foreground(self):
        x_bg, x_fgs, _, _ = make(n=1)
        y, alpha, _ = blend(x_bg, x_fgs[0], np.full((1, 4, 5), 40.0))
        assert np.abs(y - x_fgs[0]).max() <= 1e-15
        assert np.abs(alpha - 1.0).max() <= 1e-15

    def test_saturated_negative_logit_selects_background(self):
        x_bg, x_fgs, _, _ = make(n=1)
        y, alpha, _ = blend(x_bg, x_fgs[0], np.full((1, 4, 5), -40.0))
        assert np.abs(y - x_bg).max() <= 1e-15
        assert np.abs(alpha).max() <= 1e-15

    def test_zero_logit_is_average(self):
        x_bg, x_fgs, _, _ = make(n=1)
        y, _, _ = blend(x_bg, x_fgs[0], np.zeros((1, 4, 5)))
        assert np.allclose(y, 0.5 * (x_bg + x_fgs[0]), atol=1e-15)

    def test_output_within_convex_hull(self):
        x_bg, x_fgs, logits, _ = make(n=1, seed=3)
        y, _, _ = blend(x_bg, x_fgs[0], logits[0])
        lo = np.minimum(x_bg, x_fgs[0])
        hi = np.maximum(x_bg, x_fgs[0])
        assert (y >= lo - 1e-12).all() and (y <= hi + 1e-12).all()

    def test_gradient_routing_at_saturation(self):
        x_bg, x_fgs, _, rng = make(n=1)
        r = rng.standard_normal(x_bg.shape)
        _, _, cache = blend(x_bg, x_fgs[0], np.full((1, 4, 5), 40.0))
        dbg, dfg, _ = blend_backward(cache, r)
        assert np.abs(dbg).max() <= 1e-12
        assert np.abs(dfg - r).max() <= 1e-12
        _, _, cache = blend(x_bg, x_fgs[0], np.full((1, 4, 5), -40.0))
        dbg, dfg, _ = blend_backward(cache, r)
        assert np.abs(dfg).max() <= 1e-12
        assert np.abs(dbg - r).max() <= 1e-12

    def test_gradients_match_fd(self):
        x_bg, x_fgs, logits, rng = make(seed=5, n=1)
        r = rng.standard_normal(x_bg.shape)
        _, _, cache = blend(x_bg, x_fgs[0], logits[0])
        dbg, dfg, dlogit = blend_backward(cache, r)
        assert rel_err(dbg, fd_grad(
            lambda v: float((blend(v, x_fgs[0], logits[0])[0] * r).sum()),
            x_bg)) <= 1e-4
        assert rel_err(dfg, fd_grad(
            lambda v: float((blend(x_bg, v, logits[0])[0] * r).sum()),
            x_fgs[0])) <= 1e-4
        assert rel_err(dlogit, fd_grad(
            lambda v: float((blend(x_bg, x_fgs[0], v)[0] * r).sum()),
            logits[0])) <= 1e-4

    def test_shape_checks(self):
        x_bg, x_fgs, _, _ = make(n=1)
        with pytest.raises(BlendError):
            blend(x_bg, x_fgs[0][:, :3], np.zeros((1, 4, 5)))
        with pytest.raises(BlendError):
            blend(x_bg, x_fgs[0], np.zeros((3, 4, 5)))


class TestBlendMulti:
    def test_empty_foreground_list_returns_background(self):
        x_bg, _, _, _ = make(n=0)
        y, cache = blend_multi(x_bg, [], [])
        assert np.array_equal(y, x_bg)
        y[0, 0, 0] = 99.0
        assert x_bg[0, 0, 0] != 99.0  # copy, not view

    def test_single_object_reduces_to_blend(self):
        x_bg, x_fgs, logits, _ = make(n=1, seed=7)
        y_multi, _ = blend_multi(x_bg, x_fgs, logits)
        y_single, _, _ = blend(x_bg, x_fgs[0], logits[0])
        assert np.abs(y_multi - y_single).max() <= 1e-15

    def test_matches_scalar_oracle(self):
        x_bg, x_fgs, logits, _ = make(n=3, seed=9)
        y, _ = blend_multi(x_bg, x_fgs, logits)
        h, w = 4, 5
        for j in range(h):
            for i in range(w):
                ls = np.array([l[0, j, i] for l in logits])
                e = np.exp(ls - ls.max())
                wts = e / e.sum()
                fg = sum(wts[k] * x_fgs[k][:, j, i] for k in range(3))
                a = float(sum(wts[k] / (1 + np.exp(-ls[k]))
                              for k in range(3)))
                expect = x_bg[:, j, i] * (1 - a) + fg * a
                assert np.abs(y[:, j, i] - expect).max() <= 1e-12

    def test_object_weights_sum_to_one(self):
        x_bg, x_fgs, logits, _ = make(n=4, seed=11)
        _, cache = blend_multi(x_bg, x_fgs, logits)
        assert np.abs(cache["weights"].sum(axis=0) - 1.0).max() <= 1e-12

    def test_permutation_invariance(self):
        x_bg, x_fgs, logits, _ = make(n=3, seed=13)
        y1, _ = blend_multi(x_bg, x_fgs, logits)
        order = [2, 0, 1]
        y2, _ = blend_multi(x_bg, [x_fgs[k] for k in order],
                            [logits[k] for k in order])
        assert np.abs(y1 - y2).max() <= 1e-12

    def test_dominant_logit_selects_that_object(self):
        x_bg, x_fgs, _, _ = make(n=2, seed=15)
        logits = [np.full((1, 4, 5), 40.0), np.full((1, 4, 5), -40.0)]
        y, _ = blend_multi(x_bg, x_fgs, logits)
        assert np.abs(y - x_fgs[0]).max() <= 1e-12

    def test_gradients_match_fd(self):
        x_bg, x_fgs, logits, rng = make(n=3, seed=17, h=3, w=3)
        r = rng.standard_normal(x_bg.shape)
        _, cache = blend_multi(x_bg, x_fgs, logits)
        dbg, dfgs, dlogits = blend_multi_backward(cache, r)
        assert rel_err(dbg, fd_grad(
            lambda v: float((blend_multi(v, x_fgs, logits)[0] * r).sum()),
            x_bg)) <= 1e-4
        for k in range(3):
            def lf(v, k=k):
                xs = list(x_fgs)
                xs[k] = v
                return float((blend_multi(x_bg, xs, logits)[0] * r).sum())

            def ll(v, k=k):
                ls = list(logits)
                ls[k] = v
                return float((blend_multi(x_bg, x_fgs, ls)[0] * r).sum())
            assert rel_err(dfgs[k], fd_grad(lf, x_fgs[k])) <= 1e-4
            assert rel_err(dlogits[k], fd_grad(ll, logits[k])) <= 1e-4

    def test_backward_empty_case(self):
        x_bg, _, _, rng = make(n=0)
        _, cache = blend_multi(x_bg, [], [])
        r = rng.standard_normal(x_bg.shape)
        dbg, dfgs, dlogits = blend_multi_backward(cache, r)
        assert np.array_equal(dbg, r)
        assert dfgs == [] and dlogits == []

    def test_length_mismatch_raises(self):
        x_bg, x_fgs, logits, _ = make(n=2)
        with pytest.raises(BlendError):
            blend_multi(x_bg, x_fgs, logits[:1])
