"""Finite-difference verification of every differentiable primitive, plus
the backward-pass contracts."""

import numpy as np
import pytest

from corrnet import autodiff as ad

RNG = np.random.default_rng(1234)
FD_H = 1e-5
TOL = 1e-4


def fd_check(builder, shapes, h=FD_H, tol=TOL, seed=0):
    """Compare analytic grads of scalar builder(tensors) to central differences."""
    rng = np.random.default_rng(seed)
    tensors = [ad.Tensor(rng.normal(size=s) if s else rng.normal(),
                         requires_grad=True) for s in shapes]
    out = builder(*tensors)
    ad.backward(out)
    for t in tensors:
        got = ad.grad_of(t)
        flat = t.data.ravel()
        num = np.zeros_like(flat)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            fp = float(builder(*tensors).data)
            flat[i] = orig - h
            fm = float(builder(*tensors).data)
            flat[i] = orig
            num[i] = (fp - fm) / (2 * h)
        num = num.reshape(t.data.shape)
        denom = np.maximum(np.maximum(np.abs(num), np.abs(got)), 1e-6)
        assert (np.abs(num - got) / denom).max() < tol


class TestPrimitiveGradients:
    def test_add(self):
        fd_check(lambda a, b: ad.tsum(ad.add(a, b)), [(3, 4), (3, 4)])

    def test_add_broadcast(self):
        fd_check(lambda a, b: ad.tsum(ad.mul(ad.add(a, b), ad.add(a, b))),
                 [(3, 4), (4,)])

    def test_mul_div(self):
        fd_check(lambda a, b: ad.tsum(ad.div(ad.mul(a, a), ad.add(ad.mul(b, b), 1.5))),
                 [(5,), (5,)])

    def test_matmul(self):
        fd_check(lambda a, b: ad.tsum(ad.matmul(a, b)), [(3, 4), (4, 2)])

    def test_matmul_batched(self):
        fd_check(lambda a, b: ad.tsum(ad.matmul(a, b)), [(2, 3, 4), (4, 2)])
        fd_check(lambda a, b: ad.tsum(ad.matmul(a, b)), [(2, 3, 4), (2, 4, 5)])

    def test_softmax(self):
        w = ad.constant(RNG.normal(size=(3, 5)))
        fd_check(lambda a: ad.tsum(ad.mul(ad.softmax(a, axis=-1), w)), [(3, 5)])

    def test_tanh_exp_log_sqrt(self):
        fd_check(lambda a: ad.tsum(ad.tanh(a)), [(4,)])
        fd_check(lambda a: ad.tsum(ad.exp(a)), [(4,)])
        fd_check(lambda a: ad.tsum(ad.log(ad.add(ad.mul(a, a), 1.0))), [(4,)])
        fd_check(lambda a: ad.tsum(ad.sqrt(ad.add(ad.mul(a, a), 1.0))), [(4,)])

    def test_leaky_relu(self):
        # offset inputs away from the kink
        rng = np.random.default_rng(3)
        x = ad.Tensor(rng.normal(size=12) + np.where(rng.random(12) > 0.5, 2.0, -2.0),
                      requires_grad=True)
        out = ad.tsum(ad.leaky_relu(x, 0.2))
        ad.backward(out)
        expect = np.where(x.data > 0, 1.0, 0.2)
        np.testing.assert_allclose(x.grad, expect)

    def test_layer_norm_composition(self):
        w = ad.constant(RNG.normal(size=(3, 6)))

        def ln(a):
            mu = ad.tmean(a, axis=-1, keepdims=True)
            c = ad.sub(a, mu)
            var = ad.tmean(ad.mul(c, c), axis=-1, keepdims=True)
            y = ad.div(c, ad.sqrt(ad.add(var, 1e-5)))
            return ad.tsum(ad.mul(y, w))
        fd_check(ln, [(3, 6)])

    def test_huber_gradient(self):
        from corrnet.losses import huber
        fd_check(lambda p: huber(p, ad.constant(np.zeros(6)), delta=1.0),
                 [(6,)], seed=7)

    def test_gaussian_kernel(self):
        def gk(a):
            d = ad.sub(a, ad.constant(np.linspace(-1, 1, 4)[None, :]))
            return ad.tsum(ad.exp(ad.mul(ad.mul(d, d), -0.5)))
        fd_check(lambda a: gk(ad.reshape(a, (5, 1))), [(5,)])

    def test_dropout_off_identity(self):
        x = ad.Tensor(RNG.normal(size=(3, 3)), requires_grad=True)
        y = ad.dropout(x, 0.2, None, training=False)
        assert y is x or np.array_equal(y.data, x.data)

    def test_gather_segment_sum(self):
        idx = np.array([0, 2, 1, 0])
        w1 = ad.constant(RNG.normal(size=(4, 3)))
        fd_check(lambda a: ad.tsum(ad.mul(ad.gather(a, idx), w1)), [(3, 3)])
        seg = np.array([0, 0, 1, 1])
        w2 = ad.constant(RNG.normal(size=(2, 3)))
        fd_check(lambda a: ad.tsum(ad.mul(ad.segment_sum(a, seg, 2), w2)), [(4, 3)])

    def test_segment_softmax(self):
        seg = np.array([0, 0, 0, 1, 1])
        w = ad.constant(RNG.normal(size=(5, 1)))
        fd_check(lambda a: ad.tsum(ad.mul(
            ad.segment_softmax(ad.reshape(a, (5, 1)), seg, 2), w)), [(5,)])

    def test_concat_getitem_transpose(self):
        w1 = ad.constant(RNG.normal(size=(2, 5)))
        fd_check(lambda a, b: ad.tsum(ad.mul(ad.concat([a, b], axis=1), w1)),
                 [(2, 2), (2, 3)])
        fd_check(lambda a: ad.tsum(a[1:, :2]), [(3, 3)])
        w2 = ad.constant(RNG.normal(size=(4, 3)))
        fd_check(lambda a: ad.tsum(ad.mul(ad.transpose(a, (1, 0)), w2)), [(3, 4)])


class TestBackwardContract:
    def test_square_at_three(self):
        x = ad.Tensor(3.0, requires_grad=True)
        y = ad.mul(x, x)
        ad.backward(y)
        assert x.grad == pytest.approx(6.0)

    def test_composite_chain_fd(self):
        fd_check(lambda W, b, x: ad.tsum(ad.tanh(ad.add(ad.matmul(W, x), b))),
                 [(3, 4), (3, 1), (4, 1)], seed=11)

    def test_disconnected_parameter_zero(self):
        x = ad.Tensor(2.0, requires_grad=True)
        w = ad.Tensor(np.ones(3), requires_grad=True)
        ad.backward(ad.mul(x, x))
        assert w.grad is None
        np.testing.assert_array_equal(ad.grad_of(w), np.zeros(3))

    def test_non_scalar_root_rejected(self):
        x = ad.Tensor(np.ones(3), requires_grad=True)
        with pytest.raises(ValueError, match="scalar"):
            ad.backward(ad.mul(x, 2.0))

    def test_repeat_backward_rejected(self):
        x = ad.Tensor(1.0, requires_grad=True)
        y = ad.mul(x, x)
        ad.backward(y)
        with pytest.raises(RuntimeError, match="already"):
            ad.backward(y)

    def test_grad_accumulates_across_graphs(self):
        x = ad.Tensor(2.0, requires_grad=True)
        ad.backward(ad.mul(x, x))
        ad.backward(ad.mul(x, ad.constant(3.0)))
        assert x.grad == pytest.approx(4.0 + 3.0)

    def test_intermediate_grad_exposed(self):
        x = ad.Tensor(2.0, requires_grad=True)
        mid = ad.mul(x, x)
        ad.backward(ad.mul(mid, mid))   # d/d(mid) of mid^2 = 2*mid = 8
        assert mid.grad == pytest.approx(8.0)
