"""Huber, soft histograms, histogram matching, and total-loss composition."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from corrnet import autodiff as ad
from corrnet.losses import (bin_centers, histogram_loss, huber, soft_histogram,
                            total_loss)


class TestHuber:
    def test_zero_residual(self):
        assert float(huber(np.zeros(4), np.zeros(4)).data) == 0.0

    def test_quadratic_region(self):
        assert float(huber(np.array([0.5]), np.array([0.0])).data) == pytest.approx(0.125)

    def test_linear_region(self):
        assert float(huber(np.array([2.0]), np.array([0.0])).data) == pytest.approx(1.5)

    def test_upper_bounded_by_half_square(self):
        r = np.linspace(-4, 4, 101)
        h = np.array([float(huber(np.array([x]), np.array([0.0])).data) for x in r])
        assert np.all(h <= 0.5 * r ** 2 + 1e-12)
        inside = np.abs(r) <= 1.0
        np.testing.assert_allclose(h[inside], 0.5 * r[inside] ** 2, atol=1e-12)


class TestSoftHistogram:
    def test_sharp_sample_at_center(self):
        centers = np.linspace(-1, 1, 11)
        h = soft_histogram(np.array([centers[4]]), centers, sigma=0.01)
        assert h.data[4] == pytest.approx(1.0, abs=1e-8)

    def test_mass_conservation(self):
        rng = np.random.default_rng(0)
        samples = rng.uniform(-1, 1, 100)
        h = soft_histogram(samples, np.linspace(-1, 1, 15))
        assert h.data.sum() == pytest.approx(1.0, abs=1e-6)

    @given(st.lists(st.floats(min_value=-5, max_value=5), min_size=1, max_size=50),
           st.floats(min_value=0.01, max_value=3.0))
    @settings(max_examples=100, deadline=None)
    def test_mass_conservation_property(self, samples, sigma):
        h = soft_histogram(np.array(samples), np.linspace(-5, 5, 8), sigma=sigma)
        assert h.data.sum() == pytest.approx(1.0, abs=1e-6)
        assert (h.data >= 0).all()

    def test_two_samples_split_evenly(self):
        centers = np.linspace(0, 1, 6)
        h = soft_histogram(np.array([centers[1], centers[4]]), centers, sigma=0.02)
        assert h.data[1] == pytest.approx(0.5, abs=1e-6)
        assert h.data[4] == pytest.approx(0.5, abs=1e-6)

    def test_gradient_flows_to_every_sample(self):
        x = ad.Tensor(np.array([0.1, 0.5, -0.4]), requires_grad=True)
        h = soft_histogram(x, np.linspace(-1, 1, 6))
        ad.backward(ad.tsum(ad.mul(h, ad.constant(np.arange(6.0)))))
        assert np.all(np.abs(x.grad) > 0)

    def test_rejects_single_bin(self):
        with pytest.raises(ValueError):
            soft_histogram(np.array([0.0]), np.array([0.0]))


class TestHistogramLoss:
    def test_identical_distributions_zero(self):
        rng = np.random.default_rng(1)
        target = rng.uniform(-0.9, 0.9, 30)
        relation = np.tile([0, 1, 2], 10)
        g, cs = histogram_loss(target.copy(), target, relation)
        assert float(g.data) == pytest.approx(0.0, abs=1e-12)
        for c in cs:
            assert float(c.data) == pytest.approx(0.0, abs=1e-12)

    def test_collapse_penalized(self):
        rng = np.random.default_rng(2)
        target = rng.uniform(-0.9, 0.9, 60)
        relation = np.tile([0, 1, 2], 20)
        collapsed = np.full(60, target.mean())
        g, _ = histogram_loss(collapsed, target, relation)
        assert float(g.data) > 1e-3

    def test_single_edge_class_matching_target(self):
        pred = np.array([0.5, -0.2, 0.1])
        target = pred.copy()
        relation = np.array([2, 0, 1])       # one edge per class
        _, cs = histogram_loss(pred, target, relation)
        for c in cs:
            assert float(c.data) == pytest.approx(0.0, abs=1e-10)

    def test_empty_class_contributes_zero(self):
        pred = np.array([0.5, -0.2])
        relation = np.array([0, 0])
        g, cs = histogram_loss(pred, pred.copy(), relation)
        assert float(cs[1].data) == 0.0
        assert float(cs[2].data) == 0.0

    def test_differentiable_across_bin_edge(self):
        # unlike hard binning, the analytic gradient agrees with central
        # differences exactly at a bin boundary (no kink there)
        target = np.linspace(-0.8, 0.8, 12)
        relation = np.tile([0, 1, 2], 4)
        centers = bin_centers(-0.8, 0.8, 15)
        boundary = (centers[7] + centers[8]) / 2

        def loss_at(x0):
            pred = ad.Tensor(np.concatenate([[x0], target[1:]]),
                             requires_grad=True)
            g, cs = histogram_loss(pred, target, relation)
            tot = ad.add(ad.add(g, cs[0]), ad.add(cs[1], cs[2]))
            return pred, tot

        pred, tot = loss_at(boundary)
        ad.backward(tot)
        analytic = pred.grad[0]
        h = 1e-6
        up = float(loss_at(boundary + h)[1].data)
        dn = float(loss_at(boundary - h)[1].data)
        numeric = (up - dn) / (2 * h)
        assert analytic == pytest.approx(numeric, rel=1e-4, abs=1e-8)


class TestTotalLoss:
    def _inputs(self, n=30, seed=3):
        rng = np.random.default_rng(seed)
        target_rho = rng.uniform(-0.9, 0.9, n)
        target_z = np.arctanh(target_rho)
        relation = rng.integers(0, 3, n)
        return target_z, target_rho, relation

    def test_perfect_predictions_zero(self):
        tz, tr, rel = self._inputs()
        total, bd = total_loss(tz.copy(), tz, tr.copy(), tr, rel)
        assert float(total.data) == pytest.approx(0.0, abs=1e-12)
        assert bd.total == pytest.approx(0.0, abs=1e-12)

    def test_breakdown_identity(self):
        tz, tr, rel = self._inputs()
        rng = np.random.default_rng(4)
        pz = tz + rng.normal(0, 0.3, len(tz))
        pr = np.tanh(pz)
        total, bd = total_loss(pz, tz, pr, tr, rel, scale=7.0)
        hist_mean = (bd.hist_loss_global + sum(bd.hist_loss_per_class)) / 4.0
        assert bd.total == pytest.approx(bd.edge_loss + 7.0 * hist_mean, rel=1e-12)

    def test_doubling_scale_doubles_hist_part(self):
        tz, tr, rel = self._inputs()
        rng = np.random.default_rng(5)
        pz = tz + rng.normal(0, 0.3, len(tz))
        pr = np.tanh(pz)
        t7, bd7 = total_loss(pz, tz, pr, tr, rel, scale=7.0)
        t14, bd14 = total_loss(pz, tz, pr, tr, rel, scale=14.0)
        hist7 = bd7.total - bd7.edge_loss
        hist14 = bd14.total - bd14.edge_loss
        assert hist14 == pytest.approx(2 * hist7, rel=1e-10)

    def test_gradient_matches_finite_differences(self):
        tz, tr, rel = self._inputs(n=12, seed=6)
        rng = np.random.default_rng(7)
        pz0 = tz + rng.normal(0, 0.2, len(tz))

        def f(pz_data):
            pr = np.tanh(pz_data)
            total, _ = total_loss(pz_data, tz, pr, tr, rel)
            return float(total.data)

        pz = ad.Tensor(pz0, requires_grad=True)
        pr = ad.tanh(pz)
        total, _ = total_loss(pz, tz, pr, tr, rel)
        ad.backward(total)
        h = 1e-5
        for i in range(len(pz0)):
            up, dn = pz0.copy(), pz0.copy()
            up[i] += h
            dn[i] -= h
            num = (f(up) - f(dn)) / (2 * h)
            denom = max(abs(num), abs(pz.grad[i]), 1e-6)
            assert abs(num - pz.grad[i]) / denom < 1e-4
