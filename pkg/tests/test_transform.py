import numpy as np
import pytest

from srnet.data import LabeledDataset, gen_boolean, gen_sine, gen_tsc
from srnet.errors import AllZeroTargets, OrderTooHigh
from srnet.kernels import build_kernel
from srnet.transform import (
    SupportBox,
    channel_weights,
    from_alpha_beta,
    make_transform,
    mixture_weights,
    support_contains,
    to_alpha_beta,
    transform_eval,
)


@pytest.fixture(scope="module")
def tsc():
    return make_transform(gen_tsc(201))


class TestTransformEval:
    def test_single_example_reduces_to_kernel(self):
        ds = LabeledDataset(inputs=np.array([[0.3, -0.2]]), targets=np.array([[1.0]]))
        t = make_transform(ds)  # order 2 for m = 2
        kernel = build_kernel(2)
        a = np.array([1.5, 0.5])
        for b in (-0.5, 0.0, 0.4):
            z = a @ ds.inputs[0] - b
            assert transform_eval(t, a, b) == pytest.approx(kernel.eval(z), rel=1e-14)

    def test_zero_outside_support(self, tsc):
        rng = np.random.default_rng(11)
        M = tsc.input_radius
        a = rng.uniform(-40, 40, size=2000)
        margin = rng.uniform(1e-9, 50, size=2000)
        b = np.sign(rng.standard_normal(2000)) * (M * np.abs(a) + 1.0 + margin)
        vals = tsc.eval_batch(a.reshape(-1, 1), b)
        assert np.all(vals == 0.0)

    def test_nonzero_inside(self, tsc):
        ag = np.linspace(-40, 40, 41)
        bg = np.linspace(-41, 41, 41)
        aa, bb = np.meshgrid(ag, bg, indexing="ij")
        vals = tsc.eval_batch(aa.ravel().reshape(-1, 1), bb.ravel())
        assert np.abs(vals).max() > 0.0

    def test_linear_in_targets(self):
        rng = np.random.default_rng(5)
        x = rng.uniform(-1, 1, size=(40, 1))
        y1 = rng.normal(size=(40, 1))
        y2 = rng.normal(size=(40, 1))
        t1 = make_transform(LabeledDataset(inputs=x, targets=y1))
        t2 = make_transform(LabeledDataset(inputs=x, targets=y2))
        t12 = make_transform(LabeledDataset(inputs=x, targets=y1 + y2))
        a = rng.uniform(-10, 10, size=(200, 1))
        b = rng.uniform(-11, 11, size=200)
        lhs = t12.eval_batch(a, b)
        rhs = t1.eval_batch(a, b) + t2.eval_batch(a, b)
        scale = np.abs(lhs) + np.abs(rhs) + 1e-30
        assert np.max(np.abs(lhs - rhs) / scale) < 1e-12

    def test_mixture_bound(self, tsc):
        rng = np.random.default_rng(9)
        a = rng.uniform(-30, 30, size=(500, 1))
        b = rng.uniform(-31, 31, size=500)
        lhs = np.abs(tsc.eval_batch(a, b))
        z = a @ tsc.dataset.inputs.T - b[:, None]
        k = tsc.kernel.eval(z.ravel()).reshape(z.shape)
        rhs = np.abs(k) @ np.abs(tsc.weights)
        assert np.all(lhs <= rhs * (1 + 1e-12) + 1e-300)

    def test_grid_maximizer_strictly_inside_support(self):
        # single-frequency sine layout: the mass concentrates well inside
        t = make_transform(gen_sine(201))
        ag = np.linspace(-40, 40, 161)
        bg = np.linspace(-41, 41, 165)
        aa, bb = np.meshgrid(ag, bg, indexing="ij")
        vals = np.abs(t.eval_batch(aa.ravel().reshape(-1, 1), bb.ravel()))
        i = np.argmax(vals)
        a_star, b_star = aa.ravel()[i], bb.ravel()[i]
        assert np.abs(b_star) < t.input_radius * np.abs(a_star) + 1.0

    def test_order_guard_propagates(self):
        ds = LabeledDataset(inputs=np.zeros((3, 20)), targets=np.ones((3, 1)))
        with pytest.raises(OrderTooHigh):
            make_transform(ds)  # default order 20 > limit 12


class TestSupportGeometry:
    def test_contains_boundary(self):
        assert support_contains(1.0, np.array([1.0]), 2.0)
        assert not support_contains(1.0, np.array([1.0]), 2.5)
        assert support_contains(2.0, np.array([0.0, 0.0]), 0.5)

    def test_negative_radius_rejected(self):
        with pytest.raises(ValueError):
            support_contains(-1.0, np.array([1.0]), 0.0)

    def test_scale_equivariance(self):
        ds = gen_tsc(51)
        doubled = LabeledDataset(inputs=2 * ds.inputs, targets=ds.targets)
        a, b = np.array([3.0]), 6.9
        assert not support_contains(ds.input_radius, a, b)
        assert support_contains(doubled.input_radius, a, b)

    def test_forward_map(self):
        a, b = from_alpha_beta(np.array([1.0, 0.0]), 0.5, 2.0)
        assert np.array_equal(a, [1.0, 0.0])
        assert b == pytest.approx(1.5)

    def test_forward_map_zero_beta(self):
        _, b = from_alpha_beta(np.array([3.0, -4.0]), 0.0, 17.0)
        assert b == 0.0

    def test_inverse_map(self):
        alpha, beta = to_alpha_beta(np.array([1.0, 0.0]), 1.5, 2.0)
        assert np.array_equal(alpha, [1.0, 0.0])
        assert beta == pytest.approx(0.5)

    def test_inverse_at_zero_vector(self):
        _, beta = to_alpha_beta(np.zeros(3), 0.5, 3.0)
        assert beta == pytest.approx(0.5)

    def test_round_trip(self):
        rng = np.random.default_rng(2)
        for _ in range(50):
            alpha = rng.normal(size=3)
            beta = rng.uniform(-2, 2)
            M = rng.uniform(0, 5)
            a, b = from_alpha_beta(alpha, beta, M)
            alpha2, beta2 = to_alpha_beta(a, b, M)
            assert np.allclose(alpha, alpha2)
            assert beta2 == pytest.approx(beta, rel=1e-12, abs=1e-12)

    def test_beta_interval_iff_support(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            a = rng.normal(size=2) * 5
            b = rng.uniform(-30, 30)
            M = rng.uniform(0, 3)
            _, beta = to_alpha_beta(a, b, M)
            assert (abs(beta) <= 1.0) == support_contains(M, a, b)

    def test_support_box_maps_into_support(self):
        box = SupportBox.cube(2, a_max=5.0, M=1.5)
        rng = np.random.default_rng(4)
        for _ in range(200):
            alpha = rng.uniform(box.alpha_lo, box.alpha_hi)
            beta = rng.uniform(-1, 1)
            a, b = from_alpha_beta(alpha, beta, box.M)
            assert support_contains(box.M, a, b)

    def test_support_box_volume(self):
        box = SupportBox.cube(2, a_max=2.0, M=1.0)
        assert box.volume == pytest.approx(4.0 * 4.0 * 2.0)


class TestWeights:
    def test_scalar_targets_keep_sign(self):
        w = channel_weights(np.array([[1.0], [-2.0], [1.0]]))
        assert np.array_equal(w, [1.0, -2.0, 1.0])

    def test_vector_targets_use_l1(self):
        w = channel_weights(np.array([[1.0, -2.0], [0.0, 0.5]]))
        assert np.array_equal(w, [3.0, 0.5])

    def test_mixture_weights_normalize_abs(self):
        ds = LabeledDataset(inputs=np.zeros((3, 1)), targets=np.array([[1.0], [-2.0], [1.0]]))
        assert np.allclose(mixture_weights(ds), [0.25, 0.5, 0.25])

    def test_single_example(self):
        ds = LabeledDataset(inputs=np.zeros((1, 1)), targets=np.array([[3.0]]))
        assert np.array_equal(mixture_weights(ds), [1.0])

    def test_mass_on_only_nonzero(self):
        ds = LabeledDataset(inputs=np.zeros((3, 1)), targets=np.array([[0.0], [0.0], [5.0]]))
        assert np.array_equal(mixture_weights(ds), [0.0, 0.0, 1.0])

    def test_all_zero_targets(self):
        ds = LabeledDataset(inputs=np.zeros((2, 1)), targets=np.zeros((2, 1)))
        with pytest.raises(AllZeroTargets):
            mixture_weights(ds)

    def test_boolean_weights(self):
        eta = mixture_weights(gen_boolean())
        assert np.allclose(eta, [0.0, 1 / 3, 1 / 3, 1 / 3])
