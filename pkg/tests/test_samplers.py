import numpy as np
import pytest

from srnet.data import LabeledDataset, gen_tsc
from srnet.errors import (
    DegenerateTarget,
    TooFewExamples,
    TrialBudgetExceeded,
    ZeroNormInput,
)
from srnet.kernels import build_kernel
from srnet.samplers import (
    AnnealConfig,
    ArConfig,
    Box,
    annealed_sample,
    ar_sample,
    ar_sample_transformed,
    draw_pair_distance,
    estimate_envelope,
)
from srnet.transform import SupportBox, make_transform, support_contains

from _stats import beta_product_bin_masses, beta_product_density, chi2_gof, two_sample_chi2


class _UniformStub:
    """Constant density on the unit square."""

    def __init__(self, level=1.0):
        self.level = level

    def eval_batch(self, a, b):
        return np.full(len(np.atleast_2d(a)), self.level)


UNIT_BOX = Box(lo=[0.0, 0.0], hi=[1.0, 1.0])


@pytest.fixture(scope="module")
def tsc_transform():
    return make_transform(gen_tsc(201))


@pytest.fixture(scope="module")
def tsc_raw_cfg(tsc_transform):
    box = Box.omega_bounding(1, a_max=40.0, M=tsc_transform.input_radius)
    ratio = estimate_envelope(tsc_transform, box, grid_per_axis=301, safety=1.2)
    return ArConfig(region=box, envelope_ratio=ratio, seed=17)


@pytest.fixture(scope="module")
def tsc_box_cfg(tsc_transform):
    box = SupportBox.cube(1, a_max=40.0, M=tsc_transform.input_radius)
    ratio = estimate_envelope(tsc_transform, box, grid_per_axis=301, safety=1.2)
    return ArConfig(region=box, envelope_ratio=ratio, seed=17)


class TestEstimateEnvelope:
    def test_uniform_target_gives_safety(self):
        ratio = estimate_envelope(_UniformStub(1.0), UNIT_BOX, grid_per_axis=21, safety=1.2)
        assert ratio == pytest.approx(1.2)

    def test_scales_with_grid_max(self):
        ratio = estimate_envelope(_UniformStub(5.0), UNIT_BOX, grid_per_axis=21, safety=1.2)
        assert ratio == pytest.approx(6.0)

    def test_tsc_bounding_box_finite(self, tsc_transform, tsc_raw_cfg):
        assert 0.0 < tsc_raw_cfg.envelope_ratio < np.inf

    def test_degenerate_target(self):
        with pytest.raises(DegenerateTarget):
            estimate_envelope(_UniformStub(0.0), UNIT_BOX, grid_per_axis=11)


class TestArSampling:
    def test_acceptance_rate_matches_envelope(self):
        # uniform target: per-trial acceptance is exactly 1/safety
        cfg = ArConfig(region=UNIT_BOX, envelope_ratio=1.25, seed=3)
        batch = ar_sample(_UniformStub(1.0), cfg, J=8000)
        rate = len(batch) / batch.proposals
        se = np.sqrt(0.8 * 0.2 / batch.proposals)
        assert abs(rate - 0.8) < 3 * se

    def test_samples_stay_in_support(self, tsc_transform, tsc_raw_cfg):
        batch = ar_sample(tsc_transform, tsc_raw_cfg, J=300)
        M = tsc_transform.input_radius
        for a, b in zip(batch.a, batch.b):
            assert support_contains(M, a, b)

    def test_deterministic(self, tsc_transform, tsc_raw_cfg):
        b1 = ar_sample(tsc_transform, tsc_raw_cfg, J=50)
        b2 = ar_sample(tsc_transform, tsc_raw_cfg, J=50)
        assert np.array_equal(b1.a, b2.a)
        assert np.array_equal(b1.b, b2.b)
        assert b1.proposals == b2.proposals

    def test_trial_budget(self):
        cfg = ArConfig(region=UNIT_BOX, envelope_ratio=1e9, seed=0,
                       max_trials_per_sample=2000)
        with pytest.raises(TrialBudgetExceeded):
            ar_sample(_UniformStub(1.0), cfg, J=10)

    def test_region_type_checked(self, tsc_transform, tsc_box_cfg, tsc_raw_cfg):
        with pytest.raises(TypeError):
            ar_sample(tsc_transform, tsc_box_cfg, J=2)
        with pytest.raises(TypeError):
            ar_sample_transformed(tsc_transform, tsc_raw_cfg, J=2)

    def test_gof_against_analytic_density(self):
        """Distribution-level correctness on a fully known 2D target."""
        target = beta_product_density(2.0, 5.0, 3.0, 3.0)
        ratio = estimate_envelope(target, UNIT_BOX, grid_per_axis=201, safety=1.1)
        cfg = ArConfig(region=UNIT_BOX, envelope_ratio=ratio, seed=0)
        batch = ar_sample(target, cfg, J=10_000)
        edges_x = np.linspace(0, 1, 11)
        edges_y = np.linspace(0, 1, 6)
        counts, *_ = np.histogram2d(batch.a[:, 0], batch.b, bins=[edges_x, edges_y])
        masses = beta_product_bin_masses(edges_x, edges_y, 2.0, 5.0, 3.0, 3.0)
        stat, threshold, ok = chi2_gof(counts, masses, significance=0.01)
        assert ok, f"chi2 {stat:.1f} >= {threshold:.1f}"

    def test_proposals_per_sample_near_envelope(self):
        # normalized target: expected trials per acceptance equals the ratio
        target = beta_product_density(2.0, 5.0, 3.0, 3.0)
        ratio = estimate_envelope(target, UNIT_BOX, grid_per_axis=201, safety=1.1)
        cfg = ArConfig(region=UNIT_BOX, envelope_ratio=ratio, seed=31)
        batch = ar_sample(target, cfg, J=10_000)
        assert batch.proposals / len(batch) == pytest.approx(ratio, rel=0.10)


class TestTransformedSampling:
    def test_samples_inside_support(self, tsc_transform, tsc_box_cfg):
        batch = ar_sample_transformed(tsc_transform, tsc_box_cfg, J=300)
        M = tsc_transform.input_radius
        for a, b in zip(batch.a, batch.b):
            assert support_contains(M, a, b)

    def test_acceptance_beats_raw_box(self, tsc_transform, tsc_raw_cfg, tsc_box_cfg):
        J = 400
        raw = ar_sample(tsc_transform, tsc_raw_cfg, J=J)
        boxed = ar_sample_transformed(tsc_transform, tsc_box_cfg, J=J)
        assert J / boxed.proposals >= J / raw.proposals

    def test_two_samplers_agree_in_distribution(self, tsc_transform, tsc_raw_cfg, tsc_box_cfg):
        J = 2000
        raw = ar_sample(tsc_transform, tsc_raw_cfg, J=J)
        boxed = ar_sample_transformed(tsc_transform, tsc_box_cfg, J=J)
        pts_raw = np.column_stack([raw.a[:, 0], raw.b])
        pts_box = np.column_stack([boxed.a[:, 0], boxed.b])
        edges_a = np.linspace(-40, 40, 9)
        edges_b = np.linspace(-41, 41, 9)
        stat, threshold, ok = two_sample_chi2(pts_raw, pts_box, edges_a, edges_b)
        assert ok, f"chi2 {stat:.1f} >= {threshold:.1f}"


class TestPairDistance:
    def test_two_points(self):
        ds = LabeledDataset(inputs=np.array([[0.0], [3.0]]), targets=np.ones((2, 1)))
        rng = np.random.default_rng(0)
        for _ in range(10):
            assert draw_pair_distance(ds, rng) == 3.0

    def test_identical_points_hit_floor(self):
        ds = LabeledDataset(inputs=np.zeros((5, 2)), targets=np.ones((5, 1)))
        rng = np.random.default_rng(0)
        assert draw_pair_distance(ds, rng, min_norm=1e-6) == 1e-6

    def test_mean_matches_pair_average(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]])
        ds = LabeledDataset(inputs=pts, targets=np.ones((3, 1)))
        exact = np.mean([1.0, 2.0, np.hypot(1.0, 2.0)])
        spread = np.std([1.0, 2.0, np.hypot(1.0, 2.0)])
        rng = np.random.default_rng(11)
        draws = np.array([draw_pair_distance(ds, rng) for _ in range(10_000)])
        assert abs(draws.mean() - exact) < 3 * spread / 100.0

    def test_too_few_examples(self):
        ds = LabeledDataset(inputs=np.array([[1.0]]), targets=np.array([[1.0]]))
        with pytest.raises(TooFewExamples):
            draw_pair_distance(ds, np.random.default_rng(0))


@pytest.fixture(scope="module")
def cloud():
    rng = np.random.default_rng(8)
    x = rng.normal(size=(40, 3))
    y = rng.normal(size=(40, 2))
    return LabeledDataset(inputs=x, targets=y)


class TestAnnealedSampling:
    @staticmethod
    def _anchor_indices(batch, dataset):
        # a is parallel to its anchor, so the anchor maximizes cosine similarity
        an = batch.a / np.linalg.norm(batch.a, axis=1, keepdims=True)
        xn = dataset.inputs / np.linalg.norm(dataset.inputs, axis=1, keepdims=True)
        return np.argmax(an @ xn.T, axis=1)

    def test_anchor_response_inside_kernel_support(self, cloud):
        batch = annealed_sample(cloud, AnnealConfig(seed=1), J=500)
        idx = self._anchor_indices(batch, cloud)
        z = np.einsum("ij,ij->i", batch.a, cloud.inputs[idx]) - batch.b
        assert np.all(np.abs(z) < 1.0)

    def test_direction_parallel_to_anchor(self, cloud):
        batch = annealed_sample(cloud, AnnealConfig(seed=2), J=500)
        idx = self._anchor_indices(batch, cloud)
        dots = np.einsum("ij,ij->i", batch.a, cloud.inputs[idx])
        norms = np.linalg.norm(batch.a, axis=1) * np.linalg.norm(cloud.inputs[idx], axis=1)
        assert np.max(np.abs(dots - norms) / norms) < 1e-12

    def test_offset_distribution_matches_beta(self, cloud):
        cfg = AnnealConfig(alpha_shape=100.0, beta_shape=3.0, seed=3)
        batch = annealed_sample(cloud, cfg, J=100_000)
        idx = self._anchor_indices(batch, cloud)
        z = np.einsum("ij,ij->i", batch.a, cloud.inputs[idx]) - batch.b
        mean = 100.0 / 103.0
        var = 100.0 * 3.0 / (103.0**2 * 104.0)
        se = np.sqrt(var / len(z))
        assert abs(np.abs(z).mean() - mean) < 3 * se
        # signs are a fair coin
        frac_neg = (z < 0).mean()
        assert abs(frac_neg - 0.5) < 3 * np.sqrt(0.25 / len(z))

    def test_deterministic(self, cloud):
        cfg = AnnealConfig(seed=5)
        b1 = annealed_sample(cloud, cfg, J=64)
        b2 = annealed_sample(cloud, cfg, J=64)
        assert np.array_equal(b1.a, b2.a)
        assert np.array_equal(b1.b, b2.b)

    def test_never_builds_kernel_in_high_dimension(self):
        rng = np.random.default_rng(6)
        ds = LabeledDataset(inputs=rng.normal(size=(20, 784)),
                            targets=rng.uniform(0, 1, size=(20, 10)))
        with pytest.raises(Exception):
            build_kernel(784)
        batch = annealed_sample(ds, AnnealConfig(seed=7), J=16)
        assert batch.a.shape == (16, 784)
        assert np.isfinite(batch.a).all() and np.isfinite(batch.b).all()

    def test_zero_norm_anchor_rejected(self):
        # all selectable mass sits on the zero-norm row
        ds = LabeledDataset(
            inputs=np.array([[0.0, 0.0], [1.0, 1.0]]),
            targets=np.array([[1.0], [0.0]]),
        )
        with pytest.raises(ZeroNormInput):
            annealed_sample(ds, AnnealConfig(seed=0), J=4)

    def test_zero_weight_rows_never_anchor(self):
        # the zero-norm row carries no sampling weight, so this must succeed
        ds = LabeledDataset(
            inputs=np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 0.0]]),
            targets=np.array([[0.0], [1.0], [2.0]]),
        )
        batch = annealed_sample(ds, AnnealConfig(seed=0), J=200)
        assert np.isfinite(batch.a).all()

    def test_rejects_bad_config(self):
        with pytest.raises(ValueError):
            AnnealConfig(alpha_shape=0.0)
        with pytest.raises(ValueError):
            AnnealConfig(min_norm=-1.0)
