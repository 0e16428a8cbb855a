"""Hidden-parameter samplers.

Two rigorous acceptance-rejection routes draw exactly proportionally to |T|:
one proposes uniformly in a raw (a, b) box, the other proposes in the
straightened (alpha, beta) box and corrects by the volume factor
(M ||alpha|| + 1) so the returned law is still proportional to |T(a, b)|.
The mixture-annealed route never evaluates the transform at all; it anchors
each unit at one training example and approximates the kernel's mass profile
with a Beta draw, which is what makes very high input dimensions tractable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset
from .errors import (
    DegenerateTarget,
    TooFewExamples,
    TrialBudgetExceeded,
    ZeroNormInput,
)
from .transform import EmpiricalTransform, SupportBox, mixture_weights


@dataclass(frozen=True)
class Box:
    """Axis-aligned proposal box in raw (a..., b) coordinates."""

    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lo", np.asarray(self.lo, dtype=float))
        object.__setattr__(self, "hi", np.asarray(self.hi, dtype=float))
        if self.lo.shape != self.hi.shape:
            raise ValueError("box bounds must have the same shape")
        if np.any(self.hi <= self.lo):
            raise ValueError("box must have positive volume")

    @property
    def dim(self) -> int:
        return self.lo.size

    @property
    def volume(self) -> float:
        return float(np.prod(self.hi - self.lo))

    @classmethod
    def omega_bounding(cls, m: int, a_max: float, M: float) -> "Box":
        """Smallest axis-aligned box containing the support region over the
        alpha cube [-a_max, a_max]^m."""
        b_max = M * a_max * np.sqrt(m) + 1.0
        return cls(lo=np.append(np.full(m, -a_max), -b_max),
                   hi=np.append(np.full(m, a_max), b_max))


@dataclass
class SampleBatch:
    """A batch of hidden parameters plus the proposal budget that bought it."""

    a: np.ndarray  # (J, m)
    b: np.ndarray  # (J,)
    proposals: int = 0

    def __len__(self) -> int:
        return len(self.b)


@dataclass(frozen=True)
class ArConfig:
    """Acceptance-rejection setup: proposal region, dominating ratio, budget."""

    region: Box | SupportBox
    envelope_ratio: float
    max_trials_per_sample: int = 200_000
    seed: int = 0
    chunk: int = 4096

    def __post_init__(self):
        if self.envelope_ratio <= 0:
            raise ValueError("envelope ratio must be positive")


@dataclass(frozen=True)
class AnnealConfig:
    """Mixture-annealed sampler setup; shapes default to the heavily
    edge-skewed Beta that mimics a very high order kernel."""

    alpha_shape: float = 100.0
    beta_shape: float = 3.0
    min_norm: float = 1e-6
    max_attempts: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.alpha_shape <= 0 or self.beta_shape <= 0:
            raise ValueError("Beta shapes must be positive")
        if self.min_norm < 0:
            raise ValueError("min_norm must be >= 0")


def _grid_points(lo, hi, per_axis):
    axes = [np.linspace(l, h, per_axis) for l, h in zip(lo, hi)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([g.ravel() for g in mesh])


def _raw_target(t: EmpiricalTransform):
    def target(points):
        return np.abs(t.eval_batch(points[:, :-1], points[:, -1]))

    return target


def _pullback_target(t: EmpiricalTransform, box: SupportBox):
    def target(points):
        alpha, beta = points[:, :-1], points[:, -1]
        stretch = box.M * np.linalg.norm(alpha, axis=1) + 1.0
        return np.abs(t.eval_batch(alpha, stretch * beta)) * stretch

    return target


def estimate_envelope(
    t: EmpiricalTransform,
    region: Box | SupportBox,
    grid_per_axis: int = 64,
    safety: float = 1.2,
) -> float:
    """safety * max over a grid of target density over uniform proposal density.

    For a raw box the target is |T|; for a SupportBox it is the volume-
    corrected pullback, so the estimate matches what the corresponding
    sampler accepts against.
    """
    if isinstance(region, SupportBox):
        lo = np.append(region.alpha_lo, -1.0)
        hi = np.append(region.alpha_hi, 1.0)
        target = _pullback_target(t, region)
        volume = region.volume
    else:
        lo, hi = region.lo, region.hi
        target = _raw_target(t)
        volume = region.volume
    pts = _grid_points(lo, hi, grid_per_axis)
    peak = float(target(pts).max())
    if peak == 0.0:
        raise DegenerateTarget("target density is zero on the whole estimation grid")
    return safety * peak * volume


def _ar_core(rng, propose, accept_prob, J, max_trials, chunk):
    """Shared accept/reject loop; counts proposals up to the J-th acceptance
    and raises after max_trials consecutive rejections."""
    kept = []
    have = 0
    proposals = 0
    consecutive = 0
    while have < J:
        pts = propose(rng, chunk)
        u = rng.uniform(size=len(pts))
        acc = u <= accept_prob(pts)
        idx = np.flatnonzero(acc)
        if idx.size == 0:
            consecutive += len(pts)
            proposals += len(pts)
            if consecutive >= max_trials:
                raise TrialBudgetExceeded(
                    f"{consecutive} consecutive rejections; envelope too loose "
                    "or target degenerate"
                )
            continue
        gaps = np.diff(idx) - 1
        worst = max(consecutive + idx[0], int(gaps.max()) if gaps.size else 0)
        if worst >= max_trials:
            raise TrialBudgetExceeded(f"{worst} consecutive rejections")
        take = min(idx.size, J - have)
        kept.append(pts[idx[:take]])
        have += take
        if have == J:
            proposals += int(idx[take - 1]) + 1
        else:
            proposals += len(pts)
            consecutive = len(pts) - int(idx[-1]) - 1
    return np.vstack(kept), proposals


def ar_sample(t: EmpiricalTransform, cfg: ArConfig, J: int) -> SampleBatch:
    """Draw J samples proportional to |T| by uniform-proposal rejection in a
    raw box; deterministic given the seed."""
    if J < 1:
        raise ValueError("need J >= 1")
    box = cfg.region
    if not isinstance(box, Box):
        raise TypeError("ar_sample needs a raw-coordinate Box region")
    rng = np.random.default_rng(cfg.seed)
    target = _raw_target(t)
    # Uniform proposal density is 1/volume, so p/(k q) = target * volume / k.
    scale = box.volume / cfg.envelope_ratio

    def propose(rng, n):
        return rng.uniform(box.lo, box.hi, size=(n, box.dim))

    pts, proposals = _ar_core(
        rng, propose, lambda p: target(p) * scale, J, cfg.max_trials_per_sample, cfg.chunk
    )
    return SampleBatch(a=pts[:, :-1], b=pts[:, -1], proposals=proposals)


def ar_sample_transformed(t: EmpiricalTransform, cfg: ArConfig, J: int) -> SampleBatch:
    """Rejection sampling in the straightened box; proposals that would land
    outside the support region are impossible by construction, and the
    stretch factor keeps the output law proportional to |T(a, b)|."""
    if J < 1:
        raise ValueError("need J >= 1")
    box = cfg.region
    if not isinstance(box, SupportBox):
        raise TypeError("ar_sample_transformed needs a SupportBox region")
    rng = np.random.default_rng(cfg.seed)
    target = _pullback_target(t, box)
    scale = box.volume / cfg.envelope_ratio
    lo = np.append(box.alpha_lo, -1.0)
    hi = np.append(box.alpha_hi, 1.0)

    def propose(rng, n):
        return rng.uniform(lo, hi, size=(n, box.m + 1))

    pts, proposals = _ar_core(
        rng, propose, lambda p: target(p) * scale, J, cfg.max_trials_per_sample, cfg.chunk
    )
    alpha, beta = pts[:, :-1], pts[:, -1]
    stretch = box.M * np.linalg.norm(alpha, axis=1) + 1.0
    return SampleBatch(a=alpha, b=stretch * beta, proposals=proposals)


def _pair_distances(inputs, rng, count, min_norm, max_attempts):
    """Distances between `count` uniformly chosen distinct example pairs,
    floored at min_norm after the retry cap."""
    n = len(inputs)
    if n < 2:
        raise TooFewExamples("need at least two examples to draw a pair distance")
    i = rng.integers(0, n, size=count)
    j = rng.integers(0, n, size=count)
    clash = i == j
    while clash.any():
        j[clash] = rng.integers(0, n, size=int(clash.sum()))
        clash = i == j
    dist = np.linalg.norm(inputs[i] - inputs[j], axis=1)
    for _ in range(max_attempts):
        low = dist < min_norm
        if not low.any():
            break
        k = int(low.sum())
        i2 = rng.integers(0, n, size=k)
        j2 = rng.integers(0, n, size=k)
        clash = i2 == j2
        while clash.any():
            j2[clash] = rng.integers(0, n, size=int(clash.sum()))
            clash = i2 == j2
        dist[low] = np.linalg.norm(inputs[i2] - inputs[j2], axis=1)
    return np.maximum(dist, min_norm)


def draw_pair_distance(
    dataset: LabeledDataset,
    rng: np.random.Generator,
    min_norm: float = 1e-6,
    max_attempts: int = 16,
) -> float:
    """Euclidean distance between two distinct uniformly chosen examples."""
    return float(_pair_distances(dataset.inputs, rng, 1, min_norm, max_attempts)[0])


def annealed_sample(dataset: LabeledDataset, cfg: AnnealConfig, J: int) -> SampleBatch:
    """Draw J units from the mixture-annealed approximation of the target law.

    Each unit anchors at example n ~ eta, points its weight vector along x_n
    with a pair-distance length, and offsets b so the unit's response at its
    anchor sits at a Beta-distributed distance inside the kernel support.
    Work after the O(N) setup is O(J m), independent of the dataset size.
    """
    if J < 1:
        raise ValueError("need J >= 1")
    eta = mixture_weights(dataset)
    rng = np.random.default_rng(cfg.seed)
    idx = rng.choice(dataset.n, size=J, p=eta)
    norms = np.linalg.norm(dataset.inputs, axis=1)
    for _ in range(cfg.max_attempts):
        bad = norms[idx] == 0.0
        if not bad.any():
            break
        idx[bad] = rng.choice(dataset.n, size=int(bad.sum()), p=eta)
    else:
        if (norms[idx] == 0.0).any():
            raise ZeroNormInput("kept selecting zero-norm anchor examples")
    zeta = rng.beta(cfg.alpha_shape, cfg.beta_shape, size=J)
    flip = rng.integers(0, 2, size=J)
    z = np.where(flip == 1, -zeta, zeta)
    length = _pair_distances(dataset.inputs, rng, J, cfg.min_norm, cfg.max_attempts)
    anchors = dataset.inputs[idx]
    a = (length / norms[idx])[:, None] * anchors
    b = np.einsum("ij,ij->i", a, anchors) - z
    return SampleBatch(a=a, b=b, proposals=J)
