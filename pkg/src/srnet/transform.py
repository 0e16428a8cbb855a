"""The data transform that drives hidden-parameter sampling.

For a dataset {(x_n, y_n)} and a derivative-of-bump kernel phi, the transform
is T(a, b) = sum_n phi(a . x_n - b) w_n with per-example channel weights w_n.
Hidden parameters are drawn proportionally to |T|.  Because phi vanishes
outside (-1, 1), T vanishes outside the cone-like region
Omega = {(a, b) : |b| <= M ||a|| + 1} where M is the input radius; the
(alpha, beta) reparameterization b = (M ||alpha|| + 1) beta straightens that
region into a box.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset
from .errors import AllZeroTargets
from .kernels import DEFAULT_MAX_ORDER, MollifierKernel, build_kernel, default_order


def channel_weights(targets: np.ndarray) -> np.ndarray:
    """Per-example scalar weights: the target itself for scalar targets
    (sign kept for diagnostics), the L1 norm of the target row otherwise."""
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if targets.shape[1] == 1:
        return targets[:, 0].copy()
    return np.abs(targets).sum(axis=1)


@dataclass(frozen=True)
class EmpiricalTransform:
    """Immutable transform of one dataset under one kernel; evaluation is pure."""

    dataset: LabeledDataset
    kernel: MollifierKernel
    weights: np.ndarray

    @property
    def input_radius(self) -> float:
        return self.dataset.input_radius

    def eval_batch(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """T at a batch of points: a is (P, m), b is (P,); returns (P,)."""
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.asarray(b, dtype=float).ravel()
        z = a @ self.dataset.inputs.T - b[:, None]
        k = self.kernel.eval(z.ravel()).reshape(z.shape)
        return k @ self.weights

    def eval(self, a, b) -> float:
        a = np.asarray(a, dtype=float).reshape(1, -1)
        return float(self.eval_batch(a, np.array([b]))[0])


def make_transform(
    dataset: LabeledDataset,
    order: int | None = None,
    max_order: int = DEFAULT_MAX_ORDER,
) -> EmpiricalTransform:
    """Build the transform; order defaults to the even/odd rule on m."""
    k = default_order(dataset.m) if order is None else order
    return EmpiricalTransform(
        dataset=dataset,
        kernel=build_kernel(k, max_order),
        weights=channel_weights(dataset.targets),
    )


def transform_eval(t: EmpiricalTransform, a, b):
    return t.eval(a, b)


def support_contains(M: float, a, b) -> bool:
    """True iff |b| <= M ||a|| + 1."""
    if M < 0:
        raise ValueError("input radius must be nonnegative")
    return bool(abs(b) <= M * np.linalg.norm(np.asarray(a, dtype=float)) + 1.0)


def from_alpha_beta(alpha, beta, M: float):
    """Box coordinates to raw coordinates: a = alpha, b = (M ||alpha|| + 1) beta."""
    alpha = np.asarray(alpha, dtype=float)
    return alpha.copy(), float((M * np.linalg.norm(alpha) + 1.0) * beta)


def to_alpha_beta(a, b, M: float):
    """Raw coordinates to box coordinates: alpha = a, beta = b / (M ||a|| + 1)."""
    a = np.asarray(a, dtype=float)
    return a.copy(), float(b / (M * np.linalg.norm(a) + 1.0))


@dataclass(frozen=True)
class SupportBox:
    """Axis-aligned alpha box with beta implicitly in [-1, 1].

    Its image under from_alpha_beta covers exactly the part of the support
    region above the alpha box.
    """

    alpha_lo: np.ndarray
    alpha_hi: np.ndarray
    M: float

    def __post_init__(self):
        object.__setattr__(self, "alpha_lo", np.asarray(self.alpha_lo, dtype=float))
        object.__setattr__(self, "alpha_hi", np.asarray(self.alpha_hi, dtype=float))
        if self.alpha_lo.shape != self.alpha_hi.shape:
            raise ValueError("alpha bounds must have the same shape")
        if np.any(self.alpha_hi <= self.alpha_lo):
            raise ValueError("alpha box must have positive volume")
        if self.M < 0:
            raise ValueError("input radius must be nonnegative")

    @property
    def m(self) -> int:
        return self.alpha_lo.size

    @property
    def volume(self) -> float:
        # (alpha, beta)-space volume; beta spans [-1, 1].
        return float(np.prod(self.alpha_hi - self.alpha_lo) * 2.0)

    @classmethod
    def cube(cls, m: int, a_max: float, M: float) -> "SupportBox":
        return cls(alpha_lo=np.full(m, -a_max), alpha_hi=np.full(m, a_max), M=M)


def mixture_weights(dataset: LabeledDataset) -> np.ndarray:
    """Probability vector eta with eta_n proportional to |w_n|."""
    w = np.abs(channel_weights(dataset.targets))
    total = w.sum()
    if total == 0:
        raise AllZeroTargets("every channel weight is zero")
    return w / total
