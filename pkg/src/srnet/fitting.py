"""Output-weight regression, the two trainers, the uniform baseline
initializer, and the end-to-end sample-then-regress pipeline."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .data import LabeledDataset
from .errors import DivergenceDetected, NonFiniteInput
from .kernels import SigmoidPair
from .network import (
    SigmoidPairNetwork,
    SigmoidUnitNetwork,
    TraceRecord,
    TrainTrace,
    design_matrix,
    gradient,
    loss,
    pack_gradients,
    pack_params,
    unpack_params,
)
from .samplers import (
    AnnealConfig,
    ArConfig,
    Box,
    SampleBatch,
    annealed_sample,
    ar_sample,
    ar_sample_transformed,
    estimate_envelope,
)
from .transform import SupportBox, make_transform


@dataclass(frozen=True)
class RegressionConfig:
    """Relative singular-value cutoff for the least-squares solve."""

    cutoff: float = 1e-10

    def __post_init__(self):
        if not 0.0 < self.cutoff < 1.0:
            raise ValueError("cutoff must lie in (0, 1)")


def regress_output(phi: np.ndarray, y: np.ndarray, cfg: RegressionConfig | None = None) -> np.ndarray:
    """Minimum-norm least-squares solution of phi @ W = y.

    Solved through an SVD with singular values below cutoff * largest treated
    as zero, so rank-deficient feature matrices get the minimum-norm
    minimizer.
    """
    cfg = cfg or RegressionConfig()
    phi = np.atleast_2d(np.asarray(phi, dtype=float))
    y = np.atleast_2d(np.asarray(y, dtype=float))
    if not (np.isfinite(phi).all() and np.isfinite(y).all()):
        raise NonFiniteInput("regression inputs must be finite")
    w, *_ = np.linalg.lstsq(phi, y, rcond=cfg.cutoff)
    return w


@dataclass(frozen=True)
class BatchOptConfig:
    """Limited-memory quasi-Newton settings with backtracking line search."""

    max_iters: int = 500
    grad_tol: float = 1e-8
    sufficient_decrease: float = 1e-4
    backtrack: float = 0.5
    max_backtracks: int = 40
    memory: int = 10

    def __post_init__(self):
        if self.max_iters < 1 or self.grad_tol <= 0:
            raise ValueError("need a positive iteration budget and tolerance")


def minimize_lbfgs(fun_grad, x0: np.ndarray, cfg: BatchOptConfig, callback=None):
    """Limited-memory quasi-Newton descent with an Armijo backtracking search.

    ``fun_grad(x) -> (f, g)``.  Accepted iterates have strictly non-increasing
    f.  Stops on the iteration budget, the gradient tolerance, or a failed
    line search (returning the best point so far).  ``callback(i, x, f)``
    runs after every accepted step.
    """
    x = np.asarray(x0, dtype=float).copy()
    f, g = fun_grad(x)
    s_hist: list[np.ndarray] = []
    y_hist: list[np.ndarray] = []
    for i in range(cfg.max_iters):
        if np.linalg.norm(g) < cfg.grad_tol:
            break
        # two-loop recursion for the quasi-Newton direction
        q = g.copy()
        alphas = []
        for s, y in zip(reversed(s_hist), reversed(y_hist)):
            a = (s @ q) / (y @ s)
            alphas.append(a)
            q -= a * y
        if s_hist:
            q *= (s_hist[-1] @ y_hist[-1]) / (y_hist[-1] @ y_hist[-1])
        for (s, y), a in zip(zip(s_hist, y_hist), reversed(alphas)):
            b = (y @ q) / (y @ s)
            q += (a - b) * s
        d = -q
        gd = g @ d
        if gd >= 0:  # history gave an ascent direction; fall back to steepest
            d = -g
            gd = -(g @ g)
        step = 1.0
        accepted = False
        for _ in range(cfg.max_backtracks):
            f_new, g_new = fun_grad(x + step * d)
            if f_new <= f + cfg.sufficient_decrease * step * gd:
                accepted = True
                break
            step *= cfg.backtrack
        if not accepted:
            break
        s = step * d
        y = g_new - g
        if s @ y > 1e-10 * np.linalg.norm(s) * np.linalg.norm(y):
            s_hist.append(s)
            y_hist.append(y)
            if len(s_hist) > cfg.memory:
                s_hist.pop(0)
                y_hist.pop(0)
        x = x + s
        f, g = f_new, g_new
        if callback is not None:
            callback(i + 1, x, f)
    return x, f


def train_batch(
    net: SigmoidUnitNetwork,
    X: np.ndarray,
    Y: np.ndarray,
    kind: str,
    cfg: BatchOptConfig,
    metrics_fn=None,
) -> tuple[SigmoidUnitNetwork, TrainTrace]:
    """Full-batch training; the recorded loss is non-increasing by
    construction.  ``metrics_fn(net) -> (train_error, test_error)`` fills the
    optional trace columns."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))

    def fun_grad(theta):
        candidate = unpack_params(net, theta)
        value = loss(candidate.forward(X), Y, kind)
        return value, pack_gradients(gradient(candidate, X, Y, kind))

    trace = TrainTrace()
    start = time.perf_counter()

    def record(iteration, theta, value):
        current = unpack_params(net, theta)
        tr_err, te_err = metrics_fn(current) if metrics_fn else (None, None)
        trace.append(TraceRecord(iteration, value, tr_err, te_err,
                                 time.perf_counter() - start))

    theta0 = pack_params(net)
    f0, _ = fun_grad(theta0)
    record(0, theta0, f0)
    theta, _ = minimize_lbfgs(fun_grad, theta0, cfg, callback=record)
    return unpack_params(net, theta), trace


@dataclass(frozen=True)
class SgdConfig:
    """Minibatch descent with a per-parameter adaptive step.

    Steps are learning_rate * g / (sqrt(accumulated g^2) + damping).  Setting
    curvature_damping > 0 additionally scales the denominator by a running
    root-mean-square gradient, a diagonal curvature proxy; off by default.
    """

    learning_rate: float = 0.05
    damping: float = 1e-8
    batch_size: int = 32
    max_iters: int = 20_000
    seed: int = 0
    trace_every: int = 100
    curvature_damping: float = 0.0
    divergence_factor: float = 1e3

    def __post_init__(self):
        if self.learning_rate < 0 or self.max_iters < 1 or self.batch_size < 1:
            raise ValueError("need nonnegative rate and positive budgets")


def train_sgd(
    net: SigmoidUnitNetwork,
    X: np.ndarray,
    Y: np.ndarray,
    kind: str,
    cfg: SgdConfig,
    metrics_fn=None,
) -> tuple[SigmoidUnitNetwork, TrainTrace]:
    """Seeded minibatch training with adaptive per-parameter steps.

    The trace is sampled every ``trace_every`` steps on the full training
    loss.  Raises DivergenceDetected (carrying the trace) when that loss
    exceeds divergence_factor times the initial loss.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    rng = np.random.default_rng(cfg.seed)
    n = len(X)
    theta = pack_params(net)
    accum = np.zeros_like(theta)
    curve = np.zeros_like(theta)
    trace = TrainTrace()
    start = time.perf_counter()

    def full_loss(th):
        return loss(unpack_params(net, th).forward(X), Y, kind)

    def record(iteration, th):
        value = full_loss(th)
        current = unpack_params(net, th)
        tr_err, te_err = metrics_fn(current) if metrics_fn else (None, None)
        trace.append(TraceRecord(iteration, value, tr_err, te_err,
                                 time.perf_counter() - start))
        return value

    initial = record(0, theta)
    for it in range(1, cfg.max_iters + 1):
        idx = rng.integers(0, n, size=cfg.batch_size)
        candidate = unpack_params(net, theta)
        g = pack_gradients(gradient(candidate, X[idx], Y[idx], kind))
        accum += g * g
        denom = np.sqrt(accum) + cfg.damping
        if cfg.curvature_damping > 0.0:
            curve = 0.99 * curve + 0.01 * g * g
            denom = denom + cfg.curvature_damping * np.sqrt(curve)
        theta = theta - cfg.learning_rate * g / denom
        if it % cfg.trace_every == 0 or it == cfg.max_iters:
            value = record(it, theta)
            if not math.isfinite(value) or value > cfg.divergence_factor * max(initial, 1e-300):
                raise DivergenceDetected(
                    f"loss {value:.3e} exceeded {cfg.divergence_factor:g} x initial {initial:.3e}",
                    trace=trace,
                )
    return unpack_params(net, theta), trace


def uniform_init(
    m: int,
    n_units: int,
    d_out: int,
    rng: np.random.Generator,
    scheme: str = "interval",
    radius: float = 1.0,
    output_activation: str = "linear",
    h: float = 1.0,
) -> SigmoidUnitNetwork:
    """Baseline initializer: every parameter from U[-radius, radius], or from
    a mean-zero normal with standard deviation m**-0.5 ("gaussian_fanin")."""
    shape_v, shape_c, shape_w = (n_units, m), (n_units,), (n_units + 1, d_out)
    if scheme == "interval":
        draw = lambda size: rng.uniform(-radius, radius, size=size)
    elif scheme == "gaussian_fanin":
        draw = lambda size: rng.normal(0.0, 1.0 / np.sqrt(m), size=size)
    else:
        raise ValueError(f"unknown init scheme {scheme!r}")
    return SigmoidUnitNetwork(
        weights=draw(shape_v),
        biases=draw(shape_c),
        output_weights=draw(shape_w),
        output_activation=output_activation,
        h=h,
    )


@dataclass
class SrResult:
    """Pipeline output: fitted network, the drawn batch, and stage accounting."""

    net: SigmoidPairNetwork
    samples: SampleBatch
    order: int | None
    sampling_seconds: float
    regression_seconds: float


SAMPLER_CHOICES = ("ar", "ar-transformed", "annealed")


def _auto_grid(dim: int) -> int:
    # keep the envelope grid near 4e4 points regardless of dimension
    return min(301, max(17, int(round(40_000 ** (1.0 / dim)))))


def draw_hidden(
    dataset: LabeledDataset,
    J: int,
    sampler: str = "ar",
    *,
    order: int | None = None,
    max_order: int = 12,
    seed: int = 0,
    a_max: float = 40.0,
    envelope_safety: float = 1.2,
    envelope_grid: int | None = None,
    beta_shapes: tuple[float, float] = (100.0, 3.0),
    min_norm: float = 1e-6,
) -> tuple[SampleBatch, int | None]:
    """Draw J hidden-parameter pairs with the chosen sampler.

    Returns (batch, kernel order used), order None for the annealed route.
    Rejection routes build the transform and estimate their envelope on an
    automatically sized grid unless envelope_grid overrides it.
    """
    if sampler not in SAMPLER_CHOICES:
        raise ValueError(f"sampler must be one of {SAMPLER_CHOICES}, got {sampler!r}")
    if sampler == "annealed":
        cfg = AnnealConfig(alpha_shape=beta_shapes[0], beta_shape=beta_shapes[1],
                           min_norm=min_norm, seed=seed)
        return annealed_sample(dataset, cfg, J), None
    t = make_transform(dataset, order=order, max_order=max_order)
    m = dataset.m
    if sampler == "ar":
        region = Box.omega_bounding(m, a_max, dataset.input_radius)
    else:
        region = SupportBox.cube(m, a_max, dataset.input_radius)
    grid = envelope_grid or _auto_grid(m + 1)
    ratio = estimate_envelope(t, region, grid_per_axis=grid, safety=envelope_safety)
    cfg = ArConfig(region=region, envelope_ratio=ratio, seed=seed)
    draw = ar_sample if sampler == "ar" else ar_sample_transformed
    return draw(t, cfg, J), t.kernel.order


def sr_pipeline(
    dataset: LabeledDataset,
    J: int,
    sampler: str = "ar",
    *,
    order: int | None = None,
    max_order: int = 12,
    h: float = 1.0,
    output_activation: str = "linear",
    regression: RegressionConfig | None = None,
    seed: int = 0,
    a_max: float = 40.0,
    envelope_safety: float = 1.2,
    envelope_grid: int | None = None,
    beta_shapes: tuple[float, float] = (100.0, 3.0),
    min_norm: float = 1e-6,
) -> SrResult:
    """Sample J hidden pairs from the data-driven law, then fit the output
    weights by least squares against the sigmoid-pair features."""
    t0 = time.perf_counter()
    batch, used_order = draw_hidden(
        dataset, J, sampler, order=order, max_order=max_order, seed=seed,
        a_max=a_max, envelope_safety=envelope_safety, envelope_grid=envelope_grid,
        beta_shapes=beta_shapes, min_norm=min_norm,
    )
    sampling_seconds = time.perf_counter() - t0

    t0 = time.perf_counter()
    pair = SigmoidPair(h=h)
    phi = design_matrix(batch.a, batch.b, pair, dataset.inputs)
    w = regress_output(phi, dataset.targets, regression)
    regression_seconds = time.perf_counter() - t0

    net = SigmoidPairNetwork(
        hidden_a=batch.a, hidden_b=batch.b, pair=pair,
        output_weights=w, output_activation=output_activation,
    )
    return SrResult(net=net, samples=batch, order=used_order,
                    sampling_seconds=sampling_seconds,
                    regression_seconds=regression_seconds)
