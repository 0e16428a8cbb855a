"""Compactly supported bump kernels and the sigmoid-pair activation.

The decomposing side of the method rests on the standard bump function
``rho(z) = exp(1/(z^2 - 1))`` on (-1, 1) and its derivatives.  Every
derivative has the closed form ``rho^(k)(z) = P_k(z) / (z^2-1)^(2k) * rho(z)``
where ``P_k`` is a polynomial with exact integer coefficients obeying

    P_0 = 1
    P_{k+1}(z) = P_k'(z) (z^4 - 2 z^2 + 1) + P_k(z) (-4 k z^3 + 2 (2k - 1) z)

The composing side uses a normalized difference of shifted sigmoids, an even
bump-like activation whose maximum is exactly one at its center.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotEvaluable, OrderTooHigh

# Coefficients grow combinatorially with the order and double precision
# polynomial evaluation degrades; beyond this limit the annealed sampler is
# the supported path.
DEFAULT_MAX_ORDER = 12

# Orders with preset log-quadratic envelope constants (A, B), used where the
# closed form is out of numerical reach.
PRESET_ENVELOPES: dict[int, tuple[float, float]] = {784: (2800.0, -800.0)}


def sigmoid(z):
    """Numerically stable logistic function, elementwise."""
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _maybe_scalar(out, scalar):
    return float(out) if scalar else out


def mollifier_eval(z):
    """Standard bump function: exp(1/(z^2-1)) for |z| < 1, exactly 0 outside."""
    scalar = np.isscalar(z) or np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=float))
    out = np.zeros_like(z)
    inner = np.abs(z) < 1.0
    zi = z[inner]
    out[inner] = np.exp(1.0 / (zi * zi - 1.0))
    return _maybe_scalar(out[0] if scalar else out, scalar)


def _poly_derivative(coeffs: list[int]) -> list[int]:
    return [i * c for i, c in enumerate(coeffs)][1:] or [0]


@dataclass(frozen=True)
class MollifierKernel:
    """Order-k derivative of the standard bump function.

    ``coeffs`` holds the exact integer coefficients of P_k in ascending
    degree order.  Instances are immutable; ``eval`` is pure and safe to call
    concurrently.
    """

    order: int
    coeffs: tuple[int, ...]

    def eval(self, z):
        """Evaluate rho^(k) at z (scalar or array), 0 outside (-1, 1).

        The rational factor has a pole of order 4k at |z| = 1 while the bump
        has an essential zero there, so the magnitude is assembled in log
        space; underflow comes out as an exact 0.
        """
        scalar = np.isscalar(z) or np.ndim(z) == 0
        z = np.atleast_1d(np.asarray(z, dtype=float))
        out = np.zeros_like(z)
        inner = np.abs(z) < 1.0
        if inner.any():
            zi = z[inner]
            p = np.zeros_like(zi)
            for c in self.coeffs[::-1]:
                p = p * zi + float(c)
            with np.errstate(divide="ignore"):
                logmag = (
                    np.log(np.abs(p))
                    + 1.0 / (zi * zi - 1.0)
                    - 2.0 * self.order * (np.log1p(-zi) + np.log1p(zi))
                )
            out[inner] = np.sign(p) * np.exp(logmag)
        return _maybe_scalar(out[0] if scalar else out, scalar)


def build_kernel(k: int, max_order: int = DEFAULT_MAX_ORDER) -> MollifierKernel:
    """Run the integer recurrence up to order k.

    Raises OrderTooHigh for k > max_order, which signals the caller to use
    the annealed sampler instead of the closed form.
    """
    if k < 0:
        raise ValueError(f"derivative order must be >= 0, got {k}")
    if k > max_order:
        raise OrderTooHigh(f"order {k} exceeds evaluation limit {max_order}")
    p = [1]
    for j in range(k):
        dp = _poly_derivative(p)
        # dp * (z^4 - 2 z^2 + 1)
        t1 = [0] * (len(dp) + 4)
        for i, c in enumerate(dp):
            t1[i] += c
            t1[i + 2] -= 2 * c
            t1[i + 4] += c
        # p * (-4 j z^3 + 2 (2j - 1) z)
        t2 = [0] * (len(p) + 3)
        for i, c in enumerate(p):
            t2[i + 1] += 2 * (2 * j - 1) * c
            t2[i + 3] -= 4 * j * c
        n = max(len(t1), len(t2))
        p = [(t1[i] if i < len(t1) else 0) + (t2[i] if i < len(t2) else 0) for i in range(n)]
        while len(p) > 1 and p[-1] == 0:
            p.pop()
    return MollifierKernel(order=k, coeffs=tuple(p))


def kernel_eval(kernel: MollifierKernel, z):
    return kernel.eval(z)


def default_order(m: int) -> int:
    """Derivative order matched to input dimension: m when even, m+1 when odd."""
    return m if m % 2 == 0 else m + 1


@dataclass(frozen=True)
class SigmoidPair:
    """Normalized difference of shifted sigmoids with half-width h.

    phi(z) = (sigmoid(z + h) - sigmoid(z - h)) / H with H = sigmoid(h) -
    sigmoid(-h), so phi is even, lies in (0, 1], and peaks at 1 at z = 0.
    Evaluation uses the algebraically identical form
    sinh(h) / (H (cosh z + cosh h)), which is exactly even and keeps its sign
    deep into the tails where the raw difference would cancel to zero.
    """

    h: float = 1.0

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError(f"half-width must be positive, got {self.h}")

    @property
    def H(self) -> float:
        return float(sigmoid(self.h) - sigmoid(-self.h))

    def eval(self, z):
        scalar = np.isscalar(z) or np.ndim(z) == 0
        z = np.asarray(z, dtype=float)
        with np.errstate(over="ignore"):  # cosh overflow far out just gives 0
            out = math.sinh(self.h) / (self.H * (np.cosh(z) + math.cosh(self.h)))
        out = np.minimum(out, 1.0)  # trim the 1-ulp round-up at the peak
        return _maybe_scalar(out, scalar)


def sigmoid_pair_eval(pair: SigmoidPair, z):
    return pair.eval(z)


@dataclass(frozen=True)
class LogQuadEnvelope:
    """Quadratic-in-z upper bound on the log magnitude of a kernel.

    Guarantees log|rho^(k)(z)| <= A z^2 + B on the grid it was fitted on.
    """

    A: float
    B: float

    def log_bound(self, z):
        z = np.asarray(z, dtype=float)
        return self.A * z * z + self.B


def fit_envelope(
    k: int,
    grid_size: int = 10_001,
    safety: float = 1.05,
    max_order: int = DEFAULT_MAX_ORDER,
) -> LogQuadEnvelope:
    """Fit a dominating log-quadratic envelope for rho^(k) on (-1, 1).

    For orders within reach, least-squares fits a parabola in z^2 to the log
    magnitude (underflowed points excluded), shifts the intercept up until it
    dominates every grid point, then inflates the bound by ``safety``.
    Orders listed in PRESET_ENVELOPES return their configured constants.
    """
    if safety < 1.0:
        raise ValueError(f"safety must be >= 1, got {safety}")
    if k in PRESET_ENVELOPES:
        return LogQuadEnvelope(*PRESET_ENVELOPES[k])
    if k > max_order:
        raise NotEvaluable(f"order {k} not evaluable and no preset constants exist")
    kernel = build_kernel(k, max_order)
    z = np.linspace(-1.0, 1.0, grid_size + 2)[1:-1]
    vals = np.abs(kernel.eval(z))
    mask = vals > 0.0
    y = np.log(vals[mask])
    z2 = z[mask] ** 2
    design = np.column_stack([z2, np.ones_like(z2)])
    (a_ls, _), *_ = np.linalg.lstsq(design, y, rcond=None)
    a = max(float(a_ls), 1e-6)
    b = float(np.max(y - a * z2)) + math.log(safety)
    return LogQuadEnvelope(A=a, B=b)
