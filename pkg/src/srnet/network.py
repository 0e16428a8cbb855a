"""Single-hidden-layer models, losses, gradients, and the pair-to-unit
expansion used before backpropagation training."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ShapeMismatch
from .kernels import SigmoidPair, sigmoid
from .samplers import SampleBatch

CE_CLAMP = 1e-12  # sigmoid saturation would otherwise produce infinite logs


def design_matrix(hidden_a: np.ndarray, hidden_b: np.ndarray, pair: SigmoidPair, X: np.ndarray) -> np.ndarray:
    """N x (J+1) feature matrix: column j is phi(a_j . x - b_j), last column ones."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    phi = pair.eval(X @ np.atleast_2d(hidden_a).T - np.asarray(hidden_b, dtype=float))
    return np.column_stack([phi, np.ones(len(X))])


@dataclass
class SigmoidPairNetwork:
    """Sum of J weighted pair activations plus an output bias row.

    ``output_weights`` has shape (J+1, d_out); the last row is the bias.
    """

    hidden_a: np.ndarray  # (J, m)
    hidden_b: np.ndarray  # (J,)
    pair: SigmoidPair
    output_weights: np.ndarray  # (J+1, d_out)
    output_activation: str = "linear"

    def __post_init__(self):
        self.hidden_a = np.atleast_2d(np.asarray(self.hidden_a, dtype=float))
        self.hidden_b = np.asarray(self.hidden_b, dtype=float).ravel()
        self.output_weights = np.atleast_2d(np.asarray(self.output_weights, dtype=float))
        j = len(self.hidden_b)
        if j < 1 or self.hidden_a.shape[0] != j or self.output_weights.shape[0] != j + 1:
            raise ShapeMismatch("hidden parameter and output weight shapes disagree")
        if self.output_activation not in ("linear", "sigmoid"):
            raise ValueError(f"unknown output activation {self.output_activation!r}")
        if not all(np.isfinite(p).all() for p in (self.hidden_a, self.hidden_b, self.output_weights)):
            raise ValueError("parameters must be finite")

    @property
    def n_pairs(self) -> int:
        return len(self.hidden_b)

    @property
    def m(self) -> int:
        return self.hidden_a.shape[1]

    @property
    def d_out(self) -> int:
        return self.output_weights.shape[1]

    def scores(self, X) -> np.ndarray:
        """Pre-activation outputs; used for code-space decoding."""
        single = np.ndim(X) == 1
        phi = design_matrix(self.hidden_a, self.hidden_b, self.pair, X)
        out = phi @ self.output_weights
        return out[0] if single else out

    def forward(self, X) -> np.ndarray:
        out = self.scores(X)
        return sigmoid(out) if self.output_activation == "sigmoid" else out

    @classmethod
    def from_samples(cls, samples: SampleBatch, d_out: int, pair: SigmoidPair,
                     output_activation: str = "linear") -> "SigmoidPairNetwork":
        w = np.zeros((len(samples) + 1, d_out))
        return cls(hidden_a=samples.a, hidden_b=samples.b, pair=pair,
                   output_weights=w, output_activation=output_activation)


@dataclass
class SigmoidUnitNetwork:
    """Plain sigmoid hidden units: unit i computes sigmoid(v_i . x + c_i).

    ``output_weights`` has shape (U+1, d_out) with the bias row last.  ``h``
    records the pair half-width a network was expanded from (kept for model
    headers; plain nets store it too).
    """

    weights: np.ndarray  # (U, m)
    biases: np.ndarray   # (U,)
    output_weights: np.ndarray  # (U+1, d_out)
    output_activation: str = "linear"
    h: float = 1.0

    def __post_init__(self):
        self.weights = np.atleast_2d(np.asarray(self.weights, dtype=float))
        self.biases = np.asarray(self.biases, dtype=float).ravel()
        self.output_weights = np.atleast_2d(np.asarray(self.output_weights, dtype=float))
        u = len(self.biases)
        if u < 1 or self.weights.shape[0] != u or self.output_weights.shape[0] != u + 1:
            raise ShapeMismatch("unit parameter shapes disagree")
        if self.output_activation not in ("linear", "sigmoid"):
            raise ValueError(f"unknown output activation {self.output_activation!r}")
        if not all(np.isfinite(p).all() for p in (self.weights, self.biases, self.output_weights)):
            raise ValueError("parameters must be finite")

    @property
    def n_units(self) -> int:
        return len(self.biases)

    @property
    def m(self) -> int:
        return self.weights.shape[1]

    @property
    def d_out(self) -> int:
        return self.output_weights.shape[1]

    def hidden(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return sigmoid(X @ self.weights.T + self.biases)

    def scores(self, X) -> np.ndarray:
        single = np.ndim(X) == 1
        h = self.hidden(X)
        out = h @ self.output_weights[:-1] + self.output_weights[-1]
        return out[0] if single else out

    def forward(self, X) -> np.ndarray:
        out = self.scores(X)
        return sigmoid(out) if self.output_activation == "sigmoid" else out


def forward(net, x) -> np.ndarray:
    return net.forward(x)


def expand_pairs(net: SigmoidPairNetwork) -> SigmoidUnitNetwork:
    """Rewrite each pair as two plain sigmoid units with opposite output signs.

    phi(a.x - b) = (sigmoid(a.x + (h - b)) - sigmoid(a.x - (h + b))) / H, so
    unit (j, +) gets bias -(b_j - h) and output row +w_j / H, unit (j, -)
    gets bias -(b_j + h) and output row -w_j / H.  Forward outputs match the
    pair network on any input.
    """
    h, H = net.pair.h, net.pair.H
    v = np.vstack([net.hidden_a, net.hidden_a])
    c = np.concatenate([-(net.hidden_b - h), -(net.hidden_b + h)])
    w_pairs = net.output_weights[:-1]
    w = np.vstack([w_pairs / H, -w_pairs / H, net.output_weights[-1:]])
    return SigmoidUnitNetwork(weights=v, biases=c, output_weights=w,
                              output_activation=net.output_activation, h=h)


def loss(pred: np.ndarray, target: np.ndarray, kind: str) -> float:
    """Root-mean-square error over all entries, or mean-per-example
    cross-entropy summed across output dimensions (with clamped logs)."""
    pred = np.atleast_2d(np.asarray(pred, dtype=float))
    target = np.atleast_2d(np.asarray(target, dtype=float))
    if pred.shape != target.shape:
        raise ShapeMismatch(f"prediction {pred.shape} vs target {target.shape}")
    if kind == "rmse":
        return float(np.sqrt(np.mean((pred - target) ** 2)))
    if kind == "cross_entropy":
        p = np.clip(pred, CE_CLAMP, 1.0 - CE_CLAMP)
        per_example = -(target * np.log(p) + (1.0 - target) * np.log(1.0 - p)).sum(axis=1)
        return float(per_example.mean())
    raise ValueError(f"unknown loss kind {kind!r}")


@dataclass
class NetGradients:
    """Gradient arrays mirroring SigmoidUnitNetwork parameters."""

    weights: np.ndarray
    biases: np.ndarray
    output_weights: np.ndarray


def gradient(net: SigmoidUnitNetwork, X: np.ndarray, Y: np.ndarray, kind: str) -> NetGradients:
    """Analytic gradient of the batch loss with respect to every parameter."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n = len(X)
    u = net.n_units
    hid = net.hidden(X)
    s = hid @ net.output_weights[:-1] + net.output_weights[-1]
    p = sigmoid(s) if net.output_activation == "sigmoid" else s
    if p.shape != Y.shape:
        raise ShapeMismatch(f"prediction {p.shape} vs target {Y.shape}")

    if kind == "rmse":
        r = p - Y
        value = np.sqrt(np.mean(r**2))
        if value == 0.0:
            zero = NetGradients(
                weights=np.zeros_like(net.weights),
                biases=np.zeros_like(net.biases),
                output_weights=np.zeros_like(net.output_weights),
            )
            return zero
        gp = r / (r.size * value)
        gs = gp * p * (1.0 - p) if net.output_activation == "sigmoid" else gp
    elif kind == "cross_entropy":
        if net.output_activation == "sigmoid":
            gs = (p - Y) / n
        else:
            pc = np.clip(p, CE_CLAMP, 1.0 - CE_CLAMP)
            gs = (pc - Y) / (pc * (1.0 - pc)) / n
    else:
        raise ValueError(f"unknown loss kind {kind!r}")

    g_wu = hid.T @ gs
    g_w0 = gs.sum(axis=0)
    gh = gs @ net.output_weights[:-1].T
    gz = gh * hid * (1.0 - hid)
    return NetGradients(
        weights=gz.T @ X,
        biases=gz.sum(axis=0),
        output_weights=np.vstack([g_wu, g_w0]),
    )


def classification_error(pred: np.ndarray, targets: np.ndarray, codes: np.ndarray | None = None) -> float:
    """Fraction of rows whose nearest code differs from their target code.

    ``codes`` defaults to the distinct target rows; pass the full codebook
    when the batch may not contain every class.  For one-hot codes this is
    plain argmax decoding.
    """
    pred = np.atleast_2d(np.asarray(pred, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    if pred.shape != targets.shape:
        raise ShapeMismatch(f"prediction {pred.shape} vs target {targets.shape}")
    if codes is None:
        codes = np.unique(targets, axis=0)
    codes = np.atleast_2d(np.asarray(codes, dtype=float))
    d2 = ((pred[:, None, :] - codes[None, :, :]) ** 2).sum(axis=2)
    decoded = codes[np.argmin(d2, axis=1)]
    return float(1.0 - np.all(decoded == targets, axis=1).mean())


# --------------------------------------------------------------------------
# flat parameter vector helpers used by the trainers

def pack_params(net: SigmoidUnitNetwork) -> np.ndarray:
    return np.concatenate([net.weights.ravel(), net.biases, net.output_weights.ravel()])


def unpack_params(net: SigmoidUnitNetwork, theta: np.ndarray) -> SigmoidUnitNetwork:
    u, m, d = net.n_units, net.m, net.d_out
    v = theta[: u * m].reshape(u, m)
    c = theta[u * m : u * m + u]
    w = theta[u * m + u :].reshape(u + 1, d)
    return replace(net, weights=v, biases=c.copy(), output_weights=w)


def pack_gradients(g: NetGradients) -> np.ndarray:
    return np.concatenate([g.weights.ravel(), g.biases, g.output_weights.ravel()])


# --------------------------------------------------------------------------
# training traces

@dataclass
class TraceRecord:
    iteration: int
    loss: float
    train_error: float | None = None
    test_error: float | None = None
    seconds: float = 0.0


@dataclass
class TrainTrace:
    records: list[TraceRecord] = field(default_factory=list)

    def append(self, record: TraceRecord):
        if self.records and record.iteration <= self.records[-1].iteration:
            raise ValueError("iteration indices must be strictly increasing")
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def losses(self) -> np.ndarray:
        return np.array([r.loss for r in self.records])

    @property
    def final(self) -> TraceRecord:
        return self.records[-1]


TRACE_COLUMNS = ("iter", "loss", "train_error", "test_error", "seconds")


def _fmt(x) -> str:
    return "" if x is None else format(float(x), ".12g")


def write_trace(trace: TrainTrace, path):
    with open(path, "w") as f:
        f.write(",".join(TRACE_COLUMNS) + "\n")
        for r in trace.records:
            f.write(
                f"{r.iteration},{_fmt(r.loss)},{_fmt(r.train_error)},"
                f"{_fmt(r.test_error)},{_fmt(r.seconds)}\n"
            )


def read_trace(path) -> TrainTrace:
    trace = TrainTrace()
    with open(path) as f:
        header = f.readline().strip().split(",")
        if tuple(header) != TRACE_COLUMNS:
            raise ValueError(f"unexpected trace header {header}")
        for line in f:
            parts = line.strip().split(",")
            trace.append(TraceRecord(
                iteration=int(parts[0]),
                loss=float(parts[1]),
                train_error=float(parts[2]) if parts[2] else None,
                test_error=float(parts[3]) if parts[3] else None,
                seconds=float(parts[4]) if parts[4] else 0.0,
            ))
    return trace


# --------------------------------------------------------------------------
# plain-text model files

def save_model(net, path):
    """Header line (kind m width d_out h activation), then one whitespace row
    per hidden unit (weights then offset), then the output weight rows."""
    if isinstance(net, SigmoidPairNetwork):
        kind, width, h = "pair", net.n_pairs, net.pair.h
        hidden = np.column_stack([net.hidden_a, net.hidden_b])
    elif isinstance(net, SigmoidUnitNetwork):
        kind, width, h = "unit", net.n_units, net.h
        hidden = np.column_stack([net.weights, net.biases])
    else:
        raise TypeError(f"cannot serialize {type(net).__name__}")
    with open(path, "w") as f:
        f.write(f"{kind} {net.m} {width} {net.d_out} {format(h, '.17g')} {net.output_activation}\n")
        for row in hidden:
            f.write(" ".join(format(v, ".17g") for v in row) + "\n")
        for row in net.output_weights:
            f.write(" ".join(format(v, ".17g") for v in row) + "\n")


def load_model(path):
    with open(path) as f:
        kind, m, width, d_out, h, activation = f.readline().split()
        m, width, d_out, h = int(m), int(width), int(d_out), float(h)
        rows = [np.array(line.split(), dtype=float) for line in f if line.strip()]
    hidden = np.array(rows[:width])
    w = np.array(rows[width:])
    if hidden.shape != (width, m + 1) or w.shape != (width + 1, d_out):
        raise ValueError(f"malformed model file {path}")
    if kind == "pair":
        return SigmoidPairNetwork(
            hidden_a=hidden[:, :m], hidden_b=hidden[:, m], pair=SigmoidPair(h=h),
            output_weights=w, output_activation=activation,
        )
    if kind == "unit":
        return SigmoidUnitNetwork(
            weights=hidden[:, :m], biases=hidden[:, m], output_weights=w,
            output_activation=activation, h=h,
        )
    raise ValueError(f"unknown model kind {kind!r}")
