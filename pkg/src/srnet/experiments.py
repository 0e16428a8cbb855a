"""Experiment harness: run one (experiment, method, seed) cell to a result
bundle on disk, line bundles up for comparison, and report stage timings.

Methods follow the benchmark's three-way split: "sr" samples hidden
parameters and fits output weights by regression (recording the iteration-0
point unless a training budget is also given), "sbp" starts backpropagation
from sampled hidden parameters with uniformly drawn output weights, and "bp"
starts backpropagation from a fully uniform draw.  SR/SBP use J pairs; every
trained network has 2J plain sigmoid units so methods compare at equal width.

Classification decoding is nearest-code on the pre-activation (code-space)
outputs; sigmoid outputs feed only the cross-entropy loss.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .data import (
    LabeledDataset,
    build_digits_dataset,
    gen_boolean,
    gen_tsc,
    make_codebook,
)
from .errors import ConfigError, IncompatibleMetrics
from .fitting import (
    BatchOptConfig,
    SgdConfig,
    draw_hidden,
    sr_pipeline,
    train_batch,
    train_sgd,
    uniform_init,
)
from .kernels import SigmoidPair
from .network import (
    SigmoidPairNetwork,
    TraceRecord,
    TrainTrace,
    classification_error,
    expand_pairs,
    loss,
    read_trace,
    save_model,
    write_trace,
)
from .plots import save_trace_figure

EXPERIMENTS = ("tsc", "boolean", "digits")
METHODS = ("sr", "sbp", "bp")
SAMPLERS = ("ar", "ar-transformed", "annealed")

# per-experiment defaults: pairs J, sampler, trainer, budget, proposal half-width
_DEFAULTS = {
    "tsc": dict(pairs=100, sampler="ar", optimizer="batch", iters=500, a_max=40.0,
                loss="rmse", activation="linear", trace_every=1),
    "boolean": dict(pairs=10, sampler="ar", optimizer="batch", iters=300, a_max=10.0,
                    loss="cross_entropy", activation="sigmoid", trace_every=1),
    "digits": dict(pairs=150, sampler="annealed", optimizer="sgd", iters=20_000, a_max=40.0,
                   loss="cross_entropy", activation="sigmoid", trace_every=250),
}


@dataclass
class ExperimentConfig:
    experiment: str
    method: str
    seed: int
    out_dir: Path
    pairs: int | None = None
    sampler: str | None = None
    iters: int | None = None
    h: float = 1.0
    a_max: float | None = None
    envelope_safety: float = 1.2
    beta_shapes: tuple[float, float] = (100.0, 3.0)
    learning_rate: float = 0.05
    batch_size: int = 32
    trace_every: int | None = None
    tsc_points: int = 201
    train_n: int = 2000
    test_n: int = 1000
    codebook: str = "one_hot"
    images: str | None = None
    labels: str | None = None
    test_images: str | None = None
    test_labels: str | None = None

    def resolved(self) -> "ExperimentConfig":
        """Fill experiment-dependent defaults and validate the combination."""
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if self.seed is None:
            raise ConfigError("a seed is mandatory; every run must be reproducible")
        d = _DEFAULTS[self.experiment]
        cfg = ExperimentConfig(**{f.name: getattr(self, f.name) for f in fields(self)})
        cfg.out_dir = Path(cfg.out_dir)
        cfg.pairs = d["pairs"] if cfg.pairs is None else cfg.pairs
        cfg.sampler = d["sampler"] if cfg.sampler is None else cfg.sampler
        cfg.a_max = d["a_max"] if cfg.a_max is None else cfg.a_max
        cfg.trace_every = d["trace_every"] if cfg.trace_every is None else cfg.trace_every
        if cfg.iters is None:
            cfg.iters = 0 if cfg.method == "sr" else d["iters"]
        if cfg.method == "bp" and self.sampler is not None:
            raise ConfigError("bp draws no samples; drop the sampler flag")
        if cfg.sampler not in SAMPLERS:
            raise ConfigError(f"sampler must be one of {SAMPLERS}, got {cfg.sampler!r}")
        if cfg.pairs < 1:
            raise ConfigError("need at least one pair")
        if cfg.experiment == "digits":
            missing = [n for n in ("images", "labels", "test_images", "test_labels")
                       if getattr(cfg, n) is None]
            if missing:
                raise ConfigError(f"digits needs data file flags: {', '.join(missing)}")
        return cfg

    @property
    def loss_kind(self) -> str:
        return _DEFAULTS[self.experiment]["loss"]

    @property
    def activation(self) -> str:
        return _DEFAULTS[self.experiment]["activation"]

    @property
    def optimizer(self) -> str:
        return _DEFAULTS[self.experiment]["optimizer"]


CONFIG_FILE_TYPES = {
    "experiment": str, "method": str, "seed": int, "out_dir": str, "pairs": int,
    "sampler": str, "iters": int, "h": float, "a_max": float,
    "envelope_safety": float, "learning_rate": float, "batch_size": int,
    "trace_every": int, "tsc_points": int, "train_n": int, "test_n": int,
    "codebook": str, "images": str, "labels": str, "test_images": str,
    "test_labels": str, "beta_shapes": str,
}


def read_config_file(path) -> dict:
    """Flat `key = value` lines; '#' starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if key not in CONFIG_FILE_TYPES:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = CONFIG_FILE_TYPES[key](value.strip())
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return values


def parse_beta_shapes(text) -> tuple[float, float]:
    if isinstance(text, tuple):
        return text
    parts = [p for p in str(text).replace(";", ",").split(",") if p.strip()]
    if len(parts) != 2:
        raise ConfigError(f"beta shapes need two comma-separated numbers, got {text!r}")
    return float(parts[0]), float(parts[1])


def _load_datasets(cfg: ExperimentConfig, data_seed: int):
    """Returns (train, test, codes); test is None when the experiment has no
    held-out split and codes is None for regression."""
    if cfg.experiment == "tsc":
        return gen_tsc(cfg.tsc_points), gen_tsc(1001), None
    if cfg.experiment == "boolean":
        ds = gen_boolean()
        return ds, None, np.unique(ds.targets, axis=0)
    codebook = make_codebook(cfg.codebook, 10, d_out=10, seed=data_seed)
    train = build_digits_dataset(cfg.images, cfg.labels, codebook,
                                 n_examples=cfg.train_n, seed=data_seed)
    test = build_digits_dataset(cfg.test_images, cfg.test_labels, codebook,
                                n_examples=cfg.test_n, seed=data_seed, norm=train.norm)
    return train, test, codebook.codes


def _metrics_fn(cfg: ExperimentConfig, train: LabeledDataset, test, codes):
    """(train_error, test_error) closure; for the curve task the test column
    is the root-mean-square error on a fresh dense grid."""
    if cfg.experiment == "tsc":
        def metrics(net):
            return None, loss(net.forward(test.inputs), test.targets, "rmse")
    elif cfg.experiment == "boolean":
        def metrics(net):
            return classification_error(net.scores(train.inputs), train.targets, codes=codes), None
    else:
        def metrics(net):
            tr = classification_error(net.scores(train.inputs), train.targets, codes=codes)
            te = classification_error(net.scores(test.inputs), test.targets, codes=codes)
            return tr, te
    return metrics


def _write_samples(path, batch):
    with open(path, "w") as f:
        for a_row, b in zip(batch.a, batch.b):
            f.write("\t".join(format(v, ".17g") for v in a_row) + "\t" + format(b, ".17g") + "\n")


def _write_summary(path, entries: dict):
    line = " ".join(f"{k}={v}" for k, v in entries.items())
    Path(path).write_text(line + "\n")
    return line


def read_summary(bundle_dir) -> dict:
    text = (Path(bundle_dir) / "summary.txt").read_text().strip()
    return dict(part.split("=", 1) for part in text.split())


def _write_timing(path, sampling, regression, training):
    with open(path, "w") as f:
        f.write("stage,seconds\n")
        f.write(f"sampling,{sampling:.6f}\n")
        f.write(f"regression,{regression:.6f}\n")
        f.write(f"training,{training:.6f}\n")


def run_experiment(cfg: ExperimentConfig) -> Path:
    """Execute one cell and write the bundle; returns the bundle directory."""
    cfg = cfg.resolved()
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    # all randomness descends from the one seed
    state = np.random.SeedSequence(cfg.seed).generate_state(4)
    sampler_seed, init_seed, train_seed, data_seed = (int(s) for s in state)

    train, test, codes = _load_datasets(cfg, data_seed)
    metrics = _metrics_fn(cfg, train, test, codes)
    kind = cfg.loss_kind
    units = 2 * cfg.pairs
    init_rng = np.random.default_rng(init_seed)
    init_scheme = "gaussian_fanin" if cfg.experiment == "digits" else "interval"

    sampling_seconds = regression_seconds = 0.0
    samples = None
    trace = TrainTrace()

    if cfg.method == "sr":
        result = sr_pipeline(
            train, cfg.pairs, cfg.sampler, h=cfg.h,
            output_activation=cfg.activation, seed=sampler_seed,
            a_max=cfg.a_max, envelope_safety=cfg.envelope_safety,
            beta_shapes=cfg.beta_shapes,
        )
        samples = result.samples
        sampling_seconds = result.sampling_seconds
        regression_seconds = result.regression_seconds
        net = result.net
        if cfg.iters > 0:
            net = expand_pairs(net)
    elif cfg.method == "sbp":
        start = time.perf_counter()
        samples, _ = draw_hidden(
            train, cfg.pairs, cfg.sampler, seed=sampler_seed, a_max=cfg.a_max,
            envelope_safety=cfg.envelope_safety, beta_shapes=cfg.beta_shapes,
        )
        sampling_seconds = time.perf_counter() - start
        pair_net = SigmoidPairNetwork.from_samples(
            samples, train.d_out, SigmoidPair(h=cfg.h), output_activation=cfg.activation)
        net = expand_pairs(pair_net)  # sampled hidden parameters, zero outputs
        drawn = uniform_init(train.m, units, train.d_out, init_rng,
                             scheme=init_scheme, output_activation=cfg.activation, h=cfg.h)
        net.output_weights = drawn.output_weights
    else:
        net = uniform_init(train.m, units, train.d_out, init_rng,
                           scheme=init_scheme, output_activation=cfg.activation, h=cfg.h)

    training_seconds = 0.0
    if cfg.method != "sr" or cfg.iters > 0:
        start = time.perf_counter()
        if cfg.optimizer == "batch":
            opt = BatchOptConfig(max_iters=cfg.iters)
            net, trace = train_batch(net, train.inputs, train.targets, kind, opt, metrics)
        else:
            opt = SgdConfig(learning_rate=cfg.learning_rate, batch_size=cfg.batch_size,
                            max_iters=cfg.iters, seed=train_seed, trace_every=cfg.trace_every)
            net, trace = train_sgd(net, train.inputs, train.targets, kind, opt, metrics)
        training_seconds = time.perf_counter() - start
    else:
        value = loss(net.forward(train.inputs), train.targets, kind)
        tr_err, te_err = metrics(net)
        trace.append(TraceRecord(0, value, tr_err, te_err, 0.0))

    write_trace(trace, out / "trace.csv")
    save_model(net, out / "model.txt")
    if samples is not None:
        _write_samples(out / "samples.tsv", samples)
    _write_timing(out / "timing.csv", sampling_seconds, regression_seconds, training_seconds)
    _write_config_echo(cfg, out / "config.txt")
    save_trace_figure(out / "trace.png", {cfg.method: trace}, loss_label=kind)

    first, last = trace.records[0], trace.final
    summary = {
        "experiment": cfg.experiment,
        "method": cfg.method,
        "seed": cfg.seed,
        "pairs": cfg.pairs,
        "units": units,
        "sampler": cfg.sampler if cfg.method != "bp" else "-",
        "iters": last.iteration,
        "initial_loss": format(first.loss, ".10g"),
        "final_loss": format(last.loss, ".10g"),
        "initial_train_error": "" if first.train_error is None else format(first.train_error, ".10g"),
        "final_train_error": "" if last.train_error is None else format(last.train_error, ".10g"),
        "initial_test_error": "" if first.test_error is None else format(first.test_error, ".10g"),
        "final_test_error": "" if last.test_error is None else format(last.test_error, ".10g"),
        "proposals": 0 if samples is None else samples.proposals,
        "sampling_seconds": format(sampling_seconds, ".4f"),
        "regression_seconds": format(regression_seconds, ".4f"),
        "training_seconds": format(training_seconds, ".4f"),
    }
    _write_summary(out / "summary.txt", summary)
    return out


def _write_config_echo(cfg: ExperimentConfig, path):
    lines = []
    for f in sorted(fields(cfg), key=lambda f: f.name):
        value = getattr(cfg, f.name)
        if f.name == "beta_shapes":
            value = f"{value[0]:g},{value[1]:g}"
        lines.append(f"{f.name} = {value}")
    Path(path).write_text("\n".join(lines) + "\n")


def _bundle_metrics(trace: TrainTrace) -> dict:
    """metric name -> {iteration: value} for the columns this trace filled;
    blank and NaN entries both count as absent."""
    out: dict[str, dict[int, float]] = {}
    for name, attr in (("loss", "loss"), ("train_error", "train_error"),
                       ("test_error", "test_error")):
        col = {r.iteration: getattr(r, attr) for r in trace.records
               if getattr(r, attr) is not None and not np.isnan(getattr(r, attr))}
        if col:
            out[name] = col
    return out


def compare_runs(bundle_dirs, out_path=None):
    """Align ≥2 bundles into long-format rows (method, iter, metric, value).

    Iterations are unioned, with blanks where a bundle has no record; the
    bundles must share at least one metric.
    """
    if len(bundle_dirs) < 2:
        raise ConfigError("need at least two run bundles to compare")
    labeled = []
    for d in bundle_dirs:
        summary = read_summary(d)
        labeled.append((summary["method"], _bundle_metrics(read_trace(Path(d) / "trace.csv"))))
    shared = set.intersection(*(set(m) for _, m in labeled))
    if not shared:
        raise IncompatibleMetrics("run bundles share no metric")
    all_metrics = sorted(set.union(*(set(m) for _, m in labeled)))
    all_iters = sorted({i for _, m in labeled for col in m.values() for i in col})
    rows = [("method", "iter", "metric", "value")]
    for method, metric_map in labeled:
        for metric in all_metrics:
            col = metric_map.get(metric, {})
            for it in all_iters:
                value = col.get(it)
                rows.append((method, str(it), metric, "" if value is None else format(value, ".12g")))
    text = "\n".join(",".join(r) for r in rows) + "\n"
    if out_path is not None:
        Path(out_path).write_text(text)
    return text


def timing_report(bundle_dirs, out_path=None):
    """Long-format stage timings: (run, stage, seconds) per bundle."""
    rows = [("run", "stage", "seconds")]
    for d in bundle_dirs:
        name = Path(d).name
        for line in (Path(d) / "timing.csv").read_text().splitlines()[1:]:
            stage, seconds = line.split(",")
            rows.append((name, stage, seconds))
    text = "\n".join(",".join(r) for r in rows) + "\n"
    if out_path is not None:
        Path(out_path).write_text(text)
    return text
