"""Datasets: benchmark generators, 8-bit image container IO, normalization,
and label encoding."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import BadMagic, CountMismatch, NonFiniteInput, TruncatedFile

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


@dataclass(frozen=True)
class NormalizationSpec:
    """Per-coordinate affine map recorded at training time.

    Applies x -> x * scale - offset, so test data reuses the training
    statistics verbatim.
    """

    offset: np.ndarray
    scale: np.ndarray

    def __post_init__(self):
        if np.any(self.scale == 0):
            raise ValueError("scales must be nonzero")

    def apply(self, images: np.ndarray) -> np.ndarray:
        x = np.asarray(images, dtype=float).reshape(len(images), -1)
        return x * self.scale - self.offset


@dataclass(frozen=True)
class LabelCodebook:
    """One code vector per class plus the scheme that produced it."""

    codes: np.ndarray  # (n_classes, d_out), entries in {0, 1}
    scheme: str

    def __post_init__(self):
        if len(np.unique(self.codes, axis=0)) != len(self.codes):
            raise ValueError("codes must be pairwise distinct")


@dataclass
class LabeledDataset:
    """N input vectors with d_out-dimensional targets.

    ``input_radius`` is the largest Euclidean norm over the stored
    (post-normalization) inputs.  ``labels`` carries integer class labels for
    classification tasks, ``norm`` the normalization applied to raw inputs.
    """

    inputs: np.ndarray   # (N, m)
    targets: np.ndarray  # (N, d_out)
    labels: np.ndarray | None = None
    norm: NormalizationSpec | None = None
    input_radius: float = field(init=False)

    def __post_init__(self):
        self.inputs = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        self.targets = np.atleast_2d(np.asarray(self.targets, dtype=float))
        if self.targets.shape[0] != self.inputs.shape[0]:
            raise ValueError(
                f"{self.inputs.shape[0]} inputs vs {self.targets.shape[0]} targets"
            )
        if self.inputs.shape[0] < 1 or self.inputs.shape[1] < 1 or self.targets.shape[1] < 1:
            raise ValueError("need N >= 1, m >= 1, d_out >= 1")
        if not (np.isfinite(self.inputs).all() and np.isfinite(self.targets).all()):
            raise NonFiniteInput("dataset rows must be finite")
        self.input_radius = float(np.linalg.norm(self.inputs, axis=1).max())

    @property
    def n(self) -> int:
        return self.inputs.shape[0]

    @property
    def m(self) -> int:
        return self.inputs.shape[1]

    @property
    def d_out(self) -> int:
        return self.targets.shape[1]


def gen_tsc(n_points: int = 201) -> LabeledDataset:
    """Infinitely wiggling sine arc sin(2*pi/x) with value 0 pinned at x = 0.

    Inputs are equidistant on [-1, 1]; an odd n_points puts 0 on the grid.
    """
    if n_points < 2:
        raise ValueError("need at least two points")
    x = np.linspace(-1.0, 1.0, n_points)
    safe = np.where(x != 0.0, x, 1.0)
    y = np.where(x != 0.0, np.sin(2.0 * np.pi / safe), 0.0)
    return LabeledDataset(inputs=x.reshape(-1, 1), targets=y.reshape(-1, 1))


def gen_sine(n_points: int = 201) -> LabeledDataset:
    """Single-frequency sine sin(2*pi*x) on [-1, 1], the heatmap demo curve."""
    x = np.linspace(-1.0, 1.0, n_points)
    return LabeledDataset(inputs=x.reshape(-1, 1), targets=np.sin(2.0 * np.pi * x).reshape(-1, 1))


def gen_boolean() -> LabeledDataset:
    """Four binary points mapped to (x AND y, x OR y, x XOR y)."""
    inputs = np.array([[0, 0], [0, 1], [1, 0], [1, 1]], dtype=float)
    x, y = inputs[:, 0].astype(int), inputs[:, 1].astype(int)
    targets = np.column_stack([x & y, x | y, x ^ y]).astype(float)
    return LabeledDataset(inputs=inputs, targets=targets)


def _read_exact(f, count, path):
    buf = f.read(count)
    if len(buf) != count:
        raise TruncatedFile(f"{path}: expected {count} more bytes, got {len(buf)}")
    return buf


def load_idx(images_path, labels_path):
    """Read the big-endian 8-bit image container pair.

    Returns (images uint8 (N, rows, cols), labels uint8 (N,)).
    """
    with open(images_path, "rb") as f:
        magic, n, rows, cols = struct.unpack(">IIII", _read_exact(f, 16, images_path))
        if magic != IMAGE_MAGIC:
            raise BadMagic(f"{images_path}: magic 0x{magic:08x}, expected 0x{IMAGE_MAGIC:08x}")
        raw = _read_exact(f, n * rows * cols, images_path)
        images = np.frombuffer(raw, dtype=np.uint8).reshape(n, rows, cols)
    with open(labels_path, "rb") as f:
        magic, n_labels = struct.unpack(">II", _read_exact(f, 8, labels_path))
        if magic != LABEL_MAGIC:
            raise BadMagic(f"{labels_path}: magic 0x{magic:08x}, expected 0x{LABEL_MAGIC:08x}")
        labels = np.frombuffer(_read_exact(f, n_labels, labels_path), dtype=np.uint8)
    if n_labels != n:
        raise CountMismatch(f"{n} images but {n_labels} labels")
    return images, labels


def save_idx(images: np.ndarray, labels: np.ndarray, images_path, labels_path):
    """Write the container pair in the exact byte layout load_idx reads."""
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    n, rows, cols = images.shape
    if len(labels) != n:
        raise CountMismatch(f"{n} images but {len(labels)} labels")
    with open(images_path, "wb") as f:
        f.write(struct.pack(">IIII", IMAGE_MAGIC, n, rows, cols))
        f.write(images.tobytes())
    with open(labels_path, "wb") as f:
        f.write(struct.pack(">II", LABEL_MAGIC, n))
        f.write(labels.tobytes())


def normalize(images: np.ndarray, policy: str = "scale_center"):
    """Map raw byte images to training inputs and record the map.

    "scale_center" scales bytes to [0, 1] then subtracts the per-coordinate
    mean of this batch; "scale_only" stops after scaling.  Returns
    (inputs (N, m), NormalizationSpec).
    """
    x = np.asarray(images, dtype=float).reshape(len(images), -1)
    m = x.shape[1]
    scale = np.full(m, 1.0 / 255.0)
    if policy == "scale_center":
        offset = (x * scale).mean(axis=0)
    elif policy == "scale_only":
        offset = np.zeros(m)
    else:
        raise ValueError(f"unknown normalization policy {policy!r}")
    spec = NormalizationSpec(offset=offset, scale=scale)
    return x * scale - offset, spec


def make_codebook(scheme: str, n_classes: int, d_out: int | None = None, seed: int = 0) -> LabelCodebook:
    """Build a codebook: identity rows, or fair-coin random binary codes.

    Random codes are redrawn whenever a draw duplicates an earlier code or
    has all bits equal.
    """
    if scheme == "one_hot":
        return LabelCodebook(codes=np.eye(n_classes), scheme="one_hot")
    if scheme == "random_binary":
        d = n_classes if d_out is None else d_out
        rng = np.random.default_rng(seed)
        codes: list[tuple] = []
        while len(codes) < n_classes:
            c = rng.integers(0, 2, size=d)
            if c.min() == c.max() or tuple(c) in codes:
                continue
            codes.append(tuple(c))
        return LabelCodebook(codes=np.array(codes, dtype=float), scheme="random_binary")
    raise ValueError(f"unknown codebook scheme {scheme!r}")


def encode_labels(labels: np.ndarray, codebook: LabelCodebook) -> np.ndarray:
    """Target matrix whose row n is the code of label n."""
    labels = np.asarray(labels, dtype=int)
    if labels.min() < 0 or labels.max() >= len(codebook.codes):
        raise ValueError("label outside codebook range")
    return codebook.codes[labels]


def build_digits_dataset(
    images_path,
    labels_path,
    codebook: LabelCodebook,
    n_examples: int | None = None,
    seed: int = 0,
    policy: str = "scale_center",
    norm: NormalizationSpec | None = None,
) -> LabeledDataset:
    """Load, optionally subsample, normalize, and encode an image dataset.

    Pass the training set's NormalizationSpec as ``norm`` when building test
    data so the training statistics are reused instead of recomputed.
    """
    images, labels = load_idx(images_path, labels_path)
    if n_examples is not None and n_examples < len(images):
        idx = np.random.default_rng(seed).choice(len(images), size=n_examples, replace=False)
        images, labels = images[idx], labels[idx]
    if norm is None:
        inputs, norm = normalize(images, policy)
    else:
        inputs = norm.apply(images)
    return LabeledDataset(
        inputs=inputs,
        targets=encode_labels(labels, codebook),
        labels=np.asarray(labels, dtype=int),
        norm=norm,
    )


def save_dataset_csv(dataset: LabeledDataset, path):
    """Plain CSV export: input coordinates then target coordinates per row."""
    header = ",".join(
        [f"x{i}" for i in range(dataset.m)] + [f"y{i}" for i in range(dataset.d_out)]
    )
    rows = np.column_stack([dataset.inputs, dataset.targets])
    np.savetxt(path, rows, delimiter=",", header=header, comments="")
