"""Dataset loading, generation, scaling, and mini-batch sampling.

Provides the training inputs for both the SGD benchmarks (dense binary
classification data) and the genetic experiments (small labelled glyph
images standing in for MNIST digits at desk scale).
"""

from __future__ import annotations

import csv
import struct
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DenseDataset",
    "MiniBatch",
    "ImageSample",
    "load_libsvm",
    "write_libsvm",
    "load_idx",
    "export_csv",
    "scale_features",
    "synth_classification",
    "synth_glyphs",
    "glyph_stencil",
    "sample_minibatch",
]


@dataclass(frozen=True)
class DenseDataset:
    """Row-major feature matrix with one label per row.

    Labels are {0,1} for binary tasks and 0-9 for digit tasks. Instances
    are immutable after construction and safe to share across workers.
    """

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        features = np.ascontiguousarray(np.asarray(self.features, dtype=np.float64))
        labels = np.asarray(self.labels, dtype=np.int64)
        if features.ndim != 2:
            raise ValueError(f"features must be 2-D, got shape {features.shape}")
        if labels.ndim != 1 or labels.shape[0] != features.shape[0]:
            raise ValueError(
                f"labels length {labels.shape} does not match {features.shape[0]} rows"
            )
        features.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    @property
    def n_dims(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class MiniBatch:
    """Indices into a DenseDataset selected for one gradient step."""

    row_indices: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.row_indices, dtype=np.int64)
        idx.setflags(write=False)
        object.__setattr__(self, "row_indices", idx)

    @property
    def size(self) -> int:
        return self.row_indices.shape[0]


@dataclass(frozen=True)
class ImageSample:
    """A size x size grayscale image with pixel values in [0,1] and a digit label."""

    pixels: np.ndarray
    label: int

    def __post_init__(self):
        pixels = np.asarray(self.pixels, dtype=np.float64)
        if pixels.ndim != 2:
            raise ValueError(f"pixels must be 2-D, got shape {pixels.shape}")
        if pixels.size and (pixels.min() < 0.0 or pixels.max() > 1.0):
            raise ValueError("pixel values must lie in [0,1]")
        pixels.setflags(write=False)
        object.__setattr__(self, "pixels", pixels)


def load_libsvm(path) -> DenseDataset:
    """Read a LIBSVM text file into a dense dataset.

    Each line is ``label idx:val idx:val ...`` with 1-based ascending
    indices; absent indices are zero. Labels -1/+1 map to 0/1. The
    dimensionality is the maximum index seen anywhere in the file.
    """
    rows = []  # (label, [(idx, val), ...])
    n_dims = 0
    with open(path, "r", encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            label = _parse_libsvm_label(parts[0], path, lineno)
            pairs = []
            prev_idx = 0
            for token in parts[1:]:
                try:
                    idx_text, val_text = token.split(":", 1)
                    idx = int(idx_text)
                    val = float(val_text)
                except ValueError:
                    raise ValueError(
                        f"{path}:{lineno}: malformed feature token {token!r}"
                    ) from None
                if idx <= prev_idx:
                    raise ValueError(
                        f"{path}:{lineno}: indices must be 1-based ascending, got {idx}"
                    )
                prev_idx = idx
                pairs.append((idx, val))
            n_dims = max(n_dims, prev_idx)
            rows.append((label, pairs))
    if not rows:
        raise ValueError(f"{path}: empty LIBSVM file")
    features = np.zeros((len(rows), n_dims), dtype=np.float64)
    labels = np.empty(len(rows), dtype=np.int64)
    for i, (label, pairs) in enumerate(rows):
        labels[i] = label
        for idx, val in pairs:
            features[i, idx - 1] = val
    return DenseDataset(features, labels)


def _parse_libsvm_label(token: str, path, lineno: int) -> int:
    try:
        value = int(float(token))
    except ValueError:
        raise ValueError(f"{path}:{lineno}: malformed label {token!r}") from None
    if value == -1:
        return 0
    if value in (0, 1):
        return value
    raise ValueError(f"{path}:{lineno}: unsupported label {token!r} (want -1/0/+1)")


def write_libsvm(data: DenseDataset, path) -> None:
    """Write a binary dataset in LIBSVM format; zero features are omitted."""
    with open(path, "w", encoding="ascii") as fh:
        for row, label in zip(data.features, data.labels):
            out = "+1" if label == 1 else "-1"
            nz = np.nonzero(row)[0]
            tokens = [out]
            tokens += [f"{j + 1}:{float(row[j])!r}" for j in nz]
            fh.write(" ".join(tokens) + "\n")


_IDX_IMAGES_MAGIC = 0x00000803
_IDX_LABELS_MAGIC = 0x00000801


def load_idx(images_path, labels_path) -> list[ImageSample]:
    """Read IDX-format image and label files (the MNIST container format).

    Pixel bytes are scaled to [0,1]. Magic numbers and record counts are
    validated; mismatches raise with the offending path.
    """
    with open(images_path, "rb") as fh:
        magic, count, h, w = struct.unpack(">IIII", fh.read(16))
        if magic != _IDX_IMAGES_MAGIC:
            raise ValueError(f"{images_path}: bad IDX image magic {magic:#010x}")
        raw = fh.read(count * h * w)
    if len(raw) != count * h * w:
        raise ValueError(f"{images_path}: truncated image data")
    pixels = np.frombuffer(raw, dtype=np.uint8).reshape(count, h, w) / 255.0
    with open(labels_path, "rb") as fh:
        magic, label_count = struct.unpack(">II", fh.read(8))
        if magic != _IDX_LABELS_MAGIC:
            raise ValueError(f"{labels_path}: bad IDX label magic {magic:#010x}")
        labels = np.frombuffer(fh.read(label_count), dtype=np.uint8)
    if label_count != count or labels.shape[0] != count:
        raise ValueError(
            f"{labels_path}: {label_count} labels for {count} images"
        )
    return [ImageSample(pixels[i], int(labels[i])) for i in range(count)]


def export_csv(data: DenseDataset, path) -> None:
    """Write a dataset as CSV with header f0..f{d-1},label.

    Floats are written with repr so re-parsing recovers exact values and
    repeated exports of the same dataset are byte-identical.
    """
    with open(path, "w", encoding="ascii", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f{j}" for j in range(data.n_dims)] + ["label"])
        for row, label in zip(data.features, data.labels):
            writer.writerow([repr(float(v)) for v in row] + [int(label)])


def scale_features(data: DenseDataset) -> DenseDataset:
    """Rescale every feature column into [-1, 1]; constant columns become 0."""
    if data.n_rows < 1:
        raise ValueError("cannot scale an empty dataset")
    lo = data.features.min(axis=0)
    hi = data.features.max(axis=0)
    span = hi - lo
    flat = span == 0
    safe_span = np.where(flat, 1.0, span)
    scaled = 2.0 * (data.features - lo) / safe_span - 1.0
    scaled[:, flat] = 0.0
    return DenseDataset(scaled, data.labels)


def synth_classification(n: int, d: int, margin: float, seed: int) -> DenseDataset:
    """Two Gaussian clusters separated by `margin` along a random unit direction.

    Labels are 0/1 by cluster and balanced to within one sample; rows are
    shuffled. Pure function of the seed.
    """
    if n < 2:
        raise ValueError(f"need at least 2 samples, got {n}")
    if d < 1:
        raise ValueError(f"need at least 1 feature, got {d}")
    if margin < 0:
        raise ValueError(f"margin must be non-negative, got {margin}")
    rng = np.random.default_rng(seed)
    direction = rng.standard_normal(d)
    direction /= np.linalg.norm(direction)
    n_pos = n // 2
    n_neg = n - n_pos
    neg = rng.standard_normal((n_neg, d)) - (margin / 2.0) * direction
    pos = rng.standard_normal((n_pos, d)) + (margin / 2.0) * direction
    features = np.vstack([neg, pos])
    labels = np.concatenate([np.zeros(n_neg, dtype=np.int64), np.ones(n_pos, dtype=np.int64)])
    order = rng.permutation(n)
    return DenseDataset(features[order], labels[order])


# 8x8 binary stencils for the digits 0-9; the base resolution for synth_glyphs.
_STENCILS = {
    0: (
        ".XXXXXX.",
        "XX....XX",
        "XX....XX",
        "XX....XX",
        "XX....XX",
        "XX....XX",
        "XX....XX",
        ".XXXXXX.",
    ),
    1: (
        "...XX...",
        "..XXX...",
        ".X.XX...",
        "...XX...",
        "...XX...",
        "...XX...",
        "...XX...",
        ".XXXXXX.",
    ),
    2: (
        ".XXXXXX.",
        "XX....XX",
        "......XX",
        ".....XX.",
        "...XX...",
        ".XX.....",
        "XX......",
        "XXXXXXXX",
    ),
    3: (
        ".XXXXXX.",
        "......XX",
        "......XX",
        "..XXXXX.",
        "......XX",
        "......XX",
        "XX....XX",
        ".XXXXXX.",
    ),
    4: (
        "....XXX.",
        "...XXXX.",
        "..XX.XX.",
        ".XX..XX.",
        "XX...XX.",
        "XXXXXXXX",
        ".....XX.",
        ".....XX.",
    ),
    5: (
        "XXXXXXXX",
        "XX......",
        "XX......",
        "XXXXXXX.",
        "......XX",
        "......XX",
        "XX....XX",
        ".XXXXXX.",
    ),
    6: (
        ".XXXXXX.",
        "XX......",
        "XX......",
        "XXXXXXX.",
        "XX....XX",
        "XX....XX",
        "XX....XX",
        ".XXXXXX.",
    ),
    7: (
        "XXXXXXXX",
        "......XX",
        ".....XX.",
        "....XX..",
        "...XX...",
        "..XX....",
        "..XX....",
        "..XX....",
    ),
    8: (
        ".XXXXXX.",
        "XX....XX",
        "XX....XX",
        ".XXXXXX.",
        "XX....XX",
        "XX....XX",
        "XX....XX",
        ".XXXXXX.",
    ),
    9: (
        ".XXXXXX.",
        "XX....XX",
        "XX....XX",
        "XX....XX",
        ".XXXXXXX",
        "......XX",
        "......XX",
        ".XXXXXX.",
    ),
}


def glyph_stencil(digit: int, size: int) -> np.ndarray:
    """Binary size x size stencil for a digit, nearest-neighbour upscaled from 8x8."""
    if size < 8:
        raise ValueError(f"glyph size must be >= 8, got {size}")
    base = np.array(
        [[1.0 if ch == "X" else 0.0 for ch in row] for row in _STENCILS[digit]]
    )
    idx = (np.arange(size) * 8) // size
    return base[np.ix_(idx, idx)]


def synth_glyphs(n_per_class: int, size: int, noise: float, seed: int) -> list[ImageSample]:
    """Generate labelled digit glyphs with per-pixel uniform noise.

    Produces exactly n_per_class samples of each digit 0-9 (shuffled
    deterministically). `noise` is the uniform amplitude added per pixel
    before clipping back to [0,1]; 0 gives the exact stencils.
    """
    if not 0.0 <= noise <= 1.0:
        raise ValueError(f"noise must lie in [0,1], got {noise}")
    if n_per_class < 1:
        raise ValueError(f"n_per_class must be >= 1, got {n_per_class}")
    rng = np.random.default_rng(seed)
    stencils = {c: glyph_stencil(c, size) for c in range(10)}
    samples = []
    for digit in range(10):
        for _ in range(n_per_class):
            pixels = stencils[digit]
            if noise > 0:
                pixels = np.clip(
                    pixels + rng.uniform(-noise, noise, size=(size, size)), 0.0, 1.0
                )
            samples.append(ImageSample(pixels, digit))
    order = rng.permutation(len(samples))
    return [samples[i] for i in order]


def sample_minibatch(data: DenseDataset, b: int, rng: np.random.Generator) -> MiniBatch:
    """Draw b row indices uniformly without replacement from the dataset."""
    if not 1 <= b <= data.n_rows:
        raise ValueError(f"batch size {b} outside [1, {data.n_rows}]")
    return MiniBatch(rng.choice(data.n_rows, size=b, replace=False))
