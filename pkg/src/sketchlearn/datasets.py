"""Image dataset ingestion (IDX and CIFAR-10 binary) plus synthetic generators."""

from __future__ import annotations

import gzip
import os
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .elm import Dataset
from .errors import (
    BadMagic,
    CountMismatch,
    DatasetMissing,
    LabelOutOfRange,
    RankTooLarge,
    TruncatedFile,
)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801
CIFAR_RECORD = 3073  # 1 label byte + 3 * 32 * 32 pixels
DATA_DIR_ENV = "SKETCHLEARN_DATA_DIR"

MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}
CIFAR_SUBDIR = "cifar-10-batches-bin"
CIFAR_TRAIN = tuple(f"data_batch_{i}.bin" for i in range(1, 6))
CIFAR_TEST = ("test_batch.bin",)


@dataclass(frozen=True)
class RawImageSet:
    count: int
    height: int
    width: int
    channels: int
    pixels: np.ndarray  # uint8, length count*height*width*channels
    labels: np.ndarray  # uint8, length count

    def __post_init__(self):
        if self.pixels.shape != (self.count * self.height * self.width * self.channels,):
            raise TruncatedFile(
                f"pixel buffer is {self.pixels.shape[0]} bytes, "
                f"dims imply {self.count * self.height * self.width * self.channels}"
            )
        if self.labels.shape != (self.count,):
            raise CountMismatch(
                f"{self.labels.shape[0]} labels for {self.count} images"
            )


def _read_bytes(path) -> bytes:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:2] == b"\x1f\x8b":
        blob = gzip.decompress(blob)
    return blob


def load_mnist(images_path, labels_path) -> RawImageSet:
    """Parse an IDX image/label file pair (gzipped files are detected)."""
    img = _read_bytes(images_path)
    if len(img) < 16:
        raise TruncatedFile(f"{images_path}: too short for an image header")
    magic, count, height, width = struct.unpack(">IIII", img[:16])
    if magic != IDX_IMAGES_MAGIC:
        raise BadMagic(
            f"{images_path}: magic {magic:#010x}, expected {IDX_IMAGES_MAGIC:#010x}"
        )
    if len(img) != 16 + count * height * width:
        raise TruncatedFile(
            f"{images_path}: {len(img) - 16} payload bytes for "
            f"{count} images of {height}x{width}"
        )

    lab = _read_bytes(labels_path)
    if len(lab) < 8:
        raise TruncatedFile(f"{labels_path}: too short for a label header")
    lmagic, lcount = struct.unpack(">II", lab[:8])
    if lmagic != IDX_LABELS_MAGIC:
        raise BadMagic(
            f"{labels_path}: magic {lmagic:#010x}, expected {IDX_LABELS_MAGIC:#010x}"
        )
    if len(lab) != 8 + lcount:
        raise TruncatedFile(f"{labels_path}: {len(lab) - 8} labels, header says {lcount}")
    if lcount != count:
        raise CountMismatch(f"{count} images but {lcount} labels")
    return RawImageSet(
        count=count,
        height=height,
        width=width,
        channels=1,
        pixels=np.frombuffer(img, dtype=np.uint8, offset=16),
        labels=np.frombuffer(lab, dtype=np.uint8, offset=8),
    )


def load_cifar10(batch_paths) -> RawImageSet:
    """Parse CIFAR-10 binary batches: 3073-byte records, label byte first."""
    pixel_parts = []
    label_parts = []
    for path in batch_paths:
        blob = _read_bytes(path)
        if len(blob) == 0 or len(blob) % CIFAR_RECORD != 0:
            raise TruncatedFile(
                f"{path}: {len(blob)} bytes is not a multiple of {CIFAR_RECORD}"
            )
        rec = np.frombuffer(blob, dtype=np.uint8).reshape(-1, CIFAR_RECORD)
        labels = rec[:, 0]
        if labels.max() >= 10:
            raise LabelOutOfRange(f"{path}: label {labels.max()} outside [0, 10)")
        label_parts.append(labels)
        pixel_parts.append(rec[:, 1:])
    labels = np.concatenate(label_parts)
    pixels = np.concatenate(pixel_parts)
    return RawImageSet(
        count=labels.shape[0],
        height=32,
        width=32,
        channels=3,
        pixels=pixels.reshape(-1).copy(),
        labels=labels.copy(),
    )


def normalize(raw: RawImageSet) -> Dataset:
    """Map pixel bytes to [0, 1] by /255 and flatten each image to a row."""
    flat = raw.pixels.reshape(raw.count, -1).astype(np.float64) / 255.0
    return Dataset(inputs=flat, labels=raw.labels.astype(np.int64))


def synth_lowrank(
    m: int, n: int, r: int, noise: float, rng: np.random.Generator
) -> np.ndarray:
    """Planted low-rank matrix: sum of r spectral terms with sigma_i = r-i+1.

    Factors are random orthonormal; ``noise`` scales an added i.i.d.
    gaussian perturbation.
    """
    if r > min(m, n):
        raise RankTooLarge(f"rank {r} exceeds min({m}, {n})")
    u, _ = np.linalg.qr(rng.standard_normal((m, r)))
    v, _ = np.linalg.qr(rng.standard_normal((n, r)))
    sigma = np.arange(r, 0, -1, dtype=np.float64)
    x = (u * sigma) @ v.T
    if noise:
        x = x + noise * rng.standard_normal((m, n))
    return x


def synth_blobs(
    d: int,
    n_per_class: int,
    n_classes: int,
    rng: np.random.Generator,
    spread: float = 0.08,
) -> Dataset:
    """Gaussian class blobs clipped into [0, 1]^d; linearly learnable."""
    centers = 0.2 + 0.6 * rng.random((n_classes, d))
    points = []
    labels = []
    for c in range(n_classes):
        pts = centers[c] + spread * rng.standard_normal((n_per_class, d))
        points.append(np.clip(pts, 0.0, 1.0))
        labels.append(np.full(n_per_class, c, dtype=np.int64))
    inputs = np.concatenate(points)
    labels = np.concatenate(labels)
    perm = rng.permutation(inputs.shape[0])
    return Dataset(inputs=inputs[perm], labels=labels[perm])


# -- on-disk discovery -------------------------------------------------------


def resolve_data_dir(cli_value=None) -> Path | None:
    """Directory holding datasets: explicit value, else $SKETCHLEARN_DATA_DIR."""
    if cli_value:
        return Path(cli_value)
    env = os.environ.get(DATA_DIR_ENV)
    return Path(env) if env else None


def _existing(base: Path, name: str) -> Path:
    for cand in (base / name, base / (name + ".gz")):
        if cand.is_file():
            return cand
    raise DatasetMissing(f"missing {name}[.gz] under {base}")


def mnist_dataset(data_dir, split: str = "train") -> Dataset:
    if data_dir is None:
        raise DatasetMissing(f"no data directory given (set ${DATA_DIR_ENV})")
    images, labels = MNIST_FILES[split]
    base = Path(data_dir)
    raw = load_mnist(_existing(base, images), _existing(base, labels))
    return normalize(raw)


def cifar10_dataset(data_dir, split: str = "train") -> Dataset:
    if data_dir is None:
        raise DatasetMissing(f"no data directory given (set ${DATA_DIR_ENV})")
    base = Path(data_dir)
    if (base / CIFAR_SUBDIR).is_dir():
        base = base / CIFAR_SUBDIR
    names = CIFAR_TRAIN if split == "train" else CIFAR_TEST
    raw = load_cifar10([_existing(base, n) for n in names])
    return normalize(raw)
