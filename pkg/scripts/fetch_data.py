#!/usr/bin/env python3
"""Download the MNIST and CIFAR-10 files the benchmark harness reads.

The library itself never downloads anything; it expects files under a data
directory (``--data-dir`` or ``$SKETCHLEARN_DATA_DIR``) laid out as::

    <data-dir>/train-images-idx3-ubyte.gz      (MNIST, gzipped IDX)
    <data-dir>/train-labels-idx1-ubyte.gz
    <data-dir>/t10k-images-idx3-ubyte.gz
    <data-dir>/t10k-labels-idx1-ubyte.gz
    <data-dir>/cifar-10-batches-bin/data_batch_{1..5}.bin
    <data-dir>/cifar-10-batches-bin/test_batch.bin

This script fills that layout. Re-runs skip files that already exist.
"""

from __future__ import annotations

import argparse
import gzip
import os
import struct
import sys
import tarfile
import tempfile
import urllib.request
from pathlib import Path

MNIST_BASE = "https://ossci-datasets.s3.amazonaws.com/mnist/"
MNIST_NAMES = (
    "train-images-idx3-ubyte.gz",
    "train-labels-idx1-ubyte.gz",
    "t10k-images-idx3-ubyte.gz",
    "t10k-labels-idx1-ubyte.gz",
)
CIFAR_URL = "https://www.cs.toronto.edu/~kriz/cifar-10-binary.tar.gz"
CIFAR_SUBDIR = "cifar-10-batches-bin"
CIFAR_NAMES = tuple(f"data_batch_{i}.bin" for i in range(1, 6)) + ("test_batch.bin",)
CIFAR_RECORD = 3073


def download(url: str, dest: Path) -> None:
    print(f"fetching {url}")
    tmp = dest.with_suffix(dest.suffix + ".part")
    with urllib.request.urlopen(url) as resp, open(tmp, "wb") as out:
        while True:
            chunk = resp.read(1 << 20)
            if not chunk:
                break
            out.write(chunk)
    tmp.replace(dest)


def check_idx_magic(path: Path) -> None:
    with gzip.open(path, "rb") as f:
        (magic,) = struct.unpack(">I", f.read(4))
    if magic not in (0x803, 0x801):
        raise SystemExit(f"{path}: unexpected IDX magic 0x{magic:x}")


def fetch_mnist(data_dir: Path) -> None:
    data_dir.mkdir(parents=True, exist_ok=True)
    for name in MNIST_NAMES:
        dest = data_dir / name
        if dest.is_file() or dest.with_suffix("").is_file():
            print(f"have {name}, skipping")
            continue
        download(MNIST_BASE + name, dest)
        check_idx_magic(dest)


def fetch_cifar10(data_dir: Path) -> None:
    out_dir = data_dir / CIFAR_SUBDIR
    if all((out_dir / n).is_file() for n in CIFAR_NAMES):
        print(f"have {CIFAR_SUBDIR}, skipping")
        return
    out_dir.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        archive = Path(tmp) / "cifar-10-binary.tar.gz"
        download(CIFAR_URL, archive)
        with tarfile.open(archive, "r:gz") as tar:
            for member in tar.getmembers():
                name = os.path.basename(member.name)
                if name not in CIFAR_NAMES or not member.isfile():
                    continue
                payload = tar.extractfile(member).read()
                if len(payload) % CIFAR_RECORD != 0:
                    raise SystemExit(f"{name}: size not a multiple of {CIFAR_RECORD}")
                (out_dir / name).write_bytes(payload)
                print(f"wrote {out_dir / name}")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument(
        "--dest",
        default=os.environ.get("SKETCHLEARN_DATA_DIR", "data"),
        help="target data directory (default: $SKETCHLEARN_DATA_DIR or ./data)",
    )
    parser.add_argument(
        "--dataset",
        choices=("mnist", "cifar10", "all"),
        default="all",
        help="which dataset to fetch (default: all)",
    )
    args = parser.parse_args(argv)
    dest = Path(args.dest)
    if args.dataset in ("mnist", "all"):
        fetch_mnist(dest)
    if args.dataset in ("cifar10", "all"):
        fetch_cifar10(dest)
    print(f"data directory ready: {dest.resolve()}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
