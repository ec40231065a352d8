"""Dataset loading, splitting and image-grid export.

Supported formats: IDX u8 image tensors (magic 0x00000803, optionally
gzip-compressed), rectangular numeric CSV, and binary PGM (P5) output.
"""

from __future__ import annotations

import csv
import gzip
import math
import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .core import DimensionError, Rng, as_matrix

IDX_IMAGES_MAGIC = 0x00000803
_MAX_IDX_ELEMENTS = 1 << 34


class ParseError(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    samples: np.ndarray
    source: str = ""
    scale: str = "raw"  # "raw" or "unit"
    image_shape: tuple[int, int] | None = None

    def __post_init__(self):
        object.__setattr__(self, "samples", as_matrix(self.samples, "samples"))
        if self.scale not in ("raw", "unit"):
            raise ValueError(f"unknown scale {self.scale!r}")
        if self.scale == "unit" and self.samples.size and (self.samples.min() < 0 or self.samples.max() > 1):
            raise ValueError("unit-scaled dataset has entries outside [0, 1]")

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]

    def take(self, idx, source=None) -> "Dataset":
        return replace(self, samples=self.samples[idx], source=source or self.source)


def _read_bytes(path) -> bytes:
    raw = Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def parse_idx_images(buf: bytes, source: str = "<bytes>") -> Dataset:
    if len(buf) < 4:
        raise ParseError(f"{source}: truncated header at byte {len(buf)}")
    (magic,) = struct.unpack_from(">I", buf, 0)
    if magic != IDX_IMAGES_MAGIC:
        raise ParseError(f"{source}: unsupported magic 0x{magic:08x} at byte 0")
    if len(buf) < 16:
        raise ParseError(f"{source}: truncated header at byte {len(buf)}")
    count, rows, cols = struct.unpack_from(">III", buf, 4)
    total = count * rows * cols
    if total > _MAX_IDX_ELEMENTS:
        raise ParseError(f"{source}: dimension overflow ({count}x{rows}x{cols}) at byte 4")
    if len(buf) - 16 < total:
        raise ParseError(f"{source}: truncated payload at byte {len(buf)}, expected {16 + total}")
    if len(buf) - 16 > total:
        raise ParseError(f"{source}: {len(buf) - 16 - total} trailing bytes at byte {16 + total}")
    pix = np.frombuffer(buf, dtype=np.uint8, count=total, offset=16)
    return Dataset(pix.reshape(count, rows * cols) / 255.0, source, "unit", (rows, cols))


def load_idx_images(path) -> Dataset:
    return parse_idx_images(_read_bytes(path), str(path))


def write_idx_images(path, images) -> None:
    """Write a (count, rows, cols) uint8 array as IDX; gzip if path ends in .gz."""
    images = np.asarray(images)
    if images.ndim != 3 or images.dtype != np.uint8:
        raise ValueError("images must be a (count, rows, cols) uint8 array")
    buf = struct.pack(">IIII", IDX_IMAGES_MAGIC, *images.shape) + images.tobytes()
    if str(path).endswith(".gz"):
        buf = gzip.compress(buf, mtime=0)
    Path(path).write_bytes(buf)


def load_csv(path, has_header: bool = False) -> Dataset:
    rows = []
    width = None
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            if has_header and lineno == 1:
                continue
            if not rec:
                continue
            if width is None:
                width = len(rec)
            elif len(rec) != width:
                raise ParseError(f"{path}: line {lineno} has {len(rec)} fields, expected {width}")
            try:
                rows.append([float(c) for c in rec])
            except ValueError:
                raise ParseError(f"{path}: non-numeric cell on line {lineno}") from None
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return Dataset(np.array(rows), str(path), "raw")


def save_csv(path, samples, header: list[str] | None = None) -> None:
    """Decimal text with 17 significant digits, which round-trips float64."""
    X = as_matrix(samples)
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(",".join(header) + "\n")
        for row in X:
            fh.write(",".join(f"{v:.17g}" for v in row) + "\n")


def load_dataset(path, has_header: bool = False) -> Dataset:
    """Dispatch on extension: ``.csv`` is read as CSV, anything else as IDX."""
    p = str(path)
    if p.endswith(".csv") or p.endswith(".csv.gz"):
        return load_csv(path, has_header)
    return load_idx_images(path)


def synth_gaussian(rng: Rng, n: int, mean, std) -> Dataset:
    mean = np.atleast_1d(np.asarray(mean, dtype=np.float64))
    std = np.atleast_1d(np.asarray(std, dtype=np.float64))
    if mean.shape != std.shape:
        raise DimensionError("mean and std must have equal length")
    if np.any(std <= 0):
        raise ValueError("std must be positive in every coordinate")
    if n < 1:
        raise ValueError("n must be >= 1")
    X = mean + std * rng.standard_normal((n, mean.size))
    return Dataset(X, f"gaussian(mean={mean.tolist()}, std={std.tolist()})", "raw")


@dataclass(frozen=True)
class SplitSpec:
    train: float
    validation: float
    test: float
    seed: int

    def __post_init__(self):
        fr = (self.train, self.validation, self.test)
        if any(not f > 0 for f in fr):
            raise ValueError("split fractions must be positive")
        if abs(sum(fr) - 1.0) > 1e-12:
            raise ValueError(f"split fractions sum to {sum(fr)!r}, not 1")


def split(ds: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset, Dataset]:
    n = ds.n
    n_val = int(round(n * spec.validation))
    n_test = int(round(n * spec.test))
    n_train = n - n_val - n_test
    if min(n_train, n_val, n_test) < 1:
        raise ValueError(f"split of {n} rows leaves an empty part ({n_train}/{n_val}/{n_test})")
    perm = Rng(spec.seed).permutation(n)
    return (
        ds.take(perm[:n_train], f"{ds.source}[train]"),
        ds.take(perm[n_train:n_train + n_val], f"{ds.source}[validation]"),
        ds.take(perm[n_train + n_val:], f"{ds.source}[test]"),
    )


def subsample(ds: Dataset, n: int, rng: Rng) -> Dataset:
    if not 1 <= n <= ds.n:
        raise ValueError(f"cannot take {n} of {ds.n} rows")
    return ds.take(np.sort(rng.choice(ds.n, n, replace=False)))


def quantize(samples) -> np.ndarray:
    """[0, 1] -> uint8 via round-half-to-even of x*255."""
    X = np.asarray(samples, dtype=np.float64)
    if X.size and (X.min() < 0 or X.max() > 1 or not np.all(np.isfinite(X))):
        raise ValueError("samples must lie in [0, 1] for image export")
    return np.rint(X * 255.0).astype(np.uint8)


def export_image_grid(samples, rows: int, cols: int, image_h: int, image_w: int, path) -> None:
    """Tile the first rows*cols samples row-major into a P5 PGM with 1-pixel black separators."""
    X = as_matrix(samples, "samples")
    if rows < 1 or cols < 1 or rows * cols > X.shape[0]:
        raise DimensionError(f"a {rows}x{cols} grid needs {rows * cols} samples, have {X.shape[0]}")
    if image_h * image_w != X.shape[1]:
        raise DimensionError(f"image {image_h}x{image_w} does not match sample dimension {X.shape[1]}")
    q = quantize(X[: rows * cols])
    H = rows * image_h + rows - 1
    Wd = cols * image_w + cols - 1
    canvas = np.zeros((H, Wd), dtype=np.uint8)
    for k in range(rows * cols):
        r, c = divmod(k, cols)
        y0, x0 = r * (image_h + 1), c * (image_w + 1)
        canvas[y0:y0 + image_h, x0:x0 + image_w] = q[k].reshape(image_h, image_w)
    Path(path).write_bytes(f"P5\n{Wd} {H}\n255\n".encode("ascii") + canvas.tobytes())


def read_pgm(path) -> np.ndarray:
    """Minimal P5 reader (no comments), returns a (height, width) uint8 array."""
    buf = Path(path).read_bytes()
    fields, pos = [], 0
    while len(fields) < 4:
        while pos < len(buf) and buf[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while pos < len(buf) and not buf[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ParseError(f"{path}: truncated PGM header at byte {pos}")
        fields.append(buf[start:pos])
    if fields[0] != b"P5":
        raise ParseError(f"{path}: not a P5 PGM")
    w, h, maxval = (int(f) for f in fields[1:])
    if maxval != 255:
        raise ParseError(f"{path}: only maxval 255 supported")
    pos += 1
    if len(buf) - pos != w * h:
        raise ParseError(f"{path}: payload has {len(buf) - pos} bytes, expected {w * h}")
    return np.frombuffer(buf, dtype=np.uint8, offset=pos).reshape(h, w)


def grid_shape(n: int) -> tuple[int, int]:
    cols = max(1, int(math.sqrt(n)))
    return n // cols, cols
