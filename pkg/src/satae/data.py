"""Datasets: toy 2-D manifolds, IDX and CIFAR-10 readers, patches, standardization."""
from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass, replace

import numpy as np

from .errors import BadMagic, PatchTooLarge, TruncatedFile
from .seeding import DATA, derived_rng

IDX_U8_3D = 0x00000803
CIFAR_RECORD = 3073
CACHE_MAGIC = b"SATD0001"
_CACHE_HEADER = struct.Struct("<8sIIB")

TOY_KINDS = ("arc", "sine", "line-segment")


@dataclass(eq=False)
class Dataset:
    samples: np.ndarray
    mean: np.ndarray | None = None
    std: np.ndarray | None = None
    normalized: bool = False
    source_tag: str = ""
    # dims whose raw std was below 1e-12; left unscaled by normalize()
    degenerate: np.ndarray | None = None
    # (channels, rows, cols) when rows are flattened images
    image_shape: tuple[int, int, int] | None = None
    norm_mode: str = "per_dim"

    def __post_init__(self):
        self.samples = np.array(self.samples, dtype=np.float64)
        if self.samples.ndim != 2 or self.samples.shape[0] < 1:
            raise ValueError("a dataset needs at least one sample in an (n, d) matrix")
        d = self.samples.shape[1]
        self.mean = np.zeros(d) if self.mean is None else np.array(self.mean, dtype=np.float64)
        self.std = np.ones(d) if self.std is None else np.array(self.std, dtype=np.float64)
        if self.degenerate is None:
            self.degenerate = np.zeros(d, dtype=bool)
        if self.mean.shape != (d,) or self.std.shape != (d,):
            raise ValueError("mean and std must be d-vectors")

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def d(self) -> int:
        return self.samples.shape[1]

    def __len__(self):
        return self.n

    def content_hash(self) -> str:
        return hashlib.sha256(cache_bytes(self)).hexdigest()


def gen_toy(kind: str, n: int, noise_std: float = 0.0, seed: int = 0) -> Dataset:
    """Sample ``n`` points uniformly by arc length along a curve in ``[-1, 1]^2``.

    ``arc`` is the upper half of a circle of radius 0.8, ``sine`` is
    ``y = 0.8 sin(pi x)`` and ``line-segment`` joins (-1, -1) to (1, 1).
    """
    if kind not in TOY_KINDS:
        raise ValueError(f"unknown toy manifold {kind!r}")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = derived_rng(seed, DATA)
    s = rng.uniform(0.0, 1.0, size=n)
    if kind == "arc":
        theta = np.pi * s
        pts = 0.8 * np.column_stack([np.cos(theta), np.sin(theta)])
    elif kind == "line-segment":
        t = 2.0 * s - 1.0
        pts = np.column_stack([t, t])
    else:
        # invert the arc-length table of the sine curve
        grid = np.linspace(-1.0, 1.0, 4097)
        dy = 0.8 * np.pi * np.cos(np.pi * grid)
        speed = np.sqrt(1.0 + dy * dy)
        length = np.concatenate([[0.0], np.cumsum(0.5 * (speed[1:] + speed[:-1]) * np.diff(grid))])
        t = np.interp(s * length[-1], length, grid)
        pts = np.column_stack([t, 0.8 * np.sin(np.pi * t)])
    if noise_std > 0:
        pts = pts + rng.normal(0.0, noise_std, size=pts.shape)
    return Dataset(pts, source_tag=f"toy:{kind}:n={n}:noise={noise_std}:seed={seed}")


def uniform_box(n: int, seed: int = 0, low: float = -1.0, high: float = 1.0, d: int = 2) -> Dataset:
    rng = derived_rng(seed, DATA)
    return Dataset(rng.uniform(low, high, size=(n, d)), source_tag=f"uniform:n={n}:seed={seed}")


def parse_idx(buf: bytes, tag: str = "idx") -> Dataset:
    if len(buf) < 4:
        raise TruncatedFile("IDX file shorter than its magic number")
    (magic,) = struct.unpack(">I", buf[:4])
    if magic != IDX_U8_3D:
        raise BadMagic(f"expected IDX magic 0x{IDX_U8_3D:08x}, got 0x{magic:08x}")
    if len(buf) < 16:
        raise TruncatedFile("IDX header truncated")
    n, rows, cols = struct.unpack(">III", buf[4:16])
    need = 16 + n * rows * cols
    if len(buf) < need:
        raise TruncatedFile(f"IDX payload has {len(buf) - 16} bytes, expected {need - 16}")
    pix = np.frombuffer(buf, dtype=np.uint8, count=n * rows * cols, offset=16)
    return Dataset(pix.reshape(n, rows * cols) / 255.0, source_tag=tag, image_shape=(1, rows, cols))


def load_idx(path) -> Dataset:
    with open(path, "rb") as fh:
        return parse_idx(fh.read(), tag=f"idx:{path}")


def idx_bytes(images: np.ndarray) -> bytes:
    """Encode an ``(n, rows, cols)`` uint8 array as an IDX image file."""
    images = np.asarray(images)
    if images.ndim != 3 or images.dtype != np.uint8:
        raise ValueError("expected an (n, rows, cols) uint8 array")
    return struct.pack(">IIII", IDX_U8_3D, *images.shape) + images.tobytes()


def parse_cifar(buf: bytes, tag: str = "cifar") -> Dataset:
    if len(buf) == 0 or len(buf) % CIFAR_RECORD:
        raise TruncatedFile(f"CIFAR batch size {len(buf)} is not a multiple of {CIFAR_RECORD}")
    rec = np.frombuffer(buf, dtype=np.uint8).reshape(-1, CIFAR_RECORD)
    return Dataset(rec[:, 1:] / 255.0, source_tag=tag, image_shape=(3, 32, 32))


def load_cifar_batch(path) -> Dataset:
    with open(path, "rb") as fh:
        return parse_cifar(fh.read(), tag=f"cifar:{path}")


def binarize(ds: Dataset, threshold: float = 0.5, low: float = -1.0, high: float = 1.0) -> Dataset:
    if ds.normalized:
        raise ValueError("binarize expects unnormalized data")
    out = np.where(ds.samples > threshold, high, low)
    return replace(ds, samples=out, source_tag=ds.source_tag + ":binary")


def extract_patches(ds: Dataset, rows: int, cols: int, patch: int, count: int,
                    seed: int = 0, channels: int = 1) -> Dataset:
    """Random ``patch x patch`` crops from random images of a flattened image set.

    Images are stored channel-major (``channels, rows, cols``) and patches
    keep that layout.
    """
    if patch > min(rows, cols) or patch < 1:
        raise PatchTooLarge(f"patch {patch} does not fit {rows}x{cols} images")
    if count < 1:
        raise ValueError("count must be >= 1")
    if ds.d != channels * rows * cols:
        raise ValueError(f"d={ds.d} is not {channels}x{rows}x{cols}")
    imgs = ds.samples.reshape(ds.n, channels, rows, cols)
    rng = derived_rng(seed, DATA)
    which = rng.integers(0, ds.n, size=count)
    r0 = rng.integers(0, rows - patch + 1, size=count)
    c0 = rng.integers(0, cols - patch + 1, size=count)
    out = np.empty((count, channels * patch * patch))
    for k in range(count):
        out[k] = imgs[which[k], :, r0[k]:r0[k] + patch, c0[k]:c0[k] + patch].ravel()
    return Dataset(out, source_tag=f"{ds.source_tag}:patches{patch}:n={count}:seed={seed}",
                   image_shape=(channels, patch, patch))


def normalize(ds: Dataset, mode: str = "per_dim") -> Dataset:
    """Subtract the mean and divide by the standard deviation.

    ``per_dim`` standardizes every column with its own statistics; ``global``
    uses one scalar mean and std for the whole matrix.  Columns (or the whole
    matrix) with std below 1e-12 are centred but not scaled, and flagged.
    """
    if ds.normalized:
        raise ValueError("dataset is already normalized")
    x = ds.samples
    if mode == "per_dim":
        mean = x.mean(axis=0)
        std = x.std(axis=0)
    elif mode == "global":
        mean = np.full(ds.d, x.mean())
        std = np.full(ds.d, x.std())
    else:
        raise ValueError(f"unknown norm mode {mode!r}")
    degenerate = std < 1e-12
    std = np.where(degenerate, 1.0, std)
    out = (x - mean) / std
    return replace(ds, samples=out, mean=mean, std=std, normalized=True,
                   degenerate=degenerate, norm_mode=mode)


def denormalize(ds: Dataset) -> Dataset:
    if not ds.normalized:
        return ds
    d = ds.d
    return replace(ds, samples=ds.samples * ds.std + ds.mean, mean=np.zeros(d),
                   std=np.ones(d), normalized=False, degenerate=np.zeros(d, dtype=bool))


def cache_bytes(ds: Dataset) -> bytes:
    head = _CACHE_HEADER.pack(CACHE_MAGIC, ds.n, ds.d, int(ds.normalized))
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes()
                    for a in (ds.samples, ds.mean, ds.std))
    return head + body


def save_cache(path, ds: Dataset) -> None:
    with open(path, "wb") as fh:
        fh.write(cache_bytes(ds))


def parse_cache(buf: bytes, tag: str = "cache") -> Dataset:
    if len(buf) < _CACHE_HEADER.size:
        raise TruncatedFile("dataset cache shorter than its header")
    magic, n, d, normalized = _CACHE_HEADER.unpack_from(buf)
    if magic != CACHE_MAGIC:
        raise BadMagic(f"bad dataset cache magic {magic!r}")
    need = _CACHE_HEADER.size + 8 * (n * d + 2 * d)
    if len(buf) != need:
        raise TruncatedFile(f"dataset cache has {len(buf)} bytes, expected {need}")
    off = _CACHE_HEADER.size
    samples = np.frombuffer(buf, "<f8", n * d, off).reshape(n, d).astype(np.float64)
    off += 8 * n * d
    mean = np.frombuffer(buf, "<f8", d, off).astype(np.float64)
    std = np.frombuffer(buf, "<f8", d, off + 8 * d).astype(np.float64)
    return Dataset(samples, mean, std, bool(normalized), source_tag=tag)


def load_cache(path) -> Dataset:
    with open(path, "rb") as fh:
        return parse_cache(fh.read(), tag=f"cache:{path}")
