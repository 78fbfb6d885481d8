"""Energy landscapes, contrast and sparsity statistics, filter tilings, PCA oracle."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from . import model, netpbm, nonlin
from .data import Dataset
from .errors import DimensionMismatch, EmptySaturationSet, NotTwoDimensional, ShapeMismatch
from .model import ModelParams
from .nonlin import Nonlinearity


def _samples(x) -> np.ndarray:
    return x.samples if isinstance(x, Dataset) else np.atleast_2d(np.asarray(x, dtype=np.float64))


def grid_threads() -> int:
    """Thread cap for grid evaluation, from ``SATAE_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("SATAE_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(eq=False)
class EnergyGrid:
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    resolution: int
    values: np.ndarray  # (resolution, resolution), y outer, x inner

    @property
    def xs(self) -> np.ndarray:
        return _centers(self.x_min, self.x_max, self.resolution)

    @property
    def ys(self) -> np.ndarray:
        return _centers(self.y_min, self.y_max, self.resolution)

    def nodes(self) -> np.ndarray:
        gx, gy = np.meshgrid(self.xs, self.ys)
        return np.column_stack([gx.ravel(), gy.ravel()])

    def write_csv(self, path) -> None:
        pts = self.nodes()
        with open(path, "w") as fh:
            fh.write("x,y,energy\n")
            for (x, y), e in zip(pts, self.values.ravel()):
                fh.write(f"{x:.17g},{y:.17g},{e:.17g}\n")

    def image(self, log_scale: bool = False) -> np.ndarray:
        """8-bit image, lowest energy black; top row is ``y_max``."""
        v = np.log1p(self.values - self.values.min()) if log_scale else self.values
        return _to_u8(v)[::-1]

    def write_pgm(self, path, log_scale: bool = False) -> None:
        netpbm.write(path, self.image(log_scale))


def _centers(lo, hi, n):
    return lo + (np.arange(n) + 0.5) * (hi - lo) / n


def _to_u8(v: np.ndarray) -> np.ndarray:
    lo, hi = float(v.min()), float(v.max())
    if hi - lo <= 0:
        return np.full(v.shape, 128, dtype=np.uint8)
    return np.round(255.0 * (v - lo) / (hi - lo)).astype(np.uint8)


def energy_grid(p: ModelParams, f: Nonlinearity, bounds=(-1.0, 1.0, -1.0, 1.0),
                resolution: int = 256, threads: int | None = None) -> EnergyGrid:
    """Reconstruction energy at the cell centres of a regular grid over ``bounds``."""
    if p.d != 2:
        raise NotTwoDimensional(f"energy grids need d=2, model has d={p.d}")
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    x0, x1, y0, y1 = map(float, bounds)
    if not (x1 > x0 and y1 > y0):
        raise ValueError("bounds must be (x_min, x_max, y_min, y_max) with min < max")
    grid = EnergyGrid(x0, x1, y0, y1, resolution, np.empty((resolution, resolution)))
    pts = grid.nodes()
    threads = threads or grid_threads()
    if threads == 1:
        vals = model.recon_energy(p, f, pts)
    else:
        chunks = np.array_split(pts, threads)
        with ThreadPoolExecutor(threads) as ex:
            vals = np.concatenate(list(ex.map(lambda c: model.recon_energy(p, f, c), chunks)))
    grid.values[...] = vals.reshape(resolution, resolution)
    return grid


def contrast_ratio(p: ModelParams, f: Nonlinearity, on_points, off_points) -> float:
    """Median off-manifold energy over median on-manifold energy (+1e-12)."""
    on, off = _samples(on_points), _samples(off_points)
    if on.shape[0] == 0 or off.shape[0] == 0:
        raise ValueError("point sets must be non-empty")
    if on.shape[1] != p.d or off.shape[1] != p.d:
        raise DimensionMismatch("point dimension does not match the model")
    e_on = np.median(model.recon_energy(p, f, on))
    e_off = np.median(model.recon_energy(p, f, off))
    return float(e_off / (e_on + 1e-12))


def saturation_fraction(p: ModelParams, f: Nonlinearity, data) -> float:
    """Fraction of (sample, unit) pre-activations inside the saturation set."""
    sset = nonlin.saturation_set(f)
    if sset.empty:
        raise EmptySaturationSet(f"{f.kind} has no saturation region")
    z = model.preactivation(p, _samples(data))
    return float(np.mean(sset.contains(z)))


@dataclass(eq=False)
class FilterTiling:
    tile_rows: int
    tile_cols: int
    channels: int
    grid_rows: int
    grid_cols: int
    pixels: np.ndarray  # uint8, (H, W) or (H, W, 3)

    def write(self, path) -> None:
        netpbm.write(path, self.pixels)


def tile_filters(p: ModelParams, tile_rows: int, tile_cols: int, channels: int = 1,
                 separator: int = 1) -> FilterTiling:
    """Lay decoder columns out as a near-square grid of min-max scaled tiles.

    Constant columns render mid-gray (128).  Colour columns are read
    channel-major.  Separators and unused cells are black.
    """
    if channels not in (1, 3):
        raise ShapeMismatch("channels must be 1 or 3")
    if p.d != tile_rows * tile_cols * channels:
        raise ShapeMismatch(
            f"d={p.d} does not match {tile_rows}x{tile_cols}x{channels} tiles")
    n = p.d_h
    gc = math.ceil(math.sqrt(n))
    gr = math.ceil(n / gc)
    h = gr * tile_rows + (gr - 1) * separator
    w = gc * tile_cols + (gc - 1) * separator
    out = np.zeros((h, w, channels), dtype=np.uint8)
    for k in range(n):
        col = p.dec_weight[:, k].reshape(channels, tile_rows, tile_cols).transpose(1, 2, 0)
        r, c = divmod(k, gc)
        top, left = r * (tile_rows + separator), c * (tile_cols + separator)
        out[top:top + tile_rows, left:left + tile_cols] = _to_u8(col)
    pixels = out[:, :, 0] if channels == 1 else out
    return FilterTiling(tile_rows, tile_cols, channels, gr, gc, pixels)


def pca_projector(data, k: int) -> np.ndarray:
    """Orthogonal projector onto the top-``k`` eigenvectors of the sample covariance."""
    x = _samples(data)
    d = x.shape[1]
    if not 1 <= k <= d:
        raise ValueError(f"k must lie in [1, {d}]")
    xc = x - x.mean(axis=0)
    cov = xc.T @ xc / max(len(x) - 1, 1)
    _, vecs = np.linalg.eigh(cov)
    top = vecs[:, ::-1][:, :k]
    proj = top @ top.T
    return 0.5 * (proj + proj.T)


def principal_angles(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Principal angles (radians) between the column spans of ``a`` and ``b``."""
    return scipy.linalg.subspace_angles(a, b)


def projector_basis(proj: np.ndarray, k: int) -> np.ndarray:
    """Orthonormal basis of a rank-``k`` projector's range."""
    _, vecs = np.linalg.eigh(proj)
    return vecs[:, -k:]
