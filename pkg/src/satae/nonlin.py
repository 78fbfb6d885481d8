"""Activation functions with flat regions and their complementary penalties.

Each catalog activation knows its saturation set ``S = {z : f'(z) = 0}`` and
the distance-to-``S`` penalty ``f_c``.  Activations without a flat region
(cubic, sigmoid, ...) get a tabulated ``f_c`` built from multi-scale average
variation of ``|f'|`` by :func:`numeric_comp`.

All evaluation functions accept scalars or arrays and broadcast.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptySaturationSet, GridTooCoarse

SHRINK = "shrink"
RELU = "rectified-linear"
SATLIN = "saturated-linear"
LINEAR = "linear"
TABULATED = "tabulated"

KINDS = (SHRINK, RELU, SATLIN, LINEAR, TABULATED)
ALIASES = {"relu": RELU, "satlin": SATLIN, "sl": SATLIN}

# codes used by the binary model file
KIND_CODES = {SHRINK: 0, RELU: 1, SATLIN: 2, LINEAR: 3, TABULATED: 4}
CODE_KINDS = {v: k for k, v in KIND_CODES.items()}


@dataclass(frozen=True, eq=False)
class Table:
    """Sampled activation on a strictly increasing uniform grid."""

    z: np.ndarray
    f: np.ndarray
    fprime: np.ndarray
    fc: np.ndarray

    def __post_init__(self):
        for name in ("z", "f", "fprime", "fc"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.z.ndim != 1 or len(self.z) < 2:
            raise ValueError("table grid must be 1-D with at least 2 nodes")
        if np.any(np.diff(self.z) <= 0):
            raise ValueError("table grid must be strictly increasing")
        n = len(self.z)
        if not (len(self.f) == len(self.fprime) == len(self.fc) == n):
            raise ValueError("table columns must match the grid length")


@dataclass(frozen=True)
class Nonlinearity:
    kind: str
    width: float = 1.0
    table: Table | None = field(default=None, compare=False)

    def __post_init__(self):
        kind = ALIASES.get(self.kind, self.kind)
        if kind not in KINDS:
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind in (SHRINK, SATLIN) and not self.width > 0:
            raise ValueError("width must be positive")
        if kind == TABULATED and self.table is None:
            raise ValueError("tabulated nonlinearity needs a table")

    @property
    def code(self) -> int:
        return KIND_CODES[self.kind]


def shrink(lam: float = 1.0) -> Nonlinearity:
    return Nonlinearity(SHRINK, lam)


def relu() -> Nonlinearity:
    return Nonlinearity(RELU)


def satlin(lam: float = 1.0) -> Nonlinearity:
    return Nonlinearity(SATLIN, lam)


def linear() -> Nonlinearity:
    return Nonlinearity(LINEAR)


def get(name: str, lam: float = 1.0) -> Nonlinearity:
    """Look up a catalog activation by name (``shrink``, ``relu``, ``satlin``, ``linear``)."""
    kind = ALIASES.get(name, name)
    if kind == LINEAR or kind == RELU:
        return Nonlinearity(kind)
    return Nonlinearity(kind, lam)


@dataclass(frozen=True)
class SaturationSet:
    """Sorted disjoint closed intervals; ``±inf`` marks an unbounded side."""

    intervals: tuple[tuple[float, float], ...] = ()

    def __post_init__(self):
        prev_hi = -math.inf
        for i, (lo, hi) in enumerate(self.intervals):
            if not lo < hi:
                raise ValueError("intervals need non-empty interiors")
            if i and lo <= prev_hi:
                raise ValueError("intervals must be sorted and disjoint")
            prev_hi = hi

    @property
    def empty(self) -> bool:
        return not self.intervals

    def contains(self, z):
        z = np.asarray(z, dtype=np.float64)
        out = np.zeros(z.shape, dtype=bool)
        for lo, hi in self.intervals:
            out |= (z >= lo) & (z <= hi)
        return out

    def distance(self, z):
        if self.empty:
            raise EmptySaturationSet("saturation set is empty")
        z = np.asarray(z, dtype=np.float64)
        out = np.full(z.shape, np.inf)
        for lo, hi in self.intervals:
            d = np.maximum(np.maximum(lo - z, z - hi), 0.0)
            out = np.minimum(out, d)
        return out


def eval(f: Nonlinearity, z):
    z = np.asarray(z, dtype=np.float64)
    k, lam = f.kind, f.width
    if k == SHRINK:
        return np.sign(z) * np.maximum(np.abs(z) - lam, 0.0)
    if k == RELU:
        return np.maximum(z, 0.0)
    if k == SATLIN:
        return np.clip(z, -lam, lam)
    if k == LINEAR:
        return z + 0.0
    return np.interp(z, f.table.z, f.table.f)


def eval_deriv(f: Nonlinearity, z):
    """Derivative of ``f``; kinks take the flat-side value 0."""
    z = np.asarray(z, dtype=np.float64)
    k, lam = f.kind, f.width
    if k == SHRINK:
        return (np.abs(z) > lam).astype(np.float64)
    if k == RELU:
        return (z > 0).astype(np.float64)
    if k == SATLIN:
        return (np.abs(z) < lam).astype(np.float64)
    if k == LINEAR:
        return np.ones_like(z)
    t = f.table
    inside = (z >= t.z[0]) & (z <= t.z[-1])
    return np.where(inside, np.interp(z, t.z, t.fprime), 0.0)


def saturation_set(f: Nonlinearity) -> SaturationSet:
    k, lam = f.kind, f.width
    if k == SHRINK:
        return SaturationSet(((-lam, lam),))
    if k == RELU:
        return SaturationSet(((-math.inf, 0.0),))
    if k == SATLIN:
        return SaturationSet(((-math.inf, -lam), (lam, math.inf)))
    if k == LINEAR:
        return SaturationSet()
    return _table_flats(f.table)


def _table_flats(t: Table) -> SaturationSet:
    # clamped extrapolation makes both tails flat; isolated zeros are dropped
    zero = t.fprime == 0
    intervals = []
    lo = -math.inf
    for i in range(len(t.z) - 1):
        flat_seg = zero[i] and zero[i + 1]
        if flat_seg and lo is None:
            lo = t.z[i]
        elif not flat_seg and lo is not None:
            hi = t.z[i]
            if lo < hi:
                intervals.append((float(lo), float(hi)))
            lo = None
    if lo is None:
        lo = t.z[-1]
    intervals.append((float(lo), math.inf))
    return SaturationSet(tuple(intervals))


def in_saturation(f: Nonlinearity, z):
    """Boolean mask of pre-activations lying in the saturation set."""
    return saturation_set(f).contains(z)


def eval_comp(f: Nonlinearity, z):
    """Distance from ``z`` to the nearest flat region of ``f``."""
    z = np.asarray(z, dtype=np.float64)
    k, lam = f.kind, f.width
    if k == SHRINK:
        return np.maximum(np.abs(z) - lam, 0.0)
    if k == RELU:
        return np.maximum(z, 0.0)
    if k == SATLIN:
        return np.maximum(lam - np.abs(z), 0.0)
    if k == LINEAR:
        raise EmptySaturationSet("linear activation has no flat region")
    return np.interp(z, f.table.z, f.table.fc)


def eval_comp_deriv(f: Nonlinearity, z):
    z = np.asarray(z, dtype=np.float64)
    k, lam = f.kind, f.width
    if k == SHRINK:
        return np.where(np.abs(z) > lam, np.sign(z), 0.0)
    if k == RELU:
        return (z > 0).astype(np.float64)
    if k == SATLIN:
        return np.where((np.abs(z) < lam) & (z != 0), -np.sign(z), 0.0)
    if k == LINEAR:
        raise EmptySaturationSet("linear activation has no flat region")
    t = f.table
    slopes = np.diff(t.fc) / np.diff(t.z)
    idx = np.searchsorted(t.z, z, side="right") - 1
    inside = (idx >= 0) & (idx < len(slopes))
    return np.where(inside, slopes[np.clip(idx, 0, len(slopes) - 1)], 0.0)


@dataclass(frozen=True)
class VariationWeights:
    """Scale weighting ``w(l)`` for the multi-scale average variation.

    ``w`` is normalized to unit mass on ``(0, inf)``.  ``scale_cutoff`` must
    leave less than 1e-8 of that mass in the tail.
    """

    weight_kind: str = "exponential"
    rate: float = 1.0
    scale_cutoff: float = 20.0
    grid_step: float | None = None

    def __post_init__(self):
        if self.weight_kind not in ("exponential", "halfnormal"):
            raise ValueError(f"unknown weight kind {self.weight_kind!r}")
        if not (self.rate > 0 and self.scale_cutoff > 0):
            raise ValueError("rate and scale_cutoff must be positive")
        if self.grid_step is not None and not self.grid_step > 0:
            raise ValueError("grid_step must be positive")
        if self.tail_mass() >= 1e-8:
            raise ValueError(
                f"scale_cutoff {self.scale_cutoff} leaves tail mass {self.tail_mass():.3g}"
            )

    def __call__(self, l):
        l = np.asarray(l, dtype=np.float64)
        if self.weight_kind == "exponential":
            return self.rate * np.exp(-self.rate * l)
        # rate acts as the inverse scale of a half-normal density
        return self.rate * math.sqrt(2 / math.pi) * np.exp(-0.5 * (self.rate * l) ** 2)

    def tail_mass(self) -> float:
        x = self.rate * self.scale_cutoff
        if self.weight_kind == "exponential":
            return math.exp(-x)
        return math.erfc(x / math.sqrt(2))


def numeric_comp(z, fprime, weights: VariationWeights | None = None, f=None,
                 feature_width: float | None = None) -> Nonlinearity:
    """Tabulate ``f_c = min(M+, M-)`` from samples of ``f'`` on a uniform grid.

    ``M±(x) = int_0^L w(l) (1/l) int |f'|`` over ``[x, x+l]`` (resp.
    ``[x-l, x]``), both integrals by the trapezoid rule.  Samples beyond the
    grid ends are held at the edge value, so the grid should extend past the
    region of interest by ``scale_cutoff`` for exact results.

    ``f`` defaults to the running integral of ``fprime``.  If
    ``feature_width`` is given, a grid step above a tenth of it raises
    :class:`GridTooCoarse`.
    """
    weights = weights or VariationWeights()
    z = np.asarray(z, dtype=np.float64)
    fp = np.asarray(fprime, dtype=np.float64)
    if z.ndim != 1 or z.shape != fp.shape or len(z) < 3:
        raise ValueError("z and fprime must be matching 1-D arrays of length >= 3")
    steps = np.diff(z)
    h = float(steps.mean())
    if not h > 0 or not np.allclose(steps, h, rtol=1e-6, atol=0):
        raise ValueError("z must be a strictly increasing uniform grid")
    if weights.grid_step is not None and not math.isclose(h, weights.grid_step, rel_tol=1e-6):
        raise ValueError(f"grid step {h} differs from weights.grid_step {weights.grid_step}")
    if feature_width is not None and h > feature_width / 10:
        raise GridTooCoarse(f"grid step {h} exceeds a tenth of feature width {feature_width}")

    g = np.abs(fp)
    n = len(g)
    nl = max(1, int(math.ceil(weights.scale_cutoff / h)))
    gp = np.concatenate([np.full(nl, g[0]), g, np.full(nl, g[-1])])
    cum = np.concatenate([[0.0], np.cumsum(0.5 * h * (gp[1:] + gp[:-1]))])

    # trapezoid weights over scales l_m = m h, m = 0..nl
    ls = h * np.arange(nl + 1)
    c = h * weights(ls)
    c[0] *= 0.5
    c[-1] *= 0.5
    a = c[1:] / ls[1:]
    a_sum = a.sum()

    p = nl
    fwd = np.correlate(cum[p + 1:p + n + nl], a, "valid")
    bwd = np.correlate(cum[p - nl:p + n - 1], a[::-1], "valid")
    base = cum[p:p + n]
    m_plus = c[0] * g + fwd - a_sum * base
    m_minus = c[0] * g + a_sum * base - bwd
    fc = np.maximum(np.minimum(m_plus, m_minus), 0.0)

    if f is None:
        f = np.concatenate([[0.0], np.cumsum(0.5 * h * (fp[1:] + fp[:-1]))])
    return Nonlinearity(TABULATED, table=Table(z, f, fp, fc))


# differentiable activations for which only the tabulated f_c exists
SMOOTH = {
    "cubic": (lambda x: x ** 3, lambda x: 3 * x ** 2),
    "sigmoid": (lambda x: 1 / (1 + np.exp(-x)), lambda x: np.exp(-x) / (1 + np.exp(-x)) ** 2),
    "tanh": (np.tanh, lambda x: 1 - np.tanh(x) ** 2),
}


def save_table(path, f: Nonlinearity) -> None:
    """Write ``z,fc`` CSV with 17 significant digits."""
    if f.kind != TABULATED:
        raise ValueError("only tabulated nonlinearities serialize to CSV")
    write_comp_csv(path, f.table.z, f.table.fc)


def write_comp_csv(path, z, fc) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("z,fc\n")
        for zi, ci in zip(np.asarray(z, float), np.asarray(fc, float)):
            fh.write(f"{zi:.17g},{ci:.17g}\n")


def load_table(path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["z", "fc"]:
            raise ValueError(f"bad header {header!r}")
        rows = [(float(a), float(b)) for a, b in reader]
    arr = np.array(rows, dtype=np.float64).reshape(-1, 2)
    return arr[:, 0], arr[:, 1]
