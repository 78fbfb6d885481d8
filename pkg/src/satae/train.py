"""Per-sample SGD with staged alpha annealing and decoder reprojection."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import model, nonlin
from .data import Dataset
from .errors import NonFiniteLoss, TiedModeReprojection
from .model import ModelParams
from .nonlin import Nonlinearity
from .seeding import INIT, SHUFFLE, derived_rng

LOG_HEADER = ("alpha", "epoch", "recon_mean", "sat_mean", "sat_frac")


def make_schedule(alpha_max: float = 1.0, step: float = 0.1, epochs: int = 30):
    """Stages ``0, step, ..., alpha_max`` with ``epochs`` each."""
    if alpha_max <= 0:
        return [(0.0, epochs)]
    k = int(round(alpha_max / step))
    return [(round(i * step, 12), epochs) for i in range(k + 1)]


@dataclass
class TrainConfig:
    """SGD settings.

    ``tied=None`` means tied for saturated-linear and untied otherwise.
    ``reproject_every=None`` means every 10 updates for untied shrink and
    rectified-linear models and never otherwise; ``0`` disables it.
    """

    lr: float = 0.05
    alpha_schedule: list = field(default_factory=make_schedule)
    reproject_every: int | None = None
    tied: bool | None = None
    seed: int = 0
    init_scale: float = 0.05
    batch_order: bool = True
    dec_bias: bool = True

    def __post_init__(self):
        self.alpha_schedule = [(float(a), int(e)) for a, e in self.alpha_schedule]
        if not self.lr >= 0:
            raise ValueError("lr must be nonnegative")
        if not self.alpha_schedule:
            raise ValueError("alpha_schedule must have at least one stage")
        prev = -math.inf
        for a, e in self.alpha_schedule:
            if a < 0 or a < prev:
                raise ValueError("alpha values must be nonnegative and nondecreasing")
            if e < 1:
                raise ValueError("every stage needs at least one epoch")
            prev = a
        if self.reproject_every is not None and self.reproject_every < 0:
            raise ValueError("reproject_every must be >= 0")
        if self.init_scale < 0:
            raise ValueError("init_scale must be nonnegative")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 unsigned bits")

    def is_tied(self, f: Nonlinearity) -> bool:
        return f.kind == nonlin.SATLIN if self.tied is None else bool(self.tied)

    def reprojection_period(self, f: Nonlinearity, tied: bool | None = None) -> int:
        if tied is None:
            tied = self.is_tied(f)
        if self.reproject_every is None:
            return 10 if f.kind in (nonlin.SHRINK, nonlin.RELU) and not tied else 0
        if self.reproject_every and tied:
            raise TiedModeReprojection("decoder reprojection is not defined for tied weights")
        return self.reproject_every

    def to_dict(self) -> dict:
        out = asdict(self)
        out["alpha_schedule"] = [[a, e] for a, e in self.alpha_schedule]
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        known = {f.name for f in fields(cls)}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config fields: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "TrainConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)


@dataclass(frozen=True)
class EpochRecord:
    alpha: float
    epoch: int
    recon_mean: float
    sat_mean: float
    sat_frac: float


@dataclass
class TrainLog:
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(",".join(LOG_HEADER) + "\n")
            for r in self.records:
                fh.write(f"{r.alpha:.17g},{r.epoch},{r.recon_mean:.17g},"
                         f"{r.sat_mean:.17g},{r.sat_frac:.17g}\n")

    @classmethod
    def read_csv(cls, path) -> "TrainLog":
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
        return cls([EpochRecord(float(r["alpha"]), int(r["epoch"]), float(r["recon_mean"]),
                                float(r["sat_mean"]), float(r["sat_frac"])) for r in rows])


def init_params(d: int, d_h: int, cfg: TrainConfig, f: Nonlinearity | None = None) -> ModelParams:
    if d < 1 or d_h < 1:
        raise ValueError("d and d_h must be >= 1")
    tied = cfg.is_tied(f) if f is not None else bool(cfg.tied)
    rng = derived_rng(cfg.seed, INIT)
    s = cfg.init_scale
    we = rng.uniform(-s, s, size=(d_h, d))
    wd = we.T.copy() if tied else rng.uniform(-s, s, size=(d, d_h))
    return ModelParams(we, np.zeros(d_h), wd, np.zeros(d), tied)


def reproject_decoder(p: ModelParams) -> ModelParams:
    """Rescale every decoder column to unit L2 norm (near-zero columns are kept)."""
    if p.tied:
        raise TiedModeReprojection("decoder reprojection is not defined for tied weights")
    out = p.copy()
    _reproject_inplace(out.dec_weight)
    return out


def _reproject_inplace(wd: np.ndarray) -> None:
    norms = np.sqrt(np.sum(wd * wd, axis=0))
    ok = norms >= 1e-12
    wd[:, ok] /= norms[ok]


def epoch_stats(p: ModelParams, f: Nonlinearity, x: np.ndarray) -> tuple[float, float, float]:
    """Mean reconstruction term, mean penalty and saturated fraction over ``x``."""
    z = model.preactivation(p, x)
    r = nonlin.eval(f, z) @ p.dec_weight.T + p.dec_bias - x
    recon = float(np.mean(0.5 * np.sum(r * r, axis=1)))
    if nonlin.saturation_set(f).empty:
        return recon, 0.0, 0.0
    sat = float(np.mean(np.sum(nonlin.eval_comp(f, z), axis=1)))
    frac = float(np.mean(nonlin.in_saturation(f, z)))
    return recon, sat, frac


def sgd_epoch(p: ModelParams, f: Nonlinearity, alpha: float, data: Dataset, cfg: TrainConfig,
              update_counter: int = 0, rng: np.random.Generator | None = None,
              epoch: int = 1, on_reproject=None):
    """One pass of per-sample SGD over ``data``.

    Returns ``(params, record, update_counter)``.  The counter is global across
    epochs; the decoder is reprojected whenever it reaches a multiple of the
    reprojection period.  ``rng`` drives the shuffle order and defaults to the
    config seed's shuffle stream.
    """
    if rng is None:
        rng = derived_rng(cfg.seed, SHUFFLE)
    x_all = data.samples
    if x_all.shape[1] != p.d:
        raise ValueError(f"data dimension {x_all.shape[1]} does not match model d={p.d}")
    period = cfg.reprojection_period(f, p.tied)
    p = p.copy()
    order = rng.permutation(len(x_all)) if cfg.batch_order else np.arange(len(x_all))
    lr = cfg.lr
    for i in order:
        with np.errstate(over="ignore", invalid="ignore"):
            lb, g = model.loss_and_grad(p, f, alpha, x_all[i])
        if not math.isfinite(lb.total):
            raise NonFiniteLoss(f"non-finite loss at alpha={alpha}, epoch {epoch}",
                                alpha=alpha, epoch=epoch)
        p.enc_weight -= lr * g.enc_weight
        p.enc_bias -= lr * g.enc_bias
        if p.tied:
            p.dec_weight[...] = p.enc_weight.T
        else:
            p.dec_weight -= lr * g.dec_weight
        if cfg.dec_bias:
            p.dec_bias -= lr * g.dec_bias
        update_counter += 1
        if period and update_counter % period == 0:
            _reproject_inplace(p.dec_weight)
            if on_reproject is not None:
                on_reproject(p, update_counter)
    rec = EpochRecord(float(alpha), epoch, *epoch_stats(p, f, x_all))
    if not all(math.isfinite(v) for v in (rec.recon_mean, rec.sat_mean, rec.sat_frac)):
        raise NonFiniteLoss(f"non-finite epoch statistics at alpha={alpha}, epoch {epoch}",
                            alpha=alpha, epoch=epoch)
    return p, rec, update_counter


def train(f: Nonlinearity, data: Dataset, d_h: int, cfg: TrainConfig,
          params: ModelParams | None = None, on_epoch=None):
    """Run every ``(alpha, epochs)`` stage in order, warm-starting each from the last.

    ``on_epoch(params, record)`` is called after each epoch if given.
    """
    if params is None:
        params = init_params(data.d, d_h, cfg, f)
    elif params.d_h != d_h or params.d != data.d:
        raise ValueError("initial params do not match the requested dimensions")
    if params.tied != cfg.is_tied(f):
        raise ValueError("initial params disagree with the configured tied mode")
    cfg.reprojection_period(f)
    if not cfg.dec_bias:
        params = params.copy()
        params.dec_bias[:] = 0.0
    rng = derived_rng(cfg.seed, SHUFFLE)
    log = TrainLog()
    counter = 0
    epoch = 0
    for alpha, epochs in cfg.alpha_schedule:
        for _ in range(epochs):
            epoch += 1
            params, rec, counter = sgd_epoch(params, f, alpha, data, cfg, counter, rng, epoch)
            log.records.append(rec)
            if on_epoch is not None:
                on_epoch(params, rec)
    return params, log
