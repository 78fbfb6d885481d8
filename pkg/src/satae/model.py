"""Single-hidden-layer auto-encoder with the saturation penalty.

``G(x) = W_d f(W_e x + b_e) + b_d``.  Reconstruction energy carries a factor
of one half so that ``loss = sum(energy) + alpha * sum(penalty)`` holds exactly.
Functions taking ``x`` accept one sample ``(d,)`` or a batch ``(n, d)``.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from . import nonlin
from .errors import BadMagic, DimensionMismatch, ShapeMismatch, TruncatedFile
from .nonlin import Nonlinearity

MAGIC = b"SATAE001"
_HEADER = struct.Struct("<8sIIBBd")


@dataclass(eq=False)
class ModelParams:
    enc_weight: np.ndarray  # (d_h, d)
    enc_bias: np.ndarray  # (d_h,)
    dec_weight: np.ndarray  # (d, d_h)
    dec_bias: np.ndarray  # (d,)
    tied: bool = False

    def __post_init__(self):
        self.enc_weight = np.array(self.enc_weight, dtype=np.float64)
        self.enc_bias = np.array(self.enc_bias, dtype=np.float64)
        self.dec_bias = np.array(self.dec_bias, dtype=np.float64)
        if self.enc_weight.ndim != 2:
            raise DimensionMismatch("enc_weight must be a matrix")
        d_h, d = self.enc_weight.shape
        if self.tied:
            self.dec_weight = self.enc_weight.T.copy()
        else:
            self.dec_weight = np.array(self.dec_weight, dtype=np.float64)
        if (self.enc_bias.shape != (d_h,) or self.dec_weight.shape != (d, d_h)
                or self.dec_bias.shape != (d,)):
            raise DimensionMismatch(
                f"inconsistent shapes: W_e {self.enc_weight.shape}, b_e {self.enc_bias.shape}, "
                f"W_d {self.dec_weight.shape}, b_d {self.dec_bias.shape}"
            )

    @property
    def d(self) -> int:
        return self.enc_weight.shape[1]

    @property
    def d_h(self) -> int:
        return self.enc_weight.shape[0]

    @classmethod
    def zeros(cls, d: int, d_h: int, tied: bool = False) -> "ModelParams":
        return cls(np.zeros((d_h, d)), np.zeros(d_h), np.zeros((d, d_h)), np.zeros(d), tied)

    def copy(self) -> "ModelParams":
        return ModelParams(self.enc_weight, self.enc_bias, self.dec_weight, self.dec_bias, self.tied)

    def arrays(self):
        return self.enc_weight, self.enc_bias, self.dec_weight, self.dec_bias

    def equal(self, other: "ModelParams") -> bool:
        """Bitwise equality of all arrays and the tied flag."""
        return self.tied == other.tied and all(
            a.shape == b.shape and a.tobytes() == b.tobytes()
            for a, b in zip(self.arrays(), other.arrays())
        )


@dataclass(eq=False)
class GradRecord:
    enc_weight: np.ndarray
    enc_bias: np.ndarray
    dec_weight: np.ndarray
    dec_bias: np.ndarray

    def arrays(self):
        return self.enc_weight, self.enc_bias, self.dec_weight, self.dec_bias


@dataclass(frozen=True)
class LossBreakdown:
    reconstruction: float
    saturation: float
    alpha: float
    total: float


def _check(p: ModelParams, x) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[-1] != p.d:
        raise DimensionMismatch(f"input of shape {x.shape} does not match d={p.d}")
    return x


# Evaluation uses einsum rather than BLAS matmul so that a sample's result
# does not depend on how many other samples share the call.

def preactivation(p: ModelParams, x) -> np.ndarray:
    x = _check(p, x)
    return np.einsum("...d,hd->...h", x, p.enc_weight) + p.enc_bias


def encode(p: ModelParams, f: Nonlinearity, x) -> np.ndarray:
    return nonlin.eval(f, preactivation(p, x))


def decode(p: ModelParams, h) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if h.ndim not in (1, 2) or h.shape[-1] != p.d_h:
        raise DimensionMismatch(f"code of shape {h.shape} does not match d_h={p.d_h}")
    return np.einsum("...h,dh->...d", h, p.dec_weight) + p.dec_bias


def reconstruct(p: ModelParams, f: Nonlinearity, x) -> np.ndarray:
    return decode(p, encode(p, f, x))


def recon_energy(p: ModelParams, f: Nonlinearity, x):
    """Half squared reconstruction error, one value per sample."""
    x = _check(p, x)
    r = reconstruct(p, f, x) - x
    return 0.5 * np.sum(r * r, axis=-1)


def sat_penalty(p: ModelParams, f: Nonlinearity, x):
    """Sum over hidden units of the complementary function, one value per sample."""
    return np.sum(nonlin.eval_comp(f, preactivation(p, x)), axis=-1)


def loss(p: ModelParams, f: Nonlinearity, alpha: float, batch) -> LossBreakdown:
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    batch = np.atleast_2d(_check(p, batch))
    rec = float(np.sum(recon_energy(p, f, batch)))
    sat = float(np.sum(sat_penalty(p, f, batch))) if alpha > 0 else 0.0
    return LossBreakdown(rec, sat, float(alpha), rec + alpha * sat)


def loss_and_grad(p: ModelParams, f: Nonlinearity, alpha: float, x):
    """Loss breakdown and analytic (sub)gradient in one forward/backward pass.

    A batch ``(n, d)`` gives the summed loss and its gradient.  With tied
    weights the decoder gradient is folded into the encoder one and the
    decoder slot is zero.
    """
    x = np.atleast_2d(_check(p, x))
    z = x @ p.enc_weight.T + p.enc_bias
    h = nonlin.eval(f, z)
    r = h @ p.dec_weight.T + p.dec_bias - x
    delta = (r @ p.dec_weight) * nonlin.eval_deriv(f, z)
    sat = 0.0
    if alpha:
        sat = float(np.sum(nonlin.eval_comp(f, z)))
        delta = delta + alpha * nonlin.eval_comp_deriv(f, z)
    rec = 0.5 * float(np.sum(r * r))
    g_we = delta.T @ x
    g_wd = r.T @ h
    if p.tied:
        g_we = g_we + g_wd.T
        g_wd = np.zeros_like(g_wd)
    grad = GradRecord(g_we, delta.sum(axis=0), g_wd, r.sum(axis=0))
    return LossBreakdown(rec, sat, float(alpha), rec + alpha * sat), grad


def loss_grad(p: ModelParams, f: Nonlinearity, alpha: float, x) -> GradRecord:
    return loss_and_grad(p, f, alpha, x)[1]


def cae_penalty(p: ModelParams, f: Nonlinearity, x):
    """Squared Frobenius norm of the encoder Jacobian ``dh/dx``."""
    fp = nonlin.eval_deriv(f, preactivation(p, x))
    row_norms = np.sum(p.enc_weight ** 2, axis=1)
    return (fp ** 2) @ row_norms


def save_model(path, p: ModelParams, f: Nonlinearity) -> None:
    with open(path, "wb") as fh:
        fh.write(model_bytes(p, f))


def model_bytes(p: ModelParams, f: Nonlinearity) -> bytes:
    if f.kind == nonlin.TABULATED:
        raise ValueError("tabulated nonlinearities cannot be stored in a model file")
    head = _HEADER.pack(MAGIC, p.d, p.d_h, int(p.tied), f.code, float(f.width))
    body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in p.arrays())
    return head + body


def load_model(path) -> tuple[ModelParams, Nonlinearity]:
    with open(path, "rb") as fh:
        return parse_model(fh.read())


def parse_model(buf: bytes) -> tuple[ModelParams, Nonlinearity]:
    if len(buf) < _HEADER.size:
        raise TruncatedFile("model file shorter than its header")
    magic, d, d_h, tied, code, lam = _HEADER.unpack_from(buf)
    if magic != MAGIC:
        raise BadMagic(f"bad model magic {magic!r}")
    if code not in nonlin.CODE_KINDS or code == nonlin.KIND_CODES[nonlin.TABULATED]:
        raise ShapeMismatch(f"unknown nonlinearity code {code}")
    sizes = [d_h * d, d_h, d * d_h, d]
    need = _HEADER.size + 8 * sum(sizes)
    if len(buf) != need:
        raise TruncatedFile(f"model file has {len(buf)} bytes, expected {need}")
    arrs, off = [], _HEADER.size
    for n in sizes:
        arrs.append(np.frombuffer(buf, dtype="<f8", count=n, offset=off).astype(np.float64))
        off += 8 * n
    p = ModelParams(arrs[0].reshape(d_h, d), arrs[1], arrs[2].reshape(d, d_h), arrs[3], bool(tied))
    kind = nonlin.CODE_KINDS[code]
    return p, Nonlinearity(kind, lam)
