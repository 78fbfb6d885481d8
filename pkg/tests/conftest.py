import numpy as np
import pytest

from satae import nonlin
from satae.model import ModelParams

KINKS = {
    "shrink": lambda lam: (-lam, lam),
    "rectified-linear": lambda lam: (0.0,),
    # f_c = lam - |z| also has a kink at 0
    "saturated-linear": lambda lam: (-lam, 0.0, lam),
    "linear": lambda lam: (),
}


def ref_loss(we, be, wd, bd, kind, lam, alpha, x, tied=False):
    """Loss written directly from the definition, in extended precision."""
    ld = np.longdouble
    we, be, bd, x = (np.asarray(a, dtype=ld) for a in (we, be, bd, x))
    wd = we.T if tied else np.asarray(wd, dtype=ld)
    lam = ld(lam)
    z = we @ x + be
    if kind == "shrink":
        h = np.sign(z) * np.maximum(np.abs(z) - lam, 0)
        fc = np.maximum(np.abs(z) - lam, 0)
    elif kind == "rectified-linear":
        h = np.maximum(z, 0)
        fc = np.maximum(z, 0)
    elif kind == "saturated-linear":
        h = np.minimum(np.maximum(z, -lam), lam)
        fc = np.maximum(lam - np.abs(z), 0)
    else:
        h = z
        fc = np.zeros_like(z)
    r = x - (wd @ h + bd)
    return ld(0.5) * np.sum(r * r) + ld(alpha) * np.sum(fc)


def fd_grad(p: ModelParams, f, alpha, x, step=1e-6):
    """Central differences of :func:`ref_loss` for every parameter entry."""
    ld = np.longdouble
    arrays = [a.astype(ld) for a in
              [p.enc_weight, p.enc_bias] + ([] if p.tied else [p.dec_weight]) + [p.dec_bias]]
    if p.tied:
        arrays.insert(2, None)
    h = ld(step)

    def loss():
        we, be, wd, bd = arrays
        return ref_loss(we, be, wd, bd, f.kind, f.width, alpha, x, p.tied)

    out = []
    for arr in arrays:
        if arr is None:
            out.append(np.zeros_like(p.dec_weight))
            continue
        g = np.zeros(arr.shape, dtype=ld)
        for idx in np.ndindex(arr.shape):
            keep = arr[idx]
            arr[idx] = keep + h
            up = loss()
            arr[idx] = keep - h
            down = loss()
            arr[idx] = keep
            g[idx] = (up - down) / (2 * h)
        out.append(g.astype(np.float64))
    return out


def rel_err(a, n, floor=1e-6):
    a, n = np.asarray(a), np.asarray(n)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)


def random_config(rng, f, d, d_h, tied=False, margin=1e-2):
    """Random params and input whose pre-activations stay ``margin`` away from kinks."""
    we = rng.normal(0, 1.0, (d_h, d)) / np.sqrt(d)
    be = rng.normal(0, 1.0, d_h)
    wd = rng.normal(0, 1.0, (d, d_h)) / np.sqrt(d_h)
    bd = rng.normal(0, 0.5, d)
    x = rng.normal(0, 1.0, d)
    kinks = np.array(KINKS[f.kind](f.width))
    if kinks.size == 0:
        return ModelParams(we, be, wd, bd, tied), x
    for _ in range(1000):
        z = we @ x + be
        close = np.min(np.abs(z[:, None] - kinks[None, :]), axis=1) < margin
        if not close.any():
            break
        be[close] += 0.05
    else:
        raise RuntimeError("could not move pre-activations away from kinks")
    return ModelParams(we, be, wd, bd, tied), x


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


CATALOG = [nonlin.shrink(1.0), nonlin.relu(), nonlin.satlin(1.0)]


# one (order, line) pair per acceptance criterion, repeated in the terminal summary
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
