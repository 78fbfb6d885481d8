import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from satae import nonlin
from satae.errors import EmptySaturationSet, GridTooCoarse
from satae.nonlin import SaturationSet, VariationWeights

from conftest import CATALOG, KINKS

finite = st.floats(-50, 50, allow_nan=False)
widths = st.floats(0.05, 5.0)


def brute_force_comp(f, z, step=1e-4, span=60.0):
    """min |z - z'| over points of S sampled at ``step`` (unbounded sides cut at ``span``)."""
    best = math.inf
    for lo, hi in nonlin.saturation_set(f).intervals:
        lo = max(lo, -span)
        hi = min(hi, span)
        pts = np.arange(lo, hi + step / 2, step)
        pts = np.append(pts, hi)
        best = min(best, float(np.min(np.abs(z - pts))))
    return best


# ---- eval / eval_deriv ----

def test_eval_examples():
    assert nonlin.eval(nonlin.shrink(1.0), 0.5) == 0
    assert nonlin.eval(nonlin.satlin(1.0), 3.0) == 1
    assert nonlin.eval(nonlin.relu(), -2.0) == 0
    assert nonlin.eval(nonlin.linear(), -2.5) == -2.5


def test_eval_closed_forms():
    z = np.array([-3.0, -1.0, -0.5, 0.0, 0.5, 1.0, 3.0])
    np.testing.assert_array_equal(nonlin.eval(nonlin.shrink(1.0), z), [-2, 0, 0, 0, 0, 0, 2])
    np.testing.assert_array_equal(nonlin.eval(nonlin.satlin(1.0), z), [-1, -1, -0.5, 0, 0.5, 1, 1])
    np.testing.assert_array_equal(nonlin.eval(nonlin.relu(), z), [0, 0, 0, 0, 0.5, 1, 3])


def test_eval_deriv_examples():
    assert nonlin.eval_deriv(nonlin.shrink(1.0), 2.0) == 1
    assert nonlin.eval_deriv(nonlin.shrink(1.0), 1.0) == 0
    assert nonlin.eval_deriv(nonlin.satlin(1.0), 0.0) == 1
    assert nonlin.eval_deriv(nonlin.satlin(1.0), 1.0) == 0
    assert nonlin.eval_deriv(nonlin.relu(), 0.0) == 0


# ---- saturation sets ----

def test_saturation_set_examples():
    assert nonlin.saturation_set(nonlin.shrink(1.0)).intervals == ((-1.0, 1.0),)
    assert nonlin.saturation_set(nonlin.linear()).empty
    assert nonlin.saturation_set(nonlin.satlin(1.0)).intervals == (
        (-math.inf, -1.0), (1.0, math.inf))
    assert nonlin.saturation_set(nonlin.relu()).intervals == ((-math.inf, 0.0),)


def test_saturation_set_rejects_bad_intervals():
    with pytest.raises(ValueError):
        SaturationSet(((1.0, 1.0),))
    with pytest.raises(ValueError):
        SaturationSet(((0.0, 2.0), (1.0, 3.0)))


# ---- complementary function ----

def test_eval_comp_examples():
    assert nonlin.eval_comp(nonlin.shrink(1.0), 3.0) == 2
    assert nonlin.eval_comp(nonlin.satlin(1.0), 0.0) == 1
    assert nonlin.eval_comp(nonlin.relu(), -5.0) == 0


def test_eval_comp_linear_raises():
    with pytest.raises(EmptySaturationSet):
        nonlin.eval_comp(nonlin.linear(), 0.3)
    with pytest.raises(EmptySaturationSet):
        nonlin.eval_comp_deriv(nonlin.linear(), 0.3)


def test_eval_comp_deriv_examples():
    assert nonlin.eval_comp_deriv(nonlin.shrink(1.0), 3.0) == 1
    assert nonlin.eval_comp_deriv(nonlin.shrink(1.0), -3.0) == -1
    assert nonlin.eval_comp_deriv(nonlin.satlin(1.0), 0.5) == -1
    assert nonlin.eval_comp_deriv(nonlin.satlin(1.0), -0.5) == 1
    assert nonlin.eval_comp_deriv(nonlin.satlin(1.0), 0.0) == 0
    assert nonlin.eval_comp_deriv(nonlin.relu(), -5.0) == 0


@pytest.mark.parametrize("f", CATALOG, ids=lambda f: f.kind)
def test_eval_comp_matches_brute_force(f):
    rng = np.random.default_rng(7)
    for z in rng.uniform(-5, 5, 1000):
        assert abs(float(nonlin.eval_comp(f, z)) - brute_force_comp(f, z)) <= 1e-4


@pytest.mark.parametrize("f", CATALOG, ids=lambda f: f.kind)
def test_derivatives_match_finite_differences(f):
    rng = np.random.default_rng(3)
    kinks = np.array(KINKS[f.kind](f.width))
    z = rng.uniform(-4, 4, 2000)
    z = z[np.min(np.abs(z[:, None] - kinks), axis=1) > 1e-3]
    h = 1e-6
    for fn, dfn in ((nonlin.eval, nonlin.eval_deriv), (nonlin.eval_comp, nonlin.eval_comp_deriv)):
        fd = (fn(f, z + h) - fn(f, z - h)) / (2 * h)
        an = dfn(f, z)
        err = np.abs(fd - an) / np.maximum(np.abs(an), 1.0)
        assert err.max() < 1e-6


@given(z=finite, lam=widths)
def test_comp_zero_iff_in_saturation(z, lam):
    for f in (nonlin.shrink(lam), nonlin.relu(), nonlin.satlin(lam)):
        inside = bool(nonlin.saturation_set(f).contains(z))
        assert (nonlin.eval_comp(f, z) == 0) == inside


@given(a=finite, b=finite, lam=widths)
def test_comp_is_one_lipschitz(a, b, lam):
    for f in (nonlin.shrink(lam), nonlin.relu(), nonlin.satlin(lam)):
        assert abs(nonlin.eval_comp(f, a) - nonlin.eval_comp(f, b)) <= abs(a - b) + 1e-12


@given(z=finite, lam=widths)
def test_shrink_comp_is_abs_of_shrink(z, lam):
    f = nonlin.shrink(lam)
    assert nonlin.eval_comp(f, z) == abs(nonlin.eval(f, z))


@given(z=finite)
def test_relu_comp_is_relu(z):
    f = nonlin.relu()
    assert nonlin.eval_comp(f, z) == nonlin.eval(f, z)


@given(z=finite, lam=widths)
def test_comp_equals_set_distance(z, lam):
    for f in (nonlin.shrink(lam), nonlin.relu(), nonlin.satlin(lam)):
        assert nonlin.eval_comp(f, z) == pytest.approx(
            float(nonlin.saturation_set(f).distance(z)), abs=1e-12)


def test_nonlinearity_validation():
    with pytest.raises(ValueError):
        nonlin.shrink(0.0)
    with pytest.raises(ValueError):
        nonlin.Nonlinearity("sigmoid")
    assert nonlin.get("relu").kind == nonlin.RELU
    assert nonlin.get("satlin", 2.0) == nonlin.satlin(2.0)


# ---- multi-scale construction ----

def _satlin_grid(lo=-26.0, hi=26.0, h=0.01):
    z = lo + h * np.arange(int(round((hi - lo) / h)) + 1)
    return z, nonlin.eval_deriv(nonlin.satlin(1.0), z)


def _double_integral_satlin(z, w=VariationWeights()):
    """M+/M- for satlin(1) by nested adaptive quadrature on the exact |f'|."""
    def inner(a, b):
        # integral of |f'| = indicator(|u| < 1) over [a, b]
        return max(0.0, min(b, 1.0) - max(a, -1.0))

    def m(sign):
        def integrand(l):
            a, b = (z, z + l) if sign > 0 else (z - l, z)
            return w(l) * inner(a, b) / l
        pts = sorted({abs(1 - z), abs(-1 - z)})
        val, _ = integrate.quad(integrand, 0, w.scale_cutoff, points=pts, limit=400)
        return val

    return min(m(1), m(-1))


def test_numeric_comp_satlin_vanishes_on_flat_tails():
    z, fp = _satlin_grid()
    tab = nonlin.numeric_comp(z, fp)
    sel = (np.abs(z) >= 1) & (np.abs(z) <= 6)
    assert np.max(tab.table.fc[sel]) <= 1e-3


@pytest.mark.parametrize("z0", [-0.75, -0.3, 0.0, 0.4, 0.9])
def test_numeric_comp_satlin_converges_to_double_integral(z0):
    oracle = _double_integral_satlin(z0)
    errs = []
    for h in (0.01, 0.005):
        z, fp = _satlin_grid(h=h)
        tab = nonlin.numeric_comp(z, fp)
        errs.append(abs(float(nonlin.eval_comp(tab, z0)) - oracle))
    # first order in h: |f'| jumps at the knees
    assert errs[0] <= 1.0 * 0.01
    assert errs[1] <= 0.6 * errs[0]


def test_numeric_comp_cubic_positive_at_isolated_zero():
    z = -3 + 0.01 * np.arange(601)
    tab = nonlin.numeric_comp(z, 3 * z ** 2)
    assert 3 * 0.0 ** 2 == 0
    assert float(nonlin.eval_comp(tab, 0.0)) > 0


def test_numeric_comp_cubic_value_with_margin():
    # M+(0) = int w(l) (1/l) int_0^l 3u^2 du dl = int e^{-l} l^2 dl = 2
    z = -25 + 0.01 * np.arange(5001)
    tab = nonlin.numeric_comp(z, 3 * z ** 2)
    assert float(nonlin.eval_comp(tab, 0.0)) == pytest.approx(2.0, rel=1e-3)


def test_numeric_comp_zero_derivative_gives_zero():
    z = np.linspace(-2, 2, 401)
    tab = nonlin.numeric_comp(z, np.zeros_like(z))
    assert np.all(tab.table.fc == 0)


def test_numeric_comp_bounds():
    z, fp = _satlin_grid()
    fc = nonlin.numeric_comp(z, fp).table.fc
    exact_max = np.max(nonlin.eval_comp(nonlin.satlin(1.0), z))
    assert np.all(fc >= 0)
    assert np.all(fc <= exact_max)


def test_numeric_comp_constant_derivative_is_unit_mass():
    z = -25 + 0.01 * np.arange(5001)
    tab = nonlin.numeric_comp(z, np.ones_like(z))
    assert float(nonlin.eval_comp(tab, 0.0)) == pytest.approx(1.0, abs=5e-3)


def test_numeric_comp_guards():
    z = np.linspace(-2, 2, 41)
    with pytest.raises(GridTooCoarse):
        nonlin.numeric_comp(z, np.ones_like(z), feature_width=0.5)
    with pytest.raises(ValueError):
        nonlin.numeric_comp(np.array([0.0, 1.0, 3.0]), np.ones(3))
    with pytest.raises(ValueError):
        VariationWeights(scale_cutoff=5.0)


def test_variation_weights_are_decreasing_unit_mass():
    for w in (VariationWeights(), VariationWeights("halfnormal", rate=1.0, scale_cutoff=7.0)):
        l = np.linspace(0.001, w.scale_cutoff, 20001)
        vals = w(l)
        assert np.all(vals > 0) and np.all(np.diff(vals) < 0)
        mass, _ = integrate.quad(w, 0, np.inf)
        assert mass == pytest.approx(1.0, abs=1e-9)
        assert w.tail_mass() < 1e-8


def test_tabulated_nonlinearity_behaviour():
    z, fp = _satlin_grid(-8, 8, 0.01)
    tab = nonlin.numeric_comp(z, fp)
    # running integral of f' reproduces satlin up to a constant
    f_vals = nonlin.eval(tab, np.array([-5.0, 0.0, 5.0]))
    # f' = 0 at both knees, so the trapezoid rule loses half a cell at each
    assert f_vals[2] - f_vals[0] == pytest.approx(2.0, abs=0.01 + 1e-9)
    assert nonlin.eval_deriv(tab, 0.0) == 1
    assert nonlin.eval_deriv(tab, 100.0) == 0
    sset = nonlin.saturation_set(tab)
    assert sset.contains(-3.0) and sset.contains(3.0) and not sset.contains(0.0)
    # slope of the interpolant, probed inside a grid cell
    d = float(nonlin.eval_comp_deriv(tab, 0.503))
    fd = (nonlin.eval_comp(tab, 0.503 + 1e-4) - nonlin.eval_comp(tab, 0.503 - 1e-4)) / 2e-4
    assert d == pytest.approx(float(fd), rel=1e-6)


def test_table_csv_round_trip(tmp_path):
    z = -3 + 0.01 * np.arange(601)
    tab = nonlin.numeric_comp(z, 3 * z ** 2)
    path = tmp_path / "cubic.csv"
    nonlin.save_table(path, tab)
    assert path.read_text().splitlines()[0] == "z,fc"
    z2, fc2 = nonlin.load_table(path)
    np.testing.assert_array_equal(z2, tab.table.z)
    np.testing.assert_array_equal(fc2, tab.table.fc)
