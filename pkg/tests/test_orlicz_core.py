import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orliczlab.orlicz import (GridSpec, OrliczFunction, Saturated, check_growth_class,
                              constant_grid, equivalent_orlicz, parse_psi, psi_eval, psi_inverse)

CATALOG = ["power:2", "power:1.5", "power:3.5", "exppow:1:1", "exppow:0.5:2", "logpow:1:2",
           "logpow:2:1.5", "powlog:2:1", "powlog:1.5:3"]


def _member(kind, params):
    try:
        return OrliczFunction(kind, params)
    except ValueError:
        return None  # parameters outside the convex range


def catalog_members():
    # random members of the four families with moderate parameters
    power = st.floats(1.1, 6).map(lambda p: (p,))
    pair = st.tuples(st.floats(0.2, 3), st.floats(1, 3))
    kinds = st.one_of(power.map(lambda p: ("power", p)), pair.map(lambda p: ("exppow", p)),
                      pair.map(lambda p: ("logpow", p)), pair.map(lambda p: ("powlog", p)))
    return kinds.map(lambda kp: _member(*kp)).filter(lambda m: m is not None)


# -- evaluation --------------------------------------------------------------


def test_power_at_three(x2):
    assert psi_eval(x2, 3.0) == 9.0


def test_exppow_vanishes_at_zero(expm1):
    assert psi_eval(expm1, 0.0) == 0.0


def test_logpow_at_e_minus_one():
    # exp((log e)^2) - 1 = e - 1
    assert psi_eval(parse_psi("logpow:1:2"), math.e - 1) == pytest.approx(1.718281828459045,
                                                                           rel=1e-14)


def test_overflow_saturates_and_keeps_argument(expm1):
    v = psi_eval(expm1, 1000.0)
    assert isinstance(v, Saturated)
    assert math.isinf(v) and v.arg == 1000.0
    assert not math.isnan(float(expm1(np.array([1e300]))[0]))


@pytest.mark.parametrize("bad", [-1.0, math.inf, math.nan])
def test_eval_rejects_bad_input(expm1, bad):
    with pytest.raises(ValueError):
        psi_eval(expm1, bad)


@pytest.mark.parametrize("key", ["power:1", "power", "exppow:1:0.5", "logpow:0:1", "powlog:1:1",
                                 "cosh:1", "power:x", "logpow:1:1", "logpow:0.5:1.25"])
def test_bad_keys(key):
    with pytest.raises(ValueError):
        parse_psi(key)


# -- inverse -----------------------------------------------------------------


def test_inverse_examples(x2, expm1):
    assert psi_inverse(x2, 9.0) == pytest.approx(3.0, rel=1e-15)
    assert psi_inverse(expm1, 1.0) == pytest.approx(0.6931471805599453, rel=1e-14)
    for key in CATALOG:
        assert psi_inverse(parse_psi(key), 0.0) == 0.0


def test_inverse_rejects_negative(x2):
    with pytest.raises(ValueError):
        psi_inverse(x2, -1.0)


@pytest.mark.parametrize("key", CATALOG)
@pytest.mark.parametrize("mode", ["closed-form", "numeric-bisection"])
def test_round_trip_on_wide_range(key, mode):
    psi = parse_psi(key, inverse_mode=mode)
    ys = np.logspace(-6, 12, 181)
    back = psi(psi.inverse(ys))
    assert np.max(np.abs(back / ys - 1)) < 1e-10


@settings(max_examples=60, deadline=None)
@given(catalog_members(), st.floats(-3, 3))
def test_inverse_after_eval_is_identity(psi, lx):
    x = 10.0**lx
    y = psi(x)
    if not np.isfinite(y) or y == 0:
        return
    assert psi_inverse(psi, float(y)) == pytest.approx(x, rel=1e-9)


def test_inverse_log_beyond_float_range(expm1):
    # log y = 1e4 is far past double range; e^x - 1 inverts to about 1e4
    assert float(expm1.inverse_log(1e4)) == pytest.approx(1e4, rel=1e-12)


# -- shape invariants --------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(catalog_members())
def test_convex_and_increasing(psi):
    xs = np.geomspace(1e-3, 50, 400)
    v = psi(xs)
    ok = np.isfinite(v)
    assert np.all(np.diff(v[ok]) > 0)
    assert psi.is_convex_on(xs[ok])
    assert psi(0.0) == 0.0


@settings(max_examples=60, deadline=None)
@given(catalog_members())
def test_superlinear(psi):
    ks = np.arange(1, 7)
    ratio = psi.log_psi(10.0**ks) - ks * math.log(10)
    assert np.all(np.diff(ratio) > 0)


def test_shape_check_on_logpow():
    # b = 1 is (1+x)^a - 1: convex exactly when a > 1
    assert parse_psi("logpow:2:1")(3.0) == pytest.approx(15.0)
    with pytest.raises(ValueError, match="not convex"):
        parse_psi("logpow:0.5:1.25")


def test_log_psi_matches_direct_evaluation():
    xs = np.geomspace(1e-2, 20, 50)
    for key in CATALOG:
        psi = parse_psi(key)
        np.testing.assert_allclose(psi.log_psi(xs), np.log(psi(xs)), rtol=1e-10)


# -- classification ----------------------------------------------------------


def _flags(report):
    return (report.delta2_lower.holds, report.delta1.holds, report.delta2_upper.holds)


def test_square_is_doubling_only(x2):
    rep = check_growth_class(x2)
    assert _flags(rep) == (True, False, False)
    assert rep.delta2_lower.constant == pytest.approx(4.0)
    assert rep.nabla2.holds


def test_exponential_squares_with_two(expm1):
    rep = check_growth_class(expm1)
    assert rep.delta2_upper.holds
    assert rep.delta2_upper.constant <= 2.0
    assert rep.delta2_lower.holds is False


def test_logpow_is_delta1_not_delta2():
    rep = check_growth_class(parse_psi("logpow:1:2"))
    assert rep.delta1.holds is True
    assert rep.delta2_upper.holds is False


def test_powlog_is_doubling():
    assert check_growth_class(parse_psi("powlog:2:1")).delta2_lower.holds


def test_top_of_constant_grid_is_inconclusive(x2):
    # psi(2x) / psi(x) = 4 exactly, which is the last grid constant
    rep = check_growth_class(x2, cgrid=constant_grid(1.0, 4.0))
    assert rep.delta2_lower.status == "inconclusive"
    assert rep.delta2_lower.note == "boundary-saturated"


def test_short_grid_rejected(x2):
    with pytest.raises(ValueError):
        check_growth_class(x2, GridSpec(points=100))


@settings(max_examples=25, deadline=None)
@given(catalog_members())
def test_cascade_and_exclusion(psi):
    rep = check_growth_class(psi)
    if rep.delta2_upper.holds:
        assert rep.delta1.holds
    if rep.delta1.holds:
        assert rep.nabla2.holds
    assert not (rep.delta2_lower.holds and rep.delta2_upper.holds)
    d = rep.to_dict()
    assert d["grid"]["points"] >= 200


def test_complementary_of_square():
    # sup_x (xy - x^2) = y^2 / 4
    ys = np.geomspace(0.1, 1e4, 30)
    np.testing.assert_allclose(parse_psi("power:2").complementary(ys), ys**2 / 4, rtol=1e-9)


def test_complementary_of_exponential():
    # sup_x (xy - e^x + 1) = y log y - y + 1
    ys = np.geomspace(1.5, 1e6, 30)
    np.testing.assert_allclose(parse_psi("exppow:1:1").complementary(ys),
                               ys * np.log(ys) - ys + 1, rtol=1e-9)


# -- equivalence -------------------------------------------------------------


class _Scaled:
    """k * psi, duck-typed; equivalence only needs log_psi and x0."""

    def __init__(self, psi, k):
        self.psi, self.k, self.x0 = psi, k, psi.x0

    def log_psi(self, x):
        return math.log(self.k) + self.psi.log_psi(x)


def test_equivalent_to_itself(expm1):
    v = equivalent_orlicz(expm1, expm1)
    assert v.holds and v.constant == 1.0


def test_equivalent_to_scaled_square(x2):
    v = equivalent_orlicz(x2, _Scaled(x2, 2.0))
    assert v.holds
    # feasible iff c^3 <= 1/2
    assert v.constant < 1.0
    assert v.constant**3 <= 0.5 + 1e-12


def test_square_not_equivalent_to_exponential(x2, expm1):
    assert equivalent_orlicz(x2, expm1).holds is False


def test_constant_grid_passes_through_powers_of_two():
    g = constant_grid()
    assert g[0] == 1.0 and g[-1] == 1e6
    assert np.all(np.diff(g) > 0)
    assert np.isin(2.0 ** np.arange(0, 20), g).all()
