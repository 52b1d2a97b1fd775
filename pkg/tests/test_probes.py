import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from orliczlab.geometry import norm
from orliczlab.integration import MeasureSpec, QuadratureConfig, integrate_space
from orliczlab.orlicz import parse_psi
from orliczlab.probes import (BerezinProbe, berezin_f, boundary_probe, cauchy_riemann_residual,
                              g_function, make_function, normalized_g)
from orliczlab.spaces import luxemburg_norm


def test_probe_at_origin_is_one(rng):
    z = 0.9 * (rng.random((20, 2)) - 0.5)
    np.testing.assert_allclose(berezin_f(BerezinProbe((0, 0), 0.0, 2), z), 1.0, atol=1e-15)


def test_value_at_the_peak():
    # (1 - |a|)^2 (1 - |a|^2)^-2 = 1.9^-2
    p = BerezinProbe.on_axis(0.9)
    assert complex(berezin_f(p, p.point)) == pytest.approx(1 / 3.61, rel=1e-13)


@pytest.mark.parametrize("N, alpha", [(1, 0.0), (2, 1.0), (3, -0.5)])
def test_peak_value_is_a_power_of_one_plus_radius(N, alpha):
    a = np.exp(0.7j) * np.ones(N) * 0.6 / math.sqrt(N)
    p = BerezinProbe(tuple(a), alpha, N)
    v = complex(berezin_f(p, a))
    assert v.imag == pytest.approx(0.0, abs=1e-12)
    assert v.real == pytest.approx(1.6 ** -(N + alpha + 1), rel=1e-12)


def test_pole_guard():
    with pytest.raises(ValueError):
        berezin_f(BerezinProbe.on_axis(0.5), np.array([2.0]))


@pytest.mark.parametrize("bad", [dict(a=(1.0,), alpha=0.0, N=1), dict(a=(0.1, 0), alpha=0.0, N=1),
                                 dict(a=(0.1,), alpha=-2.0, N=1)])
def test_probe_validation(bad):
    with pytest.raises(ValueError):
        BerezinProbe(**bad)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.floats(-0.9, 2), st.floats(0, 0.95))
def test_probe_is_holomorphic_along_complex_lines(seed, N, alpha, ra):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    p = BerezinProbe(tuple(ra * u / np.linalg.norm(u)), alpha, N)
    z = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    z = 0.8 * rng.random() * z / np.linalg.norm(z)
    v = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    v /= np.linalg.norm(v)
    assert cauchy_riemann_residual(lambda w: berezin_f(p, w), z, v) <= 1e-6


def test_residual_detects_non_holomorphic():
    res = cauchy_riemann_residual(lambda w: norm(w) ** 2, np.array([0.3 + 0.1j]), np.array([1.0]))
    assert res > 0.1


def test_branch_is_continuous_along_radii():
    # non-integer exponent; the phase must not jump along rays toward the sphere
    p = BerezinProbe.on_axis(0.7, 1, 0.37)
    for th in np.linspace(0, 2 * np.pi, 13)[:-1]:
        r = np.linspace(0, 0.999, 2000)
        v = berezin_f(p, (r * np.exp(1j * th))[:, None])
        assert np.max(np.abs(np.diff(v))) < 0.05 * np.max(np.abs(v))


@pytest.mark.parametrize("ra", [0.3, 0.6, 0.85])
def test_l1_norm_of_the_probe(ra):
    # the kernel part integrates to one against v_alpha
    cfg = QuadratureConfig(mc_samples=1 << 14, radial_nodes=128)
    spec = MeasureSpec(1, 0.0)
    p = BerezinProbe.on_axis(ra)
    est = integrate_space(lambda z: np.abs(berezin_f(p, z)), spec, cfg)
    exact = (1 - ra) ** 2
    assert abs(est.value - exact) <= max(est.half_width, 1e-3 * exact)


def test_normalized_probe_at_origin(x2):
    p = BerezinProbe((0.0,), 0.0, 1)
    np.testing.assert_allclose(normalized_g(p, x2, np.array([[0.2j], [-0.5]])), 0.25)


@pytest.mark.parametrize("ra", [0.5, 0.9, 0.99])
def test_normalized_probe_in_unit_ball(cfg, disc0, expm1, ra):
    est = luxemburg_norm(g_function(BerezinProbe.on_axis(ra), expm1), expm1, disc0, cfg)
    assert est.upper <= 1.0


def test_normalized_probe_fades_at_fixed_point(expm1):
    vals = [abs(complex(normalized_g(BerezinProbe.on_axis(r), expm1, np.zeros(1))))
            for r in (0.5, 0.9, 0.99, 0.999, 0.9999)]
    assert np.all(np.diff(vals) < 0)
    assert vals[-1] < 1e-6


def test_boundary_probe_examples():
    assert float(boundary_probe(0.0, np.array([0.5]))) == 1.0
    assert float(boundary_probe(1.0, np.array([0.99]))) == pytest.approx(100.0, rel=1e-12)
    with pytest.raises(ValueError):
        boundary_probe(-1.0, np.zeros(1))


@pytest.mark.parametrize("s, member", [(0.25, True), (0.45, True), (0.5, False), (0.7, False)])
def test_boundary_probe_square_integrable_below_one_half(cfg, disc0, x2, s, member):
    est = luxemburg_norm(make_function(f"powgrowth:{s}"), x2, disc0, cfg)
    assert est.diverged is not member


def test_string_constructors():
    psi = parse_psi("exppow:1:1")
    for key in ("fa:0.5", "ga:0.5", "monomial:4", "powgrowth:0.2", "constant:3", "pole:0.25",
                "invweight", "invweight:2"):
        f = make_function(key, N=2, psi=psi)
        assert np.all(np.isfinite(f(np.array([[0.1, 0.2j]]))))
    for key in ("ga:0.5", "invweight", "bogus:1"):
        with pytest.raises(ValueError):
            make_function(key)
    with pytest.raises(ValueError):
        make_function("monomial:-1")
