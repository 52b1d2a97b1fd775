import math

import numpy as np
import pytest

from orliczlab.geometry import KoranyiRegion, e1, in_koranyi, norm
from orliczlab.symbols import (CATALOG_KEYS, OPENING_FLAG, Symbol, catalog, check_containment,
                               lens_map, make_symbol, opening_flagged, stolz_opening_of_lens,
                               validate_symbol)


def _ball(N, count, seed):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((count, N)) + 1j * rng.standard_normal((count, N))
    g /= np.linalg.norm(g, axis=1)[:, None]
    return g * rng.random(count)[:, None] ** (1 / (2 * N))


@pytest.mark.parametrize("key", CATALOG_KEYS)
def test_catalog_maps_into_the_ball(key):
    sym = make_symbol(key)
    z = _ball(sym.N, 10_000, 11)
    w = sym(z)
    assert w.shape == z.shape
    assert np.all(norm(w) < 1)


def test_catalog_entries_carry_facts():
    entries = catalog()
    assert [e.key for e in entries] == list(CATALOG_KEYS)
    lens = entries[CATALOG_KEYS.index("lens:0.5")]
    assert lens.parameters == (0.5,)
    assert lens.expected_properties["stolz_opening"] > 2


def test_critical_map_reaches_the_circle_on_the_torus():
    sym = make_symbol("critical:2")
    w = sym(np.array([1, 1]) / math.sqrt(2))
    np.testing.assert_allclose(w, [1, 0], atol=1e-15)
    # inside the ball it stays below 1 and approaches it near the torus
    for d in (1e-2, 1e-4, 1e-6):
        v = float(norm(sym((1 - d) * np.array([1, 1j]) / math.sqrt(2))))
        assert v < 1 and v == pytest.approx((1 - d) ** 2, rel=1e-12)


@pytest.mark.parametrize("N", [2, 3, 4])
def test_critical_map_obeys_the_mean_inequality(N):
    sym = make_symbol(f"critical:{N}")
    z = _ball(N, 20_000, N)
    w = sym(z)
    assert np.all(w[:, 1:] == 0)
    assert np.all(np.abs(w[:, 0]) <= norm(z) ** N * (1 + 1e-12))


def test_dilate_bound():
    sym = make_symbol("dilate:0.7", 3)
    assert np.all(norm(sym(_ball(3, 5000, 2))) <= 0.7)
    assert sym.sup_modulus == 0.7


def test_lens_fixes_origin_and_real_line():
    sym = make_symbol("lens:0.5")
    assert complex(sym(np.zeros(1))[0]) == 0
    x = np.linspace(-0.999, 0.999, 101)
    w = sym(x[:, None].astype(complex))[:, 0]
    assert np.max(np.abs(w.imag)) < 1e-14
    assert np.all(np.diff(w.real) > 0)


def test_lens_is_the_identity_at_one():
    z = _ball(1, 200, 5)[:, 0]
    np.testing.assert_allclose(lens_map(1.0, z), z, atol=1e-14)


def test_lens_image_inside_declared_regions():
    sym = make_symbol("lens:0.5")
    ok, witness = check_containment(sym, count=10_000)
    assert ok and witness is None
    a = sym.facts["stolz_opening"]
    w = sym(_ball(1, 10_000, 3))
    right = w[:, 0].real >= 0
    assert np.all(in_koranyi(w[right], KoranyiRegion((1.0,), a)))
    assert np.all(in_koranyi(w[~right], KoranyiRegion((-1.0,), a)))


def test_containment_reports_a_witness():
    sym = make_symbol("identity")
    ok, witness = check_containment(sym, regions=(KoranyiRegion((1.0,), 3.0),))
    assert not ok and witness is not None
    assert not check_containment(sym)[0]  # nothing declared


def test_lift_region():
    sym = make_symbol("lens-lift:0.5:2")
    (reg,) = sym.regions
    np.testing.assert_allclose(reg.zeta, e1(2))
    assert check_containment(sym)[0]


def test_opening_grows_with_s():
    ss = [0.05, 0.1, 0.3, 0.5, 0.7, 0.9, 0.99]
    a = [stolz_opening_of_lens(s) for s in ss]
    assert np.all(np.diff(a) > 0)
    # the image contains 0, and 0 is in Gamma(1, a) only for a > 2
    assert 2.0 < a[0] < 2.1
    lifted = [stolz_opening_of_lens(s, 0.75) for s in ss]
    assert np.all(np.diff(lifted) > 0) and 1 < lifted[0] < 1.3


def test_opening_flagged_near_one():
    assert opening_flagged(stolz_opening_of_lens(0.9999))
    assert not opening_flagged(stolz_opening_of_lens(0.5))
    assert opening_flagged(math.inf) and opening_flagged(2 * OPENING_FLAG)
    assert make_symbol("lens:0.9999").regions == ()
    for s in (0.0, 1.0, -0.2):
        with pytest.raises(ValueError):
            stolz_opening_of_lens(s)


@pytest.mark.parametrize("key", ["rotate:1", "dilate", "dilate:1.0", "constant:1.2", "lens:1.5",
                                 "lens-lift:0.5", "dilate:x", "halfmap:2"])
def test_bad_keys(key):
    with pytest.raises(ValueError):
        make_symbol(key)


def test_dimension_mismatch():
    with pytest.raises(ValueError):
        make_symbol("lens:0.5", 2)
    assert make_symbol("identity", 3).N == 3


def test_validation_catches_escaping_maps():
    bad = Symbol(lambda z: 2 * z, 1, "double")
    with pytest.raises(ValueError):
        validate_symbol(bad)
    wrong_shape = Symbol(lambda z: z[..., :1], 2, "project")
    with pytest.raises(ValueError):
        validate_symbol(wrong_shape)


def test_center_and_depths():
    sym = make_symbol("halfmap")
    assert complex(sym.center[0]) == 0.5
    d = make_symbol("dilate:0.5")
    t = np.array([0.1, 0.5])
    np.testing.assert_allclose(d.radial_depth(t), d.image_depth((1 - t)[:, None]), atol=1e-15)
