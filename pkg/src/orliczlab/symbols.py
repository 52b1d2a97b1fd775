"""Holomorphic self-maps of the ball used as composition symbols.

Keys understood by ``make_symbol``::

    identity            z -> z
    dilate:r            z -> r z
    constant:a          z -> a e_1
    critical:N          z -> (N^{N/2} z_1 ... z_N, 0')
    lens:s              lens map of the disc, s in (0, 1)
    lens-lift:s:N       z -> ((3 + lens_s(z_1)) / 4, 0')
    halfmap             z -> (1 + z) / 2 on the disc
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np

from .geometry import KoranyiRegion, as_point, e1, in_koranyi, norm

# the sampled opening of a lens image is multiplied by this before it is declared
OPENING_SAFETY = 1.01
# openings above this are reported as "no useful Stolz containment"
OPENING_FLAG = 1e3
LIFT_SHIFT = 0.75


@dataclass(frozen=True)
class Symbol:
    """A self-map of B_N with the metadata the diagnostics rely on.

    radial_depth, when present, gives 1 - |phi(z)| as a function of 1 - |z|
    (only for maps with |phi(z)| depending on |z| alone). contacts are image
    points on the sphere that phi(B_N) approaches; hot_points are boundary
    points of the domain where that happens.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    N: int
    label: str
    radial_depth: Callable[[np.ndarray], np.ndarray] | None = None
    regions: tuple = ()
    sup_modulus: float = 1.0
    contacts: tuple = ()
    hot_points: tuple = ()
    holomorphic: bool = True
    facts: dict = field(default_factory=dict)

    def __call__(self, z) -> np.ndarray:
        return self.eval(as_point(z))

    @property
    def is_radial(self) -> bool:
        return self.radial_depth is not None

    @property
    def center(self) -> np.ndarray:
        """phi(0)."""
        return self.eval(np.zeros(self.N, dtype=complex))

    def image_depth(self, z) -> np.ndarray:
        return 1.0 - norm(self(z))


@dataclass(frozen=True)
class CatalogEntry:
    key: str
    parameters: tuple
    expected_properties: dict


def _lens(z, s: float):
    # principal powers; 1 +- z has positive real part on the disc
    p = np.exp(s * np.log(1.0 + z))
    q = np.exp(s * np.log(1.0 - z))
    return (p - q) / (p + q)


def lens_map(s: float, z) -> np.ndarray:
    return _lens(np.asarray(z, dtype=complex), s)


def _lens_sample(s: float, shift: float, half: bool):
    # boundary-refined grid: angles log-spaced toward the contact at 1 and
    # radii log-spaced toward the circle
    th = np.logspace(-9, math.log10(math.pi / 2 if half else math.pi), 1500)
    th = np.concatenate([-th[::-1], [0.0], th])
    depths = np.logspace(-12, 0, 120)
    z = (1.0 - depths)[:, None] * np.exp(1j * th)[None, :]
    w = _lens(z, s)
    return shift + (1.0 - shift) * w


@lru_cache(maxsize=64)
def stolz_opening_of_lens(s: float, shift: float = 0.0) -> float:
    """Sampled opening a with shift + (1 - shift) lens_s(D) inside Gamma(1, a).

    With shift = 0 the lens is odd and also touches -1; the opening then
    refers to the right half-disc, the left half being its mirror image in
    Gamma(-1, a). The sampled maximum is inflated by OPENING_SAFETY.
    """
    if not 0 < s < 1:
        raise ValueError("lens parameter s must lie in (0, 1)")
    w = _lens_sample(s, shift, half=(shift == 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        q = 2.0 * np.abs(1.0 - w) / (1.0 - np.abs(w) ** 2)
    q = q[np.isfinite(q)]
    return float(np.max(q)) * OPENING_SAFETY


def opening_flagged(a: float) -> bool:
    return not math.isfinite(a) or a > OPENING_FLAG


# ---------------------------------------------------------------------------
# constructors


def identity(N: int = 1) -> Symbol:
    return Symbol(lambda z: z, N, "identity", radial_depth=lambda t: t,
                  contacts=(tuple(e1(N)),), hot_points=(tuple(e1(N)),),
                  facts={"compact": False, "bounded_all_delta2": True})


def dilate(r: float, N: int = 1) -> Symbol:
    if not 0 <= r < 1:
        raise ValueError("dilation factor must lie in [0, 1)")
    return Symbol(lambda z: r * z, N, f"dilate:{r:g}",
                  radial_depth=lambda t: 1.0 - r * (1.0 - t), sup_modulus=r,
                  facts={"compact": True, "sup_modulus": r})


def constant(a: float, N: int = 1) -> Symbol:
    a = complex(a)
    if abs(a) >= 1:
        raise ValueError("constant must lie in the open disc")
    v = a * e1(N)
    depth = 1.0 - abs(a)
    return Symbol(lambda z: np.broadcast_to(v, z.shape).copy(), N, f"constant:{a.real:g}",
                  radial_depth=lambda t: np.full(np.shape(t), depth), sup_modulus=abs(a),
                  facts={"compact": True, "sup_modulus": abs(a)})


def critical(N: int) -> Symbol:
    N = int(N)
    if N < 1:
        raise ValueError("N must be >= 1")
    scale = N ** (N / 2.0)

    def ev(z):
        w = np.zeros_like(z)
        w[..., 0] = scale * np.prod(z, axis=-1)
        return w

    torus = tuple(np.full(N, 1.0 / math.sqrt(N), dtype=complex))
    return Symbol(ev, N, f"critical:{N}", contacts=(tuple(e1(N)),), hot_points=(torus,),
                  facts={"sup_modulus_limit": 1.0, "image": "disc x {0'}",
                         "pullback_exponent": "(2 alpha + N + 3) / 2"})


def lens(s: float) -> Symbol:
    a = stolz_opening_of_lens(s)
    regions = () if opening_flagged(a) else (KoranyiRegion((1.0,), a), KoranyiRegion((-1.0,), a))
    return Symbol(lambda z: _lens(z, s), 1, f"lens:{s:g}",
                  regions=regions, contacts=((1.0,), (-1.0,)), hot_points=((1.0,), (-1.0,)),
                  facts={"stolz_opening": a, "corner_half_angle": s * math.pi / 2,
                         "hilbert_schmidt_a2": True})


def lens_lift(s: float, N: int) -> Symbol:
    N = int(N)
    a = stolz_opening_of_lens(s, LIFT_SHIFT)
    regions = () if opening_flagged(a) else (KoranyiRegion(tuple(e1(N)), a),)

    def ev(z):
        w = np.zeros_like(z)
        w[..., 0] = LIFT_SHIFT + (1.0 - LIFT_SHIFT) * _lens(z[..., 0], s)
        return w

    return Symbol(ev, N, f"lens-lift:{s:g}:{N}", regions=regions,
                  contacts=(tuple(e1(N)),), hot_points=(tuple(e1(N)),),
                  facts={"koranyi_opening": a})


def halfmap() -> Symbol:
    return Symbol(lambda z: 0.5 * (1.0 + z), 1, "halfmap", contacts=((1.0,),),
                  hot_points=((1.0,),), facts={"tangential_contact": True})


def make_symbol(key: str, N: int | None = None) -> Symbol:
    name, *rest = key.strip().split(":")
    try:
        vals = [float(v) for v in rest]
    except ValueError:
        raise ValueError(f"bad symbol parameters in {key!r}") from None
    dim = 1 if N is None else int(N)
    if name == "identity" and not vals:
        sym = identity(dim)
    elif name == "dilate" and len(vals) == 1:
        sym = dilate(vals[0], dim)
    elif name == "constant" and len(vals) == 1:
        sym = constant(vals[0], dim)
    elif name == "critical" and len(vals) == 1:
        sym = critical(int(vals[0]))
    elif name == "lens" and len(vals) == 1:
        sym = lens(vals[0])
    elif name == "lens-lift" and len(vals) == 2:
        sym = lens_lift(vals[0], int(vals[1]))
    elif name == "halfmap" and not vals:
        sym = halfmap()
    else:
        raise ValueError(f"unknown symbol key {key!r}")
    if N is not None and sym.N != int(N):
        raise ValueError(f"symbol {key!r} lives in dimension {sym.N}, not {N}")
    validate_symbol(sym)
    return sym


CATALOG_KEYS = ("identity", "dilate:0.5", "constant:0.5", "critical:2", "lens:0.5",
                "lens-lift:0.5:2", "halfmap")


def catalog() -> list[CatalogEntry]:
    out = []
    for key in CATALOG_KEYS:
        sym = make_symbol(key)
        params = tuple(float(v) for v in key.split(":")[1:])
        out.append(CatalogEntry(key, params, dict(sym.facts)))
    return out


# ---------------------------------------------------------------------------
# checks


def _ball_points(N: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((count, N)) + 1j * rng.standard_normal((count, N))
    g /= norm(g)[:, None]
    r = rng.random(count) ** (1.0 / (2 * N))
    return r[:, None] * g


def validate_symbol(sym: Symbol, count: int = 500, seed: int = 0) -> None:
    z = _ball_points(sym.N, count, seed)
    w = sym(z)
    if w.shape != z.shape:
        raise ValueError(f"{sym.label}: image has shape {w.shape}, expected {z.shape}")
    r = norm(w)
    if not np.all(r < 1.0):
        i = int(np.argmax(r))
        raise ValueError(f"{sym.label}: |phi(z)| >= 1 at z = {z[i]}")


def check_containment(sym: Symbol, regions=None, count: int = 10_000, seed: int = 0):
    """Sample the image and test membership in the union of the regions.

    Returns (ok, witness) where witness is the first offending domain point.
    Uses random points plus points pushed toward the hot boundary points.
    """
    regions = tuple(regions if regions is not None else sym.regions)
    if not regions:
        return False, None
    z = _ball_points(sym.N, count, seed)
    extra = []
    depths = np.logspace(-10, -1, 40)
    for p in sym.hot_points:
        p = as_point(p)
        rng = np.random.default_rng(seed + 1)
        jitter = rng.standard_normal((400, sym.N)) + 1j * rng.standard_normal((400, sym.N))
        for d in depths[::4]:
            q = p + d * jitter[:40]
            q = q / np.maximum(norm(q), 1.0)[:, None] * (1.0 - d)
            extra.append(q)
        extra.append((1.0 - depths)[:, None] * p[None, :])
    if extra:
        z = np.concatenate([z] + extra)
    w = sym(z)
    inside = np.zeros(len(z), dtype=bool)
    for reg in regions:
        inside |= in_koranyi(w, reg)
    if np.all(inside):
        return True, None
    return False, z[int(np.argmin(inside))]
