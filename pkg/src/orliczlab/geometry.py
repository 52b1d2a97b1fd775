"""Points of the unit ball of C^N, approach regions and automorphisms.

Points are complex numpy arrays whose last axis has length N, so every
function here works on a single point or a stack of them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

BOUNDARY_TOL = 1e-14


def as_point(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    if z.ndim == 0:
        z = z.reshape(1)
    return z


def inner(z, w) -> np.ndarray:
    """<z, w> = sum z_i conj(w_i) over the last axis."""
    return np.sum(as_point(z) * np.conj(as_point(w)), axis=-1)


def norm(z) -> np.ndarray:
    # hypot-style scaling keeps tiny and huge coordinates exact enough
    z = as_point(z)
    a = np.abs(z)
    m = np.max(a, axis=-1)
    safe = np.where(m > 0, m, 1.0)
    return m * np.sqrt(np.sum((a / safe[..., None]) ** 2, axis=-1))


def one_minus_norm_sq(z) -> np.ndarray:
    """1 - |z|^2, clamped at 0 inside the boundary tolerance."""
    r = norm(z)
    d = (1.0 - r) * (1.0 + r)
    return np.where(1.0 - r < BOUNDARY_TOL, np.maximum(d, 0.0), d)


def in_ball(z) -> np.ndarray:
    return norm(z) < 1.0


def e1(N: int) -> np.ndarray:
    v = np.zeros(N, dtype=complex)
    v[0] = 1.0
    return v


def _check_sphere(zeta):
    if np.any(np.abs(norm(zeta) - 1.0) > 1e-12):
        raise ValueError("vertex must lie on the unit sphere")


def in_nonisotropic_ball(z, zeta, h: float, closed: bool = False) -> np.ndarray:
    """Membership in S(zeta, h) = {|1 - <z, zeta>| < h}.

    With closed=False points on or outside the unit sphere are excluded.
    """
    _check_sphere(zeta)
    z = as_point(z)
    hit = np.abs(1.0 - inner(z, zeta)) < h
    r = norm(z)
    inside = r <= 1.0 + BOUNDARY_TOL if closed else r < 1.0
    return hit & inside


@dataclass(frozen=True)
class KoranyiRegion:
    vertex: tuple
    opening: float

    def __post_init__(self):
        v = as_point(self.vertex)
        _check_sphere(v)
        if not self.opening > 1:
            raise ValueError("Koranyi opening must exceed 1")
        object.__setattr__(self, "vertex", tuple(complex(c) for c in v))

    @property
    def zeta(self) -> np.ndarray:
        return np.array(self.vertex, dtype=complex)


def koranyi_excess(z, region: KoranyiRegion) -> np.ndarray:
    """|1 - <z, zeta>| / ((1 - |z|^2) / 2); below the opening means inside."""
    z = as_point(z)
    d = one_minus_norm_sq(z)
    with np.errstate(divide="ignore"):
        return np.abs(1.0 - inner(z, region.zeta)) / (0.5 * d)


def in_koranyi(z, region: KoranyiRegion) -> np.ndarray:
    z = as_point(z)
    lhs = np.abs(1.0 - inner(z, region.zeta))
    return lhs < 0.5 * region.opening * one_minus_norm_sq(z)


def in_corona(z, h: float, alpha: float) -> np.ndarray:
    """1 - |z| < h, admitting the sphere itself only when alpha = -1."""
    if not 0 < h < 1:
        raise ValueError("corona width must lie in (0, 1)")
    r = norm(as_point(z))
    if alpha == -1:
        return (1.0 - r < h) & (r <= 1.0 + BOUNDARY_TOL)
    return (1.0 - r < h) & (r < 1.0)


@dataclass(frozen=True)
class BallAutomorphism:
    """The involutive automorphism exchanging a and 0."""

    center: tuple

    def __post_init__(self):
        a = as_point(self.center)
        if float(norm(a)) >= 1.0:
            raise ValueError("automorphism center must lie in the open ball")
        object.__setattr__(self, "center", tuple(complex(c) for c in a))

    @property
    def a(self) -> np.ndarray:
        return np.array(self.center, dtype=complex)


def automorphism_eval(auto: BallAutomorphism, z) -> np.ndarray:
    """phi_a(z) = (a - P_a z - s_a Q_a z) / (1 - <z, a>), s_a = sqrt(1 - |a|^2).

    P_a is the orthogonal projection onto the line through a and Q_a = I - P_a.
    For a = 0 this reduces to z -> -z.
    """
    a = auto.a
    z = as_point(z)
    aa = float(np.real(inner(a, a)))
    za = inner(z, a)
    if aa == 0.0:
        return -z
    Pz = (za / aa)[..., None] * a
    Qz = z - Pz
    s = math.sqrt(1.0 - aa)
    return (a - Pz - s * Qz) / (1.0 - za)[..., None]


# sec(pi q / 2) for the fractions q where it has a short closed form
_EXACT_SECANTS = {Fraction(0): 1.0, Fraction(1, 3): 2.0 / math.sqrt(3.0),
                  Fraction(1, 2): math.sqrt(2.0), Fraction(2, 3): 2.0}


def critical_opening(N: int, alpha: float) -> float:
    """a_N = 1 / cos((pi/2) (alpha + 2) / (N + alpha + 1)) for N > 1."""
    if N <= 1:
        raise ValueError("critical opening is defined for N > 1 only")
    if alpha < -1:
        raise ValueError("alpha must be >= -1")
    q = (alpha + 2.0) / (N + alpha + 1.0)
    # the common angles come out exact instead of one ulp off
    frac = Fraction(q).limit_denominator(12)
    if float(frac) == q and frac in _EXACT_SECANTS:
        return _EXACT_SECANTS[frac]
    return 1.0 / math.cos(0.5 * math.pi * q)


def random_unitary(N: int, rng: np.random.Generator) -> np.ndarray:
    # QR of a complex Ginibre matrix with the phase fix gives Haar measure
    g = (rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))) / math.sqrt(2.0)
    q, r = np.linalg.qr(g)
    d = np.diag(r)
    return q * (d / np.abs(d))
