"""Explicit test functions: kernel-power probes peaking at a point, their
normalized versions, monomials and radial boundary-growth probes."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import as_point, e1, inner, norm
from .orlicz import OrliczFunction
from .spaces import EvaluableFunction

POLE_GUARD = 1e-14


@dataclass(frozen=True)
class BerezinProbe:
    a: tuple
    alpha: float
    N: int

    def __post_init__(self):
        a = as_point(self.a)
        if a.shape[-1] != self.N:
            raise ValueError("point a has the wrong dimension")
        if float(norm(a)) >= 1:
            raise ValueError("|a| must be < 1")
        if self.alpha < -1:
            raise ValueError("alpha must be >= -1")
        object.__setattr__(self, "a", tuple(complex(c) for c in a))

    @property
    def point(self) -> np.ndarray:
        return np.array(self.a, dtype=complex)

    @property
    def exponent(self) -> float:
        return self.N + self.alpha + 1.0

    @classmethod
    def on_axis(cls, radius: float, N: int = 1, alpha: float = 0.0) -> "BerezinProbe":
        return cls(tuple(radius * e1(N)), alpha, N)


def berezin_f(probe: BerezinProbe, z) -> np.ndarray:
    """(1-|a|)^e ((1-|a|^2) / (1 - <z,a>)^2)^e with e = N + alpha + 1.

    The power is exp(e * log) with the log assembled from principal logs of
    the factors; 1 - <z,a> has positive real part on the closed ball.
    """
    a = probe.point
    z = as_point(z)
    e = probe.exponent
    ra = float(norm(a))
    den = 1.0 - inner(z, a)
    if np.any(np.abs(den) < POLE_GUARD):
        raise ValueError("z too close to the pole of the probe")
    log_base = math.log1p(-ra * ra) - 2.0 * np.log(den)
    return np.exp(e * (math.log1p(-ra) + log_base))


def normalized_g(probe: BerezinProbe, psi: OrliczFunction, z) -> np.ndarray:
    e = probe.exponent
    ra = float(norm(probe.point))
    scale = float(psi.inverse_log(-e * math.log1p(-ra))) / 2.0**e
    return scale * berezin_f(probe, z)


def boundary_probe(exponent: float, z) -> np.ndarray:
    if exponent < 0:
        raise ValueError("exponent must be >= 0")
    depth = 1.0 - norm(as_point(z))
    with np.errstate(divide="ignore"):
        return depth ** (-exponent)


# ---------------------------------------------------------------------------
# EvaluableFunction constructors


def berezin_function(probe: BerezinProbe) -> EvaluableFunction:
    a = probe.point
    ra = float(norm(a))
    dirs = (tuple(a / ra),) if ra > 0 else ()
    return EvaluableFunction(lambda z: berezin_f(probe, z), ra == 0, f"fa:{ra:g}",
                             directions=dirs, holomorphic=True)


def g_function(probe: BerezinProbe, psi: OrliczFunction) -> EvaluableFunction:
    a = probe.point
    ra = float(norm(a))
    dirs = (tuple(a / ra),) if ra > 0 else ()
    return EvaluableFunction(lambda z: normalized_g(probe, psi, z), ra == 0, f"ga:{ra:g}",
                             directions=dirs, holomorphic=True)


def boundary_function(exponent: float) -> EvaluableFunction:
    return EvaluableFunction(lambda z: boundary_probe(exponent, z).astype(complex), True,
                             f"powgrowth:{exponent:g}",
                             radial=lambda t: t ** (-exponent), holomorphic=False)


def monomial(n: int, N: int = 1) -> EvaluableFunction:
    n = int(n)
    if n < 0:
        raise ValueError("monomial degree must be >= 0")
    if N == 1:
        return EvaluableFunction(lambda z: z[..., 0] ** n, True, f"monomial:{n}",
                                 radial=lambda t: (1.0 - t) ** n, holomorphic=True)
    return EvaluableFunction(lambda z: z[..., 0] ** n, False, f"monomial:{n}",
                             directions=(tuple(e1(N)),), holomorphic=True)


def constant_function(c: complex) -> EvaluableFunction:
    c = complex(c)
    return EvaluableFunction(lambda z: np.full(z.shape[:-1], c), True, f"constant:{c.real:g}",
                             radial=lambda t: np.full(np.shape(t), abs(c)), holomorphic=True)


def pole_power(s: float, N: int = 1) -> EvaluableFunction:
    """(1 - z_1)^(-s), principal branch."""

    def ev(z):
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.exp(-s * np.log(1.0 - z[..., 0]))

    return EvaluableFunction(ev, False, f"pole:{s:g}", directions=(tuple(e1(N)),), holomorphic=True)


def inverse_weight_function(psi: OrliczFunction, gamma: float = 1.0) -> EvaluableFunction:
    """psi^{-1}((1 - |z|)^(-gamma)), a radial function of maximal admissible growth."""

    def radial(t):
        with np.errstate(divide="ignore"):
            return psi.inverse_log(-gamma * np.log(t))

    return EvaluableFunction(lambda z: radial(1.0 - norm(z)).astype(complex), True,
                             f"invweight:{gamma:g}", radial=radial, holomorphic=False)


def make_function(key: str, N: int = 1, alpha: float = 0.0,
                  psi: OrliczFunction | None = None) -> EvaluableFunction:
    """String constructors: fa:r, ga:r, monomial:n, powgrowth:s, constant:c,
    pole:s, invweight[:gamma]."""
    name, *rest = key.strip().split(":")
    vals = [float(v) for v in rest]
    if name == "fa":
        return berezin_function(BerezinProbe.on_axis(vals[0], N, alpha))
    if name == "ga":
        if psi is None:
            raise ValueError("ga needs an Orlicz function")
        return g_function(BerezinProbe.on_axis(vals[0], N, alpha), psi)
    if name == "monomial":
        return monomial(int(vals[0]), N)
    if name == "powgrowth":
        return boundary_function(vals[0])
    if name == "constant":
        return constant_function(vals[0])
    if name == "pole":
        return pole_power(vals[0], N)
    if name == "invweight":
        if psi is None:
            raise ValueError("invweight needs an Orlicz function")
        return inverse_weight_function(psi, vals[0] if vals else 1.0)
    raise ValueError(f"unknown test function {key!r}")


def cauchy_riemann_residual(fn, z, direction, h: float = 1e-5) -> float:
    """|d/d(conj lambda) fn(z + lambda v)| at lambda = 0 by central differences,
    relative to |d/d lambda|."""
    z = as_point(z)
    v = as_point(direction)
    f = lambda lam: complex(np.ravel(fn(z + lam * v))[0])
    dx = (f(h) - f(-h)) / (2 * h)
    dy = (f(1j * h) - f(-1j * h)) / (2 * h)
    dbar = 0.5 * (dx + 1j * dy)
    d = 0.5 * (dx - 1j * dy)
    return abs(dbar) / max(abs(d), 1.0)
