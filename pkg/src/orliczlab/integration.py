"""Quadrature and Monte Carlo over the weighted ball measures and the sphere.

The radial part uses Gauss-Legendre after the substitution 1 - r = u^k, the
angular part a shared i.i.d. sample of the sphere. Random numbers come from
fixed-size chunks, each with its own seed-sequence substream, so results do
not depend on how many worker threads process the chunks.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache
from dataclasses import dataclass, field, replace, fields
from typing import Callable, Sequence

import numpy as np
from scipy import special, stats

from .geometry import norm

CHUNK = 1 << 15
DIVERGENCE_JUMP = 0.10

# substream tags, kept distinct so different uses never share random numbers
STREAM_SPHERE = 1
STREAM_EVENT = 2
STREAM_ZETA = 3


@dataclass(frozen=True)
class MeasureSpec:
    N: int
    alpha: float

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        if not self.alpha >= -1:
            raise ValueError("alpha must be >= -1")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def is_sphere(self) -> bool:
        return self.alpha == -1

    @property
    def exponent(self) -> float:
        """N + alpha + 1, the power that keeps showing up in the estimates."""
        return self.N + self.alpha + 1.0


@dataclass(frozen=True)
class QuadratureConfig:
    radial_nodes: int = 64
    boundary_exponent: float = 3.0
    mc_samples: int = 16384
    seed: int = 0
    confidence: float = 0.95
    tol: float = 1e-9
    threads: int = 1

    def __post_init__(self):
        if self.radial_nodes < 16:
            raise ValueError("radial_nodes must be >= 16")
        if self.mc_samples < 1000:
            raise ValueError("mc_samples must be >= 1000")
        if not 0 < self.confidence < 1:
            raise ValueError("confidence must lie in (0, 1)")
        if not self.boundary_exponent >= 1:
            raise ValueError("boundary_exponent must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    @property
    def z(self) -> float:
        return float(stats.norm.ppf(0.5 + 0.5 * self.confidence))

    def with_(self, **kw) -> "QuadratureConfig":
        return replace(self, **kw)

    def echo(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d.pop("threads")  # never changes results
        return d

    @classmethod
    def from_file(cls, path: str | os.PathLike) -> "QuadratureConfig":
        """Read ``key = value`` lines; '#' starts a comment."""
        kw = {}
        types = {f.name: f.type for f in fields(cls)}
        with open(path) as fh:
            for raw in fh:
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"bad config line: {raw!r}")
                k, v = (s.strip() for s in line.split("=", 1))
                k = k.replace("-", "_")
                if k not in types:
                    raise ValueError(f"unknown config key {k!r}")
                kw[k] = _coerce(types[k], v)
        return cls(**kw)


def _coerce(typ, v: str):
    if typ in ("int", int):
        return int(float(v))
    return float(v)


@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    half_width: float
    diverged: bool = False
    lower: float | None = None
    upper: float | None = None

    def __post_init__(self):
        if self.lower is None:
            object.__setattr__(self, "lower", self.value - self.half_width)
        if self.upper is None:
            object.__setattr__(self, "upper", self.value + self.half_width)

    def to_dict(self) -> dict:
        return {"value": self.value, "half_width": self.half_width, "diverged": self.diverged,
                "lower": self.lower, "upper": self.upper}


def normalizing_constant(spec: MeasureSpec) -> float:
    if spec.is_sphere:
        raise ValueError("the sphere measure has no c_alpha")
    N, a = spec.N, spec.alpha
    return math.exp(special.gammaln(N + a + 1) - special.gammaln(N + 1) - special.gammaln(a + 1))


# ---------------------------------------------------------------------------
# chunked random streams


def chunk_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, index)))


def map_chunks(fn: Callable[[int, int, int], object], total: int, threads: int = 1,
               chunk: int = CHUNK) -> list:
    """Call fn(index, start, size) for each fixed-size chunk; results in chunk order."""
    jobs = [(i, s, min(chunk, total - s)) for i, s in enumerate(range(0, total, chunk))]
    if threads <= 1 or len(jobs) == 1:
        return [fn(*j) for j in jobs]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(lambda j: fn(*j), jobs))


def _gaussian_sphere(rng: np.random.Generator, size: int, N: int) -> np.ndarray:
    g = rng.standard_normal((size, N, 2))
    z = g[..., 0] + 1j * g[..., 1]
    return z / norm(z)[:, None]


def sample_sphere(spec: MeasureSpec | int, count: int, seed: int, threads: int = 1,
                  stream: int = STREAM_SPHERE) -> np.ndarray:
    """count i.i.d. points of the unit sphere of C^N, shape (count, N)."""
    N = spec.N if isinstance(spec, MeasureSpec) else int(spec)
    if count < 1:
        raise ValueError("count must be >= 1")
    parts = map_chunks(lambda i, s, n: _gaussian_sphere(chunk_rng(seed, stream, i), n, N),
                       count, threads)
    return np.concatenate(parts, axis=0)


# ---------------------------------------------------------------------------
# radial rule


@dataclass(frozen=True)
class RadialRule:
    r: np.ndarray
    depth: np.ndarray  # 1 - r, kept exactly even where r rounds to 1
    weight: np.ndarray


@lru_cache(maxsize=64)
def _gauss_legendre(n: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = special.roots_legendre(n)
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def effective_exponent(spec: MeasureSpec, cfg: QuadratureConfig) -> float:
    # for alpha < 0 the weight (1-r^2)^alpha is itself singular; dividing the
    # exponent by (alpha + 1) turns the weight into a smooth power of u
    k = cfg.boundary_exponent
    if spec.alpha < 0:
        k = k / (spec.alpha + 1.0)
    return k


def radial_rule(spec: MeasureSpec, cfg: QuadratureConfig, n: int | None = None) -> RadialRule:
    n = n or cfg.radial_nodes
    x, w = _gauss_legendre(n)
    u = 0.5 * (x + 1.0)
    w = 0.5 * w
    k = effective_exponent(spec, cfg)
    logu = np.log(u)
    t = np.exp(k * logu)
    r = 1.0 - t
    N, a = spec.N, spec.alpha
    ca = normalizing_constant(spec)
    # 2N c_a r^{2N-1} (t (2 - t))^a * k u^{k-1}, the u-powers combined in logs
    logw = (np.log(2 * N * ca * k) + (2 * N - 1) * np.log1p(-t) + a * np.log(2.0 - t)
            + (k * (a + 1.0) - 1.0) * logu)
    return RadialRule(r, t, w * np.exp(logw))


# ---------------------------------------------------------------------------
# discretizations


def hill_tail_index(x: np.ndarray, k: int | None = None) -> float:
    """Hill estimate of the Pareto tail index of a positive sample."""
    x = np.asarray(x, dtype=float)
    x = x[np.isfinite(x) & (x > 0)]
    if x.size < 20:
        return math.inf
    k = k or max(10, int(math.sqrt(x.size)))
    k = min(k, x.size - 1)
    top = -np.sort(-x)[: k + 1]
    m = float(np.mean(np.log(top[:k] / top[k])))
    return math.inf if m <= 0 else 1.0 / m


@dataclass
class Discretization:
    """A function frozen on the nodes of a measure.

    ``integrate(transform)`` integrates transform(values); the Luxemburg
    bisection calls it once per trial constant without re-evaluating f.
    kind: "radial" (values per node), "tensor" (node x sphere sample) or
    "sphere" (sphere sample only).
    """

    kind: str
    coarse: np.ndarray | None
    fine: np.ndarray
    w_coarse: np.ndarray | None
    w_fine: np.ndarray | None
    z: float
    tail_check: bool = True
    extra: dict = field(default_factory=dict)
    ray_tail_check: bool = False

    def integrate(self, transform: Callable[[np.ndarray], np.ndarray] | None = None
                  ) -> IntegralEstimate:
        tf = transform or (lambda v: v)
        with np.errstate(over="ignore", invalid="ignore"):
            fine = tf(self.fine)
            if np.any(np.isnan(fine)):
                fine = np.where(np.isnan(fine), np.inf, fine)
            if self.kind == "sphere":
                return _sphere_estimate(fine, self.z, self.tail_check)
            coarse = tf(self.coarse)
            if self.kind == "radial":
                I2 = float(np.sum(self.w_fine * fine))
                I1 = float(np.sum(self.w_coarse * coarse))
                est = _refined(I1, I2, 0.0)
                if "half" in self.extra and not est.diverged:
                    I0 = float(np.sum(self.extra["w_half"] * tf(self.extra["half"])))
                    est = _algebraic_tail(I0, I1, est)
                return est
            R2 = self.w_fine @ fine
            R1 = self.w_coarse @ coarse
            if self.kind == "grid":
                # deterministic angular rule: weights live in extra
                I2 = float(R2 @ self.extra["theta_w_fine"])
                I1 = float(R1 @ self.extra["theta_w_coarse"])
                return _refined(I1, I2, 0.0)
        I2 = float(np.mean(R2))
        I1 = float(np.mean(R1))
        if not math.isfinite(I2):
            return IntegralEstimate(math.inf, math.inf, True)
        with np.errstate(over="ignore"):  # huge finite rays give an infinite band
            mc = self.z * float(np.std(R2)) / math.sqrt(R2.size) if R2.size > 1 else 0.0
        est = _refined(I1, I2, mc)
        if self.ray_tail_check and not est.diverged and hill_tail_index(R2) < 1.0:
            # every ray finite but their mean is not
            return IntegralEstimate(est.value, math.inf, True)
        return est


    def log_integrate(self, log_transform: Callable[[np.ndarray], np.ndarray]
                      ) -> tuple[float, bool]:
        """(log of the integral of exp(log_transform(values)), diverged).

        Same divergence tests as integrate, carried out on logs so that a
        bounded but astronomically large integrand stays finite.
        """
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            lf = np.where(np.isnan(v := log_transform(self.fine)), np.inf, v)
            if np.any(lf == np.inf):
                return math.inf, True
            if self.kind == "sphere":
                l2 = float(special.logsumexp(lf)) - math.log(lf.size)
                heavy = self.tail_check and hill_tail_index(np.exp(lf - lf.max())) < 1.0
                return l2, bool(heavy)
            lc = np.where(np.isnan(v := log_transform(self.coarse)), np.inf, v)
            if np.any(lc == np.inf):
                return math.inf, True
            if self.kind == "radial":
                l2 = float(special.logsumexp(lf + np.log(self.w_fine)))
                l1 = float(special.logsumexp(lc + np.log(self.w_coarse)))
                return l2, _log_jump(l1, l2)
            R2 = special.logsumexp(lf + np.log(self.w_fine)[:, None], axis=0)
            R1 = special.logsumexp(lc + np.log(self.w_coarse)[:, None], axis=0)
            if self.kind == "grid":
                l2 = float(special.logsumexp(R2 + np.log(self.extra["theta_w_fine"])))
                l1 = float(special.logsumexp(R1 + np.log(self.extra["theta_w_coarse"])))
                return l2, _log_jump(l1, l2)
            l2 = float(special.logsumexp(R2)) - math.log(R2.size)
            l1 = float(special.logsumexp(R1)) - math.log(R1.size)
            div = _log_jump(l1, l2)
            if self.ray_tail_check and not div:
                div = hill_tail_index(np.exp(R2 - R2.max())) < 1.0
            return l2, bool(div)


def _log_jump(l1: float, l2: float) -> bool:
    if not (math.isfinite(l1) and math.isfinite(l2)):
        return not (l1 == l2 == -math.inf)
    return abs(math.expm1(l1 - l2)) > DIVERGENCE_JUMP


def _refined(I1: float, I2: float, mc: float) -> IntegralEstimate:
    if not (math.isfinite(I1) and math.isfinite(I2)):
        return IntegralEstimate(math.inf, math.inf, True)
    jump = abs(I2 - I1)
    diverged = jump > DIVERGENCE_JUMP * abs(I2)
    return IntegralEstimate(I2, jump + mc, bool(diverged))


def _algebraic_tail(I0: float, I1: float, est: IntegralEstimate) -> IntegralEstimate:
    # an endpoint singularity left after the substitution makes the error
    # shrink by a fixed ratio per doubling; sum the rest of that series
    d1, d2 = I1 - I0, est.value - I1
    if not (math.isfinite(I0) and d1 != 0 and d1 * d2 > 0):
        return est
    ratio = d2 / d1
    if ratio >= 1:
        return est
    tail = abs(d2) * ratio / (1 - ratio)
    return IntegralEstimate(est.value, max(est.half_width, tail), False)


def _sphere_estimate(vals: np.ndarray, z: float, tail_check: bool) -> IntegralEstimate:
    if not np.all(np.isfinite(vals)):
        return IntegralEstimate(math.inf, math.inf, True)
    m = float(np.mean(vals))
    hw = z * float(np.std(vals)) / math.sqrt(vals.size)
    diverged = tail_check and hill_tail_index(vals) < 1.0
    return IntegralEstimate(m, hw, bool(diverged))


def discretize_radial(g: Callable[[np.ndarray], np.ndarray], spec: MeasureSpec,
                      cfg: QuadratureConfig, depth: bool = False) -> Discretization:
    """g(r) on the radial nodes; with depth=True g receives 1 - r instead."""
    if spec.is_sphere:
        raise ValueError("radial integrals need alpha > -1")
    n = cfg.radial_nodes
    c, f = radial_rule(spec, cfg, n), radial_rule(spec, cfg, 2 * n)
    arg = (lambda rr: rr.depth) if depth else (lambda rr: rr.r)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        vc = np.asarray(g(arg(c)), dtype=float) * np.ones_like(c.r)
        vf = np.asarray(g(arg(f)), dtype=float) * np.ones_like(f.r)
        h = radial_rule(spec, cfg, n // 2)
        vh = np.asarray(g(arg(h)), dtype=float) * np.ones_like(h.r)
    return Discretization("radial", vc, vf, c.weight, f.weight, cfg.z,
                          extra={"half": vh, "w_half": h.weight})


def discretize_space(f: Callable[[np.ndarray], np.ndarray], spec: MeasureSpec,
                     cfg: QuadratureConfig, tail_check: bool = True,
                     zeta: np.ndarray | None = None) -> Discretization:
    """f evaluated at r_i * zeta_j (ball) or at zeta_j (sphere).

    f receives an array of points of shape (..., N) and returns real values.
    """
    if zeta is None:
        zeta = sample_sphere(spec, cfg.mc_samples, cfg.seed, cfg.threads)
    if spec.is_sphere:
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            vals = np.asarray(f(zeta), dtype=float)
        return Discretization("sphere", None, vals, None, None, cfg.z, tail_check)
    n = cfg.radial_nodes
    rc, rf = radial_rule(spec, cfg, n), radial_rule(spec, cfg, 2 * n)

    def block(rr: RadialRule) -> np.ndarray:
        pts = rr.r[:, None, None] * zeta[None, :, :]
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return np.asarray(f(pts), dtype=float)

    return Discretization("tensor", block(rc), block(rf), rc.weight, rf.weight, cfg.z, tail_check)


def circle_rule(hot_angles: Sequence[float] = (), m: int = 4096, cluster: int = 4
                ) -> tuple[np.ndarray, np.ndarray]:
    """Angles and weights (summing to 1) for averages over the circle.

    Without hot angles: the equispaced trapezoid rule. Otherwise Gauss-Legendre
    on each arc between consecutive hot angles, with nodes pushed toward both
    arc ends by s(u) = u^k / (u^k + (1-u)^k).
    """
    if not len(hot_angles):
        th = 2 * math.pi * np.arange(m) / m
        return th, np.full(m, 1.0 / m)
    hot = np.sort(np.mod(np.asarray(hot_angles, dtype=float), 2 * math.pi))
    ends = np.append(hot, hot[0] + 2 * math.pi)
    per_arc = max(16, m // len(hot))
    x, w = _gauss_legendre(per_arc)
    u = 0.5 * (x + 1.0)
    w = 0.5 * w
    k = cluster
    a_, b_ = u**k, (1.0 - u) ** k
    s = a_ / (a_ + b_)
    ds = k * u ** (k - 1) * (1.0 - u) ** (k - 1) / (a_ + b_) ** 2
    th, wt = [], []
    for a, b in zip(ends[:-1], ends[1:]):
        th.append(a + (b - a) * s)
        wt.append(w * ds * (b - a) / (2 * math.pi))
    return np.mod(np.concatenate(th), 2 * math.pi), np.concatenate(wt)


def discretize_disc_grid(f: Callable[[np.ndarray], np.ndarray], spec: MeasureSpec,
                         cfg: QuadratureConfig, hot_angles: Sequence[float] = (),
                         m: int = 2048) -> Discretization:
    """Product rule on the disc (N = 1): radial Gauss-Legendre x circle_rule.

    The coarse level halves both the radial and the angular node counts.
    """
    if spec.N != 1:
        raise ValueError("the product grid is for the disc only")
    n = cfg.radial_nodes
    th_c, w_c = circle_rule(hot_angles, m // 2)
    th_f, w_f = circle_rule(hot_angles, m)
    if spec.is_sphere:
        raise ValueError("use the circle rule directly for alpha = -1")
    rc, rf = radial_rule(spec, cfg, n), radial_rule(spec, cfg, 2 * n)

    def block(rr, th):
        pts = (rr.r[:, None] * np.exp(1j * th)[None, :])[..., None]
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            return np.asarray(f(pts), dtype=float)

    return Discretization("grid", block(rc, th_c), block(rf, th_f), rc.weight, rf.weight,
                          cfg.z, False, {"theta_w_coarse": w_c, "theta_w_fine": w_f})


def integrate_radial(g, spec: MeasureSpec, cfg: QuadratureConfig, depth: bool = False
                     ) -> IntegralEstimate:
    return discretize_radial(g, spec, cfg, depth).integrate()


def integrate_space(f, spec: MeasureSpec, cfg: QuadratureConfig, tail_check: bool = True
                    ) -> IntegralEstimate:
    return discretize_space(f, spec, cfg, tail_check).integrate()


# ---------------------------------------------------------------------------
# event measures


def wilson_interval(k: int, n: int, z: float) -> tuple[float, float]:
    if n == 0:
        return 0.0, 1.0
    p = k / n
    den = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / den
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return max(0.0, centre - half), min(1.0, centre + half)


def shell_mass(spec: MeasureSpec, width: float) -> float:
    """v_alpha of the corona 1 - |z| < width."""
    if width >= 1:
        return 1.0
    s = width * (2.0 - width)  # 1 - r^2 at r = 1 - width
    return float(special.betainc(spec.alpha + 1.0, spec.N, s))


def sample_ball(spec: MeasureSpec, rng: np.random.Generator, size: int,
                shell: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Points of v_alpha (restricted to 1 - |z| < shell if given) and their depths."""
    zeta = _gaussian_sphere(rng, size, spec.N)
    if spec.is_sphere:
        return zeta, np.zeros(size)
    # 1 - r^2 follows Beta(alpha + 1, N); invert its CDF, truncated to the shell
    a, b = spec.alpha + 1.0, spec.N
    top = 1.0 if shell is None or shell >= 1 else float(special.betainc(a, b, shell * (2 - shell)))
    u = rng.random(size) * top
    s = special.betaincinv(a, b, u)
    r = np.sqrt(1.0 - s)
    depth = s / (1.0 + r)
    return r[:, None] * zeta, depth


def estimate_event_measure(event: Callable[[np.ndarray, np.ndarray], np.ndarray],
                           spec: MeasureSpec, cfg: QuadratureConfig, shell: float | None = None,
                           samples: int | None = None, stream: int = STREAM_EVENT
                           ) -> IntegralEstimate:
    """Probability of an event under v_alpha (or sigma_N when alpha = -1).

    event(z, depth) gets points and their exact distances 1 - |z|. With a
    shell width, sampling is restricted to that corona and the count is scaled
    by its mass; callers must guarantee the event lies inside the shell.
    """
    n = samples or cfg.mc_samples

    def work(i, s, size):
        z, d = sample_ball(spec, chunk_rng(cfg.seed, stream, i), size, shell)
        return int(np.count_nonzero(event(z, d)))

    k = sum(map_chunks(work, n, cfg.threads))
    mass = 1.0 if spec.is_sphere or shell is None else shell_mass(spec, shell)
    lo, hi = wilson_interval(k, n, cfg.z)
    p = k / n
    if k == n and mass == 1.0:
        return IntegralEstimate(1.0, 0.0, False, lower=lo, upper=1.0)
    return IntegralEstimate(mass * p, mass * max(hi - p, p - lo), False, lower=mass * lo,
                            upper=mass * hi)
