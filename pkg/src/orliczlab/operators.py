"""Composition-operator diagnostics on Bergman-Orlicz and Hardy-Orlicz spaces.

Every test returns a DiagnosticsReport with a verdict in
{pass, fail, inconclusive} (koranyi_verdict may also say not-applicable),
the witnesses behind it and the config needed to rerun it.

Sup-type quantities are maxima over sampled points and therefore lower
bounds. Measure comparisons use Wilson bands: a fail needs the lower band
to violate the threshold, a pass needs the upper band to respect it.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np
from scipy import special

from .geometry import (KoranyiRegion, as_point, critical_opening, e1, inner, norm)
from .integration import (DIVERGENCE_JUMP, STREAM_EVENT, STREAM_ZETA, Discretization,
                          IntegralEstimate, MeasureSpec, QuadratureConfig, chunk_rng,
                          circle_rule, discretize_disc_grid, discretize_radial,
                          discretize_space, map_chunks, sample_ball, sample_sphere,
                          _log_jump, shell_mass, wilson_interval)
from .orlicz import OrliczFunction, check_growth_class
from .probes import BerezinProbe, berezin_f
from .spaces import (NormEstimate, _golden_max, luxemburg_from, morse_transue_membership)
from .symbols import Symbol, check_containment

EPS_LADDER = (1e-2, 1e-3, 1e-4)
SLOPE_TOL = 0.1
MIN_CERT_COUNT = 5
DEFAULT_RHO_SAMPLES = 1 << 18


def default_A_grid() -> np.ndarray:
    return 2.0 ** np.arange(-3, 8)


def default_h_grid() -> np.ndarray:
    return np.logspace(-3, -1, 9)


# ---------------------------------------------------------------------------
# reports


@dataclass
class Estimate:
    name: str
    value: float
    half_width: float = 0.0

    def to_dict(self) -> dict:
        return {"name": self.name, "value": self.value, "half_width": self.half_width}


@dataclass
class DiagnosticsReport:
    test: str
    verdict: str
    witnesses: dict = field(default_factory=dict)
    estimates: list = field(default_factory=list)
    config: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    rows: list = field(default_factory=list)  # per grid point records for tabular output

    def __post_init__(self):
        if self.verdict not in ("pass", "fail", "inconclusive", "not-applicable"):
            raise ValueError(f"bad verdict {self.verdict!r}")

    def to_dict(self) -> dict:
        return {"test": self.test, "verdict": self.verdict, "witnesses": self.witnesses,
                "estimates": [e.to_dict() for e in self.estimates], "config": self.config,
                "notes": list(self.notes)}


def _config(cfg: QuadratureConfig, samples: int | None = None, **grids) -> dict:
    clean = {k: (np.asarray(v).tolist() if isinstance(v, np.ndarray) else v)
             for k, v in grids.items()}
    return {"seed": cfg.seed, "samples": int(samples or cfg.mc_samples), "grids": clean,
            "quadrature": cfg.echo()}


@lru_cache(maxsize=32)
def _growth_class(psi: OrliczFunction):
    return check_growth_class(psi)


def psi_in(psi: OrliczFunction, condition: str) -> bool | None:
    return getattr(_growth_class(psi), condition).holds


# ---------------------------------------------------------------------------
# discretizing functions of the symbol


def _hot_angles(symbol: Symbol) -> list[float]:
    return [float(np.angle(as_point(p)[0])) for p in symbol.hot_points]


class BoundaryLadder:
    """Sphere integrals of G(1 - |phi((1 - eps) zeta)|) for eps down the ladder.

    An integral counts as finite only when the last two rungs agree to within
    DIVERGENCE_JUMP; the boundary map itself is never available.
    """

    def __init__(self, discs: list, eps: Sequence[float]):
        self.discs = discs
        self.eps = tuple(eps)
        self.fine = discs[-1].fine

    def integrate(self, transform=None) -> IntegralEstimate:
        ests = [d.integrate(transform) for d in self.discs]
        last, prev = ests[-1], ests[-2]
        if last.diverged or not math.isfinite(last.value):
            return IntegralEstimate(math.inf, math.inf, True)
        jump = abs(last.value - prev.value)
        if jump > DIVERGENCE_JUMP * abs(last.value) and not _settling([e.value for e in ests]):
            return IntegralEstimate(last.value, math.inf, True)
        return IntegralEstimate(last.value, last.half_width + jump, False)

    def log_integrate(self, log_transform):
        res = [d.log_integrate(log_transform) for d in self.discs]
        l2, d2 = res[-1]
        if d2 or not math.isfinite(l2):
            return l2, True
        logs = [r[0] for r in res]
        if not _log_jump(logs[-2], l2):
            return l2, False
        return l2, not _settling(logs)


def _settling(values) -> bool:
    # a convergent ladder has jumps shrinking roughly with eps; divergent
    # growth (powers or logs of 1/eps) keeps them at least half as large
    v = np.asarray(values, dtype=float)
    if v.size < 3 or not np.all(np.isfinite(v)):
        return False
    d = np.abs(np.diff(v))
    return bool(d[-1] <= 0.5 * d[-2])


class _Composed:
    """A discretization seen through a pointwise map of its values."""

    def __init__(self, disc, pre: Callable[[np.ndarray], np.ndarray]):
        self.disc = disc
        self.pre = pre
        with np.errstate(over="ignore", invalid="ignore"):
            self.fine = pre(disc.fine)

    def integrate(self, transform=None):
        tf = transform or (lambda v: v)
        return self.disc.integrate(lambda v: tf(self.pre(v)))

    def log_integrate(self, log_transform):
        return self.disc.log_integrate(lambda v: log_transform(self.pre(v)))


def _sphere_disc(value: Callable[[np.ndarray], np.ndarray], spec: MeasureSpec,
                 cfg: QuadratureConfig, hot: list[float]) -> Discretization:
    if spec.N == 1:
        th_c, w_c = circle_rule(hot, 2048)
        th_f, w_f = circle_rule(hot, 4096)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            vc = np.asarray(value(np.exp(1j * th_c)[:, None]), dtype=float)[None, :]
            vf = np.asarray(value(np.exp(1j * th_f)[:, None]), dtype=float)[None, :]
        one = np.ones(1)
        return Discretization("grid", vc, vf, one, one, cfg.z, False,
                              {"theta_w_coarse": w_c, "theta_w_fine": w_f})
    return discretize_space(value, spec, cfg, tail_check=True)


def symbol_discretization(symbol: Symbol, value: Callable[[np.ndarray], np.ndarray],
                          spec: MeasureSpec, cfg: QuadratureConfig,
                          of_depth: Callable[[np.ndarray], np.ndarray] | None = None):
    """Discretize z -> value(z) over v_alpha (or the boundary ladder at alpha = -1).

    of_depth, when given, is value expressed through 1 - |phi(z)|; radial
    symbols then take the exact one-dimensional route.
    """
    hot = _hot_angles(symbol) if symbol.N == 1 else []
    if spec.is_sphere:
        discs = []
        for eps in EPS_LADDER:
            discs.append(_sphere_disc(lambda zeta, eps=eps: value((1.0 - eps) * zeta),
                                      spec, cfg, hot))
        return BoundaryLadder(discs, EPS_LADDER)
    if symbol.is_radial and of_depth is not None:
        return discretize_radial(lambda t: of_depth(symbol.radial_depth(t)), spec, cfg, depth=True)
    if spec.N == 1:
        return discretize_disc_grid(value, spec, cfg, hot)
    disc = discretize_space(value, spec, cfg, tail_check=False)
    disc.ray_tail_check = True
    return disc


def _depth_of(symbol: Symbol):
    return lambda z: 1.0 - norm(symbol(z))


def evaluation_bound_discretization(symbol: Symbol, psi: OrliczFunction, spec: MeasureSpec,
                                    cfg: QuadratureConfig):
    """g = psi^{-1}((1 - |phi|)^{-(N + alpha + 1)}) on the nodes."""
    e = spec.exponent

    def G(depth):
        with np.errstate(divide="ignore"):
            return psi.inverse_log(-e * np.log(depth))

    depth = _depth_of(symbol)
    return symbol_discretization(symbol, lambda z: G(depth(z)), spec, cfg, of_depth=G)


def _lux_tol(cfg: QuadratureConfig) -> float:
    return max(cfg.tol, 1e-7)


def _norm_estimate(name: str, est: NormEstimate) -> Estimate:
    if est.diverged:
        return Estimate(name, math.inf, math.inf)
    return Estimate(name, est.value, 0.5 * (est.upper - est.lower))


# ---------------------------------------------------------------------------
# sup ratios


def _ratio_points(symbol: Symbol, cfg: QuadratureConfig, directions: int = 4096):
    """Domain depths t = 1 - |z| and image depths 1 - |phi(z)| on a search set.

    Returns (t, image_depth, direction_index, directions).
    """
    ts = np.concatenate([[1.0], 2.0 ** (-np.arange(1, 94) / 2.0)])
    if symbol.is_radial:
        t = np.concatenate([ts, np.logspace(-14, 0, 600)])
        return t, symbol.radial_depth(t), np.zeros(t.size, dtype=int), e1(symbol.N)[None, :]
    N = symbol.N
    if N == 1:
        th = list(2 * math.pi * np.arange(2048) / 2048)
        for a in _hot_angles(symbol):
            off = np.logspace(-12, -0.5, 60)
            th.extend(a + off)
            th.extend(a - off)
        dirs = np.exp(1j * np.asarray(th))[:, None]
    else:
        dirs = [sample_sphere(N, directions, cfg.seed, cfg.threads), e1(N)[None, :]]
        for p in symbol.hot_points:
            p = as_point(p)
            dirs.append((p / norm(p))[None, :])
        dirs = np.concatenate(dirs)
    pts = (1.0 - ts)[:, None, None] * dirs[None, :, :]
    dw = 1.0 - norm(symbol(pts))
    t = np.broadcast_to(ts[:, None], dw.shape)
    idx = np.broadcast_to(np.arange(dirs.shape[0])[None, :], dw.shape)
    return t.ravel(), dw.ravel(), idx.ravel(), dirs


def _log_ratio(psi: OrliczFunction, gamma: float, t, dw):
    with np.errstate(divide="ignore", invalid="ignore"):
        num = psi.inverse_log(-gamma * np.log(dw))
        den = psi.inverse_log(-gamma * np.log(t))
        return num / den


def op_norm_ratio(symbol: Symbol, psi: OrliczFunction, spec: MeasureSpec,
                  cfg: QuadratureConfig, gamma: float = 1.0) -> NormEstimate:
    """Sampled sup over z of psi^{-1}((1-|phi|)^-gamma) / psi^{-1}((1-|z|)^-gamma)."""
    if not psi_in(psi, "delta2_upper"):
        warnings.warn(f"{psi.key} is not classified Delta^2; the ratio is then not a norm estimate",
                      stacklevel=2)
    t, dw, idx, dirs = _ratio_points(symbol, cfg)
    q = _log_ratio(psi, gamma, t, dw)
    q = np.where(np.isfinite(q), q, -np.inf)
    i = int(np.argmax(q))
    best, tb, d = float(q[i]), float(t[i]), dirs[idx[i]]

    # golden refinement in log depth along the winning direction
    def along(s):
        tt = math.exp(s)
        if symbol.is_radial:
            w = float(symbol.radial_depth(np.array(tt)))
        else:
            w = float(1.0 - norm(symbol((1.0 - tt) * d)))
        v = float(_log_ratio(psi, gamma, np.array(tt), np.array(w)))
        return v if math.isfinite(v) else -math.inf

    if tb < 1.0:
        s0 = math.log(tb)
        lo, hi = s0 - 0.5 * math.log(2.0), min(0.0, s0 + 0.5 * math.log(2.0))
        s_best, v = _golden_max(along, lo, hi, 60)
        if v > best:
            best, tb = v, math.exp(s_best)
    return NormEstimate(best, best, math.inf, sup_by_sampling=True,
                        details={"argmax_depth": tb, "gamma": gamma})


def schwarz_bound(symbol: Symbol, gamma: float) -> float:
    a = float(norm(symbol.center))
    return (2.0 / (1.0 - a)) ** gamma


# ---------------------------------------------------------------------------
# order boundedness


# Quadrature cannot see divergences slower than any power of the depth
# (e.g. delta^-k exp(-c sqrt(log 1/delta))): they only show up below 1e-300.
# The tail check fits the depth distribution P(1 - |phi| < h) ~ h^kappa on small
# coronas and integrates psi(G / C) against it in log variables far past that.
TAIL_H_GRID = tuple(np.logspace(-4, -1, 7))
TAIL_HORIZONS = (1e2, 1e3, 1e4, 1e5)
TAIL_GROWTH = math.log(1.1)
LUX_HEADROOM = 1e6
_depth_exponents: dict = {}


def depth_exponent(symbol: Symbol, spec: MeasureSpec, cfg: QuadratureConfig,
                   samples: int | None = None) -> float:
    """kappa with P(1 - |phi| < h) ~ h^kappa; nan when too few hits to fit."""
    if symbol.sup_modulus < 1.0:
        return math.inf
    key = (symbol.label, spec.N, spec.alpha, cfg.seed, samples)
    if key not in _depth_exponents:
        prof = corona_profile(symbol, spec, cfg, TAIL_H_GRID, samples)
        good = [p for p in prof if p.counts >= MIN_CERT_COUNT]
        kappa = math.nan
        if len(good) >= 2:
            kappa = fit_slope([p.h for p in good], [p.mass.value for p in good])
        _depth_exponents[key] = kappa
    return _depth_exponents[key]


def tail_diverges(psi: OrliczFunction, e: float, kappa: float, C: float,
                  start: float = 1e-2) -> bool:
    """Does int psi(psi^{-1}(x^-e) / C) d(x^kappa) grow without bound near 0?

    Integrated in t = log(1/x) over growing horizons; divergence means the
    last horizon still adds more than 10%.
    """
    if math.isnan(kappa) or kappa == math.inf:
        return False
    if kappa <= 0:
        return True
    t0 = -math.log(start)
    totals = []
    for K in TAIL_HORIZONS:
        t = np.geomspace(t0, K, 4000)
        w = np.gradient(t)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            lx = psi.log_inverse_log(e * t) - math.log(C)
            lf = psi.log_psi_at_log(lx) + math.log(kappa) - kappa * t
        if np.any(np.isnan(lf)) or np.any(lf == np.inf):
            return True
        totals.append(float(special.logsumexp(lf + np.log(w))))
    return not math.isfinite(totals[-1]) or totals[-1] - totals[-2] > TAIL_GROWTH


def order_bounded_L(symbol: Symbol, psi: OrliczFunction, spec: MeasureSpec,
                    cfg: QuadratureConfig, samples: int | None = None) -> DiagnosticsReport:
    disc = evaluation_bound_discretization(symbol, psi, spec, cfg)
    est = luxemburg_from(disc, psi, _lux_tol(cfg))
    notes = []
    kappa = math.nan
    if not est.diverged:
        kappa = depth_exponent(symbol, spec, cfg, samples)
        if tail_diverges(psi, spec.exponent, kappa, LUX_HEADROOM * est.value):
            est = NormEstimate(math.inf, math.inf, math.inf, True)
            notes.append(f"extrapolated tail diverges (depth exponent {kappa:.3g}) although "
                         "the quadrature converged")
        elif tail_diverges(psi, spec.exponent, kappa, est.value):
            notes.append("extrapolated tail diverges at the computed constant, so the "
                         "Luxemburg value is an underestimate")
    if spec.is_sphere and est.diverged:
        edge = disc.fine if symbol.N > 1 else disc.discs[-1].fine
        if np.all(np.isfinite(edge)) and _boundary_modulus_one(symbol, spec, cfg):
            notes.append("|phi*| = 1 on the whole sphere, so every corona has full measure "
                         "and the evaluation bound is not integrable")
    verdict = "fail" if est.diverged else "pass"
    return DiagnosticsReport("order_bounded_L", verdict,
                             {"luxemburg": None if est.diverged else est.value},
                             [_norm_estimate("luxemburg_evaluation_bound", est)],
                             _config(cfg, grids_eps=list(EPS_LADDER) if spec.is_sphere else None,
                                     N=spec.N, alpha=spec.alpha, psi=psi.key, symbol=symbol.label),
                             notes)


def _boundary_modulus_one(symbol: Symbol, spec: MeasureSpec, cfg: QuadratureConfig) -> bool:
    eps = EPS_LADDER[-1]
    zeta = sample_sphere(spec.N, 512, cfg.seed)
    d = 1.0 - norm(symbol((1.0 - eps) * zeta))
    return bool(np.mean(d <= 1.5 * eps) > 0.99)


def order_bounded_M(symbol: Symbol, psi: OrliczFunction, spec: MeasureSpec,
                    cfg: QuadratureConfig, c_grid: Sequence[float] | None = None,
                    samples: int | None = None) -> DiagnosticsReport:
    disc = evaluation_bound_discretization(symbol, psi, spec, cfg)
    mv = morse_transue_membership(None, psi, spec, cfg, c_grid, disc=disc)
    verdict = {"holds": "pass", "fails": "fail"}.get(mv.status, "inconclusive")
    cs = np.asarray(c_grid if c_grid is not None else 2.0 ** -np.arange(0, 11))
    notes = []
    witness = mv.witness
    if verdict == "pass":
        kappa = depth_exponent(symbol, spec, cfg, samples)
        bad = [C for C in cs if tail_diverges(psi, spec.exponent, kappa, float(C))]
        if bad:
            verdict, witness = "fail", float(max(bad))
            notes.append(f"extrapolated tail diverges at C = {witness:g} "
                         f"(depth exponent {kappa:.3g})")
    if verdict == "pass":
        notes.append("a pass here implies compactness of C_phi")
    if mv.note and witness == mv.witness:
        notes.append(mv.note)
    return DiagnosticsReport("order_bounded_M", verdict, {"constant": witness}, [],
                             _config(cfg, c_grid=cs, N=spec.N, alpha=spec.alpha, psi=psi.key,
                                     symbol=symbol.label), notes)


# ---------------------------------------------------------------------------
# pull-back measures


@dataclass(frozen=True)
class NonIsotropicBall:
    zeta: tuple
    h: float


@dataclass(frozen=True)
class Corona:
    h: float


@dataclass
class PullbackEstimate:
    h: float
    kind: str
    mass: IntegralEstimate
    zeta: tuple | None = None
    stable: bool = True
    counts: int = 0
    samples: int = 0


def _zero(h: float, kind: str, zeta=None) -> PullbackEstimate:
    return PullbackEstimate(h, kind, IntegralEstimate(0.0, 0.0, False, 0.0, 0.0), zeta)


def _shell(symbol: Symbol, h: float) -> float | None:
    if not symbol.holomorphic:
        return None
    a = float(norm(symbol.center))
    w = h * (1.0 + a) / (1.0 - a)  # Schwarz-Pick: 1-|phi(z)| < h forces 1-|z| < w
    return w if w < 1.0 else None


def _image_hits(symbol: Symbol, h: float, spec: MeasureSpec, cfg: QuadratureConfig,
                samples: int, eps: float | None = None, stream: int = STREAM_EVENT):
    """Images w = phi(z) with 1 - |w| < h out of `samples` draws, and the mass
    the draws represent."""
    shell = None if spec.is_sphere else _shell(symbol, h)

    def work(i, s, size):
        z, _ = sample_ball(spec, chunk_rng(cfg.seed, stream, i), size, shell)
        if eps is not None:
            z = (1.0 - eps) * z
        w = symbol(z)
        return w[1.0 - norm(w) < h]

    hits = map_chunks(work, samples, cfg.threads)
    hits = np.concatenate(hits) if hits else np.zeros((0, spec.N), complex)
    mass = 1.0 if shell is None else shell_mass(spec, shell)
    return hits, mass


def _mass_estimate(k: int, n: int, mass: float, z: float) -> IntegralEstimate:
    lo, hi = wilson_interval(k, n, z)
    p = k / n
    return IntegralEstimate(mass * p, mass * max(hi - p, p - lo), False, mass * lo, mass * hi)


def _ball_count(hits: np.ndarray, zeta: np.ndarray, h: float) -> int:
    if hits.shape[0] == 0:
        return 0
    return int(np.count_nonzero(np.abs(1.0 - inner(hits, zeta)) < h))


def _overlap(a: IntegralEstimate, b: IntegralEstimate) -> bool:
    return a.lower <= b.upper and b.lower <= a.upper


def pullback_measure(symbol: Symbol, region, spec: MeasureSpec, cfg: QuadratureConfig,
                     samples: int | None = None) -> PullbackEstimate:
    h = float(region.h)
    if not 0 < h < 1:
        raise ValueError("h must lie in (0, 1)")
    n = int(samples or cfg.mc_samples)
    kind = "corona" if isinstance(region, Corona) else "ball"
    zeta = None if kind == "corona" else as_point(region.zeta)
    ztuple = None if zeta is None else tuple(complex(c) for c in zeta)
    if h <= 1.0 - symbol.sup_modulus:
        return _zero(h, kind, ztuple)

    def one(eps):
        hits, mass = _image_hits(symbol, h, spec, cfg, n, eps)
        k = hits.shape[0] if kind == "corona" else _ball_count(hits, zeta, h)
        return _mass_estimate(k, n, mass, cfg.z), k

    if not spec.is_sphere:
        m, k = one(None)
        return PullbackEstimate(h, kind, m, ztuple, True, k, n)
    ests = [one(eps) for eps in EPS_LADDER]
    (m1, _), (m2, k2) = ests[-2], ests[-1]
    return PullbackEstimate(h, kind, m2, ztuple, _overlap(m1, m2), k2, n)


def _zeta_candidates(symbol: Symbol, N: int, cfg: QuadratureConfig, zeta_count: int,
                     hits: np.ndarray) -> np.ndarray:
    cands = [e1(N)[None, :]]
    for reg in symbol.regions:
        cands.append(reg.zeta[None, :])
    for c in symbol.contacts:
        cands.append(as_point(c)[None, :])
    cands.append(sample_sphere(N, zeta_count, cfg.seed, cfg.threads, stream=STREAM_ZETA))
    if hits.shape[0]:
        deep = hits[np.argsort(-norm(hits))[:16]]
        cands.append(deep / norm(deep)[:, None])
    return np.concatenate(cands)


def ball_and_sup(symbol: Symbol, h: float, spec: MeasureSpec, cfg: QuadratureConfig,
                 zeta=None, zeta_count: int = 32, samples: int | None = None
                 ) -> tuple[PullbackEstimate, PullbackEstimate]:
    """Pull-back mass of S(zeta, h) and the sampled sup over zeta, from one
    set of image points (zeta defaults to e_1)."""
    if zeta_count < 32:
        raise ValueError("zeta_count must be >= 32")
    if not 0 < h < 1:
        raise ValueError("h must lie in (0, 1)")
    n = int(samples or DEFAULT_RHO_SAMPLES)
    zeta = e1(spec.N) if zeta is None else as_point(zeta)
    zt = tuple(complex(c) for c in zeta)
    if h <= 1.0 - symbol.sup_modulus:
        return _zero(h, "ball", zt), _zero(h, "sup", tuple(e1(spec.N)))

    def one(eps):
        hits, mass = _image_hits(symbol, h, spec, cfg, n, eps)
        cands = _zeta_candidates(symbol, spec.N, cfg, zeta_count, hits)
        counts = [_ball_count(hits, c, h) for c in cands]
        j = int(np.argmax(counts))
        k0 = _ball_count(hits, zeta, h)
        return (_mass_estimate(k0, n, mass, cfg.z), k0,
                _mass_estimate(counts[j], n, mass, cfg.z), counts[j], cands[j])

    if not spec.is_sphere:
        b, k0, m, k, z = one(None)
        return (PullbackEstimate(h, "ball", b, zt, True, k0, n),
                PullbackEstimate(h, "sup", m, tuple(complex(c) for c in z), True, k, n))
    prev, last = [one(eps) for eps in EPS_LADDER][-2:]
    b, k0, m, k, z = last
    return (PullbackEstimate(h, "ball", b, zt, _overlap(prev[0], b), k0, n),
            PullbackEstimate(h, "sup", m, tuple(complex(c) for c in z), _overlap(prev[2], m), k, n))


def rho_sup(symbol: Symbol, h: float, spec: MeasureSpec, cfg: QuadratureConfig,
            zeta_count: int = 32, samples: int | None = None) -> PullbackEstimate:
    """max over sampled zeta of the pull-back mass of S(zeta, h)."""
    return ball_and_sup(symbol, h, spec, cfg, None, zeta_count, samples)[1]


def rho_profile(symbol: Symbol, spec: MeasureSpec, cfg: QuadratureConfig,
                h_grid: Sequence[float] | None = None, zeta_count: int = 32,
                samples: int | None = None) -> list[PullbackEstimate]:
    hs = np.asarray(h_grid if h_grid is not None else default_h_grid(), dtype=float)
    return [rho_sup(symbol, float(h), spec, cfg, zeta_count, samples) for h in hs]


def corona_profile(symbol: Symbol, spec: MeasureSpec, cfg: QuadratureConfig,
                   h_grid: Sequence[float] | None = None, samples: int | None = None
                   ) -> list[PullbackEstimate]:
    hs = np.asarray(h_grid if h_grid is not None else default_h_grid(), dtype=float)
    n = samples or DEFAULT_RHO_SAMPLES
    return [pullback_measure(symbol, Corona(float(h)), spec, cfg, n) for h in hs]


def fit_slope(h: Sequence[float], mass: Sequence[float]) -> float:
    h = np.asarray(h, dtype=float)
    m = np.asarray(mass, dtype=float)
    ok = m > 0
    if ok.sum() < 2:
        return math.nan
    return float(np.polyfit(np.log(h[ok]), np.log(m[ok]), 1)[0])


# ---------------------------------------------------------------------------
# threshold comparisons


def threshold_log(psi: OrliczFunction, A: float, h, e: float):
    """log of 1 / psi(A psi^{-1}(h^{-e}))."""
    x = A * psi.inverse_log(-e * np.log(h))
    return -psi.log_psi(x)


def feasible_A(psi: OrliczFunction, h, mass, e: float) -> np.ndarray:
    """Largest A with mass <= 1 / psi(A psi^{-1}(h^{-e})); inf for zero mass."""
    h = np.asarray(h, dtype=float)
    mass = np.asarray(mass, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        num = psi.inverse_log(-np.log(mass))
        den = psi.inverse_log(-e * np.log(h))
        return np.where(mass > 0, num / den, np.inf)


def _bands(profile: list[PullbackEstimate]):
    """Mass bands with low-count lower bounds zeroed (not trusted for a fail)."""
    val = np.array([p.mass.value for p in profile])
    up = np.array([p.mass.upper for p in profile])
    lo = np.array([p.mass.lower if (p.counts >= MIN_CERT_COUNT or p.mass.half_width == 0)
                   else 0.0 for p in profile])
    return val, lo, up


def _slope(x, y) -> float:
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    ok = np.isfinite(y)
    if ok.sum() < 3:
        return math.nan
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def _bounded_verdict(hs, A_lo, A_hi, A_grid) -> tuple[str, dict, list]:
    """Is A*(h) bounded away from 0 as h -> 0?  hs ascending."""
    notes = []
    amin = float(np.min(A_grid))
    fin_hi = np.isfinite(A_hi)
    s_hi = _slope(hs, np.where(fin_hi, A_hi, np.nan))
    wit = {"slope_upper_A": s_hi}
    if (math.isfinite(s_hi) and s_hi > SLOPE_TOL and A_hi[fin_hi][0] < A_hi[fin_hi][-1]):
        notes.append(f"largest admissible A decays like h^{s_hi:.3f} (certified band)")
        return "fail", wit, notes
    if fin_hi[:2].all() and np.all(A_hi[:2] < amin):
        notes.append("no A on the grid is admissible at the smallest h")
        return "fail", wit, notes
    fin_lo = np.isfinite(A_lo)
    if not fin_lo.any():
        wit["A"] = float(np.max(A_grid))
        notes.append("pull-back mass vanishes on the whole h grid")
        return "pass", wit, notes
    s_lo = _slope(hs, np.where(fin_lo, A_lo, np.nan))
    wit["slope_lower_A"] = s_lo
    terminal = A_lo[: max(2, len(hs) // 2)]
    worst = float(np.min(terminal))
    if (not math.isfinite(s_lo) or s_lo <= SLOPE_TOL) and worst >= amin:
        ok = [a for a in A_grid if a <= worst]
        wit["A"] = float(max(ok))
        wit["eta"] = float(hs[max(2, len(hs) // 2) - 1])
        return "pass", wit, notes
    notes.append("confidence bands straddle the threshold")
    return "inconclusive", wit, notes


def _compact_verdict(hs, A_lo, A_hi, A_grid) -> tuple[str, dict, list]:
    """For every grid A, does A*(h) >= A hold on a terminal run of small h?"""
    h_A, bad = {}, []
    for A in A_grid:
        ok = A_lo >= A
        if ok[0] and ok[1]:
            run = int(np.argmin(ok)) if not ok.all() else len(ok)
            h_A[float(A)] = float(hs[run - 1])
        else:
            h_A[float(A)] = None
            if np.isfinite(A_hi[:2]).all() and np.all(A_hi[:2] < A):
                bad.append(float(A))
    wit = {"h_A": h_A}
    if bad:
        wit["failing_A"] = bad
        return "fail", wit, [f"A = {bad[0]:g} is violated at the two smallest h (certified band)"]
    if all(v is not None for v in h_A.values()):
        return "pass", wit, []
    return "inconclusive", wit, ["some A not certified within the h grid"]


def _profile_rows(profile, A_lo, A_hi):
    return [{"h": p.h, "mass": p.mass.value, "lower": p.mass.lower, "upper": p.mass.upper,
             "counts": p.counts, "A_lower": float(a), "A_upper": float(b), "stable": p.stable}
            for p, a, b in zip(profile, A_lo, A_hi)]


def _sorted_profile(profile):
    return sorted(profile, key=lambda p: p.h)


def bounded_necessary_check(symbol: Symbol, psi: OrliczFunction, spec: MeasureSpec,
                            cfg: QuadratureConfig, A_grid=None, h_grid=None,
                            rho: list[PullbackEstimate] | None = None, samples: int | None = None
                            ) -> DiagnosticsReport:
    """Necessary condition for boundedness: rho(h) <= 1/psi(A psi^{-1}(h^-e)) for
    some A and all small h. Pass rho data in to reuse an earlier sampling run."""
    A_grid = np.asarray(A_grid if A_grid is not None else default_A_grid(), dtype=float)
    prof = _sorted_profile(rho if rho is not None else
                           rho_profile(symbol, spec, cfg, h_grid, samples=samples))
    hs = np.array([p.h for p in prof])
    e = spec.exponent
    _, lo, up = _bands(prof)
    A_lo, A_hi = feasible_A(psi, hs, up, e), feasible_A(psi, hs, lo, e)
    verdict, wit, notes = _bounded_verdict(hs, A_lo, A_hi, A_grid)
    if not all(p.stable for p in prof):
        notes.append("boundary limit did not stabilize at some h")
        verdict = "inconclusive" if verdict == "pass" else verdict
    ests = [Estimate("mass_slope", fit_slope(hs, [p.mass.value for p in prof]))]
    return DiagnosticsReport("bounded_necessary_check", verdict, wit, ests,
                             _config(cfg, prof[0].samples if prof else None, A_grid=A_grid,
                                     h_grid=hs, N=spec.N, alpha=spec.alpha, psi=psi.key,
                                     symbol=symbol.label),
                             notes, _profile_rows(prof, A_lo, A_hi))


def compactness_criterion(symbol: Symbol, psi: OrliczFunction, spec: MeasureSpec,
                          cfg: QuadratureConfig, A_grid=None, h_grid=None,
                          rho: list[PullbackEstimate] | None = None, samples: int | None = None
                          ) -> DiagnosticsReport:
    A_grid = np.asarray(A_grid if A_grid is not None else default_A_grid(), dtype=float)
    prof = _sorted_profile(rho if rho is not None else
                           rho_profile(symbol, spec, cfg, h_grid, samples=samples))
    hs = np.array([p.h for p in prof])
    e = spec.exponent
    _, lo, up = _bands(prof)
    A_lo, A_hi = feasible_A(psi, hs, up, e), feasible_A(psi, hs, lo, e)
    verdict, wit, notes = _compact_verdict(hs, A_lo, A_hi, A_grid)
    if not psi_in(psi, "delta2_upper"):
        notes.append(f"{psi.key} is not classified Delta^2: the criterion is outside its "
                     "proven range and the verdict is indicative only")
    if not all(p.stable for p in prof) and verdict == "pass":
        verdict = "inconclusive"
        notes.append("boundary limit did not stabilize at some h")
    return DiagnosticsReport("compactness_criterion", verdict, wit, [],
                             _config(cfg, prof[0].samples if prof else None, A_grid=A_grid,
                                     h_grid=hs, N=spec.N, alpha=spec.alpha, psi=psi.key,
                                     symbol=symbol.label),
                             notes, _profile_rows(prof, A_lo, A_hi))


def corona_order_criteria(symbol: Symbol, psi: OrliczFunction, spec: MeasureSpec,
                          cfg: QuadratureConfig, A_grid=None, h_grid=None,
                          corona: list[PullbackEstimate] | None = None,
                          samples: int | None = None) -> DiagnosticsReport:
    """Corona-measure conditions for order boundedness into L^psi (1a) and its
    M^psi variant (2a); sufficient as well when psi is Delta^1."""
    A_grid = np.asarray(A_grid if A_grid is not None else default_A_grid(), dtype=float)
    prof = _sorted_profile(corona if corona is not None else
                           corona_profile(symbol, spec, cfg, h_grid, samples))
    hs = np.array([p.h for p in prof])
    e = spec.exponent
    _, lo, up = _bands(prof)
    A_lo, A_hi = feasible_A(psi, hs, up, e), feasible_A(psi, hs, lo, e)
    v1, wit1, notes = _bounded_verdict(hs, A_lo, A_hi, A_grid)

    # (2a): mu / threshold_A bounded as h -> 0, for each A
    per_A = {}
    for A in A_grid:
        tl = threshold_log(psi, A, hs, e)
        with np.errstate(divide="ignore"):
            r_hi = np.log(up) - tl
            r_lo = np.where(lo > 0, np.log(lo) - tl, -np.inf)
        if np.all(up == 0):
            per_A[float(A)] = "pass"
            continue
        good = np.isfinite(r_lo)
        if good.sum() >= 3:
            s = float(np.polyfit(np.log(hs[good]), r_lo[good], 1)[0])
            if s < -SLOPE_TOL and r_lo[good][0] > r_hi[good][-1]:
                per_A[float(A)] = "fail"
                continue
        s_hi = float(np.polyfit(np.log(hs), r_hi, 1)[0])
        per_A[float(A)] = "pass" if s_hi >= -SLOPE_TOL else "inconclusive"
    vals = list(per_A.values())
    v2 = "fail" if "fail" in vals else ("pass" if all(v == "pass" for v in vals) else "inconclusive")
    if not all(p.stable for p in prof):
        notes.append("boundary limit did not stabilize at some h")
        v1 = "inconclusive" if v1 == "pass" else v1
        v2 = "inconclusive" if v2 == "pass" else v2
    d1 = psi_in(psi, "delta1")
    wit = {"necessary_1a": v1, "mpsi_2a": v2, "per_A_2a": per_A, **wit1,
           "delta1": bool(d1)}
    if d1:
        wit["order_bounded_L"] = {"pass": "yes", "fail": "no"}.get(v1, "undecided")
        wit["order_bounded_M"] = {"pass": "yes", "fail": "no"}.get(v2, "undecided")
        notes.append("psi is Delta^1: both conditions are also sufficient")
    else:
        notes.append("psi is not Delta^1: a pass is necessary-only evidence")
    return DiagnosticsReport("corona_order_criteria", v1, wit,
                             [Estimate("mass_slope", fit_slope(hs, [p.mass.value for p in prof]))],
                             _config(cfg, prof[0].samples if prof else None, A_grid=A_grid,
                                     h_grid=hs, N=spec.N, alpha=spec.alpha, psi=psi.key,
                                     symbol=symbol.label),
                             notes, _profile_rows(prof, A_lo, A_hi))


def markov_corona_violations(psi: OrliczFunction, spec: MeasureSpec, luxemburg: float,
                             corona: list[PullbackEstimate], band: str = "lower") -> list[float]:
    """h values where mu(C(h)) exceeds 1/psi(psi^{-1}(h^-e) / luxemburg).

    Chebyshev-Markov forces this bound whenever the evaluation bound has the
    given Luxemburg norm. With band="lower" only certified excesses count
    (lower band, at least MIN_CERT_COUNT hits); band="upper" is the strict
    reading, which zero-hit shells trip purely through sampling resolution.
    """
    e = spec.exponent
    _, lo, up = _bands(corona)
    mass = lo if band == "lower" else up
    out = []
    for p, m in zip(corona, mass):
        t = float(np.exp(threshold_log(psi, 1.0 / luxemburg, np.array(p.h), e)))
        if m > t * (1 + 1e-12):
            out.append(p.h)
    return out


# ---------------------------------------------------------------------------
# Berezin test functions


def berezin_compactness(symbol: Symbol, psi: OrliczFunction, spec: MeasureSpec,
                        cfg: QuadratureConfig, a_grid: Sequence[float] | None = None
                        ) -> DiagnosticsReport:
    """q(a) = psi^{-1}((1-|a|)^-e) ||f_a o phi|| along rays; pass when q falls
    toward 0 over the last four radii on every ray."""
    if spec.is_sphere:
        raise ValueError("the Luxemburg route needs alpha > -1")
    a_grid = np.asarray(a_grid if a_grid is not None else 1.0 - 2.0 ** -np.arange(1, 11), float)
    if np.any(np.diff(a_grid) <= 0) or a_grid[-1] >= 1:
        raise ValueError("a_grid must increase inside (0, 1)")
    N, e = spec.N, spec.exponent
    rays = [e1(N)]
    for c in symbol.contacts:
        c = as_point(c)
        if not any(np.allclose(c, r) for r in rays):
            rays.append(c)
    tol = max(cfg.tol, 1e-6)
    rows, per_ray = [], []
    for ray in rays:
        qs = []
        for ra in a_grid:
            probe = BerezinProbe(tuple(ra * ray), spec.alpha, N)
            fa = lambda z, probe=probe: np.abs(berezin_f(probe, symbol(z)))
            disc = symbol_discretization(symbol, fa, spec, cfg)
            nrm = luxemburg_from(disc, psi, tol)
            scale = float(psi.inverse_log(-e * math.log1p(-ra)))
            q = math.inf if nrm.diverged else scale * nrm.value
            qs.append(q)
            rows.append({"ray": int(len(per_ray)), "a": float(ra), "q": q})
        last = np.array(qs[-4:])
        if not np.all(np.isfinite(last)):
            per_ray.append("inconclusive")
        elif np.all(np.diff(last) < 0) and last[-1] < 0.5 * last[0]:
            per_ray.append("pass")
        elif last[-1] >= 0.8 * last[0]:
            per_ray.append("fail")
        else:
            per_ray.append("inconclusive")
    if all(v == "pass" for v in per_ray):
        verdict = "pass"
    elif "fail" in per_ray and "pass" not in per_ray:
        verdict = "fail"
    else:
        verdict = "inconclusive"
    notes = [] if psi_in(psi, "delta2_upper") else [f"{psi.key} is not classified Delta^2"]
    return DiagnosticsReport("berezin_compactness", verdict,
                             {"per_ray": per_ray,
                              "rays": [[complex(c) for c in r] for r in rays]},
                             [Estimate(f"q_last_ray{i}", r["q"]) for i, r in
                              enumerate(rows[len(a_grid) - 1::len(a_grid)])],
                             _config(cfg, a_grid=a_grid, N=N, alpha=spec.alpha, psi=psi.key,
                                     symbol=symbol.label), notes, rows)


# ---------------------------------------------------------------------------
# sufficient conditions for compactness


def sufficient_compactness(symbol: Symbol, psi: OrliczFunction, spec: MeasureSpec,
                           cfg: QuadratureConfig, n_max: int = 200) -> DiagnosticsReport:
    """(i) 1/(1 - |phi|) in L^psi, or (ii) sum_n || |phi|^n || finite."""
    tol = max(cfg.tol, 1e-6)
    depth = _depth_of(symbol)

    def inv(d):
        with np.errstate(divide="ignore"):
            return 1.0 / d

    disc_i = symbol_discretization(symbol, lambda z: inv(depth(z)), spec, cfg, of_depth=inv)
    est_i = luxemburg_from(disc_i, psi, tol)
    v_i = "fail" if est_i.diverged else "pass"

    # (ii): values log|phi| once, then |phi|^n = exp(n log|phi|)
    def logmod(d):
        with np.errstate(divide="ignore"):
            return np.log1p(-d)

    base = symbol_discretization(symbol, lambda z: logmod(depth(z)), spec, cfg, of_depth=logmod)
    ns = np.unique(np.round(np.geomspace(1, n_max, 28)).astype(int))
    a_n = []
    for n in ns:
        comp = _Composed(base, lambda v, n=n: np.exp(n * v))
        est = luxemburg_from(comp, psi, tol)
        a_n.append(math.inf if est.diverged else est.value)
    a_n = np.array(a_n)
    rows = [{"n": int(n), "norm": float(a)} for n, a in zip(ns, a_n)]
    v_ii, partial, tail_note = _series_verdict(ns, a_n, n_max, psi)
    if v_i == "pass" or v_ii == "pass":
        verdict = "pass"
    elif v_i == "fail" and v_ii == "fail":
        verdict = "fail"
    else:
        verdict = "inconclusive"
    notes = ["a pass means a sufficient-condition integral is finite; it does not "
             "certify the little-o rate itself"]
    if tail_note:
        notes.append(tail_note)
    if not psi_in(psi, "delta2_upper"):
        notes.append(f"{psi.key} is not classified Delta^2")
    return DiagnosticsReport("sufficient_compactness", verdict,
                             {"condition_i": v_i, "condition_ii": v_ii},
                             [_norm_estimate("luxemburg_inverse_depth", est_i),
                              Estimate("series_partial_sum", partial)],
                             _config(cfg, n_grid=ns, N=spec.N, alpha=spec.alpha, psi=psi.key,
                                     symbol=symbol.label), notes, rows)


def _series_verdict(ns, a_n, n_max, psi):
    a0 = 1.0 / float(psi.inverse(1.0))
    if not np.all(np.isfinite(a_n)):
        return "fail", math.inf, "some powers have infinite norm"
    if np.all(a_n == 0):
        return "pass", a0, ""
    # log-linear interpolation over every integer n
    full = np.arange(1, n_max + 1)
    with np.errstate(divide="ignore"):
        la = np.interp(full, ns, np.log(np.maximum(a_n, 1e-300)))
    partial = a0 + float(np.sum(np.exp(la)))
    tail = ns >= n_max // 2
    if tail.sum() < 3 or np.any(a_n[tail] <= 1e-300):
        return "pass", partial, ""
    lt = np.log(a_n[tail])
    geo = math.exp(float(np.polyfit(ns[tail], lt, 1)[0]))
    p = -float(np.polyfit(np.log(ns[tail]), lt, 1)[0])
    if geo < 0.98:
        return "pass", partial + a_n[-1] * geo / (1 - geo), "geometric tail"
    if p > 1.2:
        return "pass", partial + a_n[-1] * n_max / (p - 1), f"power tail n^-{p:.2f}"
    if p < 0.8:
        return "fail", math.inf, f"terms decay like n^-{p:.2f}: the series diverges"
    return "inconclusive", partial, f"tail exponent {p:.2f} too close to 1"


# ---------------------------------------------------------------------------
# essential norm on the disc


@dataclass
class EssentialNorm:
    E1: float
    E2: float
    agree: bool
    E1_profile: list
    E2_profile: list
    E2_cesaro: float


def _agree(E1: float, E2: float, zero: float = 0.05) -> bool:
    z1, z2 = E1 <= zero, E2 <= zero
    if z1 and z2:
        return True
    if z1 != z2:
        return False
    return 0.1 <= E1 / E2 <= 10.0


def essential_norm(symbol: Symbol, psi: OrliczFunction, spec: MeasureSpec,
                   cfg: QuadratureConfig, r_grid: Sequence[float] | None = None,
                   n_max: int = 200) -> EssentialNorm:
    if spec.N != 1:
        raise ValueError("the essential-norm estimates are for the disc (N = 1)")
    if spec.is_sphere:
        raise ValueError("alpha must exceed -1")
    rs = np.asarray(r_grid if r_grid is not None else 1.0 - 2.0 ** -np.arange(1, 21), float)
    t, dw, _, _ = _ratio_points(symbol, cfg)
    q = _log_ratio(psi, 1.0, t, dw)
    prof = []
    for r in rs:
        sel = (1.0 - dw) > r
        prof.append(float(np.max(q[sel])) if sel.any() else 0.0)
    E1 = prof[-1]

    tol = max(cfg.tol, 1e-6)
    depth = _depth_of(symbol)

    def logmod(d):
        with np.errstate(divide="ignore"):
            return np.log1p(-d)

    base = symbol_discretization(symbol, lambda z: logmod(depth(z)), spec, cfg, of_depth=logmod)
    zbase = discretize_radial(logmod, spec, cfg, depth=True)
    ns = np.unique(np.linspace(n_max // 2, n_max, 11).astype(int))
    ratios = []
    for n in ns:
        pw = lambda v, n=n: np.exp(n * v)
        top = luxemburg_from(_Composed(base, pw), psi, tol)
        bot = luxemburg_from(_Composed(zbase, pw), psi, tol)
        ratios.append(math.inf if top.diverged else top.value / bot.value)
    E2 = float(np.max(ratios))
    return EssentialNorm(E1, E2, _agree(E1, E2),
                         [{"r": float(r), "E1": v} for r, v in zip(rs, prof)],
                         [{"n": int(n), "ratio": float(v)} for n, v in zip(ns, ratios)],
                         float(np.mean(ratios)))


def essential_norm_report(symbol, psi, spec, cfg, r_grid=None, n_max=200) -> DiagnosticsReport:
    en = essential_norm(symbol, psi, spec, cfg, r_grid, n_max)
    compact = en.E1 <= 0.05 and en.E2 <= 0.05
    verdict = ("pass" if compact else "fail") if en.agree else "inconclusive"
    notes = ["pass means both estimates vanish (compact); fail means both stay positive"]
    rows = [{"r": p["r"], "E1": p["E1"]} for p in en.E1_profile] + en.E2_profile
    return DiagnosticsReport("essential_norm", verdict,
                             {"agree": en.agree},
                             [Estimate("E1", en.E1), Estimate("E2", en.E2),
                              Estimate("E2_cesaro", en.E2_cesaro)],
                             _config(cfg, n_max=n_max, N=spec.N, alpha=spec.alpha, psi=psi.key,
                                     symbol=symbol.label), notes, rows)


# ---------------------------------------------------------------------------
# Koranyi regions


def koranyi_verdict(symbol: Symbol, psi: OrliczFunction, spec: MeasureSpec,
                    cfg: QuadratureConfig, region: KoranyiRegion | None = None,
                    cross_check: bool = True) -> DiagnosticsReport:
    regions = (region,) if region is not None else tuple(symbol.regions)
    conf = _config(cfg, N=spec.N, alpha=spec.alpha, psi=psi.key, symbol=symbol.label,
                   regions=[{"vertex": [complex(c) for c in r.vertex], "opening": r.opening}
                            for r in regions])
    if not regions:
        return DiagnosticsReport("koranyi_verdict", "not-applicable", {}, [], conf,
                                 ["the symbol declares no containing approach region"])
    ok, witness = check_containment(symbol, regions, seed=cfg.seed)
    if not ok:
        return DiagnosticsReport("koranyi_verdict", "not-applicable",
                                 {"outside_point": [complex(c) for c in witness]}, [], conf,
                                 ["containment refuted by a sample"])
    gamma = max(r.opening for r in regions)
    wit = {"opening": gamma}
    notes = []
    if symbol.N == 1:
        tier = "1"
        if len(regions) > 1:
            notes.append("image lies in a finite union of Stolz angles; the estimate is local "
                         "at each vertex")
    else:
        aN = critical_opening(symbol.N, spec.alpha)
        wit["a_N"] = aN
        if gamma < aN * (1 - 1e-12):
            tier = "2a"
        elif gamma <= aN * (1 + 1e-12) and psi_in(psi, "delta1"):
            tier = "2b"
        else:
            tier = "none"
            notes.append("opening at or beyond a_N without Delta^1: no conclusion")
    wit["tier"] = tier
    ests = []
    verdict = "pass" if tier != "none" else "inconclusive"
    if cross_check:
        ob = order_bounded_L(symbol, psi, spec, cfg)
        wit["order_bounded_L"] = ob.verdict
        ests = ob.estimates
        if tier != "none" and ob.verdict != "pass":
            verdict = "inconclusive"
            notes.append("numerical integral disagrees with the predicted tier")
    return DiagnosticsReport("koranyi_verdict", verdict, wit, ests, conf, notes)
