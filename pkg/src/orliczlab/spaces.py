"""Luxemburg, Hardy-Orlicz and growth-space norms, plus membership tests."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .geometry import as_point, e1, norm
from .integration import (CHUNK, Discretization, IntegralEstimate, MeasureSpec,
                          QuadratureConfig, STREAM_EVENT, chunk_rng, discretize_radial,
                          discretize_space, map_chunks, sample_ball, sample_sphere,
                          wilson_interval)
from .orlicz import OrliczFunction, constant_grid

BRACKET = 1e6
BRACKET_CAP = 1e12


@dataclass(frozen=True)
class EvaluableFunction:
    """A complex function on the ball.

    eval takes points of shape (..., N) and returns complex values. When the
    modulus is radial, ``radial`` may give |f| as a function of the depth
    1 - |z|; this is the exact route used near the boundary. ``directions``
    lists unit vectors where the modulus is known to peak.
    """

    eval: Callable[[np.ndarray], np.ndarray]
    is_radial_modulus: bool = False
    label: str = ""
    radial: Callable[[np.ndarray], np.ndarray] | None = None
    directions: tuple = ()
    holomorphic: bool | None = None

    def __call__(self, z):
        return self.eval(as_point(z))

    def modulus(self, z) -> np.ndarray:
        return np.abs(self.eval(as_point(z)))

    def modulus_at_depth(self, depth, N: int) -> np.ndarray:
        depth = np.asarray(depth, dtype=float)
        if self.radial is not None:
            return np.asarray(self.radial(depth), dtype=float) * np.ones_like(depth)
        pts = (1.0 - depth)[..., None] * e1(N)
        return np.abs(self.eval(pts))


def check_radial_modulus(f: EvaluableFunction, N: int, seed: int = 0,
                         n_dirs: int = 32, n_radii: int = 8, tol: float = 1e-9) -> bool:
    zeta = sample_sphere(N, n_dirs, seed)
    radii = np.linspace(0.05, 0.95, n_radii)
    vals = np.abs(f.eval(radii[:, None, None] * zeta[None]))
    spread = vals.max(axis=1) - vals.min(axis=1)
    return bool(np.all(spread <= tol * np.maximum(1.0, vals.max(axis=1))))


@dataclass(frozen=True)
class NormEstimate:
    value: float
    lower: float
    upper: float
    diverged: bool = False
    sup_by_sampling: bool = False
    details: dict = field(default_factory=dict, compare=False)

    @property
    def bracket(self) -> tuple[float, float]:
        return (self.lower, self.upper)

    def to_dict(self) -> dict:
        return {"value": self.value, "lower": self.lower, "upper": self.upper,
                "diverged": self.diverged, "sup_by_sampling": self.sup_by_sampling}


def diverged_norm(lower: float = 0.0, **details) -> NormEstimate:
    return NormEstimate(math.inf, lower, math.inf, True, details=details)


# ---------------------------------------------------------------------------
# Luxemburg norm


def discretize_modulus(f: EvaluableFunction, spec: MeasureSpec, cfg: QuadratureConfig,
                       tail_check: bool = True) -> Discretization:
    if f.is_radial_modulus and not spec.is_sphere:
        return discretize_radial(lambda t: f.modulus_at_depth(t, spec.N), spec, cfg, depth=True)
    return discretize_space(lambda z: np.abs(f.eval(z)), spec, cfg, tail_check)


def luxemburg_from(disc: Discretization, psi: OrliczFunction, tol: float) -> NormEstimate:
    """Bisection on log C for I(C) = integral of psi(|f| / C) crossing 1.

    A diverged I(C) counts as larger than 1.
    """
    calls = [0]

    def over(C: float) -> bool:
        calls[0] += 1
        est = disc.integrate(lambda v: psi(v / C))
        return est.diverged or not est.value <= 1.0

    with np.errstate(invalid="ignore"):
        l1 = disc.integrate()
    if np.all(disc.fine == 0):
        return NormEstimate(0.0, 0.0, 0.0)
    guess = l1.value if math.isfinite(l1.value) and l1.value > 0 else 1.0
    C0 = guess / float(psi.inverse(1.0))
    lo, hi = C0 / BRACKET, C0 * BRACKET
    while over(hi):
        if hi >= C0 * BRACKET_CAP:
            return diverged_norm(hi, evaluations=calls[0])
        hi = min(hi * BRACKET, C0 * BRACKET_CAP)
    while not over(lo):
        hi = lo
        lo /= BRACKET
        if lo < 1e-300:
            return NormEstimate(0.0, 0.0, hi)
    while hi / lo - 1.0 > tol:
        mid = math.sqrt(lo * hi)
        if over(mid):
            lo = mid
        else:
            hi = mid
    return NormEstimate(math.sqrt(lo * hi), lo, hi, details={"evaluations": calls[0]})


def luxemburg_norm(f: EvaluableFunction, psi: OrliczFunction, spec: MeasureSpec,
                   cfg: QuadratureConfig) -> NormEstimate:
    if spec.is_sphere:
        raise ValueError("alpha = -1 is the Hardy case; use hardy_orlicz_norm")
    return luxemburg_from(discretize_modulus(f, spec, cfg), psi, cfg.tol)


def finiteness_threshold(disc: Discretization, psi: OrliczFunction, lo: float = 1e-3,
                         hi: float = 1e3, rel: float = 1e-3) -> float | None:
    """Smallest C at which the psi(|f|/C) integral stops diverging (bisection)."""

    def div(C):
        return disc.integrate(lambda v: psi(v / C)).diverged

    if div(hi):
        return None
    if not div(lo):
        return lo
    while hi / lo - 1 > rel:
        mid = math.sqrt(lo * hi)
        if div(mid):
            lo = mid
        else:
            hi = mid
    return hi


# ---------------------------------------------------------------------------
# Hardy-Orlicz norm


def default_hardy_radii() -> np.ndarray:
    return 1.0 - 2.0 ** -np.arange(1, 13)


def hardy_orlicz_norm(f: EvaluableFunction, psi: OrliczFunction, N: int, cfg: QuadratureConfig,
                      r_grid: Sequence[float] | None = None) -> NormEstimate:
    radii = np.asarray(r_grid if r_grid is not None else default_hardy_radii(), dtype=float)
    if np.any((radii <= 0) | (radii >= 1)) or np.any(np.diff(radii) <= 0):
        raise ValueError("r_grid must increase inside (0, 1)")
    zeta = sample_sphere(N, cfg.mc_samples, cfg.seed, cfg.threads)
    vals, lows, ups = [], [], []
    for r in radii:
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            m = np.abs(f.eval(r * zeta))
        disc = Discretization("sphere", None, m, None, None, cfg.z, tail_check=False)
        est = luxemburg_from(disc, psi, cfg.tol)
        vals.append(est.value)
        lows.append(est.lower)
        ups.append(est.upper)
    vals = np.array(vals)
    details = {"radii": radii.tolist(), "norms": vals.tolist()}
    if not np.all(np.isfinite(vals)):
        return diverged_norm(float(np.nanmax(np.where(np.isfinite(vals), vals, 0))), **details)
    # nondecreasing up to sampling noise; the tolerance is loose on purpose
    details["monotone"] = bool(np.all(np.diff(vals) >= -0.02 * vals[1:]))
    if len(vals) >= 4:
        inc = vals[1:] / vals[:-1] - 1.0
        last = inc[-3:]
        growing = np.all(last > 0) and last[-1] > 0.01 and last[-1] > 0.5 * last[-2]
        if growing:
            return diverged_norm(float(vals[-1]), **details)
    return NormEstimate(float(vals[-1]), float(lows[-1]), float(ups[-1]), details=details)


# ---------------------------------------------------------------------------
# growth norms and weights


@dataclass(frozen=True)
class GrowthWeight:
    psi: OrliczFunction
    gamma: float = 1.0

    def __post_init__(self):
        if not self.gamma >= 1:
            raise ValueError("gamma must be >= 1")

    def at_depth(self, depth) -> np.ndarray:
        depth = np.asarray(depth, dtype=float)
        with np.errstate(divide="ignore"):
            return 1.0 / self.psi.inverse_log(-self.gamma * np.log(depth))


def weight_eval(weight: GrowthWeight, z) -> float | np.ndarray:
    r = norm(as_point(z))
    if np.any(r >= 1):
        raise ValueError("weight is defined inside the ball only")
    out = weight.at_depth(1.0 - r)
    return float(out) if np.ndim(out) == 0 else out


def _golden_max(fn, a: float, b: float, iters: int = 80) -> tuple[float, float]:
    g = (math.sqrt(5.0) - 1.0) / 2.0
    for _ in range(iters):
        c = b - g * (b - a)
        d = a + g * (b - a)
        if fn(c) >= fn(d):
            b = d
        else:
            a = c
    x = 0.5 * (a + b)
    return x, fn(x)


def growth_norm(f: EvaluableFunction, weight: GrowthWeight, cfg: QuadratureConfig,
                r_grid: Sequence[float] | None = None, N: int = 1) -> NormEstimate:
    """sup |f| w over the ball.

    Radial moduli: log-spaced depth grid down to ~1e-14 then golden-section
    refinement. Otherwise the sup over r_grid times sphere samples (plus e1
    and the function's own peak directions), flagged as a sampled lower bound.
    """
    if f.is_radial_modulus:
        depths = np.concatenate([[1.0], 2.0 ** (-np.arange(1, 4 * 46) / 4.0)])
        vals = f.modulus_at_depth(depths, N) * weight.at_depth(depths)
        vals = np.where(np.isnan(vals), -np.inf, vals)
        i = int(np.argmax(vals))
        details = {"argmax_depth": float(depths[i])}
        if i >= len(depths) - 3 and np.all(np.diff(vals[-4:]) > 0):
            return diverged_norm(float(vals[i]), **details)
        lo = math.log(depths[min(i + 1, len(depths) - 1)])
        hi = math.log(depths[max(i - 1, 0)])

        def h(s):
            d = math.exp(s)
            v = float(f.modulus_at_depth(np.array([d]), N)[0] * weight.at_depth(d))
            return v if math.isfinite(v) else -math.inf

        s, v = _golden_max(h, lo, hi)
        best = max(v, float(vals[i]))
        return NormEstimate(best, best, best, details=details)

    radii = np.asarray(r_grid if r_grid is not None else 1.0 - 2.0 ** (-np.arange(1, 61) / 2.0),
                       dtype=float)
    radii = np.concatenate([[0.0], radii])
    dirs = [e1(N)] + [np.asarray(d, dtype=complex) for d in f.directions]
    zeta = np.concatenate([np.array(dirs), sample_sphere(N, min(cfg.mc_samples, 4096), cfg.seed)])
    w = weight.at_depth(1.0 - radii)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        m = np.abs(f.eval(radii[:, None, None] * zeta[None])) * w[:, None]
    m = np.where(np.isfinite(m), m, -np.inf)
    sups = np.maximum.accumulate(m.max(axis=1))
    details = {"radii": radii.tolist(), "running_sup": sups.tolist()}
    if np.all(np.diff(sups[-4:]) > 0):
        return NormEstimate(math.inf, float(sups[-1]), math.inf, True, True, details)
    # refine along the best direction between the neighbouring radii
    i, j = np.unravel_index(int(np.argmax(m)), m.shape)
    lo = math.log(1.0 - radii[min(i + 1, len(radii) - 1)])
    hi = math.log(1.0 - radii[max(i - 1, 0)])

    def h(s):
        d = math.exp(s)
        with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
            v = float(np.abs(f.eval((1.0 - d) * zeta[j])).ravel()[0] * weight.at_depth(d))
        return v if math.isfinite(v) else -math.inf

    _, v = _golden_max(h, lo, hi) if hi > lo else (0.0, -math.inf)
    best = max(float(sups[-1]), v)
    return NormEstimate(best, best, math.inf, False, True, details)


# ---------------------------------------------------------------------------
# point evaluation


def evaluation_bounds(a, psi: OrliczFunction, spec: MeasureSpec) -> tuple[float, float]:
    ra = float(norm(as_point(a)))
    if ra >= 1:
        raise ValueError("|a| must be < 1")
    e = spec.exponent
    U = float(psi.inverse_log(e * (math.log1p(ra) - math.log1p(-ra))))
    return 4.0 ** (-e) * U, U


# ---------------------------------------------------------------------------
# membership


@dataclass(frozen=True)
class MembershipVerdict:
    member: bool | None
    status: str
    witness: float | None = None
    note: str = ""
    details: dict = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {"member": self.member, "status": self.status, "witness": self.witness,
                "note": self.note}


def default_c_grid() -> np.ndarray:
    return 2.0 ** -np.arange(0, 11)


def morse_transue_membership(f: EvaluableFunction, psi: OrliczFunction, spec: MeasureSpec,
                             cfg: QuadratureConfig, c_grid: Sequence[float] | None = None,
                             disc: Discretization | None = None) -> MembershipVerdict:
    cs = np.asarray(c_grid if c_grid is not None else default_c_grid(), dtype=float)
    disc = disc or discretize_modulus(f, spec, cfg)
    for C in cs:
        # logs keep bounded integrands finite even when psi(|f|/C) overflows
        _, diverged = disc.log_integrate(lambda v: psi.log_psi(v / C))
        if diverged:
            return MembershipVerdict(False, "fails", float(C), "integral diverges at this C")
    return MembershipVerdict(True, "holds", float(cs[-1]), "finite for every C on the grid",
                             {"c_grid": cs.tolist()})


WEAK_SLOPE = -0.1
WEAK_MIN_COUNT = 20
WEAK_SAMPLES = 1 << 18  # tail counts are cheap and the slope fit is noise sensitive


def tail_counts(f: EvaluableFunction, spec: MeasureSpec, cfg: QuadratureConfig,
                ts: np.ndarray, samples: int | None = None) -> tuple[np.ndarray, int]:
    n = samples or cfg.mc_samples

    def work(i, s, size):
        z, d = sample_ball(spec, chunk_rng(cfg.seed, STREAM_EVENT, i), size)
        if f.is_radial_modulus and not spec.is_sphere:
            m = f.modulus_at_depth(d, spec.N)
        else:
            with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
                m = np.abs(f.eval(z))
        return (m[:, None] > ts[None, :]).sum(axis=0)

    return np.sum(map_chunks(work, n, cfg.threads), axis=0), n


def weak_orlicz_membership(f: EvaluableFunction, psi: OrliczFunction, spec: MeasureSpec,
                           cfg: QuadratureConfig, t_grid: Sequence[float] | None = None,
                           samples: int | None = None) -> MembershipVerdict:
    """Is P(|f| > t) <= 1 / psi(c t) for some c > 0?

    For every grid t the largest admissible c is psi^{-1}(1 / P_upper(t)) / t.
    Points where no sample exceeds t give no constraint. The witness is the
    smallest of these constants snapped down to a geometric c grid; a clear
    downward power trend of the constants (upper half of the t with at least
    20 exceedances, point estimates) means the tail is too heavy for any c.
    """
    ts = np.asarray(t_grid if t_grid is not None else np.logspace(0, 3, 25), dtype=float)
    counts, n = tail_counts(f, spec, cfg, ts, samples or max(cfg.mc_samples, WEAK_SAMPLES))
    cg = constant_grid(1e-3, 1e3)
    ups = np.array([wilson_interval(int(k), n, cfg.z)[1] for k in counts])
    info = counts > 0
    details = {"t": ts.tolist(), "counts": counts.tolist()}
    if not info.any():
        return MembershipVerdict(True, "holds", float(cg[-1]), "no exceedances on the t grid",
                                 details)
    cstar = psi.inverse(1.0 / ups[info]) / ts[info]
    details["c_star"] = cstar.tolist()
    firm = counts >= WEAK_MIN_COUNT
    if firm.sum() >= 3:
        # only the upper half of the firm points: near t = 1 the profile bends
        idx_f = np.flatnonzero(firm)
        idx_f = idx_f[-max(3, (idx_f.size + 1) // 2):]
        p_hat = counts[idx_f] / n
        c_hat = psi.inverse(1.0 / p_hat) / ts[idx_f]
        slope = float(np.polyfit(np.log(ts[idx_f]), np.log(c_hat), 1)[0])
        details["slope"] = slope
        if slope < WEAK_SLOPE:
            return MembershipVerdict(False, "fails", None,
                                     f"admissible constant decays like t^{slope:.2f}", details)
    best = float(cstar.min())
    if best < cg[0]:
        return MembershipVerdict(False, "fails", None, "below the c search grid", details)
    idx = int(np.searchsorted(cg, best, side="right") - 1)
    if idx == len(cg) - 1:
        return MembershipVerdict(None, "inconclusive", float(cg[idx]), "boundary-saturated", details)
    return MembershipVerdict(True, "holds", float(cg[idx]), "", details)


def alpha_limit_profile(f: EvaluableFunction, psi: OrliczFunction, N: int, cfg: QuadratureConfig,
                        alphas: Sequence[float]) -> tuple[list[NormEstimate], NormEstimate]:
    """Bergman-Orlicz norms of f along alphas (approaching -1) and the Hardy-Orlicz
    norm they should tend to. For increasing radial |f| the ball integrals grow
    as alpha decreases."""
    norms = [luxemburg_norm(f, psi, MeasureSpec(N, float(a)), cfg) for a in alphas]
    return norms, hardy_orlicz_norm(f, psi, N, cfg)
