"""Orlicz functions: evaluation, inverses, complementary functions and
grid-certified growth classification."""
from __future__ import annotations

import math
from dataclasses import dataclass, asdict
from typing import Sequence

import numpy as np

KINDS = ("power", "exppow", "logpow", "powlog")

# where the shape of a new catalog member is spot-checked
SHAPE_GRID = np.geomspace(1e-6, 1e8, 600)

# slack on log-constants when deciding feasibility; absorbs rounding only
_LOG_SLACK = 1e-9
# a required constant whose log grows faster than this per unit log x
# over the upper half of the grid is treated as unbounded
STABILITY_SLOPE = 0.02


class Saturated(float):
    """Overflowed value of psi. Behaves like +inf but remembers its argument."""

    def __new__(cls, arg: float):
        obj = super().__new__(cls, math.inf)
        obj.arg = float(arg)
        return obj

    def __repr__(self) -> str:
        return f"Saturated(arg={self.arg!r})"


def _log_expm1(t):
    # log(e^t - 1) without overflow for large t
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        big = t + np.log1p(-np.exp(-np.maximum(t, 1.0)))
        small = np.log(np.expm1(np.minimum(t, 1.0)))
    return np.where(t > 1.0, big, small)


@dataclass(frozen=True)
class OrliczFunction:
    """A member of the built-in catalog.

    kind is one of ``power`` (x^p), ``exppow`` (exp(a x^b) - 1),
    ``logpow`` (exp(a log(1+x)^b) - 1) and ``powlog`` (x^p log(1+x)^b).
    """

    kind: str
    params: tuple
    x0: float = 10.0
    inverse_mode: str = "closed-form"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown Orlicz family {self.kind!r}")
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        p = self.params
        need = 1 if self.kind == "power" else 2
        if len(p) != need:
            raise ValueError(f"{self.kind} takes {need} parameter(s), got {len(p)}")
        if self.kind == "power" and not p[0] > 1:
            raise ValueError("power family needs p > 1")
        if self.kind == "exppow" and not (p[0] > 0 and p[1] >= 1):
            raise ValueError("exppow needs a > 0, b >= 1")
        if self.kind == "logpow" and not (p[0] > 0 and p[1] > 0):
            raise ValueError("logpow needs a > 0, b > 0")
        if self.kind == "powlog" and not (p[0] > 1 and p[1] > 0):
            raise ValueError("powlog needs p > 1, b > 0")
        if not self.x0 > 0:
            raise ValueError("threshold x0 must be positive")
        if self.inverse_mode not in ("closed-form", "numeric-bisection"):
            raise ValueError(f"bad inverse_mode {self.inverse_mode!r}")
        # small a with log-power gives functions that bend the wrong way
        if not self.is_convex_on(SHAPE_GRID):
            raise ValueError(f"{self.key} is not convex on the check grid")
        k = np.arange(1, 7)
        if not np.all(np.diff(self.log_psi(10.0**k) - k * math.log(10.0)) > 0):
            raise ValueError(f"{self.key}: psi(x)/x is not increasing at x = 10^k")

    @property
    def key(self) -> str:
        return ":".join([self.kind] + [f"{v:g}" for v in self.params])

    def with_inverse_mode(self, mode: str) -> "OrliczFunction":
        return OrliczFunction(self.kind, self.params, self.x0, mode)

    # -- forward -----------------------------------------------------------
    def log_psi(self, x):
        """log psi(x), elementwise; -inf at 0. Never overflows."""
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if self.kind == "power":
                return self.params[0] * np.log(x)
            if self.kind == "exppow":
                a, b = self.params
                return _log_expm1(a * x**b)
            if self.kind == "logpow":
                a, b = self.params
                return _log_expm1(a * np.log1p(x) ** b)
            p, b = self.params
            return p * np.log(x) + b * np.log(np.log1p(x))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            if self.kind == "power":
                out = x ** self.params[0]
            elif self.kind == "exppow":
                a, b = self.params
                out = np.expm1(a * x**b)
            elif self.kind == "logpow":
                a, b = self.params
                out = np.expm1(a * np.log1p(x) ** b)
            else:
                p, b = self.params
                out = x**p * np.log1p(x) ** b
        out = np.where(np.isnan(out) & np.isinf(x), np.inf, out)
        return out

    # -- inverse -----------------------------------------------------------
    def inverse(self, y):
        y = np.asarray(y, dtype=float)
        with np.errstate(divide="ignore"):
            out = self.inverse_log(np.log(y))
        return np.where(y == 0, 0.0, out)

    def inverse_log(self, log_y):
        """psi^{-1}(exp(log_y)); lets callers pass arguments beyond float range."""
        ly = np.asarray(log_y, dtype=float)
        if self.inverse_mode == "numeric-bisection" or self.kind == "powlog":
            return self._bisect_log(ly).reshape(ly.shape)
        l1p = np.logaddexp(0.0, ly)  # log(1 + y)
        with np.errstate(over="ignore"):
            if self.kind == "power":
                return np.exp(ly / self.params[0])
            if self.kind == "exppow":
                a, b = self.params
                return (l1p / a) ** (1.0 / b)
            a, b = self.params
            return np.expm1((l1p / a) ** (1.0 / b))

    def _bisect_log(self, ly):
        s = self._bisect_s(ly)
        with np.errstate(over="ignore"):
            return np.exp(s)

    def _bisect_s(self, ly):
        # bisection in s = log x on the monotone map s -> log psi(e^s)
        ly = np.atleast_1d(ly).astype(float)
        shape = ly.shape
        ly = ly.ravel()
        out = np.empty_like(ly)
        fin = np.isfinite(ly)
        out[ly == -np.inf] = -np.inf
        out[ly == np.inf] = np.inf
        target = ly[fin]
        lo = np.full(target.shape, -1.0)
        hi = np.full(target.shape, 1.0)
        step = 1.0
        for _ in range(80):
            bad = self.log_psi(np.exp(lo)) > target
            if not bad.any():
                break
            lo[bad] -= step
            step *= 2.0
        step = 1.0
        for _ in range(80):
            with np.errstate(over="ignore"):
                bad = self.log_psi(np.exp(hi)) < target
            if not bad.any():
                break
            hi[bad] += step
            step *= 2.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            with np.errstate(over="ignore"):
                below = self.log_psi(np.exp(mid)) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
            if np.all(hi - lo <= 1e-14 * np.maximum(1.0, np.abs(hi))):
                break
        out[fin] = 0.5 * (lo + hi)
        return out.reshape(shape)

    # -- doubly logarithmic forms, for tails far beyond float range ----------
    def log_psi_at_log(self, lx):
        """log psi(e^lx)."""
        lx = np.asarray(lx, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            if self.kind == "power":
                return self.params[0] * lx
            l1p = np.logaddexp(0.0, lx)  # log(1 + x)
            if self.kind == "exppow":
                a, b = self.params
                return _log_expm1(a * np.exp(b * lx))
            if self.kind == "logpow":
                a, b = self.params
                return _log_expm1(a * l1p**b)
            p, b = self.params
            return p * lx + b * np.log(l1p)

    def log_inverse_log(self, ly):
        """log psi^{-1}(e^ly)."""
        ly = np.asarray(ly, dtype=float)
        if self.inverse_mode == "numeric-bisection" or self.kind == "powlog":
            return self._bisect_s(ly).reshape(ly.shape)
        l1p = np.logaddexp(0.0, ly)
        with np.errstate(divide="ignore", over="ignore"):
            if self.kind == "power":
                return ly / self.params[0]
            a, b = self.params
            if self.kind == "exppow":
                return (np.log(l1p) - math.log(a)) / b
            return _log_expm1((l1p / a) ** (1.0 / b))

    # -- complementary -----------------------------------------------------
    def complementary(self, y, iters: int = 120):
        """Phi(y) = sup_x {xy - psi(x)}, golden-section over log x."""
        y = np.atleast_1d(np.asarray(y, dtype=float))
        x_hi = np.ones_like(y)
        for _ in range(200):
            with np.errstate(over="ignore"):
                short = self(x_hi) < y * x_hi
            if not short.any():
                break
            x_hi[short] *= 2.0
        b = np.log(x_hi)
        a = b - 60.0
        g = (math.sqrt(5.0) - 1.0) / 2.0

        def obj(s):
            x = np.exp(s)
            with np.errstate(over="ignore", invalid="ignore"):
                return x * y - self(x)

        for _ in range(iters):
            c = b - g * (b - a)
            d = a + g * (b - a)
            left = obj(c) >= obj(d)
            b = np.where(left, d, b)
            a = np.where(left, a, c)
        return obj(0.5 * (a + b))

    def is_convex_on(self, xs) -> bool:
        xs = np.sort(np.asarray(xs, dtype=float))
        v = self(xs)
        xs, v = xs[np.isfinite(v)], v[np.isfinite(v)]
        with np.errstate(over="ignore", invalid="ignore"):
            slopes = np.diff(v) / np.diff(xs)
        ok = np.isfinite(slopes)
        return bool(np.all(np.diff(slopes[ok]) >= -1e-9 * np.abs(slopes[ok][1:])))


def parse_psi(key: str, x0: float = 10.0, inverse_mode: str = "closed-form") -> OrliczFunction:
    """Build a catalog member from a string such as ``"exppow:1:1"``."""
    parts = key.strip().split(":")
    try:
        params = tuple(float(p) for p in parts[1:])
    except ValueError as exc:
        raise ValueError(f"bad Orlicz key {key!r}") from exc
    return OrliczFunction(parts[0], params, x0=x0, inverse_mode=inverse_mode)


def psi_eval(psi: OrliczFunction, x: float) -> float:
    if not (x >= 0 and math.isfinite(x)):
        raise ValueError("psi_eval needs a finite x >= 0")
    v = float(psi(x))
    if math.isinf(v):
        return Saturated(x)
    return v


def psi_inverse(psi: OrliczFunction, y: float) -> float:
    if not y >= 0:
        raise ValueError("psi_inverse needs y >= 0")
    return float(np.asarray(psi.inverse(y)).reshape(-1)[0])


# ---------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class GridSpec:
    x0: float = 10.0
    decades: float = 6.0
    points: int = 241

    def xs(self) -> np.ndarray:
        if self.points < 200:
            raise ValueError("growth grids need at least 200 points")
        return self.x0 * np.logspace(0.0, self.decades, self.points)


def constant_grid(lo: float = 1.0, hi: float = 1e6, per_octave: int = 8) -> np.ndarray:
    """Geometric grid through the powers of two, capped at hi."""
    n = int(math.floor(per_octave * math.log2(hi / lo) + 1e-9))
    g = lo * 2.0 ** (np.arange(n + 1) / per_octave)
    if g[-1] < hi * (1 - 1e-12):
        g = np.append(g, hi)
    return g


@dataclass(frozen=True)
class ConditionVerdict:
    name: str
    status: str  # "holds" | "fails" | "inconclusive"
    constant: float | None = None
    counterexample: float | None = None
    note: str = ""

    @property
    def holds(self) -> bool | None:
        return {"holds": True, "fails": False}.get(self.status)

    def to_dict(self) -> dict:
        return asdict(self)


def _tail_slope(xs, log_req) -> float:
    half = len(xs) // 2
    lx = np.log(xs[half:])
    ly = np.asarray(log_req[half:])
    if not np.all(np.isfinite(ly)):
        return math.inf
    return float(np.polyfit(lx, ly, 1)[0])


def certify_constant(name: str, xs, log_required, cgrid) -> ConditionVerdict:
    """Decide whether one grid constant dominates the per-point requirement.

    log_required[i] is log of the smallest constant that makes the inequality
    true at xs[i]. The verdict also fails when that requirement keeps growing
    across the upper half of the grid, since a finite grid would otherwise
    certify polynomially growing requirements.
    """
    xs = np.asarray(xs)
    lr = np.asarray(log_required, dtype=float)
    lr = np.where(np.isnan(lr), np.inf, lr)
    lc = np.log(cgrid)
    worst = int(np.argmax(lr))
    need = lr[worst]
    if need > lc[-1] + _LOG_SLACK:
        return ConditionVerdict(name, "fails", None, float(xs[worst]),
                                "no constant on the search grid works here")
    idx = int(np.searchsorted(lc, need - _LOG_SLACK))
    c = float(cgrid[idx])
    slope = _tail_slope(xs, lr)
    if slope > STABILITY_SLOPE:
        return ConditionVerdict(name, "fails", None, float(xs[-1]),
                                f"required constant still growing (log-slope {slope:.3g})")
    if idx == len(cgrid) - 1:
        return ConditionVerdict(name, "inconclusive", c, None, "boundary-saturated")
    return ConditionVerdict(name, "holds", c, None, "")


@dataclass(frozen=True)
class GrowthClassReport:
    psi: str
    delta2_lower: ConditionVerdict
    delta1: ConditionVerdict
    delta2_upper: ConditionVerdict
    nabla2: ConditionVerdict
    grid: GridSpec

    def to_dict(self) -> dict:
        return {
            "psi": self.psi,
            "delta2_lower": self.delta2_lower.to_dict(),
            "delta1": self.delta1.to_dict(),
            "delta2_upper": self.delta2_upper.to_dict(),
            "nabla2": self.nabla2.to_dict(),
            "grid": asdict(self.grid),
        }


def _dual_grid(psi: OrliczFunction, grid: GridSpec) -> np.ndarray:
    x0 = grid.x0
    # secant slope past x0, kept well inside float range
    with np.errstate(over="ignore", invalid="ignore"):
        y0 = float((psi(2 * x0) - psi(x0)) / x0)
    if not math.isfinite(y0):  # psi overflowed at x0; inf - inf is nan
        y0 = 1e250
    y0 = min(max(y0, 1.0), 1e250)
    return y0 * np.logspace(0.0, grid.decades, grid.points)


def check_growth_class(psi: OrliczFunction, grid: GridSpec | None = None,
                       cgrid: Sequence[float] | None = None) -> GrowthClassReport:
    grid = grid or GridSpec(x0=psi.x0)
    xs = grid.xs()
    cg = np.asarray(cgrid if cgrid is not None else constant_grid())
    lp = psi.log_psi(xs)

    # smallest C at each x, in log form
    d2_low = psi.log_psi(2 * xs) - lp
    d1 = np.log(psi.inverse_log(np.log(xs) + lp) / xs)
    d2_up = np.log(psi.inverse_log(2 * lp) / xs)
    ys = _dual_grid(psi, grid)
    phi1 = psi.complementary(ys)
    phi2 = psi.complementary(2 * ys)
    with np.errstate(divide="ignore", invalid="ignore"):
        n2 = np.log(phi2 / phi1)

    low = certify_constant("delta2_lower", xs, d2_low, cg)
    one = certify_constant("delta1", xs, d1, cg)
    up = certify_constant("delta2_upper", xs, d2_up, cg)
    nab = certify_constant("nabla2", ys, n2, cg)

    # cascade: upper Delta^2 => Delta^1 => nabla_2
    if up.status == "holds" and one.status != "holds":
        one = ConditionVerdict("delta1", "holds", up.constant, None, "implied by delta2_upper")
    if one.status == "holds" and nab.status != "holds":
        nab = ConditionVerdict("nabla2", "holds", None, None, "implied by delta1")
    if low.status == "holds" and up.status == "holds":
        # cannot both hold; the grid is too short to tell them apart
        low = ConditionVerdict("delta2_lower", "inconclusive", low.constant, None,
                               "conflicts with delta2_upper on this grid")
        up = ConditionVerdict("delta2_upper", "inconclusive", up.constant, None,
                              "conflicts with delta2_lower on this grid")
    return GrowthClassReport(psi.key, low, one, up, nab, grid)


def equivalent_orlicz(psi1: OrliczFunction, psi2: OrliczFunction,
                      grid: GridSpec | None = None, per_octave: int = 8) -> ConditionVerdict:
    """Search c in (0, 1] with c psi1(c x) <= psi2(x) <= psi1(x / c) / c on the grid.

    The reported constant is the largest feasible grid value.
    """
    grid = grid or GridSpec(x0=max(psi1.x0, psi2.x0))
    xs = grid.xs()
    cs = 1.0 / constant_grid(1.0, 1e6, per_octave)  # 1 down to 1e-6
    lc = np.log(cs)[:, None]
    X = xs[None, :]
    l2 = psi2.log_psi(X)
    left = lc + psi1.log_psi(np.exp(lc) * X) <= l2 + _LOG_SLACK * np.abs(l2)
    right = l2 <= psi1.log_psi(X / np.exp(lc)) - lc + _LOG_SLACK * np.abs(l2)
    ok = left & right
    # feasibility is monotone in c, so the first feasible row is the largest c
    any_ok = ok.any(axis=0)
    if not any_ok.all():
        bad = int(np.argmin(any_ok))
        return ConditionVerdict("equivalent", "fails", None, float(xs[bad]),
                                "no c on the search grid works here")
    first = ok.argmax(axis=0)
    # requirement expressed as a growing quantity: log(1/c*)
    req = -np.log(cs[first])
    best = int(first.max())
    slope = _tail_slope(xs, req)
    if slope > STABILITY_SLOPE:
        return ConditionVerdict("equivalent", "fails", None, float(xs[-1]),
                                f"required constant still shrinking (log-slope {slope:.3g})")
    if best == len(cs) - 1:
        return ConditionVerdict("equivalent", "inconclusive", float(cs[best]), None,
                                "boundary-saturated")
    return ConditionVerdict("equivalent", "holds", float(cs[best]), None, "")
