"""Command line front end: one subcommand per experiment.

Exit status: 0 pass or complete, 2 fail, 3 inconclusive or not-applicable,
64 usage error, 130 interrupted (partial rows are still written).
Settings resolve as flag > ORLICZLAB_* environment variable > --config file
> built-in default.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
import warnings

import numpy as np

from . import operators as ops
from .geometry import KoranyiRegion, e1
from .integration import MeasureSpec, QuadratureConfig
from .orlicz import check_growth_class, parse_psi
from .probes import make_function
from .report import (EXIT_INTERRUPTED, EXIT_USAGE, FORMATS, ExperimentSpec, Outcome, emit,
                     load_spec, save_figure)
from .spaces import (GrowthWeight, alpha_limit_profile, evaluation_bounds, growth_norm,
                     hardy_orlicz_norm, luxemburg_norm, weak_orlicz_membership)
from .symbols import make_symbol

ENV_PREFIX = "ORLICZLAB_"
DEFAULTS = {"seed": 0, "samples": None, "radial_nodes": 64, "tol": 1e-9, "format": "text",
            "threads": 1, "alpha": 0.0}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# helpers


def _psi(spec: ExperimentSpec, default: str | None = None):
    key = spec.psi or default
    if key is None:
        raise UsageError("--psi is required")
    spec.psi = key
    try:
        return parse_psi(key)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _symbol(spec: ExperimentSpec, default: str | None = None):
    key = spec.symbol or default
    if key is None:
        raise UsageError("--symbol is required")
    spec.symbol = key
    try:
        sym = make_symbol(key, spec.N)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    spec.N = sym.N
    return sym


def _measure(spec: ExperimentSpec) -> MeasureSpec:
    try:
        return MeasureSpec(spec.N or 1, spec.alpha)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _function(spec: ExperimentSpec, psi, default: str):
    key = spec.options.get("function") or default
    spec.options["function"] = key
    try:
        return make_function(key, spec.N or 1, spec.alpha, psi)
    except (ValueError, IndexError) as exc:
        raise UsageError(f"bad --function {key!r}: {exc}") from None


def _grid(spec: ExperimentSpec, name: str, default) -> np.ndarray:
    g = spec.grids.get(name)
    return np.asarray(default if g is None else g, dtype=float)


def _from_report(rep: ops.DiagnosticsReport, out: Outcome) -> None:
    for row in rep.rows:
        out.add(**row)
    out.report = rep.to_dict()
    out.notes.extend(rep.notes)
    out.verdict = rep.verdict


def _norm_row(out: Outcome, est, **extra) -> None:
    out.add(**extra, value=est.value, lower=est.lower, upper=est.upper, diverged=est.diverged)


# ---------------------------------------------------------------------------
# experiments; each fills `out` as it goes so an interrupt keeps what exists


def exp_classify(spec, cfg, out):
    psi = _psi(spec)
    rep = check_growth_class(psi)
    for cond in ("delta2_lower", "delta1", "delta2_upper", "nabla2"):
        v = getattr(rep, cond)
        out.add(condition=cond, status=v.status, constant=v.constant,
                counterexample=v.counterexample, note=v.note)
        out.report[cond] = v.holds
    out.report["details"] = rep.to_dict()
    out.verdict = "complete"


def exp_norm(spec, cfg, out):
    psi = _psi(spec)
    f = _function(spec, psi, "constant:1")
    ms = _measure(spec)
    est = hardy_orlicz_norm(f, psi, ms.N, cfg) if ms.is_sphere else luxemburg_norm(f, psi, ms, cfg)
    _norm_row(out, est, function=f.label, alpha=ms.alpha)
    out.report = {"norm": est.value, "bracket": [est.lower, est.upper], "diverged": est.diverged,
                  "holomorphic": f.holomorphic}
    if f.holomorphic is False:
        out.notes.append("input is not holomorphic: the value is an L^psi norm only")
    out.verdict = "fail" if est.diverged else "complete"


def exp_hardy_norm(spec, cfg, out):
    psi = _psi(spec)
    f = _function(spec, psi, "constant:1")
    radii = spec.grids.get("radii")
    est = hardy_orlicz_norm(f, psi, spec.N or 1, cfg, radii)
    for r, v in zip(est.details["radii"], est.details["norms"]):
        out.add(r=r, norm=v)
    out.report = {"norm": est.value, "bracket": [est.lower, est.upper], "diverged": est.diverged,
                  "monotone": est.details.get("monotone")}
    out.plot = {"x": "r", "y": ["norm"]}
    out.verdict = "fail" if est.diverged else "complete"


def exp_growth_norm(spec, cfg, out):
    psi = _psi(spec)
    f = _function(spec, psi, "constant:1")
    gamma = float(spec.options.get("gamma", 1.0))
    est = growth_norm(f, GrowthWeight(psi, gamma), cfg, N=spec.N or 1)
    _norm_row(out, est, function=f.label, gamma=gamma)
    out.report = {"norm": est.value, "diverged": est.diverged,
                  "sup_by_sampling": est.sup_by_sampling}
    out.verdict = "fail" if est.diverged else "complete"


def exp_eval_bounds(spec, cfg, out):
    psi = _psi(spec)
    ms = _measure(spec)
    radii = _grid(spec, "radii", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 0.99])
    exact = psi.kind == "power" and psi.params == (2.0,)
    bad = 0
    for r in radii:
        L, U = evaluation_bounds(r * e1(ms.N), psi, ms)
        row = {"a": float(r), "lower": L, "upper": U}
        if exact:
            k = (1.0 - r * r) ** (-(ms.N + 1 + ms.alpha) / 2.0)
            row.update(kernel_norm=k, inside=bool(L <= k <= U))
            bad += not row["inside"]
        out.add(**row)
    out.plot = {"x": "a", "y": ["lower", "upper"] + (["kernel_norm"] if exact else []),
                "logy": True}
    out.report = {"violations": bad if exact else None}
    out.verdict = ("pass" if bad == 0 else "fail") if exact else "complete"


def exp_norm_equiv(spec, cfg, out):
    psi = _psi(spec, "exppow:1:1")
    ms = _measure(spec)
    count = int(spec.options.get("points", 15))
    radii = _grid(spec, "radii", 1.0 - np.geomspace(0.9, 0.01, count))
    weight = GrowthWeight(psi, ms.exponent)
    ratios = []
    for r in radii:
        f = make_function(f"fa:{float(r)!r}", ms.N, ms.alpha)
        lux = luxemburg_norm(f, psi, ms, cfg)
        gro = growth_norm(f, weight, cfg, N=ms.N)
        ratio = lux.value / gro.value if not (lux.diverged or gro.diverged) else math.nan
        ratios.append(ratio)
        out.add(a=float(r), luxemburg=lux.value, growth=gro.value, ratio=ratio)
    ratios = np.array(ratios)
    spread = float(np.max(ratios) / np.min(ratios)) if np.all(np.isfinite(ratios)) else math.inf
    tail = ratios[-4:]
    blowup = bool(np.all(np.diff(tail) > 0) and tail[-1] > 1.5 * tail[0])
    out.report = {"max_over_min": spread, "tail_blowup": blowup}
    out.plot = {"x": "a", "y": ["ratio"]}
    out.verdict = "pass" if spread <= 10 and not blowup else "fail"


def exp_op_norm(spec, cfg, out):
    sym = _symbol(spec, "identity")
    psi = _psi(spec, "exppow:1:1")
    ms = _measure(spec)
    gamma = float(spec.options.get("gamma", 1.0))
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        est = ops.op_norm_ratio(sym, psi, ms, cfg, gamma)
    out.notes.extend(str(w.message) for w in caught)
    bound = ops.schwarz_bound(sym, gamma)
    _norm_row(out, est, symbol=sym.label, gamma=gamma)
    out.report = {"ratio_sup": est.value, "sup_by_sampling": est.sup_by_sampling,
                  "schwarz_bound": bound}
    out.verdict = "complete"


def exp_order_bounded(spec, cfg, out):
    sym = _symbol(spec)
    psi = _psi(spec)
    ms = _measure(spec)
    target = spec.options.get("target", "both")
    reps = []
    if target in ("L", "both"):
        reps.append(ops.order_bounded_L(sym, psi, ms, cfg, spec.samples))
    if target in ("M", "both"):
        reps.append(ops.order_bounded_M(sym, psi, ms, cfg, samples=spec.samples))
    for rep in reps:
        val = rep.witnesses.get("luxemburg", rep.witnesses.get("constant"))
        out.add(test=rep.test, verdict=rep.verdict, witness=val, notes="; ".join(rep.notes))
        out.notes.extend(rep.notes)
    out.report = {r.test: r.to_dict() for r in reps}
    verdicts = [r.verdict for r in reps]
    out.verdict = ("fail" if "fail" in verdicts else
                   "inconclusive" if "inconclusive" in verdicts else "pass")


def _carleson_grids(spec):
    A = _grid(spec, "A", ops.default_A_grid())
    h = _grid(spec, "h", ops.default_h_grid())
    return A, h


def exp_corona(spec, cfg, out):
    sym = _symbol(spec)
    psi = _psi(spec)
    A, h = _carleson_grids(spec)
    rep = ops.corona_order_criteria(sym, psi, _measure(spec), cfg, A, h, samples=spec.samples)
    _from_report(rep, out)
    out.plot = {"x": "h", "y": ["mass", "upper"], "logx": True, "logy": True}


def exp_carleson_bounded(spec, cfg, out):
    sym = _symbol(spec)
    psi = _psi(spec)
    A, h = _carleson_grids(spec)
    rep = ops.bounded_necessary_check(sym, psi, _measure(spec), cfg, A, h, samples=spec.samples)
    _from_report(rep, out)
    out.plot = {"x": "h", "y": ["mass", "upper"], "logx": True, "logy": True}


def exp_carleson_compact(spec, cfg, out):
    sym = _symbol(spec)
    psi = _psi(spec)
    A, h = _carleson_grids(spec)
    rep = ops.compactness_criterion(sym, psi, _measure(spec), cfg, A, h, samples=spec.samples)
    _from_report(rep, out)
    out.plot = {"x": "h", "y": ["A_lower", "A_upper"], "logx": True, "logy": True}


def exp_berezin(spec, cfg, out):
    sym = _symbol(spec)
    psi = _psi(spec)
    a = spec.grids.get("a")
    _from_report(ops.berezin_compactness(sym, psi, _measure(spec), cfg, a), out)
    out.plot = {"x": "a", "y": ["q"], "logy": True}


def exp_sufficient(spec, cfg, out):
    sym = _symbol(spec)
    psi = _psi(spec)
    n_max = int(spec.options.get("n_max", 200))
    _from_report(ops.sufficient_compactness(sym, psi, _measure(spec), cfg, n_max), out)


def exp_ess_norm(spec, cfg, out):
    sym = _symbol(spec)
    psi = _psi(spec, "exppow:1:1")
    n_max = int(spec.options.get("n_max", 200))
    r = spec.grids.get("r")
    try:
        rep = ops.essential_norm_report(sym, psi, _measure(spec), cfg, r, n_max)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _from_report(rep, out)


def exp_ahern(spec, cfg, out):
    if spec.N is None:
        spec.N = 2
    sym = _symbol(spec, f"critical:{spec.N}")
    ms = _measure(spec)
    hs = _grid(spec, "h", np.logspace(-3, -1, 9))
    n = spec.samples or ops.DEFAULT_RHO_SAMPLES
    balls, sups = [], []
    for h in hs:
        b, s = ops.ball_and_sup(sym, float(h), ms, cfg, samples=n)
        balls.append(b)
        sups.append(s)
        out.add(h=float(h), mass=b.mass.value, lower=b.mass.lower, upper=b.mass.upper,
                counts=b.counts, rho=s.mass.value, rho_upper=s.mass.upper, stable=b.stable)
    slope = ops.fit_slope(hs, [b.mass.value for b in balls])
    out.report = {"slope": slope}
    out.plot = {"x": "h", "y": ["mass", "rho"], "logx": True, "logy": True}
    verdict = "complete"
    if sym.label.startswith("critical"):
        expected = (2 * ms.alpha + ms.N + 3) / 2.0
        tol = float(spec.options.get("slope_tol", 0.2))
        out.report.update(expected=expected, slope_tol=tol)
        verdict = "pass" if abs(slope - expected) <= tol else "fail"
    # the boundedness check on the same samples, once for each psi asked for
    for key in spec.options.get("check_psi", ["power:2", "exppow:1:1"]):
        rep = ops.bounded_necessary_check(sym, parse_psi(key), ms, cfg, rho=sups)
        out.report[f"bounded_necessary[{key}]"] = rep.verdict
    out.verdict = verdict


def exp_koranyi(spec, cfg, out):
    sym = _symbol(spec)
    psi = _psi(spec, "power:2")
    ms = _measure(spec)
    opening = spec.options.get("opening")
    region = None if opening is None else KoranyiRegion(tuple(e1(sym.N)), float(opening))
    _from_report(ops.koranyi_verdict(sym, psi, ms, cfg, region), out)


def exp_limit_alpha(spec, cfg, out):
    psi = _psi(spec, "power:2")
    f = _function(spec, psi, "pole:0.25")
    alphas = _grid(spec, "alphas", [0.0, -0.5, -0.9, -0.99])
    N = spec.N or 1
    norms, hardy = alpha_limit_profile(f, psi, N, cfg, alphas)
    for a, est in zip(alphas, norms):
        out.add(alpha=float(a), norm=est.value, diverged=est.diverged)
    out.add(alpha=-1.0, norm=hardy.value, diverged=hardy.diverged)
    vals = np.array([e.value for e in norms])
    increasing = bool(np.all(np.diff(vals) > 0))
    gap = abs(vals[-1] / hardy.value - 1.0)
    out.report = {"increasing": increasing, "relative_gap_to_hardy": gap}
    out.plot = {"x": "alpha", "y": ["norm"]}
    out.verdict = "pass" if increasing and gap <= 0.02 else "fail"


def exp_weak_orlicz(spec, cfg, out):
    psi = _psi(spec)
    f = _function(spec, psi, "powgrowth:0.5")
    ms = _measure(spec)
    t = spec.grids.get("t")
    mv = weak_orlicz_membership(f, psi, ms, cfg, t, spec.samples)
    for ti, k in zip(mv.details["t"], mv.details["counts"]):
        out.add(t=ti, exceedances=int(k))
    out.report = mv.to_dict()
    out.verdict = {"holds": "pass", "fails": "fail"}.get(mv.status, "inconclusive")


EXPERIMENTS = {
    "classify": exp_classify,
    "norm": exp_norm,
    "hardy-norm": exp_hardy_norm,
    "growth-norm": exp_growth_norm,
    "eval-bounds": exp_eval_bounds,
    "norm-equiv": exp_norm_equiv,
    "op-norm": exp_op_norm,
    "order-bounded": exp_order_bounded,
    "corona": exp_corona,
    "carleson-bounded": exp_carleson_bounded,
    "carleson-compact": exp_carleson_compact,
    "berezin": exp_berezin,
    "sufficient": exp_sufficient,
    "ess-norm": exp_ess_norm,
    "ahern": exp_ahern,
    "koranyi": exp_koranyi,
    "limit-alpha": exp_limit_alpha,
    "weak-orlicz": exp_weak_orlicz,
}


# ---------------------------------------------------------------------------
# argument handling


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(EXIT_USAGE)


def _count(text: str) -> int:
    v = float(text)
    if v != int(v) or v < 1:
        raise argparse.ArgumentTypeError(f"not a positive integer: {text}")
    return int(v)


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("common")
    g.add_argument("--psi")
    g.add_argument("--symbol")
    g.add_argument("--N", type=int)
    g.add_argument("--alpha", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--samples", type=_count)
    g.add_argument("--radial-nodes", type=int)
    g.add_argument("--tol", type=float)
    g.add_argument("--format", choices=FORMATS)
    g.add_argument("--out")
    g.add_argument("--threads", type=int)
    g.add_argument("--config", help="key = value quadrature settings")
    g.add_argument("--figure", help="also save a matplotlib figure here")
    x = common.add_argument_group("experiment options")
    x.add_argument("--function", help="test function key, e.g. fa:0.9, pole:0.25")
    x.add_argument("--gamma", type=float)
    x.add_argument("--target", choices=("L", "M", "both"))
    x.add_argument("--opening", type=float, help="override the region Gamma(e1, opening)")
    x.add_argument("--n-max", type=int)
    x.add_argument("--points", type=int)
    x.add_argument("--slope-tol", type=float)
    x.add_argument("--check-psi", type=lambda s: s.split(","))
    for name in ("radii", "alphas", "h", "A", "a", "r", "t"):
        x.add_argument(f"--{name.lower() if name != 'A' else 'A'}-grid", dest=f"grid_{name}",
                       type=_floats, help="comma separated values")

    p = _Parser(prog="orliczlab", description="Orlicz-space numerics on the unit ball")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in EXPERIMENTS:
        sub.add_parser(name, parents=[common])
    rr = sub.add_parser("rerun", help="re-run the experiment embedded in an output file")
    rr.add_argument("source")
    rr.add_argument("--format", choices=FORMATS)
    rr.add_argument("--out")
    rr.add_argument("--threads", type=int)
    rr.add_argument("--figure")
    return p


def _env(name: str):
    return os.environ.get(ENV_PREFIX + name.upper().replace("-", "_"))


def _resolve(args, name: str, cast, file_cfg: dict):
    v = getattr(args, name.replace("-", "_"), None)
    if v is not None:
        return v
    e = _env(name)
    if e is not None:
        try:
            return cast(e)
        except ValueError:
            raise UsageError(f"bad value for {ENV_PREFIX}{name.upper()}: {e!r}") from None
    if name.replace("-", "_") in file_cfg:
        return cast(file_cfg[name.replace("-", "_")])
    return DEFAULTS.get(name.replace("-", "_"))


def spec_from_args(args) -> tuple[ExperimentSpec, QuadratureConfig, int]:
    cfg_path = args.config or _env("config")
    file_cfg = {}
    if cfg_path:
        try:
            base = QuadratureConfig.from_file(cfg_path)
        except (OSError, ValueError) as exc:
            raise UsageError(f"config file: {exc}") from None
        file_cfg = base.echo()
        file_cfg["threads"] = base.threads
    else:
        base = QuadratureConfig()
    samples = _resolve(args, "samples", _count, {})
    if samples is None and cfg_path:
        samples = file_cfg.get("mc_samples")
    spec = ExperimentSpec(
        name=args.command,
        psi=args.psi or _env("psi"),
        symbol=args.symbol or _env("symbol"),
        N=_resolve(args, "N", int, {}),
        alpha=_resolve(args, "alpha", float, {}),
        seed=_resolve(args, "seed", int, file_cfg),
        samples=samples,
        radial_nodes=_resolve(args, "radial-nodes", int, file_cfg),
        tol=_resolve(args, "tol", float, file_cfg),
        format=_resolve(args, "format", str, {}),
        out=args.out or _env("out"),
    )
    if spec.format not in FORMATS:
        raise UsageError(f"unknown format {spec.format!r}")
    spec.grids = {k[5:]: v for k, v in vars(args).items() if k.startswith("grid_") and v is not None}
    for opt in ("function", "gamma", "target", "opening", "n_max", "points", "slope_tol",
                "check_psi"):
        v = getattr(args, opt, None)
        if v is not None:
            spec.options[opt] = v
    spec.options["quadrature"] = {"boundary_exponent": base.boundary_exponent,
                                  "confidence": base.confidence}
    threads = _resolve(args, "threads", int, file_cfg)
    return spec, config_for(spec, threads), threads


def config_for(spec: ExperimentSpec, threads: int = 1) -> QuadratureConfig:
    q = spec.options.get("quadrature", {})
    kw = dict(radial_nodes=spec.radial_nodes, seed=spec.seed, tol=spec.tol,
              threads=max(1, int(threads)), **q)
    if spec.samples is not None:
        kw["mc_samples"] = max(1000, int(spec.samples))
    try:
        return QuadratureConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def run(spec: ExperimentSpec, cfg: QuadratureConfig, figure: str | None = None) -> int:
    out = Outcome("inconclusive")
    try:
        EXPERIMENTS[spec.name](spec, cfg, out)
    except KeyboardInterrupt:
        out.verdict = "inconclusive"
        out.notes.append("interrupted: partial results")
        emit(spec, out)
        return EXIT_INTERRUPTED
    emit(spec, out)
    if figure:
        msg = save_figure(spec, out, figure)
        if msg:
            sys.stderr.write(f"orliczlab: figure not written: {msg}\n")
    return out.exit_code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "rerun":
            try:
                spec = load_spec(args.source)
            except (OSError, ValueError, KeyError) as exc:
                raise UsageError(str(exc)) from None
            if args.format:
                spec.format = args.format
            spec.out = args.out
            cfg = config_for(spec, args.threads or int(_env("threads") or 1))
            figure = args.figure
        else:
            spec, cfg, _ = spec_from_args(args)
            figure = args.figure or _env("figure")
        return run(spec, cfg, figure)
    except UsageError as exc:
        sys.stderr.write(f"orliczlab: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
