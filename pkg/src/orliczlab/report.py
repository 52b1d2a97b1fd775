"""Experiment specs and the three output formats (text, CSV, JSON).

Every output embeds the ExperimentSpec that produced it, so a file can be fed
back to ``orliczlab rerun`` to regenerate the same numbers.
"""
from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields

import numpy as np

FORMATS = ("text", "csv", "json")
EXIT_CODES = {"pass": 0, "complete": 0, "fail": 2, "inconclusive": 3, "not-applicable": 3}
EXIT_USAGE = 64
EXIT_INTERRUPTED = 130


@dataclass
class ExperimentSpec:
    name: str
    psi: str | None = None
    symbol: str | None = None
    N: int | None = None
    alpha: float = 0.0
    grids: dict = field(default_factory=dict)
    seed: int = 0
    samples: int | None = None
    radial_nodes: int = 64
    tol: float = 1e-9
    format: str = "text"
    out: str | None = None
    options: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return jsonable(asdict(self))

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentSpec":
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValueError(f"unknown spec fields: {sorted(unknown)}")
        return cls(**{k: _unjson(v) for k, v in d.items()})


@dataclass
class Outcome:
    """What an experiment hands back to the writer."""

    verdict: str
    columns: list = field(default_factory=list)
    rows: list = field(default_factory=list)
    report: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    plot: dict | None = None  # {"x": col, "y": [cols], "logx": bool, "logy": bool}

    def add(self, **row) -> None:
        for k in row:
            if k not in self.columns:
                self.columns.append(k)
        self.rows.append(row)

    @property
    def exit_code(self) -> int:
        return EXIT_CODES.get(self.verdict, 3)


# ---------------------------------------------------------------------------
# value conversion


def _num(x: float):
    if math.isfinite(x):
        return x
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")


def jsonable(obj):
    """Plain JSON types; non-finite floats become the strings inf/-inf/nan and
    complex numbers [re, im] pairs."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(float(obj))
    if isinstance(obj, (complex, np.complexfloating)):
        return [_num(obj.real), _num(obj.imag)]
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "to_dict"):
        return jsonable(obj.to_dict())
    return str(obj)


def _unjson(v):
    if v in ("inf", "-inf", "nan"):
        return float(v)
    if isinstance(v, dict):
        return {k: _unjson(x) for k, x in v.items()}
    if isinstance(v, list):
        return [_unjson(x) for x in v]
    return v


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v)) if math.isfinite(v) else _num(float(v))
    if isinstance(v, (complex, np.complexfloating)):
        return repr(complex(v))
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(jsonable(v), sort_keys=True)
    return str(v)


def _short(v) -> str:
    if isinstance(v, (float, np.floating)) and math.isfinite(v):
        return f"{v:.6g}"
    return _cell(v)


# ---------------------------------------------------------------------------
# renderers


def render_json(spec: ExperimentSpec, out: Outcome) -> str:
    body = {"experiment": spec.to_dict(), "verdict": out.verdict, "report": jsonable(out.report),
            "rows": jsonable(out.rows), "notes": list(out.notes)}
    return json.dumps(body, indent=2, sort_keys=True, allow_nan=False) + "\n"


def render_csv(spec: ExperimentSpec, out: Outcome) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if out.columns:
        w.writerow(out.columns)
        for row in out.rows:
            w.writerow([_cell(row.get(c)) for c in out.columns])
    buf.write(f"# verdict: {out.verdict}\n")
    for note in out.notes:
        buf.write(f"# note: {note}\n")
    buf.write("# report: " + json.dumps(jsonable(out.report), sort_keys=True, allow_nan=False) + "\n")
    buf.write("# spec: " + json.dumps(spec.to_dict(), sort_keys=True, allow_nan=False) + "\n")
    return buf.getvalue()


def render_text(spec: ExperimentSpec, out: Outcome) -> str:
    lines = [f"{spec.name}: {out.verdict}"]
    if out.columns and out.rows:
        table = [out.columns] + [[_short(r.get(c)) for c in out.columns] for r in out.rows]
        widths = [max(len(row[i]) for row in table) for i in range(len(out.columns))]
        for k, row in enumerate(table):
            lines.append("  ".join(s.rjust(wd) for s, wd in zip(row, widths)))
            if k == 0:
                lines.append("  ".join("-" * wd for wd in widths))
    for key, val in _without_config(out.report).items():
        lines.append(f"{key}: {_cell(jsonable(val))}")
    for note in out.notes:
        lines.append(f"note: {note}")
    lines.append("spec: " + json.dumps(spec.to_dict(), sort_keys=True, allow_nan=False))
    return "\n".join(lines) + "\n"


def _without_config(d):
    # text output is for people; the config echo lives in the spec line
    if isinstance(d, dict):
        return {k: _without_config(v) for k, v in d.items() if k not in ("config", "rows")}
    return d


RENDERERS = {"json": render_json, "csv": render_csv, "text": render_text}


def emit(spec: ExperimentSpec, out: Outcome) -> None:
    text = RENDERERS[spec.format](spec, out)
    if spec.out:
        with open(spec.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        sys.stdout.flush()


def load_spec(path: str) -> ExperimentSpec:
    """Recover the embedded spec from a JSON, CSV or text output file."""
    with open(path) as fh:
        text = fh.read()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        return ExperimentSpec.from_dict(json.loads(text)["experiment"])
    for line in reversed(text.splitlines()):
        for prefix in ("# spec: ", "spec: "):
            if line.startswith(prefix):
                return ExperimentSpec.from_dict(json.loads(line[len(prefix):]))
    raise ValueError(f"no embedded experiment spec in {path}")


# ---------------------------------------------------------------------------
# figures (optional; never touch data or exit codes)


def save_figure(spec: ExperimentSpec, out: Outcome, path: str) -> str | None:
    """Plot out.plot to path. Returns an error message instead of raising."""
    if not out.plot or not out.rows:
        return "this experiment has nothing to plot"
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except Exception as exc:  # pragma: no cover - depends on the install
        return f"matplotlib unavailable: {exc}"
    p = out.plot
    xs = [_float(r.get(p["x"])) for r in out.rows]
    fig, ax = plt.subplots(figsize=(6, 4))
    for col in p["y"]:
        ys = [_float(r.get(col)) for r in out.rows]
        ax.plot(xs, ys, marker="o", ms=3, label=col)
    if p.get("logx"):
        ax.set_xscale("log")
    if p.get("logy"):
        ax.set_yscale("log")
    ax.set_xlabel(p["x"])
    ax.set_title(f"{spec.name} ({out.verdict})")
    ax.legend()
    fig.tight_layout()
    try:
        fig.savefig(path)
    except OSError as exc:
        return f"could not write figure: {exc}"
    finally:
        plt.close(fig)
    return None


def _float(v) -> float:
    try:
        return float(v)
    except (TypeError, ValueError):
        return math.nan
