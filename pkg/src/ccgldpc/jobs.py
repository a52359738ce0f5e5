"""Batch job configuration, execution and artifact writing."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import platform
from concurrent.futures import ProcessPoolExecutor
from importlib import resources
from pathlib import Path
from typing import Literal

import numba
import numpy as np
import scipy
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from . import __version__
from .density import DEConfig, default_config
from .ensemble import EnsembleSpec, component_text, make_spec
from .thresholds import bp_threshold, exit_curve, map_threshold
from .transfer import eval_transfer, mc_transfer_oracle
from .trellis import build_trellis
from .weights import (PuncturePattern, average_spectrum, component_spectrum_conv,
                      component_spectrum_ldpc, dmin_at)

WORKERS_ENV = "CCGLDPC_WORKERS"
Analysis = Literal["bp", "map", "exit-curve", "dmin", "wenum", "transfer"]
PRESETS = ("table1", "table2", "fig4")

COLUMNS = {
    "threshold": ["analysis", "ensemble", "component", "states", "m", "L", "threshold",
                  "resolution", "reference", "delta", "target", "stall_tol",
                  "max_iterations", "L_final", "L_stable", "budget_hits"],
    "exit-curve": ["analysis", "ensemble", "component", "states", "eps", "pe"],
    "dmin": ["analysis", "ensemble", "component", "states", "alpha", "N", "n", "d_hat",
             "truncated", "cap", "pattern"],
    "wenum": ["analysis", "ensemble", "component", "states", "N", "n", "w", "log_count",
              "log_avg"],
    "transfer": ["analysis", "component", "states", "q_s", "q_p", "p_s", "p_p", "mc_p_s",
                 "mc_p_p", "se_s", "se_p", "sections", "seed"],
}
TAIL_COLUMNS = ["note", "error"]


class ConfigError(ValueError):
    pass


class Tolerances(BaseModel):
    model_config = ConfigDict(extra="forbid")

    target: float = 1e-8
    stall_tol: float = 1e-13
    max_iterations: int | None = None   # None: per-spec default
    resolution_bp: float = Field(1e-5, ge=1e-6)
    resolution_map: float = Field(2e-4, gt=0)

    def de_config(self, spec: EnsembleSpec) -> DEConfig:
        base = default_config(spec)
        return DEConfig(self.max_iterations or base.max_iterations, self.target, self.stall_tol)


class SpecEntry(BaseModel):
    model_config = ConfigDict(extra="forbid")

    ensemble: str
    component: str = "ldpc"
    coupling: str | None = None
    reference: dict[str, float] = Field(default_factory=dict)
    note: str | None = None
    structured: bool = False

    def spec(self) -> EnsembleSpec:
        return make_spec(self.ensemble, self.component, self.coupling)


class JobConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: str = "job"
    analyses: list[Analysis]
    specs: list[SpecEntry]
    tolerances: Tolerances = Field(default_factory=Tolerances)
    alpha: float = Field(0.5, gt=0, lt=1)
    N_list: list[int] | None = None
    n_list: list[int] | None = None
    cap: int | None = Field(None, ge=1)
    puncturing: Literal["first", "random"] = "first"
    wenum_N: int = Field(8, ge=1)
    transfer_points: list[tuple[float, float]] = Field(default_factory=list)
    oracle: bool = False
    sections: int = Field(10**6, ge=1000)
    seed: int = 0
    layout: Literal["table1", "table2"] | None = None
    output: str | None = None
    format: Literal["csv", "json"] = "csv"
    workers: int | None = Field(None, ge=1)

    @field_validator("analyses")
    @classmethod
    def _analyses(cls, v):
        if not v:
            raise ValueError("no analyses requested")
        return v

    @model_validator(mode="after")
    def _check(self):
        if not self.specs:
            raise ValueError("empty spec list")
        for e in self.specs:
            s = e.spec()
            if s.coupling is not None and {"map", "exit-curve", "dmin", "wenum"} & set(self.analyses):
                raise ValueError(f"{s.label()}: only bp/transfer accept coupled specs")
        if "dmin" in self.analyses and not (self.N_list or self.n_list):
            raise ValueError("dmin needs N_list or n_list")
        if self.n_list:
            for e in self.specs:
                dc = e.spec().d_c
                bad = [n for n in self.n_list if n % dc]
                if bad:
                    raise ValueError(f"block lengths {bad} not divisible by d_c={dc}")
        if "transfer" in self.analyses and not self.transfer_points:
            raise ValueError("transfer needs transfer_points")
        return self

    def identity(self) -> dict:
        """Fields that determine the artifact contents."""
        return self.model_dump(mode="json", exclude={"output", "format", "workers"})

    def digest(self) -> str:
        blob = json.dumps(self.identity(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def load_config(source: str | Path | dict) -> JobConfig:
    try:
        if isinstance(source, dict):
            data = source
        else:
            data = json.loads(Path(source).read_text())
        return JobConfig.model_validate(data)
    except (OSError, json.JSONDecodeError, ValueError) as exc:
        raise ConfigError(str(exc)) from None


def load_preset(name: str) -> dict:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    text = resources.files("ccgldpc.presets").joinpath(f"{name}.json").read_text()
    return json.loads(text)


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


# --- cells -------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        if math.isinf(x):
            return "-inf" if x < 0 else "inf"
        return f"{float(x):.10g}"
    return str(x)


def _base(spec: EnsembleSpec) -> dict:
    return {"ensemble": f"{spec.d_v},{spec.d_c}", "component": component_text(spec),
            "states": spec.states}


def _pattern(cfg: JobConfig, d_c: int) -> PuncturePattern:
    return PuncturePattern(d_c - 1, 0, cfg.puncturing == "random")


def _N_values(cfg: JobConfig, spec: EnsembleSpec) -> list[int]:
    if cfg.n_list:
        return [n // spec.d_c for n in cfg.n_list]
    return list(cfg.N_list)


def _threshold_rows(kind: str, entry: SpecEntry, cfg: JobConfig) -> list[dict]:
    spec = entry.spec()
    de = cfg.tolerances.de_config(spec)
    row = _base(spec) | {"analysis": kind, "target": de.target, "stall_tol": de.stall_tol,
                         "max_iterations": de.max_iterations}
    if spec.coupling is not None:
        row |= {"m": spec.coupling.m, "L": spec.coupling.L}
    if kind == "bp":
        res = bp_threshold(spec, de, cfg.tolerances.resolution_bp)
    else:
        res = map_threshold(spec, de, cfg.tolerances.resolution_map)
    d = res.diagnostics
    row |= {"threshold": round(res.value, 6), "resolution": res.resolution,
            "budget_hits": d.get("budget_hits")}
    if "L_history" in d:
        row |= {"L_final": d["L_history"][-1][0], "L_stable": d["L_stable"],
                "max_iterations": d["max_iterations"]}
    ref = entry.reference.get(kind)
    if ref is not None:
        row |= {"reference": ref, "delta": round(res.value - ref, 6)}
    return [row]


def _exit_rows(entry: SpecEntry, cfg: JobConfig) -> list[dict]:
    spec = entry.spec()
    curve = exit_curve(spec, cfg.tolerances.de_config(spec))
    return [_base(spec) | {"analysis": "exit-curve", "eps": e, "pe": p}
            for e, p in zip(curve.eps, curve.pe)]


def _dmin_rows(entry: SpecEntry, cfg: JobConfig) -> list[dict]:
    spec = entry.spec()
    pat = None if spec.is_ldpc else _pattern(cfg, spec.d_c)
    rows = []
    for N in sorted(_N_values(cfg, spec)):
        pt = dmin_at(spec, N, cfg.alpha, cfg.cap, pat, entry.structured)
        rows.append(_base(spec) | {
            "analysis": "dmin", "alpha": cfg.alpha, "N": pt.N, "n": pt.n, "d_hat": pt.d_hat,
            "truncated": pt.truncated, "cap": pt.cap,
            "pattern": "structured" if entry.structured else ("" if spec.is_ldpc else cfg.puncturing)})
    return rows


def _wenum_rows(entry: SpecEntry, cfg: JobConfig) -> list[dict]:
    spec = entry.spec()
    N = cfg.wenum_N
    if spec.is_ldpc:
        n = spec.d_c * N
        A = component_spectrum_ldpc(N, spec.d_c, min(cfg.cap or n, n))
        pat = None
    else:
        pat = _pattern(cfg, spec.d_c)
        t = build_trellis(spec.component)
        probe = component_spectrum_conv(t, N, spec.d_c, 0, pat)
        A = component_spectrum_conv(t, N, spec.d_c, min(cfg.cap or probe.n, probe.n), pat)
    Abar = average_spectrum(spec, N, A.W, pattern=pat)
    return [_base(spec) | {"analysis": "wenum", "N": N, "n": A.n, "w": w,
                           "log_count": A.log_counts[w], "log_avg": Abar.log_counts[w]}
            for w in range(A.W + 1)]


def _transfer_rows(entry: SpecEntry, cfg: JobConfig) -> list[dict]:
    from .density import check_node_for
    spec = entry.spec()
    if spec.is_ldpc:
        raise ValueError("transfer functions need a convolutional component")
    chain = check_node_for(spec).chain
    rows = []
    for q_s, q_p in cfg.transfer_points:
        p_s, p_p = eval_transfer(chain, q_s, q_p)
        row = {"analysis": "transfer", "component": component_text(spec), "states": spec.states,
               "q_s": q_s, "q_p": q_p, "p_s": p_s, "p_p": p_p}
        if cfg.oracle:
            ms, mp, (es, ep) = mc_transfer_oracle(chain.trellis, q_s, q_p, cfg.sections, cfg.seed)
            row |= {"mc_p_s": ms, "mc_p_p": mp, "se_s": es, "se_p": ep,
                    "sections": cfg.sections, "seed": cfg.seed}
        rows.append(row)
    return rows


def run_cell(analysis: str, entry: SpecEntry, cfg: JobConfig) -> list[dict]:
    try:
        if analysis in ("bp", "map"):
            rows = _threshold_rows(analysis, entry, cfg)
        elif analysis == "exit-curve":
            rows = _exit_rows(entry, cfg)
        elif analysis == "dmin":
            rows = _dmin_rows(entry, cfg)
        elif analysis == "wenum":
            rows = _wenum_rows(entry, cfg)
        else:
            rows = _transfer_rows(entry, cfg)
    except Exception as exc:  # reported per cell, the job carries on
        spec = entry.spec()
        row = _base(spec) | {"analysis": analysis, "error": f"{type(exc).__name__}: {exc}"}
        if spec.coupling is not None:
            row |= {"m": spec.coupling.m, "L": spec.coupling.L}
        if analysis in entry.reference:
            row["reference"] = entry.reference[analysis]
        rows = [row]
    for r in rows:
        if entry.note:
            r["note"] = entry.note
    return rows


def _run_cell_args(args):
    return run_cell(*args)


# --- artifacts ---------------------------------------------------------------

def _columns(cfg: JobConfig) -> list[str]:
    cols: list[str] = []
    for a in cfg.analyses:
        for c in COLUMNS["threshold" if a in ("bp", "map") else a]:
            if c not in cols:
                cols.append(c)
    return cols + TAIL_COLUMNS


def provenance(cfg: JobConfig) -> list[str]:
    t = cfg.tolerances
    return [
        f"tool: ccgldpc {__version__}",
        f"job: {cfg.name} config_sha256={cfg.digest()}",
        f"tolerances: target={t.target:g} stall_tol={t.stall_tol:g} "
        f"max_iterations={t.max_iterations or 'default'} resolution_bp={t.resolution_bp:g} "
        f"resolution_map={t.resolution_map:g}",
        f"versions: python={platform.python_version()} numpy={np.__version__} "
        f"scipy={scipy.__version__} numba={numba.__version__}",
    ]


def render(cfg: JobConfig, rows: list[dict], fmt: str) -> str:
    cols = _columns(cfg)
    if fmt == "json":
        doc = {"provenance": provenance(cfg), "config": cfg.identity(), "columns": cols,
               "rows": [{c: _fmt(r.get(c)) for c in cols} for r in rows]}
        return json.dumps(doc, indent=1) + "\n"
    buf = io.StringIO()
    for line in provenance(cfg):
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in cols])
    return buf.getvalue()


def render_layout(cfg: JobConfig, rows: list[dict]) -> str:
    """Pivot threshold rows into the row/column layout of the reference tables."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    graphs = list(dict.fromkeys(r["ensemble"] for r in rows))
    cell = {}
    for r in rows:
        if r.get("threshold") is None:
            val = "error"
        else:
            val = f"{r['threshold']:.4f}"
        if cfg.layout == "table1":
            key = (r["analysis"], r["states"])
        else:
            key = (r["states"], r.get("m"))
        cell[key, r["ensemble"]] = val
    keys = list(dict.fromkeys(k for k, _ in cell))
    w.writerow(["threshold", "states"] + graphs if cfg.layout == "table1" else ["states", "m"] + graphs)
    for k in keys:
        w.writerow(list(map(str, k)) + [cell.get((k, g), "-") for g in graphs])
    return buf.getvalue()


def run_job(cfg: JobConfig, workers: int | None = None) -> tuple[int, list[dict], str]:
    """Run every (analysis, spec) cell; returns (exit status, rows, rendered artifact)."""
    cells = [(a, e, cfg) for e in cfg.specs for a in cfg.analyses]
    workers = workers or cfg.workers or default_workers()
    if workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_run_cell_args, cells))
    else:
        chunks = [run_cell(*c) for c in cells]
    rows = [r for chunk in chunks for r in chunk]
    status = 1 if any(r.get("error") for r in rows) else 0
    text = render(cfg, rows, cfg.format)
    if cfg.output:
        out = Path(cfg.output)
        out.parent.mkdir(parents=True, exist_ok=True)
        out.write_text(text)
        if cfg.layout:
            out.with_name(out.stem + "_layout.csv").write_text(render_layout(cfg, rows))
    return status, rows, text


def emit_curve_data(points, path: str | Path, header: dict[str, str], columns=("x", "y")) -> Path:
    """Two-column CSV sorted by the first column, with '#' metadata lines."""
    pts = sorted((float(x), y) for x, y in points)
    if not pts:
        raise ValueError("empty series")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as f:
        for k, v in header.items():
            f.write(f"# {k}: {v}\n")
        w = csv.writer(f, lineterminator="\n")
        w.writerow(columns)
        for x, y in pts:
            w.writerow([_fmt(x), _fmt(y)])
    return path
