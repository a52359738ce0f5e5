"""Command-line entry point: ``ccgldpc <command> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from . import jobs
from .ensemble import make_spec

EXIT_OK, EXIT_CELL, EXIT_CONFIG = 0, 1, 2


def _spec_args(p: argparse.ArgumentParser, coupling: bool = True):
    p.add_argument("--ensemble", required=True, help="dv,dc")
    p.add_argument("--component", default="ldpc", help="ldpc or conv:NUM/DEN (octal)")
    if coupling:
        p.add_argument("--coupling", default=None, help="m,L or uncoupled")


def _out_args(p: argparse.ArgumentParser):
    p.add_argument("--out", default=None, help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _tol_args(p: argparse.ArgumentParser):
    p.add_argument("--target", type=float, default=None)
    p.add_argument("--stall-tol", type=float, default=None)
    p.add_argument("--max-iterations", type=int, default=None)


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ccgldpc", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("threshold", help="BP or MAP threshold of one ensemble")
    p.add_argument("kind", choices=("bp", "map"))
    _spec_args(p)
    p.add_argument("--resolution", type=float, default=None)
    _tol_args(p)
    _out_args(p)

    p = sub.add_parser("exit-curve", help="extrinsic EXIT curve of an uncoupled ensemble")
    _spec_args(p, coupling=False)
    _tol_args(p)
    p.add_argument("--out", default=None)

    p = sub.add_parser("dmin", help="minimum-distance bound over a range of liftings")
    _spec_args(p, coupling=False)
    p.add_argument("--alpha", type=float, default=0.5)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--N-list", type=_int_list, help="liftings N, comma separated")
    g.add_argument("--n-list", type=_int_list, help="block lengths d_c*N, comma separated")
    p.add_argument("--cap", type=int, default=None, help="initial weight cap")
    p.add_argument("--puncturing", choices=("first", "random"), default="first")
    p.add_argument("--structured", action="store_true",
                   help="use the two-input enumerator of the (2,3) braided ensemble")
    p.add_argument("--curve", action="store_true", help="write only the (n, d_hat) pairs")
    _out_args(p)

    p = sub.add_parser("wenum", help="component and ensemble-average weight enumerator")
    _spec_args(p, coupling=False)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--cap", type=int, default=None)
    p.add_argument("--puncturing", choices=("first", "random"), default="first")
    _out_args(p)

    p = sub.add_parser("transfer", help="trellis transfer function on the BEC")
    p.add_argument("--code", required=True, help="generator NUM/DEN (octal)")
    p.add_argument("--qs", type=float, required=True)
    p.add_argument("--qp", type=float, required=True)
    p.add_argument("--oracle", action="store_true", help="add a Monte-Carlo estimate")
    p.add_argument("--sections", type=int, default=10**6)
    p.add_argument("--seed", type=int, default=0)
    _out_args(p)

    p = sub.add_parser("reproduce", help="run a shipped preset")
    p.add_argument("preset", choices=jobs.PRESETS)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--only", default=None,
                   help="keep specs whose 'ensemble component' text contains this string")
    _out_args(p)

    p = sub.add_parser("run", help="run a JSON job config")
    p.add_argument("config")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    _out_args(p)
    return ap


def _tolerances(a) -> dict:
    t = {}
    if getattr(a, "target", None) is not None:
        t["target"] = a.target
    if getattr(a, "stall_tol", None) is not None:
        t["stall_tol"] = a.stall_tol
    if getattr(a, "max_iterations", None) is not None:
        t["max_iterations"] = a.max_iterations
    return t


def _write(text: str, out: str | None):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _single(a, analysis: str, extra: dict, entry: dict | None = None):
    entry = entry or {"ensemble": a.ensemble, "component": a.component,
                      "coupling": getattr(a, "coupling", None)}
    raw = {"name": analysis, "analyses": [analysis], "specs": [entry],
           "format": getattr(a, "format", "csv")} | extra
    cfg = jobs.load_config(raw)
    status, rows, text = jobs.run_job(cfg, workers=1)
    for r in rows:
        if r.get("error"):
            print(f"error: {r['error']}", file=sys.stderr)
    return status, rows, text, cfg


def cmd_threshold(a) -> int:
    tol = _tolerances(a)
    if a.resolution is not None:
        tol["resolution_bp" if a.kind == "bp" else "resolution_map"] = a.resolution
    t0 = time.perf_counter()
    status, rows, text, cfg = _single(a, a.kind, {"tolerances": tol})
    runtime = time.perf_counter() - t0
    # runtime only here: batch artifacts must be reproducible byte for byte
    if a.format == "json":
        doc = json.loads(text)
        doc["columns"].append("runtime_s")
        doc["rows"][0]["runtime_s"] = f"{runtime:.2f}"
        text = json.dumps(doc, indent=1) + "\n"
    else:
        lines = text.splitlines()
        k = next(i for i, ln in enumerate(lines) if not ln.startswith("#"))
        lines[k] += ",runtime_s"
        lines[k + 1] += f",{runtime:.2f}"
        text = "\n".join(lines) + "\n"
    _write(text, a.out)
    return status


def cmd_exit_curve(a) -> int:
    status, rows, _, cfg = _single(a, "exit-curve", {"tolerances": _tolerances(a)})
    if status:
        return status
    spec = make_spec(a.ensemble, a.component)
    header = {"ensemble": spec.label(), "quantity": "average extrinsic erasure probability",
              "config_sha256": cfg.digest()}
    pts = [(r["eps"], r["pe"]) for r in rows]
    if a.out:
        jobs.emit_curve_data(pts, a.out, header, ("eps", "pe"))
    else:
        for k, v in header.items():
            print(f"# {k}: {v}")
        print("eps,pe")
        for x, y in pts:
            print(f"{jobs._fmt(x)},{jobs._fmt(y)}")
    return EXIT_OK


def cmd_dmin(a) -> int:
    extra = {"alpha": a.alpha, "cap": a.cap, "puncturing": a.puncturing, "format": a.format}
    if a.N_list:
        extra["N_list"] = a.N_list
    else:
        extra["n_list"] = a.n_list
    entry = {"ensemble": a.ensemble, "component": a.component, "structured": a.structured}
    status, rows, text, cfg = _single(a, "dmin", extra, entry)
    if status:
        return status
    if a.curve:
        spec = make_spec(a.ensemble, a.component)
        header = {"ensemble": spec.label(), "alpha": str(a.alpha),
                  "config_sha256": cfg.digest()}
        pts = [(r["n"], r["d_hat"]) for r in rows]
        if a.out:
            jobs.emit_curve_data(pts, a.out, header, ("n", "d_hat"))
            return EXIT_OK
        text = "".join(f"# {k}: {v}\n" for k, v in header.items()) + "n,d_hat\n" + "".join(
            f"{x},{y}\n" for x, y in sorted(pts))
    _write(text, a.out)
    return status


def cmd_wenum(a) -> int:
    extra = {"wenum_N": a.N, "cap": a.cap, "puncturing": a.puncturing}
    status, _, text, _ = _single(a, "wenum", extra)
    _write(text, a.out)
    return status


def cmd_transfer(a) -> int:
    entry = {"ensemble": "2,3", "component": f"conv:{a.code}"}
    extra = {"transfer_points": [[a.qs, a.qp]], "oracle": a.oracle, "sections": a.sections,
             "seed": a.seed}
    status, _, text, _ = _single(a, "transfer", extra, entry)
    _write(text, a.out)
    return status


def _run_config(raw: dict, a) -> int:
    if getattr(a, "out", None):
        raw["output"] = a.out
    if getattr(a, "format", None):
        raw["format"] = a.format
    if getattr(a, "seed", None) is not None:
        raw["seed"] = a.seed
    cfg = jobs.load_config(raw)
    status, rows, text = jobs.run_job(cfg, workers=a.workers)
    if not cfg.output:
        sys.stdout.write(text)
    bad = [r for r in rows if r.get("error")]
    for r in bad:
        print(f"error in {r.get('ensemble', '')} {r.get('component', '')}: {r['error']}",
              file=sys.stderr)
    return status


def cmd_reproduce(a) -> int:
    raw = jobs.load_preset(a.preset)
    if a.only:
        raw["specs"] = [s for s in raw["specs"]
                        if a.only in f"{s['ensemble']} {s.get('component', 'ldpc')}"]
    return _run_config(raw, a)


def cmd_run(a) -> int:
    try:
        raw = json.loads(Path(a.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise jobs.ConfigError(str(exc)) from None
    return _run_config(raw, a)


COMMANDS = {"threshold": cmd_threshold, "exit-curve": cmd_exit_curve, "dmin": cmd_dmin,
            "wenum": cmd_wenum, "transfer": cmd_transfer, "reproduce": cmd_reproduce,
            "run": cmd_run}


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[a.command](a)
    except jobs.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
