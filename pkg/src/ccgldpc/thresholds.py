"""BP thresholds by bisection, EXIT curves and area-theorem MAP thresholds."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .density import (BUDGET, DEConfig, de_run_coupled, de_run_uncoupled,
                      default_config)
from .ensemble import EnsembleSpec

log = logging.getLogger(__name__)

BP, MAP = "bp", "map"
L_AGREEMENT = 1e-5
L_MAX = 1600


class ThresholdError(RuntimeError):
    def __init__(self, message: str, eps_bp: float | None = None, residual: float | None = None):
        super().__init__(message)
        self.eps_bp = eps_bp
        self.residual = residual


@dataclass
class ThresholdResult:
    kind: str
    value: float
    resolution: float
    diagnostics: dict = field(default_factory=dict)


@dataclass
class ExitCurve:
    eps: np.ndarray     # ascending
    pe: np.ndarray

    def __len__(self):
        return len(self.eps)


def _converges(spec: EnsembleSpec, eps: float, cfg: DEConfig, L: int | None = None):
    if spec.coupling is None:
        res = de_run_uncoupled(spec, eps, cfg)
    else:
        res = de_run_coupled(spec, eps, cfg, L=L)
    return res.converged, res


def _bisect(spec: EnsembleSpec, cfg: DEConfig, resolution: float, L: int | None,
            lo: float = 0.0, hi: float | None = None, checked: bool = False):
    hi = 1.0 - spec.rate + 0.05 if hi is None else hi
    hi = min(hi, 1.0)
    if not checked and _converges(spec, hi, cfg, L)[0]:
        raise ThresholdError(f"DE converges at the upper bracket end {hi}")
    budget_hits = 0
    while hi - lo >= resolution:
        mid = 0.5 * (lo + hi)
        ok, res = _converges(spec, mid, cfg, L)
        if res.status == BUDGET:
            budget_hits += 1
        if ok:
            lo = mid
        else:
            hi = mid
    return lo, hi, budget_hits


def _bisect_near(spec, cfg, resolution, L, guess, width=2e-3):
    """Bisect in a small window around ``guess``; fall back to the full bracket."""
    lo, hi = max(guess - width, 0.0), guess + width
    ok_lo, _ = _converges(spec, lo, cfg, L)
    ok_hi, _ = _converges(spec, hi, cfg, L)
    if not ok_lo or ok_hi:
        return _bisect(spec, cfg, resolution, L)
    return _bisect(spec, cfg, resolution, L, lo, hi, checked=True)


def bp_threshold(spec: EnsembleSpec, cfg: DEConfig | None = None,
                 resolution: float = 1e-5) -> ThresholdResult:
    """Largest eps for which DE drives the a-posteriori erasure probability to zero.

    Coupled ensembles are re-solved with the chain length doubled until two
    consecutive lengths agree within 1e-5.
    """
    if resolution < 1e-6:
        raise ValueError("resolution must be at least 1e-6")
    cfg = cfg or default_config(spec)
    if spec.coupling is None:
        lo, hi, hits = _bisect(spec, cfg, resolution, None)
        return ThresholdResult(BP, 0.5 * (lo + hi), resolution,
                               {"bracket": (lo, hi), "budget_hits": hits})

    L0 = L = spec.coupling.L
    lo, hi, hits = _bisect(spec, cfg, resolution, L)
    history = [(L, 0.5 * (lo + hi))]
    stable = False
    cfg_L = cfg
    while 2 * L <= L_MAX:
        L *= 2
        # the wave has twice as far to travel
        cfg_L = replace(cfg, max_iterations=cfg.max_iterations * L // L0)
        lo2, hi2, h2 = _bisect_near(spec, cfg_L, resolution, L, history[-1][1])
        hits += h2
        history.append((L, 0.5 * (lo2 + hi2)))
        lo, hi = lo2, hi2
        if abs(history[-1][1] - history[-2][1]) <= L_AGREEMENT:
            stable = True
            break
    if not stable:
        log.warning("coupled threshold of %s not stable up to L=%d", spec.label(), L)
    return ThresholdResult(BP, history[-1][1], resolution,
                           {"bracket": (lo, hi), "budget_hits": hits,
                            "L_history": history, "L_stable": stable,
                            "max_iterations": cfg_L.max_iterations})


def certify_bracket(spec: EnsembleSpec, result: ThresholdResult,
                    cfg: DEConfig | None = None, factor: int = 10) -> bool:
    """Re-run the bracket ends with a larger iteration budget."""
    cfg = cfg or default_config(spec)
    budget = result.diagnostics.get("max_iterations", cfg.max_iterations)
    big = DEConfig(budget * factor, cfg.target, cfg.stall_tol)
    lo, hi = result.diagnostics["bracket"]
    L = result.diagnostics.get("L_history", [(None, None)])[-1][0]
    ok_lo, _ = _converges(spec, lo, big, L)
    ok_hi, _ = _converges(spec, hi, big, L)
    return ok_lo and not ok_hi


def exit_curve(spec: EnsembleSpec, cfg: DEConfig | None = None, grid=None,
               eps_bp: float | None = None, step: float = 0.005,
               refine: float = 0.01, min_gap: float = 1e-5) -> ExitCurve:
    """Extrinsic erasure probability at the DE fixed point over a grid of eps.

    The grid is walked from eps = 1 downwards and each DE run starts from the
    fixed point of the previous (larger) eps, which converges to the same
    largest fixed point as a start at q = eps.  Neighbouring samples on the
    nonzero branch that differ by more than ``refine`` get a midpoint added.
    """
    if spec.coupling is not None:
        raise ValueError("EXIT curves are traced for uncoupled ensembles")
    cfg = cfg or default_config(spec)
    if grid is None:
        if eps_bp is None:
            eps_bp = bp_threshold(spec, cfg).value
        start = max(eps_bp - 0.01, 0.0)
        n = int(np.ceil((1.0 - start) / step))
        grid = np.linspace(start, 1.0, n + 1)
    grid = np.unique(np.clip(np.asarray(grid, dtype=float), 0.0, 1.0))

    def trace(points):
        out = {}
        q_prev = None
        for e in points[::-1]:
            if e == 1.0:
                out[e] = (1.0, 1.0)
                q_prev = 1.0
                continue
            res = de_run_uncoupled(spec, e, cfg, q0=None if q_prev is None else min(q_prev, e))
            if res.status == BUDGET:
                raise RuntimeError(f"DE did not settle at eps={e}")
            if res.converged:
                out[e] = (0.0, 0.0)
                q_prev = None
            else:
                out[e] = (res.extrinsic, float(res.q[0]))
                q_prev = float(res.q[0])
        return out

    values = trace(grid)
    for _ in range(40):
        xs = sorted(values)
        extra = []
        for a, b in zip(xs, xs[1:]):
            pa, pb = values[a][0], values[b][0]
            if pa > 0 and pb > 0 and abs(pb - pa) > refine and b - a > min_gap:
                extra.append(0.5 * (a + b))
        if not extra:
            break
        values.update(trace(np.array(sorted(set(extra) | set(xs)))))
    xs = np.array(sorted(values))
    return ExitCurve(xs, np.array([values[x][0] for x in xs]))


def area_solve(curve: ExitCurve, rate: float) -> float | None:
    """eps such that the area under the curve to the right of it equals ``rate``.

    Cumulative trapezoid from eps = 1 down, inverted by linear interpolation.
    Returns None if the whole sampled area is below ``rate``.
    """
    x, y = curve.eps, curve.pe
    seg = 0.5 * (y[1:] + y[:-1]) * np.diff(x)
    tail = np.concatenate([np.cumsum(seg[::-1])[::-1], [0.0]])  # area right of x[i]
    if tail[0] < rate:
        return None
    k = int(np.nonzero(tail >= rate)[0][-1])
    if k == len(x) - 1:
        return float(x[-1])
    # area is linear-ish within the segment; solve exactly for the trapezoid
    a, b = x[k], x[k + 1]
    ya, yb = y[k], y[k + 1]
    need = rate - tail[k + 1]
    # area of [t, b] with linear y: (b - t) * (y(t) + yb) / 2
    slope = (yb - ya) / (b - a)
    # solve 0.5*slope*s^2 ... in s = b - t: s*yb - 0.5*slope*s^2 = need
    if abs(slope) < 1e-15:
        s = need / yb
    else:
        disc = yb * yb - 2.0 * slope * need
        s = (yb - np.sqrt(max(disc, 0.0))) / slope
    return float(b - s)


def map_threshold(spec: EnsembleSpec, cfg: DEConfig | None = None,
                  resolution: float = 2e-4, step: float = 0.004,
                  max_halvings: int = 8) -> ThresholdResult:
    """Area-theorem upper bound on the MAP threshold of an uncoupled ensemble."""
    if spec.coupling is not None:
        raise ValueError("MAP thresholds are computed for uncoupled ensembles only")
    cfg = cfg or default_config(spec)
    bp = bp_threshold(spec, cfg).value
    prev = None
    h = step
    for i in range(max_halvings + 1):
        curve = exit_curve(spec, cfg, eps_bp=bp, step=h)
        val = area_solve(curve, spec.rate)
        if val is None:
            lo = curve.eps >= bp
            area = float(np.trapezoid(curve.pe[lo], curve.eps[lo]))
            raise ThresholdError(f"MAP threshold at or below BP threshold for {spec.label()}: "
                                 f"area above eps_BP is {area:.6f} < R={spec.rate:.6f} "
                                 f"(residual {spec.rate - area:.3e})",
                                 eps_bp=bp, residual=spec.rate - area)
        if prev is not None and abs(val - prev) < resolution:
            result = ThresholdResult(MAP, val, resolution,
                                     {"step": h, "samples": len(curve), "eps_bp": bp,
                                      "previous": prev})
            if result.value < bp:
                raise ThresholdError("MAP estimate below BP threshold")
            return result
        prev = val
        h /= 2
    raise ThresholdError(f"MAP threshold not stable to {resolution} after {max_halvings} halvings")
