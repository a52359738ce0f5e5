"""Density evolution on the BEC for uncoupled and spatially coupled ensembles.

Both cases run through one kernel: a coupled chain of length L with memory m,
where the uncoupled ensemble is the special case L = 1, m = 0.  Constraint
nodes sit at positions 1..L+m and average the incoming erasure probabilities
of the m+1 variable positions that feed them; positions outside 1..L are
known symbols (erasure probability zero).
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field
from functools import lru_cache

import numba
import numpy as np
from scipy.interpolate import CubicSpline

from .ensemble import EnsembleSpec
from .trellis import GeneratorSpec, build_trellis
from .transfer import SubsetChain, build_subset_chain, eval_transfer

SURROGATE_NODES = 8192


@dataclass(frozen=True)
class DEConfig:
    max_iterations: int = 200_000
    target: float = 1e-8
    stall_tol: float = 1e-13

    def __post_init__(self):
        if not self.target > 0:
            raise ValueError("target must be positive")
        if not self.stall_tol < self.target:
            raise ValueError("stall_tol must be below target")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")

    @classmethod
    def coupled_default(cls) -> "DEConfig":
        return cls(max_iterations=1_000_000)


def default_config(spec: EnsembleSpec) -> DEConfig:
    return DEConfig() if spec.coupling is None else DEConfig.coupled_default()


CONVERGED, STALLED, BUDGET = "converged", "stalled", "budget"
_STATUS = {0: CONVERGED, 1: STALLED, 2: BUDGET}


@dataclass
class DEResult:
    """Outcome of one density-evolution run.

    For uncoupled runs the profiles have length 1.  ``p`` holds the
    constraint-node outputs at positions 1..L+m and ``p_var`` the average
    incoming erasure probability seen by each variable position.
    """

    eps: float
    status: str
    iterations: int
    q: np.ndarray
    p: np.ndarray
    p_var: np.ndarray
    d_v: int
    nonmonotone: float = 0.0

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    @property
    def p_a(self) -> np.ndarray:
        return self.eps * self.p_var ** self.d_v

    @property
    def extrinsic(self) -> float:
        return float(np.mean(self.p_var ** self.d_v))


# --- constraint-node updates -------------------------------------------------

def check_update_spc(q, d_c: int):
    return 1.0 - (1.0 - np.asarray(q, dtype=float)) ** (d_c - 1)


def punctured_inputs(q, d_c: int):
    """(q_s, q_p) seen by a trellis with randomly punctured parity."""
    return q, (q + d_c - 2) / (d_c - 1)


def check_update_cc(tf: SubsetChain, q: float, d_c: int) -> float:
    if d_c < 2:
        raise ValueError("d_c must be at least 2")
    q_s, q_p = punctured_inputs(q, d_c)
    p_s, p_p = eval_transfer(tf, q_s, q_p)
    return ((d_c - 1) * p_s + p_p) / d_c


def var_update(eps, p, d_v: int):
    return eps * np.asarray(p, dtype=float) ** (d_v - 1)


@dataclass
class CheckNode:
    """Scalar constraint-node map q -> p used by the DE kernel.

    For convolutional components ``table`` holds cubic-spline coefficients of
    the exact map on a uniform grid over [0, 1]; it is built lazily.
    """

    d_c: int
    chain: SubsetChain | None = None
    _table: np.ndarray | None = field(default=None, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def kind(self) -> int:
        return 0 if self.chain is None else 1

    def exact(self, q: float) -> float:
        if self.chain is None:
            return float(check_update_spc(q, self.d_c))
        return check_update_cc(self.chain, q, self.d_c)

    @property
    def table(self) -> np.ndarray:
        if self.chain is None:
            return np.zeros((4, 1))
        with self._lock:
            if self._table is None:
                grid = np.linspace(0.0, 1.0, SURROGATE_NODES + 1)
                vals = [self.exact(x) for x in grid]
                self._table = np.ascontiguousarray(CubicSpline(grid, vals).c)
        return self._table

    def __call__(self, q):
        q = np.asarray(q, dtype=float)
        out = np.empty(q.size)
        _check_many(q.ravel(), self.kind, self.d_c, self.table, out)
        return out.reshape(q.shape)


@lru_cache(maxsize=None)
def _chain_for(gen: GeneratorSpec) -> SubsetChain:
    return build_subset_chain(build_trellis(gen))


@lru_cache(maxsize=None)
def check_node(component, d_c: int) -> CheckNode:
    if isinstance(component, GeneratorSpec):
        return CheckNode(d_c, _chain_for(component))
    return CheckNode(d_c)


def check_node_for(spec: EnsembleSpec) -> CheckNode:
    return check_node(spec.component, spec.d_c)


# --- kernel ------------------------------------------------------------------

@numba.njit(cache=True)
def _check(x, kind, d_c, table):
    if kind == 0:
        return 1.0 - (1.0 - x) ** (d_c - 1)
    n = table.shape[1]
    i = int(x * n)
    if i >= n:
        i = n - 1
    if i < 0:
        i = 0
    dx = x - i / n
    v = ((table[0, i] * dx + table[1, i]) * dx + table[2, i]) * dx + table[3, i]
    if v < 0.0:
        return 0.0
    if v > 1.0:
        return 1.0
    return v


@numba.njit(cache=True)
def _check_many(xs, kind, d_c, table, out):
    for k in range(xs.size):
        out[k] = _check(xs[k], kind, d_c, table)


@numba.njit(cache=True)
def _de_kernel(q, eps, d_v, m, kind, d_c, table, target, stall_tol, max_iter):
    L = q.size
    w = 1.0 / (m + 1)
    p = np.zeros(L + m)
    pv = np.zeros(L)
    qn = np.zeros(L)
    worst = 0.0  # largest increase of any q_t between iterations
    it = 0
    status = 2
    while it < max_iter:
        it += 1
        # constraint positions c = 0..L+m-1 average q over c-m..c
        s = 0.0
        for c in range(L + m):
            if c < L:
                s += q[c]
            if c - m - 1 >= 0:
                s -= q[c - m - 1]
            x = s * w
            if x < 0.0:
                x = 0.0
            p[c] = _check(x, kind, d_c, table)
        # variable position t averages p over t..t+m
        s = 0.0
        for c in range(m + 1):
            s += p[c]
        pa_max = 0.0
        dq = 0.0
        qmax = 0.0
        for t in range(L):
            if t > 0:
                s += p[t + m] - p[t - 1]
            pv[t] = s * w
            pa = eps * pv[t] ** d_v
            if pa > pa_max:
                pa_max = pa
            qn[t] = eps * pv[t] ** (d_v - 1)
            d = qn[t] - q[t]
            if d > worst:
                worst = d
            if abs(d) > dq:
                dq = abs(d)
            if q[t] > qmax:
                qmax = q[t]
        for t in range(L):
            q[t] = qn[t]
        if pa_max < target:
            status = 0
            break
        if dq <= stall_tol * qmax:
            status = 1
            break
    return status, it, p, pv, worst


def _run(spec: EnsembleSpec, eps: float, cfg: DEConfig, L: int, m: int,
         q0: np.ndarray | None = None) -> DEResult:
    if not 0.0 <= eps <= 1.0:
        raise ValueError(f"erasure probability out of range: {eps}")
    node = check_node_for(spec)
    if eps == 0.0:
        z = np.zeros(L)
        return DEResult(0.0, CONVERGED, 1, z, np.zeros(L + m), z.copy(), spec.d_v)
    if eps == 1.0:
        return DEResult(1.0, STALLED, 0, np.ones(L), np.ones(L + m), np.ones(L), spec.d_v)
    q = np.full(L, float(eps)) if q0 is None else np.array(q0, dtype=float)
    status, it, p, pv, worst = _de_kernel(q, float(eps), spec.d_v, m, node.kind, spec.d_c,
                                          node.table, cfg.target, cfg.stall_tol,
                                          cfg.max_iterations)
    return DEResult(float(eps), _STATUS[status], int(it), q, p, pv, spec.d_v, float(worst))


def _var_avg(p, L, m):
    return np.array([p[t:t + m + 1].mean() for t in range(L)])


def de_step_check(q: np.ndarray, m: int, node: CheckNode) -> np.ndarray:
    """Constraint outputs at positions 1..L+m for variable profile ``q``."""
    padded = np.concatenate([np.zeros(m), q, np.zeros(m)])
    x = np.array([padded[c:c + m + 1].mean() for c in range(len(q) + m)])
    return node(x)


def de_step(spec: EnsembleSpec, eps: float, q: np.ndarray) -> np.ndarray:
    """One full DE iteration in plain numpy (reference for the kernel)."""
    m = spec.coupling.m if spec.coupling else 0
    node = check_node_for(spec)
    p = de_step_check(np.asarray(q, float), m, node)
    return var_update(eps, _var_avg(p, len(q), m), spec.d_v)


def de_run_uncoupled(spec: EnsembleSpec, eps: float, cfg: DEConfig | None = None,
                     q0: float | None = None) -> DEResult:
    if spec.coupling is not None:
        raise ValueError("spec is coupled; use de_run_coupled")
    cfg = cfg or DEConfig()
    return _run(spec, eps, cfg, 1, 0, None if q0 is None else np.array([q0]))


def de_run_coupled(spec: EnsembleSpec, eps: float, cfg: DEConfig | None = None,
                   q0: np.ndarray | None = None, L: int | None = None) -> DEResult:
    if spec.coupling is None:
        raise ValueError("spec is uncoupled; use de_run_uncoupled")
    cfg = cfg or DEConfig.coupled_default()
    return _run(spec, eps, cfg, L or spec.coupling.L, spec.coupling.m, q0)


def de_run(spec: EnsembleSpec, eps: float, cfg: DEConfig | None = None) -> DEResult:
    if spec.coupling is None:
        return de_run_uncoupled(spec, eps, cfg)
    return de_run_coupled(spec, eps, cfg)


def extrinsic_exit(spec: EnsembleSpec, eps: float, cfg: DEConfig | None = None) -> float:
    """Average extrinsic erasure probability at the DE fixed point reached from q = eps."""
    res = de_run(spec, eps, cfg)
    if res.status == BUDGET:
        raise RuntimeError(f"DE did not settle at eps={eps} within {res.iterations} iterations")
    return 0.0 if res.converged else res.extrinsic
