"""Exact BEC extrinsic transfer functions of a convolutional trellis.

With the all-zero codeword sent over a BEC, the normalized BCJR forward
metric at any time is uniform over the set of states consistent with the
observations so far.  That set evolves deterministically given which of the
section's two bits were erased, so in the interior of a long trellis the
forward (and backward) sets form a finite Markov chain over subsets of states.
The extrinsic erasure probability of a bit is the stationary probability that
both bit values remain possible between the forward and backward sets.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from .trellis import Trellis, reverse_trellis

# Erasure patterns of a section, as (systematic erased, parity erased).
PATTERNS = ((0, 0), (0, 1), (1, 0), (1, 1))

MAX_SUBSETS = 1 << 16


class StationaryError(RuntimeError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"stationary solve did not converge: residual {residual:.3e} "
                         f"after {iterations} squarings")
        self.residual = residual


def _step_masks(t: Trellis) -> list[list[int]]:
    """next-state mask of a single state under each erasure pattern."""
    out = []
    for s in range(t.num_states):
        row = []
        for sys_erased, par_erased in PATTERNS:
            m = 0
            for br in t.branches[s]:
                if not sys_erased and br.systematic:
                    continue
                if not par_erased and br.parity:
                    continue
                m |= 1 << br.next_state
            row.append(m)
        out.append(row)
    return out


def _apply(step: list[list[int]], mask: int, k: int) -> int:
    out = 0
    s = 0
    while mask:
        if mask & 1:
            out |= step[s][k]
        mask >>= 1
        s += 1
    return out


@dataclass(frozen=True)
class _Chain:
    masks: np.ndarray        # (K,) subset bitmasks
    succ: np.ndarray         # (4, K) successor index per pattern
    full: int                # index of the full reachable set


def _closure(t: Trellis, cap: int) -> _Chain:
    step = _step_masks(t)
    full = (1 << t.num_states) - 1
    index: dict[int, int] = {}
    order: list[int] = []
    frontier = [full, 1]
    for m in frontier:
        if m not in index:
            index[m] = len(order)
            order.append(m)
    succ: list[list[int]] = [[] for _ in PATTERNS]
    i = 0
    while i < len(order):
        m = order[i]
        for k in range(len(PATTERNS)):
            n = _apply(step, m, k)
            if not n & 1:
                raise AssertionError("state 0 dropped from a consistent set")
            if n not in index:
                if len(order) >= cap:
                    raise RuntimeError(f"subset closure exceeds cap of {cap}")
                index[n] = len(order)
                order.append(n)
            succ[k].append(index[n])
        i += 1
    # The (erased, erased) orbit of the full set settles on the largest
    # reachable set; use that as the "no information" start.
    start = index[full]
    seen = set()
    while start not in seen:
        seen.add(start)
        start = succ[3][start]
    return _Chain(np.array(order, dtype=np.int64), np.array(succ, dtype=np.int64), start)


@dataclass
class SubsetChain:
    """Forward/backward consistent-state subset chains of a trellis."""

    trellis: Trellis
    forward: _Chain
    backward: _Chain
    # (4, Kf, Kb) boolean: ambiguity of the section's systematic bit with the
    # parity (0) observed / (1) erased, and of the parity bit with the
    # systematic bit (2) observed / (3) erased.
    ambiguous: np.ndarray
    tol: float = 1e-12
    _memo: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def sizes(self) -> tuple[int, int]:
        return len(self.forward.masks), len(self.backward.masks)

    def __call__(self, q_s: float, q_p: float) -> tuple[float, float]:
        return eval_transfer(self, q_s, q_p)


def build_subset_chain(t: Trellis, cap: int = MAX_SUBSETS) -> SubsetChain:
    fwd = _closure(t, cap)
    bwd = _closure(reverse_trellis(t), cap)

    # reach[c][s]: states reachable from s on branches allowed by condition c
    conds = (
        lambda br: br.systematic == 1 and br.parity == 0,
        lambda br: br.systematic == 1,
        lambda br: br.systematic == 0 and br.parity == 1,
        lambda br: br.parity == 1,
    )
    amb = np.zeros((4, len(fwd.masks), len(bwd.masks)), dtype=bool)
    for c, cond in enumerate(conds):
        reach = []
        for s in range(t.num_states):
            m = 0
            for br in t.branches[s]:
                if cond(br):
                    m |= 1 << br.next_state
            reach.append(m)
        fmask = np.zeros(len(fwd.masks), dtype=np.int64)
        for i, F in enumerate(fwd.masks.tolist()):
            fmask[i] = _apply([[r] for r in reach], F, 0)
        amb[c] = (fmask[:, None] & bwd.masks[None, :]) != 0
    return SubsetChain(t, fwd, bwd, amb)


def _transition_matrix(chain: _Chain, weights) -> np.ndarray:
    k = len(chain.masks)
    T = np.zeros((k, k))
    rows = np.arange(k)
    for w, succ in zip(weights, chain.succ):
        if w:
            np.add.at(T, (rows, succ), w)
    return T


def _pattern_weights(q_s: float, q_p: float):
    return ((1 - q_s) * (1 - q_p), (1 - q_s) * q_p, q_s * (1 - q_p), q_s * q_p)


def stationary_solve(chain: _Chain, weights) -> np.ndarray:
    """Stationary law assuming a single recurrent class (direct linear solve)."""
    T = _transition_matrix(chain, weights)
    k = T.shape[0]
    A = T.T - np.eye(k)
    A[-1, :] = 1.0
    b = np.zeros(k)
    b[-1] = 1.0
    pi = np.linalg.solve(A, b)
    pi = np.clip(pi, 0.0, None)
    return pi / pi.sum()


def stationary_power(chain: _Chain, weights, tol: float = 1e-12,
                     max_squarings: int = 64) -> np.ndarray:
    """Limit law of the chain started at the no-information set.

    Repeated squaring of the transition matrix: after k squarings the row
    equals the law after 2^k sections.
    """
    T = _transition_matrix(chain, weights)
    pi = np.zeros(T.shape[0])
    pi[chain.full] = 1.0
    resid = np.inf
    for it in range(max_squarings):
        nxt = pi @ T
        resid = np.abs(nxt - pi).sum()
        if resid < tol:
            return nxt
        pi = nxt
        T = T @ T
        T /= T.sum(axis=1, keepdims=True)
    raise StationaryError(resid, max_squarings)


def _corner(q_s: float, q_p: float):
    # the two mixed corners go through the chains started at the full set
    return {(0.0, 0.0): (0.0, 0.0), (1.0, 1.0): (1.0, 1.0)}.get((q_s, q_p))


def eval_transfer(chain: SubsetChain, q_s: float, q_p: float,
                  method: str | None = None) -> tuple[float, float]:
    """Extrinsic erasure probabilities (p_s, p_p) for input erasures (q_s, q_p)."""
    if not (0.0 <= q_s <= 1.0 and 0.0 <= q_p <= 1.0):
        raise ValueError(f"probabilities out of range: {q_s}, {q_p}")
    corner = _corner(float(q_s), float(q_p))
    if corner is not None:
        return corner
    key = (round(q_s * 1e12), round(q_p * 1e12), method)
    hit = chain._memo.get(key)
    if hit is not None:
        return hit

    w = _pattern_weights(q_s, q_p)
    if method is None:
        method = "solve" if q_s < 1.0 and q_p < 1.0 else "power"
    if method == "solve":
        pf = stationary_solve(chain.forward, w)
        pb = stationary_solve(chain.backward, w)
    else:
        pf = stationary_power(chain.forward, w, chain.tol)
        pb = stationary_power(chain.backward, w, chain.tol)
    amb = chain.ambiguous
    p_s = (1 - q_p) * (pf @ amb[0] @ pb) + q_p * (pf @ amb[1] @ pb)
    p_p = (1 - q_s) * (pf @ amb[2] @ pb) + q_s * (pf @ amb[3] @ pb)
    out = (min(max(float(p_s), 0.0), 1.0), min(max(float(p_p), 0.0), 1.0))
    with chain._lock:
        chain._memo[key] = out
    return out


def mc_transfer_oracle(t: Trellis, q_s: float, q_p: float, sections: int = 10**6,
                       seed: int = 0, batch: int = 1000):
    """Monte-Carlo estimate of (p_s, p_p) from one long terminated transmission.

    Runs set-valued BCJR over ``sections`` sections of the all-zero codeword
    with independent erasures, starting and ending in state 0, and counts
    interior sections whose extrinsic decisions are ambiguous.  Standard
    errors come from batch means over blocks of ``batch`` sections, which
    accounts for the correlation between neighbouring sections.

    Returns (p_s_hat, p_p_hat, (se_s, se_p)).
    """
    if sections < 1000:
        raise ValueError("need at least 1000 sections")
    rng = np.random.default_rng(seed)
    n = sections
    burn = min(200 * t.memory + 200, n // 10)
    es = rng.random(n) < q_s
    ep = rng.random(n) < q_p

    S = t.num_states
    nm = 1 << S
    # table[mask][pattern] for forward and backward set propagation
    fwd = [[0] * 4 for _ in range(nm)]
    bwd = [[0] * 4 for _ in range(nm)]
    for mask in range(nm):
        for k, (se, pe) in enumerate(PATTERNS):
            f = b = 0
            for s, nxt, sb, pb in t.edges():
                ok = (se or not sb) and (pe or not pb)
                if not ok:
                    continue
                if mask >> s & 1:
                    f |= 1 << nxt
                if mask >> nxt & 1:
                    b |= 1 << s
            fwd[mask][k] = f
            bwd[mask][k] = b
    pat = (2 * es + ep).tolist()

    F = [0] * (n + 1)
    B = [0] * (n + 1)
    cur = 1
    for i in range(n):
        F[i] = cur
        cur = fwd[cur][pat[i]]
    F[n] = cur
    cur = 1
    B[n] = 1
    for i in range(n - 1, -1, -1):
        cur = bwd[cur][pat[i]]
        B[i] = cur
    F = np.array(F, dtype=np.int64)
    B = np.array(B, dtype=np.int64)

    # reach tables: states reached from a forward mask on branches with a
    # given (systematic, parity) label
    reach = np.zeros((nm, 2, 2), dtype=np.int64)
    for mask in range(nm):
        for s, nxt, sb, pb in t.edges():
            if mask >> s & 1:
                reach[mask, sb, pb] |= 1 << nxt
    Fi, Bo = F[:n], B[1:]
    r = reach[Fi]
    hit = lambda m: (m & Bo) != 0  # noqa: E731
    # systematic: some input-1 branch survives, parity evidence used if observed
    amb_s = hit(r[:, 1, 0]) | (ep & hit(r[:, 1, 1]))
    amb_p = hit(r[:, 0, 1]) | (es & hit(r[:, 1, 1]))

    sl = slice(burn, n - burn)
    amb_s, amb_p = amb_s[sl], amb_p[sl]
    m = len(amb_s) // batch
    def est(a):
        blocks = a[: m * batch].reshape(m, batch).mean(axis=1)
        return float(a.mean()), float(blocks.std(ddof=1) / np.sqrt(m))
    ps, se_s = est(amb_s)
    pp, se_p = est(amb_p)
    return ps, pp, (se_s, se_p)
