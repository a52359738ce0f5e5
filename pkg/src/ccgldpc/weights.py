"""Weight enumerators of component codes, ensemble averages and distance bounds.

Counts are kept as natural logarithms (``-inf`` for zero) so that averages over
long blocks stay representable.  Every routine that builds a spectrum also has
an exact mode with Python integers, used as an oracle on small instances.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb, log

import numpy as np
from scipy.special import gammaln, logsumexp

from .ensemble import EnsembleSpec
from .trellis import Trellis, build_trellis

NEG_INF = -np.inf


@dataclass(frozen=True)
class PuncturePattern:
    """Keeps one parity bit per segment of ``period`` trellis sections.

    With ``randomized`` the kept position of every information segment is
    uniform over the segment and spectra are averaged over that choice; tail
    sections still follow ``kept``.
    """

    period: int
    kept: int = 0
    randomized: bool = False

    def __post_init__(self):
        if self.period < 1 or not 0 <= self.kept < self.period:
            raise ValueError(f"bad puncture pattern {self}")

    def keeps(self, section: int) -> bool:
        return section % self.period == self.kept


@dataclass
class WeightSpectrum:
    n: int
    log_counts: np.ndarray
    exact: list | None = None

    def __post_init__(self):
        if self.W > self.n:
            raise ValueError(f"cap {self.W} exceeds block length {self.n}")

    @property
    def W(self) -> int:
        return len(self.log_counts) - 1

    def counts(self) -> np.ndarray:
        return np.exp(self.log_counts)


@dataclass
class IOWeightSpectrum3:
    """log A[i1, i2, p] for a two-input component code of length N per stream."""

    N: int
    log_counts: np.ndarray
    exact: np.ndarray | None = None

    @property
    def cap(self) -> int:
        return self.log_counts.shape[0] - 1


def log_binom(n, k):
    k = np.asarray(k, dtype=float)
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def _shift_add_log(dst, src, delta):
    """dst[delta:] = logaddexp(dst[delta:], src[:len-delta]) along the last axis."""
    if delta == 0:
        np.logaddexp(dst, src, out=dst)
    elif delta < dst.shape[-1]:
        np.logaddexp(dst[..., delta:], src[..., :-delta], out=dst[..., delta:])


def _shift_add_exact(dst, src, delta):
    if delta == 0:
        dst += src
    elif delta < dst.shape[-1]:
        dst[..., delta:] += src[..., :-delta]


# --- component codes ---------------------------------------------------------

def component_spectrum_conv(t: Trellis, N: int, d_c: int, W: int,
                            pattern: PuncturePattern | None = None,
                            exact: bool = False, tail: bool = True) -> WeightSpectrum:
    """Weight enumerator of a punctured, zero-terminated trellis code.

    The trellis has (d_c-1)*N information sections; ``pattern`` keeps one
    parity bit per segment of d_c-1 sections.  With ``tail`` the encoder is
    flushed by ``memory`` extra sections whose systematic bits (and parity
    bits kept by the continued pattern) are part of the codeword; otherwise
    only paths ending in state 0 inside the block are counted.
    """
    if N < 1 or d_c < 2:
        raise ValueError("need N >= 1 and d_c >= 2")
    pattern = pattern or PuncturePattern(d_c - 1)
    sections = (d_c - 1) * N + (t.memory if tail else 0)
    n = sum(1 + pattern.keeps(j) for j in range(sections))
    if W > n:
        raise ValueError(f"cap {W} exceeds code length {n}")
    if exact and pattern.randomized:
        raise ValueError("exact mode needs a deterministic puncture pattern")
    S = t.num_states
    edges = list(t.edges())
    if exact:
        cur = np.zeros((S, W + 1), dtype=object)
        cur[0, 0] = 1
    else:
        cur = np.full((S, W + 1), NEG_INF)
        cur[0, 0] = 0.0
    add = _shift_add_exact if exact else _shift_add_log

    def run(cur, start, stop, keeps):
        for j in range(start, stop):
            kept = keeps(j)
            nxt = np.zeros_like(cur) if exact else np.full_like(cur, NEG_INF)
            for s, ns, u, p in edges:
                add(nxt[ns], cur[s], u + (p if kept else 0))
            cur = nxt
        return cur

    info = (d_c - 1) * N
    if pattern.randomized:
        P = pattern.period
        for g in range(0, info, P):
            outs = [run(cur, g, min(g + P, info), lambda j, k=k: j - g == k) for k in range(P)]
            cur = logsumexp(np.stack(outs), axis=0) - log(P)
        cur = run(cur, info, sections, pattern.keeps)
    else:
        cur = run(cur, 0, sections, pattern.keeps)
    row = cur[0]
    if exact:
        ex = [int(v) for v in row]
        logs = np.array([log(v) if v else NEG_INF for v in ex])
        return WeightSpectrum(n, logs, ex)
    return WeightSpectrum(n, row.copy())


def component_spectrum_ldpc(N: int, d_c: int, W: int, exact: bool = False) -> WeightSpectrum:
    """Coefficients of [((1+x)^d_c + (1-x)^d_c)/2]^N up to x^W."""
    n = d_c * N
    if W > n:
        raise ValueError(f"cap {W} exceeds code length {n}")
    if exact:
        base = [comb(d_c, j) if j % 2 == 0 and j <= d_c else 0 for j in range(W + 1)]
        res = [1] + [0] * W
        k, b = N, base
        while k:
            if k & 1:
                res = _mul_exact(res, b, W)
            k >>= 1
            if k:
                b = _mul_exact(b, b, W)
        return WeightSpectrum(n, np.array([log(v) if v else NEG_INF for v in res]), res)

    base = np.full(W + 1, NEG_INF)
    for j in range(0, min(d_c, W) + 1, 2):
        base[j] = log(comb(d_c, j))
    res = np.full(W + 1, NEG_INF)
    res[0] = 0.0
    k, b = N, base
    while k:
        if k & 1:
            res = _mul_log(res, b)
        k >>= 1
        if k:
            b = _mul_log(b, b)
    return WeightSpectrum(n, res)


def _mul_exact(a, b, W):
    out = [0] * (W + 1)
    for i, x in enumerate(a):
        if x:
            for j in range(W + 1 - i):
                if b[j]:
                    out[i + j] += x * b[j]
    return out


def _mul_log(a, b):
    W = len(a) - 1
    out = np.full(W + 1, NEG_INF)
    for k in range(W + 1):
        terms = a[: k + 1] + b[k::-1]
        if np.isfinite(terms).any():
            out[k] = logsumexp(terms)
    return out


def component_io_spectrum(t: Trellis, N: int, cap: int, exact: bool = False,
                          pattern: PuncturePattern | None = None) -> IOWeightSpectrum3:
    """Input/output weight enumerator of a rate-2/3 punctured trellis of 2N sections.

    Stream 1 is the systematic bit of even sections, stream 2 that of odd
    sections, and the parity kept by ``pattern`` (default: even sections)
    forms the output stream.  Only paths that end in state 0 inside the
    block are counted, so all three streams have exactly N symbols.
    """
    pattern = pattern or PuncturePattern(2)
    S = t.num_states
    shape = (S, cap + 1, cap + 1, cap + 1)
    if exact:
        cur = np.zeros(shape, dtype=object)
        cur[0, 0, 0, 0] = 1
    else:
        cur = np.full(shape, NEG_INF)
        cur[0, 0, 0, 0] = 0.0
    edges = list(t.edges())
    for j in range(2 * N):
        kept = pattern.keeps(j)
        nxt = np.zeros_like(cur) if exact else np.full_like(cur, NEG_INF)
        for s, ns, u, p in edges:
            d1, d2 = (u, 0) if j % 2 == 0 else (0, u)
            dp = p if kept else 0
            src = cur[s]
            if d1:
                src = _shift_axis(src, 0, exact)
            if d2:
                src = _shift_axis(src, 1, exact)
            if dp:
                src = _shift_axis(src, 2, exact)
            if exact:
                nxt[ns] += src
            else:
                np.logaddexp(nxt[ns], src, out=nxt[ns])
        cur = nxt
    out = cur[0]
    if exact:
        logs = np.vectorize(lambda v: log(v) if v else NEG_INF, otypes=[float])(out)
        return IOWeightSpectrum3(N, logs, out)
    return IOWeightSpectrum3(N, out.copy())


def _shift_axis(a, axis, exact):
    out = np.zeros_like(a) if exact else np.full_like(a, NEG_INF)
    sl_dst = [slice(None)] * a.ndim
    sl_src = [slice(None)] * a.ndim
    sl_dst[axis] = slice(1, None)
    sl_src[axis] = slice(None, -1)
    out[tuple(sl_dst)] = a[tuple(sl_src)]
    return out


# --- ensemble averages -------------------------------------------------------

def ensemble_avg_single_edge(A: WeightSpectrum, d_v: int) -> WeightSpectrum:
    """Average enumerator of the single-edge-type (d_v, d_c) ensemble.

    A_bar_w = A_w^d_v / C(n, w)^(d_v - 1), with n the component block length.
    """
    w = np.arange(A.W + 1)
    with np.errstate(invalid="ignore"):
        logs = d_v * A.log_counts - (d_v - 1) * log_binom(A.n, w)
    logs[~np.isfinite(A.log_counts)] = NEG_INF
    logs[0] = 0.0
    ex = None
    if A.exact is not None:
        ex = [Fraction(a ** d_v, comb(A.n, k) ** (d_v - 1)) for k, a in enumerate(A.exact)]
    return WeightSpectrum(A.n, logs, ex)


def ensemble_avg_bcc(A1: IOWeightSpectrum3, A2: IOWeightSpectrum3, N: int) -> np.ndarray:
    """log A_bar[i, p] of the uncoupled (2,3) braided ensemble.

    A_bar[i, p] = sum_p1 A1[i, p1, p-p1] A2[i, p-p1, p1] / (C(N,i) C(N,p1) C(N,p-p1)).
    Entries with i + p above the common cap are left at -inf.
    """
    K = min(A1.cap, A2.cap)
    if A1.N != N or A2.N != N:
        raise ValueError("component spectra must have length N")
    out = np.full((K + 1, K + 1), NEG_INF)
    lb = log_binom(N, np.arange(K + 1))
    for i in range(K + 1):
        for p in range(K + 1 - i):
            terms = []
            for p1 in range(p + 1):
                a = A1.log_counts[i, p1, p - p1] + A2.log_counts[i, p - p1, p1]
                if np.isfinite(a):
                    terms.append(a - lb[i] - lb[p1] - lb[p - p1])
            if terms:
                out[i, p] = logsumexp(terms)
    return out


def bcc_total_weight(log_avg: np.ndarray, N: int) -> WeightSpectrum:
    """Collapse A_bar[i, p] to total weight w = i + p."""
    K = log_avg.shape[0] - 1
    logs = np.full(K + 1, NEG_INF)
    for w in range(K + 1):
        terms = [log_avg[i, w - i] for i in range(w + 1) if np.isfinite(log_avg[i, w - i])]
        if terms:
            logs[w] = logsumexp(terms)
    return WeightSpectrum(3 * N, logs)


# --- distance bounds ---------------------------------------------------------

def dmin_bound(Abar: WeightSpectrum, alpha: float) -> tuple[int, bool]:
    """Largest d with sum_{w=1}^{d-1} A_bar_w < 1 - alpha.

    Returns (d_hat, truncated); ``truncated`` means the sum stayed below
    1 - alpha over every stored weight, so d_hat = W + 1 is only a lower bound.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie in (0, 1)")
    limit = log(1.0 - alpha)
    logs = Abar.log_counts
    acc = NEG_INF
    for w in range(1, len(logs)):
        acc = np.logaddexp(acc, logs[w])
        if acc >= limit:
            return w, False
    return len(logs), True


@dataclass
class DminPoint:
    N: int
    n: int
    d_hat: int
    truncated: bool
    cap: int


def average_spectrum(spec: EnsembleSpec, N: int, W: int, exact: bool = False,
                     pattern: PuncturePattern | None = None,
                     structured: bool = False) -> WeightSpectrum:
    """Ensemble-average enumerator of an uncoupled ensemble at lifting N."""
    if spec.coupling is not None:
        raise ValueError("distance bounds are computed for uncoupled ensembles")
    if spec.is_ldpc:
        A = component_spectrum_ldpc(N, spec.d_c, min(W, spec.d_c * N), exact)
        return ensemble_avg_single_edge(A, spec.d_v)
    t = build_trellis(spec.component)
    if structured:
        if (spec.d_v, spec.d_c) != (2, 3):
            raise ValueError("the structured enumerator covers the (2,3) ensemble only")
        cap = min(W, 3 * N)
        io = component_io_spectrum(t, N, cap, exact=False, pattern=pattern)
        return bcc_total_weight(ensemble_avg_bcc(io, io, N), N)
    sections = (spec.d_c - 1) * N + t.memory
    pat = pattern or PuncturePattern(spec.d_c - 1)
    n = sum(1 + pat.keeps(j) for j in range(sections))
    A = component_spectrum_conv(t, N, spec.d_c, min(W, n), pat, exact)
    return ensemble_avg_single_edge(A, spec.d_v)


def dmin_at(spec: EnsembleSpec, N: int, alpha: float = 0.5, W: int | None = None,
            pattern: PuncturePattern | None = None, structured: bool = False,
            auto: bool = True) -> DminPoint:
    """d_hat at lifting N; doubles the cap while the bound is truncated."""
    W = W or 32
    while True:
        Abar = average_spectrum(spec, N, W, pattern=pattern, structured=structured)
        d, trunc = dmin_bound(Abar, alpha)
        if not trunc or not auto or Abar.W >= Abar.n:
            return DminPoint(N, spec.d_c * N, d, trunc, Abar.W)
        W *= 2


def dmin_curve(spec: EnsembleSpec, alpha: float, N_values, W: int | None = None,
               pattern: PuncturePattern | None = None,
               structured: bool = False) -> list[DminPoint]:
    pts = [dmin_at(spec, N, alpha, W, pattern, structured) for N in N_values]
    return sorted(pts, key=lambda p: p.n)
