"""Independent brute-force references used by the test suite.

Encoders here work from the generator polynomials directly and never touch
the trellis tables of the package.
"""

from __future__ import annotations

import numpy as np


def _register(f, b, inputs, tail):
    """Run the feedback register on a batch of input rows.

    inputs: (M, k) uint8.  Returns (systematic, parity, final_w) with the tail
    sections appended when ``tail``.  final_w holds the last len(b)-1 values
    of the register sequence.
    """
    nu = max(len(f), len(b)) - 1
    f = list(f) + [0] * (nu + 1 - len(f))
    b = list(b) + [0] * (nu + 1 - len(b))
    M, k = inputs.shape
    total = k + (nu if tail else 0)
    w = np.zeros((M, total + nu), dtype=np.uint8)   # w[:, nu + t] = w_t
    sys = np.zeros((M, total), dtype=np.uint8)
    par = np.zeros((M, total), dtype=np.uint8)
    for t in range(total):
        fb = np.zeros(M, dtype=np.uint8)
        for i in range(1, nu + 1):
            if b[i]:
                fb ^= w[:, nu + t - i]
        u = inputs[:, t] if t < k else fb      # tail input zeroes w_t
        w[:, nu + t] = u ^ fb
        sys[:, t] = u
        p = np.zeros(M, dtype=np.uint8)
        for i in range(nu + 1):
            if f[i]:
                p ^= w[:, nu + t - i]
        par[:, t] = p
    return sys, par, w[:, total:]


def all_words(k: int) -> np.ndarray:
    idx = np.arange(1 << k, dtype=np.int64)
    return ((idx[:, None] >> np.arange(k)) & 1).astype(np.uint8)


def brute_conv_spectrum(gen, N: int, d_c: int, kept: int = 0) -> np.ndarray:
    """Weight distribution of the punctured terminated code by exhaustive encoding."""
    k = (d_c - 1) * N
    sys, par, _ = _register(gen.feedforward_poly, gen.feedback_poly, all_words(k), tail=True)
    keep = (np.arange(sys.shape[1]) % (d_c - 1)) == kept
    wt = sys.sum(axis=1) + par[:, keep].sum(axis=1)
    n = sys.shape[1] + int(keep.sum())
    return np.bincount(wt, minlength=n + 1)


def brute_ldpc_spectrum(N: int, d_c: int) -> np.ndarray:
    words = all_words(N * d_c).reshape(-1, N, d_c)
    ok = np.all(words.sum(axis=2) % 2 == 0, axis=1)
    return np.bincount(words[ok].reshape(ok.sum(), -1).sum(axis=1), minlength=N * d_c + 1)


def bcc_component_table(gen, N: int) -> np.ndarray:
    """Boolean table T[a, b, c]: inputs a (even sections), b (odd sections),
    kept even-section parity c, path ends in state 0 without a tail."""
    nu = gen.memory
    pairs = all_words(2 * N)                       # columns: a bits then b bits
    inputs = np.empty_like(pairs)
    inputs[:, 0::2] = pairs[:, :N]
    inputs[:, 1::2] = pairs[:, N:]
    _, par, final = _register(gen.feedforward_poly, gen.feedback_poly, inputs, tail=False)
    ends_zero = final.sum(axis=1) == 0 if nu else np.ones(len(pairs), bool)
    c = par[:, 0::2]
    weights = 1 << np.arange(N)
    a_idx = pairs[:, :N] @ weights
    b_idx = pairs[:, N:] @ weights
    c_idx = c.astype(np.int64) @ weights
    T = np.zeros((1 << N, 1 << N, 1 << N), dtype=bool)
    T[a_idx[ends_zero], b_idx[ends_zero], c_idx[ends_zero]] = True
    return T


def _permute_bits(perm: np.ndarray, N: int) -> np.ndarray:
    words = all_words(N)
    out = words[:, perm]
    return out @ (1 << np.arange(N))


def bcc_permutation_average(gen, N: int, draws: int, seed: int = 0):
    """Mean and standard error of the (info weight, parity weight) counts
    over random permutation quadruples of the uncoupled braided graph."""
    T = bcc_component_table(gen, N)
    rng = np.random.default_rng(seed)
    popc = all_words(N).sum(axis=1)
    u, x, y = np.meshgrid(np.arange(1 << N), np.arange(1 << N), np.arange(1 << N), indexing="ij")
    i_w = popc[u]
    p_w = popc[x] + popc[y]
    flat = i_w * (2 * N + 1) + p_w
    acc = np.zeros(((N + 1) * (2 * N + 1), draws))
    for d in range(draws):
        pa, pb, pc, pd = (_permute_bits(rng.permutation(N), N) for _ in range(4))
        ok = T[pa[u], pb[y], x] & T[pc[u], pd[x], y]
        acc[:, d] = np.bincount(flat[ok], minlength=acc.shape[0])
    mean = acc.mean(axis=1).reshape(N + 1, 2 * N + 1)
    se = (acc.std(axis=1, ddof=1) / np.sqrt(draws)).reshape(N + 1, 2 * N + 1)
    return mean, se
