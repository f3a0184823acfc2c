"""Vectorized numpy counterparts of the numba kernels (same signatures)."""
import math

import numpy as np
from scipy.special import gammaln

NEG_INF = -np.inf
_SIGN = np.array([1.0, -1.0, -1.0, 1.0])
_CHUNK = 1 << 20


def xlog2x(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = x[pos] * np.log2(x[pos])
    return out


def h2(x):
    x = np.asarray(x, dtype=float)
    return -xlog2x(x) - xlog2x(1.0 - x)


def mi_bmc(p0, a, b):
    p0, a, b = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (p0, a, b)))
    p1 = 1.0 - p0
    q0 = p0 * a + p1 * (1.0 - b)
    return np.maximum(h2(q0) - p0 * h2(a) - p1 * h2(b), 0.0)


def capacity_cells(a, b, iters):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    lo = np.zeros_like(a)
    hi = np.ones_like(a)
    for _ in range(iters):
        third = (hi - lo) / 3.0
        m1 = lo + third
        m2 = hi - third
        up = mi_bmc(m1, a, b) < mi_bmc(m2, a, b)
        lo = np.where(up, m1, lo)
        hi = np.where(up, hi, m2)
    p0 = 0.5 * (lo + hi)
    cap = mi_bmc(p0, a, b)
    noise = a + b == 1.0
    cap[noise] = 0.0
    p0[noise] = 0.5
    return cap, p0


def ratio_min(p_values, a, b, cap):
    best = np.empty(len(p_values))
    where = np.empty(len(p_values), dtype=np.int64)
    for i, p0 in enumerate(p_values):
        r = mi_bmc(p0, a, b) / cap
        j = int(np.argmin(r))
        best[i] = r[j]
        where[i] = j
    return best, where


def joint_cells(p0, a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    p1 = 1.0 - p0
    return np.stack([p0 * a, p0 * (1.0 - a), p1 * (1.0 - b), p1 * b], axis=-1)


def product_cells(mu):
    r0 = mu[..., 0] + mu[..., 1]
    r1 = mu[..., 2] + mu[..., 3]
    c0 = mu[..., 0] + mu[..., 2]
    c1 = mu[..., 1] + mu[..., 3]
    return np.stack([r0 * c0, r0 * c1, r1 * c0, r1 * c1], axis=-1)


def kl_cells(m, c):
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(m > 0, m * np.log2(np.where(m > 0, m, 1.0) / c), 0.0)
    out = terms.sum(axis=-1)
    bad = np.any((m > 0) & (c <= 0), axis=-1)
    out = np.where(bad, np.inf, out)
    return np.maximum(out, 0.0)


def expectation_cells(m, d):
    """E_m[d] with 0 * (-inf) = 0; ``d`` is a length-4 row."""
    with np.errstate(invalid="ignore"):
        terms = np.where(m > 0, m * d, 0.0)
    out = np.zeros(terms.shape[:-1])
    for j in range(4):
        out = out + terms[..., j]
    return out


def imis_cells(p0, a, b, d):
    mu = joint_cells(p0, a, b)
    c = product_cells(mu)
    n = mu.shape[0]
    K = d.shape[0]
    e0 = np.stack([expectation_cells(mu, d[k]) for k in range(K)])
    tau = e0.max(axis=0)
    s_c = c[:, 0] - mu[:, 0]
    s_lo = -np.minimum(mu[:, 0], mu[:, 3])
    s_hi = np.minimum(mu[:, 1], mu[:, 2])
    best = np.full(n, NEG_INF)
    best_k = np.full(n, -1, dtype=np.int64)
    for k in range(K):
        lo = s_lo.copy()
        hi = s_hi.copy()
        A = np.zeros(n)
        B = 0.0
        for j in range(4):
            if d[k, j] == NEG_INF:
                if _SIGN[j] > 0:
                    hi = np.minimum(hi, -mu[:, j])
                else:
                    lo = np.maximum(lo, mu[:, j])
            else:
                A = A + mu[:, j] * d[k, j]
                B += _SIGN[j] * d[k, j]
        g = tau - A
        feasible = np.ones(n, dtype=bool)
        if B > 0:
            lo = np.maximum(lo, g / B)
        elif B < 0:
            hi = np.minimum(hi, g / B)
        else:
            feasible &= ~(g > 0)
        feasible &= lo <= hi
        s = np.minimum(np.maximum(s_c, lo), hi)
        m = mu + s[:, None] * _SIGN
        val = np.where(s == s_c, 0.0, kl_cells(np.maximum(m, 0.0), c))
        take = feasible & ((val > best + 1e-12) | (best_k < 0))
        best = np.where(take, val, best)
        best_k = np.where(take, k, best_k)
    best = np.where(tau == NEG_INF, 0.0, best)
    best_k = np.where(tau == NEG_INF, 0, best_k)
    return best, kl_cells(mu, c), best_k


def oracle_instance(mu, c, d, npts):
    K = d.shape[0]
    tau = max(float(expectation_cells(mu, d[k])) for k in range(K))
    t_min = -min(c[0], c[3])
    t_max = min(c[1], c[2])
    step = (t_max - t_min) / (npts - 1)
    best = np.full(K, np.inf)
    for start in range(0, npts, _CHUNK):
        idx = np.arange(start, min(start + _CHUNK, npts))
        t = t_min + idx * step
        t[idx == npts - 1] = t_max
        m = np.maximum(c + t[:, None] * _SIGN, 0.0)
        dv = kl_cells(m, c)
        for k in range(K):
            ok = expectation_cells(m, d[k]) >= tau
            if ok.any():
                best[k] = min(best[k], dv[ok].min())
    return best


def oracle_batch(mu, c, d, K, npts):
    out = np.empty(mu.shape[0])
    for i in range(mu.shape[0]):
        per = oracle_instance(mu[i], c[i], d[i, : K[i]], npts)
        finite = per[np.isfinite(per)]
        out[i] = finite.max() if finite.size else NEG_INF
    return out


def _log_binom(n, k):
    return gammaln(n + 1.0) - gammaln(k + 1.0) - gammaln(n - k + 1.0)


def _binom_pmf(n, p1):
    k = np.arange(n + 1)
    if p1 <= 0.0:
        return (k == 0).astype(float)
    if p1 >= 1.0:
        return (k == n).astype(float)
    return np.exp(_log_binom(n, k) + k * math.log(p1) + (n - k) * math.log(1.0 - p1))


def type_score(n00, n01, n10, n11, d, mode):
    counts = np.stack(np.broadcast_arrays(n00, n01, n10, n11), axis=-1).astype(float)
    if mode == 1:
        n = counts.sum(axis=-1, keepdims=True)
        nx = np.stack([counts[..., 0] + counts[..., 1]] * 2 + [counts[..., 2] + counts[..., 3]] * 2, axis=-1)
        ny0 = counts[..., 0] + counts[..., 2]
        ny1 = counts[..., 1] + counts[..., 3]
        ny = np.stack([ny0, ny1, ny0, ny1], axis=-1)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(counts > 0, counts * np.log2(counts * n / (nx * ny)), 0.0)
        return terms.sum(axis=-1) / n[..., 0]
    best = np.full(counts.shape[:-1], NEG_INF)
    for k in range(d.shape[0]):
        with np.errstate(invalid="ignore"):
            terms = np.where(counts > 0, counts * d[k], 0.0)
        s = terms[..., 0] + terms[..., 1] + terms[..., 2] + terms[..., 3]
        best = np.maximum(best, s)
    return best


def p_correct_from_tails(q_gt, q_eq, M):
    if q_gt >= 1.0:
        return 0.0
    log_a = M * math.log1p(-q_gt)
    if q_eq <= 0.0:
        return math.exp(log_a)
    r = M * math.log1p(-min(q_eq / (1.0 - q_gt), 1.0))
    return math.exp(log_a) * (-math.expm1(r)) / (M * q_eq)


def ensemble_pcorrect(n0s, k0s, k1s, n, p1, weight, d, mode, M, rtol):
    out = np.empty(len(n0s))
    for t in range(len(n0s)):
        n0 = int(n0s[t])
        n1 = n - n0
        k0t, k1t = int(k0s[t]), int(k1s[t])
        s_true = float(type_score(n0 - k0t, n1 - k1t, k0t, k1t, d, mode))
        if weight < 0:
            k0 = np.arange(n0 + 1)[:, None]
            k1 = np.arange(n1 + 1)[None, :]
            w = _binom_pmf(n0, p1)[:, None] * _binom_pmf(n1, p1)[None, :]
        else:
            k0 = np.arange(max(0, weight - n1), min(n0, weight) + 1)
            k1 = weight - k0
            w = np.exp(_log_binom(n0, k0) + _log_binom(n1, k1) - _log_binom(n, weight))
        s = type_score(n0 - k0, n1 - k1, k0, k1, d, mode)
        if s_true == NEG_INF:
            q_gt = w[s > NEG_INF].sum()
            q_eq = w[s == NEG_INF].sum()
        else:
            eps = rtol * (1.0 + abs(s_true))
            q_gt = w[s > s_true + eps].sum()
            q_eq = w[(s >= s_true - eps) & (s <= s_true + eps)].sum()
        out[t] = p_correct_from_tails(min(q_gt, 1.0), q_eq, M)
    return out


def _loglik(counts, lw):
    with np.errstate(invalid="ignore"):
        terms = np.where(counts > 0, counts * lw, 0.0)
    return terms[..., 0] + terms[..., 1] + terms[..., 2] + terms[..., 3]


def order_violation(words, n, lw1, lw2, y_chunk=64):
    words = np.asarray(words, dtype=np.int64)
    nx1 = words.sum(axis=1)
    shifts = np.arange(n - 1, -1, -1)
    for y0 in range(0, 1 << n, y_chunk):
        ys = np.arange(y0, min(y0 + y_chunk, 1 << n))
        ybits = (ys[:, None] >> shifts) & 1
        n11 = ybits @ words.T  # (Y, m)
        n10 = nx1[None, :] - n11
        n01 = ybits.sum(axis=1)[:, None] - n11
        n00 = n - n11 - n10 - n01
        counts = np.stack([n00, n01, n10, n11], axis=-1).astype(float)
        l1 = _loglik(counts, lw1)
        l2 = _loglik(counts, lw2)
        gt1 = l1[:, :, None] > l1[:, None, :]
        eq1 = l1[:, :, None] == l1[:, None, :]
        bad = (gt1 & ~(l2[:, :, None] > l2[:, None, :])) | (eq1 & ~(l2[:, :, None] == l2[:, None, :]))
        if bad.any():
            flat = int(np.argmax(bad.reshape(-1)))
            yi, i, j = np.unravel_index(flat, bad.shape)
            return int(ys[yi]), int(i), int(j)
    return -1, -1, -1
