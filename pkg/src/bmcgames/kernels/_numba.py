"""Loop kernels compiled with numba.

Joint tables are flat float64 vectors ordered (00, 01, 10, 11); metric banks
are (K, 4) arrays that may hold -inf. All logarithms are base 2.
"""
import math

import numpy as np
from numba import njit

_OPTS = dict(cache=True, nogil=True)
_INV_LN2 = 1.0 / math.log(2.0)
NEG_INF = -np.inf
POS_INF = np.inf


@njit(**_OPTS)
def xlog2x(x):
    if x <= 0.0:
        return 0.0
    return x * math.log(x) * _INV_LN2


@njit(**_OPTS)
def h2(x):
    return -xlog2x(x) - xlog2x(1.0 - x)


@njit(**_OPTS)
def mi_bmc(p0, a, b):
    p1 = 1.0 - p0
    q0 = p0 * a + p1 * (1.0 - b)
    val = h2(q0) - p0 * h2(a) - p1 * h2(b)
    return val if val > 0.0 else 0.0


@njit(**_OPTS)
def capacity_bmc(a, b, iters):
    if a + b == 1.0:
        return 0.0, 0.5
    lo = 0.0
    hi = 1.0
    for _ in range(iters):
        third = (hi - lo) / 3.0
        m1 = lo + third
        m2 = hi - third
        if mi_bmc(m1, a, b) < mi_bmc(m2, a, b):
            lo = m1
        else:
            hi = m2
    p = 0.5 * (lo + hi)
    return mi_bmc(p, a, b), p


@njit(**_OPTS)
def capacity_cells(a, b, iters):
    n = a.shape[0]
    cap = np.empty(n)
    p0 = np.empty(n)
    for i in range(n):
        cap[i], p0[i] = capacity_bmc(a[i], b[i], iters)
    return cap, p0


@njit(**_OPTS)
def ratio_min(p_values, a, b, cap):
    """For each p0, the smallest I(p0, W)/C(W) over cells and its first index."""
    n_p = p_values.shape[0]
    n = a.shape[0]
    best = np.full(n_p, POS_INF)
    where = np.full(n_p, -1, dtype=np.int64)
    for i in range(n_p):
        p0 = p_values[i]
        for j in range(n):
            r = mi_bmc(p0, a[j], b[j]) / cap[j]
            if r < best[i]:
                best[i] = r
                where[i] = j
    return best, where


@njit(**_OPTS)
def joint_flat(p0, a, b):
    p1 = 1.0 - p0
    mu = np.empty(4)
    mu[0] = p0 * a
    mu[1] = p0 * (1.0 - a)
    mu[2] = p1 * (1.0 - b)
    mu[3] = p1 * b
    return mu


@njit(**_OPTS)
def product_flat(mu):
    r0 = mu[0] + mu[1]
    r1 = mu[2] + mu[3]
    c0 = mu[0] + mu[2]
    c1 = mu[1] + mu[3]
    c = np.empty(4)
    c[0] = r0 * c0
    c[1] = r0 * c1
    c[2] = r1 * c0
    c[3] = r1 * c1
    return c


@njit(**_OPTS)
def kl_flat(m, c):
    total = 0.0
    for j in range(4):
        if m[j] > 0.0:
            if c[j] <= 0.0:
                return POS_INF
            total += m[j] * math.log(m[j] / c[j])
    total *= _INV_LN2
    return total if total > 0.0 else 0.0


@njit(**_OPTS)
def expectation(m, d):
    # 0 * (-inf) contributes nothing
    e = 0.0
    for j in range(4):
        if m[j] > 0.0:
            e += m[j] * d[j]
    return e


@njit(**_OPTS)
def imis_core(mu, c, d):
    """Maximum over metrics of the smallest divergence on the feasible part of
    the marginal-preserving segment through ``mu``.

    Works in displacement coordinates ``s`` measured from ``mu`` so that zero
    entries of ``mu`` stay exact. Returns (value, best index, best s); value
    is -inf only if every metric is infeasible.
    """
    K = d.shape[0]
    tau = NEG_INF
    for k in range(K):
        e = expectation(mu, d[k])
        if e > tau:
            tau = e
    s_c = c[0] - mu[0]
    if tau == NEG_INF:
        return 0.0, 0, s_c
    s_lo = -min(mu[0], mu[3])
    s_hi = min(mu[1], mu[2])
    best = NEG_INF
    best_k = -1
    best_s = 0.0
    m = np.empty(4)
    for k in range(K):
        lo = s_lo
        hi = s_hi
        A = 0.0
        B = 0.0
        for j in range(4):
            sign = 1.0 if (j == 0 or j == 3) else -1.0
            if d[k, j] == NEG_INF:
                # entry must carry no mass
                if sign > 0.0:
                    hi = min(hi, -mu[j])
                else:
                    lo = max(lo, mu[j])
            else:
                A += mu[j] * d[k, j]
                B += sign * d[k, j]
        g = tau - A
        if B > 0.0:
            lo = max(lo, g / B)
        elif B < 0.0:
            hi = min(hi, g / B)
        elif g > 0.0:
            continue
        if lo > hi:
            continue
        s = min(max(s_c, lo), hi)
        if s == s_c:
            val = 0.0
        else:
            m[0] = max(mu[0] + s, 0.0)
            m[1] = max(mu[1] - s, 0.0)
            m[2] = max(mu[2] - s, 0.0)
            m[3] = max(mu[3] + s, 0.0)
            val = kl_flat(m, c)
        if val > best + 1e-12 or best_k < 0:
            best = val
            best_k = k
            best_s = s
    return best, best_k, best_s


@njit(**_OPTS)
def imis_cells(p0, a, b, d):
    """I_MIS and I for every channel cell under one input law and bank."""
    n = a.shape[0]
    val = np.empty(n)
    mi = np.empty(n)
    kk = np.empty(n, dtype=np.int64)
    for i in range(n):
        mu = joint_flat(p0, a[i], b[i])
        c = product_flat(mu)
        v, k, _ = imis_core(mu, c, d)
        val[i] = v
        kk[i] = k
        mi[i] = kl_flat(mu, c)
    return val, mi, kk


@njit(**_OPTS)
def oracle_instance(mu, c, d, npts):
    """Brute-force sweep of the segment; per-metric minimum divergence."""
    K = d.shape[0]
    best = np.full(K, POS_INF)
    tau = NEG_INF
    for k in range(K):
        e = expectation(mu, d[k])
        if e > tau:
            tau = e
    t_min = -min(c[0], c[3])
    t_max = min(c[1], c[2])
    step = (t_max - t_min) / (npts - 1)
    m = np.empty(4)
    for i in range(npts):
        t = t_min + i * step if i < npts - 1 else t_max
        m[0] = max(c[0] + t, 0.0)
        m[1] = max(c[1] - t, 0.0)
        m[2] = max(c[2] - t, 0.0)
        m[3] = max(c[3] + t, 0.0)
        dv = -1.0
        for k in range(K):
            if expectation(m, d[k]) >= tau:
                if dv < 0.0:
                    dv = kl_flat(m, c)
                if dv < best[k]:
                    best[k] = dv
    return best


@njit(**_OPTS)
def oracle_batch(mu, c, d, K, npts):
    n = mu.shape[0]
    out = np.empty(n)
    for i in range(n):
        per = oracle_instance(mu[i], c[i], d[i, : K[i]], npts)
        v = NEG_INF
        for k in range(K[i]):
            if per[k] < POS_INF and per[k] > v:
                v = per[k]
        out[i] = v
    return out


@njit(**_OPTS)
def _log_binom(n, k):
    return math.lgamma(n + 1.0) - math.lgamma(k + 1.0) - math.lgamma(n - k + 1.0)


@njit(**_OPTS)
def _binom_pmf(n, p1):
    out = np.zeros(n + 1)
    if p1 <= 0.0:
        out[0] = 1.0
        return out
    if p1 >= 1.0:
        out[n] = 1.0
        return out
    lp1 = math.log(p1)
    lp0 = math.log(1.0 - p1)
    for k in range(n + 1):
        out[k] = math.exp(_log_binom(n, k) + k * lp1 + (n - k) * lp0)
    return out


@njit(**_OPTS)
def type_score(n00, n01, n10, n11, d, mode):
    """Decoder score of a joint type; mode 0 = max of linear metrics, 1 = EMI."""
    if mode == 1:
        n = n00 + n01 + n10 + n11
        nx0 = n00 + n01
        nx1 = n10 + n11
        ny0 = n00 + n10
        ny1 = n01 + n11
        s = 0.0
        if n00 > 0:
            s += n00 * math.log(n00 * n / (nx0 * ny0))
        if n01 > 0:
            s += n01 * math.log(n01 * n / (nx0 * ny1))
        if n10 > 0:
            s += n10 * math.log(n10 * n / (nx1 * ny0))
        if n11 > 0:
            s += n11 * math.log(n11 * n / (nx1 * ny1))
        return s * _INV_LN2 / n
    best = NEG_INF
    for k in range(d.shape[0]):
        s = 0.0
        if n00 > 0:
            s += n00 * d[k, 0]
        if n01 > 0:
            s += n01 * d[k, 1]
        if n10 > 0:
            s += n10 * d[k, 2]
        if n11 > 0:
            s += n11 * d[k, 3]
        if s > best:
            best = s
    return best


@njit(**_OPTS)
def p_correct_from_tails(q_gt, q_eq, M):
    """P(sent word wins) against M-1 i.i.d. rivals, ties to a uniform position."""
    if q_gt >= 1.0:
        return 0.0
    log_a = M * math.log1p(-q_gt)
    if q_eq <= 0.0:
        return math.exp(log_a)
    r = M * math.log1p(-min(q_eq / (1.0 - q_gt), 1.0))
    return math.exp(log_a) * (-math.expm1(r)) / (M * q_eq)


@njit(**_OPTS)
def ensemble_pcorrect(n0s, k0s, k1s, n, p1, weight, d, mode, M, rtol):
    """Exact probability of correct decoding for each (sent word, output) pair
    averaged over the other codewords of a random codebook.

    Codeword statistics relative to y: k0 = ones where y = 0, k1 = ones where
    y = 1. Rivals are i.i.d. Bernoulli(p1) (weight < 0) or uniform over the
    words of the given weight.
    """
    trials = n0s.shape[0]
    out = np.empty(trials)
    for t in range(trials):
        n0 = n0s[t]
        n1 = n - n0
        s_true = type_score(n0 - k0s[t], n1 - k1s[t], k0s[t], k1s[t], d, mode)
        eps = rtol * (1.0 + abs(s_true)) if s_true > NEG_INF else 0.0
        q_gt = 0.0
        q_eq = 0.0
        if weight < 0:
            pmf0 = _binom_pmf(n0, p1)
            pmf1 = _binom_pmf(n1, p1)
            for k0 in range(n0 + 1):
                w0 = pmf0[k0]
                if w0 == 0.0:
                    continue
                for k1 in range(n1 + 1):
                    w = w0 * pmf1[k1]
                    if w == 0.0:
                        continue
                    s = type_score(n0 - k0, n1 - k1, k0, k1, d, mode)
                    if s_true == NEG_INF:
                        if s > NEG_INF:
                            q_gt += w
                        else:
                            q_eq += w
                    elif s > s_true + eps:
                        q_gt += w
                    elif s >= s_true - eps:
                        q_eq += w
        else:
            lnorm = _log_binom(n, weight)
            for k0 in range(max(0, weight - n1), min(n0, weight) + 1):
                k1 = weight - k0
                w = math.exp(_log_binom(n0, k0) + _log_binom(n1, k1) - lnorm)
                s = type_score(n0 - k0, n1 - k1, k0, k1, d, mode)
                if s_true == NEG_INF:
                    if s > NEG_INF:
                        q_gt += w
                    else:
                        q_eq += w
                elif s > s_true + eps:
                    q_gt += w
                elif s >= s_true - eps:
                    q_eq += w
        out[t] = p_correct_from_tails(min(q_gt, 1.0), q_eq, M)
    return out


@njit(**_OPTS)
def _loglik(n00, n01, n10, n11, lw):
    s = 0.0
    if n00 > 0:
        s += n00 * lw[0]
    if n01 > 0:
        s += n01 * lw[1]
    if n10 > 0:
        s += n10 * lw[2]
    if n11 > 0:
        s += n11 * lw[3]
    return s


@njit(**_OPTS)
def order_violation(words, n, lw1, lw2):
    """Search one composition class for a pair whose likelihood order under the
    first channel is not preserved under the second.

    ``words`` is an (m, n) 0/1 array. Returns (y, i, j) of the first violation
    in (y, i, j) order, or (-1, -1, -1).
    """
    m = words.shape[0]
    l1 = np.empty(m)
    l2 = np.empty(m)
    ybits = np.empty(n, dtype=np.int64)
    for y in range(1 << n):
        ny1 = 0
        for pos in range(n):
            ybits[pos] = (y >> (n - 1 - pos)) & 1
            ny1 += ybits[pos]
        for i in range(m):
            n11 = 0
            nx1 = 0
            for pos in range(n):
                if words[i, pos] == 1:
                    nx1 += 1
                    if ybits[pos] == 1:
                        n11 += 1
            n10 = nx1 - n11
            n01 = ny1 - n11
            n00 = n - n11 - n10 - n01
            l1[i] = _loglik(n00, n01, n10, n11, lw1)
            l2[i] = _loglik(n00, n01, n10, n11, lw2)
        for i in range(m):
            for j in range(m):
                if l1[i] > l1[j]:
                    if not l2[i] > l2[j]:
                        return y, i, j
                elif l1[i] == l1[j]:
                    if not l2[i] == l2[j]:
                        return y, i, j
    return -1, -1, -1
