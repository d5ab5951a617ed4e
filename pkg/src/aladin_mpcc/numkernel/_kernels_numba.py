"""Numba-jitted kernel lane: explicit loops, nopython, on-disk cache."""

import numpy as np
from numba import njit

PIVOT_RTOL = 1e-14


@njit(cache=True)
def lu_factor_inplace(a, piv):
    n = a.shape[0]
    scale = 0.0
    for i in range(n):
        for j in range(n):
            v = abs(a[i, j])
            if v > scale:
                scale = v
    tol = PIVOT_RTOL * scale
    for k in range(n):
        jmax = k
        vmax = abs(a[k, k])
        for i in range(k + 1, n):
            v = abs(a[i, k])
            if v > vmax:
                vmax = v
                jmax = i
        if vmax <= tol:
            return k
        piv[k] = jmax
        if jmax != k:
            for j in range(n):
                t = a[k, j]
                a[k, j] = a[jmax, j]
                a[jmax, j] = t
        akk = a[k, k]
        for i in range(k + 1, n):
            a[i, k] /= akk
        for i in range(k + 1, n):
            lik = a[i, k]
            if lik != 0.0:
                for j in range(k + 1, n):
                    a[i, j] -= lik * a[k, j]
    return -1


@njit(cache=True)
def lu_apply(lu, piv, b):
    n = lu.shape[0]
    x = b.copy()
    for k in range(n):
        j = piv[k]
        if j != k:
            t = x[k]
            x[k] = x[j]
            x[j] = t
    for i in range(1, n):
        acc = 0.0
        for j in range(i):
            acc += lu[i, j] * x[j]
        x[i] -= acc
    for i in range(n - 1, -1, -1):
        acc = 0.0
        for j in range(i + 1, n):
            acc += lu[i, j] * x[j]
        x[i] = (x[i] - acc) / lu[i, i]
    return x


@njit(cache=True)
def householder_tridiag(a):
    n = a.shape[0]
    d = np.empty(n)
    e = np.empty(n - 1) if n > 1 else np.empty(0)
    v = np.empty(n)
    p = np.empty(n)
    for k in range(n - 2):
        m = n - k - 1
        nx2 = 0.0
        for i in range(m):
            t = a[k + 1 + i, k]
            nx2 += t * t
        nx = np.sqrt(nx2)
        if nx == 0.0:
            continue
        for i in range(m):
            v[i] = a[k + 1 + i, k]
        s = 1.0 if v[0] >= 0.0 else -1.0
        v[0] += s * nx
        vn2 = 0.0
        for i in range(m):
            vn2 += v[i] * v[i]
        vn = np.sqrt(vn2)
        if vn == 0.0:
            continue
        for i in range(m):
            v[i] /= vn
        kcoef = 0.0
        for i in range(m):
            acc = 0.0
            for j in range(m):
                acc += a[k + 1 + i, k + 1 + j] * v[j]
            p[i] = acc
            kcoef += v[i] * acc
        for i in range(m):
            p[i] -= kcoef * v[i]
        for i in range(m):
            vi = v[i]
            qi = p[i]
            for j in range(m):
                a[k + 1 + i, k + 1 + j] -= 2.0 * (vi * p[j] + qi * v[j])
        beta = -s * nx
        a[k + 1, k] = beta
        a[k, k + 1] = beta
        for i in range(k + 2, n):
            a[i, k] = 0.0
            a[k, i] = 0.0
    for i in range(n):
        d[i] = a[i, i]
    for i in range(n - 1):
        e[i] = a[i + 1, i]
    return d, e


@njit(cache=True)
def sturm_count(d, e2, x):
    n = d.shape[0]
    count = 0
    q = d[0] - x
    if q < 0.0:
        count += 1
    for i in range(1, n):
        denom = q
        if abs(denom) < 1e-300:
            denom = -1e-300 if denom < 0.0 else 1e-300
        q = d[i] - x - e2[i - 1] / denom
        if q < 0.0:
            count += 1
    return count


@njit(cache=True)
def min_eig_bisect(d, e, tol):
    n = d.shape[0]
    if n == 1:
        return d[0]
    e2 = e * e
    lo = d[0] - abs(e[0])
    for i in range(n):
        radius = 0.0
        if i > 0:
            radius += abs(e[i - 1])
        if i < n - 1:
            radius += abs(e[i])
        low_i = d[i] - radius
        if low_i < lo:
            lo = low_i
    hi = d[0]
    for i in range(1, n):
        if d[i] < hi:
            hi = d[i]
    scale = max(1.0, abs(lo), abs(hi))
    hi = hi + 1e-12 * scale
    for _ in range(200):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        if sturm_count(d, e2, mid) == 0:
            lo = mid
        else:
            hi = mid
    return lo


@njit(cache=True)
def barrier_min_scalar(c, sigma, s0, mu, r, tau):
    if tau == 0.0 or mu == 0.0:
        s = s0 - c / sigma
        if tau != 0.0 and r + tau * s <= 0.0:
            return s, 1
        return s, 0
    b = tau * (c - sigma * s0) - sigma * r
    sq = np.sqrt(b * b + 4.0 * sigma * mu)
    if b <= 0.0:
        u = (-b + sq) / (2.0 * sigma)
    else:
        u = 2.0 * mu / (b + sq)
    for _ in range(2):
        hp = c + sigma * (tau * (u - r) - s0) - mu * tau / u
        hpp = sigma + mu / (u * u)
        u_try = u - tau * hp / hpp
        if u_try <= 0.0:
            break
        hp_try = c + sigma * (tau * (u_try - r) - s0) - mu * tau / u_try
        if abs(hp_try) < abs(hp):
            u = u_try
        else:
            break
    return tau * (u - r), 0


@njit(cache=True)
def barrier_min_batch(c, sigma, s0, mu, r, tau):
    n = c.shape[0]
    out = np.empty(n)
    fail = -1
    for i in range(n):
        s, status = barrier_min_scalar(c[i], sigma, s0[i], mu, r, tau[i])
        out[i] = s
        if status != 0 and fail < 0:
            fail = i
    return out, fail
