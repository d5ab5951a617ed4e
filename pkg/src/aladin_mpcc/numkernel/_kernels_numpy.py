"""Pure numpy kernel lane.

Mirrors the numba lane function-for-function so either can back the
public wrappers in ``aladin_mpcc.numkernel``.
"""

import numpy as np

PIVOT_RTOL = 1e-14


def lu_factor_inplace(a, piv):
    """LU with partial pivoting, in place. Returns failing column or -1."""
    n = a.shape[0]
    scale = np.abs(a).max() if n else 0.0
    tol = PIVOT_RTOL * scale
    for k in range(n):
        j = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[j, k]) <= tol:
            return k
        piv[k] = j
        if j != k:
            a[[k, j]] = a[[j, k]]
        a[k + 1:, k] /= a[k, k]
        if k + 1 < n:
            a[k + 1:, k + 1:] -= np.outer(a[k + 1:, k], a[k, k + 1:])
    return -1


def lu_apply(lu, piv, b):
    """Solve with an lu_factor_inplace factorization; b is not modified."""
    n = lu.shape[0]
    x = b.copy()
    for k in range(n):
        j = piv[k]
        if j != k:
            t = x[k]
            x[k] = x[j]
            x[j] = t
    for i in range(1, n):
        x[i] -= lu[i, :i] @ x[:i]
    for i in range(n - 1, -1, -1):
        if i + 1 < n:
            x[i] -= lu[i, i + 1:] @ x[i + 1:]
        x[i] /= lu[i, i]
    return x


def householder_tridiag(a):
    """Reduce symmetric a (destroyed) to tridiagonal; returns (diag, subdiag)."""
    n = a.shape[0]
    for k in range(n - 2):
        x = a[k + 1:, k].copy()
        nx = np.sqrt(x @ x)
        if nx == 0.0:
            continue
        s = 1.0 if x[0] >= 0.0 else -1.0
        v = x
        v[0] += s * nx
        vn = np.sqrt(v @ v)
        if vn == 0.0:
            continue
        v /= vn
        sub = a[k + 1:, k + 1:]
        p = sub @ v
        q = p - (v @ p) * v
        sub -= 2.0 * np.outer(v, q)
        sub -= 2.0 * np.outer(q, v)
        beta = -s * nx
        a[k + 1, k] = beta
        a[k, k + 1] = beta
        a[k + 2:, k] = 0.0
        a[k, k + 2:] = 0.0
    d = np.diag(a).copy()
    e = np.diag(a, -1).copy()
    return d, e


def sturm_count(d, e2, x):
    """Number of eigenvalues of the tridiagonal matrix strictly below x."""
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


def min_eig_bisect(d, e, tol):
    """Certified lower bound on the smallest eigenvalue, within tol."""
    n = d.shape[0]
    if n == 1:
        return d[0]
    e2 = e * e
    radius = np.zeros(n)
    radius[:-1] += np.abs(e)
    radius[1:] += np.abs(e)
    lo = float(np.min(d - radius))
    hi = float(np.min(d))
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


def barrier_min_scalar(c, sigma, s0, mu, r, tau):
    """Minimize c*s + sigma/2*(s-s0)^2 - mu*ln(r + tau*s); returns (s, status).

    tau = 0 means no barrier (pure quadratic); status 1 flags a mu = 0
    minimizer outside the barrier domain.
    """
    if tau == 0.0 or mu == 0.0:
        s = s0 - c / sigma
        if tau != 0.0 and r + tau * s <= 0.0:
            return s, 1
        return s, 0
    # stationarity in u = r + tau*s: sigma*u^2 + b*u - mu = 0, take u > 0
    b = tau * (c - sigma * s0) - sigma * r
    sq = np.sqrt(b * b + 4.0 * sigma * mu)
    if b <= 0.0:
        u = (-b + sq) / (2.0 * sigma)
    else:
        u = 2.0 * mu / (b + sq)
    # polish: Newton on h' in the wall offset u, which stays strictly
    # positive even when s itself rounds onto the wall; keep only
    # improving steps
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


def barrier_min_batch(c, sigma, s0, mu, r, tau):
    """Vectorized barrier_min_scalar over coordinates; returns (s, fail_idx)."""
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        s_quad = s0 - c / sigma
        active = (tau != 0.0) & (mu > 0.0)
        b = tau * (c - sigma * s0) - sigma * r
        sq = np.sqrt(b * b + 4.0 * sigma * mu)
        u = np.where(b <= 0.0, (-b + sq) / (2.0 * sigma),
                     2.0 * mu / np.where(b > 0.0, b + sq, 1.0))
        for _ in range(2):
            hp = c + sigma * (tau * (u - r) - s0) - mu * tau / u
            hpp = sigma + mu / (u * u)
            u_try = u - tau * hp / hpp
            ok = u_try > 0.0
            hp_try = np.where(ok, c + sigma * (tau * (u_try - r) - s0)
                              - mu * tau / np.where(ok, u_try, 1.0), np.inf)
            u = np.where(ok & (np.abs(hp_try) < np.abs(hp)), u_try, u)
        out = np.where(active, tau * (u - r), s_quad)
    bad = (tau != 0.0) & (mu == 0.0) & (r + tau * s_quad <= 0.0)
    fail = int(np.argmax(bad)) if bad.any() else -1
    return out, fail
