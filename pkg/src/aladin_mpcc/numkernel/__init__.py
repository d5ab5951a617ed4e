"""Dense linear-algebra and scalar-barrier kernels behind the solver.

Two interchangeable lanes back this module: numba-jitted loops (default)
and a pure numpy fallback.  Set ALADIN_MPCC_DISABLE_NUMBA=1 to force the
numpy lane; the numpy lane is also selected automatically when numba is
not importable.  Both lanes expose identical functions, so tests and the
kernel benchmark import them directly as well.
"""

import os
from dataclasses import dataclass

import numpy as np

from aladin_mpcc.errors import BarrierDomainError, LinearSolverSingular

_FLAG = os.environ.get("ALADIN_MPCC_DISABLE_NUMBA", "").strip().lower()
if _FLAG in {"1", "true", "yes", "on"}:
    from aladin_mpcc.numkernel import _kernels_numpy as _impl

    BACKEND = "numpy"
else:
    try:
        from aladin_mpcc.numkernel import _kernels_numba as _impl

        BACKEND = "numba"
    except ImportError:
        from aladin_mpcc.numkernel import _kernels_numpy as _impl

        BACKEND = "numpy"

__all__ = [
    "BACKEND",
    "RegConfig",
    "lu_factor",
    "solve_factored",
    "lu_solve",
    "kkt_solve",
    "min_eigenvalue_estimate",
    "barrier_minimize",
    "barrier_minimize_batch",
]


@dataclass(frozen=True)
class RegConfig:
    """Regularization policy for factorizations and Hessian shifts."""

    delta0: float = 1e-8
    eps_pd: float = 1e-8
    max_shifts: int = 8

    def __post_init__(self):
        if not (self.delta0 > 0.0 and self.eps_pd > 0.0):
            raise ValueError("delta0 and eps_pd must be positive")
        if self.max_shifts < 1:
            raise ValueError("max_shifts must be at least 1")


def _as_square(a):
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise ValueError("matrix has non-finite entries")
    return a


def lu_factor(a):
    """Factor a square matrix with partial pivoting.

    Returns (lu, piv) for solve_factored.  Raises LinearSolverSingular,
    carrying the failing column, when a pivot falls below the relative
    threshold 1e-14 * max|A|.
    """
    lu = _as_square(a).copy()
    piv = np.zeros(lu.shape[0], dtype=np.int64)
    fail = _impl.lu_factor_inplace(lu, piv)
    if fail >= 0:
        raise LinearSolverSingular(
            f"LU pivot below threshold at column {fail}", pivot_index=int(fail)
        )
    return lu, piv


def solve_factored(lu, piv, b):
    b = np.ascontiguousarray(b, dtype=np.float64)
    return _impl.lu_apply(lu, piv, b)


def lu_solve(a, b):
    """Solve A x = b via LU, with one refinement pass when it helps."""
    a = _as_square(a)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if b.shape != (a.shape[0],):
        raise ValueError(f"rhs shape {b.shape} does not match matrix {a.shape}")
    lu, piv = lu_factor(a)
    x = _impl.lu_apply(lu, piv, b)
    resid = b - a @ x
    bound = 1e-13 * (1.0 + float(np.abs(b).max(initial=0.0)))
    if float(np.abs(resid).max(initial=0.0)) > bound:
        x = x + _impl.lu_apply(lu, piv, resid)
    return x


def kkt_solve(h, jac, g_rhs, c_rhs, reg):
    """Solve the saddle system [[H, J^T], [J, 0]] [d, nu] = [-g, c].

    The assembled matrix is symmetrically equilibrated before factoring:
    barrier curvatures can reach 1e40 while coupling rows stay O(1), and
    without scaling the relative pivot test rejects rows that are fine.
    Retries with diagonal shifts delta0, 10*delta0, ... on the H block if
    the factorization reports a zero pivot; raises LinearSolverSingular
    once the shift budget is exhausted.
    """
    h = _as_square(h)
    jac = np.ascontiguousarray(jac, dtype=np.float64)
    n = h.shape[0]
    m = jac.shape[0]
    if jac.ndim != 2 or jac.shape[1] != n:
        raise ValueError(f"Jacobian shape {jac.shape} does not match H ({n})")
    g_rhs = np.ascontiguousarray(g_rhs, dtype=np.float64)
    c_rhs = np.ascontiguousarray(c_rhs, dtype=np.float64)
    if g_rhs.shape != (n,) or c_rhs.shape != (m,):
        raise ValueError("rhs blocks do not match system dimensions")
    kmat = np.zeros((n + m, n + m))
    kmat[:n, :n] = h
    kmat[:n, n:] = jac.T
    kmat[n:, :n] = jac
    rhs = np.concatenate([-g_rhs, c_rhs])
    delta = 0.0
    for _ in range(reg.max_shifts + 1):
        ktry = kmat
        if delta > 0.0:
            ktry = kmat.copy()
            ktry[:n, :n] += delta * np.eye(n)
        # d_i = 1/sqrt(max_j |K_ij|) keeps every scaled entry in [-1, 1]
        rowmax = np.abs(ktry).max(axis=1)
        d = np.where(rowmax > 0.0, 1.0 / np.sqrt(rowmax), 1.0)
        kscaled = np.ascontiguousarray(d[:, None] * ktry * d[None, :])
        try:
            lu, piv = lu_factor(kscaled)
        except LinearSolverSingular:
            delta = reg.delta0 if delta == 0.0 else delta * 10.0
            continue
        x = d * _impl.lu_apply(lu, piv, d * rhs)
        # refinement against the factored system
        bound = 1e-13 * (1.0 + float(np.abs(rhs).max(initial=0.0)))
        for _ in range(2):
            resid = rhs - ktry @ x
            if float(np.abs(resid).max(initial=0.0)) <= bound:
                break
            x = x + d * _impl.lu_apply(lu, piv, d * resid)
        return x[:n], x[n:]
    raise LinearSolverSingular(
        f"KKT factorization failed after {reg.max_shifts} diagonal shifts"
    )


def min_eigenvalue_estimate(s, tol=1e-8):
    """Lower estimate of the smallest eigenvalue of a symmetric matrix.

    Householder tridiagonalization plus Sturm-sequence bisection; the
    returned value is the lower end of the final bracket, within tol of
    the true minimum eigenvalue.
    """
    s = _as_square(s)
    if s.shape[0] == 0:
        raise ValueError("empty matrix")
    work = np.ascontiguousarray(0.5 * (s + s.T))
    if work.shape[0] == 1:
        return float(work[0, 0])
    d, e = _impl.householder_tridiag(work)
    return float(_impl.min_eig_bisect(d, e, tol))


def barrier_minimize(c_lin, sigma, s_prev, mu, r, tau):
    """Minimize c*s + sigma/2 (s - s_prev)^2 - mu ln(r + tau*s) over s.

    tau = +1 or -1 orients the barrier; tau = 0 drops it (pure
    quadratic).  mu = 0 is the exact-quadratic limit and raises
    BarrierDomainError if its minimizer leaves the barrier domain.
    """
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    if r <= 0.0:
        raise ValueError("r must be positive")
    if mu < 0.0:
        raise ValueError("mu must be nonnegative")
    if tau not in (-1, 0, 1):
        raise ValueError("tau must be -1, 0, or +1")
    s, status = _impl.barrier_min_scalar(
        float(c_lin), float(sigma), float(s_prev), float(mu), float(r), float(tau)
    )
    if status != 0:
        raise BarrierDomainError(
            f"mu = 0 minimizer {s} leaves the barrier domain (r = {r}, tau = {tau})"
        )
    return float(s)


def barrier_minimize_batch(c_lin, sigma, s_prev, mu, r, tau):
    """Vectorized barrier_minimize over coordinates; tau is a sign array."""
    c_lin = np.ascontiguousarray(c_lin, dtype=np.float64)
    s_prev = np.ascontiguousarray(s_prev, dtype=np.float64)
    tau_f = np.ascontiguousarray(tau, dtype=np.float64)
    if not (c_lin.shape == s_prev.shape == tau_f.shape):
        raise ValueError("c_lin, s_prev, and tau must share a shape")
    if sigma <= 0.0 or r <= 0.0 or mu < 0.0:
        raise ValueError("need sigma > 0, r > 0, mu >= 0")
    out, fail = _impl.barrier_min_batch(
        c_lin, float(sigma), s_prev, float(mu), float(r), tau_f
    )
    if fail >= 0:
        raise BarrierDomainError(
            f"mu = 0 minimizer leaves the barrier domain at coordinate {fail}",
            coordinate=int(fail),
        )
    return out
