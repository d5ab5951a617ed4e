"""The three parallel local solves and their sensitivity assembly.

Block 1 is an equality-constrained proximal problem solved by damped
Newton on its KKT residual; blocks 2 and 3 decouple into scalar
barrier-plus-quadratic minimizations with a closed form.  The shared
Newton machinery (_newton_kkt_step / newton_kkt) is also what the
centralized baselines run on their enlarged variable.
"""

from dataclasses import dataclass

import numpy as np

from aladin_mpcc import numkernel
from aladin_mpcc.errors import (
    BarrierDomainError,
    InnerSolverFailure,
    LinearSolverSingular,
)


@dataclass(frozen=True)
class InnerConfig:
    """Damped-Newton settings for the equality-constrained subproblem."""

    tol: float = 1e-12
    max_iter: int = 50
    armijo_factor: float = 0.5
    armijo_slope: float = 1e-4

    def __post_init__(self):
        if not self.tol > 0.0:
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0.0 < self.armijo_factor < 1.0:
            raise ValueError("armijo_factor must lie in (0, 1)")
        if not 0.0 < self.armijo_slope < 0.5:
            raise ValueError("armijo_slope must lie in (0, 0.5)")


@dataclass(frozen=True)
class ProxWeights:
    """Proximal weights of the three local solves."""

    sigma1: float = 10.0
    sigma2: float = 10.0
    sigma3: float = 10.0

    def __post_init__(self):
        for name in ("sigma1", "sigma2", "sigma3"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")


@dataclass
class InnerStats:
    """Newton iteration count and final KKT residual of a local solve."""

    iterations: int
    residual: float


@dataclass
class SubproblemSolution:
    """Stacked output of the three parallel solves at one outer iteration."""

    alpha_hat: np.ndarray
    beta_hat: np.ndarray
    gamma_hat: np.ndarray
    kappa_hat: np.ndarray
    inner: InnerStats


@dataclass
class Sensitivities:
    """Gradients and curvature handed to the consensus QP.

    H1 is the dense block-1 Hessian shifted to minimum eigenvalue
    >= eps_pd; h2 and h3 are the strictly positive barrier-curvature
    diagonals of blocks 2 and 3.  shift records the applied H1 shift.
    """

    g1: np.ndarray
    g2: np.ndarray
    g3: np.ndarray
    H1: np.ndarray
    h2: np.ndarray
    h3: np.ndarray
    shift: float = 0.0


def _newton_kkt_step(z, kappa, residuals, blocks, inner, reg):
    """One damped Newton step on the stacked KKT residual.

    residuals(z, kappa) -> (r_st, r_fe); blocks(z, kappa) -> (H, J).
    Backtracks on the squared residual norm, rejecting trial points that
    leave a barrier domain.  Returns (z, kappa, residual_inf, merit).
    """
    r_st, r_fe = residuals(z, kappa)
    merit0 = 0.5 * (float(r_st @ r_st) + float(r_fe @ r_fe))
    h, jac = blocks(z, kappa)
    dz, dk = numkernel.kkt_solve(h, jac, r_st, -r_fe, reg)
    t = 1.0
    for _ in range(60):
        z_try = z + t * dz
        k_try = kappa + t * dk
        try:
            r_st_t, r_fe_t = residuals(z_try, k_try)
        except BarrierDomainError:
            t *= inner.armijo_factor
            continue
        merit_t = 0.5 * (float(r_st_t @ r_st_t) + float(r_fe_t @ r_fe_t))
        if np.isfinite(merit_t) and merit_t <= (1.0 - 2.0 * inner.armijo_slope * t) * merit0:
            res = max(
                float(np.abs(r_st_t).max(initial=0.0)),
                float(np.abs(r_fe_t).max(initial=0.0)),
            )
            return z_try, k_try, res, merit_t
        t *= inner.armijo_factor
    raise InnerSolverFailure(
        f"line search stalled with merit {merit0:.3e}"
    )


def newton_kkt(z0, kappa0, residuals, blocks, inner, reg):
    """Damped Newton to inner.tol on the KKT residual; returns
    (z, kappa, InnerStats).  Raises InnerSolverFailure past max_iter."""
    z = np.ascontiguousarray(z0, dtype=np.float64).copy()
    kappa = np.ascontiguousarray(kappa0, dtype=np.float64).copy()
    r_st, r_fe = residuals(z, kappa)
    res = max(
        float(np.abs(r_st).max(initial=0.0)),
        float(np.abs(r_fe).max(initial=0.0)),
    )
    iters = 0
    while res > inner.tol:
        if iters >= inner.max_iter:
            raise InnerSolverFailure(
                f"no convergence in {inner.max_iter} Newton iterations "
                f"(residual {res:.3e})"
            )
        z, kappa, res, _ = _newton_kkt_step(z, kappa, residuals, blocks, inner, reg)
        iters += 1
    return z, kappa, InnerStats(iterations=iters, residual=res)


def solve_sub1(state, oracle, w, prox, inner, reg):
    """Block-1 solve: equality-constrained proximal Newton.

    Minimizes phi(alpha, gamma^-) + lam^T alpha + sigma1/2 ||alpha -
    alpha^-||^2 subject to g(x) - q + m = 0, warm-started at the current
    (alpha, kappa).  Returns (alpha_hat, kappa_hat, InnerStats).
    """
    n = oracle.n
    d = oracle.d_g
    alpha_prev = state.alpha
    lam = state.lam
    p_ref = state.p.copy()
    n_ref = state.n_slack.copy()
    s1 = prox.sigma1

    def residuals(alpha, kappa):
        x = alpha[:n]
        q = alpha[n: n + d]
        m = alpha[n + d:]
        jac = oracle.jac_g(x)
        grad_phi = np.concatenate([
            oracle.grad_f(x),
            w.wP * (q - p_ref),
            w.wM * (m - n_ref),
        ])
        ct_kappa = np.concatenate([jac.T @ kappa, -kappa, kappa])
        r_st = grad_phi + lam + s1 * (alpha - alpha_prev) + ct_kappa
        r_fe = oracle.eval_g(x) - q + m
        return r_st, r_fe

    def blocks(alpha, kappa):
        x = alpha[:n]
        h = np.zeros((n + 2 * d, n + 2 * d))
        h[:n, :n] = oracle.hess_f(x) + oracle.hess_gl(x, kappa)
        h[:n, :n] += s1 * np.eye(n)
        idx = np.arange(n, n + d)
        h[idx, idx] = w.wP + s1
        idx = np.arange(n + d, n + 2 * d)
        h[idx, idx] = w.wM + s1
        jac = np.zeros((d, n + 2 * d))
        jac[:, :n] = oracle.jac_g(x)
        jac[:, n: n + d] = -np.eye(d)
        jac[:, n + d:] = np.eye(d)
        return h, jac

    alpha_hat, kappa_hat, stats = newton_kkt(
        alpha_prev, state.kappa, residuals, blocks, inner, reg
    )
    return alpha_hat, kappa_hat, stats


def solve_sub2(state, bounds, w, prox):
    """Block-2 solve: per-coordinate barrier proximal step on the x copy.

    Minimizes varphi(beta) - lam_x^T beta + sigma2/2 ||beta - beta^-||^2
    coordinatewise; free coordinates take the exact quadratic step."""
    n = state.n
    c_lin = -state.lam[:n]
    return numkernel.barrier_minimize_batch(
        c_lin, prox.sigma2, state.beta, w.mu, w.r, np.asarray(bounds)
    )


def solve_sub3(state, w, prox):
    """Block-3 solve: per-coordinate barrier proximal step on the slacks.

    Minimizes psi(gamma) - (lam_q, lam_m)^T gamma + sigma3/2
    ||gamma - gamma^-||^2; the l1 penalty folds into the linear term."""
    n = state.n
    c_lin = w.rho - state.lam[n:]
    tau = np.ones(2 * state.d_g)
    return numkernel.barrier_minimize_batch(
        c_lin, prox.sigma3, state.gamma, w.mu, w.r, tau
    )


def coordinate_barrier_min(c_lin, sigma, s_prev, mu, r, orientation):
    """Exact minimizer of c*s + sigma/2 (s - s_prev)^2 - mu ln(r + tau*s).

    orientation tau must be +1 or -1; mu = 0 is the exact quadratic
    limit (BarrierDomainError if its minimizer leaves the domain)."""
    if orientation not in (-1, 1):
        raise ValueError("orientation must be +1 or -1")
    return numkernel.barrier_minimize(c_lin, sigma, s_prev, mu, r, orientation)


# below this wall distance (relative to r) the direct difference
# r + tau*v has lost half its digits, so the curvature switches to the
# first-order-condition reconstruction of the wall offset
_WALL_SWITCH = float(np.sqrt(np.finfo(np.float64).eps))


def _barrier_curvature(values, prev, lam_lin, tau, w, sigma, eps_pd, rho_term):
    """Diagonal barrier curvature mu/(r + tau*v)^2, floored at eps_pd.

    Evaluated directly while the wall offset r + tau*v carries enough
    digits.  Nearer the wall the offset is reconstructed from the
    subproblem's stationarity, mu/(r + tau*v) = rho_term +
    tau*(sigma*(v - v_prev) - lam): iterates can round onto the wall
    itself (offset 0 in floats) while the reconstructed slope stays
    finite and exact to rounding."""
    curv = np.full(values.shape, eps_pd)
    if w.mu <= 0.0:
        return curv
    bounded = tau != 0.0
    t = tau[bounded]
    offset = w.r + t * values[bounded]
    slope = rho_term + t * (sigma * (values[bounded] - prev[bounded]) - lam_lin[bounded])
    near_wall = (offset < _WALL_SWITCH * w.r) & (slope > 0.0)
    arg = np.where(near_wall, w.mu / np.where(slope > 0.0, slope, 1.0), offset)
    if np.any(arg <= 0.0):
        bad = int(np.flatnonzero(bounded)[np.argmax(arg <= 0.0)])
        raise BarrierDomainError(
            f"barrier curvature undefined at coordinate {bad}: "
            f"iterate on or past the wall",
            coordinate=bad,
        )
    curv[bounded] = np.maximum(w.mu / (arg * arg), eps_pd)
    return curv


def lift_min_eigenvalue(block, eps_pd):
    """Shift a symmetric block in place so its minimum eigenvalue is at
    least eps_pd; returns the applied diagonal shift.

    The shift lifts to eps_pd exactly rather than overshooting: larger
    shifts stiffen the negative-curvature directions through which
    iterates leave saddle points of the penalized problem."""
    eig_lo = numkernel.min_eigenvalue_estimate(block)
    if eig_lo >= eps_pd:
        return 0.0
    delta = eps_pd - eig_lo
    if not np.isfinite(delta):
        raise LinearSolverSingular(
            f"Hessian shift is not finite (min eigenvalue {eig_lo:.3e})"
        )
    idx = np.arange(block.shape[0])
    block[idx, idx] += delta
    return delta


def assemble_sensitivities(state_prev, hats, lam, kappa_hat, oracle, w, prox, reg):
    """Gradients and positive-definite curvature for the consensus QP.

    Block gradients are the proximal-stationarity identities evaluated
    at the local solutions.  Only the x part of the block-1 Hessian can
    go indefinite (the tie blocks are wP*I and wM*I), so the diagonal
    shift is confined to it, and it lifts the minimum eigenvalue to
    eps_pd exactly rather than overshooting.  Both choices matter for
    the dynamics: shifting the tie blocks scales the QP's dual reaction
    to consensus gaps with the shift size, and overshooting stiffens
    the negative-curvature directions through which the iterate leaves
    saddle points of the penalized problem."""
    n = oracle.n
    d = oracle.d_g
    alpha_hat = hats.alpha_hat
    beta_hat = hats.beta_hat
    gamma_hat = hats.gamma_hat
    x_hat = alpha_hat[:n]

    jac = oracle.jac_g(x_hat)
    ct_kappa = np.concatenate([jac.T @ kappa_hat, -kappa_hat, kappa_hat])
    g1 = prox.sigma1 * (state_prev.alpha - alpha_hat) - lam - ct_kappa
    g2 = prox.sigma2 * (state_prev.beta - beta_hat) + lam[:n]
    g3 = prox.sigma3 * (state_prev.gamma - gamma_hat) + lam[n:]

    h1 = np.zeros((n + 2 * d, n + 2 * d))
    h1[:n, :n] = oracle.hess_f(x_hat) + oracle.hess_gl(x_hat, kappa_hat)
    idx = np.arange(n, n + d)
    h1[idx, idx] = w.wP
    idx = np.arange(n + d, n + 2 * d)
    h1[idx, idx] = w.wM

    eig_lo = numkernel.min_eigenvalue_estimate(h1[:n, :n])
    delta = 0.0
    if eig_lo < reg.eps_pd:
        delta = reg.eps_pd - eig_lo
        if not np.isfinite(delta):
            raise LinearSolverSingular(
                f"block-1 Hessian shift is not finite "
                f"(min eigenvalue {eig_lo:.3e})"
            )
        h1[np.arange(n), np.arange(n)] += delta

    tau_beta = np.asarray(oracle.bounds, dtype=np.float64)
    h2 = _barrier_curvature(
        beta_hat, state_prev.beta, lam[:n], tau_beta, w, prox.sigma2,
        reg.eps_pd, rho_term=0.0,
    )
    tau_gamma = np.ones(2 * d)
    h3 = _barrier_curvature(
        gamma_hat, state_prev.gamma, lam[n:], tau_gamma, w, prox.sigma3,
        reg.eps_pd, rho_term=w.rho,
    )
    return Sensitivities(g1=g1, g2=g2, g3=g3, H1=h1, h2=h2, h3=h3, shift=delta)
