"""Centralized comparators for the distributed solver.

run_penalty_barrier_newton minimizes the same penalty-barrier
reformulation over the joint variable (x, p, n) by damped Newton-KKT
steps, under either parameter schedule: PerStep advances (mu, rho)
after every Newton step, PerBarrierSolve only once the current barrier
problem is solved to an inner tolerance.  run_vanilla_barrier is the
best-effort barrier Newton on the original problem with g(x) = 0 kept
as a hard equality; failure statuses there are expected outcomes.
"""

import time
from enum import Enum

import numpy as np

from aladin_mpcc.coordinator import (
    IterationRecord,
    SolveResult,
    SolveStatus,
    _failure_result,
    check_termination,
    update_parameters,
)
from aladin_mpcc.errors import AladinError, BarrierDomainError
from aladin_mpcc.reformulate import SplitState, interior_start
from aladin_mpcc.subsolvers import _newton_kkt_step

# KKT tolerance at which PerBarrierSolve considers the current barrier
# problem solved and advances the parameters
PER_BARRIER_INNER_TOL = 1e-8


class BaselineSchedule(Enum):
    PER_STEP = "PerStep"
    PER_BARRIER_SOLVE = "PerBarrierSolve"


def _inf_norm(v):
    return float(np.abs(v).max(initial=0.0))


def _bound_barrier_terms(x, tau, mu, r):
    """Gradient and curvature diagonal of the sign-constraint barriers."""
    grad = np.zeros_like(x)
    curv = np.zeros_like(x)
    bounded = tau != 0.0
    if mu > 0.0 and bounded.any():
        args = r + tau[bounded] * x[bounded]
        if (args <= 0.0).any():
            idx = int(np.flatnonzero(bounded)[int(np.argmax(args <= 0.0))])
            raise BarrierDomainError(
                f"bound barrier left its domain at coordinate {idx}",
                coordinate=idx,
            )
        grad[bounded] = -mu * tau[bounded] / args
        curv[bounded] = mu / (args * args)
    return grad, curv


def _slack_args(s, r, label):
    args = r + s
    if (args <= 0.0).any():
        idx = int(np.argmax(args <= 0.0))
        raise BarrierDomainError(
            f"{label} slack barrier left its domain at coordinate {idx}",
            coordinate=idx,
        )
    return args


def _pb_closures(oracle, tau, mu, rho, r):
    n = oracle.n
    d = oracle.d_g

    def residuals(z, kappa):
        x = z[:n]
        p = z[n: n + d]
        nn = z[n + d:]
        bgrad, _ = _bound_barrier_terms(x, tau, mu, r)
        argp = _slack_args(p, r, "positive")
        argn = _slack_args(nn, r, "negative")
        r_st = np.concatenate([
            oracle.grad_f(x) + bgrad + oracle.jac_g(x).T @ kappa,
            rho - mu / argp - kappa,
            rho - mu / argn + kappa,
        ])
        r_fe = oracle.eval_g(x) - p + nn
        return r_st, r_fe

    def blocks(z, kappa):
        x = z[:n]
        p = z[n: n + d]
        nn = z[n + d:]
        _, bcurv = _bound_barrier_terms(x, tau, mu, r)
        h = np.zeros((n + 2 * d, n + 2 * d))
        h[:n, :n] = oracle.hess_f(x) + oracle.hess_gl(x, kappa)
        idx = np.arange(n)
        h[idx, idx] += bcurv
        argp = _slack_args(p, r, "positive")
        argn = _slack_args(nn, r, "negative")
        idx = np.arange(n, n + d)
        h[idx, idx] = mu / (argp * argp)
        idx = np.arange(n + d, n + 2 * d)
        h[idx, idx] = mu / (argn * argn)
        jac = np.zeros((d, n + 2 * d))
        jac[:, :n] = oracle.jac_g(x)
        jac[:, n: n + d] = -np.eye(d)
        jac[:, n + d:] = np.eye(d)
        return h, jac

    return residuals, blocks


def _embed_state(x, p, nn, kappa, n, d):
    return SplitState(
        alpha=np.concatenate([x, p, nn]),
        beta=x.copy(),
        gamma=np.concatenate([p, nn]),
        lam=np.zeros(n + 2 * d),
        kappa=kappa.copy(),
    )


def run_penalty_barrier_newton(oracle, x0, cfg, schedule, record_sink=None):
    """Centralized penalty-barrier Newton over (x, p, n).

    One damped Newton-KKT step per outer iteration, with the schedule
    applied per the BaselineSchedule; telemetry and termination match
    the coordinator (the consensus residual is absent here).
    """
    schedule = BaselineSchedule(schedule)
    n = oracle.n
    d = oracle.d_g
    tau = np.asarray(oracle.bounds, dtype=np.float64)
    x0 = interior_start(x0, oracle.bounds, cfg.r)
    g0 = oracle.eval_g(x0)
    p0 = np.maximum(g0, 0.0) + 0.1
    n0 = np.maximum(-g0, 0.0) + 0.1
    z = np.concatenate([x0, p0, n0])
    kappa = np.zeros(d)
    mu, rho = cfg.mu0, cfg.rho0
    inner = cfg.inner_cfg
    reg = cfg.reg_cfg
    records = []
    x_trace = []
    for k in range(1, cfg.max_outer + 1):
        t_start = time.perf_counter()
        residuals, blocks = _pb_closures(oracle, tau, mu, rho, cfg.r)
        try:
            z_new, kappa_new, res_new, _ = _newton_kkt_step(
                z, kappa, residuals, blocks, inner, reg
            )
        except AladinError as exc:
            state = _embed_state(z[:n], z[n: n + d], z[n + d:], kappa, n, d)
            return _failure_result(exc, k, state, records, x_trace)
        step_norm = _inf_norm(z_new - z)
        z, kappa = z_new, kappa_new
        x = z[:n]
        x_err = None
        if cfg.reference_solution is not None:
            x_err = float(np.linalg.norm(x - cfg.reference_solution))
        record = IterationRecord(
            k=k,
            mu=mu,
            rho=rho,
            objective=oracle.eval_f(x),
            comp_residual=_inf_norm(oracle.eval_g(x)),
            consensus_residual=None,
            local_eq_residual=_inf_norm(oracle.eval_g(x) - z[n: n + d]
                                        + z[n + d:]),
            step_norm=step_norm,
            x_error=x_err,
            inner_iters=1,
            wall_time_s=time.perf_counter() - t_start,
        )
        records.append(record)
        x_trace.append(x.copy())
        if record_sink is not None:
            record_sink(record)
        if schedule is BaselineSchedule.PER_STEP or res_new <= PER_BARRIER_INNER_TOL:
            mu, rho = update_parameters(mu, rho, cfg)
        status = check_termination(record, cfg)
        if status is not None:
            state = _embed_state(x, z[n: n + d], z[n + d:], kappa, n, d)
            return SolveResult(status=status, state=state, records=records,
                               x_trace=x_trace)
    raise AssertionError("outer loop ended without a terminal status")


def run_vanilla_barrier(oracle, x0, cfg, record_sink=None):
    """Barrier Newton keeping g(x) = 0 as a hard equality; best effort.

    Near complementarity solutions the equality Jacobian loses rank and
    InnerSolverFailure / LinearSolverSingular / MaxIterations are
    legitimate terminal statuses.
    """
    n = oracle.n
    d = oracle.d_g
    tau = np.asarray(oracle.bounds, dtype=np.float64)
    x = interior_start(x0, oracle.bounds, cfg.r).copy()
    kappa = np.zeros(d)
    mu = cfg.mu0
    inner = cfg.inner_cfg
    reg = cfg.reg_cfg
    records = []
    x_trace = []

    def make_closures(mu_now):
        def residuals(xx, kk):
            bgrad, _ = _bound_barrier_terms(xx, tau, mu_now, cfg.r)
            r_st = oracle.grad_f(xx) + bgrad + oracle.jac_g(xx).T @ kk
            r_fe = oracle.eval_g(xx)
            return r_st, r_fe

        def blocks(xx, kk):
            _, bcurv = _bound_barrier_terms(xx, tau, mu_now, cfg.r)
            h = oracle.hess_f(xx) + oracle.hess_gl(xx, kk)
            idx = np.arange(n)
            h[idx, idx] += bcurv
            return h, oracle.jac_g(xx)

        return residuals, blocks

    for k in range(1, cfg.max_outer + 1):
        t_start = time.perf_counter()
        residuals, blocks = make_closures(mu)
        try:
            x_new, kappa_new, res_new, _ = _newton_kkt_step(
                x, kappa, residuals, blocks, inner, reg
            )
        except AladinError as exc:
            state = _embed_state(x, np.zeros(d), np.zeros(d), kappa, n, d)
            return _failure_result(exc, k, state, records, x_trace)
        step_norm = _inf_norm(x_new - x)
        x, kappa = x_new, kappa_new
        x_err = None
        if cfg.reference_solution is not None:
            x_err = float(np.linalg.norm(x - cfg.reference_solution))
        record = IterationRecord(
            k=k,
            mu=mu,
            rho=cfg.rho0,
            objective=oracle.eval_f(x),
            comp_residual=_inf_norm(oracle.eval_g(x)),
            consensus_residual=None,
            local_eq_residual=None,
            step_norm=step_norm,
            x_error=x_err,
            inner_iters=1,
            wall_time_s=time.perf_counter() - t_start,
        )
        records.append(record)
        x_trace.append(x.copy())
        if record_sink is not None:
            record_sink(record)
        if res_new <= PER_BARRIER_INNER_TOL:
            mu = max(mu * cfg.mu_shrink, cfg.mu_min)
        status = check_termination(record, cfg)
        if status is not None:
            state = _embed_state(x, np.zeros(d), np.zeros(d), kappa, n, d)
            return SolveResult(status=status, state=state, records=records,
                               x_trace=x_trace)
    raise AssertionError("outer loop ended without a terminal status")
