"""Consensus coordination: QP step, dual update, schedule, outer loop.

One outer iteration runs the three local solves in parallel, assembles
their sensitivities, solves an equality-constrained consensus QP
through its saddle-point KKT system, takes the (full-step by default)
dual update, logs a record, then advances the barrier/penalty schedule.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields as dc_fields, replace
from enum import Enum

import numpy as np

from aladin_mpcc import numkernel
from aladin_mpcc.errors import (
    AladinError,
    InnerSolverFailure,
    LinearSolverSingular,
)
from aladin_mpcc.numkernel import RegConfig
from aladin_mpcc.reformulate import (
    SplitState,
    SplitWeights,
    build_coupling,
    eval_local_equality,
    interior_start,
    local_equality_jacobian,
)
from aladin_mpcc.subsolvers import (
    InnerConfig,
    ProxWeights,
    SubproblemSolution,
    assemble_sensitivities,
    solve_sub1,
    solve_sub2,
    solve_sub3,
)


@dataclass
class AladinConfig:
    """Solver settings: schedule, weights, tolerances, inner controls.

    Flat on purpose so a JSON config file and --set key=value overrides
    map one-to-one onto field names.
    """

    mu0: float = 10.0
    mu_shrink: float = 0.2
    mu_min: float = 1e-16
    rho0: float = 10.0
    rho_grow: float = 4.0
    rho_max: float = 1e12
    r: float = 1.0
    wP: float = 1.0
    wM: float = 1.0
    sigma1: float = 10.0
    sigma2: float = 10.0
    sigma3: float = 10.0
    theta: float = 1.0
    tol_comp: float = 1e-12
    tol_cons: float = 1e-8
    tol_step: float = 1e-10
    max_outer: int = 200
    inner_tol: float = 1e-12
    inner_max_iter: int = 50
    armijo_factor: float = 0.5
    armijo_slope: float = 1e-4
    delta0: float = 1e-8
    eps_pd: float = 1e-8
    reg_max_shifts: int = 8
    fixed_iterations: bool = False
    reference_solution: np.ndarray | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("mu0", "rho0", "mu_min", "rho_max", "r", "wP", "wM",
                     "sigma1", "sigma2", "sigma3", "tol_comp", "tol_cons",
                     "tol_step", "inner_tol", "delta0", "eps_pd"):
            if not float(getattr(self, name)) > 0.0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 < self.mu_shrink < 1.0:
            raise ValueError("mu_shrink must lie in (0, 1)")
        if not self.rho_grow > 1.0:
            raise ValueError("rho_grow must exceed 1")
        if not 0.0 < self.theta <= 1.0:
            raise ValueError("theta must lie in (0, 1]")
        if self.max_outer < 1 or self.inner_max_iter < 1:
            raise ValueError("iteration budgets must be at least 1")
        if self.reference_solution is not None:
            ref = np.ascontiguousarray(self.reference_solution, dtype=np.float64)
            if ref.ndim != 1:
                raise ValueError("reference_solution must be a flat vector")
            self.reference_solution = ref

    @property
    def inner_cfg(self):
        return InnerConfig(tol=self.inner_tol, max_iter=self.inner_max_iter,
                           armijo_factor=self.armijo_factor,
                           armijo_slope=self.armijo_slope)

    @property
    def reg_cfg(self):
        return RegConfig(delta0=self.delta0, eps_pd=self.eps_pd,
                         max_shifts=self.reg_max_shifts)

    @property
    def prox(self):
        return ProxWeights(sigma1=self.sigma1, sigma2=self.sigma2,
                           sigma3=self.sigma3)

    def weights(self, mu, rho):
        return SplitWeights(wP=self.wP, wM=self.wM, r=self.r, mu=mu, rho=rho)

    def replace(self, **kwargs):
        return replace(self, **kwargs)

    @classmethod
    def field_names(cls):
        return [f.name for f in dc_fields(cls)]

    @classmethod
    def from_mapping(cls, mapping):
        """Defaults overlaid with a {field: value} mapping; unknown keys
        are rejected."""
        known = set(cls.field_names())
        unknown = sorted(set(mapping) - known)
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**mapping)


@dataclass
class IterationRecord:
    """One outer iteration's telemetry (CSV row of the bench output)."""

    k: int
    mu: float
    rho: float
    objective: float
    comp_residual: float
    consensus_residual: float | None
    local_eq_residual: float | None
    step_norm: float
    x_error: float | None
    inner_iters: int
    wall_time_s: float


class SolveStatus(str, Enum):
    CONVERGED = "Converged"
    MAX_ITERATIONS = "MaxIterations"
    INNER_SOLVER_FAILURE = "InnerSolverFailure"
    LINEAR_SOLVER_SINGULAR = "LinearSolverSingular"
    DIVERGED = "Diverged"


@dataclass
class SolveResult:
    """Terminal status, final iterate, full telemetry, and the x path."""

    status: SolveStatus
    state: SplitState | None
    records: list
    x_trace: list
    message: str = ""

    @property
    def final_x(self):
        if self.x_trace:
            return self.x_trace[-1]
        return self.state.x if self.state is not None else None


@dataclass
class ConsensusQp:
    """Consensus-QP output: updated blocks, coupling multiplier, and
    solve diagnostics (nu_local multiplies the linearized equality)."""

    alpha_plus: np.ndarray
    beta_plus: np.ndarray
    gamma_plus: np.ndarray
    lambda_qp: np.ndarray
    nu_local: np.ndarray
    kkt_residual: float
    rhs_inf: float


@dataclass
class IterationDebug:
    """Full intermediate state of one iteration, for hooks and tests."""

    k: int
    weights: SplitWeights
    state_prev: SplitState
    hats: SubproblemSolution
    sens: object
    qp: ConsensusQp
    c_jac: np.ndarray
    state_new: SplitState
    record: IterationRecord


def _inf_norm(v):
    return float(np.abs(v).max(initial=0.0))


def solve_consensus_qp(hats, sens, c_jac, coupling, reg):
    """Solve the coordination QP around the local solutions.

    Minimizes 1/2 ||dy||_H^2 + g^T dy over dy = y - y_hat subject to
    C d_alpha = 0 and A1 alpha + A2 beta + A3 gamma = 0, via one
    factorization of [[H, J^T], [J, 0]].  lambda_qp multiplies the
    coupling rows.
    """
    n = coupling.n
    d = coupling.d_g
    n1 = n + 2 * d
    ntot = n1 + n + 2 * d
    nrows = d + n1

    h = np.zeros((ntot, ntot))
    h[:n1, :n1] = sens.H1
    idx = np.arange(n1, n1 + n)
    h[idx, idx] = sens.h2
    idx = np.arange(n1 + n, ntot)
    h[idx, idx] = sens.h3

    jmat = np.zeros((nrows, ntot))
    jmat[:d, :n1] = c_jac
    jmat[d:, :n1] = coupling.A1
    jmat[d:, n1: n1 + n] = coupling.A2
    jmat[d:, n1 + n:] = coupling.A3

    g = np.concatenate([sens.g1, sens.g2, sens.g3])
    gap = coupling.residual(hats.alpha_hat, hats.beta_hat, hats.gamma_hat)
    c_rhs = np.concatenate([np.zeros(d), -gap])

    step, nu = numkernel.kkt_solve(h, jmat, g, c_rhs, reg)

    res_st = h @ step + jmat.T @ nu + g
    res_fe = jmat @ step - c_rhs
    kkt_residual = max(_inf_norm(res_st), _inf_norm(res_fe))
    rhs_inf = max(_inf_norm(g), _inf_norm(c_rhs))

    y_hat = np.concatenate([hats.alpha_hat, hats.beta_hat, hats.gamma_hat])
    y_plus = y_hat + step
    return ConsensusQp(
        alpha_plus=y_plus[:n1],
        beta_plus=y_plus[n1: n1 + n],
        gamma_plus=y_plus[n1 + n:],
        lambda_qp=nu[d:],
        nu_local=nu[:d],
        kkt_residual=kkt_residual,
        rhs_inf=rhs_inf,
    )


def dual_update(lam, lam_qp, theta):
    """lam + theta * (lam_qp - lam); theta = 1 is the full step."""
    if not 0.0 < theta <= 1.0:
        raise ValueError("theta must lie in (0, 1]")
    return lam + theta * (np.asarray(lam_qp, dtype=np.float64) - lam)


def update_parameters(mu, rho, cfg):
    """Advance the schedule: shrink mu to its floor, grow rho to its cap."""
    if not (mu > 0.0 and rho > 0.0):
        raise ValueError("mu and rho must be positive")
    return max(mu * cfg.mu_shrink, cfg.mu_min), min(rho * cfg.rho_grow, cfg.rho_max)


def check_termination(record, cfg):
    """Status for a finished iteration, or None to continue.

    Diverged on any non-finite tracked quantity; Converged when the
    complementarity, consensus, and step thresholds hold together
    (absent residuals are vacuously satisfied); MaxIterations at the
    iteration budget.
    """
    tracked = [record.mu, record.rho, record.objective, record.comp_residual,
               record.step_norm]
    for v in (record.consensus_residual, record.local_eq_residual,
              record.x_error):
        if v is not None:
            tracked.append(v)
    if not np.isfinite(tracked).all():
        return SolveStatus.DIVERGED
    comp_ok = record.comp_residual <= cfg.tol_comp
    cons_ok = (record.consensus_residual is None
               or record.consensus_residual <= cfg.tol_cons)
    step_ok = record.step_norm <= cfg.tol_step
    if comp_ok and cons_ok and step_ok:
        return SolveStatus.CONVERGED
    if record.k >= cfg.max_outer:
        return SolveStatus.MAX_ITERATIONS
    return None


_FAILURE_STATUS = {
    InnerSolverFailure: SolveStatus.INNER_SOLVER_FAILURE,
    LinearSolverSingular: SolveStatus.LINEAR_SOLVER_SINGULAR,
}


def _failure_result(exc, k, state, records, x_trace):
    status = _FAILURE_STATUS.get(type(exc), SolveStatus.DIVERGED)
    return SolveResult(status=status, state=state, records=records,
                       x_trace=x_trace, message=f"iteration {k}: {exc}")


def run_aladin_beta(oracle, x0, cfg, record_sink=None, iteration_hook=None):
    """Run the full outer loop from x0 under cfg; never raises on solver
    failures, which land in SolveResult.status with the iteration index
    in the message.

    record_sink, when given, receives each IterationRecord as it is
    appended; iteration_hook receives an IterationDebug per iteration.
    With cfg.fixed_iterations the loop ignores early convergence and
    runs the full budget (divergence and hard failures still stop it).
    """
    n = oracle.n
    d = oracle.d_g
    x0 = interior_start(x0, oracle.bounds, cfg.r)
    if x0.shape != (n,):
        raise ValueError(f"x0 must have shape ({n},)")
    if cfg.reference_solution is not None and cfg.reference_solution.shape != (n,):
        raise ValueError("reference_solution does not match the problem size")

    g0 = oracle.eval_g(x0)
    p0 = np.maximum(g0, 0.0) + 0.1
    n0 = np.maximum(-g0, 0.0) + 0.1
    state = SplitState(
        alpha=np.concatenate([x0, p0, n0]),
        beta=x0.copy(),
        gamma=np.concatenate([p0, n0]),
        lam=np.zeros(n + 2 * d),
        kappa=np.zeros(d),
    )
    coupling = build_coupling(n, d)
    prox = cfg.prox
    inner = cfg.inner_cfg
    reg = cfg.reg_cfg
    mu, rho = cfg.mu0, cfg.rho0

    records = []
    x_trace = []
    with ThreadPoolExecutor(max_workers=3) as pool:
        for k in range(1, cfg.max_outer + 1):
            t_start = time.perf_counter()
            w = cfg.weights(mu, rho)
            try:
                fut1 = pool.submit(solve_sub1, state, oracle, w, prox, inner, reg)
                fut2 = pool.submit(solve_sub2, state, oracle.bounds, w, prox)
                fut3 = pool.submit(solve_sub3, state, w, prox)
                alpha_hat, kappa_hat, stats = fut1.result()
                beta_hat = fut2.result()
                gamma_hat = fut3.result()
                hats = SubproblemSolution(alpha_hat=alpha_hat, beta_hat=beta_hat,
                                          gamma_hat=gamma_hat, kappa_hat=kappa_hat,
                                          inner=stats)
                sens = assemble_sensitivities(state, hats, state.lam, kappa_hat,
                                              oracle, w, prox, reg)
                c_jac = local_equality_jacobian(alpha_hat, oracle)
                qp = solve_consensus_qp(hats, sens, c_jac, coupling, reg)
            except AladinError as exc:
                return _failure_result(exc, k, state, records, x_trace)

            lam_new = dual_update(state.lam, qp.lambda_qp, cfg.theta)
            state_new = SplitState(alpha=qp.alpha_plus, beta=qp.beta_plus,
                                   gamma=qp.gamma_plus, lam=lam_new,
                                   kappa=kappa_hat.copy())

            step_norm = max(
                _inf_norm(state_new.alpha - state.alpha),
                _inf_norm(state_new.beta - state.beta),
                _inf_norm(state_new.gamma - state.gamma),
            )
            x_new = state_new.x
            x_err = None
            if cfg.reference_solution is not None:
                x_err = float(np.linalg.norm(x_new - cfg.reference_solution))
            record = IterationRecord(
                k=k,
                mu=mu,
                rho=rho,
                objective=oracle.eval_f(x_new),
                comp_residual=_inf_norm(oracle.eval_g(x_new)),
                consensus_residual=_inf_norm(
                    coupling.residual(alpha_hat, beta_hat, gamma_hat)
                ),
                local_eq_residual=_inf_norm(eval_local_equality(state_new.alpha,
                                                                oracle)),
                step_norm=step_norm,
                x_error=x_err,
                inner_iters=stats.iterations,
                wall_time_s=time.perf_counter() - t_start,
            )
            records.append(record)
            x_trace.append(x_new.copy())
            if record_sink is not None:
                record_sink(record)
            if iteration_hook is not None:
                iteration_hook(IterationDebug(
                    k=k, weights=w, state_prev=state, hats=hats, sens=sens,
                    qp=qp, c_jac=c_jac, state_new=state_new, record=record,
                ))
            state = state_new
            mu, rho = update_parameters(mu, rho, cfg)

            status = check_termination(record, cfg)
            if status is not None:
                if (cfg.fixed_iterations
                        and status is SolveStatus.CONVERGED
                        and k < cfg.max_outer):
                    continue
                return SolveResult(status=status, state=state, records=records,
                                   x_trace=x_trace)
    raise AssertionError("outer loop ended without a terminal status")
