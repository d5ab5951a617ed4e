"""Penalty-barrier splitting of a complementarity-constrained program.

The equality g(x) = 0 is relaxed through a slack pair p, n >= 0 with an
l1 penalty rho*(p + n) and relaxed log barriers, and the problem is
split across three blocks tied by linear consensus constraints:

    alpha = (x, q, m)   carries f, the local equality g(x) - q + m = 0,
                        and quadratic ties of (q, m) to the slacks,
    beta                a copy of x carrying the sign-constraint barriers,
    gamma = (p, n)      the slack pair carrying the l1 penalty and its
                        own barriers,

with coupling A1*alpha + A2*beta + A3*gamma = 0 encoding x = beta,
q = p, m = n.
"""

from dataclasses import dataclass

import numpy as np

from aladin_mpcc.errors import BarrierDomainError


@dataclass
class SplitWeights:
    """Per-iteration scalars of the reformulated objective.

    wP, wM weight the quadratic ties of q to p and m to n; r is the
    barrier relaxation radius; mu the barrier weight (0 allowed as the
    exact-quadratic limit); rho the l1 penalty weight.
    """

    wP: float = 1.0
    wM: float = 1.0
    r: float = 1.0
    mu: float = 10.0
    rho: float = 10.0

    def __post_init__(self):
        for name in ("wP", "wM", "r", "rho"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if self.mu < 0.0:
            raise ValueError("mu must be nonnegative")


@dataclass
class SplitState:
    """One full iterate: block variables and both multiplier vectors.

    alpha = (x, q, m) in R^(n+2d), beta in R^n, gamma = (p, n) in
    R^(2d); lam are consensus multipliers ordered (x-rows, q-rows,
    m-rows); kappa multiplies the local equality g(x) - q + m = 0.
    """

    alpha: np.ndarray
    beta: np.ndarray
    gamma: np.ndarray
    lam: np.ndarray
    kappa: np.ndarray

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "lam", "kappa"):
            setattr(self, name, np.ascontiguousarray(getattr(self, name),
                                                     dtype=np.float64))
        n = self.beta.size
        if self.gamma.size % 2 != 0:
            raise ValueError("gamma must stack two slack vectors of equal length")
        d = self.gamma.size // 2
        if self.alpha.size != n + 2 * d:
            raise ValueError(
                f"alpha has size {self.alpha.size}, expected {n + 2 * d}"
            )
        if self.lam.size != n + 2 * d:
            raise ValueError("lam must match alpha in size")
        if self.kappa.size != d:
            raise ValueError("kappa must have one entry per equality row")

    @property
    def n(self):
        return self.beta.size

    @property
    def d_g(self):
        return self.gamma.size // 2

    @property
    def x(self):
        return self.alpha[: self.n]

    @property
    def q(self):
        return self.alpha[self.n: self.n + self.d_g]

    @property
    def m_copy(self):
        return self.alpha[self.n + self.d_g:]

    @property
    def p(self):
        return self.gamma[: self.d_g]

    @property
    def n_slack(self):
        return self.gamma[self.d_g:]

    def copy(self):
        return SplitState(self.alpha.copy(), self.beta.copy(),
                          self.gamma.copy(), self.lam.copy(), self.kappa.copy())


@dataclass(frozen=True)
class CouplingMatrices:
    """Dense consensus coupling blocks with A1 alpha + A2 beta + A3 gamma = 0."""

    A1: np.ndarray
    A2: np.ndarray
    A3: np.ndarray
    n: int
    d_g: int

    def residual(self, alpha, beta, gamma):
        return self.A1 @ alpha + self.A2 @ beta + self.A3 @ gamma


def build_coupling(n, d_g):
    """Coupling blocks encoding x = beta, q = p, m = n over R^(n+2d)."""
    if n < 1 or d_g < 1:
        raise ValueError("need n >= 1 and d_g >= 1")
    rows = n + 2 * d_g
    a1 = np.eye(rows)
    a2 = np.zeros((rows, n))
    a2[:n, :] = -np.eye(n)
    a3 = np.zeros((rows, 2 * d_g))
    a3[n: n + d_g, :d_g] = -np.eye(d_g)
    a3[n + d_g:, d_g:] = -np.eye(d_g)
    return CouplingMatrices(A1=a1, A2=a2, A3=a3, n=n, d_g=d_g)


def eval_phi(alpha, gamma_ref, oracle, w):
    """Block-1 objective: f(x) plus quadratic ties of (q, m) to gamma_ref."""
    n = oracle.n
    d = oracle.d_g
    x = alpha[:n]
    q = alpha[n: n + d]
    m = alpha[n + d:]
    p = gamma_ref[:d]
    nn = gamma_ref[d:]
    return (oracle.eval_f(x)
            + 0.5 * w.wP * float((q - p) @ (q - p))
            + 0.5 * w.wM * float((m - nn) @ (m - nn)))


def eval_varphi(beta, bounds, w):
    """Block-2 objective: relaxed sign-constraint barriers on the x copy.

    Free coordinates contribute nothing.  Raises BarrierDomainError when
    a bounded coordinate reaches r + tau*beta <= 0.
    """
    beta = np.asarray(beta, dtype=np.float64)
    tau = np.asarray(bounds, dtype=np.float64)
    bounded = tau != 0.0
    if not bounded.any():
        return 0.0
    args = w.r + tau[bounded] * beta[bounded]
    if (args <= 0.0).any():
        idx = int(np.flatnonzero(bounded)[int(np.argmax(args <= 0.0))])
        raise BarrierDomainError(
            f"barrier argument nonpositive at coordinate {idx}", coordinate=idx
        )
    if w.mu == 0.0:
        return 0.0
    return float(-w.mu * np.log(args).sum())


def eval_psi(gamma, w):
    """Block-3 objective: l1 penalty on the slack pair plus its barriers."""
    gamma = np.asarray(gamma, dtype=np.float64)
    args = w.r + gamma
    if (args <= 0.0).any():
        idx = int(np.argmax(args <= 0.0))
        raise BarrierDomainError(
            f"slack barrier argument nonpositive at coordinate {idx}",
            coordinate=idx,
        )
    val = w.rho * float(gamma.sum())
    if w.mu > 0.0:
        val -= w.mu * float(np.log(args).sum())
    return val


def eval_local_equality(alpha, oracle):
    """Residual of the block-1 equality g(x) - q + m."""
    n = oracle.n
    d = oracle.d_g
    return oracle.eval_g(alpha[:n]) - alpha[n: n + d] + alpha[n + d:]


def local_equality_jacobian(alpha, oracle):
    """Jacobian [dg/dx, -I, +I] of the block-1 equality at alpha."""
    n = oracle.n
    d = oracle.d_g
    jac = np.zeros((d, n + 2 * d))
    jac[:, :n] = oracle.jac_g(alpha[:n])
    jac[:, n: n + d] = -np.eye(d)
    jac[:, n + d:] = np.eye(d)
    return jac


def interior_start(x0, bounds, r):
    """Validate that x0 is finite and strictly inside every barrier."""
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    if not np.isfinite(x0).all():
        raise ValueError("start point has non-finite entries")
    tau = np.asarray(bounds, dtype=np.float64)
    bad = (tau != 0.0) & (r + tau * x0 <= 0.0)
    if bad.any():
        idx = int(np.argmax(bad))
        raise ValueError(
            f"start point violates the relaxed bound at coordinate {idx}"
        )
    return x0
