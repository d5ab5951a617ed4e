"""Problem oracles: complementarity-constrained programs over smooth data.

A problem is

    min f(x)  s.t.  g(x) = 0,  sign constraints on x per coordinate,

where g collects the complementarity products, either aggregated into a
single scalar G(x)^T H(x) or kept componentwise G_i(x) * H_i(x).  The
solver layers above only ever touch the oracle protocol; the quadratic
family QpccProblem is data for tests, the CLI, and the benchmark.
"""

import json
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum, IntEnum

import numpy as np


class BoundSign(IntEnum):
    """Per-coordinate sign constraint; the value doubles as the barrier
    orientation tau in -mu*ln(r + tau*x)."""

    FREE = 0
    NONNEG = 1
    NONPOS = -1


_BOUND_NAMES = {"free": BoundSign.FREE, "nonneg": BoundSign.NONNEG,
                "nonpos": BoundSign.NONPOS}


def bounds_from_names(names):
    """Map 'free' / 'nonneg' / 'nonpos' strings to an int8 sign vector."""
    out = np.empty(len(names), dtype=np.int8)
    for i, name in enumerate(names):
        try:
            out[i] = _BOUND_NAMES[str(name).lower()]
        except KeyError:
            raise ValueError(f"unknown bound kind {name!r} at index {i}") from None
    return out


class ComplMode(str, Enum):
    AGGREGATE = "aggregate"
    COMPONENTWISE = "componentwise"


class MpccOracle(ABC):
    """Evaluation protocol every solver in this package consumes.

    Implementations provide dimensions n (variables) and d_g (equality
    rows), a bounds sign vector of length n, and smooth derivatives of f
    and g.  hess_gl(x, kappa) is the Hessian of kappa^T g(x).
    """

    @property
    @abstractmethod
    def n(self) -> int: ...

    @property
    @abstractmethod
    def d_g(self) -> int: ...

    @property
    @abstractmethod
    def bounds(self) -> np.ndarray: ...

    @abstractmethod
    def eval_f(self, x) -> float: ...

    @abstractmethod
    def grad_f(self, x) -> np.ndarray: ...

    @abstractmethod
    def hess_f(self, x) -> np.ndarray: ...

    @abstractmethod
    def eval_g(self, x) -> np.ndarray: ...

    @abstractmethod
    def jac_g(self, x) -> np.ndarray: ...

    @abstractmethod
    def hess_gl(self, x, kappa) -> np.ndarray: ...


def _vector(v, size, name):
    out = np.ascontiguousarray(v, dtype=np.float64)
    if out.shape != (size,):
        raise ValueError(f"{name} must have shape ({size},), got {out.shape}")
    return out


@dataclass
class QpccProblem(MpccOracle):
    """Quadratic objective with affine complementarity factors.

    f(x) = 0.5 x^T Q x + c^T x + obj_const, G(x) = E x + e0,
    H(x) = F x + f0.  mode selects whether g(x) stacks the products
    componentwise or aggregates them into the single scalar G^T H.
    """

    Q: np.ndarray
    c: np.ndarray
    E: np.ndarray
    e0: np.ndarray
    F: np.ndarray
    f0: np.ndarray
    mode: ComplMode = ComplMode.AGGREGATE
    bound_signs: np.ndarray = field(default=None)
    obj_const: float = 0.0

    def __post_init__(self):
        self.Q = np.ascontiguousarray(self.Q, dtype=np.float64)
        if self.Q.ndim != 2 or self.Q.shape[0] != self.Q.shape[1]:
            raise ValueError(f"Q must be square, got shape {self.Q.shape}")
        nvar = self.Q.shape[0]
        if not np.allclose(self.Q, self.Q.T, rtol=0.0, atol=1e-12):
            raise ValueError("Q must be symmetric")
        self.c = _vector(self.c, nvar, "c")
        self.E = np.ascontiguousarray(self.E, dtype=np.float64)
        self.F = np.ascontiguousarray(self.F, dtype=np.float64)
        if self.E.ndim != 2 or self.E.shape[1] != nvar:
            raise ValueError(f"E must have {nvar} columns, got shape {self.E.shape}")
        if self.F.shape != self.E.shape:
            raise ValueError("E and F must share a shape")
        rows = self.E.shape[0]
        if rows < 1:
            raise ValueError("need at least one complementarity row")
        self.e0 = _vector(self.e0, rows, "e0")
        self.f0 = _vector(self.f0, rows, "f0")
        self.mode = ComplMode(self.mode)
        if self.bound_signs is None:
            self.bound_signs = np.full(nvar, BoundSign.NONNEG, dtype=np.int8)
        else:
            self.bound_signs = np.ascontiguousarray(self.bound_signs, dtype=np.int8)
            if self.bound_signs.shape != (nvar,):
                raise ValueError("bounds must have one sign per variable")
            if not np.isin(self.bound_signs, (-1, 0, 1)).all():
                raise ValueError("bound signs must be -1, 0, or +1")
        self.obj_const = float(self.obj_const)
        for name in ("Q", "c", "E", "e0", "F", "f0"):
            if not np.isfinite(getattr(self, name)).all():
                raise ValueError(f"{name} has non-finite entries")

    @property
    def n(self):
        return self.Q.shape[0]

    @property
    def d_g(self):
        return 1 if self.mode is ComplMode.AGGREGATE else self.E.shape[0]

    @property
    def bounds(self):
        return self.bound_signs

    def eval_f(self, x):
        x = _vector(x, self.n, "x")
        return float(0.5 * x @ (self.Q @ x) + self.c @ x + self.obj_const)

    def grad_f(self, x):
        x = _vector(x, self.n, "x")
        return self.Q @ x + self.c

    def hess_f(self, x):
        return self.Q.copy()

    def _factors(self, x):
        return self.E @ x + self.e0, self.F @ x + self.f0

    def eval_g(self, x):
        x = _vector(x, self.n, "x")
        gg, hh = self._factors(x)
        if self.mode is ComplMode.AGGREGATE:
            return np.array([gg @ hh])
        return gg * hh

    def jac_g(self, x):
        x = _vector(x, self.n, "x")
        gg, hh = self._factors(x)
        if self.mode is ComplMode.AGGREGATE:
            return (self.E.T @ hh + self.F.T @ gg).reshape(1, self.n)
        return hh[:, None] * self.E + gg[:, None] * self.F

    def hess_gl(self, x, kappa):
        kappa = _vector(kappa, self.d_g, "kappa")
        if self.mode is ComplMode.AGGREGATE:
            cross = self.E.T @ self.F
            return kappa[0] * (cross + cross.T)
        weighted = kappa[:, None]
        return self.E.T @ (weighted * self.F) + self.F.T @ (weighted * self.E)


def make_canonical(pair_count):
    """Benchmark family: k complementary pairs pulled toward all-ones.

    min 0.5*||xh - 1||^2 + 0.5*||xt - 1||^2  s.t.  0 <= xh _|_ xt >= 0,
    with x = (xh, xt).  Every local minimum sets one member of each pair
    to 1 and the other to 0, with objective 0.5 * pair_count.

    Complementarity is posed componentwise (one row xh_i * xt_i = 0 per
    pair), the literal reading of the perp notation.  The aggregate
    scalar xh^T xt = 0 describes the same feasible set under the sign
    constraints, but it is a strictly weaker statement along the road to
    a solution: once the barrier weight has decayed, iterates can zero
    the aggregate sum with canceling positive and negative products and
    stall on a sign-infeasible manifold where the objective equals the
    optimal value exactly.  Componentwise rows give each pair its own
    multiplier and its own slack pair, which pins each pair to a vertex
    independently of the others.
    """
    k = int(pair_count)
    if k < 1:
        raise ValueError("pair_count must be at least 1")
    n = 2 * k
    eye = np.eye(k)
    zero = np.zeros((k, k))
    return QpccProblem(
        Q=np.eye(n),
        c=-np.ones(n),
        E=np.hstack([eye, zero]),
        e0=np.zeros(k),
        F=np.hstack([zero, eye]),
        f0=np.zeros(k),
        mode=ComplMode.COMPONENTWISE,
        bound_signs=np.full(n, BoundSign.NONNEG, dtype=np.int8),
        obj_const=float(k),
    )


def canonical_reference(x):
    """Round an iterate of the canonical family to its nearest local
    minimizer: per pair, the larger member goes to 1, the other to 0."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size % 2 != 0:
        raise ValueError("expected a flat vector of paired variables")
    k = x.size // 2
    ref = np.zeros_like(x)
    for i in range(k):
        if x[i] >= x[k + i]:
            ref[i] = 1.0
        else:
            ref[k + i] = 1.0
    return ref


@dataclass
class FiniteDiffReport:
    """Outcome of finite_diff_check: worst relative error per derivative."""

    errors: dict
    failures: list
    tol: float

    @property
    def passed(self):
        return not self.failures and all(v <= self.tol for v in self.errors.values())


def _fd_rel_error(analytic, approx):
    analytic = np.asarray(analytic, dtype=np.float64)
    approx = np.asarray(approx, dtype=np.float64)
    num = float(np.abs(analytic - approx).max(initial=0.0))
    den = max(1.0, float(np.abs(approx).max(initial=0.0)))
    return num / den


def finite_diff_check(oracle, x, step=1e-6, tol=1e-5):
    """Compare oracle derivatives against central finite differences.

    Checks grad_f against f, hess_f against grad_f, jac_g against g, and
    hess_gl (at kappa = ones) against jac_g^T kappa.  Non-finite oracle
    output is recorded as a failure with the offending entry index.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = oracle.n
    d = oracle.d_g
    kappa = np.ones(d)
    failures = []

    def probe(name, arr):
        arr = np.asarray(arr, dtype=np.float64)
        bad = np.argwhere(~np.isfinite(arr))
        if bad.size:
            failures.append(f"{name} non-finite at entry {tuple(bad[0])}")
        return arr

    f_grad = probe("grad_f", oracle.grad_f(x))
    f_hess = probe("hess_f", oracle.hess_f(x))
    g_jac = probe("jac_g", oracle.jac_g(x))
    gl_hess = probe("hess_gl", oracle.hess_gl(x, kappa))

    fd_grad = np.zeros(n)
    fd_hess = np.zeros((n, n))
    fd_jac = np.zeros((d, n))
    fd_gl = np.zeros((n, n))
    for i in range(n):
        xp = x.copy()
        xm = x.copy()
        xp[i] += step
        xm[i] -= step
        fd_grad[i] = (oracle.eval_f(xp) - oracle.eval_f(xm)) / (2.0 * step)
        fd_hess[:, i] = (oracle.grad_f(xp) - oracle.grad_f(xm)) / (2.0 * step)
        fd_jac[:, i] = (oracle.eval_g(xp) - oracle.eval_g(xm)) / (2.0 * step)
        fd_gl[:, i] = (
            oracle.jac_g(xp).T @ kappa - oracle.jac_g(xm).T @ kappa
        ) / (2.0 * step)

    for name, arr in (("fd_grad", fd_grad), ("fd_hess", fd_hess),
                      ("fd_jac", fd_jac), ("fd_gl", fd_gl)):
        bad = np.argwhere(~np.isfinite(arr))
        if bad.size:
            failures.append(f"{name} non-finite at entry {tuple(bad[0])}")

    errors = {
        "grad_f": _fd_rel_error(f_grad, fd_grad),
        "hess_f": _fd_rel_error(f_hess, fd_hess),
        "jac_g": _fd_rel_error(g_jac, fd_jac),
        "hess_gl": _fd_rel_error(gl_hess, fd_gl),
    }
    return FiniteDiffReport(errors=errors, failures=failures, tol=tol)


def qpcc_from_dict(data):
    """Build a QpccProblem from parsed JSON; row-major nested lists."""
    if not isinstance(data, dict):
        raise ValueError("problem file must hold a JSON object")
    required = {"Q", "c", "E", "e0", "F", "f0"}
    missing = sorted(required - data.keys())
    if missing:
        raise ValueError(f"problem file missing keys: {', '.join(missing)}")
    known = required | {"mode", "bounds", "obj_const"}
    unknown = sorted(data.keys() - known)
    if unknown:
        raise ValueError(f"problem file has unknown keys: {', '.join(unknown)}")
    bounds = data.get("bounds")
    if bounds is not None:
        bounds = bounds_from_names(bounds)
    try:
        return QpccProblem(
            Q=np.asarray(data["Q"], dtype=np.float64),
            c=np.asarray(data["c"], dtype=np.float64),
            E=np.asarray(data["E"], dtype=np.float64),
            e0=np.asarray(data["e0"], dtype=np.float64),
            F=np.asarray(data["F"], dtype=np.float64),
            f0=np.asarray(data["f0"], dtype=np.float64),
            mode=data.get("mode", "aggregate"),
            bound_signs=bounds,
            obj_const=data.get("obj_const", 0.0),
        )
    except (TypeError, ValueError) as exc:
        raise ValueError(f"invalid problem data: {exc}") from None


def load_problem(path):
    """Read a QpccProblem from a JSON file.

    json.JSONDecodeError (with line/column) propagates on malformed
    files; structurally invalid data raises ValueError.
    """
    with open(path, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    return qpcc_from_dict(data)
