"""Distributed solver for complementarity-constrained programs.

The pieces, bottom up: ``numkernel`` (dense factorizations and scalar
barrier kernels, numba-jitted with a numpy fallback), ``problem``
(oracle protocol and the quadratic test family), ``reformulate``
(penalty-barrier splitting with slack pairs and consensus coupling),
``subsolvers`` (the three parallel local solves and their sensitivity
assembly), ``coordinator`` (consensus QP, dual update, parameter
schedule, outer loop), ``baselines`` (centralized penalty-barrier and
vanilla barrier Newton), and ``cli`` (solve / bench / trace commands).
"""

from aladin_mpcc.errors import (
    AladinError,
    BarrierDomainError,
    InnerSolverFailure,
    LinearSolverSingular,
)

__version__ = "0.1.0"

__all__ = [
    "AladinError",
    "BarrierDomainError",
    "InnerSolverFailure",
    "LinearSolverSingular",
    "__version__",
]
