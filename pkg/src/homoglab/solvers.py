"""Thin wrapper around SciPy Krylov methods for matrix-free spectral operators.

All operators in this package act on flattened complex coefficient vectors;
Hermitian positive-definite problems go through CG, everything else through
LGMRES.  A Fourier (constant-coefficient symbol) preconditioner is passed in
as a plain callable.  Convergence is always re-checked against the true
residual; a miss raises :class:`NoConvergence`.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse.linalg import LinearOperator, cg, lgmres

from .errors import NoConvergence


def solve_linear(
    apply_op,
    rhs: np.ndarray,
    *,
    hermitian: bool,
    rtol: float,
    maxiter: int,
    precond=None,
    x0: np.ndarray | None = None,
):
    """Solve apply_op(x) = rhs to relative residual ``rtol``.

    Returns (x, info) where info carries the achieved relative residual and
    the iteration count.
    """
    rhs = np.asarray(rhs, dtype=complex).ravel()
    n = rhs.size
    rhs_norm = np.linalg.norm(rhs)
    if rhs_norm == 0.0:
        return np.zeros_like(rhs), {"residual": 0.0, "iterations": 0}

    op = LinearOperator((n, n), matvec=apply_op, dtype=complex)
    M = LinearOperator((n, n), matvec=precond, dtype=complex) if precond else None

    count = {"it": 0}

    def _tick(_):
        count["it"] += 1

    # ask the backend for a little extra so the verified residual meets rtol
    backend_rtol = 0.2 * rtol
    if hermitian:
        x, _ = cg(op, rhs, x0=x0, rtol=backend_rtol, atol=0.0, maxiter=maxiter, M=M,
                  callback=_tick)
    else:
        x, _ = lgmres(op, rhs, x0=x0, rtol=backend_rtol, atol=0.0, maxiter=maxiter,
                      M=M, callback=_tick)

    residual = np.linalg.norm(apply_op(x) - rhs) / rhs_norm
    if not np.isfinite(residual) or residual > rtol:
        raise NoConvergence(
            f"Krylov solve stalled at relative residual {residual:.3e} "
            f"(target {rtol:.1e}, {count['it']} iterations)",
            residual=float(residual),
            iterations=count["it"],
        )
    return x, {"residual": float(residual), "iterations": count["it"]}
