"""Preconditioned conjugate gradients for the SPD elastic systems."""

from __future__ import annotations

import numpy as np

from .errors import SolverError


def pcg(A, b, *, rtol: float = 1e-10, x0=None, max_iter: int | None = None,
        diag=None):
    """Jacobi-preconditioned CG on the SPD system A x = b.

    Stops when ||b - A x|| <= rtol * ||b||; the iteration cap defaults to
    10 times the unknown count.  Returns (x, iterations, relative_residual)
    and raises SolverError when the cap is hit.
    """
    n = b.shape[0]
    if max_iter is None:
        max_iter = 10 * n
    b_norm = float(np.linalg.norm(b))
    if b_norm == 0.0:
        return np.zeros(n), 0, 0.0
    if diag is None:
        diag = A.diagonal()
    inv_diag = 1.0 / diag

    if x0 is None:
        x = np.zeros(n)
        r = b.copy()
    else:
        x = np.asarray(x0, dtype=float).copy()
        r = b - A @ x
    z = inv_diag * r
    p = z.copy()
    rz = float(r @ z)
    tol = rtol * b_norm

    k = 0
    while float(np.linalg.norm(r)) > tol:
        if k >= max_iter:
            raise SolverError(
                f"CG did not converge in {max_iter} iterations "
                f"(relative residual {np.linalg.norm(r) / b_norm:.3e})",
                residual=float(np.linalg.norm(r) / b_norm),
                iterations=k,
            )
        Ap = A @ p
        alpha = rz / float(p @ Ap)
        x += alpha * p
        r -= alpha * Ap
        z = inv_diag * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
        k += 1

    rel = float(np.linalg.norm(b - A @ x) / b_norm)
    return x, k, rel
