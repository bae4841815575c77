"""Linear solvers for the assembled systems.

``solve_spd`` is a Jacobi-preconditioned conjugate gradient that can work on
the complement of the constant vector (pure Neumann problems).
``solve_general`` handles the nonsymmetric membrane step matrix.
"""
from __future__ import annotations

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DIRECT_THRESHOLD = 20000


class SolverError(RuntimeError):
    def __init__(self, message, residual=None, history=None):
        self.residual = residual
        self.history = list(history) if history is not None else []
        if residual is not None:
            message = f"{message} (final relative residual {residual:.3e})"
        super().__init__(message)


class IncompatibleRHSError(SolverError):
    pass


def _project(x):
    return x - x.mean()


def solve_spd(A, b, *, null_space=False, tol=1e-10, max_iter=None, x0=None, full_output=False,
              diagonal=None):
    """Solve ``A x = b`` for symmetric positive (semi)definite ``A``.

    With ``null_space=True`` the kernel is assumed to be the constant vector:
    ``b`` must be orthogonal to it (relative to ``||b||``, within ``tol``), and
    the returned solution has zero coefficient mean.  Convergence is declared
    when ``||b - A x|| <= tol * ||b||``.  ``A`` may be a ``LinearOperator``
    if ``diagonal`` (the Jacobi preconditioner) is supplied.
    """
    if not isinstance(A, spla.LinearOperator):
        A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    n = len(b)
    bnorm = np.linalg.norm(b)
    if null_space:
        if abs(b.sum()) / np.sqrt(n) > tol * max(bnorm, np.finfo(float).tiny):
            raise IncompatibleRHSError("right-hand side is not orthogonal to the constant null space")
        b = _project(b)
        bnorm = np.linalg.norm(b)
    stats = {"iterations": 0, "residual": 0.0, "history": []}
    if bnorm == 0.0:
        x = np.zeros(n)
        return (x, stats) if full_output else x
    if max_iter is None:
        max_iter = max(10 * n, 1000)

    diag = A.diagonal() if diagonal is None else np.asarray(diagonal, dtype=float)
    if np.any(diag <= 0):
        raise SolverError("matrix has a nonpositive diagonal entry; not SPD")
    inv_diag = 1.0 / diag

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if null_space:
        x = _project(x)
    r = b - A @ x
    if null_space:
        r = _project(r)
    z = inv_diag * r
    if null_space:
        z = _project(z)
    p = z.copy()
    rz = r @ z
    history = [np.linalg.norm(r) / bnorm]
    for it in range(1, max_iter + 1):
        if history[-1] <= tol:
            break
        Ap = A @ p
        if null_space:
            Ap = _project(Ap)
        pAp = p @ Ap
        if pAp <= 0:
            raise SolverError("nonpositive curvature encountered; matrix is not SPD", history[-1], history)
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        z = inv_diag * r
        if null_space:
            z = _project(z)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
        history.append(np.linalg.norm(r) / bnorm)
        stats["iterations"] = it
    # guard against drift of the recursive residual
    r_true = b - A @ x
    if null_space:
        r_true = _project(r_true)
        x = _project(x)
    res = np.linalg.norm(r_true) / bnorm
    stats.update(residual=res, history=history)
    if res > tol * 10:
        raise SolverError(f"CG did not converge in {max_iter} iterations", res, history)
    return (x, stats) if full_output else x


def solve_general(A, b, *, tol=1e-10, max_iter=None, direct_threshold=DIRECT_THRESHOLD, full_output=False):
    """Solve a nonsymmetric sparse system.

    Systems up to ``direct_threshold`` unknowns use sparse LU; larger ones use
    ILU-preconditioned BiCGSTAB.
    """
    A = sp.csc_matrix(A)
    b = np.asarray(b, dtype=float)
    n = len(b)
    bnorm = np.linalg.norm(b)
    stats = {"iterations": 0, "residual": 0.0, "history": [], "method": None}
    if bnorm == 0.0:
        x = np.zeros(n)
        return (x, stats) if full_output else x
    if n <= direct_threshold:
        stats["method"] = "splu"
        try:
            lu = spla.splu(A)
        except RuntimeError as err:
            raise SolverError(f"sparse LU failed: {err}") from None
        x = lu.solve(b)
    else:
        stats["method"] = "bicgstab"
        history = []
        try:
            ilu = spla.spilu(A, drop_tol=1e-5, fill_factor=10)
            M = spla.LinearOperator(A.shape, ilu.solve)
        except RuntimeError:
            diag = A.diagonal()
            if np.any(diag == 0):
                raise SolverError("zero diagonal and ILU failed; matrix is singular") from None
            M = sp.diags(1.0 / diag)

        def record(xk):
            history.append(np.linalg.norm(b - A @ xk) / bnorm)

        x, info = spla.bicgstab(A, b, rtol=tol, atol=0.0, maxiter=max_iter or 10 * n, M=M, callback=record)
        stats["iterations"] = len(history)
        stats["history"] = history
        if info != 0:
            res = np.linalg.norm(b - A @ x) / bnorm
            raise SolverError("BiCGSTAB did not converge", res, history)
    if not np.all(np.isfinite(x)):
        raise SolverError("solution is not finite; matrix is singular")
    res = np.linalg.norm(b - A @ x) / bnorm
    stats["residual"] = res
    if res > max(tol, 1e-12) * 10:
        raise SolverError("solution residual above tolerance", res, stats["history"])
    return (x, stats) if full_output else x
