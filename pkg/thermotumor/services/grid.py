"""
Discrete operators on a Grid with homogeneous-Neumann closure: Laplacian,
quadrature, norms and the Helmholtz inverse N = (-Δ_h + I)^-1.

Norm convention: ||u||_V^2 = ||u||^2 + ||∇u||^2.
"""
import logging
from typing import Optional, Tuple

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg

from thermotumor.core.exceptions import LinearSolverError
from thermotumor.models.grid import Field
from thermotumor.services.constitutive import conductivity, kirchhoff

logger = logging.getLogger(__name__)

DEFAULT_LINEAR_TOL = 1e-10


def laplacian(u: Field) -> Field:
    return Field(u.grid, u.grid.laplacian_matrix @ u.values)


def integrate(u: Field) -> float:
    return float(np.sum(u.values) * u.grid.cell_volume)


def l2_norm(u: Field) -> float:
    return float(np.sqrt(np.sum(u.values ** 2) * u.grid.cell_volume))


def h1_seminorm(u: Field) -> float:
    total = sum(float(np.sum((diff @ u.values) ** 2)) for diff in u.grid.face_differences)
    return float(np.sqrt(total * u.grid.cell_volume))


def conjugate_gradient(
        matrix: sp.spmatrix,
        rhs: np.ndarray,
        tol: float = DEFAULT_LINEAR_TOL,
        x0: Optional[np.ndarray] = None,
        max_iter: Optional[int] = None) -> Tuple[np.ndarray, int]:
    """
    Jacobi-preconditioned CG for an SPD matrix.

    Stops when ||A x - b|| <= tol * ||b||; the iteration cap defaults to
    10 * (number of unknowns).
    """
    if not tol > 0:
        raise ValueError("tol must be > 0")
    n = rhs.shape[0]
    max_iter = 10 * n if max_iter is None else max_iter

    if not np.any(rhs):
        return np.zeros(n), 0

    inverse_diagonal = 1.0 / matrix.diagonal()
    preconditioner = LinearOperator((n, n), matvec=lambda r: inverse_diagonal * r)

    iterations = 0

    def count(_):
        nonlocal iterations
        iterations += 1

    solution, info = cg(
        matrix, rhs, x0=x0, rtol=tol, atol=0.0, maxiter=max_iter, M=preconditioner, callback=count)

    if info != 0 or not np.all(np.isfinite(solution)):
        residual = float(np.linalg.norm(matrix @ solution - rhs) / np.linalg.norm(rhs))
        raise LinearSolverError(
            f"conjugate gradients did not converge in {max_iter} iterations",
            context={"relative_residual": residual, "info": int(info), "unknowns": n},
        )
    return solution, iterations


def helmholtz_inverse(f: Field, tol: float = DEFAULT_LINEAR_TOL) -> Field:
    solution, _ = conjugate_gradient(f.grid.helmholtz_matrix, f.values, tol)
    return Field(f.grid, solution)


def dual_norm(u: Field, tol: float = DEFAULT_LINEAR_TOL) -> float:
    """||u||_* = sqrt(<u, N u>)"""
    pairing = integrate(u * helmholtz_inverse(u, tol))
    return float(np.sqrt(max(pairing, 0.0)))


def kirchhoff_flux_divergence(theta: Field, q: float, scale: float = 1.0) -> Field:
    """
    div(κ_face ∇θ) with κ_face the secant slope of K across each face
    (κ(θ_i) when θ_j = θ_i). Equals laplacian(K(θ)) up to roundoff.
    """
    values = theta.as_array()
    k_values = kirchhoff(values, q, scale)
    result = np.zeros_like(values)
    for axis, (n, h) in enumerate(zip(theta.grid.cells, theta.grid.spacing)):
        jump = np.diff(values, axis=axis) / h
        k_jump = np.diff(k_values, axis=axis) / h
        kappa_left = conductivity(np.take(values, np.arange(n - 1), axis=axis), q, scale)
        moving = jump != 0.0
        secant = np.where(moving, k_jump / np.where(moving, jump, 1.0), kappa_left)
        flux = secant * jump
        pad = [(0, 0)] * values.ndim
        pad[axis] = (1, 1)
        result += np.diff(np.pad(flux, pad), axis=axis) / h
    return Field(theta.grid, result)
