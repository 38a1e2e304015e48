"""Cyclic Jacobi eigensolver for small dense Hermitian matrices."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import policy
from .errors import NotHermitianError, NumericalError


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    values: np.ndarray   # ascending, real
    vectors: np.ndarray  # columns are eigenvectors

    def reconstruct(self) -> np.ndarray:
        U = self.vectors
        return (U * self.values) @ U.conj().T


def _rotation(app, aqq, apq):
    """2x2 unitary W with W^dag [[app, apq], [apq*, aqq]] W diagonal."""
    r = abs(apq)
    phase = apq / r
    theta = (aqq - app) / (2.0 * r)
    t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
    if theta < 0:
        t = -t
    c = 1.0 / np.sqrt(t * t + 1.0)
    s = t * c
    # phase fix on q, then a real rotation
    return np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]]), t * r


def hermitian_eig(M, tol: float | None = None) -> EigenDecomposition:
    """Eigen-decompose a Hermitian matrix by cyclic Jacobi rotations.

    Eigenvalues are returned in ascending order.  The result is deterministic
    for identical input.
    """
    A = np.array(M, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise NotHermitianError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    pol = policy.get_policy()
    norm = np.linalg.norm(A)
    herm_tol = pol.input_herm_tol if tol is None else tol
    if np.linalg.norm(A - A.conj().T) > herm_tol * max(norm, np.finfo(float).tiny):
        raise NotHermitianError("matrix is not Hermitian")
    A = 0.5 * (A + A.conj().T)
    V = np.eye(n, dtype=complex)
    if n == 0 or norm == 0.0:
        return EigenDecomposition(np.zeros(n), V)

    eps = np.finfo(float).eps
    for _ in range(pol.jacobi_max_sweeps):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= eps * norm:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                app = A[p, p].real
                aqq = A[q, q].real
                # skip elements already negligible against both diagonals
                if abs(apq) <= eps * 1e-3 * (abs(app) + abs(aqq)) or abs(apq) < 1e-300:
                    A[p, q] = A[q, p] = 0.0
                    continue
                W, shift = _rotation(app, aqq, apq)
                idx = [p, q]
                A[:, idx] = A[:, idx] @ W
                A[idx, :] = W.conj().T @ A[idx, :]
                V[:, idx] = V[:, idx] @ W
                A[p, q] = A[q, p] = 0.0
                A[p, p] = app - shift
                A[q, q] = aqq + shift
    else:
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off > 1e3 * eps * norm:
            raise NumericalError(f"Jacobi iteration did not converge (off-diagonal norm {off:.3e})")

    values = np.diag(A).real.copy()
    order = np.argsort(values, kind="stable")
    return EigenDecomposition(values[order], V[:, order])
