"""Orthonormal Hermitian operator basis and vectorization conventions.

The basis is the generalized Gell-Mann set scaled to unit Hilbert-Schmidt
norm.  Ordering is fixed:

    index 0                      identity / sqrt(d)
    next d(d-1)/2                symmetric  (E_jk + E_kj) / sqrt(2),  j < k row-major
    next d(d-1)/2                antisymmetric  -i (E_jk - E_kj) / sqrt(2),  j < k row-major
    last d-1                     diagonal, unit norm

For d = 2 this gives (I, sx, sy, sz) / sqrt(2).

Vectorization stacks columns, so ``vec(A @ rho @ B) == kron(B.T, A) @ vec(rho)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidDimensionError, ValidationError


@dataclass(frozen=True, eq=False)
class OperatorBasis:
    dim: int
    ops: np.ndarray  # shape (d*d, d, d)

    @property
    def size(self) -> int:
        return self.dim * self.dim

    def __len__(self):
        return self.size

    def __getitem__(self, m):
        return self.ops[m]

    def coords(self, A) -> np.ndarray:
        """Coordinates Tr[G_m A]; real for Hermitian A."""
        A = np.asarray(A)
        if A.shape != (self.dim, self.dim):
            raise ValidationError(f"expected {self.dim}x{self.dim} operator, got {A.shape}")
        # Tr[G_m A] = sum_ab G_m[b, a] A[a, b]
        return np.einsum("mba,ab->m", self.ops, A)

    def operator(self, coords) -> np.ndarray:
        coords = np.asarray(coords)
        if coords.shape != (self.size,):
            raise ValidationError(f"expected {self.size} coordinates, got {coords.shape}")
        return np.einsum("m,mab->ab", coords, self.ops)

    def superops(self) -> np.ndarray:
        """Array S[i, j] = kron(G_j.T, G_i), the transfer matrix of rho -> G_i rho G_j."""
        return _superops(self.dim)


def _gell_mann(d: int) -> np.ndarray:
    ops = [np.eye(d, dtype=complex) / np.sqrt(d)]
    pairs = [(j, k) for j in range(d) for k in range(j + 1, d)]
    for j, k in pairs:
        g = np.zeros((d, d), dtype=complex)
        g[j, k] = g[k, j] = 1 / np.sqrt(2)
        ops.append(g)
    for j, k in pairs:
        g = np.zeros((d, d), dtype=complex)
        g[j, k] = -1j / np.sqrt(2)
        g[k, j] = 1j / np.sqrt(2)
        ops.append(g)
    for l in range(1, d):
        diag = np.zeros(d)
        diag[:l] = 1.0
        diag[l] = -l
        ops.append(np.diag(diag / np.sqrt(l * (l + 1))).astype(complex))
    out = np.array(ops)
    out.setflags(write=False)
    return out


@lru_cache(maxsize=None)
def _cached(d: int) -> OperatorBasis:
    return OperatorBasis(d, _gell_mann(d))


@lru_cache(maxsize=None)
def _superops(d: int) -> np.ndarray:
    G = _cached(d).ops
    n = d * d
    S = np.empty((n, n, n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            S[i, j] = np.kron(G[j].T, G[i])
    S.setflags(write=False)
    return S


def build_basis(d: int) -> OperatorBasis:
    """Return the orthonormal Hermitian basis for Hilbert-space dimension ``d``."""
    if not isinstance(d, (int, np.integer)) or isinstance(d, bool) or d < 2:
        raise InvalidDimensionError(f"dimension must be an integer >= 2, got {d!r}")
    return _cached(int(d))


def hs_inner(A, B) -> complex:
    """Hilbert-Schmidt inner product Tr[A^dagger B]."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        raise ValidationError(f"shape mismatch {A.shape} vs {B.shape}")
    return complex(np.vdot(A, B))


def vec(A) -> np.ndarray:
    """Column-stacking vectorization: ``vec(A)[b*d + a] == A[a, b]``."""
    A = np.asarray(A)
    return A.reshape(-1, order="F")


def unvec(v) -> np.ndarray:
    v = np.asarray(v)
    n = v.shape[0]
    d = int(round(np.sqrt(n)))
    if v.ndim != 1 or d * d != n:
        raise ValidationError(f"length {n} is not a perfect square")
    return v.reshape((d, d), order="F")


def dim_from_superop(mat) -> int:
    n = np.shape(mat)[0]
    d = int(round(np.sqrt(n)))
    if np.shape(mat) != (n, n) or d * d != n or d < 2:
        raise InvalidDimensionError(f"transfer matrix must be d^2 x d^2 with d >= 2, got {np.shape(mat)}")
    return d


def apply(mat, rho) -> np.ndarray:
    """Apply a transfer matrix to an operator."""
    return unvec(np.asarray(mat) @ vec(rho))


def sandwich(A, B) -> np.ndarray:
    """Transfer matrix of rho -> A rho B."""
    return np.kron(np.asarray(B).T, np.asarray(A))


def validate_state(rho, tol: float = 1e-12) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValidationError("state must be a square matrix")
    if np.max(np.abs(rho - rho.conj().T)) > 10 * tol:
        raise ValidationError("state is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValidationError("state does not have unit trace")
    return rho
