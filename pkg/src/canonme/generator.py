"""Time-local generators as transfer matrices, and their coefficient matrices.

A generator acts as ``rho_dot = sum_ij c_ij G_i rho G_j`` in the operator
basis ``G``.  :func:`extract_c` recovers ``c`` from a transfer matrix and
:func:`split` separates it into a traceless Hamiltonian and the decoherence
block ``c_ij, i, j >= 1``.

Transfer matrices are plain complex ndarrays of shape (d*d, d*d) acting on
column-stacked operators.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import policy
from .basis import OperatorBasis, build_basis, dim_from_superop, sandwich, vec
from .errors import (NotHermitianError, NotHermiticityPreservingError,
                     NotTraceAnnihilatingError, ValidationError)


@dataclass(frozen=True, eq=False)
class GeneratorTerms:
    """rho_dot = sum_k A_k rho B_k^dagger."""
    terms: Sequence[tuple]
    time: float = 0.0


@dataclass(frozen=True, eq=False)
class LindbladTerms:
    hamiltonian: np.ndarray
    channels: Sequence[tuple] = ()  # (rate, operator)
    time: float = 0.0
    # each rate is the prefactor of (2 L rho L^dag - L^dag L rho - rho L^dag L),
    # i.e. half of the standard rate
    legacy_halved_rates: bool = False


@dataclass(frozen=True, eq=False)
class SplitGenerator:
    H: np.ndarray
    dmat: np.ndarray
    C: np.ndarray = field(repr=False)


def _as_square(A, d=None, name="operator"):
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"{name} must be square, got shape {A.shape}")
    if d is not None and A.shape[0] != d:
        raise ValidationError(f"{name} has dimension {A.shape[0]}, expected {d}")
    return A


def _check_hermitian(H, name="hamiltonian"):
    tol = policy.get_policy().input_herm_tol
    scale = max(1.0, np.max(np.abs(H)))
    if np.max(np.abs(H - H.conj().T)) > tol * scale:
        raise NotHermitianError(f"{name} is not Hermitian")


def transfer_from_terms(g: GeneratorTerms) -> np.ndarray:
    if not len(g.terms):
        raise ValidationError("no terms given; dimension is undefined")
    d = None
    mat = None
    for A, B in g.terms:
        A = _as_square(A, d, "A")
        d = A.shape[0]
        B = _as_square(B, d, "B")
        term = np.kron(B.conj(), A)
        mat = term if mat is None else mat + term
    return mat


def commutator_superop(H) -> np.ndarray:
    """Transfer matrix of rho -> -i[H, rho]."""
    H = np.asarray(H, dtype=complex)
    eye = np.eye(H.shape[0])
    return -1j * (np.kron(eye, H) - np.kron(H.T, eye))


def dissipator_superop(L) -> np.ndarray:
    """Transfer matrix of rho -> L rho L^dag - {L^dag L, rho}/2."""
    L = np.asarray(L, dtype=complex)
    eye = np.eye(L.shape[0])
    LdL = L.conj().T @ L
    return np.kron(L.conj(), L) - 0.5 * (np.kron(eye, LdL) + np.kron(LdL.T, eye))


def transfer_from_lindblad(l: LindbladTerms) -> np.ndarray:
    H = _as_square(l.hamiltonian, name="hamiltonian")
    _check_hermitian(H)
    mat = commutator_superop(H)
    d = H.shape[0]
    for rate, L in l.channels:
        L = _as_square(L, d, "channel operator")
        rate = float(rate)
        if l.legacy_halved_rates:
            rate *= 2.0
        mat = mat + rate * dissipator_superop(L)
    return mat


def _tensor4(mat, d):
    # mat[b'd + a', bd + a] -> T[b', a', b, a]
    return np.asarray(mat).reshape(d, d, d, d)


def extract_c(mat, basis: OperatorBasis | None = None, check: bool = True) -> np.ndarray:
    """Coefficient matrix c_ij = <kron(G_j.T, G_i), mat>_HS."""
    d = dim_from_superop(mat)
    basis = basis or build_basis(d)
    if basis.dim != d:
        raise ValidationError(f"basis dimension {basis.dim} does not match generator dimension {d}")
    G = basis.ops
    T = _tensor4(mat, d)
    c = np.einsum("iAa,jbB,BAba->ij", G.conj(), G.conj(), T, optimize=True)
    if check:
        tol = policy.get_policy().herm_tol
        scale = max(1.0, np.linalg.norm(c))
        err = np.linalg.norm(c - c.conj().T)
        if err > tol * scale:
            raise NotHermiticityPreservingError(
                f"coefficient matrix is not Hermitian (|c - c^dag| = {err:.3e}); "
                "the generator does not preserve Hermiticity")
    return c


def transfer_from_c(c, basis: OperatorBasis) -> np.ndarray:
    """Inverse of :func:`extract_c`: sum_ij c_ij kron(G_j.T, G_i)."""
    d = basis.dim
    G = basis.ops
    T = np.einsum("ij,iAa,jbB->BAba", np.asarray(c), G, G, optimize=True)
    return T.reshape(d * d, d * d)


def _split_parts(c, basis):
    d = basis.dim
    G = basis.ops
    sd = np.sqrt(d)
    C = 0.5 * c[0, 0] / d * np.eye(d) + np.einsum("i,iab->ab", c[1:, 0] / sd, G[1:])
    dmat = c[1:, 1:].copy()
    # sum_ij d_ij G_j G_i
    K = np.einsum("ij,jab,ibc->ac", dmat, G[1:], G[1:], optimize=True)
    return C, dmat, K


def split(c, basis: OperatorBasis | None = None) -> SplitGenerator:
    c = np.asarray(c, dtype=complex)
    n = c.shape[0]
    d = int(round(np.sqrt(n)))
    basis = basis or build_basis(d)
    if c.shape != (basis.size, basis.size):
        raise ValidationError(f"c has shape {c.shape}, expected {(basis.size, basis.size)}")
    pol = policy.get_policy()
    scale = max(1.0, np.linalg.norm(c))
    if np.linalg.norm(c - c.conj().T) > pol.herm_tol * scale:
        raise NotHermiticityPreservingError("coefficient matrix is not Hermitian")
    C, dmat, K = _split_parts(c, basis)
    resid = np.linalg.norm(C + C.conj().T + K)
    if resid > pol.trace_tol * scale:
        raise NotTraceAnnihilatingError(
            f"trace condition violated: |C + C^dag + sum d_ij G_j G_i| = {resid:.3e}")
    H = 0.5j * (C - C.conj().T)
    H = H - np.trace(H) / d * np.eye(d)
    H = 0.5 * (H + H.conj().T)
    return SplitGenerator(H=H, dmat=0.5 * (dmat + dmat.conj().T), C=C)


def assemble_split(H, dmat, basis: OperatorBasis) -> np.ndarray:
    """Transfer matrix of -i[H, .] + sum_ij d_ij (G_i . G_j - {G_j G_i, .}/2)."""
    d = basis.dim
    G = basis.ops[1:]
    eye = np.eye(d)
    jump = np.einsum("ij,iAa,jbB->BAba", dmat, G, G, optimize=True).reshape(d * d, d * d)
    K = np.einsum("ij,jab,ibc->ac", dmat, G, G, optimize=True)
    anti = np.kron(eye, K) + np.kron(K.T, eye)
    return commutator_superop(H) + jump - 0.5 * anti


def trace_residual(mat) -> float:
    """Norm of vec(I)^dag mat, zero for a trace-annihilating generator."""
    d = dim_from_superop(mat)
    return float(np.linalg.norm(vec(np.eye(d)).conj() @ np.asarray(mat)))


def hermiticity_residual(mat) -> float:
    """Norm of the anti-Hermitian part of the coefficient matrix."""
    c = extract_c(mat, check=False)
    return float(np.linalg.norm(c - c.conj().T))


def validate_generator(mat, basis=None) -> None:
    """Raise if ``mat`` is not Hermiticity preserving and trace annihilating."""
    split(extract_c(mat, basis), basis)


def project_physical(mat) -> np.ndarray:
    """Nearest Hermiticity-preserving, trace-annihilating transfer matrix.

    Symmetrizes the coefficient matrix and removes the trace-changing part
    rho -> I Tr[L(rho)] / d.
    """
    d = dim_from_superop(mat)
    c = extract_c(mat, check=False)
    basis = build_basis(d)
    herm = transfer_from_c(0.5 * (c + c.conj().T), basis)
    vI = vec(np.eye(d))
    return herm - np.outer(vI, vI.conj() @ herm) / d


def change_picture(mat, V, Vdot=None) -> np.ndarray:
    """Generator seen in the frame rho' = V rho V^dag.

    ``L' = U L U^-1 + (rho' -> Vdot V^dag rho' + rho' (Vdot V^dag)^dag)`` with
    ``U = kron(V.conj(), V)``.
    """
    V = np.asarray(V, dtype=complex)
    U = sandwich(V, V.conj().T)
    out = U @ np.asarray(mat) @ U.conj().T
    if Vdot is not None:
        W = np.asarray(Vdot) @ V.conj().T
        eye = np.eye(V.shape[0])
        out = out + np.kron(eye, W) + np.kron(W.conj(), eye)
    return out
