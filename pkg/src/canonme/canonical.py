"""Canonical Lindblad-type form of a time-local generator.

The decoherence block of the coefficient matrix is diagonalized; each
eigenpair (gamma_k, u_k) gives a channel ``L_k = sum_i u_k[i] G_{i+1}``.
Gauge: the largest-magnitude entry of every u_k is real positive, channels
are sorted by descending rate.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from . import policy
from .basis import OperatorBasis, build_basis, dim_from_superop
from .eig import EigenDecomposition, hermitian_eig
from .errors import ValidationError
from .generator import (commutator_superop, dissipator_superop, extract_c,
                        split)

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class CanonicalForm:
    H: np.ndarray
    rates: np.ndarray    # (K,)
    coeffs: np.ndarray   # (K, N-1); row k holds the traceless-basis coordinates of L_k
    dim: int
    time: float = 0.0

    @property
    def operators(self) -> np.ndarray:
        G = build_basis(self.dim).ops[1:]
        return np.einsum("ki,iab->kab", self.coeffs, G)

    @property
    def channels(self):
        return list(zip(self.rates.tolist(), self.operators))

    def __len__(self):
        return len(self.rates)

    @classmethod
    def from_channels(cls, H, channels, time=0.0):
        """Build canonical data from explicit (rate, L) pairs.

        Each L must be traceless with unit Hilbert-Schmidt norm; L within
        ``renorm_tol`` of unit norm is rescaled with a warning.
        """
        H = np.asarray(H, dtype=complex)
        d = H.shape[0]
        basis = build_basis(d)
        pol = policy.get_policy()
        rates, rows = [], []
        for rate, L in channels:
            L = np.asarray(L, dtype=complex)
            if L.shape != (d, d):
                raise ValidationError(f"channel operator has shape {L.shape}, expected {(d, d)}")
            if abs(np.trace(L)) > 1e-12 * max(1.0, np.linalg.norm(L)):
                raise ValidationError("channel operator is not traceless")
            nrm = np.linalg.norm(L)
            if abs(nrm - 1.0) > 1e-11:
                if abs(nrm - 1.0) > pol.renorm_tol:
                    raise ValidationError(f"channel operator has HS norm {nrm:.6g}, expected 1")
                logger.warning("renormalizing channel operator with HS norm %.12g", nrm)
                L = L / nrm
            rates.append(float(rate))
            rows.append(basis.coords(L)[1:])
        n = basis.size - 1
        return cls(H=H, rates=np.array(rates, dtype=float),
                   coeffs=np.array(rows, dtype=complex).reshape(len(rows), n),
                   dim=d, time=time)


def _fix_gauge(U: np.ndarray) -> np.ndarray:
    U = U.copy()
    for k in range(U.shape[1]):
        col = U[:, k]
        i = int(np.argmax(np.abs(col)))
        ph = col[i] / abs(col[i])
        U[:, k] = col / ph
        U[i, k] = abs(col[i])
    return U


def zero_rate_threshold(values) -> float:
    pol = policy.get_policy()
    scale = float(np.max(np.abs(values))) if len(values) else 0.0
    return max(pol.zero_rate_rel * scale, pol.zero_rate_abs)


def decompose(mat, basis: OperatorBasis | None = None):
    """Return (H, EigenDecomposition of the decoherence matrix) for a generator.

    Eigenpairs are gauge fixed and sorted by descending rate.
    """
    d = dim_from_superop(mat)
    basis = basis or build_basis(d)
    c = extract_c(mat, basis)
    sg = split(c, basis)
    eig = hermitian_eig(sg.dmat)
    order = np.argsort(-eig.values, kind="stable")
    U = _fix_gauge(eig.vectors[:, order])
    return sg.H, EigenDecomposition(eig.values[order], U)


def canonicalize(mat, basis: OperatorBasis | None = None, *, time: float = 0.0,
                 drop_zero: bool = True) -> CanonicalForm:
    d = dim_from_superop(mat)
    H, eig = decompose(mat, basis)
    values, U = eig.values, eig.vectors
    if drop_zero:
        keep = np.abs(values) >= zero_rate_threshold(values)
        values, U = values[keep], U[:, keep]
    return CanonicalForm(H=H, rates=values.copy(), coeffs=U.T.copy(), dim=d, time=time)


def assemble(cf: CanonicalForm, basis: OperatorBasis | None = None) -> np.ndarray:
    """Transfer matrix of -i[H, .] + sum_k gamma_k D[L_k]."""
    mat = commutator_superop(cf.H)
    for rate, L in zip(cf.rates, cf.operators):
        mat = mat + rate * dissipator_superop(L)
    return mat


def _max_angle(Qa, Qb) -> float:
    # largest principal angle via the sine, accurate for tiny angles
    Qa, _ = np.linalg.qr(Qa)
    Qb, _ = np.linalg.qr(Qb)
    R = Qb - Qa @ (Qa.conj().T @ Qb)
    s = np.linalg.norm(R, 2) if R.size else 0.0
    return float(np.arcsin(min(1.0, s)))


def degenerate_blocks(values, tol) -> list[list[int]]:
    blocks: list[list[int]] = []
    for i, v in enumerate(values):
        if blocks and abs(values[blocks[-1][-1]] - v) < tol:
            blocks[-1].append(i)
        else:
            blocks.append([i])
    return blocks


def compare_canonical(a: CanonicalForm, b: CanonicalForm) -> float:
    """Gauge-independent distance between two canonical forms.

    Max of the sorted-rate differences (missing channels count as zero rate)
    and the largest principal angle between matching degenerate channel
    subspaces.
    """
    if a.dim != b.dim:
        raise ValidationError("canonical forms have different dimensions")
    n = a.dim * a.dim - 1
    ka, kb = len(a.rates), len(b.rates)

    def padded(cf):
        r = np.zeros(n)
        r[:len(cf.rates)] = cf.rates
        return np.sort(r)[::-1]

    dist = float(np.max(np.abs(padded(a) - padded(b)))) if n else 0.0
    if ka != kb:
        return dist
    scale = max(np.max(np.abs(a.rates), initial=0.0), np.max(np.abs(b.rates), initial=0.0))
    tol = policy.get_policy().degenerate_rel * max(scale, 1e-300)
    ia = np.argsort(-a.rates, kind="stable")
    ib = np.argsort(-b.rates, kind="stable")
    ra = a.rates[ia]
    for block in degenerate_blocks(ra, tol):
        Qa = a.coeffs[ia[block]].T
        Qb = b.coeffs[ib[block]].T
        dist = max(dist, _max_angle(Qa, Qb))
    return dist
