"""Dynamical-map families, time-local generators, memory-kernel propagation.

The time-local generator of a map family is ``Lambda_t = phi_dot(t) phi(t)^-1``
with ``phi_dot`` from second-order finite differences; the inverse is never
formed explicitly.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import policy
from .basis import dim_from_superop, vec
from .errors import (NotTraceAnnihilatingError, NumericalError,
                     SingularMapError, ValidationError)
from .generator import commutator_superop, hermiticity_residual, project_physical


@dataclass(frozen=True)
class InvertibilityReport:
    time: float
    condition_number: float
    singular: bool


@dataclass(frozen=True, eq=False)
class MapFamily:
    grid: np.ndarray  # (M+1,)
    maps: np.ndarray  # (M+1, N, N)

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        maps = np.asarray(self.maps, dtype=complex)
        if grid.ndim != 1 or len(grid) < 2:
            raise ValidationError("a map family needs at least two grid points")
        if np.any(np.diff(grid) <= 0):
            raise ValidationError("grid must be strictly increasing")
        if maps.ndim != 3 or maps.shape[0] != len(grid) or maps.shape[1] != maps.shape[2]:
            raise ValidationError(f"maps have shape {maps.shape}, expected ({len(grid)}, N, N)")
        dim_from_superop(maps[0])
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "maps", maps)

    @property
    def dim(self) -> int:
        return dim_from_superop(self.maps[0])

    def __len__(self):
        return len(self.grid)

    def validate(self, tol: float = 1e-10) -> None:
        """Check phi(t0) = I and trace/Hermiticity preservation of every map."""
        n = self.maps.shape[1]
        if abs(self.grid[0]) > 0:
            raise ValidationError("map family grid must start at t = 0")
        if np.max(np.abs(self.maps[0] - np.eye(n))) > 100 * tol:
            raise ValidationError("phi at t = 0 is not the identity")
        vI = vec(np.eye(self.dim)).conj()
        for t, m in zip(self.grid, self.maps):
            scale = max(1.0, np.linalg.norm(m))
            if np.linalg.norm(vI @ m - vI) > tol * scale:
                raise ValidationError(f"map at t={t:g} is not trace preserving")
            if hermiticity_residual(m) > tol * scale:
                raise ValidationError(f"map at t={t:g} does not preserve Hermiticity")

    def index_of(self, t: float) -> int:
        i = int(np.argmin(np.abs(self.grid - t)))
        if not np.isclose(self.grid[i], t, rtol=0, atol=1e-12 * max(1.0, abs(t))):
            raise ValidationError(f"t={t!r} is not a grid point of the map family")
        return i

    def provider(self, cond_max: float | None = None) -> Callable[[float], np.ndarray]:
        """Generator as a function of grid time, via :func:`generator_from_maps`."""
        return lambda t: generator_from_maps(self, self.index_of(t), cond_max=cond_max)


@dataclass(frozen=True, eq=False)
class MemoryKernelSpec:
    """Kernel K(s, t) of rho_dot = -i[H, rho] + int_0^t K(s, t) rho(s) ds.

    ``kernel(s, t)`` receives an array of times ``s`` and returns an array of
    transfer matrices of shape (len(s), N, N).
    """
    H: np.ndarray
    kernel: Callable[[np.ndarray, float], np.ndarray]


def condition_number(mat) -> float:
    s = np.linalg.svd(np.asarray(mat), compute_uv=False)
    if s[-1] == 0.0 or not np.isfinite(s[-1]):
        return float("inf")
    return float(s[0] / s[-1])


def report_for(mat, time: float, cond_max: float | None = None) -> InvertibilityReport:
    cond_max = policy.get_policy().cond_max if cond_max is None else cond_max
    cond = condition_number(mat)
    return InvertibilityReport(time=float(time), condition_number=cond, singular=bool(cond > cond_max))


def invertibility_report(f: MapFamily, i: int, cond_max: float | None = None) -> InvertibilityReport:
    return report_for(f.maps[i], f.grid[i], cond_max)


def _stencil(t: np.ndarray, i: int) -> tuple[list[int], np.ndarray]:
    """Indices and weights of the second-order first-derivative stencil at t[i]."""
    M = len(t) - 1
    if M < 2:
        raise ValidationError("at least three grid points are needed for derivatives")
    if i == 0:
        idx = [0, 1, 2]
    elif i == M:
        idx = [M - 2, M - 1, M]
    else:
        idx = [i - 1, i, i + 1]
    x0, x1, x2 = t[idx]
    x = t[i]
    # derivative of the Lagrange basis polynomials at x
    w = np.array([
        ((x - x1) + (x - x2)) / ((x0 - x1) * (x0 - x2)),
        ((x - x0) + (x - x2)) / ((x1 - x0) * (x1 - x2)),
        ((x - x0) + (x - x1)) / ((x2 - x0) * (x2 - x1)),
    ])
    return idx, w


def map_derivative(f: MapFamily, i: int) -> np.ndarray:
    idx, w = _stencil(f.grid, i)
    return np.einsum("k,kab->ab", w, f.maps[idx])


def generator_from_phi(phi, phi_dot, time: float = 0.0, cond_max: float | None = None) -> np.ndarray:
    """Lambda = phi_dot phi^-1 by a linear solve, checked and projected.

    Raises :class:`SingularMapError` when ``phi`` is too ill-conditioned.
    """
    rep = report_for(phi, time, cond_max)
    if rep.singular:
        raise SingularMapError(rep)
    # X phi = phi_dot  <=>  phi^T X^T = phi_dot^T
    lam = np.linalg.solve(np.asarray(phi).T, np.asarray(phi_dot).T).T
    if not np.all(np.isfinite(lam)):
        raise SingularMapError(rep, f"non-finite generator at t={time:g}")
    scale = max(1.0, np.linalg.norm(lam))
    tol = 1e-8 * scale * rep.condition_number
    d = dim_from_superop(lam)
    tr = np.linalg.norm(vec(np.eye(d)).conj() @ lam)
    if tr > tol:
        raise NotTraceAnnihilatingError(
            f"generator at t={time:g} is not trace annihilating (residual {tr:.3e})")
    herm = hermiticity_residual(lam)
    if herm > tol:
        raise ValidationError(f"generator at t={time:g} does not preserve Hermiticity (residual {herm:.3e})")
    return project_physical(lam)


def generator_from_maps(f: MapFamily, i: int, cond_max: float | None = None) -> np.ndarray:
    if not 0 <= i < len(f.grid):
        raise IndexError(f"grid index {i} out of range")
    return generator_from_phi(f.maps[i], map_derivative(f, i), f.grid[i], cond_max)


def reintegrate(f: MapFamily, generators) -> np.ndarray:
    """Integrate phi_dot = Lambda phi over the family's grid with Heun's method.

    ``generators`` holds Lambda at every grid point.  Returns the maps.
    """
    t = f.grid
    out = np.empty_like(f.maps)
    out[0] = np.eye(f.maps.shape[1])
    for i in range(len(t) - 1):
        h = t[i + 1] - t[i]
        k1 = generators[i] @ out[i]
        k2 = generators[i + 1] @ (out[i] + h * k1)
        out[i + 1] = out[i] + 0.5 * h * (k1 + k2)
    return out


def propagate_memory_kernel(spec: MemoryKernelSpec, grid) -> MapFamily:
    """Solve Phi' = L_H Phi + int_0^t K(s, t) Phi(s) ds, Phi(0) = I.

    Heun predictor-corrector in time with trapezoidal quadrature of the
    memory integral on the same uniform grid.  Second order overall.
    """
    t = np.asarray(grid, dtype=float)
    if t.ndim != 1 or len(t) < 2:
        raise ValidationError("grid needs at least two points")
    h = t[1] - t[0]
    if h <= 0 or not np.allclose(np.diff(t), h, rtol=1e-9, atol=0):
        raise ValidationError("memory-kernel propagation needs a uniform increasing grid")
    if t[0] != 0.0:
        raise ValidationError("grid must start at t = 0")
    LH = commutator_superop(spec.H)
    n = LH.shape[0]
    M = len(t) - 1
    phi = np.empty((M + 1, n, n), dtype=complex)
    phi[0] = np.eye(n)

    def kernel_at(tn, upto):
        K = np.asarray(spec.kernel(t[:upto], tn), dtype=complex)
        if K.shape != (upto, n, n):
            raise ValidationError(f"kernel returned shape {K.shape}, expected {(upto, n, n)}")
        if not np.all(np.isfinite(K)):
            raise NumericalError(f"non-finite kernel values at t={tn:g}")
        return K

    def memory(K, upto, last):
        # trapezoid over s_0..s_upto, with ``last`` standing in for Phi(s_upto)
        if upto == 0:
            return np.zeros((n, n), dtype=complex)
        W = K.copy()
        W[0] *= 0.5
        W[-1] *= 0.5
        body = W[:-1].transpose(1, 0, 2).reshape(n, -1) @ phi[:upto].reshape(-1, n)
        return h * (body + W[-1] @ last)

    F = LH @ phi[0]
    for i in range(M):
        pred = phi[i] + h * F
        K = kernel_at(t[i + 1], i + 2)
        F_pred = LH @ pred + memory(K, i + 1, pred)
        phi[i + 1] = phi[i] + 0.5 * h * (F + F_pred)
        if not np.all(np.isfinite(phi[i + 1])):
            raise NumericalError(f"propagation produced non-finite values at t={t[i + 1]:g}; reduce the step")
        if np.linalg.norm(phi[i + 1] - pred) > 0.5 * max(1.0, np.linalg.norm(phi[i])):
            raise NumericalError(
                f"predictor-corrector diverging at t={t[i + 1]:g} (h={h:g}); reduce the step")
        F = LH @ phi[i + 1] + memory(K, i + 1, phi[i + 1])
    return MapFamily(t, phi)
