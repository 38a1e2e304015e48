"""Canonical rates along a time grid and the non-Markovianity measures built on them.

Rates are followed as branches: eigenvectors at consecutive times are
matched by an optimal bijective assignment on squared overlaps, after
aligning each degenerate eigenspace with the previous branch vectors.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import policy
from .basis import build_basis, dim_from_superop
from .canonical import decompose, degenerate_blocks, zero_rate_threshold
from .dynamics import InvertibilityReport
from .errors import SingularMapError, ValidationError
from .generator import commutator_superop, dissipator_superop

Provider = Callable[[float], np.ndarray]


@dataclass(frozen=True, eq=False)
class RateSeries:
    grid: np.ndarray            # (T,)
    rates: np.ndarray           # (T, K), NaN at flagged times
    branch_vectors: np.ndarray  # (T, K, K) complex; [i, k] is the coefficient vector of branch k
    hamiltonians: np.ndarray    # (T, d, d)
    singular_flags: np.ndarray  # (T,) bool
    reports: dict = field(default_factory=dict)  # index -> InvertibilityReport

    @property
    def dim(self) -> int:
        return self.hamiltonians.shape[1]

    @property
    def n_branches(self) -> int:
        return self.rates.shape[1]

    def operators(self, i: int) -> np.ndarray:
        G = build_basis(self.dim).ops[1:]
        return np.einsum("ki,iab->kab", self.branch_vectors[i], G)

    def generator(self, i: int) -> np.ndarray:
        """Reassemble the generator at grid index ``i`` from tracked data."""
        mat = commutator_superop(self.hamiltonians[i])
        for rate, L in zip(self.rates[i], self.operators(i)):
            mat = mat + rate * dissipator_superop(L)
        return mat


@dataclass(frozen=True, eq=False)
class MeasureReport:
    grid: np.ndarray
    f_series: np.ndarray         # (T, K)
    f_sum_series: np.ndarray     # (T,)
    F_running: np.ndarray        # (T, K)
    F_values: np.ndarray         # (K,)
    F_sum: float
    F_sum_running: np.ndarray    # (T,)
    nm_index_series: np.ndarray  # (T,) int
    excluded_intervals: list
    equivalents: Optional[dict] = None


def thread_count(threads: int | None = None) -> int:
    """Resolve a worker count; ``None`` reads ``CANONME_THREADS`` (0 = auto)."""
    if threads is None:
        try:
            threads = int(os.environ.get("CANONME_THREADS", "1"))
        except ValueError:
            raise ValidationError("CANONME_THREADS must be an integer") from None
    if threads < 0:
        raise ValidationError("thread count must be >= 0")
    if threads == 0:
        threads = os.cpu_count() or 1
    return threads


def _evaluate(provider, t, basis):
    try:
        mat = provider(t)
    except SingularMapError as exc:
        return exc.report
    H, eig = decompose(mat, basis)
    return H, eig.values, eig.vectors


def _align_clusters(values, U, P, tol):
    """Rotate degenerate eigenspaces of U towards the previous branch vectors P."""
    U = U.copy()
    for block in degenerate_blocks(values, tol):
        if len(block) < 2:
            continue
        Q = U[:, block]
        W = Q.conj().T @ P
        pick = np.argsort(-np.linalg.norm(W, axis=0), kind="stable")[:len(block)]
        pick.sort()
        X, _, Yh = np.linalg.svd(W[:, pick])
        U[:, block] = Q @ (X @ Yh)
    return U


def _blocks_unsorted(values, tol):
    order = np.argsort(values, kind="stable")
    return [order[b] for b in degenerate_blocks(values[order], tol)]


def _cluster_ids(values, tol):
    ids = np.empty(len(values), dtype=int)
    for n, b in enumerate(degenerate_blocks(values, tol)):
        ids[b] = n
    return ids


def _resolve_previous(prev_rates, P, values, U, tol, determined):
    """Rotate degenerate blocks of the previous branch vectors P towards U.

    When a degenerate block splits, labels of branches that entered it by a
    crossing follow their own history (best overlap).  Labels of branches
    that have been degenerate since tracking started carry no information;
    they take the emerging eigenvectors in order of decreasing rate, which
    does not depend on the basis the eigensolver happened to return.
    Returns the rotated P and the list of ``(block, R)`` rotations applied
    (P[:, block] @ R).
    """
    P = P.copy()
    rotations = []
    cluster = _cluster_ids(values, tol)
    for block in _blocks_unsorted(prev_rates, tol):
        if len(block) < 2:
            continue
        Q = P[:, block]
        W = Q.conj().T @ U
        pick = np.sort(np.argsort(-np.linalg.norm(W, axis=0), kind="stable")[:len(block)])
        if len(set(cluster[pick])) == 1:
            continue  # still one degenerate eigenspace; nothing to decide yet
        _, cols = linear_sum_assignment(-np.abs(W[:, pick]) ** 2)
        order = pick[cols]
        free = np.flatnonzero(~determined[block])
        if len(free):
            free = free[np.argsort(block[free])]
            order[free] = np.sort(order[free])  # U columns are sorted by decreasing rate
        X, _, Yh = np.linalg.svd(W[:, order])
        R = X @ Yh
        P[:, block] = Q @ R
        rotations.append((block, R))
    return P, rotations


def canonical_series(provider: Provider, grid, threads: int | None = None) -> RateSeries:
    """Canonicalize at every grid time and track rate branches.

    ``provider(t)`` returns the generator at time t, or raises
    :class:`SingularMapError`; such times are flagged and tracking restarts
    at the next regular time.  All N-1 branches are kept.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise ValidationError("grid must be a non-empty 1-d sequence")
    workers = thread_count(threads)

    def job(t):
        return _evaluate(provider, t, None)

    if workers > 1 and len(grid) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(job, grid))
    else:
        results = [job(t) for t in grid]

    d = None
    for r in results:
        if not isinstance(r, InvertibilityReport):
            d = r[0].shape[0]
            break
    if d is None:
        raise SingularMapError(results[0], "provider is singular at every grid point")
    n = d * d - 1
    T = len(grid)
    rates = np.full((T, n), np.nan)
    vecs = np.full((T, n, n), np.nan, dtype=complex)
    hams = np.full((T, d, d), np.nan, dtype=complex)
    flags = np.zeros(T, dtype=bool)
    reports = {}

    scale = max((np.max(np.abs(r[1]), initial=0.0) for r in results
                 if not isinstance(r, InvertibilityReport)), default=0.0)
    tol = policy.get_policy().degenerate_rel * max(scale, 1e-300)

    prev = None  # (n, n) columns are branch vectors
    for i, r in enumerate(results):
        if isinstance(r, InvertibilityReport):
            flags[i] = True
            reports[i] = r
            prev = None
            continue
        H, values, U = r
        if H.shape != (d, d):
            raise ValidationError("provider changed dimension along the grid")
        hams[i] = H
        if prev is None:
            assign = np.arange(n)
            start = i
            determined = np.zeros(n, dtype=bool)
        else:
            U = _align_clusters(values, U, prev, tol)
            prev, rotations = _resolve_previous(rates[i - 1], prev, values, U, tol, determined)
            for block, R in rotations:
                # carry the rotation back while the block stayed degenerate
                j = i - 1
                while j >= start and np.ptp(rates[j, block]) <= tol:
                    vecs[j, block] = (vecs[j, block].T @ R).T
                    j -= 1
            overlap = np.abs(prev.conj().T @ U) ** 2
            _, assign = linear_sum_assignment(-overlap)
        rates[i] = values[assign]
        vecs[i] = U[:, assign].T
        prev = U[:, assign]
        # a branch is determined once it has been alone in its eigenspace
        sizes = np.bincount(_cluster_ids(values, tol))
        determined |= sizes[_cluster_ids(values, tol)[assign]] == 1
    return RateSeries(grid=grid, rates=rates, branch_vectors=vecs, hamiltonians=hams,
                      singular_flags=flags, reports=reports)


def f_of(series: RateSeries) -> np.ndarray:
    """f_k(t) = min(gamma_k(t), 0); NaN at flagged times."""
    return np.minimum(series.rates, 0.0)


def _valid_intervals(series):
    ok = ~series.singular_flags
    return ok[:-1] & ok[1:]


def excluded_intervals(series: RateSeries) -> list[tuple[float, float]]:
    """Merged grid intervals dropped from integrals because an endpoint is flagged."""
    out: list[tuple[float, float]] = []
    good = _valid_intervals(series)
    g = series.grid
    for i in np.flatnonzero(~good):
        a, b = float(g[i]), float(g[i + 1])
        if out and out[-1][1] == a:
            out[-1] = (out[-1][0], b)
        else:
            out.append((a, b))
    return out


def _running_trapezoid(series, values):
    grid = series.grid
    if len(grid) < 2:
        raise ValidationError("integrals need at least two grid points")
    h = np.diff(grid)
    good = _valid_intervals(series)
    pieces = 0.5 * h[:, None] * (values[:-1] + values[1:])
    pieces[~good] = 0.0
    running = np.zeros_like(values)
    running[1:] = np.cumsum(pieces, axis=0)
    return running


def F_of(series: RateSeries) -> tuple[np.ndarray, np.ndarray]:
    """Trapezoidal integrals of f_k from the first grid point.

    Returns ``(finals, running)`` with ``finals`` of shape (K,) and
    ``running`` of shape (T, K).  Flagged intervals are skipped.
    """
    running = _running_trapezoid(series, f_of(series))
    return running[-1].copy(), running


def default_tol_neg(series: RateSeries) -> float:
    finite = series.rates[np.isfinite(series.rates)]
    scale = float(np.max(np.abs(finite))) if finite.size else 0.0
    pol = policy.get_policy()
    # absolute floor so roundoff-level rates of a trivial generator never count
    return max(pol.neg_rel * scale, pol.zero_rate_abs)


def nm_index(series: RateSeries, tol_neg: float | None = None) -> np.ndarray:
    """Number of branches with gamma_k < -tol_neg at each time (0 where flagged)."""
    if tol_neg is None:
        tol_neg = default_tol_neg(series)
    if tol_neg <= 0:
        raise ValidationError("tol_neg must be positive")
    r = np.where(np.isfinite(series.rates), series.rates, 0.0)
    return np.sum(r < -tol_neg, axis=1).astype(int)


def single_channel_equivalents(series: RateSeries, drift_tol: float = 1e-8) -> dict | None:
    """Single-channel trace-distance and entanglement equivalents.

    Applies only when exactly one branch is ever nonzero and its channel
    operator does not move; returns ``None`` otherwise.
    """
    ok = ~series.singular_flags
    if not ok.any():
        return None
    r = series.rates[ok]
    thresh = zero_rate_threshold(r.ravel())
    active = np.flatnonzero(np.max(np.abs(r), axis=0) >= thresh)
    if len(active) != 1:
        return None
    k = int(active[0])
    # the operator only matters while the rate is nonzero
    live = ok & (np.abs(np.nan_to_num(series.rates[:, k])) >= thresh)
    U = series.branch_vectors[live, k]
    overlaps = np.abs(U @ U[0].conj())
    if np.max(np.abs(1.0 - overlaps)) > drift_tol:
        return None
    gamma = series.rates[:, k]
    integral = _running_trapezoid(series, gamma[:, None])[:, 0]
    trace_distance = -gamma * np.exp(-integral)
    F_k = _running_trapezoid(series, np.minimum(gamma, 0.0)[:, None])[-1, 0]
    return {
        "branch": k,
        "trace_distance": trace_distance,
        "entanglement": float(-2.0 * F_k),
    }


def measure_report(series: RateSeries, tol_neg: float | None = None) -> MeasureReport:
    f = f_of(series)
    finals, running = F_of(series)
    return MeasureReport(
        grid=series.grid,
        f_series=f,
        f_sum_series=f.sum(axis=1),
        F_running=running,
        F_values=finals,
        F_sum=float(finals.sum()),
        F_sum_running=running.sum(axis=1),
        nm_index_series=nm_index(series, tol_neg),
        excluded_intervals=excluded_intervals(series),
        equivalents=single_channel_equivalents(series),
    )
