"""Numeric tolerances shared by every module.

All thresholds live in one record so that a caller can tighten or loosen
them in a single place::

    from canonme import policy
    policy.set_policy(policy.NumericPolicy(cond_max=1e6))
"""
from __future__ import annotations

import contextlib
import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class NumericPolicy:
    # relative tolerance on c - c^dagger
    herm_tol: float = 1e-12
    # relative tolerance on the trace condition C + C^dagger = -sum d_ij G_j G_i
    trace_tol: float = 1e-9
    # Hermiticity check applied to user supplied Hamiltonians / eigensolver input
    input_herm_tol: float = 1e-10
    # relative and absolute floor below which a canonical rate is dropped
    zero_rate_rel: float = 1e-10
    zero_rate_abs: float = 1e-14
    # relative eigenvalue gap treated as a degeneracy
    degenerate_rel: float = 1e-8
    # condition number above which a dynamical map is flagged singular
    cond_max: float = 1e8
    # relative threshold for counting a rate as negative
    neg_rel: float = 1e-10
    # channel renormalization window in assemble()
    renorm_tol: float = 1e-6
    # Jacobi sweeps before giving up
    jacobi_max_sweeps: int = 60


_current = NumericPolicy()


def get_policy() -> NumericPolicy:
    return _current


def set_policy(p: NumericPolicy) -> None:
    global _current
    _current = p


@contextlib.contextmanager
def using(**overrides):
    """Temporarily override fields of the active policy."""
    global _current
    saved = _current
    _current = dataclasses.replace(saved, **overrides)
    try:
        yield _current
    finally:
        _current = saved
