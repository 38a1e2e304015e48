import numpy as np
import pytest

from canonme.basis import build_basis
from canonme.canonical import CanonicalForm
from canonme.generator import LindbladTerms, transfer_from_lindblad


def random_matrix(d, rng):
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))


def random_hermitian(d, rng):
    X = random_matrix(d, rng)
    return 0.5 * (X + X.conj().T)


def random_traceless_hermitian(d, rng):
    H = random_hermitian(d, rng)
    return H - np.trace(H) / d * np.eye(d)


def random_unitary(n, rng):
    Q, R = np.linalg.qr(random_matrix(n, rng))
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_canonical(d, rng, n_channels=None):
    """Random traceless H, orthonormal traceless channels, rates in [-1, 1]."""
    n = d * d - 1
    k = n if n_channels is None else n_channels
    U = random_unitary(n, rng)[:, :k]
    basis = build_basis(d)
    ops = np.einsum("ik,iab->kab", U, basis.ops[1:])
    rates = rng.uniform(-1, 1, size=k)
    return CanonicalForm.from_channels(random_traceless_hermitian(d, rng), list(zip(rates, ops)))


def random_generator(d, rng, n_channels=3):
    """Lindblad-like generator with arbitrary (non-traceless) operators and signed rates."""
    chans = [(rng.uniform(-1, 1), random_matrix(d, rng)) for _ in range(n_channels)]
    return transfer_from_lindblad(LindbladTerms(random_hermitian(d, rng), chans))


@pytest.fixture
def rng():
    return np.random.default_rng(20240917)
