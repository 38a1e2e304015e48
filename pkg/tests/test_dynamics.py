import numpy as np
import pytest
from scipy.linalg import expm

from canonme.canonical import canonicalize
from canonme.dynamics import (MapFamily, MemoryKernelSpec, generator_from_maps,
                              invertibility_report, propagate_memory_kernel,
                              reintegrate)
from canonme.errors import NumericalError, SingularMapError, ValidationError
from canonme.generator import commutator_superop
from canonme.models import (dephasing_kernel, dephasing_kernel_coherence,
                            dephasing_map, jc_family, jc_G)

SZ = np.diag([1.0, -1.0]).astype(complex)


def sin_dephasing_family(h, t1=2.0, t0=0.0):
    n = int(round((t1 - t0) / h))
    t = t0 + h * np.arange(n + 1)
    return MapFamily(t, np.array([dephasing_map(np.sin(x)) for x in t]))


def unitary_family(h, t1=1.0):
    n = int(round(t1 / h))
    t = h * np.arange(n + 1)
    return MapFamily(t, np.array([expm(commutator_superop(SZ) * x) for x in t]))


def test_identity_family_has_zero_generator():
    fam = MapFamily(np.linspace(0, 1, 11), np.array([np.eye(4)] * 11))
    fam.validate()
    for i in range(11):
        np.testing.assert_allclose(generator_from_maps(fam, i), 0, atol=1e-12)


def rate_error(h):
    fam = sin_dephasing_family(h)
    errs = []
    for i in range(len(fam.grid)):
        r = canonicalize(generator_from_maps(fam, i), drop_zero=False).rates
        errs.append(abs(r[np.argmax(np.abs(r))] - np.cos(fam.grid[i])))
    return max(errs)


def test_dephasing_rate_second_order():
    e1, e2 = rate_error(0.02), rate_error(0.01)
    assert e2 < 1e-3
    assert 4 * 0.8 <= e1 / e2 <= 4 * 1.2


def test_unitary_family_generator():
    errs = []
    for h in (0.02, 0.01):
        fam = unitary_family(h)
        target = commutator_superop(SZ)
        errs.append(max(np.abs(generator_from_maps(fam, i) - target).max() for i in range(len(fam.grid))))
    assert errs[1] < 1e-3
    assert 3.2 <= errs[0] / errs[1] <= 4.8


def test_nonuniform_grid_stencil():
    t = np.sort(np.concatenate([[0.0], np.random.default_rng(3).uniform(0, 1, 400), [1.0]]))
    fam = MapFamily(t, np.array([dephasing_map(np.sin(x)) for x in t]))
    for i in (0, 57, 200, len(t) - 1):
        r = canonicalize(generator_from_maps(fam, i), drop_zero=False).rates
        rate = r[np.argmax(np.abs(r))]
        h = max(t[min(i + 1, len(t) - 1)] - t[max(i - 1, 0)], 1e-3)
        assert rate == pytest.approx(np.cos(t[i]), abs=50 * h * h + 1e-6)


def test_refinement_invariance():
    # stencil error ~ h^2 / 6 at h = 2e-5 is far below 1e-9
    outs = []
    for h in (2e-5, 1e-5):
        t = 0.7 + h * np.arange(-2, 3)
        fam = MapFamily(t, np.array([dephasing_map(np.sin(x)) for x in t]))
        outs.append(generator_from_maps(fam, 2))
    assert np.abs(outs[0] - outs[1]).max() <= 1e-9


def test_reintegration_second_order():
    errs = []
    for h in (0.02, 0.01):
        fam = sin_dephasing_family(h)
        gens = np.array([generator_from_maps(fam, i) for i in range(len(fam.grid))])
        phi = reintegrate(fam, gens)
        errs.append(np.abs(phi[-1] - fam.maps[-1]).max())
    assert errs[1] < 1e-4
    assert 3.2 <= errs[0] / errs[1] <= 4.8


def test_invertibility_reports():
    fam = MapFamily([0.0, 1.0], [np.eye(4), dephasing_map(3.0)])
    r0 = invertibility_report(fam, 0)
    assert r0.condition_number == pytest.approx(1.0) and not r0.singular
    r1 = invertibility_report(fam, 1)
    assert r1.condition_number == pytest.approx(np.exp(3.0), rel=1e-12)
    assert not r1.singular
    assert invertibility_report(fam, 1, cond_max=10.0).singular


def test_jc_zero_is_singular():
    lam, g0 = 1.0, 5.0
    # first zero of G: tan(3 t / 2) = -3
    tstar = (np.pi - np.arctan(3.0)) / 1.5
    assert abs(jc_G(tstar, lam, g0)) < 1e-14
    grid = np.linspace(0, 2 * tstar, 5)
    fam = jc_family(grid, lam, g0)
    assert invertibility_report(fam, 2).singular
    assert not invertibility_report(fam, 1).singular
    with pytest.raises(SingularMapError) as err:
        generator_from_maps(fam, 2)
    assert err.value.report.condition_number > 1e8


def test_kernel_free_unitary_propagation():
    errs = []
    for h in (0.01, 0.005):
        t = h * np.arange(int(round(1 / h)) + 1)
        fam = propagate_memory_kernel(MemoryKernelSpec(SZ, lambda s, tt: np.zeros((len(s), 4, 4))), t)
        exact = expm(commutator_superop(SZ) * t[-1])
        errs.append(np.abs(fam.maps[-1] - exact).max())
    assert errs[1] < 1e-4
    assert 3.2 <= errs[0] / errs[1] <= 4.8


def kernel_coherence_error(h, k=1.0, lam=4.0, t1=2.0):
    t = h * np.arange(int(round(t1 / h)) + 1)
    fam = propagate_memory_kernel(dephasing_kernel(k, lam), t)
    fam.validate()
    c = fam.maps[:, 1, 1].real
    return np.max(np.abs(c - dephasing_kernel_coherence(t, k, lam)))


def test_kernel_matches_auxiliary_ode():
    e1, e2 = kernel_coherence_error(0.01), kernel_coherence_error(0.005)
    assert e2 < 1e-4
    assert 3.2 <= e1 / e2 <= 4.8


def test_auxiliary_oracle_is_consistent():
    # the closed-form oracle solves c' = -2k u, u' = c - lam u
    from scipy.integrate import solve_ivp
    k, lam = 1.0, 4.0
    sol = solve_ivp(lambda t, y: [-2 * k * y[1], y[0] - lam * y[1]], (0, 2), [1.0, 0.0],
                    rtol=1e-12, atol=1e-14, dense_output=True)
    t = np.linspace(0, 2, 9)
    np.testing.assert_allclose(dephasing_kernel_coherence(t, k, lam), sol.sol(t)[0], atol=1e-10)
    # underdamped branch as well
    sol = solve_ivp(lambda t, y: [-2 * 8.0 * y[1], y[0] - 1.0 * y[1]], (0, 2), [1.0, 0.0],
                    rtol=1e-12, atol=1e-14, dense_output=True)
    np.testing.assert_allclose(dephasing_kernel_coherence(t, 8.0, 1.0), sol.sol(t)[0], atol=1e-10)


def test_born_markov_limit():
    k, lam, h = 50.0, 100.0, 1e-3
    t = h * np.arange(601)
    fam = propagate_memory_kernel(dephasing_kernel(k, lam), t)
    rate = canonicalize(generator_from_maps(fam, 500)).rates[0]
    assert rate == pytest.approx(2 * k / lam, rel=0.05)


def test_underdamped_kernel_rates_blow_up():
    k, lam, h = 8.0, 1.0, 1e-3
    t = h * np.arange(1001)
    fam = propagate_memory_kernel(dephasing_kernel(k, lam), t)
    c = fam.maps[:, 1, 1].real
    cross = int(np.argmax(c < 0))
    assert cross > 0
    rates = []
    flagged = None
    for i in range(1, cross + 1):
        if invertibility_report(fam, i, cond_max=200.0).singular:
            flagged = i
            break
        rates.append(canonicalize(generator_from_maps(fam, i, cond_max=200.0)).rates[0])
    assert flagged is not None and flagged <= cross
    # k > lam^2 / 8: the coherence crosses zero and the rate diverges before it
    assert max(rates) > 20 * 2 * k / lam


def test_kernel_errors():
    t = np.linspace(0, 1, 11)
    with pytest.raises(NumericalError):
        propagate_memory_kernel(MemoryKernelSpec(np.zeros((2, 2)),
                                                 lambda s, tt: np.full((len(s), 4, 4), np.nan)), t)
    with pytest.raises(NumericalError):
        propagate_memory_kernel(dephasing_kernel(1e4, 0.0), t)
    with pytest.raises(ValidationError):
        propagate_memory_kernel(dephasing_kernel(1.0, 1.0), np.array([0.0, 0.1, 0.3]))
    with pytest.raises(ValidationError):
        propagate_memory_kernel(MemoryKernelSpec(np.zeros((2, 2)), lambda s, tt: np.zeros((4, 4))), t)


def test_map_family_validation():
    with pytest.raises(ValidationError):
        MapFamily([0.0, 0.0], [np.eye(4), np.eye(4)])
    with pytest.raises(ValidationError):
        MapFamily([0.0, 1.0], [np.eye(4)])
    fam = MapFamily([0.0, 1.0], [np.eye(4), 2 * np.eye(4)])
    with pytest.raises(ValidationError):
        fam.validate()
