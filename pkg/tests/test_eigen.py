import numpy as np
import pytest

from snrqi import oracle
from snrqi.eigen import (DenseProblem, EigenConfig, TransportProblem, power_iteration,
                         rayleigh_quotient, rqi, shifted_inverse_iteration, solve_eigen)
from snrqi.errors import ConfigurationError, DegenerateQuotientError
from snrqi.fixtures import make_fixture
from snrqi.krylov import KrylovConfig
from snrqi.mge import MgeConfig
from snrqi.operators import TransportContext

from conftest import small_spec

TIGHT = EigenConfig(k_tol=1e-11, flux_tol=1e-9, max_eigen_iters=2000)
INNER = KrylovConfig(tol=1e-12, restart_m=30, max_iters=1000)


def _transport(spec, mge=None, krylov=INNER):
    return TransportProblem(TransportContext.from_problem(spec), krylov, mge)


def _dense_pair(seed, n=8):
    rng = np.random.default_rng(seed)
    A = np.diag(np.arange(1.0, n + 1) * 2.0) + rng.uniform(-0.1, 0.1, (n, n))
    B = np.eye(n) + rng.uniform(0.0, 0.05, (n, n))
    return A, B


def test_power_first_update_and_limit():
    p = DenseProblem(np.eye(2), np.diag([2.0, 1.0]))
    phi0 = np.ones(2) / np.sqrt(2)
    first = power_iteration(p, EigenConfig(max_eigen_iters=1), phi0=phi0)
    assert first.k == pytest.approx(1.5, rel=1e-14)
    full = power_iteration(p, EigenConfig(k_tol=1e-12, flux_tol=1e-10, max_eigen_iters=200), phi0=phi0)
    assert full.converged and full.k == pytest.approx(2.0, rel=1e-11)


def test_rayleigh_quotient_examples(rng):
    A = np.diag([3.0, 1.0])
    assert rayleigh_quotient(lambda x: A @ x, lambda x: x, np.array([1.0, 0.0])) == 3.0
    A, B = _dense_pair(1)
    vals, vecs = np.linalg.eig(np.linalg.solve(B, A))
    i = np.argmin(np.abs(vals))
    x = vecs[:, i].real
    rho = rayleigh_quotient(lambda v: A @ v, lambda v: B @ v, x)
    assert rho == pytest.approx(vals[i].real, rel=1e-12)
    y = rng.standard_normal(8)
    r1 = rayleigh_quotient(lambda v: A @ v, lambda v: B @ v, y)
    assert rayleigh_quotient(lambda v: A @ v, lambda v: B @ v, -3.7 * y) == pytest.approx(r1, rel=1e-14)


def test_rayleigh_quotient_degenerate():
    with pytest.raises(DegenerateQuotientError):
        rayleigh_quotient(lambda x: x, lambda x: 0 * x, np.ones(2))


@pytest.mark.parametrize("seed", [0, 1, 2, 3, 4])
def test_rqi_dense_pair(seed):
    A, B = _dense_pair(seed)
    gamma, x = oracle.generalized_eig_smallest(A, B)
    trace = []
    res = rqi(DenseProblem(A, B), EigenConfig(solver="rqi", k_tol=1e-13, flux_tol=1e-10), rho_trace=trace)
    # warmup power steps are logged separately
    assert res.converged
    assert sum(r.solver == "rqi" for r in res.records) <= 6
    assert res.rho == pytest.approx(gamma, rel=1e-10)
    err = [abs(r - gamma) for r in trace]
    assert all(b <= a or b <= 1e-13 * gamma for a, b in zip(err, err[1:]))


def test_sii_zero_shift_matches_power():
    A, B = _dense_pair(5)
    gamma, _ = oracle.generalized_eig_smallest(A, B)
    cfg = EigenConfig(k_tol=1e-12, flux_tol=1e-10, max_eigen_iters=500)
    pi = power_iteration(DenseProblem(A, B), cfg)
    sii = shifted_inverse_iteration(DenseProblem(A, B), cfg, shift=0.0)
    assert pi.k == pytest.approx(1 / gamma, rel=1e-10)
    assert sii.k == pytest.approx(pi.k, rel=1e-10)
    np.testing.assert_allclose(sii.phi, pi.phi, atol=1e-8)


def test_sii_far_shift_finds_nearest_mode():
    A, B = _dense_pair(6)
    vals = np.sort(np.linalg.eigvals(np.linalg.solve(B, A)).real)
    mu = vals[-1] + 0.5  # above every eigenvalue
    res = shifted_inverse_iteration(DenseProblem(A, B), EigenConfig(k_tol=1e-12, flux_tol=1e-9,
                                                                    max_eigen_iters=500), shift=mu)
    assert res.converged
    assert 1 / res.k == pytest.approx(vals[-1], rel=1e-9)


def test_negative_shift_rejected():
    with pytest.raises(ConfigurationError):
        shifted_inverse_iteration(DenseProblem(np.eye(2), np.eye(2)), shift=-1.0)


@pytest.mark.parametrize("name, k", [("INF_MEDIUM_1G", 1.2), ("INF_MEDIUM_2G", 8.0 / 7.0)])
@pytest.mark.parametrize("solver", ["pi", "sii", "rqi"])
def test_infinite_media(name, k, solver):
    res = solve_eigen(_transport(make_fixture(name)), EigenConfig(solver=solver, k_tol=1e-10,
                                                                  flux_tol=1e-8))
    assert res.converged
    assert res.k == pytest.approx(k, rel=1e-6)


def test_power_matches_oracle_on_two_cells():
    spec = small_spec(upscatter=0.1)
    k_ref, _ = oracle.k_effective(spec)
    res = power_iteration(_transport(spec), TIGHT)
    assert res.converged
    assert res.k == pytest.approx(k_ref, rel=1e-8)


@pytest.mark.parametrize("seed", [7, 8])
def test_solvers_agree(seed):
    spec = make_fixture("RANDOM_SMALL", seed)
    cfg = EigenConfig(k_tol=1e-8, flux_tol=1e-6)
    ks = {}
    for solver in ("pi", "sii", "rqi"):
        res = solve_eigen(_transport(spec, MgeConfig()), EigenConfig(solver=solver, k_tol=1e-8,
                                                                      flux_tol=1e-6))
        assert res.converged
        ks[solver] = res.k
    assert max(ks.values()) - min(ks.values()) <= 10 * cfg.k_tol * ks["pi"]


def test_scaling_the_initial_guess():
    spec = make_fixture("RANDOM_SMALL", 7)
    a = power_iteration(_transport(spec), EigenConfig(k_tol=1e-10, flux_tol=1e-8), phi0=np.ones(32))
    b = power_iteration(_transport(spec), EigenConfig(k_tol=1e-10, flux_tol=1e-8), phi0=250.0 * np.ones(32))
    assert a.k == pytest.approx(b.k, rel=1e-10)
    np.testing.assert_allclose(a.phi, b.phi, atol=1e-9)


@pytest.mark.parametrize("solver", ["pi", "rqi"])
def test_krylov_accounting(solver):
    res = solve_eigen(_transport(make_fixture("RANDOM_SMALL", 7)), EigenConfig(solver=solver))
    assert res.krylov_iterations == sum(r.inner_iterations for r in res.records)
    cum = [r.cumulative_krylov for r in res.records]
    assert cum == sorted(cum) and cum[-1] == res.krylov_iterations
    assert [r.eigen_iteration for r in res.records] == list(range(1, res.iterations + 1))


def test_rqi_warmup_is_logged_as_power():
    res = rqi(_transport(make_fixture("RANDOM_SMALL", 7)), EigenConfig(solver="rqi", warmup_pi_iters=2))
    assert [r.solver for r in res.records[:3]] == ["pi", "pi", "rqi"]


@pytest.mark.slow
def test_sii_near_shift_beats_zero_shift_on_slab():
    spec = make_fixture("NEAR_CRITICAL_SLAB")
    k_ref, _ = oracle.k_effective(spec)
    cfg = EigenConfig(solver="sii", k_tol=1e-7, flux_tol=1e-5, max_eigen_iters=1000)
    near = shifted_inverse_iteration(_transport(spec, MgeConfig(), KrylovConfig(tol=1e-8)), cfg,
                                     shift=0.95 / k_ref)
    zero = shifted_inverse_iteration(_transport(spec, MgeConfig(), KrylovConfig(tol=1e-8)), cfg,
                                     shift=0.0)
    assert near.converged and zero.converged
    assert near.iterations < zero.iterations
    assert near.k == pytest.approx(k_ref, rel=1e-6)
