import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from snrqi import oracle
from snrqi.errors import ConfigurationError
from snrqi.krylov import KrylovConfig, gmres
from snrqi.operators import OperatorHandle, identity_operator


def _dense_op(M):
    return OperatorHandle(M.shape[0], lambda v: M @ v, "dense")


def _well_conditioned(rng, n):
    return np.eye(n) * 2.0 + rng.standard_normal((n, n)) / (2.0 * np.sqrt(n))


def test_identity_one_iteration(rng):
    b = rng.standard_normal(7)
    r = gmres(identity_operator(7), b)
    assert r.converged and r.iterations == 1
    np.testing.assert_allclose(r.x, b, rtol=1e-15)


def test_diagonal():
    A = _dense_op(np.diag([1.0, 2.0, 4.0]))
    r = gmres(A, np.ones(3), cfg=KrylovConfig(tol=1e-12))
    assert r.converged
    np.testing.assert_allclose(r.x, [1.0, 0.5, 0.25], rtol=1e-12)


def test_random_12_matches_dense_lu(rng):
    M = _well_conditioned(rng, 12)
    b = rng.standard_normal(12)
    r = gmres(_dense_op(M), b, cfg=KrylovConfig(tol=1e-13))
    ref = oracle.dense_solve(M, b)
    assert np.linalg.norm(r.x - ref) <= 1e-10 * np.linalg.norm(ref)


def test_restarts_accumulate_iterations(rng):
    M = _well_conditioned(rng, 40)
    b = rng.standard_normal(40)
    r = gmres(_dense_op(M), b, cfg=KrylovConfig(restart_m=5, max_iters=500, tol=1e-10))
    assert r.converged and r.iterations > 5
    assert r.residual <= 1e-10


def test_cap_reports_not_converged(rng):
    M = _well_conditioned(rng, 30)
    r = gmres(_dense_op(M), rng.standard_normal(30), cfg=KrylovConfig(restart_m=3, max_iters=3, tol=1e-14))
    assert not r.converged and r.iterations == 3
    assert r.residual > 1e-14


def test_zero_rhs():
    r = gmres(_dense_op(np.diag([1.0, 3.0])), np.zeros(2))
    assert r.converged and r.iterations == 0
    assert not r.x.any()


def test_identity_preconditioner_changes_nothing(rng):
    M = _well_conditioned(rng, 20)
    b = rng.standard_normal(20)
    cfg = KrylovConfig(restart_m=6, tol=1e-10)
    plain = gmres(_dense_op(M), b, cfg=cfg)
    pre = gmres(_dense_op(M), b, precond=identity_operator(20), cfg=cfg)
    assert plain.iterations == pre.iterations
    np.testing.assert_array_equal(plain.x, pre.x)


def test_exact_preconditioner_one_iteration(rng):
    M = _well_conditioned(rng, 16)
    P = np.linalg.inv(M)
    r = gmres(_dense_op(M), rng.standard_normal(16), precond=_dense_op(P), cfg=KrylovConfig(tol=1e-10))
    assert r.converged and r.iterations == 1


def test_x0_respected(rng):
    M = _well_conditioned(rng, 10)
    b = rng.standard_normal(10)
    x = oracle.dense_solve(M, b)
    r = gmres(_dense_op(M), b, x0=x, cfg=KrylovConfig(tol=1e-8))
    assert r.converged and r.iterations == 0


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**31), st.integers(2, 48), st.integers(2, 12))
def test_residual_monotone_within_cycle(seed, n, m):
    rng = np.random.default_rng(seed)
    M = _well_conditioned(rng, n)
    r = gmres(_dense_op(M), rng.standard_normal(n), cfg=KrylovConfig(restart_m=m, tol=1e-12))
    for cycle in r.history:
        assert all(b <= a * (1 + 1e-12) for a, b in zip(cycle, cycle[1:]))


def test_config_validation():
    with pytest.raises(ConfigurationError):
        KrylovConfig(restart_m=50, max_iters=10)
    with pytest.raises(ConfigurationError):
        KrylovConfig(tol=0.0)


def test_nonfinite_operator_raises():
    from snrqi.errors import NumericalBreakdown
    bad = OperatorHandle(2, lambda v: v * np.nan)
    with pytest.raises(NumericalBreakdown):
        gmres(bad, np.ones(2))
