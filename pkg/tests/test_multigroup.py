import numpy as np
import pytest

from snrqi import oracle
from snrqi.fixtures import make_fixture
from snrqi.krylov import KrylovConfig, gmres
from snrqi.mge import MgeConfig
from snrqi.multigroup import block_start, solve_block_krylov, solve_gauss_seidel
from snrqi.operators import TransportContext, within_group_operator
from snrqi.parallel import WorkerPool

from conftest import small_spec

TOL = 1e-8
CFG = KrylovConfig(tol=TOL)


def _ctx(name, seed=None):
    return TransportContext.from_problem(make_fixture(name, seed))


def _rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


@pytest.fixture(scope="module")
def core():
    return _ctx("UPSCATTER_CORE")


def test_block_start(core):
    assert block_start(core) == 4
    assert block_start(core, shift=0.5) == 0
    assert block_start(_ctx("INF_MEDIUM_2G")) == 2


def test_triangular_gs_is_one_pass():
    ctx = _ctx("NEAR_CRITICAL_SLAB")
    r = solve_gauss_seidel(ctx, np.ones((4, ctx.ncells)), CFG)
    assert r.converged and r.passes == 1
    assert [label for label, _, _ in r.inner] == [f"group {g}" for g in range(4)]


def test_one_group_gs_is_within_group_solve():
    ctx = _ctx("RANDOM_SMALL", 3)
    one = ctx.with_data(sigma_t=ctx.sigma_t[:1], scatter=ctx.scatter[:1, :1],
                        nu_sigma_f=ctx.nu_sigma_f[:1], chi=ctx.chi[:1])
    q = np.linspace(0.5, 1.5, one.ncells)[None]
    gs = solve_gauss_seidel(one, q, CFG)
    direct = gmres(within_group_operator(one, 0), one.transport(slice(0, 1), q).ravel(), cfg=CFG)
    np.testing.assert_array_equal(gs.flux.ravel(), direct.x)
    assert gs.iterations == direct.iterations


@pytest.mark.parametrize("name, seed", [("INF_MEDIUM_1G", None), ("INF_MEDIUM_2G", None),
                                        ("UPSCATTER_CORE", None), ("NEAR_CRITICAL_SLAB", None),
                                        ("RANDOM_SMALL", 7), ("RANDOM_SMALL", 9)])
def test_gs_and_krylov_agree(name, seed):
    ctx = _ctx(name, seed)
    q = np.ones((ctx.groups, ctx.ncells))
    gs = solve_gauss_seidel(ctx, q, CFG)
    kr = solve_block_krylov(ctx, q, cfg=CFG)
    assert gs.converged and kr.converged
    assert _rel(gs.flux, kr.flux) <= 10 * TOL


def test_krylov_matches_dense_solution():
    spec = small_spec(upscatter=0.2)
    ctx = TransportContext.from_problem(spec)
    A, _ = oracle.assemble_pair(spec)
    q = np.array([[1.0, 0.5], [0.2, 0.0]])
    ref = oracle.dense_solve(A, ctx.transport(None, q).ravel())
    r = solve_block_krylov(ctx, q, cfg=KrylovConfig(tol=1e-12))
    assert _rel(r.flux.ravel(), ref) <= 1e-10


def test_shifted_solve_matches_dense():
    spec = make_fixture("RANDOM_SMALL", 7)
    ctx = TransportContext.from_problem(spec)
    A, B = oracle.assemble_pair(spec, shift=0.2)
    phi = np.ones(ctx.groups * ctx.ncells)
    r = solve_block_krylov(ctx, ctx.chi * ctx.fission_density(None, phi.reshape(4, -1)), shift=0.2,
                           cfg=KrylovConfig(tol=1e-12))
    ref = oracle.dense_solve(A, B @ phi)
    assert _rel(r.flux.ravel(), ref) <= 1e-10
    assert r.inner == [("block 0:4", r.iterations, True)]


@pytest.mark.parametrize("mge", [None, MgeConfig()])
def test_set_count_invariance(core, mge):
    q = np.ones((8, core.ncells))
    ref = solve_block_krylov(core, q, mge=mge, cfg=CFG)
    for n in (2, 4):
        with WorkerPool(n) as pool:
            r = solve_block_krylov(core, q, n_sets=n, mge=mge, cfg=CFG, pool=pool)
        assert r.iterations == ref.iterations
        np.testing.assert_array_equal(r.flux, ref.flux)


def test_block_krylov_needs_fewer_sweeps_than_gs(core):
    q = np.ones((8, core.ncells))
    gs = solve_gauss_seidel(core, q)
    kr = solve_block_krylov(core, q)
    assert gs.converged and kr.converged
    assert gs.passes > 1
    assert kr.sweeps < gs.sweeps


def test_triangular_block_equals_gs():
    ctx = _ctx("INF_MEDIUM_2G")
    q = np.array([[1.0], [0.0]])
    kr = solve_block_krylov(ctx, q, cfg=CFG)
    gs = solve_gauss_seidel(ctx, q, CFG)
    np.testing.assert_allclose(kr.flux, gs.flux, rtol=1e-12)
    # phi1 = 1 / (1.0 - 0.4); phi2 = 0.3 phi1 / (1.2 - 0.5)
    np.testing.assert_allclose(kr.flux.ravel(), [1 / 0.6, 0.3 / 0.6 / 0.7], rtol=1e-8)


def test_gs_pass_cap_reports_failure(core):
    r = solve_gauss_seidel(core, np.ones((8, core.ncells)), max_passes=2)
    assert r.passes == 2 and not r.converged


def test_warm_start_reuses_solution(core):
    q = np.ones((8, core.ncells))
    first = solve_block_krylov(core, q, cfg=CFG)
    again = solve_block_krylov(core, q, cfg=CFG, x0=first.flux)
    assert again.iterations < first.iterations
