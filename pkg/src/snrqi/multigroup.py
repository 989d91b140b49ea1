"""Fixed-source multigroup solvers.

Both solvers treat the groups before the first upscatter row by downscatter
substitution, one within-group solve per group in order. The remaining block
is iterated by Gauss-Seidel passes or solved at once with block GMRES. With a
positive shift the fission term couples every group, so the block is
everything.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import upscatter_start
from .errors import ConfigurationError
from .krylov import KrylovConfig, gmres
from .mge import MgeConfig, MgePreconditioner
from .operators import TransportContext, block_operator, within_group_operator
from .parallel import SERIAL, EnergySetLayout, WorkerPool, make_layout

__all__ = [
    "EnergySetLayout", "MultigroupResult", "SolverCache", "block_start",
    "solve_block_krylov", "solve_gauss_seidel",
]


@dataclass
class MultigroupResult:
    flux: np.ndarray  # (G, ncells)
    iterations: int  # Krylov iterations summed over every inner solve
    converged: bool
    sweeps: int = 0  # fine-quadrature group sweeps, right-hand sides and residuals included
    precond_sweeps: int = 0  # reduced-quadrature group sweeps inside MGE
    passes: int = 0  # Gauss-Seidel passes over the upscatter block
    inner: list = field(default_factory=list)  # (label, iterations, converged)


def block_start(ctx: TransportContext, shift: float = 0.0) -> int:
    """First group of the coupled block: 0 when shifted, else the first upscatter row."""
    if shift > 0.0:
        return 0
    return upscatter_start(np.moveaxis(ctx.scatter, -1, 0))


class SolverCache:
    """Preconditioners kept across solves that share one context.

    Building an MGE hierarchy factors the reflecting-boundary responses of
    every level, so eigenvalue loops reuse them. The shift is supplied at
    application time.
    """

    def __init__(self, ctx: TransportContext, mge: MgeConfig | None,
                 n_sets: int = 1, pool: WorkerPool = SERIAL):
        self.ctx = ctx
        self.mge = mge
        self.n_sets = n_sets
        self.pool = pool
        self._precond = {}

    def layout(self, start, stop) -> EnergySetLayout:
        return make_layout(start, stop, self.n_sets)

    def preconditioner(self, start, stop):
        if self.mge is None:
            return None
        key = (start, stop)
        p = self._precond.get(key)
        if p is None:
            p = MgePreconditioner(self.ctx, key, self.mge, self.layout(start, stop), self.pool)
            self._precond[key] = p
        return p

    def precond_sweeps(self) -> int:
        return sum(p.sweep_count() for p in self._precond.values())


def _check_source(ctx, q):
    q = np.asarray(q, dtype=float)
    if q.shape != (ctx.groups, ctx.ncells):
        q = q.reshape(ctx.groups, ctx.ncells)
    if not np.all(np.isfinite(q)):
        raise ConfigurationError("source has non-finite entries")
    return q


def _within_group(ctx, g, rhs, x0, cfg, cache, result):
    p = cache.preconditioner(g, g + 1)
    precond = None if p is None else p.operator(0.0)
    r = gmres(within_group_operator(ctx, g), rhs, x0=x0, precond=precond, cfg=cfg)
    result.iterations += r.iterations
    result.inner.append((f"group {g}", r.iterations, r.converged))
    return r


def _substitute_prefix(ctx, q, phi, stop, cfg, cache, result):
    ok = True
    for g in range(stop):
        rows = slice(g, g + 1)
        src = q[rows] + ctx.scatter_rows(rows, slice(0, g), phi[:g]) if g else q[rows]
        rhs = ctx.transport(rows, src).reshape(-1)
        r = _within_group(ctx, g, rhs, phi[g] if np.any(phi[g]) else None, cfg, cache, result)
        phi[g] = r.x
        ok &= r.converged
    return ok


def solve_block_krylov(ctx: TransportContext, q, shift: float = 0.0, n_sets: int = 1,
                       mge: MgeConfig | None = None, cfg: KrylovConfig = KrylovConfig(),
                       x0=None, pool: WorkerPool = SERIAL,
                       cache: SolverCache | None = None) -> MultigroupResult:
    """Solve ``(I - T M (S + shift F)) phi = T M q``.

    The prefix groups are substituted; the block right-hand side is
    ``T M (S_block_source phi_prefix + q_block)``. Every block operator
    application splits the rows across ``n_sets`` energy sets.
    """
    if shift < 0.0:
        raise ConfigurationError(f"shift must be >= 0, got {shift}")
    q = _check_source(ctx, q)
    cache = cache or SolverCache(ctx, mge, n_sets, pool)
    G, nc = ctx.groups, ctx.ncells
    phi = np.zeros((G, nc)) if x0 is None else np.array(x0, dtype=float).reshape(G, nc)
    sweeps0, psweeps0 = ctx.sweep_count, cache.precond_sweeps()
    result = MultigroupResult(phi, 0, True)
    g_up = block_start(ctx, shift)
    ok = _substitute_prefix(ctx, q, phi, g_up, cfg, cache, result)
    if g_up < G:
        block = slice(g_up, G)
        layout = cache.layout(g_up, G)

        def rhs_task(rows):
            src = q[rows] + ctx.scatter_rows(rows, slice(0, g_up), phi[:g_up]) if g_up else q[rows]
            return ctx.transport(rows, src)

        rhs = np.concatenate(cache.pool.map(rhs_task, layout.slices()), axis=0).reshape(-1)
        A = block_operator(ctx, block, shift, layout, cache.pool)
        p = cache.preconditioner(g_up, G)
        guess = phi[block].reshape(-1)
        r = gmres(A, rhs, x0=guess if np.any(guess) else None,
                  precond=None if p is None else p.operator(shift), cfg=cfg)
        phi[block] = r.x.reshape(G - g_up, nc)
        result.iterations += r.iterations
        result.inner.append((f"block {g_up}:{G}", r.iterations, r.converged))
        ok &= r.converged
    result.converged = bool(ok)
    result.sweeps = ctx.sweep_count - sweeps0
    result.precond_sweeps = cache.precond_sweeps() - psweeps0
    return result


def solve_gauss_seidel(ctx: TransportContext, q, cfg: KrylovConfig = KrylovConfig(),
                       upscatter_tol: float | None = None, max_passes: int = 200,
                       mge: MgeConfig | None = None, x0=None,
                       cache: SolverCache | None = None) -> MultigroupResult:
    """Group-by-group solve, high energy to low, with outer passes over upscatter.

    Each within-group solve is GMRES at ``cfg.tol``. The upscatter block is
    swept repeatedly until the relative change between successive passes is
    at most ``upscatter_tol`` (default ``cfg.tol``) or ``max_passes`` is hit.
    """
    q = _check_source(ctx, q)
    if upscatter_tol is None:
        upscatter_tol = cfg.tol
    if not upscatter_tol > 0.0 or max_passes < 1:
        raise ConfigurationError("upscatter_tol must be > 0 and max_passes >= 1")
    cache = cache or SolverCache(ctx, mge)
    G, nc = ctx.groups, ctx.ncells
    phi = np.zeros((G, nc)) if x0 is None else np.array(x0, dtype=float).reshape(G, nc)
    sweeps0, psweeps0 = ctx.sweep_count, cache.precond_sweeps()
    result = MultigroupResult(phi, 0, True)
    g_up = block_start(ctx)
    inner_ok = _substitute_prefix(ctx, q, phi, g_up, cfg, cache, result)
    outer_ok = True
    if g_up < G:
        outer_ok = False
        for _ in range(max_passes):
            old = phi[g_up:].copy()
            for g in range(g_up, G):
                rows = slice(g, g + 1)
                src = q[rows] + ctx.scatter_rows(rows, slice(0, g), phi[:g])
                if g + 1 < G:
                    src = src + ctx.scatter_rows(rows, slice(g + 1, G), phi[g + 1:])
                rhs = ctx.transport(rows, src).reshape(-1)
                r = _within_group(ctx, g, rhs, phi[g] if np.any(phi[g]) else None,
                                  cfg, cache, result)
                phi[g] = r.x
                inner_ok &= r.converged
            result.passes += 1
            new_norm = np.linalg.norm(phi[g_up:])
            change = np.linalg.norm(phi[g_up:] - old)
            if change <= upscatter_tol * new_norm:
                outer_ok = True
                break
    else:
        result.passes = 1
    result.converged = bool(inner_ok and outer_ok)
    result.sweeps = ctx.sweep_count - sweeps0
    result.precond_sweeps = cache.precond_sweeps() - psweeps0
    return result
