"""Multigrid-in-energy right preconditioner.

Each grid pairs adjacent groups of the grid above it (an odd last group
maps alone). Corrections move between grids by averaging (restriction)
and injection (prolongation). Every level smooths with weighted Richardson
iterations ``x <- x + w (T M S~ x - x) + w b`` using a reduced quadrature.
All levels start from a zero guess, so one application is a fixed linear map.

Coarse cross sections follow flat-flux weighting in the total-flux
convention: mean ``sigma_t``, scatter summed over fine rows and averaged over
fine columns, mean ``nu_sigma_f``, summed ``chi``. Because the level unknowns
are group-averaged corrections (averaging/injection transfers), the level
operator rescales coupling from coarse group ``G'`` into ``G`` by
``m[G'] / m[G]`` where ``m`` counts the parent groups in each coarse group.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import CrossSectionSet
from .errors import ConfigurationError
from .geometry import SUPPORTED_ORDERS, build_quadrature
from .operators import OperatorHandle, TransportContext
from .parallel import SERIAL, EnergySetLayout, WorkerPool, make_layout


@dataclass(frozen=True)
class MgeConfig:
    weight: float = 1.0
    relaxations: int = 2
    v_cycles: int = 2
    depth: int | None = None
    quadrature_order: int = 2
    # True: each energy set runs its own V-cycle on its own groups
    set_local: bool = False

    def __post_init__(self):
        if not self.weight > 0.0:
            raise ConfigurationError(f"Richardson weight must be > 0, got {self.weight}")
        if self.relaxations < 1 or self.v_cycles < 1:
            raise ConfigurationError("relaxations and v_cycles must be >= 1")
        if self.depth is not None and self.depth < 1:
            raise ConfigurationError(f"V-cycle depth must be >= 1, got {self.depth}")
        if self.quadrature_order not in SUPPORTED_ORDERS:
            raise ConfigurationError(
                f"preconditioner quadrature {self.quadrature_order} not in {SUPPORTED_ORDERS}")

    @property
    def label(self) -> str:
        return f"w{self.weight:g}r{self.relaxations}v{self.v_cycles}"


def default_level_count(groups: int) -> int:
    """Grids needed to coarsen ``groups`` down to one group."""
    if groups < 1:
        raise ConfigurationError("need at least one group")
    if groups == 1:
        return 1
    return math.floor(math.log2(groups - 1)) + 2


def pair_map(groups: int) -> np.ndarray:
    """Fine-to-coarse map pairing adjacent groups."""
    return np.arange(groups) // 2


def collapse_xs(xs: CrossSectionSet) -> CrossSectionSet:
    """Flat-flux collapse of one material onto adjacent-pair coarse groups."""
    st, s, f, chi = xs.arrays()
    gmap = pair_map(xs.groups)
    nc = int(gmap[-1]) + 1
    sizes = np.bincount(gmap, minlength=nc).astype(float)
    cst = np.bincount(gmap, weights=st, minlength=nc) / sizes
    cf = np.bincount(gmap, weights=f, minlength=nc) / sizes
    cchi = np.bincount(gmap, weights=chi, minlength=nc)
    rows = np.zeros((nc, xs.groups))
    for g in range(xs.groups):
        rows[gmap[g]] += s[g]
    cs = np.zeros((nc, nc))
    for gp in range(xs.groups):
        cs[:, gmap[gp]] += rows[:, gp] / sizes[gmap[gp]]
    return CrossSectionSet.from_arrays(cst, cs, cf, cchi)


@dataclass
class EnergyGrid:
    """One level: its transport context plus the map from the grid above.

    ``group_map`` and ``sizes`` are None on the finest level. The
    ``collapsed_*`` arrays are per cell in the flat-flux convention;
    ``ctx`` holds the rescaled level operator data.
    """

    level: int
    groups: int
    ctx: TransportContext
    group_map: np.ndarray | None = None
    sizes: np.ndarray | None = None
    collapsed_sigma_t: np.ndarray | None = None
    collapsed_scatter: np.ndarray | None = None
    collapsed_nu_sigma_f: np.ndarray | None = None
    collapsed_chi: np.ndarray | None = None


@dataclass
class GridHierarchy:
    grids: list
    fine_groups: tuple  # (start, stop) in the global group numbering

    @property
    def levels(self) -> int:
        return len(self.grids)

    def sweep_count(self) -> int:
        return sum(g.ctx.sweep_count for g in self.grids)


def _collapse_cells(sigma_t, scatter, nusf, chi):
    G, nc = sigma_t.shape
    gmap = pair_map(G)
    Gc = int(gmap[-1]) + 1
    sizes = np.bincount(gmap, minlength=Gc).astype(float)
    cst = np.zeros((Gc, nc))
    cf = np.zeros((Gc, nc))
    cchi = np.zeros((Gc, nc))
    rows = np.zeros((Gc, G, nc))
    for g in range(G):
        cst[gmap[g]] += sigma_t[g]
        cf[gmap[g]] += nusf[g]
        cchi[gmap[g]] += chi[g]
        rows[gmap[g]] += scatter[g]
    cst /= sizes[:, None]
    cf /= sizes[:, None]
    cs = np.zeros((Gc, Gc, nc))
    for gp in range(G):
        cs[:, gmap[gp]] += rows[:, gp] / sizes[gmap[gp]]
    return gmap, sizes, cst, cs, cf, cchi


def build_hierarchy(ctx: TransportContext, groups, cfg: MgeConfig) -> GridHierarchy:
    """Energy grids for the contiguous range ``groups`` of ``ctx``.

    Level count is ``min(depth, floor(log2(G - 1)) + 2)`` with ``G`` the
    range size (one level when ``G == 1``).
    """
    if isinstance(groups, slice):
        start, stop = groups.start, groups.stop
    else:
        start, stop = groups
    if stop - start < 1:
        raise ConfigurationError("hierarchy needs at least one group")
    rows = slice(start, stop)
    quad = build_quadrature(cfg.quadrature_order)
    sigma_t = ctx.sigma_t[rows].copy()
    scatter = ctx.scatter[rows, rows].copy()
    nusf = ctx.nu_sigma_f[rows].copy()
    chi = ctx.chi[rows].copy()
    fine = ctx.with_data(quadrature=quad, sigma_t=sigma_t, scatter=scatter,
                         nu_sigma_f=nusf, chi=chi)
    grids = [EnergyGrid(0, stop - start, fine)]
    wanted = default_level_count(stop - start)
    if cfg.depth is not None:
        wanted = min(wanted, cfg.depth)
    while len(grids) < wanted:
        gmap, sizes, cst, cs, cf, cchi = _collapse_cells(sigma_t, scatter, nusf, chi)
        ratio = sizes[None, :] / sizes[:, None]
        level_ctx = ctx.with_data(
            quadrature=quad, sigma_t=cst, scatter=cs * ratio[:, :, None],
            nu_sigma_f=cf * sizes[:, None], chi=cchi / sizes[:, None])
        grids.append(EnergyGrid(len(grids), cst.shape[0], level_ctx, gmap, sizes,
                                cst, cs, cf, cchi))
        sigma_t, scatter, nusf, chi = cst, cs, cf, cchi
    return GridHierarchy(grids, (start, stop))


def restrict(fine, grid: EnergyGrid):
    """Average each coarse group's fine members, per cell."""
    fine = np.asarray(fine, dtype=float)
    coarse = np.zeros((grid.groups,) + fine.shape[1:])
    for g, G in enumerate(grid.group_map):
        coarse[G] += fine[g]
    return coarse / grid.sizes.reshape((-1,) + (1,) * (fine.ndim - 1))


def prolong(coarse, grid: EnergyGrid):
    """Piecewise-constant injection onto the fine groups."""
    return np.asarray(coarse, dtype=float)[grid.group_map].copy()


class _LevelOperator:
    """``T M S~`` on one grid, rows split across workers."""

    def __init__(self, grid, shift, n_parts, pool):
        self.ctx = grid.ctx
        self.shift = shift
        self.pool = pool
        self.slices = make_layout(0, grid.groups, n_parts).slices()

    def tms(self, x):
        ctx = self.ctx

        def task(rows):
            return ctx.transport(rows, ctx.scatter_rows(rows, None, x, self.shift))

        return np.concatenate(self.pool.map(task, self.slices), axis=0)


def relax(op, x, b, cfg: MgeConfig, x_is_zero=False, weight=None):
    """``cfg.relaxations`` weighted Richardson steps on ``(I - T M S~) x = b``.

    ``weight`` overrides ``cfg.weight``; zero leaves ``x`` unchanged.
    """
    w = cfg.weight if weight is None else weight
    if w == 0.0:
        return x
    for _ in range(cfg.relaxations):
        if x_is_zero:
            x = w * b
            x_is_zero = False
        else:
            x = x + w * (op.tms(x) - x) + w * b
    return x


def _vcycle(ops, grids, level, x, b, cfg, x_is_zero):
    op = ops[level]
    x = relax(op, x, b, cfg, x_is_zero)
    if level == len(grids) - 1:
        return x
    residual = b - (x - op.tms(x))
    coarse_grid = grids[level + 1]
    bc = restrict(residual, coarse_grid)
    ec = _vcycle(ops, grids, level + 1, np.zeros_like(bc), bc, cfg, True)
    x = x + prolong(ec, coarse_grid)
    return relax(op, x, b, cfg)


def apply_preconditioner(v, hierarchy: GridHierarchy, cfg: MgeConfig, shift=0.0,
                         n_parts=1, pool: WorkerPool = SERIAL):
    """Run ``cfg.v_cycles`` V-cycles on ``(I - T M S~) x = v`` from ``x = 0``.

    ``v`` is the flattened (or ``(G, ncells)``) vector on the hierarchy's
    fine groups.
    """
    grids = hierarchy.grids
    fine = grids[0]
    v = np.asarray(v, dtype=float)
    b = v.reshape(fine.groups, fine.ctx.ncells)
    ops = [_LevelOperator(g, shift, n_parts, pool) for g in grids]
    x = np.zeros_like(b)
    for cycle in range(cfg.v_cycles):
        x = _vcycle(ops, grids, 0, x, b, cfg, x_is_zero=(cycle == 0))
    return x.reshape(v.shape)


class MgePreconditioner:
    """Right preconditioner over a contiguous group block.

    With ``cfg.set_local`` each set of ``layout`` owns a private hierarchy over
    its own groups and applies it to its own slice of the input. Otherwise one
    hierarchy spans the block and the sets split each level's operator rows.
    ``trace`` records, per application, which fine group range each
    hierarchy read and wrote.
    """

    def __init__(self, ctx: TransportContext, block, cfg: MgeConfig,
                 layout: EnergySetLayout | None = None, pool: WorkerPool = SERIAL):
        start, stop = (block.start, block.stop) if isinstance(block, slice) else block
        self.block = (start, stop)
        self.cfg = cfg
        self.pool = pool
        self.layout = layout or make_layout(start, stop, 1)
        self.ncells = ctx.ncells
        if cfg.set_local:
            self.hierarchies = [build_hierarchy(ctx, r, cfg) for r in self.layout.ranges]
        else:
            self.hierarchies = [build_hierarchy(ctx, self.block, cfg)]
        self.trace = []

    def sweep_count(self) -> int:
        return sum(h.sweep_count() for h in self.hierarchies)

    def apply(self, v, shift=0.0):
        start, stop = self.block
        v = np.asarray(v, dtype=float).reshape(stop - start, self.ncells)
        if not self.cfg.set_local:
            h = self.hierarchies[0]
            self.trace.append((h.fine_groups,))
            out = apply_preconditioner(v, h, self.cfg, shift, self.layout.n_sets, self.pool)
            return out.reshape(-1)

        def task(h):
            a, b = h.fine_groups
            local = np.array(v[a - start:b - start])
            return apply_preconditioner(local, h, self.cfg, shift)

        parts = self.pool.map(task, self.hierarchies)
        self.trace.append(tuple(h.fine_groups for h in self.hierarchies))
        return np.concatenate(parts, axis=0).reshape(-1)

    def operator(self, shift=0.0) -> OperatorHandle:
        start, stop = self.block
        return OperatorHandle((stop - start) * self.ncells,
                              lambda v: self.apply(v, shift),
                              f"MGE {self.cfg.label} shift={shift:g}")
