"""Deterministic synthetic problems.

The nuclear data are made up. Each fixture exists to exercise one behavior:
analytic infinite media, a large near-critical slab with a slowly decaying
second mode, an upscattering core, and small random problems sized for the
dense oracle.
"""

from __future__ import annotations

import enum
import re

import numpy as np

from .data import CrossSectionSet, GroupStructure, Material
from .eigen import EigenConfig
from .errors import ConfigurationError
from .geometry import Boundary, BoundaryCondition, Mesh
from .problem import ProblemSpec, SolverConfig

R, V = Boundary.REFLECTING, Boundary.VACUUM


class FixtureId(str, enum.Enum):
    INF_MEDIUM_1G = "INF_MEDIUM_1G"
    INF_MEDIUM_2G = "INF_MEDIUM_2G"
    UPSCATTER_CORE = "UPSCATTER_CORE"
    NEAR_CRITICAL_SLAB = "NEAR_CRITICAL_SLAB"
    RANDOM_SMALL = "RANDOM_SMALL"


def _infinite(xs, name):
    mesh = Mesh(1, 1, 1, 1.0, 1.0, 1.0, "medium")
    return ProblemSpec(mesh, BoundaryCondition.uniform(R), (Material("medium", xs),),
                       GroupStructure(xs.groups), quadrature_order=2, name=name)


def _slab_mesh(width, cells, material_map):
    return Mesh(cells, 1, 1, width / cells, 1.0, 1.0, tuple(material_map))


# x faces vacuum, y/z reflecting: a 1-D slab in a 3-D code
_SLAB_BC = BoundaryCondition(V, V, R, R, R, R)


def inf_medium_1g() -> ProblemSpec:
    xs = CrossSectionSet.from_arrays([1.0], [[0.5]], [0.6], [1.0])
    return _infinite(xs, "INF_MEDIUM_1G")


def inf_medium_2g() -> ProblemSpec:
    xs = CrossSectionSet.from_arrays([1.0, 1.2], [[0.4, 0.0], [0.3, 0.5]], [0.3, 0.9], [1.0, 0.0])
    return _infinite(xs, "INF_MEDIUM_2G")


# Four-group fuel: strong downscatter, scattering ratio near one in every group.
SLAB_WIDTH = 60.0
SLAB_CELLS = 28
_SLAB_XS = dict(
    sigma_t=[0.60, 0.90, 1.20, 1.50],
    scatter=[[0.450, 0.000, 0.000, 0.000],
             [0.138, 0.760, 0.000, 0.000],
             [0.000, 0.128, 1.080, 0.000],
             [0.000, 0.000, 0.108, 1.410]],
    nu_sigma_f=[0.0132, 0.0106, 0.0246, 0.0827],
    chi=[0.70, 0.30, 0.00, 0.00],
)


def near_critical_slab(width=SLAB_WIDTH, cells=SLAB_CELLS, fission_scale=1.0) -> ProblemSpec:
    d = dict(_SLAB_XS)
    d["nu_sigma_f"] = [fission_scale * v for v in d["nu_sigma_f"]]
    xs = CrossSectionSet.from_arrays(d["sigma_t"], d["scatter"], d["nu_sigma_f"], d["chi"])
    solver = SolverConfig(eigen=EigenConfig(max_eigen_iters=1000))
    return ProblemSpec(_slab_mesh(width, cells, ["fuel"] * cells), _SLAB_BC,
                       (Material("fuel", xs),), GroupStructure(4), quadrature_order=4,
                       solver=solver, name="NEAR_CRITICAL_SLAB")


# Eight groups; groups 4..7 form a dense thermal block with upscatter.
CORE_WIDTH = 120.0
CORE_CELLS = 24
CORE_REFLECTOR_CELLS = 3


def _core_materials(fission_scale=1.0):
    st = np.array([0.30, 0.45, 0.60, 0.75, 1.00, 1.20, 1.45, 1.70])
    down = np.array([0.060, 0.070, 0.080, 0.090, 0.060, 0.050, 0.040])
    self_s = np.array([0.230, 0.370, 0.500, 0.640, 0.760, 0.880, 1.020, 1.220])
    up = np.array([0.080, 0.140, 0.220])  # g+1 -> g within the thermal block
    S = np.diag(self_s)
    for g in range(7):
        S[g + 1, g] = down[g]
    for g in range(4, 7):
        S[g, g + 1] = up[g - 4]
    # extra two-group downscatter keeps the thermal block dense below the diagonal
    for g in range(4, 6):
        S[g + 2, g] = 0.02
    nusf = fission_scale * np.array([0.0231, 0.0173, 0.0231, 0.0347, 0.0693, 0.1155, 0.1733, 0.2600])
    chi = np.array([0.55, 0.30, 0.15, 0.0, 0.0, 0.0, 0.0, 0.0])
    fuel = CrossSectionSet.from_arrays(st, S, nusf, chi)
    refl = CrossSectionSet.from_arrays(st, S)
    return fuel, refl


def upscatter_core(width=CORE_WIDTH, cells=CORE_CELLS, reflector=CORE_REFLECTOR_CELLS,
                   fission_scale=1.0) -> ProblemSpec:
    fuel, refl = _core_materials(fission_scale)
    mm = ["reflector"] * reflector + ["fuel"] * (cells - 2 * reflector) + ["reflector"] * reflector
    return ProblemSpec(_slab_mesh(width, cells, mm), _SLAB_BC,
                       (Material("fuel", fuel), Material("reflector", refl)),
                       GroupStructure(8), quadrature_order=4, name="UPSCATTER_CORE")


def _project_xs(rng, groups, fissile):
    st = rng.uniform(0.5, 2.0, groups)
    S = rng.uniform(0.0, 1.0, (groups, groups))
    S *= rng.uniform(0.3, 0.9, groups) * st / S.sum(axis=0)
    if fissile:
        f = rng.uniform(0.05, 0.5, groups)
        chi = rng.uniform(0.0, 1.0, groups)
        chi /= chi.sum()
    else:
        f = np.zeros(groups)
        chi = np.zeros(groups)
    return CrossSectionSet.from_arrays(st, S, f, chi)


def random_small(seed: int) -> ProblemSpec:
    """2x2x2 cells, 4 groups, S2; two materials in a checkerboard."""
    rng = np.random.default_rng(seed)
    groups = 4
    fuel = _project_xs(rng, groups, True)
    other = _project_xs(rng, groups, bool(rng.integers(0, 2)))
    widths = [tuple(rng.uniform(0.5, 1.5, 2)) for _ in range(3)]
    mm = tuple("a" if (i + j + k) % 2 == 0 else "b"
               for k in range(2) for j in range(2) for i in range(2))
    mesh = Mesh(2, 2, 2, *widths, mm)
    bc = BoundaryCondition(R, V, R, V, V, R)
    return ProblemSpec(mesh, bc, (Material("a", fuel), Material("b", other)),
                       GroupStructure(groups), quadrature_order=2,
                       name=f"RANDOM_SMALL({seed})")


def make_fixture(fid, seed: int | None = None) -> ProblemSpec:
    """Build a fixture by id; ``RANDOM_SMALL`` needs ``seed``."""
    fid = FixtureId(fid)
    if fid is FixtureId.RANDOM_SMALL:
        if seed is None:
            raise ConfigurationError("RANDOM_SMALL needs a seed")
        return random_small(int(seed))
    if seed is not None:
        raise ConfigurationError(f"{fid.value} takes no seed")
    return {
        FixtureId.INF_MEDIUM_1G: inf_medium_1g,
        FixtureId.INF_MEDIUM_2G: inf_medium_2g,
        FixtureId.UPSCATTER_CORE: upscatter_core,
        FixtureId.NEAR_CRITICAL_SLAB: near_critical_slab,
    }[fid]()


def fixture_from_name(name: str) -> ProblemSpec:
    """Accept ``NAME`` or ``RANDOM_SMALL(seed)`` (case-insensitive)."""
    m = re.fullmatch(r"\s*([A-Za-z0-9_]+)\s*(?:\(\s*(\d+)\s*\))?\s*", name)
    if not m:
        raise ConfigurationError(f"cannot parse fixture name {name!r}")
    key = m.group(1).upper()
    try:
        fid = FixtureId(key)
    except ValueError:
        raise ConfigurationError(
            f"unknown fixture {name!r}; choose from {[f.value for f in FixtureId]}") from None
    return make_fixture(fid, None if m.group(2) is None else int(m.group(2)))
