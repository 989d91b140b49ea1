"""Problem description, solver settings and the YAML problem-file format.

A problem file has these top-level sections (``groups`` and ``source`` are
optional)::

    mesh:        {nx, ny, nz, dx, dy, dz}       # widths: scalar or per-cell list
    boundaries:  {xlo, xhi, ylo, yhi, zlo, zhi}  # vacuum | reflecting
    groups:      {count, bounds}                # count defaults to the material data
    materials:   [{id, sigma_t, scatter, nu_sigma_f, chi}, ...]
    assignment:  {fill, map, regions}           # see _parse_assignment
    source:      {per_group, cells}             # fixed-source mode only
    solver:      {mode, quadrature, threads, precond,
                  eigen: {...}, krylov: {...}, multigroup: {...}, mge: {...}}

Unknown keys are errors that name the dotted key and its line. Every default
is filled in, and :func:`dump_problem` writes the complete effective file.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .data import CrossSectionSet, GroupStructure, Material, check_catalog, validate_xs
from .eigen import EigenConfig
from .errors import ConfigurationError, ProblemFileError
from .geometry import FACES, BoundaryCondition, Mesh
from .krylov import KrylovConfig
from .mge import MgeConfig

MODES = ("eigenvalue", "fixed_source")


@dataclass(frozen=True)
class SolverConfig:
    eigen: EigenConfig = EigenConfig()
    krylov: KrylovConfig = KrylovConfig()
    mge: MgeConfig = MgeConfig()
    precond: str = "mge"  # "mge" or "none"
    multigroup: str = "krylov"  # "krylov" or "gs"
    sets: int = 1
    upscatter_tol: float | None = None
    max_passes: int = 200
    threads: int = 1

    def __post_init__(self):
        if self.precond not in ("mge", "none"):
            raise ConfigurationError(f"precond must be 'mge' or 'none', got {self.precond!r}")
        if self.multigroup not in ("krylov", "gs"):
            raise ConfigurationError(f"multigroup must be 'krylov' or 'gs', got {self.multigroup!r}")
        if self.sets < 1 or self.threads < 1 or self.max_passes < 1:
            raise ConfigurationError("sets, threads and max_passes must be >= 1")

    @property
    def preconditioner(self) -> MgeConfig | None:
        return self.mge if self.precond == "mge" else None


@dataclass(frozen=True)
class ProblemSpec:
    mesh: Mesh
    boundaries: BoundaryCondition
    materials: tuple[Material, ...]
    groups: GroupStructure
    quadrature_order: int = 4
    mode: str = "eigenvalue"
    source: tuple[tuple[float, ...], ...] | None = None  # (G, ncells), fixed-source only
    solver: SolverConfig = SolverConfig()
    name: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "materials", tuple(self.materials))
        catalog = check_catalog(self.materials)
        G = self.groups.count
        for m in self.materials:
            if m.xs.groups != G:
                raise ConfigurationError(
                    f"material {m.id!r} has {m.xs.groups} groups, problem has {G}")
            bad = validate_xs(m.xs)
            if bad:
                raise ConfigurationError(f"material {m.id!r}: " + "; ".join(bad))
        for mid in set(self.mesh.material_map):
            if mid not in catalog:
                raise ConfigurationError(f"material map references unknown material {mid!r}")
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "fixed_source":
            if self.source is None:
                raise ConfigurationError("fixed_source mode needs a source")
            q = np.asarray(self.source, dtype=float)
            if q.shape != (G, self.mesh.ncells):
                raise ConfigurationError(
                    f"source shape {q.shape} != (groups, cells) = {(G, self.mesh.ncells)}")
            if np.any(q < 0.0) or not np.all(np.isfinite(q)):
                raise ConfigurationError("source entries must be finite and >= 0")
            object.__setattr__(self, "source", tuple(tuple(map(float, row)) for row in q))
        elif not any(self.material(mid).xs.fissile for mid in set(self.mesh.material_map)):
            raise ConfigurationError("eigenvalue mode needs at least one fissile material")

    def material(self, mid: str) -> Material:
        for m in self.materials:
            if m.id == mid:
                return m
        raise KeyError(mid)

    def source_array(self) -> np.ndarray:
        return np.array(self.source, dtype=float)

    def with_solver(self, **changes) -> "ProblemSpec":
        return replace(self, solver=replace(self.solver, **changes))


# -- YAML reading --------------------------------------------------------------


class _Doc:
    """Plain Python values plus the source line of every dotted key."""

    def __init__(self):
        self.lines = {}

    def build(self, node, path):
        self.lines.setdefault(path, node.start_mark.line + 1)
        if isinstance(node, yaml.MappingNode):
            out = {}
            for k, v in node.value:
                key = str(yaml.safe_load(yaml.serialize(k)))
                sub = f"{path}.{key}" if path else key
                self.lines[sub] = k.start_mark.line + 1
                if key in out:
                    raise ProblemFileError(f"duplicate key {sub!r}", line=self.lines[sub])
                out[key] = self.build(v, sub)
            return out
        if isinstance(node, yaml.SequenceNode):
            return [self.build(v, f"{path}[{i}]") for i, v in enumerate(node.value)]
        return yaml.safe_load(yaml.serialize(node))

    def line(self, path):
        while path and path not in self.lines:
            path = path.rpartition(".")[0]
        return self.lines.get(path)

    def error(self, path, message):
        return ProblemFileError(f"{path}: {message}" if path else message, line=self.line(path))


def _section(doc, data, path, allowed, required=()):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise doc.error(path, "expected a mapping")
    for key in data:
        if key not in allowed:
            sub = f"{path}.{key}" if path else key
            raise doc.error(sub, f"unknown key {sub!r}")
    for key in required:
        if key not in data:
            raise doc.error(path, f"missing required key {key!r}")
    return data


def _wrap(doc, path, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ProblemFileError:
        raise
    except (ConfigurationError, TypeError, ValueError) as exc:
        raise doc.error(path, str(exc)) from None


def _parse_assignment(doc, data, mesh_shape, known):
    """``fill`` sets every cell; ``map`` lists all cells (x fastest);
    ``regions`` paints inclusive index boxes ``{material, i: [lo, hi], j, k}``
    on top, in order."""
    data = _section(doc, data, "assignment", ("fill", "map", "regions"))
    nx, ny, nz = mesh_shape
    nc = nx * ny * nz
    if "fill" in data and "map" in data:
        raise doc.error("assignment", "give either 'fill' or 'map', not both")
    if "map" in data:
        cells = [str(m) for m in data["map"]]
        if len(cells) != nc:
            raise doc.error("assignment.map", f"has {len(cells)} entries for {nc} cells")
    elif "fill" in data:
        cells = [str(data["fill"])] * nc
    else:
        cells = [None] * nc
    for r, region in enumerate(data.get("regions") or []):
        path = f"assignment.regions[{r}]"
        region = _section(doc, region, path, ("material", "i", "j", "k"), ("material",))
        bounds = []
        for axis, n in zip("ijk", mesh_shape):
            lo, hi = region.get(axis, [0, n - 1])
            if not 0 <= lo <= hi < n:
                raise doc.error(f"{path}.{axis}", f"range [{lo}, {hi}] outside 0..{n - 1}")
            bounds.append(range(lo, hi + 1))
        for k in bounds[2]:
            for j in bounds[1]:
                for i in bounds[0]:
                    cells[(k * ny + j) * nx + i] = str(region["material"])
    for c, mid in enumerate(cells):
        if mid is None:
            raise doc.error("assignment", f"cell {c} has no material")
        if mid not in known:
            raise doc.error("assignment", f"unknown material {mid!r}")
    return tuple(cells)


_EIGEN_KEYS = {"solver": "solver", "k_tol": "k_tol", "flux_tol": "flux_tol",
               "max_iters": "max_eigen_iters", "warmup_pi_iters": "warmup_pi_iters",
               "shift": "fixed_shift"}
_KRYLOV_KEYS = {"restart_m": "restart_m", "max_iters": "max_iters", "tol": "tol"}
_MGE_KEYS = {"weight": "weight", "relaxations": "relaxations", "v_cycles": "v_cycles",
             "depth": "depth", "quadrature": "quadrature_order", "set_local": "set_local"}
_MG_KEYS = {"method": "multigroup", "sets": "sets", "upscatter_tol": "upscatter_tol",
            "max_passes": "max_passes"}


def _sub_config(doc, data, path, cls, keymap):
    data = _section(doc, data, path, keymap)
    kwargs = {keymap[k]: v for k, v in data.items()}
    return _wrap(doc, path, cls, **kwargs)


def _parse_solver(doc, data):
    data = _section(doc, data, "solver", ("mode", "quadrature", "threads", "precond",
                                          "eigen", "krylov", "multigroup", "mge"))
    eigen = _sub_config(doc, data.get("eigen"), "solver.eigen", EigenConfig, _EIGEN_KEYS)
    krylov = _sub_config(doc, data.get("krylov"), "solver.krylov", KrylovConfig, _KRYLOV_KEYS)
    mge = _sub_config(doc, data.get("mge"), "solver.mge", MgeConfig, _MGE_KEYS)
    mg = _section(doc, data.get("multigroup"), "solver.multigroup", _MG_KEYS)
    kwargs = {_MG_KEYS[k]: v for k, v in mg.items()}
    solver = _wrap(doc, "solver", SolverConfig, eigen=eigen, krylov=krylov, mge=mge,
                   precond=data.get("precond", "mge"), threads=data.get("threads", 1), **kwargs)
    return solver, data.get("mode", "eigenvalue"), data.get("quadrature", 4)


def load_problem(text: str, name: str = "") -> ProblemSpec:
    """Parse problem-file text into a :class:`ProblemSpec`."""
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ProblemFileError(f"YAML syntax error: {getattr(exc, 'problem', exc)}",
                               line=mark.line + 1 if mark else None) from None
    doc = _Doc()
    data = doc.build(root, "") if root is not None else {}
    data = _section(doc, data, "", ("mesh", "boundaries", "groups", "materials",
                                    "assignment", "source", "solver"),
                    ("mesh", "boundaries", "materials", "assignment"))

    mesh_d = _section(doc, data["mesh"], "mesh", ("nx", "ny", "nz", "dx", "dy", "dz"),
                      ("nx", "ny", "nz", "dx", "dy", "dz"))
    bnd = _section(doc, data["boundaries"], "boundaries", FACES, FACES)
    bc = _wrap(doc, "boundaries", BoundaryCondition, **{f: bnd[f] for f in FACES})

    mats = data["materials"]
    if not isinstance(mats, list) or not mats:
        raise doc.error("materials", "expected a nonempty list")
    materials = []
    for i, m in enumerate(mats):
        path = f"materials[{i}]"
        m = _section(doc, m, path, ("id", "sigma_t", "scatter", "nu_sigma_f", "chi"),
                     ("id", "sigma_t", "scatter"))
        xs = _wrap(doc, path, CrossSectionSet.from_arrays, m["sigma_t"], m["scatter"],
                   m.get("nu_sigma_f"), m.get("chi"))
        bad = validate_xs(xs)
        if bad:
            raise doc.error(path, f"material {m['id']!r}: " + "; ".join(bad))
        materials.append(_wrap(doc, path, Material, str(m["id"]), xs))
    _wrap(doc, "materials", check_catalog, materials)

    g_default = materials[0].xs.groups
    gd = _section(doc, data.get("groups"), "groups", ("count", "bounds"))
    groups = _wrap(doc, "groups", GroupStructure, gd.get("count", g_default), gd.get("bounds"))

    shape = (mesh_d["nx"], mesh_d["ny"], mesh_d["nz"])
    cells = _parse_assignment(doc, data["assignment"], shape, {m.id for m in materials})
    mesh = _wrap(doc, "mesh", Mesh, mesh_d["nx"], mesh_d["ny"], mesh_d["nz"],
                 mesh_d["dx"], mesh_d["dy"], mesh_d["dz"], cells)

    solver, mode, order = _parse_solver(doc, data.get("solver"))
    source = None
    if "source" in data:
        sd = _section(doc, data["source"], "source", ("per_group", "cells"))
        if ("per_group" in sd) == ("cells" in sd):
            raise doc.error("source", "give exactly one of 'per_group' or 'cells'")
        if "per_group" in sd:
            pg = np.asarray(sd["per_group"], dtype=float)
            source = np.repeat(pg[:, None], mesh.ncells, axis=1)
        else:
            source = np.asarray(sd["cells"], dtype=float)
        source = tuple(map(tuple, source))
    return _wrap(doc, "", ProblemSpec, mesh, bc, tuple(materials), groups, order, mode,
                 source, solver, name)


def parse_problem(path) -> ProblemSpec:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    return load_problem(text, name=str(path))


# -- YAML writing --------------------------------------------------------------


def problem_to_dict(spec: ProblemSpec) -> dict:
    mesh = spec.mesh
    s = spec.solver
    out = {
        "mesh": {"nx": mesh.nx, "ny": mesh.ny, "nz": mesh.nz,
                 "dx": list(mesh.dx), "dy": list(mesh.dy), "dz": list(mesh.dz)},
        "boundaries": {f: spec.boundaries.face(i // 2, bool(i % 2)).value
                       for i, f in enumerate(FACES)},
        "groups": {"count": spec.groups.count},
        "materials": [{"id": m.id, "sigma_t": list(m.xs.sigma_t),
                       "scatter": [list(r) for r in m.xs.scatter],
                       "nu_sigma_f": list(m.xs.nu_sigma_f), "chi": list(m.xs.chi)}
                      for m in spec.materials],
    }
    if spec.groups.bounds is not None:
        out["groups"]["bounds"] = list(spec.groups.bounds)
    mm = mesh.material_map
    out["assignment"] = {"fill": mm[0]} if len(set(mm)) == 1 else {"map": list(mm)}
    if spec.source is not None:
        out["source"] = {"cells": [list(r) for r in spec.source]}

    def sub(cfg, keymap):
        return {k: getattr(cfg, v) for k, v in keymap.items()}

    out["solver"] = {
        "mode": spec.mode, "quadrature": spec.quadrature_order, "threads": s.threads,
        "precond": s.precond,
        "eigen": sub(s.eigen, _EIGEN_KEYS),
        "krylov": sub(s.krylov, _KRYLOV_KEYS),
        "multigroup": sub(s, _MG_KEYS),
        "mge": sub(s.mge, _MGE_KEYS),
    }
    return out


def dump_problem(spec: ProblemSpec) -> str:
    """Complete effective problem file; ``load_problem`` reads it back equal."""
    return yaml.safe_dump(problem_to_dict(spec), sort_keys=False, default_flow_style=None)
