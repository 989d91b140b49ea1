"""Multigroup cross-section data model.

Group indices run 0..G-1 from highest to lowest energy. The scattering
matrix is dense with ``scatter[g][gp]`` the transfer from ``gp`` into ``g``.
All containers hold tuples so instances are hashable and immutable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError

_TOL = 1e-12


def _as_tuple(values) -> tuple[float, ...]:
    return tuple(float(v) for v in values)


def _as_matrix(rows) -> tuple[tuple[float, ...], ...]:
    return tuple(_as_tuple(r) for r in rows)


@dataclass(frozen=True)
class GroupStructure:
    """Energy group count with optional descending edges in eV (metadata)."""

    count: int
    bounds: tuple[float, ...] | None = None

    def __post_init__(self):
        if int(self.count) != self.count or self.count < 1:
            raise ConfigurationError(f"group count must be a positive integer, got {self.count}")
        object.__setattr__(self, "count", int(self.count))
        if self.bounds is not None:
            b = _as_tuple(self.bounds)
            if len(b) != self.count + 1:
                raise ConfigurationError(
                    f"group bounds need {self.count + 1} edges, got {len(b)}")
            if any(hi <= lo for hi, lo in zip(b, b[1:])):
                raise ConfigurationError("group bounds must be strictly decreasing")
            object.__setattr__(self, "bounds", b)


@dataclass(frozen=True)
class CrossSectionSet:
    """Macroscopic multigroup data for one material (1/cm)."""

    sigma_t: tuple[float, ...]
    scatter: tuple[tuple[float, ...], ...]
    nu_sigma_f: tuple[float, ...]
    chi: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "sigma_t", _as_tuple(self.sigma_t))
        object.__setattr__(self, "scatter", _as_matrix(self.scatter))
        object.__setattr__(self, "nu_sigma_f", _as_tuple(self.nu_sigma_f))
        object.__setattr__(self, "chi", _as_tuple(self.chi))
        g = len(self.sigma_t)
        if g < 1:
            raise ConfigurationError("cross-section set needs at least one group")
        shapes_ok = (
            len(self.scatter) == g
            and all(len(r) == g for r in self.scatter)
            and len(self.nu_sigma_f) == g
            and len(self.chi) == g
        )
        if not shapes_ok:
            raise ConfigurationError(f"inconsistent group dimensions for {g}-group set")

    @property
    def groups(self) -> int:
        return len(self.sigma_t)

    @property
    def fissile(self) -> bool:
        return any(v > 0.0 for v in self.nu_sigma_f)

    def arrays(self):
        """Return ``(sigma_t, scatter, nu_sigma_f, chi)`` as float arrays."""
        return (np.array(self.sigma_t), np.array(self.scatter),
                np.array(self.nu_sigma_f), np.array(self.chi))

    @classmethod
    def from_arrays(cls, sigma_t, scatter, nu_sigma_f=None, chi=None) -> "CrossSectionSet":
        sigma_t = np.asarray(sigma_t, dtype=float).reshape(-1)
        g = sigma_t.size
        scatter = np.asarray(scatter, dtype=float).reshape(g, g)
        nu_sigma_f = np.zeros(g) if nu_sigma_f is None else np.asarray(nu_sigma_f, float)
        chi = np.zeros(g) if chi is None else np.asarray(chi, float)
        return cls(tuple(sigma_t), tuple(map(tuple, scatter)), tuple(nu_sigma_f), tuple(chi))


@dataclass(frozen=True)
class Material:
    id: str
    xs: CrossSectionSet

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id.strip():
            raise ConfigurationError("material id must be a nonempty string")


def validate_xs(xs: CrossSectionSet) -> list[str]:
    """Return a description of every invariant violation in ``xs``.

    An empty list means the set is physically admissible: nonnegative
    entries, column scattering sums not above the total cross section, and a
    normalized fission spectrum whenever the material is fissile.
    """
    sigma_t, scatter, nu_sigma_f, chi = xs.arrays()
    problems = []
    for name, arr in (("sigma_t", sigma_t), ("scatter", scatter),
                      ("nu_sigma_f", nu_sigma_f), ("chi", chi)):
        if not np.all(np.isfinite(arr)):
            problems.append(f"{name} has non-finite entries")
        elif np.any(arr < 0.0):
            problems.append(f"{name} has negative entries")
    colsum = scatter.sum(axis=0)
    for gp in range(xs.groups):
        if colsum[gp] > sigma_t[gp] * (1.0 + _TOL):
            problems.append(f"scattering exceeds total in column {gp}")
    chi_sum = float(chi.sum())
    if np.any(nu_sigma_f > 0.0):
        if not math.isclose(chi_sum, 1.0, rel_tol=0.0, abs_tol=1e-10):
            problems.append(f"chi does not sum to 1 (sum={chi_sum:.12g})")
    elif np.any(chi != 0.0):
        problems.append("chi nonzero for a non-fissile material")
    return problems


def check_catalog(materials: Sequence[Material]) -> dict[str, Material]:
    """Index ``materials`` by id, rejecting duplicates and mismatched group counts."""
    catalog: dict[str, Material] = {}
    groups = None
    for m in materials:
        if m.id in catalog:
            raise ConfigurationError(f"duplicate material id {m.id!r}")
        if groups is None:
            groups = m.xs.groups
        elif m.xs.groups != groups:
            raise ConfigurationError(
                f"material {m.id!r} has {m.xs.groups} groups, expected {groups}")
        catalog[m.id] = m
    return catalog


def upscatter_start(scatter: np.ndarray) -> int:
    """First group with a nonzero super-diagonal entry, or G if none.

    ``scatter`` may be a single (G, G) matrix or a stack (..., G, G).
    """
    s = np.asarray(scatter)
    g = s.shape[-1]
    upper = np.triu(np.ones((g, g), dtype=bool), k=1)
    rows = np.any((s != 0.0) & upper, axis=tuple(range(s.ndim - 2)) + (s.ndim - 1,))
    hits = np.flatnonzero(rows)
    return int(hits[0]) if hits.size else g
