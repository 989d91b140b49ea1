"""Structured Cartesian mesh, boundary conditions and level-symmetric quadrature."""

from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

FOUR_PI = 4.0 * math.pi
FACES = ("xlo", "xhi", "ylo", "yhi", "zlo", "zhi")


class Boundary(str, enum.Enum):
    VACUUM = "vacuum"
    REFLECTING = "reflecting"


@dataclass(frozen=True)
class BoundaryCondition:
    xlo: Boundary = Boundary.VACUUM
    xhi: Boundary = Boundary.VACUUM
    ylo: Boundary = Boundary.VACUUM
    yhi: Boundary = Boundary.VACUUM
    zlo: Boundary = Boundary.VACUUM
    zhi: Boundary = Boundary.VACUUM

    def __post_init__(self):
        for face in FACES:
            value = getattr(self, face)
            try:
                object.__setattr__(self, face, Boundary(value))
            except ValueError:
                raise ConfigurationError(
                    f"boundary {face} must be 'vacuum' or 'reflecting', got {value!r}") from None

    @classmethod
    def uniform(cls, kind) -> "BoundaryCondition":
        return cls(*([Boundary(kind)] * 6))

    def face(self, axis: int, high: bool) -> Boundary:
        return getattr(self, FACES[2 * axis + int(high)])

    def reflecting(self, axis: int, high: bool) -> bool:
        return self.face(axis, high) is Boundary.REFLECTING


@dataclass(frozen=True)
class Mesh:
    """Cells are flattened lexicographically with x fastest."""

    nx: int
    ny: int
    nz: int
    dx: tuple[float, ...]
    dy: tuple[float, ...]
    dz: tuple[float, ...]
    material_map: tuple[str, ...]

    def __post_init__(self):
        for axis, n in zip("xyz", (self.nx, self.ny, self.nz)):
            if int(n) != n or n < 1:
                raise ConfigurationError(f"n{axis} must be a positive integer, got {n}")
        for axis, n in zip("xyz", (self.nx, self.ny, self.nz)):
            widths = getattr(self, "d" + axis)
            if isinstance(widths, (int, float)):
                widths = (widths,) * int(n)
            widths = tuple(float(w) for w in widths)
            if len(widths) != n:
                raise ConfigurationError(f"d{axis} has {len(widths)} widths for n{axis}={n}")
            if not all(w > 0.0 and math.isfinite(w) for w in widths):
                raise ConfigurationError(f"d{axis} widths must be positive and finite")
            object.__setattr__(self, "d" + axis, widths)
        mm = self.material_map
        if isinstance(mm, str):
            mm = (mm,) * self.ncells
        mm = tuple(mm)
        if len(mm) != self.ncells:
            raise ConfigurationError(
                f"material map covers {len(mm)} cells, mesh has {self.ncells}")
        object.__setattr__(self, "material_map", mm)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.nx, self.ny, self.nz)

    @property
    def ncells(self) -> int:
        return self.nx * self.ny * self.nz

    def volumes(self) -> np.ndarray:
        dx, dy, dz = (np.array(w) for w in (self.dx, self.dy, self.dz))
        return (dz[:, None, None] * dy[None, :, None] * dx[None, None, :]).reshape(-1)


def cell_index(mesh: Mesh, i: int, j: int, k: int) -> int:
    if not (0 <= i < mesh.nx and 0 <= j < mesh.ny and 0 <= k < mesh.nz):
        raise IndexError(f"cell ({i}, {j}, {k}) outside mesh {mesh.shape}")
    return (k * mesh.ny + j) * mesh.nx + i


def cell_coords(mesh: Mesh, index: int) -> tuple[int, int, int]:
    """Inverse of :func:`cell_index`."""
    if not 0 <= index < mesh.ncells:
        raise IndexError(f"cell index {index} outside 0..{mesh.ncells - 1}")
    k, rem = divmod(index, mesh.nx * mesh.ny)
    j, i = divmod(rem, mesh.nx)
    return i, j, k


# Level-symmetric LQn: smallest cosine and per-class point weights (octant sum 1).
_LQN = {
    2: (1.0 / math.sqrt(3.0), {(1, 1, 1): 1.0}),
    4: (0.3500212, {(1, 1, 2): 1.0 / 3.0}),
    8: (0.2182179, {(1, 1, 4): 0.1209877, (1, 2, 3): 0.0907407, (2, 2, 2): 0.0925926}),
    12: (0.1672126, {(1, 1, 6): 0.0707626, (1, 2, 5): 0.0558811, (1, 3, 4): 0.0373377,
                     (2, 2, 4): 0.0502819, (2, 3, 3): 0.0258513}),
}
SUPPORTED_ORDERS = tuple(sorted(_LQN))


@dataclass(frozen=True, eq=False)
class Quadrature:
    """Discrete ordinates: unit directions (A, 3) and weights summing to 4 pi."""

    order: int
    directions: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        d = np.ascontiguousarray(self.directions, dtype=float).reshape(-1, 3)
        w = np.ascontiguousarray(self.weights, dtype=float).reshape(-1)
        if d.shape[0] != w.size:
            raise ConfigurationError("quadrature needs one weight per direction")
        d.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "directions", d)
        object.__setattr__(self, "weights", w)

    @property
    def nangles(self) -> int:
        return self.weights.size

    def mirror(self, axis: int) -> np.ndarray:
        """Index of each direction's reflection across a face normal to ``axis``.

        Raises ConfigurationError if the set is not closed under reflection.
        """
        d = self.directions
        target = d.copy()
        target[:, axis] *= -1.0
        out = np.empty(d.shape[0], dtype=np.intp)
        for a in range(d.shape[0]):
            hit = np.flatnonzero(np.all(np.abs(d - target[a]) < 1e-12, axis=1))
            if hit.size != 1:
                raise ConfigurationError(
                    f"direction {a} has no unique mirror across axis {axis}")
            out[a] = hit[0]
        return out


def build_quadrature(order: int) -> Quadrature:
    """Standard level-symmetric set, octant points replicated by sign reflection."""
    if order not in _LQN:
        raise ConfigurationError(
            f"unsupported quadrature order {order}; supported: {list(SUPPORTED_ORDERS)}")
    mu1, classes = _LQN[order]
    n2 = order // 2
    if order == 2:
        levels = [mu1]
    else:
        delta = 2.0 * (1.0 - 3.0 * mu1 * mu1) / (order - 2)
        levels = [math.sqrt(mu1 * mu1 + i * delta) for i in range(n2)]
    octant = []
    for i, j in itertools.product(range(1, n2 + 1), repeat=2):
        k = n2 + 2 - i - j
        if k < 1:
            continue
        octant.append(((levels[i - 1], levels[j - 1], levels[k - 1]),
                       classes[tuple(sorted((i, j, k)))]))
    dirs, wts = [], []
    for signs in itertools.product((1.0, -1.0), repeat=3):
        for (mu, eta, xi), w in octant:
            dirs.append((signs[0] * mu, signs[1] * eta, signs[2] * xi))
            wts.append(w)
    wts = np.array(wts)
    wts *= FOUR_PI / wts.sum()
    return Quadrature(order, np.array(dirs), wts)
