"""Matrix-free transport operators under isotropic (P0) scattering.

With one flux moment per group and cell, ``M`` spreads a scalar emission
density evenly over the ordinates and ``D`` is the quadrature sum, so
``T M q = D L^{-1} (q / 4 pi)`` is one sweep per group. Flux vectors are
group-major arrays of shape ``(G, ncells)``; operator handles work on the
flattened form.
"""

from __future__ import annotations

import threading

import numpy as np
import scipy.linalg

from . import kernels
from .errors import ConfigurationError
from .geometry import FOUR_PI, BoundaryCondition, Mesh, Quadrature, build_quadrature
from .parallel import SERIAL, EnergySetLayout, make_layout


class OperatorHandle:
    """Square linear map on vectors of length ``n``."""

    def __init__(self, n, apply, name=""):
        self.n = int(n)
        self._apply = apply
        self.name = name

    @property
    def shape(self):
        return (self.n, self.n)

    def __call__(self, v):
        v = np.asarray(v, dtype=float)
        if v.shape != (self.n,):
            raise ValueError(f"{self.name or 'operator'} expects length {self.n}, got {v.shape}")
        return self._apply(v)

    apply = __call__

    def __repr__(self):
        return f"OperatorHandle({self.name!r}, n={self.n})"


def identity_operator(n):
    return OperatorHandle(n, lambda v: v.copy(), "identity")


def _as_slice(rows, total):
    if rows is None:
        return slice(0, total)
    if isinstance(rows, slice):
        start, stop, step = rows.indices(total)
        if step != 1:
            raise ValueError("group ranges must be contiguous")
        return slice(start, stop)
    if isinstance(rows, range):
        return _as_slice(slice(rows.start, rows.stop, rows.step), total)
    if isinstance(rows, (int, np.integer)):
        return slice(int(rows), int(rows) + 1)
    a, b = rows
    return slice(int(a), int(b))


class _ReflectingFace:
    """Boundary unknowns on one reflecting face: entering angles x face cells."""

    def __init__(self, axis, high, entering, mirror, face_shape):
        self.axis = axis
        self.high = high
        self.entering = entering
        self.source_angles = mirror[entering]
        self.face_shape = face_shape
        self.size = entering.size * int(np.prod(face_shape))


class TransportContext:
    """Discretized problem data plus the sweep machinery for one quadrature.

    Parameters
    ----------
    mesh, bc, quadrature
        Geometry and angular discretization.
    sigma_t : (G, ncells) array
    scatter : (G, G, ncells) array, ``scatter[g, gp, c]`` from ``gp`` into ``g``
    nu_sigma_f, chi : (G, ncells) arrays
    backend : str, optional
        Sweep kernel name; defaults to the active backend.
    """

    def __init__(self, mesh: Mesh, bc: BoundaryCondition, quadrature: Quadrature,
                 sigma_t, scatter, nu_sigma_f, chi, backend=None):
        self.mesh = mesh
        self.bc = bc
        self.quadrature = quadrature
        self.sigma_t = np.ascontiguousarray(sigma_t, dtype=float)
        self.scatter = np.ascontiguousarray(scatter, dtype=float)
        self.nu_sigma_f = np.ascontiguousarray(nu_sigma_f, dtype=float)
        self.chi = np.ascontiguousarray(chi, dtype=float)
        self.groups, self.ncells = self.sigma_t.shape
        if self.scatter.shape != (self.groups, self.groups, self.ncells):
            raise ConfigurationError(f"scatter shape {self.scatter.shape} inconsistent")
        if self.ncells != mesh.ncells:
            raise ConfigurationError("cross-section arrays do not match the mesh")
        self.volumes = mesh.volumes()
        self.backend = backend or kernels.BACKEND
        self._kernel = kernels.get_sweep(self.backend)
        self._omega = np.ascontiguousarray(quadrature.directions)
        self._weights = quadrature.weights
        self._widths = self._effective_widths()
        self._faces = self._reflecting_faces()
        self._nboundary = sum(f.size for f in self._faces)
        self._response = {}
        self._lock = threading.Lock()
        self.sweep_count = 0

    # -- construction -------------------------------------------------

    @classmethod
    def from_problem(cls, spec, quadrature_order=None, backend=None):
        order = quadrature_order or spec.quadrature_order
        mesh = spec.mesh
        catalog = {m.id: m.xs for m in spec.materials}
        g = spec.groups.count
        nc = mesh.ncells
        sigma_t = np.empty((g, nc))
        scatter = np.empty((g, g, nc))
        nusf = np.empty((g, nc))
        chi = np.empty((g, nc))
        cache = {mid: xs.arrays() for mid, xs in catalog.items()}
        for c, mid in enumerate(mesh.material_map):
            st, s, f, x = cache[mid]
            sigma_t[:, c] = st
            scatter[:, :, c] = s
            nusf[:, c] = f
            chi[:, c] = x
        return cls(mesh, spec.boundaries, build_quadrature(order),
                   sigma_t, scatter, nusf, chi, backend=backend)

    def with_data(self, quadrature=None, sigma_t=None, scatter=None, nu_sigma_f=None, chi=None):
        """New context on the same mesh with any of the data replaced."""
        return TransportContext(
            self.mesh, self.bc, quadrature or self.quadrature,
            self.sigma_t if sigma_t is None else sigma_t,
            self.scatter if scatter is None else scatter,
            self.nu_sigma_f if nu_sigma_f is None else nu_sigma_f,
            self.chi if chi is None else chi,
            backend=self.backend)

    def _effective_widths(self):
        # An axis one cell thick with both faces reflecting carries no net
        # streaming: the unique DD solution has equal in/out face fluxes there.
        widths = []
        for axis, (n, w) in enumerate(zip(self.mesh.shape, (self.mesh.dx, self.mesh.dy, self.mesh.dz))):
            w = np.array(w, dtype=float)
            if n == 1 and self.bc.reflecting(axis, False) and self.bc.reflecting(axis, True):
                w[:] = np.inf
            widths.append(w)
        return widths

    def _reflecting_faces(self):
        faces = []
        nx, ny, nz = self.mesh.shape
        face_shapes = ((nz, ny), (nz, nx), (ny, nx))
        for axis in range(3):
            if np.isinf(self._widths[axis][0]):
                continue
            comp = self._omega[:, axis]
            for high in (False, True):
                if not self.bc.reflecting(axis, high):
                    continue
                mirror = self.quadrature.mirror(axis)
                entering = np.flatnonzero(comp < 0.0 if high else comp > 0.0)
                faces.append(_ReflectingFace(axis, high, entering, mirror, face_shapes[axis]))
        return faces

    # -- sweeps -------------------------------------------------------

    def _empty_faces(self, ng):
        nx, ny, nz = self.mesh.shape
        na = self.quadrature.nangles
        return (np.zeros((ng, na, nz, ny)), np.zeros((ng, na, nz, nx)),
                np.zeros((ng, na, ny, nx)))

    def _raw_sweep(self, sigma_t, source, inflow):
        ng = sigma_t.shape[0]
        psi = np.empty((ng, self.quadrature.nangles, self.ncells))
        out = self._empty_faces(ng)
        self._kernel(sigma_t, source, self._omega, *self._widths, *inflow, psi, *out)
        return psi, out

    def _gather(self, out, g):
        parts = []
        for f in self._faces:
            arr = out[f.axis][g, f.source_angles]
            parts.append(arr.reshape(-1))
        return np.concatenate(parts)

    def _place(self, inflow, g, b):
        pos = 0
        for f in self._faces:
            block = b[pos:pos + f.size].reshape((f.entering.size,) + f.face_shape)
            inflow[f.axis][g, f.entering] = block
            pos += f.size

    def _response_factor(self, g):
        with self._lock:
            lu = self._response.get(g)
            if lu is None:
                lu = self._build_response(g)
                self._response[g] = lu
        return lu

    def _build_response(self, g):
        nb = self._nboundary
        resp = np.empty((nb, nb))
        chunk = 256
        zero_src = np.zeros((1, 1, 1))
        for j0 in range(0, nb, chunk):
            j1 = min(nb, j0 + chunk)
            m = j1 - j0
            sig = np.ascontiguousarray(np.broadcast_to(self.sigma_t[g], (m, self.ncells)))
            src = np.broadcast_to(zero_src, (m, self.quadrature.nangles, self.ncells))
            inflow = self._empty_faces(m)
            eye = np.eye(nb)[j0:j1]
            for p in range(m):
                self._place(inflow, p, eye[p])
            _, out = self._raw_sweep(sig, src, inflow)
            for p in range(m):
                resp[:, j0 + p] = self._gather(out, p)
        system = np.eye(nb) - resp
        lu, piv = scipy.linalg.lu_factor(system, check_finite=True)
        diag = np.abs(np.diag(lu))
        if diag.min() <= 1e-13 * max(diag.max(), 1.0):
            raise ConfigurationError(
                f"reflecting-boundary system singular for group {g} (zero total cross section?)")
        return lu, piv

    def sweep(self, rows, source):
        """Apply ``L^{-1}`` to per-angle sources for a contiguous group range.

        ``source`` broadcasts to ``(ngroups, nangles, ncells)``. Returns the
        cell-average angular flux of that shape.
        """
        rows = _as_slice(rows, self.groups)
        sigma_t = self.sigma_t[rows]
        ng = sigma_t.shape[0]
        source = np.broadcast_to(np.asarray(source, dtype=float),
                                 (ng, self.quadrature.nangles, self.ncells))
        inflow = self._empty_faces(ng)
        psi, out = self._raw_sweep(sigma_t, source, inflow)
        if self._nboundary:
            for p, g in enumerate(range(rows.start, rows.stop)):
                r = self._gather(out, p)
                b = scipy.linalg.lu_solve(self._response_factor(g), r)
                self._place(inflow, p, b)
            psi, _ = self._raw_sweep(sigma_t, source, inflow)
        with self._lock:
            self.sweep_count += ng
        return psi

    def transport(self, rows, q):
        """``T M q`` for a group range: isotropic emission density to scalar flux."""
        q = np.asarray(q, dtype=float)
        psi = self.sweep(rows, (q / FOUR_PI)[:, None, :])
        return apply_D(psi, self.quadrature)

    # -- energy coupling ----------------------------------------------

    def fission_density(self, cols, v):
        """Per-cell ``sum_g f[g] v[g]`` over a group range, fixed summation order."""
        cols = _as_slice(cols, self.groups)
        d = np.zeros(self.ncells)
        for j, gp in enumerate(range(cols.start, cols.stop)):
            d += self.nu_sigma_f[gp] * v[j]
        return d

    def scatter_rows(self, rows, cols, v, shift=0.0):
        """Rows ``rows`` of ``(S + shift F)`` applied to ``v`` living on ``cols``.

        Each output entry is accumulated in the same order however the rows
        are split, which keeps energy-set partitions bitwise identical.
        """
        rows = _as_slice(rows, self.groups)
        cols = _as_slice(cols, self.groups)
        out = np.zeros((rows.stop - rows.start, self.ncells))
        for j, gp in enumerate(range(cols.start, cols.stop)):
            out += self.scatter[rows, gp] * v[j]
        if shift:
            out += shift * (self.chi[rows] * self.fission_density(cols, v))
        return out

    def fission_rate(self, phi):
        """Volume-integrated production ``f^T phi``."""
        phi = np.asarray(phi, dtype=float).reshape(self.groups, self.ncells)
        return float(np.dot(self.fission_density(None, phi), self.volumes))


def apply_D(psi, quadrature):
    """Quadrature sum over angles: ``(..., A, ncells) -> (..., ncells)``."""
    psi = np.asarray(psi, dtype=float)
    w = quadrature.weights
    if psi.shape[-2] != w.size:
        raise ValueError(f"angular flux has {psi.shape[-2]} angles, quadrature {w.size}")
    phi = w[0] * psi[..., 0, :]
    for a in range(1, w.size):
        phi = phi + w[a] * psi[..., a, :]
    return phi


def apply_M(phi, quadrature):
    """Isotropic moment-to-discrete map: every angle gets ``phi / 4 pi``."""
    phi = np.asarray(phi, dtype=float)
    shape = phi.shape[:-1] + (quadrature.nangles, phi.shape[-1])
    return np.broadcast_to((phi / FOUR_PI)[..., None, :], shape).copy()


def sweep(sigma_t, source, quadrature, mesh, bc, backend=None):
    """One-group ``L^{-1}``: per-cell ``sigma_t`` and ``(A, ncells)`` source -> angular flux."""
    sigma_t = np.asarray(sigma_t, dtype=float).reshape(1, -1)
    nc = sigma_t.shape[1]
    zeros = np.zeros((1, nc))
    ctx = TransportContext(mesh, bc, quadrature, sigma_t, np.zeros((1, 1, nc)),
                           zeros, zeros, backend=backend)
    return ctx.sweep(0, np.asarray(source, dtype=float)[None])[0]


def apply_S(ctx: TransportContext, phi):
    phi = np.asarray(phi, dtype=float).reshape(ctx.groups, ctx.ncells)
    return ctx.scatter_rows(None, None, phi)


def apply_F(ctx: TransportContext, phi):
    phi = np.asarray(phi, dtype=float).reshape(ctx.groups, ctx.ncells)
    return ctx.chi * ctx.fission_density(None, phi)


def within_group_operator(ctx: TransportContext, g: int) -> OperatorHandle:
    """``v -> v - T M S_gg v`` on one group's cell vector."""
    rows = slice(g, g + 1)

    def apply(v):
        v = v.reshape(1, ctx.ncells)
        return (v - ctx.transport(rows, ctx.scatter_rows(rows, rows, v))).reshape(-1)

    return OperatorHandle(ctx.ncells, apply, f"within-group {g}")


def block_operator(ctx: TransportContext, groups=None, shift=0.0,
                   layout: EnergySetLayout | None = None, pool=None) -> OperatorHandle:
    """``v -> v - T M (S + shift F)_block v`` over a contiguous group block.

    Each energy set of ``layout`` computes its own rows of the product and
    sweeps its own groups; the full result is assembled once all sets finish.
    """
    block = _as_slice(groups, ctx.groups)
    if shift < 0.0:
        raise ConfigurationError(f"shift must be >= 0, got {shift}")
    nb = block.stop - block.start
    if nb < 1:
        raise ConfigurationError("empty group block")
    if layout is None:
        layout = make_layout(block.start, block.stop, 1)
    elif (layout.start, layout.stop) != (block.start, block.stop):
        raise ConfigurationError("energy-set layout does not cover the block")
    pool = pool or SERIAL
    nc = ctx.ncells

    def apply(v):
        v = v.reshape(nb, nc)

        def task(rows):
            q = ctx.scatter_rows(rows, block, v, shift)
            local = slice(rows.start - block.start, rows.stop - block.start)
            return v[local] - ctx.transport(rows, q)

        parts = pool.map(task, layout.slices())
        return np.concatenate(parts, axis=0).reshape(-1)

    return OperatorHandle(nb * nc, apply, f"block {block.start}:{block.stop} shift={shift:g}")
