"""Dense verification path.

Nothing here imports the Krylov or eigenvalue modules. ``assemble_pair``
also avoids the sweep: it writes every diamond-difference equation
(balance, closure, boundary) into one dense system per group and solves it
directly, so it checks the sweep ordering and the reflecting-boundary
treatment independently.
"""

from __future__ import annotations

import warnings

import numpy as np
import scipy.linalg

from .errors import OracleError, SingularMatrixError
from .geometry import FOUR_PI, build_quadrature

MAX_DIM = 4096


class OracleDegenerateWarning(UserWarning):
    """The requested eigenvalue of a pencil is not simple."""


def materialize(A, n=None) -> np.ndarray:
    """Dense matrix whose column ``j`` is ``A(e_j)``."""
    n = A.n if n is None else int(n)
    if n > MAX_DIM:
        raise OracleError(f"refusing to materialize {n} unknowns (limit {MAX_DIM})")
    M = np.empty((n, n))
    e = np.zeros(n)
    for j in range(n):
        e[j] = 1.0
        M[:, j] = A(e)
        e[j] = 0.0
    if not np.all(np.isfinite(M)):
        raise OracleError("materialized operator has non-finite entries")
    return M


def dense_solve(M, b):
    """Partial-pivot LU solve; pivots below ``1e-13 * max|M|`` are singular."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"dense_solve needs a square matrix, got {M.shape}")
    scale = np.abs(M).max() if M.size else 0.0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=True)
    small = np.flatnonzero(np.abs(np.diag(lu)) <= 1e-13 * scale)
    if scale == 0.0 or small.size:
        p = int(small[0]) if small.size else 0
        raise SingularMatrixError(f"matrix singular to tolerance at pivot {p}", pivot=p)
    return scipy.linalg.lu_solve((lu, piv), np.asarray(b, dtype=float))


def _power(M, v, tol, max_steps):
    lam = 0.0
    for step in range(1, max_steps + 1):
        w = M @ v
        nrm = np.linalg.norm(w)
        if nrm == 0.0:
            return 0.0, v
        lam_new = float(np.dot(v, w))
        w /= nrm
        if np.dot(w, v) < 0.0:
            w = -w
        if np.linalg.norm(w - v) <= tol and abs(lam_new - lam) <= tol * abs(lam_new):
            return lam_new, w
        v, lam = w, lam_new
    raise OracleError(f"power iteration did not converge in {max_steps} steps")


def dominance_ratio(A, tol=1e-12, max_steps=50_000):
    """``(lambda1, lambda2, lambda2 / lambda1)`` by power iteration and deflation.

    ``A`` is a dense matrix or an operator handle (materialized first). The
    second eigenvalue comes from power iteration on
    ``A - lambda1 v1 w1^T / (w1^T v1)`` with ``w1`` the left eigenvector.
    """
    M = materialize(A) if callable(A) and not isinstance(A, np.ndarray) else np.asarray(A, float)
    n = M.shape[0]
    start = np.ones(n) / np.sqrt(n)
    lam1, v1 = _power(M, start, tol, max_steps)
    _, w1 = _power(M.T, start, tol, max_steps)
    denom = float(np.dot(w1, v1))
    if abs(denom) < 1e-14:
        raise OracleError("left and right dominant eigenvectors are orthogonal")
    deflated = M - lam1 * np.outer(v1, w1) / denom
    rng = np.random.default_rng(12345)
    lam2, _ = _power(deflated, rng.standard_normal(n) / np.sqrt(n), tol, max_steps)
    return lam1, lam2, lam2 / lam1


def generalized_eig_smallest(A, B, tol=1e-12, max_steps=200):
    """Smallest-magnitude finite eigenpair of ``A x = gamma B x``.

    A coarse scan of the pencil spectrum picks a shift just below the
    target; inverse iteration with dense LU then polishes the eigenvector,
    finishing with Rayleigh-quotient steps until the residual
    ``||A x - gamma B x|| / ||A x||`` is below ``tol``.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape or A.shape[0] != A.shape[1]:
        raise ValueError("generalized_eig_smallest needs equal square matrices")
    vals = scipy.linalg.eigvals(A, B)
    finite = vals[np.isfinite(vals)]
    if finite.size == 0:
        raise OracleError("pencil has no finite eigenvalues")
    target = finite[np.argmin(np.abs(finite))]
    if abs(target.imag) > 1e-8 * max(abs(target), 1.0):
        raise OracleError(f"smallest eigenvalue is complex: {target}")
    gamma = float(target.real)
    if np.sum(np.abs(finite - target) <= 1e-10 * max(abs(target), 1.0)) > 1:
        warnings.warn(f"eigenvalue {gamma:g} is repeated; the eigenvector is not unique",
                      OracleDegenerateWarning, stacklevel=2)
    sigma = gamma - 1e-6 * max(abs(gamma), 1.0)
    x = np.ones(A.shape[0])
    for _ in range(3):
        x = dense_solve(A - sigma * B, B @ x)
        x /= np.linalg.norm(x)
    for _ in range(max_steps):
        Bx = B @ x
        den = float(np.dot(x, Bx))
        if den != 0.0:
            gamma = float(np.dot(x, A @ x)) / den
        res = np.linalg.norm(A @ x - gamma * Bx) / max(np.linalg.norm(A @ x), 1e-300)
        if res <= tol:
            break
        try:
            y = dense_solve(A - gamma * B, Bx)
        except SingularMatrixError:
            break
        x = y / np.linalg.norm(y)
    else:
        raise OracleError("generalized inverse iteration did not converge")
    if x.sum() < 0.0:
        x = -x
    return gamma, x


# -- independent diamond-difference assembly ---------------------------------


def _dd_transport_matrix(mesh, bc, quadrature, sigma_t):
    """Dense ``T M`` for one group: isotropic cell emission -> scalar flux.

    Unknowns per angle are cell averages followed by x, y and z face fluxes.
    """
    nx, ny, nz = mesh.shape
    nc = mesh.ncells
    dirs = quadrature.directions
    na = dirs.shape[0]
    widths = [np.array(mesh.dx), np.array(mesh.dy), np.array(mesh.dz)]
    nfx = (nx + 1) * ny * nz
    nfy = nx * (ny + 1) * nz
    nfz = nx * ny * (nz + 1)
    per = nc + nfx + nfy + nfz
    size = na * per
    if size > MAX_DIM:
        raise OracleError(f"assembled DD system has {size} unknowns (limit {MAX_DIM})")

    def fx(i, j, k):
        return nc + (k * ny + j) * (nx + 1) + i

    def fy(i, j, k):
        return nc + nfx + (k * (ny + 1) + j) * nx + i

    def fz(i, j, k):
        return nc + nfx + nfy + (k * ny + j) * nx + i

    face_index = (fx, fy, fz)
    # A one-cell axis with both faces reflecting is an infinite uniform
    # direction. The DD equations alone leave an odd face mode free once two
    # such axes exist, so translation invariance is imposed explicitly.
    degenerate = [mesh.shape[ax] == 1 and bc.reflecting(ax, False) and bc.reflecting(ax, True)
                  for ax in range(3)]
    mirrors = [None, None, None]
    for axis in range(3):
        if bc.reflecting(axis, False) or bc.reflecting(axis, True):
            d = dirs.copy()
            d[:, axis] *= -1.0
            mirrors[axis] = [int(np.flatnonzero(np.all(np.abs(dirs - t) < 1e-12, axis=1))[0])
                             for t in d]

    K = np.zeros((size, size))
    rhs = np.zeros((size, nc))
    row = 0
    for a in range(na):
        base = a * per
        for k in range(nz):
            for j in range(ny):
                for i in range(nx):
                    c = (k * ny + j) * nx + i
                    lo = (fx(i, j, k), fy(i, j, k), fz(i, j, k))
                    hi = (fx(i + 1, j, k), fy(i, j + 1, k), fz(i, j, k + 1))
                    # balance
                    K[row, base + c] = sigma_t[c]
                    for axis, idx in enumerate((i, j, k)):
                        coef = dirs[a, axis] / widths[axis][idx]
                        K[row, base + hi[axis]] += coef
                        K[row, base + lo[axis]] -= coef
                    rhs[row, c] = 1.0 / FOUR_PI
                    row += 1
                    # closures
                    for axis in range(3):
                        K[row, base + c] = 1.0
                        K[row, base + lo[axis]] -= 0.5
                        K[row, base + hi[axis]] -= 0.5
                        row += 1
        # inflow boundary faces, one per boundary face cell per axis
        for axis in range(3):
            high = dirs[a, axis] < 0.0
            n_axis = mesh.shape[axis]
            others = [r for r in range(3) if r != axis]
            for p in range(mesh.shape[others[1]]):
                for q in range(mesh.shape[others[0]]):
                    ijk = [0, 0, 0]
                    ijk[others[0]] = q
                    ijk[others[1]] = p
                    ijk[axis] = n_axis if high else 0
                    col = face_index[axis](*ijk)
                    K[row, base + col] = 1.0
                    if degenerate[axis]:
                        # uniform along the axis: inflow equals outflow
                        ijk[axis] = 0 if high else n_axis
                        K[row, base + face_index[axis](*ijk)] -= 1.0
                    elif bc.reflecting(axis, high):
                        K[row, mirrors[axis][a] * per + col] -= 1.0
                    row += 1
    assert row == size
    sol = np.linalg.solve(K, rhs)
    w = quadrature.weights
    phi = np.zeros((nc, nc))
    for a in range(na):
        phi += w[a] * sol[a * per:a * per + nc]
    return phi


def assemble_pair(spec, quadrature_order=None, shift=0.0):
    """Dense ``(A, B)`` with ``A = I - T M (S + shift F)`` and ``B = T M F``.

    Built straight from the problem description. Unknown ordering is
    group-major like the flux vectors.
    """
    mesh = spec.mesh
    quad = build_quadrature(quadrature_order or spec.quadrature_order)
    catalog = {m.id: m.xs for m in spec.materials}
    G = spec.groups.count
    nc = mesh.ncells
    n = G * nc
    if n > MAX_DIM:
        raise OracleError(f"{n} unknowns exceeds oracle limit {MAX_DIM}")
    S = np.zeros((n, n))
    F = np.zeros((n, n))
    sig = np.zeros((G, nc))
    for c, mid in enumerate(mesh.material_map):
        xs = catalog[mid]
        for g in range(G):
            sig[g, c] = xs.sigma_t[g]
            for gp in range(G):
                S[g * nc + c, gp * nc + c] = xs.scatter[g][gp]
                F[g * nc + c, gp * nc + c] = xs.chi[g] * xs.nu_sigma_f[gp]
    TM = np.zeros((n, n))
    for g in range(G):
        TM[g * nc:(g + 1) * nc, g * nc:(g + 1) * nc] = _dd_transport_matrix(
            mesh, spec.boundaries, quad, sig[g])
    A = np.eye(n) - TM @ (S + shift * F)
    B = TM @ F
    return A, B


def k_effective(spec):
    """Reference ``k = 1 / gamma*`` from the assembled pair."""
    A, B = assemble_pair(spec)
    gamma, x = generalized_eig_smallest(A, B)
    return 1.0 / gamma, x
