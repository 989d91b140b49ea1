# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled diamond-difference sweep.

Must stay operation-for-operation identical to ``_sweep_py.dd_sweep`` so the
two backends agree to the last bit on the same inputs.
"""

from libc.math cimport fabs


def dd_sweep(const double[:, ::1] sigma_t,
             const double[:, :, :] source,
             const double[:, ::1] omega,
             const double[::1] dx,
             const double[::1] dy,
             const double[::1] dz,
             const double[:, :, :, ::1] in_x,
             const double[:, :, :, ::1] in_y,
             const double[:, :, :, ::1] in_z,
             double[:, :, ::1] psi,
             double[:, :, :, ::1] out_x,
             double[:, :, :, ::1] out_y,
             double[:, :, :, ::1] out_z):
    cdef Py_ssize_t ng = sigma_t.shape[0]
    cdef Py_ssize_t na = omega.shape[0]
    cdef Py_ssize_t nx = dx.shape[0]
    cdef Py_ssize_t ny = dy.shape[0]
    cdef Py_ssize_t nz = dz.shape[0]
    cdef Py_ssize_t g, a, i, j, k, ii, jj, kk, c
    cdef Py_ssize_t i0, j0, k0, si, sj, sk
    cdef double mu, eta, xi, cx, cy, cz, num, den, pc

    with nogil:
        for g in range(ng):
            for a in range(na):
                mu = omega[a, 0]
                eta = omega[a, 1]
                xi = omega[a, 2]
                # face buffers start as inflow and end as outflow
                for k in range(nz):
                    for j in range(ny):
                        out_x[g, a, k, j] = in_x[g, a, k, j]
                    for i in range(nx):
                        out_y[g, a, k, i] = in_y[g, a, k, i]
                for j in range(ny):
                    for i in range(nx):
                        out_z[g, a, j, i] = in_z[g, a, j, i]
                if mu >= 0.0:
                    i0 = 0
                    si = 1
                else:
                    i0 = nx - 1
                    si = -1
                if eta >= 0.0:
                    j0 = 0
                    sj = 1
                else:
                    j0 = ny - 1
                    sj = -1
                if xi >= 0.0:
                    k0 = 0
                    sk = 1
                else:
                    k0 = nz - 1
                    sk = -1
                for kk in range(nz):
                    k = k0 + sk * kk
                    cz = 2.0 * fabs(xi) / dz[k]
                    for jj in range(ny):
                        j = j0 + sj * jj
                        cy = 2.0 * fabs(eta) / dy[j]
                        for ii in range(nx):
                            i = i0 + si * ii
                            cx = 2.0 * fabs(mu) / dx[i]
                            c = (k * ny + j) * nx + i
                            num = source[g, a, c] + cx * out_x[g, a, k, j]
                            num = num + cy * out_y[g, a, k, i]
                            num = num + cz * out_z[g, a, j, i]
                            den = sigma_t[g, c] + cx
                            den = den + cy
                            den = den + cz
                            pc = num / den
                            psi[g, a, c] = pc
                            out_x[g, a, k, j] = 2.0 * pc - out_x[g, a, k, j]
                            out_y[g, a, k, i] = 2.0 * pc - out_y[g, a, k, i]
                            out_z[g, a, j, i] = 2.0 * pc - out_z[g, a, j, i]
