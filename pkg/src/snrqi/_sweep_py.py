"""Pure-numpy diamond-difference sweep (fallback backend).

Angles sharing an octant share a traversal order, so each cell update is
vectorized over (group, angle-in-octant). The arithmetic is written in the
same order as the compiled kernel.
"""

import numpy as np


def dd_sweep(sigma_t, source, omega, dx, dy, dz, in_x, in_y, in_z,
             psi, out_x, out_y, out_z):
    nx, ny, nz = len(dx), len(dy), len(dz)
    nonneg = omega >= 0.0
    octant = nonneg[:, 0] * 1 + nonneg[:, 1] * 2 + nonneg[:, 2] * 4
    for o in range(8):
        idx = np.flatnonzero(octant == o)
        if idx.size == 0:
            continue
        px, py, pz = bool(o & 1), bool(o & 2), bool(o & 4)
        xs = range(nx) if px else range(nx - 1, -1, -1)
        ys = range(ny) if py else range(ny - 1, -1, -1)
        zs = range(nz) if pz else range(nz - 1, -1, -1)
        amu = np.abs(omega[idx, 0])
        aeta = np.abs(omega[idx, 1])
        axi = np.abs(omega[idx, 2])
        src = source[:, idx, :]
        fx = in_x[:, idx].copy()
        fy = in_y[:, idx].copy()
        fz = in_z[:, idx].copy()
        ps = np.empty((sigma_t.shape[0], idx.size, sigma_t.shape[1]))
        for k in zs:
            cz = 2.0 * axi / dz[k]
            for j in ys:
                cy = 2.0 * aeta / dy[j]
                for i in xs:
                    cx = 2.0 * amu / dx[i]
                    c = (k * ny + j) * nx + i
                    fxl = fx[:, :, k, j]
                    fyl = fy[:, :, k, i]
                    fzl = fz[:, :, j, i]
                    num = src[:, :, c] + cx * fxl
                    num = num + cy * fyl
                    num = num + cz * fzl
                    den = sigma_t[:, c, None] + cx
                    den = den + cy
                    den = den + cz
                    pc = num / den
                    ps[:, :, c] = pc
                    fx[:, :, k, j] = 2.0 * pc - fxl
                    fy[:, :, k, i] = 2.0 * pc - fyl
                    fz[:, :, j, i] = 2.0 * pc - fzl
        psi[:, idx] = ps
        out_x[:, idx] = fx
        out_y[:, idx] = fy
        out_z[:, idx] = fz
