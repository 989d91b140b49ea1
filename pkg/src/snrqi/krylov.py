"""Restarted GMRES(m) with optional right preconditioning.

Arnoldi uses modified Gram-Schmidt with one reorthogonalization pass and the
Hessenberg least-squares problem is reduced by Givens rotations. Preconditioned
directions ``z_j = P(v_j)`` are kept so the update needs no extra ``P`` apply.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, NumericalBreakdown


@dataclass(frozen=True)
class KrylovConfig:
    restart_m: int = 30
    max_iters: int = 1000
    tol: float = 1e-6

    def __post_init__(self):
        if self.restart_m < 1 or self.max_iters < 1:
            raise ConfigurationError("restart_m and max_iters must be positive")
        if self.restart_m > self.max_iters:
            raise ConfigurationError(
                f"restart_m ({self.restart_m}) exceeds max_iters ({self.max_iters})")
        if not self.tol > 0.0:
            raise ConfigurationError(f"Krylov tolerance must be > 0, got {self.tol}")


@dataclass
class KrylovResult:
    x: np.ndarray
    iterations: int
    residual: float
    converged: bool
    # per restart cycle: initial residual then one Givens estimate per iteration
    history: list = field(default_factory=list)


def _check(vec, what, iteration):
    if not np.all(np.isfinite(vec)):
        raise NumericalBreakdown(f"non-finite values in {what}", iteration)


def gmres(A, b, x0=None, precond=None, cfg: KrylovConfig = KrylovConfig()) -> KrylovResult:
    """Solve ``A x = b``; with ``precond`` solve ``A P z = b`` and return ``x = P z``.

    The stopping test is ``||b - A x|| <= tol ||b||`` on the true residual
    (absolute ``tol`` when ``b`` is zero). Iterations accumulate across
    restarts; hitting ``max_iters`` returns ``converged=False``.
    """
    b = np.asarray(b, dtype=float)
    n = b.size
    _check(b, "right-hand side", 0)
    bnorm = float(np.linalg.norm(b))
    target = cfg.tol * bnorm if bnorm > 0.0 else cfg.tol
    scale = bnorm if bnorm > 0.0 else 1.0

    if x0 is None:
        x = np.zeros(n)
        r = b.copy()
    else:
        x = np.array(x0, dtype=float)
        if x.shape != (n,):
            raise ValueError(f"x0 has shape {x.shape}, expected ({n},)")
        r = b - A(x) if np.any(x) else b.copy()
    beta = float(np.linalg.norm(r))
    _check(r, "initial residual", 0)

    iters = 0
    history = []
    if beta <= target:
        return KrylovResult(x, 0, beta / scale, True, history)

    m = cfg.restart_m
    converged = False
    while iters < cfg.max_iters:
        V = np.zeros((m + 1, n))
        Z = np.zeros((m, n))
        H = np.zeros((m + 1, m))
        cs = np.zeros(m)
        sn = np.zeros(m)
        g = np.zeros(m + 1)
        g[0] = beta
        V[0] = r / beta
        cycle = [beta]
        k = 0
        for j in range(m):
            z = V[j] if precond is None else precond(V[j])
            w = A(z)
            iters += 1
            _check(w, "operator application", iters)
            Z[j] = z
            wnorm0 = float(np.linalg.norm(w))
            for _ in range(2):
                for i in range(j + 1):
                    h = float(np.dot(w, V[i]))
                    H[i, j] += h
                    w -= h * V[i]
            hn = float(np.linalg.norm(w))
            H[j + 1, j] = hn
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            denom = np.hypot(H[j, j], H[j + 1, j])
            if denom == 0.0:
                raise NumericalBreakdown("zero Hessenberg column", iters)
            cs[j] = H[j, j] / denom
            sn[j] = H[j + 1, j] / denom
            H[j, j] = denom
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]
            cycle.append(abs(g[j + 1]))
            k = j + 1
            happy = hn <= 1e-14 * max(wnorm0, 1e-300)
            if happy or abs(g[j + 1]) <= target or iters >= cfg.max_iters:
                break
            V[j + 1] = w / hn
        history.append(cycle)
        y = np.linalg.solve(np.triu(H[:k, :k]), g[:k]) if k > 1 else g[:1] / H[0, 0]
        x = x + Z[:k].T @ y
        r = b - A(x)
        _check(r, "true residual", iters)
        beta = float(np.linalg.norm(r))
        if beta <= target:
            converged = True
            break
        if beta == 0.0:
            break
    return KrylovResult(x, iters, beta / scale, converged, history)
