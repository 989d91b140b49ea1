"""Eigenvalue iterations on the pair ``A = I - T M S``, ``B = T M F``.

``A phi = gamma B phi`` with ``gamma = 1 / k``. The iterations only need
``A``, ``B``, the fission functional and a shifted solve, so they run
unchanged on the matrix-free transport problem and on small dense pairs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, DegenerateQuotientError, NumericalBreakdown
from .krylov import KrylovConfig, gmres
from .mge import MgeConfig
from .multigroup import SolverCache, solve_block_krylov, solve_gauss_seidel
from .operators import TransportContext, apply_F, block_operator
from .parallel import SERIAL, WorkerPool

SOLVERS = ("pi", "sii", "rqi")


@dataclass(frozen=True)
class EigenConfig:
    solver: str = "pi"
    k_tol: float = 1e-6
    flux_tol: float = 1e-5
    max_eigen_iters: int = 500
    warmup_pi_iters: int = 2
    fixed_shift: float = 0.0

    def __post_init__(self):
        if self.solver not in SOLVERS:
            raise ConfigurationError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if not (self.k_tol > 0.0 and self.flux_tol > 0.0):
            raise ConfigurationError("eigen tolerances must be > 0")
        if self.max_eigen_iters < 1 or self.warmup_pi_iters < 0:
            raise ConfigurationError("max_eigen_iters must be >= 1 and warmup >= 0")
        if self.fixed_shift < 0.0:
            raise ConfigurationError(f"fixed shift must be >= 0, got {self.fixed_shift}")


@dataclass(frozen=True)
class IterationRecord:
    solver: str
    eigen_iteration: int
    inner_iterations: int
    cumulative_krylov: int
    k: float
    flux_change: float
    inner_converged: bool
    elapsed_s: float

    FIELDS = ("solver", "eigen_iteration", "inner_iterations", "cumulative_krylov",
              "k", "flux_change", "inner_converged", "elapsed_s")

    def row(self) -> list:
        return [self.solver, self.eigen_iteration, self.inner_iterations,
                self.cumulative_krylov, repr(float(self.k)), repr(float(self.flux_change)),
                int(self.inner_converged), f"{self.elapsed_s:.6f}"]


@dataclass
class EigenState:
    phi: np.ndarray
    k: float
    rho: float = float("nan")
    iteration: int = 0
    krylov: int = 0

    @property
    def gamma(self) -> float:
        return 1.0 / self.k


@dataclass
class EigenResult:
    k: float
    phi: np.ndarray
    iterations: int
    krylov_iterations: int
    converged: bool
    solver: str
    records: list = field(default_factory=list)
    rho: float = float("nan")

    @property
    def inner_failures(self) -> int:
        return sum(not r.inner_converged for r in self.records)


@dataclass
class InnerSolve:
    y: np.ndarray
    iterations: int
    converged: bool


class DenseProblem:
    """Explicit ``(A, B)`` pair with fission functional ``f`` (default ones)."""

    def __init__(self, A, B, f=None, cfg: KrylovConfig = KrylovConfig(tol=1e-12, restart_m=50)):
        self.A = np.asarray(A, dtype=float)
        self.B = np.asarray(B, dtype=float)
        self.n = self.A.shape[0]
        self.f = np.ones(self.n) if f is None else np.asarray(f, dtype=float)
        self.cfg = cfg

    def apply_A(self, x):
        return self.A @ x

    def apply_B(self, x):
        return self.B @ x

    def fission(self, x):
        return float(np.dot(self.f, x))

    def initial_guess(self):
        return np.ones(self.n)

    def solve(self, phi, shift, x0=None):
        M = self.A - shift * self.B
        r = gmres(lambda v: M @ v, self.B @ phi, x0=x0, cfg=self.cfg)
        return InnerSolve(r.x, r.iterations, r.converged)


class TransportProblem:
    """Matrix-free transport pair with its multigroup inner solver.

    ``multigroup`` is ``"krylov"`` (block GMRES) or ``"gs"``. Shifted solves
    always use block GMRES because the shift couples every group.
    """

    def __init__(self, ctx: TransportContext, krylov: KrylovConfig = KrylovConfig(),
                 mge: MgeConfig | None = None, n_sets: int = 1, multigroup: str = "krylov",
                 pool: WorkerPool = SERIAL, upscatter_tol: float | None = None):
        if multigroup not in ("krylov", "gs"):
            raise ConfigurationError(f"multigroup solver must be 'krylov' or 'gs', got {multigroup!r}")
        self.ctx = ctx
        self.krylov = krylov
        self.mge = mge
        self.n_sets = n_sets
        self.multigroup = multigroup
        self.upscatter_tol = upscatter_tol
        self.cache = SolverCache(ctx, mge, n_sets, pool)
        self.n = ctx.groups * ctx.ncells
        self._A = block_operator(ctx, None, 0.0)
        self.last = None

    def apply_A(self, x):
        return self._A(x)

    def apply_B(self, x):
        q = apply_F(self.ctx, x)
        return self.ctx.transport(None, q).reshape(-1)

    def fission(self, x):
        return self.ctx.fission_rate(x)

    def initial_guess(self):
        return np.ones(self.n)

    def solve(self, phi, shift, x0=None):
        q = apply_F(self.ctx, phi)
        if shift == 0.0 and self.multigroup == "gs":
            r = solve_gauss_seidel(self.ctx, q, self.krylov, self.upscatter_tol,
                                   x0=x0, cache=self.cache)
        else:
            r = solve_block_krylov(self.ctx, q, shift, self.n_sets, cfg=self.krylov,
                                   x0=x0, cache=self.cache)
        self.last = r
        return InnerSolve(r.flux.reshape(-1), r.iterations, r.converged)


def rayleigh_quotient(apply_A, apply_B, x) -> float:
    """One-sided quotient ``x^T A x / x^T B x``."""
    x = np.asarray(x, dtype=float)
    den = float(np.dot(x, apply_B(x)))
    if abs(den) <= 1e-14 * float(np.dot(x, x)):
        raise DegenerateQuotientError(f"x^T B x = {den:.3e} is degenerate")
    return float(np.dot(x, apply_A(x))) / den


def _normalize(y, reference=None):
    nrm = np.linalg.norm(y)
    if not np.isfinite(nrm) or nrm == 0.0:
        raise NumericalBreakdown("eigenvector estimate vanished or is non-finite", 0)
    y = y / nrm
    if reference is not None:
        if np.dot(y, reference) < 0.0:
            y = -y
    elif y.sum() < 0.0:
        y = -y
    return y


def _start(problem, phi0):
    phi = problem.initial_guess() if phi0 is None else np.asarray(phi0, dtype=float)
    return _normalize(phi)


class _Log:
    def __init__(self, solver):
        self.solver = solver
        self.t0 = time.perf_counter()
        self.records = []
        self.krylov = 0

    def add(self, solver, i, inner, k, change, ok):
        self.krylov += inner.iterations
        self.records.append(IterationRecord(solver, i, inner.iterations, self.krylov,
                                            float(k), float(change), bool(ok),
                                            time.perf_counter() - self.t0))


def _pi_steps(problem, state, log, cfg, count, label):
    """Up to ``count`` power steps; returns True on convergence."""
    for _ in range(count):
        inner = problem.solve(state.phi, 0.0, x0=state.k * state.phi)
        fy = problem.fission(inner.y)
        fphi = problem.fission(state.phi)
        if fphi == 0.0 or fy == 0.0:
            raise DegenerateQuotientError("fission rate vanished; no fissile material?")
        k_new = fy / fphi
        phi_new = _normalize(inner.y, state.phi)
        change = float(np.linalg.norm(phi_new - state.phi))
        dk = abs(k_new - state.k) / abs(k_new)
        state.iteration += 1
        log.add(label, state.iteration, inner, k_new, change, inner.converged)
        state.phi, state.k = phi_new, k_new
        if dk <= cfg.k_tol and change <= cfg.flux_tol:
            return True
    return False


def power_iteration(problem, cfg: EigenConfig = EigenConfig(), phi0=None, k0=1.0) -> EigenResult:
    """``y = A^{-1} B phi``; ``k`` by the fission ratio; ``phi = y / ||y||``."""
    state = EigenState(_start(problem, phi0), float(k0))
    log = _Log("pi")
    ok = _pi_steps(problem, state, log, cfg, cfg.max_eigen_iters, "pi")
    return EigenResult(state.k, state.phi, state.iteration, log.krylov, ok, "pi", log.records)


def _shifted_solve(problem, phi, shift):
    """Shifted solve; a breakdown nudges the shift by ``1e-8 |shift|`` once."""
    try:
        return problem.solve(phi, shift), shift
    except NumericalBreakdown:
        nudged = shift + 1e-8 * abs(shift)
        return problem.solve(phi, nudged), nudged


def shifted_inverse_iteration(problem, cfg: EigenConfig = EigenConfig(solver="sii"),
                              shift=None, phi0=None) -> EigenResult:
    """Inverse iteration on ``(A - mu B) y = B phi`` with ``mu`` frozen.

    The estimate ``gamma = mu + phi^T phi / phi^T y`` is exact at any
    eigenvector, so it tracks whichever mode lies nearest ``mu``.
    """
    mu = cfg.fixed_shift if shift is None else float(shift)
    if mu < 0.0:
        raise ConfigurationError(f"shift must be >= 0, got {mu}")
    state = EigenState(_start(problem, phi0), 1.0, rho=mu)
    log = _Log("sii")
    ok = False
    for _ in range(cfg.max_eigen_iters):
        inner, used = _shifted_solve(problem, state.phi, mu)
        py = float(np.dot(state.phi, inner.y))
        if py == 0.0:
            raise DegenerateQuotientError("inverse iterate orthogonal to its input")
        k_new = 1.0 / (used + 1.0 / py)
        phi_new = _normalize(inner.y, state.phi)
        change = float(np.linalg.norm(phi_new - state.phi))
        dk = abs(k_new - state.k) / abs(k_new)
        state.iteration += 1
        log.add("sii", state.iteration, inner, k_new, change, inner.converged)
        state.phi, state.k = phi_new, k_new
        if dk <= cfg.k_tol and change <= cfg.flux_tol:
            ok = True
            break
    return EigenResult(state.k, state.phi, state.iteration, log.krylov, ok, "sii",
                       log.records, rho=mu)


def rqi(problem, cfg: EigenConfig = EigenConfig(solver="rqi"), phi0=None, k0=1.0,
        rho_trace=None) -> EigenResult:
    """Rayleigh quotient iteration after ``cfg.warmup_pi_iters`` power steps.

    Each step solves ``(A - rho B) y = B phi`` with ``rho`` the quotient of
    the current vector and sets ``k = 1 / rho(y)``. ``rho_trace`` (a list)
    collects every shift used.
    """
    state = EigenState(_start(problem, phi0), float(k0))
    log = _Log("rqi")
    ok = _pi_steps(problem, state, log, cfg, min(cfg.warmup_pi_iters, cfg.max_eigen_iters), "pi")
    state.rho = rayleigh_quotient(problem.apply_A, problem.apply_B, state.phi)
    if ok:
        # converged during warmup: report the quotient-based estimate
        state.k = 1.0 / state.rho
    while not ok and state.iteration < cfg.max_eigen_iters:
        if rho_trace is not None:
            rho_trace.append(state.rho)
        inner, _ = _shifted_solve(problem, state.phi, state.rho)
        phi_new = _normalize(inner.y, state.phi)
        rho_new = rayleigh_quotient(problem.apply_A, problem.apply_B, phi_new)
        k_new = 1.0 / rho_new
        change = float(np.linalg.norm(phi_new - state.phi))
        dk = abs(k_new - state.k) / abs(k_new)
        state.iteration += 1
        log.add("rqi", state.iteration, inner, k_new, change, inner.converged)
        state.phi, state.k, state.rho = phi_new, k_new, rho_new
        ok = dk <= cfg.k_tol and change <= cfg.flux_tol
    if rho_trace is not None:
        rho_trace.append(state.rho)
    return EigenResult(state.k, state.phi, state.iteration, log.krylov, ok, "rqi",
                       log.records, rho=state.rho)


def solve_eigen(problem, cfg: EigenConfig) -> EigenResult:
    if cfg.solver == "pi":
        return power_iteration(problem, cfg)
    if cfg.solver == "sii":
        return shifted_inverse_iteration(problem, cfg)
    return rqi(problem, cfg)
