"""Run a :class:`ProblemSpec` end to end and write its artifacts."""

from __future__ import annotations

import csv
import json
import math
import os
import time
from dataclasses import dataclass, field

import numpy as np

from .eigen import IterationRecord, TransportProblem, solve_eigen
from .multigroup import SolverCache, solve_block_krylov, solve_gauss_seidel
from .operators import TransportContext
from .parallel import WorkerPool
from .problem import ProblemSpec, dump_problem

EXIT_CONVERGED, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2


@dataclass
class RunOutcome:
    spec: ProblemSpec
    converged: bool
    k: float
    k_change: float
    eigen_iterations: int
    krylov_iterations: int
    elapsed_s: float
    phi: np.ndarray
    records: list = field(default_factory=list)
    sweeps: int = 0
    precond_sweeps: int = 0

    @property
    def exit_code(self) -> int:
        return EXIT_CONVERGED if self.converged else EXIT_NOT_CONVERGED

    @property
    def inner_failures(self) -> int:
        return sum(not r.inner_converged for r in self.records)


def execute(spec: ProblemSpec, backend=None) -> RunOutcome:
    """Solve ``spec`` with its own solver settings."""
    s = spec.solver
    ctx = TransportContext.from_problem(spec, backend=backend)
    t0 = time.perf_counter()
    with WorkerPool(s.threads) as pool:
        if spec.mode == "fixed_source":
            cache = SolverCache(ctx, s.preconditioner, s.sets, pool)
            q = spec.source_array()
            if s.multigroup == "gs":
                r = solve_gauss_seidel(ctx, q, s.krylov, s.upscatter_tol, s.max_passes, cache=cache)
            else:
                r = solve_block_krylov(ctx, q, 0.0, s.sets, cfg=s.krylov, cache=cache)
            elapsed = time.perf_counter() - t0
            rec = IterationRecord(f"mg-{s.multigroup}", 0, r.iterations, r.iterations,
                                  math.nan, math.nan, r.converged, elapsed)
            return RunOutcome(spec, r.converged, math.nan, math.nan, 0, r.iterations,
                              elapsed, r.flux, [rec], r.sweeps, r.precond_sweeps)
        problem = TransportProblem(ctx, s.krylov, s.preconditioner, s.sets, s.multigroup,
                                   pool, s.upscatter_tol)
        res = solve_eigen(problem, s.eigen)
    elapsed = time.perf_counter() - t0
    recs = res.records
    k_change = abs(recs[-1].k - recs[-2].k) if len(recs) > 1 else math.nan
    return RunOutcome(spec, res.converged, res.k, k_change, res.iterations,
                      res.krylov_iterations, elapsed,
                      res.phi.reshape(ctx.groups, ctx.ncells), recs,
                      ctx.sweep_count, problem.cache.precond_sweeps())


def write_iterations(path, records):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(IterationRecord.FIELDS)
        for r in records:
            w.writerow(r.row())


def summary_text(out: RunOutcome) -> str:
    spec = out.spec
    s = spec.solver
    pre = f"mge {s.mge.label}" if s.precond == "mge" else "none"
    lines = [f"problem: {spec.name or '(unnamed)'}",
             f"mode: {spec.mode}"]
    if spec.mode == "eigenvalue":
        lines += [f"solver: {s.eigen.solver}  preconditioner: {pre}  sets: {s.sets}",
                  f"k = {out.k:.6f} +/- {out.k_change:.1e}",
                  f"eigen iterations: {out.eigen_iterations}"]
    else:
        lines += [f"multigroup: {s.multigroup}  preconditioner: {pre}  sets: {s.sets}"]
    lines += [f"krylov iterations: {out.krylov_iterations}",
              f"inner solves not converged: {out.inner_failures}",
              f"sweeps: {out.sweeps} (preconditioner {out.precond_sweeps})",
              f"time: {out.elapsed_s:.3f} s",
              f"status: {'converged' if out.converged else 'NOT CONVERGED'}"]
    return "\n".join(lines) + "\n"


def result_dict(out: RunOutcome) -> dict:
    def num(x):
        return None if isinstance(x, float) and not math.isfinite(x) else x

    return {
        "problem": out.spec.name, "mode": out.spec.mode,
        "converged": out.converged, "exit_code": out.exit_code,
        "k": num(out.k), "k_change": num(out.k_change),
        "eigen_iterations": out.eigen_iterations,
        "krylov_iterations": out.krylov_iterations,
        "inner_failures": out.inner_failures,
        "sweeps": out.sweeps, "precond_sweeps": out.precond_sweeps,
        "elapsed_s": out.elapsed_s,
    }


def write_artifacts(out: RunOutcome, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, "summary.txt"), "w", encoding="utf-8") as fh:
        fh.write(summary_text(out))
    write_iterations(os.path.join(directory, "iterations.csv"), out.records)
    with open(os.path.join(directory, "result.json"), "w", encoding="utf-8") as fh:
        json.dump(result_dict(out), fh, indent=2)
        fh.write("\n")
    with open(os.path.join(directory, "config.yaml"), "w", encoding="utf-8") as fh:
        fh.write(dump_problem(out.spec))
