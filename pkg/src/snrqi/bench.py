"""Benchmark suites: preconditioner weights, PI against RQI, energy-set scaling.

Each suite runs a grid of configurations on one fixture and returns a
:class:`Table`. A configuration that fails to converge stays in the table
with its status marked ``*``; an error is recorded the same way.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace

from .fixtures import fixture_from_name
from .runner import execute

SUITES = ("weights", "pi-vs-rqi", "scaling")
DEFAULT_FIXTURE = {"weights": "UPSCATTER_CORE", "pi-vs-rqi": "NEAR_CRITICAL_SLAB",
                   "scaling": "UPSCATTER_CORE"}


@dataclass
class Table:
    title: str
    columns: list
    rows: list

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        w.writerows(self.rows)
        return buf.getvalue()

    def text(self) -> str:
        cells = [self.columns] + [[str(c) for c in r] for r in self.rows]
        widths = [max(len(str(r[i])) for r in cells) for i in range(len(self.columns))]
        lines = [self.title, ""]
        for n, r in enumerate(cells):
            lines.append("  ".join(str(c).rjust(w) for c, w in zip(r, widths)))
            if n == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"


def _run(spec):
    try:
        return execute(spec), None
    except Exception as exc:  # recorded in the table, never fatal
        return None, f"{type(exc).__name__}: {exc}"


def _status(out, err):
    if err:
        return "error*"
    return "ok" if out.converged else "not converged*"


def _mge_spec(spec, solver, weight=None, r=2, v=2, depth=None, sets=1, threads=1):
    s = spec.solver
    eigen = replace(s.eigen, solver=solver)
    if weight is None or weight == 0.0:
        return spec.with_solver(eigen=eigen, precond="none", sets=sets, threads=threads)
    mge = replace(s.mge, weight=weight, relaxations=r, v_cycles=v, depth=depth)
    return spec.with_solver(eigen=eigen, mge=mge, precond="mge", sets=sets, threads=threads)


def weights_suite(spec, solver="pi") -> Table:
    grid = [(w, 1, 1) for w in (0.0, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5)] + [(1.4, 2, 2), (1.0, 3, 3)]
    rows = []
    for w, r, v in grid:
        out, err = _run(_mge_spec(spec, solver, w, r, v))
        label = "none" if w == 0.0 else f"w{w:g}r{r}v{v}"
        rows.append([label, out.krylov_iterations if out else "", out.eigen_iterations if out else "",
                     f"{out.k:.8f}" if out else "", f"{out.elapsed_s:.3f}" if out else "",
                     _status(out, err)])
    return Table(f"Preconditioner weights ({spec.name}, {solver.upper()})",
                 ["config", "krylov", "eigen_iters", "k", "time_s", "status"], rows)


def pi_vs_rqi_suite(spec, configs=((1.0, 2, 2), (1.3, 2, 2))) -> Table:
    rows = []
    for w, r, v in configs:
        for solver in ("pi", "rqi"):
            out, err = _run(_mge_spec(spec, solver, w, r, v))
            rows.append([f"w{w:g}r{r}v{v}", solver.upper(),
                         out.eigen_iterations if out else "", out.krylov_iterations if out else "",
                         f"{out.k:.8f}" if out else "", f"{out.elapsed_s:.3f}" if out else "",
                         _status(out, err)])
    return Table(f"PI and RQI ({spec.name})",
                 ["config", "solver", "eigen_iters", "krylov", "k", "time_s", "status"], rows)


def scaling_suite(spec, sets=(1, 2, 4), depth=3, solver="rqi") -> Table:
    rows = []
    t1 = None
    for n in sets:
        out, err = _run(_mge_spec(spec, solver, 1.0, 2, 2, depth=depth, sets=n, threads=n))
        if out and t1 is None and n == sets[0]:
            t1 = out.elapsed_s * sets[0]
        eff = ""
        if out and t1:
            eff = f"{(t1 / n) / out.elapsed_s:.2f}"
        rows.append([n, out.krylov_iterations if out else "", out.eigen_iterations if out else "",
                     repr(out.k) if out else "", f"{out.elapsed_s:.3f}" if out else "", eff,
                     _status(out, err)])
    return Table(f"Energy-set scaling ({spec.name}, {solver.upper()}, depth {depth})",
                 ["sets", "krylov", "eigen_iters", "k", "time_s", "efficiency", "status"], rows)


def run_suite(name: str, spec=None) -> Table:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES}")
    spec = spec or fixture_from_name(DEFAULT_FIXTURE[name])
    if name == "weights":
        return weights_suite(spec)
    if name == "pi-vs-rqi":
        return pi_vs_rqi_suite(spec)
    return scaling_suite(spec)
