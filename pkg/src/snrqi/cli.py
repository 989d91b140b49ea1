"""Command line: ``snrqi run``, ``snrqi bench`` and ``snrqi audit``.

Exit status is 0 when the run converged, 2 when it did not and 1 on any
error (one diagnostic line on stderr).
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

from .bench import DEFAULT_FIXTURE, SUITES, run_suite
from .eigen import IterationRecord
from .errors import SnrqiError
from .fixtures import fixture_from_name
from .problem import ProblemSpec, parse_problem
from .runner import EXIT_CONVERGED, EXIT_ERROR, execute, summary_text, write_artifacts

__all__ = ["IterationRecord", "apply_overrides", "build_parser", "main"]


def _solver_flags(p):
    g = p.add_argument_group("solver overrides")
    g.add_argument("--solver", choices=("pi", "sii", "rqi"))
    g.add_argument("--precond", choices=("none", "mge"))
    g.add_argument("--w", type=float, help="Richardson weight")
    g.add_argument("--r", type=int, help="relaxations per level")
    g.add_argument("--v", type=int, help="V-cycles per application")
    g.add_argument("--depth", type=int, help="cap on energy-grid levels")
    g.add_argument("--mge-local", action="store_true", default=None,
                   help="per-set V-cycles instead of one hierarchy over the block")
    g.add_argument("--sets", type=int, help="energy sets")
    g.add_argument("--restart-m", type=int, help="GMRES restart length")
    g.add_argument("--max-inner", type=int, help="GMRES iteration cap per solve")
    g.add_argument("--mg-tol", type=float, help="GMRES relative tolerance")
    g.add_argument("--multigroup", choices=("krylov", "gs"))
    g.add_argument("--eig-tol", type=float, help="relative k tolerance")
    g.add_argument("--flux-tol", type=float, help="eigenvector change tolerance")
    g.add_argument("--max-eigen", type=int, help="eigen iteration cap")
    g.add_argument("--shift", type=float, help="fixed shift for SII")
    g.add_argument("--quadrature", type=int, help="transport quadrature order")
    g.add_argument("--precond-quadrature", type=int, help="preconditioner quadrature order")
    g.add_argument("--threads", type=int, help="worker threads")


def _problem_args(p):
    p.add_argument("problem", nargs="?", help="problem file (YAML)")
    p.add_argument("--fixture", help="built-in fixture, e.g. UPSCATTER_CORE or RANDOM_SMALL(7)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="snrqi", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="solve a problem")
    _problem_args(run)
    _solver_flags(run)
    run.add_argument("--out", default="snrqi-out", help="artifact directory (default %(default)s)")

    bench = sub.add_parser("bench", help="run a benchmark suite")
    bench.add_argument("suite", choices=SUITES)
    _problem_args(bench)
    _solver_flags(bench)
    bench.add_argument("--out", help="directory for <suite>.csv and <suite>.txt")

    audit = sub.add_parser("audit", help="dense-oracle k and dominance ratio")
    _problem_args(audit)
    audit.add_argument("--quadrature", type=int)
    return parser


def load_spec(args, default_fixture=None) -> ProblemSpec:
    if args.problem and args.fixture:
        raise SnrqiError("give a problem file or --fixture, not both")
    if args.problem:
        return parse_problem(args.problem)
    name = args.fixture or default_fixture
    if not name:
        raise SnrqiError("no problem given: pass a problem file or --fixture NAME")
    return fixture_from_name(name)


def apply_overrides(spec: ProblemSpec, args) -> ProblemSpec:
    """Fold command-line flags into the problem so the echoed config is complete."""
    def pick(**pairs):
        return {k: getattr(args, v) for k, v in pairs.items() if getattr(args, v, None) is not None}

    s = spec.solver
    eigen = replace(s.eigen, **pick(solver="solver", k_tol="eig_tol", flux_tol="flux_tol",
                                    max_eigen_iters="max_eigen", fixed_shift="shift"))
    kry = pick(restart_m="restart_m", max_iters="max_inner", tol="mg_tol")
    if "restart_m" in kry and "max_iters" not in kry:
        kry["max_iters"] = max(s.krylov.max_iters, kry["restart_m"])
    if "max_iters" in kry and "restart_m" not in kry:
        kry["restart_m"] = min(s.krylov.restart_m, kry["max_iters"])
    krylov = replace(s.krylov, **kry)
    mge = replace(s.mge, **pick(weight="w", relaxations="r", v_cycles="v", depth="depth",
                                quadrature_order="precond_quadrature", set_local="mge_local"))
    top = pick(precond="precond", sets="sets", threads="threads", multigroup="multigroup")
    spec = spec.with_solver(eigen=eigen, krylov=krylov, mge=mge, **top)
    if getattr(args, "quadrature", None) is not None:
        spec = replace(spec, quadrature_order=args.quadrature)
    return spec


def _cmd_run(args) -> int:
    spec = apply_overrides(load_spec(args), args)
    out = execute(spec)
    write_artifacts(out, args.out)
    sys.stdout.write(summary_text(out))
    return out.exit_code


def _cmd_bench(args) -> int:
    spec = apply_overrides(load_spec(args, DEFAULT_FIXTURE[args.suite]), args)
    table = run_suite(args.suite, spec)
    sys.stdout.write(table.text())
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        with open(os.path.join(args.out, f"{args.suite}.csv"), "w", encoding="utf-8") as fh:
            fh.write(table.csv())
        with open(os.path.join(args.out, f"{args.suite}.txt"), "w", encoding="utf-8") as fh:
            fh.write(table.text())
    return EXIT_CONVERGED


def _cmd_audit(args) -> int:
    from . import oracle

    spec = load_spec(args)
    A, B = oracle.assemble_pair(spec, args.quadrature)
    gamma, _ = oracle.generalized_eig_smallest(A, B)
    lam1, lam2, ratio = oracle.dominance_ratio(oracle.dense_solve(A, B))
    print(f"problem: {spec.name}")
    print(f"unknowns: {A.shape[0]}")
    print(f"k (dense oracle): {1.0 / gamma:.12f}")
    print(f"lambda1: {lam1:.12f}  lambda2: {lam2:.12f}")
    print(f"dominance ratio: {ratio:.6f}")
    return EXIT_CONVERGED


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"run": _cmd_run, "bench": _cmd_bench, "audit": _cmd_audit}[args.command]
    try:
        return handler(args)
    except (SnrqiError, ValueError, OSError) as exc:
        print(f"snrqi: error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
