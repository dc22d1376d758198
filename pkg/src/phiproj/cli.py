"""Command-line entry point: ``phiproj <command> ...``.

Exit codes: 0 converged, 1 input error, 2 boundary / unbounded / stalled
solve, 3 provably infeasible constraints.
"""
import argparse
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import io
from .diagnostics import CQStatus, existence_report
from .dual import SolverOptions, recover_primal, solve_dual
from .family import make_family, DomainMode
from .measures import divergence, divergence_extended
from .oracle import InfeasibleAffineSystem, oracle_solve
from .problem import RankDeficient, build_problem

log = logging.getLogger("phiproj")

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NOT_CONVERGED = 2
EXIT_INFEASIBLE = 3

REPORT_KEYS = ("status", "lambda", "dual_value", "primal_value", "gap",
               "q_star", "diagnostics", "iterations")


def _emit(text, out):
    if out in (None, "-"):
        sys.stdout.write(text + "\n")
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")


def _options(cfg):
    return SolverOptions(tol=cfg.tol, max_iter=cfg.max_iter)


def _problem_from_table(table, cfg, family):
    P = io.table_probability(table, renormalize=cfg.renormalize)
    G = P.coords - cfg.centering(table.columns)[None, :]
    return build_problem(P, G, family, column_names=table.columns)


def solve_report(problem, cfg):
    """Run the full pipeline and return ``(report_dict, exit_code)``."""
    sol = solve_dual(problem, _options(cfg))
    proj = recover_primal(problem, sol) if sol.converged else None
    diag = existence_report(problem, report=proj, seed=cfg.seed, options=_options(cfg))
    d = diag.to_dict()
    if proj is not None:
        d["feasibility_residual"] = proj.feasibility_residual
    d["solver_message"] = sol.message
    d["grad_norm"] = sol.grad_norm
    report = {
        "status": sol.status.value,
        "lambda": list(sol.lam),
        "dual_value": sol.dual_value,
        "primal_value": None if proj is None else proj.primal_value,
        "gap": None if proj is None else proj.gap,
        "q_star": None if proj is None else list(proj.q_star),
        "diagnostics": d,
        "iterations": sol.iterations,
    }
    if cfg.oracle:
        try:
            o = oracle_solve(problem, resolution=cfg.oracle_resolution)
            report["oracle"] = {"value": o.value, "q": None if o.q is None else list(o.q),
                                "touches_box": o.touches_box}
        except (ValueError, InfeasibleAffineSystem) as exc:
            report["oracle"] = {"error": str(exc)}
    if sol.converged:
        code = EXIT_OK
    elif diag.cq_status is CQStatus.FAILS_PROVABLY:
        code = EXIT_INFEASIBLE
    else:
        code = EXIT_NOT_CONVERGED
    return report, code


def _apply_overrides(cfg, args):
    if getattr(args, "oracle", False):
        cfg.oracle = True
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "renormalize", False):
        cfg.renormalize = True
    return cfg


def cmd_project(args):
    cfg = _apply_overrides(io.load_config(args.config), args)
    table = io.read_table(args.data)
    problem = _problem_from_table(table, cfg, cfg.family())
    report, code = solve_report(problem, cfg)
    _emit(io.dumps(report), args.out)
    return code


def _parse_targets(specs, columns):
    if not specs:
        raise io.InputError("el: at least one --target is required")
    if all("=" in s for s in specs):
        pairs = dict(s.split("=", 1) for s in specs)
        return {k.strip(): float(v) for k, v in pairs.items()}
    if any("=" in s for s in specs):
        raise io.InputError("el: mix of named and positional targets")
    return [float(s) for s in specs]


def el_report(sample, targets, cfg):
    """Empirical likelihood weights for the moment targets."""
    n = sample.values.shape[0]
    cfg.targets = targets
    m = cfg.centering(sample.columns)
    from .measures import ProbabilityMeasure

    P = ProbabilityMeasure.uniform(n, atoms=sample.atoms, coords=sample.values)
    problem = build_problem(P, sample.values - m[None, :], make_family(0.0),
                            column_names=sample.columns)
    sol = solve_dual(problem, _options(cfg))
    report = {
        "status": sol.status.value,
        "lambda": list(sol.lam),
        "dual_value": sol.dual_value,
        "iterations": sol.iterations,
        "targets": list(m),
        "weights": None,
        "primal_value": None,
        "gap": None,
        "neg2_log_el_ratio": None,
    }
    if not sol.converged:
        return report, EXIT_NOT_CONVERGED
    proj = recover_primal(problem, sol)
    w = proj.q_star / n
    report.update({
        "weights": list(w),
        "primal_value": proj.primal_value,
        "gap": proj.gap,
        "q_star": list(proj.q_star),
        # -2 log of the likelihood ratio prod(n w_j) equals 2 n KL_m(Q*, P)
        "neg2_log_el_ratio": 2.0 * n * proj.primal_value,
        "feasibility_residual": proj.feasibility_residual,
    })
    return report, EXIT_OK


def cmd_el(args):
    cfg = _apply_overrides(io.load_config(args.config), args)
    sample = io.read_table(args.sample)
    report, code = el_report(sample, _parse_targets(args.target, sample.columns), cfg)
    _emit(io.dumps(report), args.out)
    return code


def _family_from_args(args):
    cfg = io.load_config(getattr(args, "config", None))
    gamma = cfg.gamma if args.gamma is None else args.gamma
    nonneg = cfg.nonnegative and not args.full_line
    try:
        return make_family(gamma, DomainMode.NONNEGATIVE_EXTENSION if nonneg else DomainMode.FULL_LINE)
    except ValueError as exc:
        raise io.InputError(str(exc)) from None


def cmd_divergence(args):
    fam = _family_from_args(args)
    P = io.table_probability(io.read_table(args.P), renormalize=args.renormalize)
    Q = io.table_measure(io.read_table(args.Q))
    value = divergence_extended(fam, Q, P) if args.extended else divergence(fam, Q, P)
    _emit(io.dumps({"family": fam.name, "extended": bool(args.extended),
                    "value": value, "finite": math.isfinite(value)}), args.out)
    return EXIT_OK


def _fmt(v):
    return format(float(v) + 0.0, ".17g")  # no "-0"


def conjugate_table(fam, grid):
    """Rows of ``x, phi, phi', phi*, phi*'`` evaluated at each grid value."""
    rows = [("x", "phi", "phi_prime", "conj", "conj_prime")]
    for x in grid:
        phi = fam.phi(x)
        dphi = _fmt(fam.phi_prime(x)) if fam.a_phi < x < fam.b_phi else ""
        conj = fam.conj(x)
        dconj = _fmt(fam.conj_prime(x)) if fam.a_conj < x < fam.b_conj else ""
        rows.append((_fmt(x), _fmt(phi), dphi, _fmt(conj), dconj))
    return rows


def cmd_conjugate(args):
    fam = _family_from_args(args)
    if args.points:
        try:
            grid = [float(s) for s in args.points.split(",")]
        except ValueError:
            raise io.InputError("--points must be comma-separated numbers") from None
    else:
        if args.num < 1:
            raise io.InputError("--num must be positive")
        grid = list(np.linspace(args.tmin, args.tmax, args.num))
        if args.tmin <= 0.0 <= args.tmax and 0.0 not in grid:
            grid = sorted(grid + [0.0])
    text = "\n".join(",".join(r) for r in conjugate_table(fam, grid))
    _emit(text, args.out)
    return EXIT_OK


def cmd_diagnose(args):
    cfg = _apply_overrides(io.load_config(args.config), args)
    table = io.read_table(args.data)
    problem = _problem_from_table(table, cfg, cfg.family())
    diag = existence_report(problem, seed=cfg.seed, options=_options(cfg))
    _emit(io.dumps({"diagnostics": diag.to_dict()}), args.out)
    return EXIT_OK


def _batch_one(job):
    argv = ["project", job["data"]]
    if job.get("config"):
        argv += ["--config", job["config"]]
    if job.get("out"):
        argv += ["--out", job["out"]]
    return main(argv)


def cmd_batch(args):
    import json

    try:
        with open(args.manifest, encoding="utf-8") as fh:
            jobs = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise io.InputError(f"{args.manifest}: {exc}") from None
    if not isinstance(jobs, list) or not all(isinstance(j, dict) and "data" in j for j in jobs):
        raise io.InputError(f"{args.manifest}: expected a list of objects with a 'data' field")
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(_batch_one, jobs))
    else:
        codes = [_batch_one(j) for j in jobs]
    return max(codes, default=EXIT_OK)


def build_parser():
    p = argparse.ArgumentParser(prog="phiproj", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def family_flags(sp):
        sp.add_argument("--config", help="run configuration JSON")
        sp.add_argument("--gamma", type=float, help="power index (overrides config)")
        sp.add_argument("--full-line", action="store_true", help="chi-square on the whole line")

    sp = sub.add_parser("project", help="divergence projection of a weighted sample")
    sp.add_argument("data")
    sp.add_argument("--config")
    sp.add_argument("--oracle", action="store_true", help="cross-check with the grid oracle")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--renormalize", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_project)

    sp = sub.add_parser("el", help="empirical likelihood weights")
    sp.add_argument("sample")
    sp.add_argument("--target", action="append", help="target mean, positional or name=value")
    sp.add_argument("--config")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_el)

    sp = sub.add_parser("divergence", help="divergence between two measures")
    sp.add_argument("P")
    sp.add_argument("Q")
    family_flags(sp)
    sp.add_argument("--extended", action="store_true", help="charge the singular part")
    sp.add_argument("--renormalize", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_divergence)

    sp = sub.add_parser("conjugate", help="tabulate phi, phi', phi* as CSV")
    family_flags(sp)
    sp.add_argument("--tmin", type=float, default=-2.0)
    sp.add_argument("--tmax", type=float, default=2.0)
    sp.add_argument("--num", type=int, default=41)
    sp.add_argument("--points", help="explicit comma-separated grid")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_conjugate)

    sp = sub.add_parser("diagnose", help="existence and uniqueness diagnostics")
    sp.add_argument("data")
    sp.add_argument("--config")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--renormalize", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_diagnose)

    sp = sub.add_parser("batch", help="run 'project' over a manifest of problems")
    sp.add_argument("manifest")
    sp.add_argument("--jobs", type=int, default=1)
    sp.set_defaults(func=cmd_batch)
    return p


def main(argv=None):
    logging.basicConfig(level=os.environ.get("PHIPROJ_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except RankDeficient as exc:
        sys.stderr.write(io.dumps({"error": str(exc), "kernel": list(exc.kernel)}) + "\n")
        return EXIT_INPUT
    except InfeasibleAffineSystem as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INFEASIBLE
    except (io.InputError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
