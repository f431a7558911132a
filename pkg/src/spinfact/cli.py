"""Command-line front end: algebra, factorize, schedule, vqe and verify-all.

Exit codes: 0 success, 1 numerical or convergence failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from collections import Counter

import numpy as np

from . import __version__

EXIT_OK, EXIT_NUMERIC, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write(path: str | None, obj) -> None:
    if path:
        with open(path, "w") as f:
            f.write(_dump(obj))


def _family(name: str) -> str:
    from .families import canonical_family

    try:
        return canonical_family(name)
    except KeyError as exc:
        raise UsageError(str(exc.args[0])) from None


def _thetas(args) -> list[float]:
    if args.theta:
        return [float(t) for t in args.theta]
    if args.grid < 1:
        raise UsageError("--grid must be positive")
    return [float(t) for t in np.linspace(-np.pi, np.pi, args.grid)] if args.grid > 1 else [0.0]


# ---------------------------------------------------------------- commands


def cmd_algebra(args) -> int:
    from . import lie
    from .verify import fmt_multiset

    family = _family(args.family)
    model = lie.from_family(family, args.mode)
    checks = {"closure": model.closure_residual, "jacobi": lie.jacobi_residual(model.structure)}
    failed = [k for k, v in checks.items() if v > args.tol]
    try:
        ideals = model.ideals()
    except lie.StructureError as exc:
        print(f"invariant failure: ideal_partition: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    C, D = model.center(), model.derived()
    multiset = fmt_multiset(Counter(I.dim for I in ideals))
    kill = np.linalg.eigvalsh(lie.killing_form(model, D)).max() if D.shape[0] else 0.0
    if D.shape[0] and kill >= -1e-8:
        failed.append("killing_negative_definite")
    line = f"dim={model.m} center={C.shape[0]} derived={D.shape[0]} ideals={multiset}"
    if model.n_listed != model.m:
        line += f" listed={model.n_listed}"
    out = lie.to_json(model, ideals)
    out.update({"version": __version__, "checks": checks, "killing_max_eigenvalue": float(kill),
                "config": {"family": family, "mode": args.mode, "tol": args.tol, "seed": args.seed}})
    _write(args.out, out)
    if args.json:
        sys.stdout.write(_dump({k: out[k] for k in ("family", "mode", "dimension", "listed", "checks")}))
    else:
        print(line)
    if failed:
        print("invariant failure: " + ", ".join(failed), file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_factorize(args) -> int:
    from .factorize import build_problem, factorize

    family = _family(args.family)
    thetas = _thetas(args)
    problem = build_problem(family, 0.0)
    results = [factorize(family, th, seed=args.seed, max_restarts=args.max_restarts, tol=args.tol,
                         fock_tol=args.fock_tol, problem=problem) for th in thetas]
    rows = [r.to_json() for r in results]
    doc = {"version": __version__, "family": family, "results": rows,
           "config": {"family": family, "thetas": thetas, "seed": args.seed, "tol": args.tol,
                      "fock_tol": args.fock_tol, "max_restarts": args.max_restarts}}
    _write(args.out, doc)
    if args.json:
        sys.stdout.write(_dump(doc))
    else:
        print(f"{'theta':>9} {'params':>6} {'cost':>9} {'fock':>9} {'restarts':>8} {'time_s':>7} ok")
        for r in results:
            n_par = int(np.count_nonzero(np.abs(r.semisimple_params) > 0)) + sum(
                1 for _, a in r.central_factors if a != 0)
            print(f"{r.theta:9.4f} {n_par:6d} {r.cost_residual:9.1e} {r.fock_residual:9.1e} "
                  f"{r.restarts:8d} {r.elapsed:7.2f} {'yes' if r.converged else 'NO'}")
    return EXIT_OK if all(r.converged for r in results) else EXIT_NUMERIC


def cmd_schedule(args) -> int:
    from . import pauli
    from .factorize import build_problem, fock_target, result_from_json

    try:
        with open(args.input) as f:
            doc = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read {args.input}: {exc}") from None
    rows = doc["results"] if "results" in doc else [doc]
    if not rows:
        raise UsageError("no factorization results in input")
    problem = build_problem(rows[0]["family"], 0.0)
    cache = pauli.TermCache()
    out, status = [], EXIT_OK
    for row in rows:
        if not row.get("converged", False):
            print(f"theta={row['theta']}: input factorization did not converge", file=sys.stderr)
            return EXIT_NUMERIC
        res = result_from_json(row, problem)
        try:
            sched = pauli.schedule(res, cache)
        except pauli.ScheduleError as exc:
            print(f"theta={res.theta}: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
        d = sched.to_json()
        if args.check:
            err = float(np.abs(pauli.schedule_unitary(sched) - fock_target(res.problem)).max())
            d["check"] = {"max_error": err, "tol": args.check_tol, "passed": err < args.check_tol}
            if err >= args.check_tol:
                status = EXIT_NUMERIC
        out.append(d)
        if not args.json:
            line = (f"{sched.family} theta={sched.theta:.4f} strings={sched.total_strings} "
                    f"rotations={sched.total_rotations} cnot={d['gate_estimate']['cnot']}")
            if args.check:
                line += f" check={d['check']['max_error']:.1e}"
            print(line)
    doc_out = {"version": __version__, "schedules": out,
               "config": {"input": os.path.basename(args.input), "check": args.check, "check_tol": args.check_tol}}
    _write(args.out, doc_out)
    if args.json:
        sys.stdout.write(_dump(doc_out))
    return status


def cmd_vqe(args) -> int:
    from .vqe import FcidumpError, VqeConfig, run_config

    cfg: dict = {}
    if args.config:
        try:
            with open(args.config) as f:
                cfg = json.load(f)
        except FileNotFoundError:
            raise UsageError(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"{args.config}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    for key in ("hamiltonian", "pool", "grad_tol", "max_iters", "n_electrons"):
        val = getattr(args, key)
        if val is not None:
            cfg[key] = val
    if args.reference:
        try:
            cfg["reference"] = json.loads(args.reference)
        except json.JSONDecodeError:
            cfg["reference"] = args.reference
    cfg.setdefault("seed", args.seed)
    try:
        config = VqeConfig.from_dict(cfg)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    if not config.hamiltonian.startswith("synthetic:") and not os.path.exists(config.hamiltonian):
        raise UsageError(f"FCIDUMP not found: {config.hamiltonian}")
    try:
        run = run_config(config)
    except FcidumpError as exc:
        raise UsageError(f"{config.hamiltonian}: {exc}") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    doc = {"version": __version__, **run.to_json()}
    _write(args.out, doc)
    if args.csv:
        with open(args.csv, "w") as f:
            f.write(run.to_csv())
    if args.json:
        sys.stdout.write(_dump(doc))
    else:
        gap = "n/a" if run.error is None else f"{run.error:.2e}"
        print(f"pool={run.pool} converged={run.converged} params={run.n_parameters} "
              f"distinct={run.n_distinct_operators} E={run.final_energy:.10f} gap_to_exact={gap} "
              f"spin_drift={run.spin_drift:.1e} max_grad={run.final_max_grad:.1e}")
    return EXIT_OK if run.converged else EXIT_NUMERIC


def cmd_verify_all(args) -> int:
    from . import verify

    only = [int(x) for x in args.only.split(",")] if args.only else None
    print(f"spinfact {__version__}; seeds {verify.SEEDS | {'factorize': args.seed}}")
    results = verify.run_all(seed=args.seed, only=only, echo=None if args.json else print)
    rep = verify.report(results, args.seed)
    _write(args.out, rep)
    if args.json:
        sys.stdout.write(_dump(rep))
    else:
        print(f"{rep['passed']}/{rep['total']} criteria passed")
    return EXIT_OK if rep["passed"] == rep["total"] else EXIT_NUMERIC


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the JSON artifact to this path")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--json", action="store_true", help="print machine-readable JSON to stdout")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="spinfact", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    a = sub.add_parser("algebra", parents=[common], help="build a family's Lie algebra and report its structure")
    a.add_argument("--family", required=True)
    a.add_argument("--mode", choices=["appendix", "discovery"], default="appendix")
    a.add_argument("--tol", type=float, default=1e-9, help="closure and Jacobi tolerance (default 1e-9)")
    a.set_defaults(func=cmd_algebra)

    f = sub.add_parser("factorize", parents=[common], help="factorize exp(theta G) over a theta grid")
    f.add_argument("--family", required=True)
    f.add_argument("--theta", type=float, action="append", help="angle; repeat for several")
    f.add_argument("--grid", type=int, default=9, help="points on [-pi, pi] when --theta is absent (default 9)")
    f.add_argument("--tol", type=float, default=1e-10, help="adjoint cost tolerance (default 1e-10)")
    f.add_argument("--fock-tol", type=float, default=1e-6, help="Fock-space unitary tolerance (default 1e-6)")
    f.add_argument("--max-restarts", type=int, default=8)
    f.set_defaults(func=cmd_factorize)

    s = sub.add_parser("schedule", parents=[common], help="emit Pauli-rotation schedules from factorize output")
    s.add_argument("input", help="factorization JSON")
    s.add_argument("--check", action="store_true", help="replay against the Fock-space target")
    s.add_argument("--tol", dest="check_tol", type=float, default=1e-6, help="replay tolerance (default 1e-6)")
    s.set_defaults(func=cmd_schedule)

    v = sub.add_parser("vqe", parents=[common], help="adaptive VQE run")
    v.add_argument("--config", help="run config JSON")
    v.add_argument("--hamiltonian", help="FCIDUMP path or synthetic:{n,seed}")
    v.add_argument("--pool", type=str.upper, choices=["SD", "SA", "PAIR"])
    v.add_argument("--reference", help="'closed_shell' or a JSON reference spec")
    v.add_argument("--n-electrons", dest="n_electrons", type=int)
    v.add_argument("--tol", dest="grad_tol", type=float, help="gradient tolerance (default 1e-5)")
    v.add_argument("--max-iters", dest="max_iters", type=int)
    v.add_argument("--csv", help="write the (iteration, energy, s2, max_grad) trajectory here")
    v.set_defaults(func=cmd_vqe)

    va = sub.add_parser("verify-all", parents=[common], help="run the acceptance battery")
    va.add_argument("--only", help="comma-separated criterion numbers")
    va.add_argument("--tol", type=float, default=None, help="accepted for symmetry; criteria pin their own tolerances")
    va.set_defaults(func=cmd_verify_all)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
