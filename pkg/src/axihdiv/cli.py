"""Command-line front end: ``axihdiv {mesh,mixed,mg,verify}``.

CSV schemas
-----------
mixed : level,err_z,rate_z,err_p,rate_p,err_PiSp,rate_PiSp
        (errors in the weighted L2 norm, rates log2(e_{l-1}/e_l); the
        first row has empty rate fields)
mg    : level,rate_k=<K>,... (one column per --mode, in the given order;
        levels 2..max-level; arithmetic or geometric mean of the
        per-iteration error reductions)

CSV goes to --out (or stdout); human-readable summaries go to stderr.
"""

import argparse
import os
import sys

import numpy as np

DEFAULT_CAP = 10
MG_DEFAULT_LEVEL = {"square": 9, "lshape": 8}


class UsageError(Exception):
    pass


def _mode(text):
    try:
        k = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"mode must be an integer, got {text!r}")
    if abs(k) < 1:
        raise argparse.ArgumentTypeError("mode must satisfy |k| >= 1")
    return k


def _tol(text):
    t = float(text)
    if not 0.0 < t < 1.0:
        raise argparse.ArgumentTypeError("tolerance must lie in (0, 1)")
    return t


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--domain", choices=["square", "lshape"], default="square")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--level-cap", type=int, default=DEFAULT_CAP,
                        help=f"largest admissible level (default {DEFAULT_CAP})")
    common.add_argument("--trace", action="store_true", help="print progress to stderr")
    common.add_argument("--dump-matrix", action="store_true",
                        help="write the finest-level Lambda matrix as 'row col value' lines")

    p = argparse.ArgumentParser(
        prog="axihdiv",
        description=__doc__,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("mesh", parents=[common], help="write a mesh level as JSON")
    m.add_argument("--max-level", type=int, default=1)

    x = sub.add_parser("mixed", parents=[common], help="mixed-method error table (CSV)")
    x.add_argument("--mode", type=_mode, default=1)
    x.add_argument("--max-level", type=int, default=8)

    g = sub.add_parser("mg", parents=[common], help="V-cycle contraction rates (CSV)")
    g.add_argument("--mode", type=_mode, action="append",
                   help="Fourier mode; repeat for several columns (default 1)")
    g.add_argument("--max-level", type=int, default=None,
                   help="default 9 on the square, 8 on the L-shape")
    g.add_argument("--tol", type=_tol, default=1e-7)
    g.add_argument("--seed", type=int, default=7)
    g.add_argument("--max-iters", type=int, default=100)
    g.add_argument("--smoother", choices=["multiplicative", "additive"], default="multiplicative")
    g.add_argument("--rate-stat", choices=["arithmetic", "geometric"], default="arithmetic")

    v = sub.add_parser("verify", parents=[common], help="run a structural check suite")
    v.add_argument("--suite", choices=["complex", "interp", "helmholtz", "transfer"], required=True)
    v.add_argument("--mode", type=_mode, default=1)
    v.add_argument("--level", "--max-level", dest="max_level", type=int, default=3)
    return p


def _emit(args, text):
    if args.out:
        with open(args.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _log(msg):
    print(msg, file=sys.stderr)


def _dump(args, level, k):
    from .assembly import assemble_lambda, write_coo
    base = os.path.splitext(args.out)[0] if args.out else "lambda"
    path = f"{base}_{args.domain}_k{k}_level{args.max_level}.coo"
    write_coo(assemble_lambda(level, k), path)
    _log(f"wrote {path}")


def _run_mesh(args):
    from .mesh import MeshHierarchy, mesh_to_json
    H = MeshHierarchy.build(args.domain, args.max_level)
    L = H.finest
    _emit(args, mesh_to_json(L) + "\n")
    _log(f"{args.domain} level {args.max_level}: {L.nv} vertices, {L.ne} edges, {L.nt} triangles")
    if args.dump_matrix:
        _dump(args, L, 1)
    return 0


def _run_mixed(args):
    from .mixed import error_table, error_table_csv
    rows = error_table(args.domain, args.mode, args.max_level)
    _emit(args, error_table_csv(rows))
    _log(f"mixed, {args.domain}, k={args.mode}")
    _log("level   err_z      rate   err_p      rate   err_PiSp   rate")
    for r in rows:
        rates = ["  -  " if np.isnan(v) else f"{v:5.2f}" for v in (r.rate_z, r.rate_p, r.rate_pis)]
        _log(f"{r.level:5d}   {r.err_z:.4e} {rates[0]}  {r.err_p:.4e} {rates[1]}  "
             f"{r.err_pis:.4e} {rates[2]}")
    if args.dump_matrix:
        from .mesh import MeshHierarchy
        _dump(args, MeshHierarchy.build(args.domain, args.max_level).finest, args.mode)
    return 0


def _run_mg(args):
    from .mesh import MeshHierarchy
    from .multigrid import VCycle, random_initial_guess, solve_mg
    modes = args.mode or [1]
    if args.max_level < 2:
        raise UsageError("mg needs --max-level >= 2")
    H = MeshHierarchy.build(args.domain, args.max_level)
    table = {}
    failed = False
    for k in modes:
        for l in range(2, args.max_level + 1):
            sub = MeshHierarchy(H.domain, H.levels[:l], H.child_maps[:l - 1])
            state = VCycle.build(sub, k, args.smoother)
            n = state.A.shape[0]
            rep = solve_mg(state, np.zeros(n), random_initial_guess(n, args.seed), args.tol,
                           args.max_iters, args.rate_stat)
            table[(l, k)] = rep.rate
            if args.trace:
                ratios = " ".join(f"{q:.3f}" for q in rep.ratios)
                _log(f"k={k} level {l}: {rep.iterations} iterations, {rep.status}; ratios {ratios}")
            if not rep.converged:
                failed = True
                _log(f"k={k} level {l}: no convergence within {args.max_iters} iterations")
            if args.dump_matrix and l == args.max_level:
                _dump(args, sub.finest, k)
    lines = ["level," + ",".join(f"rate_k={k}" for k in modes)]
    for l in range(2, args.max_level + 1):
        lines.append(f"{l}," + ",".join(repr(float(table[(l, k)])) for k in modes))
    _emit(args, "\n".join(lines) + "\n")
    _log(f"V-cycle rates ({args.rate_stat} mean), {args.domain}, smoother {args.smoother}")
    _log("level  " + "  ".join(f"k={k:<4d}" for k in modes))
    for l in range(2, args.max_level + 1):
        _log(f"{l:5d}  " + "  ".join(f"{table[(l, k)]:6.2f}" for k in modes))
    return 1 if failed else 0


def _run_verify(args):
    from .verify import run_suite
    res = run_suite(args.suite, args.domain, args.max_level, args.mode)
    text = f"{args.suite} {args.domain} level={args.max_level}\n{res}\n"
    _emit(args, text)
    return 0 if res.passed else 1


def run(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "mg" and args.max_level is None:
        args.max_level = MG_DEFAULT_LEVEL[args.domain]
    if not 1 <= args.max_level <= args.level_cap:
        parser.error(f"level must lie in [1, {args.level_cap}]")
    try:
        return {"mesh": _run_mesh, "mixed": _run_mixed, "mg": _run_mg,
                "verify": _run_verify}[args.command](args)
    except UsageError as exc:
        parser.error(str(exc))
    except Exception as exc:  # solver failures become exit code 1
        _log(f"error: {type(exc).__name__}: {exc}")
        return 1


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
