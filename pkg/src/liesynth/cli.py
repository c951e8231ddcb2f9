"""Command-line front end.

Exit codes: 0 success, 1 a check or verification failed, 2 bad input,
3 numerical failure.
"""
import argparse
import json
import sys
import warnings

import numpy as np

from .closure import AlgebraElement, closure
from .control import ControlParams, build_control_basis, optimize_params, random_params
from .errors import NumericFailure, UnrealizableStageError, ValidationError
from .matrix_core import BranchAmbiguityWarning
from .spin import PhysicalConstants, control_generators
from .synth import load_schedule, simulate, synthesize, verify, write_entanglement_csv

EXIT_OK, EXIT_FAIL, EXIT_VALIDATION, EXIT_NUMERIC = 0, 1, 2, 3

PRESETS = {
    "jxi": lambda: np.kron(np.array([[0, -1], [1, 0]], dtype=complex), np.array([[0, 1j], [1j, 0]])),
    "identity": lambda: np.eye(4, dtype=complex),
}


def _constants(args):
    return PhysicalConstants.from_file(args.constants) if args.constants else PhysicalConstants()


def _params(args):
    return ControlParams.from_json(args.params) if args.params else ControlParams()


def read_target(spec):
    """A preset name, a JSON file {"re": [[...]], "im": [[...]]}, or a whitespace text matrix."""
    if spec in PRESETS:
        return PRESETS[spec]()
    try:
        if spec.endswith(".json"):
            with open(spec) as fh:
                data = json.load(fh)
            u = np.array(data["re"], dtype=float) + 1j * np.array(data.get("im", 0.0), dtype=float)
        else:
            u = np.loadtxt(spec, dtype=complex, ndmin=2)
    except (OSError, ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read target {spec!r}: {exc}") from exc
    if u.shape != (4, 4):
        raise ValidationError(f"target must be 4x4, got {u.shape}")
    return u


def cmd_closure(args):
    c = _constants(args)
    if args.gammas == "equal":
        c = PhysicalConstants(c.gamma_n, c.gamma_n, c.kappa, c.B_unit, c.tau_unit)
    angles = [tuple(a) for a in args.angle or ()]
    if not args.dirs and not angles:
        raise ValidationError("give at least one direction (--dirs or --angle)")
    labels, mats, fields = control_generators(args.dirs, c, angles)
    gens = [AlgebraElement(m, lab) for m, lab in zip(mats, labels)]
    res = closure(gens, tol=args.tol, engine=args.engine, seed=args.seed, fields=fields)
    print(f"dim {res.dim}")
    print(f"passes {res.iterations}")
    if args.output:
        res.to_json(args.output)
        print(f"basis written to {args.output}")
    return EXIT_OK


def cmd_optimize(args):
    c = _constants(args)
    start = random_params(np.random.default_rng(args.seed)) if args.random_start else _params(args)
    res = optimize_params(start, c, max_passes=args.max_passes, step=args.step, seed=args.seed)
    print(f"cond {res.initial_cond:.6f} -> {res.cond:.6f} after {res.passes} passes")
    viol = res.params.cap_violations(c.field_cap_units)
    if viol:
        print(f"fields over the cap: {', '.join(viol)}")
    if args.output:
        res.params.to_json(args.output)
        print(f"parameters written to {args.output}")
    return EXIT_OK


def cmd_synthesize(args):
    c = _constants(args)
    basis = build_control_basis(_params(args), c)
    target = read_target(args.target)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", BranchAmbiguityWarning)
        try:
            sched = synthesize(
                target,
                basis,
                dt=args.dt,
                eps=args.eps,
                merge=not args.no_merge,
                forward_search=args.forward_search,
                allow_signed=args.allow_signed,
            )
        except UnrealizableStageError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_NUMERIC
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    print(f"n {sched.n}")
    print(f"rms {sched.rms_error:.3e}")
    print(f"stages {len(sched.stages)} ({len(sched.cycle)} per cycle)")
    print(f"total_time_ns {sched.total_time_ns:.3f} (absolute {sched.total_abs_time_ns:.3f})")
    print(f"signed_stages {len(sched.signed_stages)}")
    print(f"cap_violations {len(sched.cap_violations)}")
    if args.output:
        sched.to_json(args.output, timestamp=not args.no_timestamp)
        print(f"schedule written to {args.output}")
    if args.trace_csv:
        psi0 = np.array([0, 1, 0, 0], dtype=complex)
        _, tr = simulate(sched.stages, c, psi0)
        write_entanglement_csv(args.trace_csv, sched.stages, tr)
    return EXIT_OK


def cmd_verify(args):
    stages, c, stored = load_schedule(args.schedule)
    target = read_target(args.target) if args.target else stored
    if target is None:
        raise ValidationError("schedule holds no target; pass --target")
    ok, err = verify(stages, target, c, tol=args.tol)
    print(f"rms {err:.3e} ({'pass' if ok else 'fail'} at tolerance {args.tol:g})")
    return EXIT_OK if ok else EXIT_FAIL


def cmd_demo(args):
    from .reproduce import run_all

    only = set(args.only) if args.only else None
    rows = run_all(only)
    for r in rows:
        print(r.line())
    passed = sum(r.passed for r in rows)
    print(f"{passed}/{len(rows)} criteria pass")
    if args.output:
        with open(args.output, "w") as fh:
            json.dump([r.__dict__ for r in rows], fh, indent=2)
    return EXIT_OK if passed == len(rows) else EXIT_FAIL


def build_parser():
    p = argparse.ArgumentParser(prog="liesynth", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--constants", help="key=value physical constants file")
        sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("closure", help="dimension of the generated Lie algebra")
    common(sp)
    sp.add_argument("--dirs", default="xyz", help="field directions, letters from xyz")
    sp.add_argument("--angle", nargs=2, type=float, action="append", metavar=("THETA", "PHI"),
                    help="extra field direction by polar angles (repeatable)")
    sp.add_argument("--gammas", choices=("unequal", "equal"), default="unequal")
    sp.add_argument("--engine", choices=("abstract", "realizable"), default="abstract")
    sp.add_argument("--tol", type=float, default=1e-9)
    sp.add_argument("-o", "--output", help="basis JSON")
    sp.set_defaults(func=cmd_closure)

    sp = sub.add_parser("optimize-basis", help="hill-climb the 32 control constants")
    common(sp)
    sp.add_argument("--params", help="starting parameter JSON")
    sp.add_argument("--random-start", action="store_true")
    sp.add_argument("--max-passes", type=int, default=200)
    sp.add_argument("--step", type=float, default=0.05)
    sp.add_argument("-o", "--output", help="parameter JSON")
    sp.set_defaults(func=cmd_optimize)

    sp = sub.add_parser("synthesize", help="pulse schedule for a target unitary")
    common(sp)
    sp.add_argument("target", help="preset (jxi, identity) or matrix file")
    sp.add_argument("--params", help="control parameter JSON")
    sp.add_argument("--dt", type=float, default=0.001)
    sp.add_argument("--eps", type=float, default=0.1, help="Wei-Norman det threshold")
    sp.add_argument("--allow-signed", action=argparse.BooleanOptionalAction, default=True,
                    help="keep negative field stages (flagged) instead of failing")
    sp.add_argument("--forward-search", action="store_true",
                    help="look for forward-time equivalents of negative field stages")
    sp.add_argument("--no-merge", action="store_true")
    sp.add_argument("--no-timestamp", action="store_true")
    sp.add_argument("--trace-csv", help="entanglement-degree trace from (0,1,0,0)")
    sp.add_argument("-o", "--output", help="schedule JSON")
    sp.set_defaults(func=cmd_synthesize)

    sp = sub.add_parser("verify", help="replay a schedule against a target")
    sp.add_argument("schedule")
    sp.add_argument("--target", help="preset or matrix file (default: the stored target)")
    sp.add_argument("--tol", type=float, default=1e-8)
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("demo-paper", help="full reproduction table")
    sp.add_argument("--only", type=int, nargs="*", help="criterion numbers to run")
    sp.add_argument("-o", "--output", help="JSON report")
    sp.set_defaults(func=cmd_demo)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
