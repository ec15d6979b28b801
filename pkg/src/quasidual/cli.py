"""Command-line front end.

Exit status: 0 success/converged, 2 invalid spec, 3 compatibility failure,
4 non-convergence (including failed verification checks).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import io
from .errors import InvalidSpec, NoCompatibility, NoInteriorMinimum, NonPositiveField
from .fiber import project_to_nehari
from .grid import first_eigenfunction, to_csv
from .problem import classify_duality, load_spec, validate
from .solver import SolveOptions, solve, sweep_lambda, uniqueness_probe
from .transform import verify_properties

EXIT_OK, EXIT_INVALID, EXIT_NOCOMPAT, EXIT_NONCONV = 0, 2, 3, 4

log = logging.getLogger("quasidual")


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", type=Path, help="problem spec file (key=value lines)")
    common.add_argument("--out", type=Path, default=Path("."), help="artifact directory")
    common.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a spec key (repeatable)")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="quasidual", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("verify-transform", parents=[common],
                       help="check the structural properties of the transform g")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--t-max", type=float, default=1e6)
    p.add_argument("--precision", choices=("double", "extended"), default="double")

    p = sub.add_parser("check-compat", parents=[common],
                       help="classify the compatibility integrals for phi_1")
    p.add_argument("--levels", type=int, default=4)

    sub.add_parser("fiber-scan", parents=[common], help="scan the fiber map of phi_1")

    solver = argparse.ArgumentParser(add_help=False)
    solver.add_argument("--max-iters", type=int, default=SolveOptions.max_iters)

    sub.add_parser("solve", parents=[common, solver], help="solve the dual problem")

    p = sub.add_parser("sweep-lambda", parents=[common, solver], help="continuation in lambda")
    p.add_argument("--lambdas", type=_float_list, default=[0.0, 0.01, 0.1, 1.0, 10.0])

    p = sub.add_parser("uniqueness", parents=[common, solver], help="multi-start uniqueness probe")
    p.add_argument("--starts", type=int, default=5)
    return parser


def _load(args):
    if args.spec is None:
        raise InvalidSpec("spec", "--spec PATH is required for this subcommand")
    try:
        spec = load_spec(args.spec, args.overrides)
    except OSError as exc:
        raise InvalidSpec("spec", f"cannot read {args.spec}: {exc}") from None
    validation = validate(spec)
    return spec, validation


def _options(args) -> SolveOptions:
    return SolveOptions(max_iters=args.max_iters, seed=args.seed)


def _verify_transform(args, out):
    dtype = np.longdouble if args.precision == "extended" else np.float64
    report = verify_properties(args.samples, args.t_max, args.seed, dtype=dtype)
    io.write_json(out / "report.json", {"subcommand": "verify-transform", **report.to_dict()})
    print(f"verify-transform: {report.n_passed}/{len(report.checks)} properties pass, "
          f"K0 estimate {report.K0_estimate:.6f}, round trip {report.roundtrip_abs_max:.3e}")
    return EXIT_OK if report.all_passed else EXIT_NONCONV


def _check_compat(args, out):
    spec, validation = _load(args)
    reports = classify_duality(spec, None, args.levels)
    io.write_json(out / "report.json", {
        "subcommand": "check-compat",
        "spec": spec.describe(),
        "validation": validation.to_dict(),
        "classification": reports[0].classification,
        "integrals": [r.to_dict() for r in reports],
    })
    verdicts = ", ".join(r.classification for r in reports)
    print(f"check-compat: {reports[0].classification} ({verdicts})")
    return EXIT_OK if reports[0].convergent else EXIT_NOCOMPAT


def _fiber_scan(args, out):
    spec, validation = _load(args)
    phi1, _ = first_eigenfunction(spec.mesh)
    profile = project_to_nehari(phi1, spec)
    io.write_text(out / "fiber.csv", profile.to_csv())
    io.write_json(out / "report.json", {
        "subcommand": "fiber-scan",
        "spec": spec.describe(),
        "validation": validation.to_dict(),
        "profile": profile.to_dict(),
    })
    print(f"fiber-scan: t_min {profile.t_min:.6g}, phi_min {profile.phi_min:.6g}, {profile.shape}")
    return EXIT_OK


def _solve(args, out):
    spec, validation = _load(args)
    rep = solve(spec, None, _options(args))
    io.write_text(out / "solution_v.csv", to_csv(rep.v))
    io.write_text(out / "solution_u.csv", to_csv(rep.u))
    io.write_json(out / "report.json", {
        "subcommand": "solve",
        "spec": spec.describe(),
        "validation": validation.to_dict(),
        "options": _options(args).to_dict(),
        **rep.to_dict(),
    })
    print(f"solve: {rep.status} after {rep.iters} iterations, energy {rep.energy.total:.10g}, "
          f"residual {rep.residual_norm:.3e}")
    return EXIT_OK if rep.converged else EXIT_NONCONV


def _sweep(args, out):
    spec, validation = _load(args)
    rep = sweep_lambda(spec, args.lambdas, _options(args))
    io.write_text(out / "sweep.csv", rep.to_csv())
    io.write_json(out / "report.json", {
        "subcommand": "sweep-lambda",
        "spec": spec.describe(),
        "validation": validation.to_dict(),
        **rep.to_dict(),
    })
    print(f"sweep-lambda: monotone_ordering={rep.monotone_ordering} "
          f"energy_decreasing={rep.energy_decreasing} h1_convergence={rep.h1_convergence}")
    return EXIT_OK if rep.all_converged else EXIT_NONCONV


def _uniqueness(args, out):
    spec, validation = _load(args)
    rep = uniqueness_probe(spec, args.starts, _options(args))
    io.write_json(out / "report.json", {
        "subcommand": "uniqueness",
        "spec": spec.describe(),
        "validation": validation.to_dict(),
        **rep.to_dict(),
    })
    print(f"uniqueness: in_regime={rep.in_regime} pass={rep.uniqueness_pass} "
          f"max H1 distance {rep.max_distance:.3e}")
    if not rep.all_converged or (rep.in_regime and not rep.uniqueness_pass):
        return EXIT_NONCONV
    return EXIT_OK


COMMANDS = {
    "verify-transform": _verify_transform,
    "check-compat": _check_compat,
    "fiber-scan": _fiber_scan,
    "solve": _solve,
    "sweep-lambda": _sweep,
    "uniqueness": _uniqueness,
}


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.subcommand](args, out)
    except InvalidSpec as exc:
        print(f"{args.subcommand}: invalid spec ({exc})", file=sys.stderr)
        return EXIT_INVALID
    except NoCompatibility as exc:
        io.write_json(out / "report.json", {
            "subcommand": args.subcommand,
            "error": "NoCompatibility",
            "classification": exc.report.classification,
            "integrals": [exc.report.to_dict()],
        })
        print(f"{args.subcommand}: no compatibility ({exc})", file=sys.stderr)
        return EXIT_NOCOMPAT
    except (NoInteriorMinimum, NonPositiveField) as exc:
        print(f"{args.subcommand}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NONCONV


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
