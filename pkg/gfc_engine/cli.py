#!/usr/bin/env python3
"""
General fractional calculus command line

Usage:
    # Associated Sonin series of h_0.5
    gfc kernel associate --mu 0.5 --coeffs 1

    # Hilfer-type first-level derivative of f(t) = t as CSV
    gfc op gfd-1l --k1 powerlaw:0.25 --k2 powerlaw:0.25 --f "t" --grid 512:2:2

    # Verify a kernel triple from a spec file
    gfc verify triple --spec power.toml

    # Run the default suite and keep the run for later comparison
    gfc verify suite --save-dir reports/suites

Exit codes: 0 success, 1 failed check or unexpected error, 2 usage, parse
or engine error.
"""
import argparse
import json
import sys
from typing import Dict, List, Optional

import numpy as np

from gfc_engine.config import config, configure_logging
from gfc_engine.errors import EngineError, KernelSpecError, UnsupportedDerivativeError
from gfc_engine.expressions import compile_expression, differentiate_expression, evaluate, parse_expression
from gfc_engine.kernels import (
    Kernel,
    KernelSeries,
    KernelTriple,
    Series,
    laplace_transform,
    solve_associated_pair,
    solve_third_kernel,
    sonin_pair,
)
from gfc_engine.operators import (
    apply_gfd_1l,
    apply_gfd_caputo,
    apply_gfd_rl,
    apply_gfi,
    apply_hilfer,
    projector_1l,
)
from gfc_engine.quadrature import Grid, GridFunction, TestFunction, infer_derivative_exponent
from gfc_engine.utils.kernel_specs import (
    kernels_from_spec,
    load_spec_file,
    pair_from_spec,
    parse_kernel_shorthand,
    triple_from_spec,
    write_kernel_spec,
)
from gfc_engine.utils.report_db import ReportDatabase
from gfc_engine.verification import (
    ResidualReport,
    check_ft1,
    check_ft2,
    check_index_law,
    check_laplace_triple,
    check_sonin_pair,
    check_triple,
    default_suite,
    extended_suite,
    format_report,
    format_reports,
    print_console_summary,
    run_named_suite,
    write_residual_csv,
)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2


# ============================================================================
# Argument helpers
# ============================================================================

def _float_list(text: str) -> List[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _grid(args) -> Grid:
    return Grid.parse(args.grid) if args.grid else config.default_grid()


def _spec_kernels(args) -> Dict[str, Kernel]:
    """Kernels from --spec, overridden by --kappa/--k/--k1/--k2 shorthand"""
    kernels = kernels_from_spec(load_spec_file(args.spec)) if getattr(args, "spec", None) else {}
    for role in ("kappa", "k", "k1", "k2"):
        text = getattr(args, role, None)
        if text:
            kernels[role] = parse_kernel_shorthand(text)
    return kernels


def _require_kernel(kernels: Dict[str, Kernel], role: str) -> Kernel:
    if role not in kernels:
        raise KernelSpecError(f"missing kernel --{role} (or [{role}] in --spec)")
    return kernels[role]


def _test_function(source: str, fprime: Optional[str], f0: Optional[float],
                   singularity: float) -> TestFunction:
    """
    Test function from an expression. f' defaults to the symbolic derivative
    and f(0) to the value at t = 0 when that is finite. With singularity 0 an
    f' that is unbounded at 0 gets its exponent inferred.
    """
    expr = parse_expression(source)
    if fprime is not None:
        derivative = compile_expression(fprime)
    else:
        try:
            d_expr = differentiate_expression(expr)
            derivative = lambda t: evaluate(d_expr, t)  # noqa: E731
        except UnsupportedDerivativeError:
            derivative = None
    if f0 is None and singularity >= 0:
        at_zero = evaluate(expr, 0.0)
        f0 = at_zero if np.isfinite(at_zero) else None
    return infer_derivative_exponent(
        TestFunction(lambda t: evaluate(expr, t), derivative, f0, singularity, name=source)
    )


def _operand(args):
    if args.input:
        return GridFunction.from_csv(args.input, p=args.singularity)
    if args.f is None:
        raise KernelSpecError("an input function is required: --f expr or --input csv")
    return _test_function(args.f, args.fprime, args.f0, args.singularity)


def _series_output(series: KernelSeries) -> str:
    coeffs = ", ".join(f"{c:.15g}" for c in series.coeffs)
    ratio = series.tail_ratio
    return "\n".join([
        f"mu={series.mu:.15g}",
        f"coeffs=[{coeffs}]",
        f"truncation={series.truncation}",
        f"tail_ratio={'n/a' if ratio is None else f'{ratio:.6g}'}",
    ])


def _emit_grid_function(result: GridFunction, out: Optional[str]) -> None:
    if out:
        result.to_csv(out)
    else:
        result.to_frame().to_csv(sys.stdout, index=False, float_format="%.15g")


def _finish_report(report: ResidualReport, args) -> int:
    print(format_report(report))
    if getattr(args, "out", None):
        write_residual_csv(report, args.out)
    return EXIT_OK if report.passed else EXIT_FAILED


# ============================================================================
# kernel
# ============================================================================

def kernel_eval_cli(args) -> int:
    kernel = _require_kernel(_spec_kernels(args), "kappa")
    for t in args.t:
        print(f"{kernel.evaluate(t):.15g}")
    return EXIT_OK


def _series_argument(args, role: str) -> KernelSeries:
    kernels = _spec_kernels(args)
    if role == "kappa" and args.mu is not None:
        if not args.coeffs:
            raise KernelSpecError("--mu needs --coeffs")
        return KernelSeries(args.mu, args.coeffs)
    return _require_kernel(kernels, role).to_series(args.truncation)


def kernel_associate_cli(args) -> int:
    kappa = _series_argument(args, "kappa")
    result = solve_associated_pair(kappa)
    print(_series_output(result))
    if args.out:
        write_kernel_spec(Series(result), args.out)
    return EXIT_OK


def kernel_third_cli(args) -> int:
    kappa = _series_argument(args, "kappa")
    k1 = _series_argument(args, "k1")
    result = solve_third_kernel(kappa, k1)
    print(_series_output(result))
    if args.out:
        write_kernel_spec(Series(result), args.out)
    return EXIT_OK


def kernel_laplace_cli(args) -> int:
    kernel = _require_kernel(_spec_kernels(args), "kappa")
    for p in args.p:
        print(f"{laplace_transform(kernel, p, numeric=args.numeric or None):.15g}")
    return EXIT_OK


# ============================================================================
# op
# ============================================================================

def op_cli(args) -> int:
    grid = _grid(args)
    f = _operand(args)
    name = args.operator
    if name == "hilfer":
        result = apply_hilfer(args.alpha, args.gamma, f, grid)
    else:
        kernels = _spec_kernels(args)
        if name == "gfi":
            result = apply_gfi(_require_kernel(kernels, "kappa"), f, grid)
        elif name == "gfd-rl":
            result = apply_gfd_rl(_require_kernel(kernels, "k"), f, grid)
        elif name == "gfd-caputo":
            result = apply_gfd_caputo(_require_kernel(kernels, "k"), f, grid)
        elif name == "gfd-1l":
            result = apply_gfd_1l(_require_kernel(kernels, "k1"), _require_kernel(kernels, "k2"), f, grid)
        else:
            result = projector_1l(_require_kernel(kernels, "k1"), _require_kernel(kernels, "k2"),
                                  _require_kernel(kernels, "kappa"), f, grid)
    _emit_grid_function(result, args.out)
    return EXIT_OK


# ============================================================================
# verify
# ============================================================================

def _triple(args) -> KernelTriple:
    """Triple from --spec with shorthand flags overriding its tables"""
    data = load_spec_file(args.spec) if args.spec else {}
    for role in ("kappa", "k1", "k2"):
        text = getattr(args, role, None)
        if text:
            data[role] = parse_kernel_shorthand(text).to_dict()
    return triple_from_spec(data)


def verify_sonin_cli(args) -> int:
    if args.spec and not (args.kappa or args.k):
        kappa, k = pair_from_spec(load_spec_file(args.spec))
    else:
        kernels = _spec_kernels(args)
        kappa = _require_kernel(kernels, "kappa")
        kappa, k = (kappa, kernels["k"]) if "k" in kernels else sonin_pair(kappa)
    return _finish_report(check_sonin_pair(kappa, k, _grid(args), args.tol), args)


def verify_triple_cli(args) -> int:
    return _finish_report(check_triple(_triple(args), _grid(args), args.tol), args)


def verify_ft1_cli(args) -> int:
    phi = _test_function(args.f, args.fprime, args.f0, args.singularity)
    return _finish_report(check_ft1(_triple(args), phi, _grid(args), args.tol), args)


def verify_ft2_cli(args) -> int:
    f = _test_function(args.f, args.fprime, args.f0, args.singularity)
    return _finish_report(check_ft2(_triple(args), f, _grid(args), args.tol), args)


def verify_index_cli(args) -> int:
    f = _test_function(args.f, args.fprime, args.f0, args.singularity)
    return _finish_report(check_index_law(args.alpha, args.beta, f, _grid(args), args.tol), args)


def verify_laplace_cli(args) -> int:
    return _finish_report(check_laplace_triple(_triple(args), args.p, args.tol), args)


def verify_suite_cli(args) -> int:
    grid = _grid(args)
    specs = extended_suite(grid) if args.extended else default_suite(grid)
    result = run_named_suite(specs, "extended" if args.extended else "default", grid)
    print_console_summary(result)
    print(format_reports(result.reports))
    if args.json:
        with open(args.json, "w") as f:
            json.dump(result.to_dict(), f, indent=2)
    if args.save_dir:
        ReportDatabase(args.save_dir).save_suite_result(result)
    return EXIT_OK if result.passed else EXIT_FAILED


# ============================================================================
# Parser
# ============================================================================

def _add_kernel_flags(parser, roles, spec: bool = True) -> None:
    if spec:
        parser.add_argument('--spec', help='Kernel spec file (TOML or JSON)')
    for role in roles:
        parser.add_argument(f'--{role}', help=f'Kernel {role} as kind:param[,param]')


def _add_function_flags(parser, required: bool = False, default: Optional[str] = None) -> None:
    parser.add_argument('--f', required=required, default=default, help='Test function expression in t')
    parser.add_argument('--fprime', help="Expression for f' (default: symbolic derivative)")
    parser.add_argument('--f0', type=float, help='Value f(0) (default: f evaluated at 0)')
    parser.add_argument('--singularity', type=float, default=0.0,
                        help='Exponent p of the t^p factor of f (default: 0)')


def _add_grid_flags(parser) -> None:
    parser.add_argument('--grid', help='Grid as n:r:T (default: %d:%g:%g)'
                        % (config.GRID_N, config.GRADING, config.HORIZON))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog='gfc',
        description="General fractional calculus engine",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument('--log-level', default='WARNING', help='Logging level (default: WARNING)')
    subparsers = parser.add_subparsers(dest='command', required=True, help='Command to run')

    # kernel
    kernel_parser = subparsers.add_parser('kernel', help='Kernel evaluation and series solvers')
    kernel_sub = kernel_parser.add_subparsers(dest='action', required=True)

    p = kernel_sub.add_parser('eval', help='Evaluate a kernel at t > 0')
    _add_kernel_flags(p, ['kappa'])
    p.add_argument('--kernel', dest='kappa', help='Kernel as kind:param[,param]')
    p.add_argument('--t', type=float, nargs='+', required=True, help='Evaluation points')
    p.set_defaults(handler=kernel_eval_cli)

    for action, roles, handler, text in (
        ('associate', ['kappa'], kernel_associate_cli, 'Solve the associated Sonin series'),
        ('third', ['kappa', 'k1'], kernel_third_cli, 'Solve the third kernel of a triple'),
    ):
        p = kernel_sub.add_parser(action, help=text)
        _add_kernel_flags(p, roles)
        if action == 'associate':
            p.add_argument('--kernel', dest='kappa', help='Kernel as kind:param[,param]')
        p.add_argument('--mu', type=float, help='Series order of kappa')
        p.add_argument('--coeffs', type=_float_list, help='Series coefficients of kappa, comma-separated')
        p.add_argument('--truncation', type=int, default=config.SERIES_TRUNCATION,
                       help='Terms used for catalog kernels (default: %(default)s)')
        p.add_argument('--out', help='Write the solved series as a JSON kernel spec')
        p.set_defaults(handler=handler)

    p = kernel_sub.add_parser('laplace', help='Laplace transform at p > 0')
    _add_kernel_flags(p, ['kappa'])
    p.add_argument('--kernel', dest='kappa', help='Kernel as kind:param[,param]')
    p.add_argument('--p', type=float, nargs='+', required=True, help='Transform variables')
    p.add_argument('--numeric', action='store_true', help='Force numerical quadrature')
    p.set_defaults(handler=kernel_laplace_cli)

    # op
    op_parser = subparsers.add_parser('op', help='Apply an operator on a grid, CSV output')
    op_sub = op_parser.add_subparsers(dest='operator', required=True)
    op_roles = {
        'gfi': ['kappa'],
        'gfd-rl': ['k'],
        'gfd-caputo': ['k'],
        'gfd-1l': ['k1', 'k2'],
        'hilfer': [],
        'projector': ['k1', 'k2', 'kappa'],
    }
    for name, roles in op_roles.items():
        p = op_sub.add_parser(name)
        _add_kernel_flags(p, roles, spec=bool(roles))
        if name == 'hilfer':
            p.add_argument('--alpha', type=float, required=True, help='Order alpha in (0, 1)')
            p.add_argument('--gamma', type=float, required=True, help='Type gamma in [0, 1-alpha]')
        _add_function_flags(p)
        p.add_argument('--input', help='CSV (t,value) input instead of --f')
        _add_grid_flags(p)
        p.add_argument('--out', help='Output CSV path (default: stdout)')
        p.set_defaults(handler=op_cli)

    # verify
    verify_parser = subparsers.add_parser('verify', help='Run identity checks')
    verify_sub = verify_parser.add_subparsers(dest='check', required=True)

    p = verify_sub.add_parser('sonin', help='(kappa * k)(t) = 1')
    _add_kernel_flags(p, ['kappa', 'k'])
    p.set_defaults(handler=verify_sonin_cli)

    p = verify_sub.add_parser('triple', help='(kappa * k1 * k2)(t) = 1')
    _add_kernel_flags(p, ['kappa', 'k1', 'k2'])
    p.set_defaults(handler=verify_triple_cli)

    p = verify_sub.add_parser('ft1', help='First fundamental theorem')
    _add_kernel_flags(p, ['kappa', 'k1', 'k2'])
    _add_function_flags(p, default='1')
    p.set_defaults(handler=verify_ft1_cli)

    p = verify_sub.add_parser('ft2', help='Second fundamental theorem')
    _add_kernel_flags(p, ['kappa', 'k1', 'k2'])
    _add_function_flags(p, required=True)
    p.set_defaults(handler=verify_ft2_cli)

    p = verify_sub.add_parser('index', help='Index law of power-law integrals')
    p.add_argument('--alpha', type=float, required=True)
    p.add_argument('--beta', type=float, required=True)
    _add_function_flags(p, default='exp(t)')
    p.set_defaults(handler=verify_index_cli)

    p = verify_sub.add_parser('laplace', help='Laplace-domain triple relation')
    _add_kernel_flags(p, ['kappa', 'k1', 'k2'])
    p.add_argument('--p', type=_float_list, default=[1.0, 2.0, 5.0], help='Comma-separated p values')
    p.set_defaults(handler=verify_laplace_cli)

    p = verify_sub.add_parser('suite', help='Run the shipped verification suite')
    p.add_argument('--extended', action='store_true', help='Add null-space and right-inverse checks')
    p.add_argument('--json', help='Write the suite result as JSON')
    p.add_argument('--save-dir', help='Persist the run in a report database directory')
    p.set_defaults(handler=verify_suite_cli)

    for name in ('sonin', 'triple', 'ft1', 'ft2', 'index', 'laplace', 'suite'):
        sub = verify_sub.choices[name]
        _add_grid_flags(sub)
        if name != 'suite':
            sub.add_argument('--tol', type=float, help='Tolerance (default: per check kind)')
            sub.add_argument('--out', help='Write node-wise residuals as CSV')
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    configure_logging(args.log_level)
    try:
        return args.handler(args)
    except EngineError as exc:
        print(exc.one_line(), file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error[io]: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:
        print(f"error[internal]: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
