"""Flags and plumbing shared by the commands that run oracle trials."""
import argparse
import sys

from utils.error_recovery import trial_failures
from utils.helpers import validate_probability
from utils.settings_manager import resolve_settings
from xorcount.oracle import SOLVER_PROFILES, make_oracle
from xorcount.report import RunReport

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INCONCLUSIVE = 2


def big_int(text):
    """Integers, also written as 2^k or 2**k."""
    text = text.strip()
    for sep in ('**', '^'):
        if sep in text:
            base, exp = text.split(sep, 1)
            return int(base) ** int(exp)
    return int(text)


def density(text):
    """argparse type for f: a probability no larger than 1/2."""
    try:
        value = validate_probability(text, name="f")
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from e
    if value > 0.5:
        raise argparse.ArgumentTypeError(f"f must be at most 1/2, got {value}")
    return value


def add_run_arguments(parser):
    parser.add_argument('input', help="problem file: .cnf, .table or .bits")
    parser.add_argument('--kind', choices=['cnf', 'table', 'explicit'],
                        help="input kind when the extension does not say")
    parser.add_argument('--seed', type=int, help="master seed (default from settings)")
    parser.add_argument('--f', type=density, default=0.5, help="constraint density in [0, 1/2]")
    parser.add_argument('--solver', help="solver command template containing {in}")
    parser.add_argument('--solver-profile', choices=sorted(SOLVER_PROFILES))
    parser.add_argument('--budget-s', type=float, help="wall-clock budget per oracle call")
    parser.add_argument('--native-xor', action=argparse.BooleanOptionalAction, default=None,
                        help="pass parity rows to the solver as x-lines")
    parser.add_argument('--chunk', type=int, help="sub-XOR size when expanding parity rows to clauses")
    parser.add_argument('--jobs', type=int, help="concurrent trials")
    parser.add_argument('--json', dest='json_out', help="write the run report here")


def resolve(args):
    return resolve_settings({
        'seed': getattr(args, 'seed', None),
        'solver': getattr(args, 'solver', None),
        'solver_profile': getattr(args, 'solver_profile', None),
        'budget_s': getattr(args, 'budget_s', None),
        'native_xor': getattr(args, 'native_xor', None),
        'chunk': getattr(args, 'chunk', None),
        'jobs': getattr(args, 'jobs', None),
    })


def build_oracle(problem, settings):
    native = settings['native_xor'] if settings.get('solver') else None
    return make_oracle(problem,
                       solver=settings.get('solver') or None,
                       profile=settings['solver_profile'],
                       native_xor=native,
                       chunk=int(settings['chunk']),
                       max_vars=int(settings['exhaustive_max_vars']))


def new_report(settings):
    trial_failures.clear()
    return RunReport(command=list(sys.argv), seed=int(settings['seed']), config=dict(settings))


def finish(report, args, timer=None, oracle=None):
    """Fill in timing, solver stats and failures; write JSON when asked; return the exit code."""
    if timer is not None:
        report.timing = timer.get_performance_report()
    if oracle is not None:
        report.solver_stats = oracle.stats_summary()
    report.trial_failures = trial_failures.entries()
    if getattr(args, 'json_out', None):
        report.write(args.json_out)
        print(f"report written to {args.json_out}")
    return EXIT_INCONCLUSIVE if report.status == 'inconclusive' else EXIT_OK
