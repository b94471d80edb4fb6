"""Lower bound, upper bound or sparse count for one problem file."""
from commands.common import EXIT_INCONCLUSIVE, add_run_arguments, build_oracle, finish, new_report, resolve
from utils.helpers import format_log_value, parse_int_list
from utils.logger import log_warning
from utils.performance import PhaseTimer
from xorcount.bounds import (DEFAULT_DELTA, DEFAULT_KAPPA, SparseCountConfig, best_lower_bound, pick_promising_m,
                             sparse_count, upper_bound)
from xorcount.comb import density_schedule_fstar
from xorcount.errors import InconclusiveError
from xorcount.inputs import load_problem

UPPER_M_OFFSET = 4
LOWER_M_SPREAD = 2


def add_arguments(parser):
    add_run_arguments(parser)
    parser.add_argument('--mode', choices=['lb', 'ub', 'count'], default='lb')
    parser.add_argument('--m', type=int, help="number of constraints (default: coarse sweep)")
    parser.add_argument('--m-range', type=parse_int_list, help="lb mode: explicit m values, e.g. '1-4,7'")
    parser.add_argument('--T', type=int, help="trials per m")
    parser.add_argument('--coarse-T', type=int, default=10, help="trials per m in the coarse sweep")
    parser.add_argument('--delta', type=float, default=DEFAULT_DELTA, help="failure probability for ub/count")
    parser.add_argument('--kappa', type=float, default=DEFAULT_KAPPA)
    parser.add_argument('--c-threshold', dest='c', type=float,
                        help="lower-bound threshold c in (0, 1]; default is the observed Y/T")
    parser.add_argument('--bonferroni', action='store_true', help="union-bound the confidence over the m range")
    parser.add_argument('--alpha', type=float, default=0.04, help="count mode: alpha in T = ln(1/delta)/alpha ln n")
    parser.add_argument('--drop-log-n', action='store_true', help="count mode: omit the ln n factor from T")
    parser.add_argument('--fstar-schedule', action='store_true',
                        help="count mode: per-level density f*(n, i, 2^(i+2), 9/4) instead of --f")


def _pick_m(problem, args, settings, oracle):
    return pick_promising_m(problem, args.f, coarse_T=args.coarse_T, seed=int(settings['seed']), oracle=oracle,
                            jobs=int(settings['jobs']), budget=settings['budget_s'])


def _lower_range(problem, args, settings, oracle, timer):
    if args.m_range:
        return args.m_range
    if args.m is not None:
        return [args.m]
    with timer.track('pick_m'):
        center = _pick_m(problem, args, settings, oracle)
    return list(range(max(1, center - LOWER_M_SPREAD), min(problem.n, center + LOWER_M_SPREAD) + 1))


def run_lower(problem, args, settings, oracle, timer):
    m_range = _lower_range(problem, args, settings, oracle, timer)
    with timer.track('lower_bound'):
        return best_lower_bound(problem, args.f, m_range, args.T or 50, kappa=args.kappa, c=args.c,
                                seed=int(settings['seed']), oracle=oracle, jobs=int(settings['jobs']),
                                budget=settings['budget_s'], bonferroni=args.bonferroni)


def run_upper(problem, args, settings, oracle, timer):
    if args.m is not None:
        m = args.m
    else:
        with timer.track('pick_m'):
            m = min(problem.n, _pick_m(problem, args, settings, oracle) + UPPER_M_OFFSET)
    with timer.track('upper_bound'):
        return upper_bound(problem, m, args.f, delta=args.delta, seed=int(settings['seed']), T=args.T,
                           oracle=oracle, jobs=int(settings['jobs']), budget=settings['budget_s'])


def run_count(problem, args, settings, oracle, timer):
    schedule = density_schedule_fstar(problem.n) if args.fstar_schedule else None
    config = SparseCountConfig(delta=args.delta, alpha=args.alpha, f=args.f, density_schedule=schedule,
                               drop_log_n=args.drop_log_n)
    with timer.track('sparse_count'):
        return sparse_count(problem, config, seed=int(settings['seed']), oracle=oracle,
                            jobs=int(settings['jobs']), budget=settings['budget_s'])


RUNNERS = {'lb': run_lower, 'ub': run_upper, 'count': run_count}


def describe(certificate):
    kind = certificate.to_dict(include_timing=False)['kind']
    if certificate.bound_log2 is None:
        if kind == 'count':
            return "count: no solution witnessed (|S| < 1)"
        return f"{kind}: vacuous at m={certificate.m} (p_est={certificate.p_est:.3f})"
    lines = [f"{kind} at m={certificate.to_dict(include_timing=False)['m']}, "
             f"confidence {certificate.confidence:.4f}",
             format_log_value(certificate.bound_ln, '  |S| bound')]
    return '\n'.join(lines)


def main(args):
    settings = resolve(args)
    timer = PhaseTimer()
    report = new_report(settings)
    with timer.track('load'):
        problem = load_problem(args.input, args.kind)
    oracle = build_oracle(problem, settings)
    print(f"{problem.name}: n={problem.n} ({problem.variant}), backend {oracle.name}")
    try:
        certificate = RUNNERS[args.mode](problem, args, settings, oracle, timer)
    except InconclusiveError as e:
        log_warning(str(e), context=args.input)
        report.mark_inconclusive(str(e))
        print(f"inconclusive: {e}")
        finish(report, args, timer, oracle)
        return EXIT_INCONCLUSIVE
    report.add_certificate(certificate)
    print(describe(certificate))
    return finish(report, args, timer, oracle)
