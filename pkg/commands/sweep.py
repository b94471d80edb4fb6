"""Bounds against running time over a list of densities, one CSV row per f."""
import json
import math
import time
from pathlib import Path

import pandas as pd

from commands.common import EXIT_ERROR, add_run_arguments, build_oracle, finish, new_report, resolve
from utils.helpers import parse_float_list
from utils.logger import log_error, log_warning
from utils.performance import PhaseTimer
from xorcount.bounds import DEFAULT_DELTA, DEFAULT_KAPPA, best_lower_bound, pick_promising_m, upper_bound
from xorcount.errors import InconclusiveError, XorCountError
from xorcount.inputs import load_problem

CSV_COLUMNS = ['f', 'lb_log2', 'ub_log2', 'wall_time_s', 'certificates_path']
UPPER_M_OFFSET = 4


def add_arguments(parser):
    add_run_arguments(parser)
    parser.add_argument('--f-list', type=parse_float_list, required=True, help="densities, e.g. '0.05,0.1,0.5'")
    parser.add_argument('--T', type=int, default=50, help="lower-bound trials per m")
    parser.add_argument('--coarse-T', type=int, default=10)
    parser.add_argument('--kappa', type=float, default=DEFAULT_KAPPA)
    parser.add_argument('--delta', type=float, default=DEFAULT_DELTA)
    parser.add_argument('--csv', dest='csv_out', required=True)
    parser.add_argument('--cert-dir', help="where per-point certificates go (default: next to the CSV)")


def sweep_point(problem, f, args, settings, oracle):
    """(lower certificate, upper certificate) for one density."""
    seed = int(settings['seed'])
    jobs = int(settings['jobs'])
    budget = settings['budget_s']
    m = pick_promising_m(problem, f, coarse_T=args.coarse_T, seed=seed, oracle=oracle, jobs=jobs, budget=budget)
    lower = best_lower_bound(problem, f, range(max(1, m - 1), min(problem.n, m + 1) + 1), args.T,
                             kappa=args.kappa, seed=seed, oracle=oracle, jobs=jobs, budget=budget)
    upper = upper_bound(problem, min(problem.n, m + UPPER_M_OFFSET), f, delta=args.delta, seed=seed,
                        oracle=oracle, jobs=jobs, budget=budget)
    return lower, upper


def main(args):
    settings = resolve(args)
    timer = PhaseTimer()
    report = new_report(settings)
    problem = load_problem(args.input, args.kind)
    oracle = build_oracle(problem, settings)
    cert_dir = Path(args.cert_dir) if args.cert_dir else Path(args.csv_out).resolve().parent
    cert_dir.mkdir(parents=True, exist_ok=True)

    rows = []
    failed = []
    for f in args.f_list:
        start = time.perf_counter()
        path = cert_dir / f"{Path(args.csv_out).stem}_f{f:g}.json"
        try:
            with timer.track(f"f={f:g}"):
                lower, upper = sweep_point(problem, f, args, settings, oracle)
        except InconclusiveError as e:
            log_warning(str(e), context=f"sweep point f={f}")
            report.mark_inconclusive(f"f={f:g}: {e}")
            lower = upper = None
        except XorCountError as e:
            log_error(e, f"sweep point f={f}")
            failed.append(f)
            lower = upper = None
        if lower is None:
            rows.append({'f': f, 'lb_log2': math.nan, 'ub_log2': math.nan,
                         'wall_time_s': time.perf_counter() - start, 'certificates_path': ''})
            print(f"f={f:g}: no certificates")
            continue
        report.add_certificate(lower)
        report.add_certificate(upper)
        if not lower.issued:
            report.mark_inconclusive(f"f={f:g}: lower bound not issued")
        with open(path, 'w') as out:
            json.dump([lower.to_dict(), upper.to_dict()], out, sort_keys=True, indent=2)
        rows.append({'f': f,
                     'lb_log2': lower.bound_log2 if lower.issued else math.nan,
                     'ub_log2': upper.bound_log2,
                     'wall_time_s': time.perf_counter() - start,
                     'certificates_path': str(path)})
        print(f"f={f:g}: lb={rows[-1]['lb_log2']:.3f} ub={upper.bound_log2:.3f} "
              f"({rows[-1]['wall_time_s']:.2f}s)")

    pd.DataFrame.from_records(rows, columns=CSV_COLUMNS).to_csv(args.csv_out, index=False)
    print(f"sweep written to {args.csv_out}")
    code = finish(report, args, timer, oracle)
    if failed:
        print(f"failed at f = {', '.join(f'{f:g}' for f in failed)}")
        return EXIT_ERROR
    return code
