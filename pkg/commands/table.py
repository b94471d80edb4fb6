"""Exact count and CNF encoding statistics for a contingency table."""
import math
from pathlib import Path

from commands.common import EXIT_OK
from xorcount.comb import min_density_fstar
from xorcount.tables import SummaryRow, brute_force_count, encode_to_cnf, read_table_spec, summary_rows_to_csv


def add_arguments(parser):
    parser.add_argument('spec', help="table spec file")
    parser.add_argument('--csv', dest='csv_out', help="write a summary row here")
    parser.add_argument('--no-guard', action='store_true', help="disable the brute-force size guards")
    parser.add_argument('--delta', type=float, default=9 / 4, help="f* sufficiency parameter")


def main(args):
    spec = read_table_spec(args.spec)
    problem, encoding = encode_to_cnf(spec, name=Path(args.spec).stem)
    stats = encoding.stats()
    print(f"{problem.name}: {spec.rows}x{spec.cols} {'binary' if spec.binary else 'integer'}, "
          f"{stats['cell_bits']} cell bits, {stats['aux_vars']} auxiliary variables, {stats['clauses']} clauses")

    if args.no_guard:
        count = brute_force_count(spec, max_cells=None, max_space=None)
    else:
        count = brute_force_count(spec)
    exact_log2 = math.log2(count) if count else -math.inf
    print(f"tables: {count} (log2 = {exact_log2:.4f})")

    fstar = None
    m = int(exact_log2) if count > 1 else 0
    if 1 <= m and m + 2 <= encoding.n_cell_bits:
        fstar = min_density_fstar(encoding.n_cell_bits, m, 1 << (m + 2), args.delta).f_star
        print(f"f* at m={m}: {fstar:.4f}")

    if args.csv_out:
        row = SummaryRow(problem.name, f"{spec.rows}x{spec.cols}", fstar, None,
                         exact_log2 if count else None, None, encoding.n_cell_bits)
        summary_rows_to_csv([row], args.csv_out)
        print(f"summary written to {args.csv_out}")
    return EXIT_OK
