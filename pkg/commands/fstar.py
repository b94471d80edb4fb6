"""Minimum constraint density f* for a target set size."""
import json

from commands.common import EXIT_OK, big_int
from utils.settings_manager import load_settings
from xorcount.comb import min_density_fstar


def add_arguments(parser):
    parser.add_argument('--n', type=int, required=True, help="number of hashed variables")
    parser.add_argument('--m', type=int, required=True, help="number of parity constraints, near log2|S|")
    parser.add_argument('--c-threshold', dest='c', type=int, default=2, help="q = 2^(m + c)")
    parser.add_argument('--q', type=big_int, help="set size; overrides --c-threshold")
    parser.add_argument('--delta', type=float, default=9 / 4)
    parser.add_argument('--json', dest='json_out')


def main(args):
    q = args.q if args.q is not None else 1 << (args.m + args.c)
    tolerance = float(load_settings()['fstar_tolerance'])
    certificate = min_density_fstar(args.n, args.m, q, args.delta, tolerance=tolerance)
    lo, hi = certificate.bracket
    status = "met" if certificate.condition_met else "NOT met even at f = 1/2"
    print(f"f* = {certificate.f_star:.5f}  bracket [{lo:.6f}, {hi:.6f}]  condition {status}")
    print(f"n={args.n} m={args.m} log2 q={certificate.m + certificate.c:.3f} delta={args.delta}")
    if args.json_out:
        with open(args.json_out, 'w') as f:
            json.dump(certificate.to_dict(), f, sort_keys=True, indent=2)
    return EXIT_OK
