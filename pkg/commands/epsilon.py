"""Print eps(n, m, q, f) and the variance bound v(q)."""
from commands.common import EXIT_OK, big_int
from utils.helpers import format_log_value
from xorcount.comb import EpsilonInputs, epsilon, variance_bound_v


def add_arguments(parser):
    parser.add_argument('--n', type=int, required=True)
    parser.add_argument('--m', type=int, required=True)
    parser.add_argument('--q', type=big_int, required=True, help="set size, e.g. 64 or 2^40")
    parser.add_argument('--f', type=float, required=True)


def main(args):
    inputs = EpsilonInputs(args.n, args.m, args.q, args.f)
    eps = epsilon(inputs)
    v = variance_bound_v(args.q, args.n, args.m, args.f)
    print(f"n={args.n} m={args.m} q={args.q} f={args.f}")
    print(format_log_value(eps.log_value, 'epsilon'))
    print(format_log_value(v.log_value, 'v(q)'))
    return EXIT_OK
