"""Closed-form density of the asymptotic set-size regimes."""
from commands.common import EXIT_OK
from xorcount.comb import asymptotic_density


def add_arguments(parser):
    parser.add_argument('regime', choices=['lower', 'linear', 'sublinear'],
                        help="lower needs --kappa; linear needs --alpha; sublinear needs --beta and --kappa")
    parser.add_argument('--m', type=float, required=True)
    parser.add_argument('--alpha', type=float)
    parser.add_argument('--beta', type=float)
    parser.add_argument('--kappa', type=float)


def main(args):
    density = asymptotic_density(args.regime, args.m, alpha=args.alpha, beta=args.beta, kappa=args.kappa)
    print(f"{args.regime} regime, m={args.m:g}: f = {density:.6f}")
    if density > 0.5:
        print("  (above 1/2: no sparsity gain at this m)")
    return EXIT_OK
