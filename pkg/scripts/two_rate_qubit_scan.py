"""Scan the two-parameter qubit example over (gamma, gamma_tilde).

Prints the canonical rates and the non-Markov index on a grid of constant
parameters, and checks the common rate against 6 gamma + 4 gamma_tilde.
"""
import argparse

import numpy as np

from canonme import canonicalize
from canonme.models import two_rate_qubit_canonical_rate, two_rate_qubit_generator


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--points", type=int, default=5, help="values per parameter axis")
    p.add_argument("--span", type=float, default=1.0, help="scan [-span, span] on both axes")
    args = p.parse_args(argv)

    vals = np.linspace(-args.span, args.span, args.points)
    print(f"{'gamma':>8} {'gamma_t':>8} {'rates':>24} {'6g+4gt':>9} {'markov':>7}")
    worst = 0.0
    for g in vals:
        for gt in vals:
            cf = canonicalize(two_rate_qubit_generator(g, gt))
            ref = two_rate_qubit_canonical_rate(g, gt)
            if len(cf.rates):
                worst = max(worst, float(np.max(np.abs(cf.rates - ref))))
            rates = " ".join(f"{r:+.4f}" for r in cf.rates) or "-"
            print(f"{g:8.3f} {gt:8.3f} {rates:>24} {ref:9.4f} {str(ref >= 0):>7}")
    print(f"max |rate - (6g + 4gt)| = {worst:.2e}")


if __name__ == "__main__":
    main()
