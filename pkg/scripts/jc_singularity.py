"""Approach the zeros of G(t) in the strong-coupling Jaynes-Cummings model.

For each zero t* the generator is evaluated at t* - 10^-k.  The condition
number of the map grows like |G|^-2 and the rate like 2 / (t* - t), until the
invertibility check flags the point.
"""
import argparse

import numpy as np

from canonme.measures import canonical_series
from canonme.models import jc_provider


def zeros_of_G(lam, gamma0, count):
    # G = e^{-lam t/2} [cos(w t) + (lam / 2w) sin(w t)], w = sqrt(2 gamma0 lam - lam^2) / 2
    w = np.sqrt(2 * gamma0 * lam - lam * lam) / 2
    phase = np.arctan(2 * w / lam)
    return [(np.pi * (n + 1) - phase) / w for n in range(count)]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--lam", type=float, default=1.0)
    p.add_argument("--gamma0", type=float, default=5.0)
    p.add_argument("--zeros", type=int, default=2)
    p.add_argument("--cond-max", type=float, default=1e8)
    args = p.parse_args(argv)
    if 2 * args.gamma0 <= args.lam:
        p.error("G(t) has no zeros unless 2 gamma0 > lambda")

    prov = jc_provider(args.lam, args.gamma0, args.cond_max)
    for ts in zeros_of_G(args.lam, args.gamma0, args.zeros):
        print(f"zero at t* = {ts:.12f}")
        grid = np.array([ts - 10.0 ** -k for k in range(1, 11)] + [ts])
        s = canonical_series(prov, grid)
        for i, t in enumerate(grid):
            if s.singular_flags[i]:
                rep = s.reports[i]
                print(f"  t*-t = {ts - t:8.1e}  cond = {rep.condition_number:9.2e}  singular")
            else:
                rate = s.rates[i][np.argmax(np.abs(s.rates[i]))]
                print(f"  t*-t = {ts - t:8.1e}  rate = {rate:+12.4e}")


if __name__ == "__main__":
    main()
