#!/usr/bin/env python3
"""Evaluate the arity-5 quadratic relation on random tuples with
Monte-Carlo weights and report residual norms against the propagated
error bounds.  This is the desk-scale content of the structure theorem:
the 4-vertex weights must cancel against iterated brackets.

Usage: python scripts/linfty_experiment.py [--samples N] [--seed S] [--tuples T]
"""

import argparse
import random
from fractions import Fraction

from dquant.polyfields import (
    GradedSpaceSpec,
    Polyvector,
    WeightTableHandle,
    linfty_residual,
)
from dquant.weights import WeightCache, weight_table


def random_polyvector(space, arity, rng, degree=2, terms=3):
    D = space.total_dim
    data = {}
    for _ in range(terms):
        mono = [0] * D
        for _ in range(rng.randint(0, degree)):
            mono[rng.randrange(D)] += 1
        wedge = tuple(sorted(rng.sample(range(1, D + 1), arity)))
        data[(tuple(mono), wedge)] = Fraction(rng.randint(-3, 3))
    return Polyvector(space, data)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=2_000_000)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--tuples", type=int, default=10)
    ap.add_argument("--cache", default=None)
    args = ap.parse_args()

    cache = WeightCache(args.cache) if args.cache else None
    handle = WeightTableHandle.exact_n2()
    for n in (3, 4):
        handle = handle.merged(
            WeightTableHandle.from_estimates(weight_table(n, args.samples, args.seed, cache))
        )
    space = GradedSpaceSpec((2,))
    rng = random.Random(args.seed)
    for t in range(args.tuples):
        gs = [random_polyvector(space, a, rng) for a in (2, 2, 2, 1, 1)]
        res, bound = linfty_residual(5, gs, handle)
        norm = res.norm_inf()
        verdict = "ok" if norm <= 3 * bound or norm == 0.0 else "EXCEEDS 3x bound"
        print(f"tuple {t}: residual {norm:.3e}  bound {bound:.3e}  {verdict}")


if __name__ == "__main__":
    main()
