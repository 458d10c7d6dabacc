#!/usr/bin/env python3
"""Measure the triangle weight (3 vertices, 3 edges) and report which of
the two contradictory published statements the integral satisfies:

* the reflection lemma: weights of odd vertex count vanish;
* the rail-family closed form, which is nonzero for the same graph.

Usage: python scripts/odd_vertex_report.py [--samples N] [--seed S]
"""

import argparse

from dquant.weights import odd_vertex_report


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--samples", type=int, default=4_000_000)
    ap.add_argument("--seed", type=int, default=3)
    args = ap.parse_args()
    report = odd_vertex_report(args.samples, args.seed)
    for line in report.lines():
        print(line)


if __name__ == "__main__":
    main()
