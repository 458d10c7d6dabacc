"""Command-line surface: graph enumeration, weight estimation, and the
relation checkers, with reproducible seeded runs and a persistent cache.

Exit codes: 0 success / within tolerance, 1 tolerance exceeded, 2 usage
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import math
import os
import random
import sys
from dataclasses import dataclass
from fractions import Fraction

from . import geometry, graphs, hochschild, polyfields, weights

CACHE_ENV = "DQUANT_CACHE"

EXIT_OK = 0
EXIT_TOLERANCE = 1
EXIT_USAGE = 2
EXIT_IO = 3


@dataclass
class RunConfig:
    cache_path: str | None
    samples: int
    seed: int
    workers: int
    tol_mult: float
    fmt: str  # "text" | "structured"

    def __post_init__(self):
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.tol_mult <= 0:
            raise ValueError("tolerance multiplier must be positive")

    def cache(self) -> weights.WeightCache | None:
        if not self.cache_path:
            return None
        return weights.WeightCache(self.cache_path)


CONVENTIONS = [
    "edge-order: lexicographic by (source, target); boundary targets after aerial",
    "contraction: left xi-derivative, canonical edge order, innermost first",
    "alternation: plain signed sum, shifted Koszul signs (parity = arity)",
    "relations: square-zero coderivation form, unshuffle sums, no factorials",
    "orientation: circle angle first, then Re/Im per free vertex in label order",
    f"propagator-calibration: modified-angle scale = {geometry.MODIFIED_ANGLE_SCALE}",
]


def _fmt_value(v) -> str:
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    return f"{float(v):+.9f}"


def _report(cfg: RunConfig, title: str, fields: list[tuple[str, str]],
            used: list[weights.WeightEstimate] = ()):
    lines = []
    if cfg.fmt == "structured":
        lines.append(f"dquant-report: {title}")
        for k, v in fields:
            lines.append(f"{k}: {v}")
        for c in CONVENTIONS:
            lines.append(f"convention: {c}")
        for est in used:
            lines.append(
                "weight-used: "
                f"{est.key}\t{est.method}\t{_fmt_value(est.value)}\t"
                f"{est.stderr:.3e}\t{est.samples}\t{est.seed}"
            )
    else:
        for k, v in fields:
            lines.append(f"{k}: {v}")
    print("\n".join(lines))


# ---------------------------------------------------------------------------
# graphs
# ---------------------------------------------------------------------------

def cmd_graphs_enum(cfg: RunConfig, args) -> int:
    if args.shapes:
        shapes = graphs.enumerate_graphs(
            args.n, args.edges, connected=args.connected, up_to_labeling=True
        )
        for sh in shapes:
            print(
                f"{sh.rep.key()}\tlabelings={sh.labeling_count}"
                f"\tlabeled-graphs={len(sh.members)}\taut={sh.aut_count}"
            )
        print(f"total shapes: {len(shapes)}")
    else:
        gs = graphs.enumerate_graphs(args.n, args.edges, connected=args.connected)
        for g in gs:
            print(g.key())
        print(f"total labeled graphs: {len(gs)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# weight
# ---------------------------------------------------------------------------

def cmd_weight_mc(cfg: RunConfig, args) -> int:
    g = graphs.parse_key(args.graph)
    cache = cfg.cache()
    if isinstance(g, graphs.AdmissibleGraph):
        est = _cached_estimate(cache, g, cfg, weights.estimate_weight)
    else:
        est = _cached_estimate(cache, g, cfg, weights.estimate_weight_two_type)
    fields = [
        ("graph", est.key),
        ("method", est.method),
        ("value", _fmt_value(est.value)),
        ("stderr", f"{est.stderr:.3e}"),
        ("samples", str(est.samples)),
        ("seed", str(est.seed)),
    ]
    if isinstance(g, graphs.AdmissibleGraph) and g.n % 2 == 1:
        lemma = Fraction(0)
        fields.append(("odd-vertex-count", "yes"))
        fields.append(
            (
                "candidate-vanishing-lemma",
                f"0 -> {'supported' if est.agrees_with(0.0) else 'rejected'}",
            )
        )
    _report(cfg, "weight-mc", fields, [est])
    return EXIT_OK


def _cached_estimate(cache, g, cfg: RunConfig, fn) -> weights.WeightEstimate:
    key = g.key()
    if cache is not None:
        prior = cache.get(key)
        if prior is not None and (prior.samples, prior.seed) == (cfg.samples, cfg.seed):
            return prior
    est = fn(g, cfg.samples, cfg.seed)
    if cache is not None:
        cache.append(est)
    return est


def cmd_weight_ladder(cfg: RunConfig, args) -> int:
    val = weights.ladder_weight_exact(args.m, args.n)
    fields = [
        ("family", f"ladder(m={args.m}, n={args.n})"),
        ("published-closed-form", _fmt_value(val)),
        ("symmetry-implied-value", _fmt_value(weights.ladder_weight_symmetry(args.m, args.n))),
        ("graph", graphs.ladder_graph(args.m, args.n).key()),
    ]
    _report(cfg, "weight-ladder", fields)
    return EXIT_OK


def cmd_weight_table(cfg: RunConfig, args) -> int:
    cache = cfg.cache()
    table = weights.weight_table(args.n, cfg.samples, cfg.seed, cache)
    for key in sorted(table):
        est = table[key]
        print(
            f"{key}\t{est.method}\t{_fmt_value(est.value)}\t{est.stderr:.3e}"
            f"\t{est.samples}\t{est.seed}"
        )
    if cfg.fmt == "structured":
        for c in CONVENTIONS:
            print(f"convention: {c}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def _random_polyvector(space, arity, degree, rng, terms=3):
    D = space.total_dim
    data = {}
    for _ in range(terms):
        mono = [0] * D
        for _ in range(rng.randint(0, degree)):
            mono[rng.randrange(D)] += 1
        wedge = tuple(sorted(rng.sample(range(1, D + 1), arity)))
        data[(tuple(mono), wedge)] = Fraction(rng.randint(-3, 3))
    p = polyfields.Polyvector(space, data)
    if p.is_zero():
        return polyfields.monomial(space, Fraction(1), (0,) * D, tuple(range(1, arity + 1)))
    return p


def _one_type_handle(cfg: RunConfig, ns) -> polyfields.WeightTableHandle:
    handle = polyfields.WeightTableHandle.exact_n2()
    cache = cfg.cache()
    for n in sorted(set(ns)):
        if n == 2:
            continue
        table = weights.weight_table(n, cfg.samples, cfg.seed, cache)
        handle = handle.merged(polyfields.WeightTableHandle.from_estimates(table))
    return handle


def _default_arities(N: int, D: int) -> list[int]:
    if N == 5:
        return [2, 2, 2, 1, 1] if D >= 2 else [1] * 5
    return [min(2, D)] + [1] * (N - 1)


def cmd_check_linfty(cfg: RunConfig, args) -> int:
    dims = tuple(int(d) for d in args.dims.split(","))
    space = polyfields.GradedSpaceSpec(dims)
    arities = (
        [int(a) for a in args.arities.split(",")]
        if args.arities
        else _default_arities(args.N, space.total_dim)
    )
    if len(arities) != args.N:
        raise UsageError(f"need {args.N} arities")
    handle = _one_type_handle(cfg, range(2, args.N))
    rng = random.Random(cfg.seed)
    worst = (0.0, 0.0)
    failures = 0
    for t in range(args.tuples):
        gs = [_random_polyvector(space, a, 2, rng) for a in arities]
        res, bound = polyfields.linfty_residual(args.N, gs, handle)
        norm = res.norm_inf()
        tol = max(cfg.tol_mult * bound, 1e-12 if bound == 0.0 else 0.0)
        ok = norm <= tol or norm <= 1e-12
        if not ok:
            failures += 1
        if norm - tol > worst[0] - worst[1]:
            worst = (norm, tol)
        print(f"tuple {t}: residual-norm {norm:.3e}  bound {bound:.3e}  {'ok' if ok else 'FAIL'}")
    fields = [
        ("relation-arity", str(args.N)),
        ("tuples", str(args.tuples)),
        ("failures", str(failures)),
        ("worst-residual", f"{worst[0]:.3e}"),
        ("worst-tolerance", f"{worst[1]:.3e}"),
    ]
    _report(cfg, "check-linfty", fields)
    return EXIT_OK if failures == 0 else EXIT_TOLERANCE


def _load_polyvector(path: str) -> polyfields.Polyvector:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise IOFailure(f"cannot read {path}: {exc}") from exc
    try:
        return polyfields.polyvector_from_json(text)
    except (ValueError, KeyError) as exc:
        raise UsageError(f"cannot parse polyvector file {path}: {exc}") from exc


def cmd_check_poisson(cfg: RunConfig, args) -> int:
    alpha = _load_polyvector(args.input)
    handle = None
    need_weights = args.max_orders >= 2
    if need_weights:
        handle = _one_type_handle(cfg, [3, 4])
    terms = polyfields.quasi_poisson_residual(alpha, args.max_orders, handle)
    status = EXIT_OK
    rows = []
    for n, term in terms:
        norm = term.norm_inf()
        if n == 2:
            bound = 0.0
        else:
            contribs = polyfields.taylor_contributions(n, [alpha] * n)
            sig2: dict = {}
            for key, pv in contribs.items():
                s = handle.stderr(key)
                for tk, c in pv.terms.items():
                    sig2[tk] = sig2.get(tk, 0.0) + (float(c) * s) ** 2
            bound = max(
                (math.sqrt(v) for v in sig2.values()), default=0.0
            ) / math.factorial(n)
        tol = max(cfg.tol_mult * bound, 1e-12)
        ok = norm <= tol
        if not ok:
            status = EXIT_TOLERANCE
        rows.append((n, norm, bound, ok))
        print(f"order {n}: norm {norm:.3e}  bound {bound:.3e}  {'ok' if ok else 'NONZERO'}")
    fields = [
        ("input", args.input),
        ("orders-computed", str(len(terms))),
        ("tail", "identically zero (contribution filter)" if len(terms) < args.max_orders else "truncated at max-orders"),
        ("verdict", "quasi-Poisson within tolerance" if status == EXIT_OK else "equation violated"),
    ]
    _report(cfg, "check-poisson", fields)
    return status


def cmd_check_obstruction(cfg: RunConfig, args) -> int:
    alpha = _load_polyvector(args.input)
    handle = _one_type_handle(cfg, [4])
    report = polyfields.first_obstruction(alpha, handle)
    for row in report.shapes:
        print(
            f"{row['shape']}\tlabelings={row['labeling_count']}"
            f"\tweight-sum={row['weight_sum']:+.6f}"
            f"\tbivector-compatible={'yes' if row['bivector_compatible'] else 'no'}"
            f"\tcontributes={'yes' if not row['operator_zero'] else 'no'}"
        )
    cross = polyfields.taylor_L_n([alpha] * 4, handle).scale(Fraction(1, 24))
    diff = (cross - report.total).norm_inf()
    scale = max(report.total.norm_inf(), 1.0)
    ok = diff <= 1e-9 * scale
    fields = [
        ("input", args.input),
        ("obstruction-norm", f"{report.total.norm_inf():.6e}"),
        ("contributing-shapes", str(len(report.contributing_shape_keys()))),
        ("taylor-cross-check", "ok" if ok else f"MISMATCH ({diff:.3e})"),
    ]
    _report(cfg, "check-obstruction", fields)
    return EXIT_OK if ok else EXIT_TOLERANCE


def cmd_check_formality(cfg: RunConfig, args) -> int:
    space = polyfields.GradedSpaceSpec(tuple(int(d) for d in args.dims.split(",")))
    provider = hochschild.TwoTypeWeightProvider(cfg.samples, cfg.seed, cfg.cache())
    l_handle = polyfields.WeightTableHandle.exact_n2()
    rng = random.Random(cfg.seed)
    failures = 0
    for t in range(args.tuples):
        gs = [_random_polyvector(space, args.arity, 2, rng) for _ in range(args.k)]
        res, bound = hochschild.morphism_residual(args.k, gs, provider, l_handle)
        norm = hochschild.probe_norm(res)
        tol = max(cfg.tol_mult * bound, 1e-12)
        ok = norm <= tol
        if not ok:
            failures += 1
        print(f"tuple {t}: residual probe-norm {norm:.3e}  bound {bound:.3e}  {'ok' if ok else 'FAIL'}")
    fields = [
        ("component-arity", str(args.k)),
        ("tuples", str(args.tuples)),
        ("failures", str(failures)),
    ]
    _report(cfg, "check-formality", fields)
    return EXIT_OK if failures == 0 else EXIT_TOLERANCE


# ---------------------------------------------------------------------------
# wiring
# ---------------------------------------------------------------------------

class UsageError(Exception):
    pass


class IOFailure(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--cache", default=os.environ.get(CACHE_ENV))
    common.add_argument("--samples", type=int, default=200_000)
    common.add_argument("--seed", type=int, default=1)
    common.add_argument("--workers", type=int, default=1)
    common.add_argument("--tol-mult", type=float, default=3.0)
    common.add_argument("--format", choices=("text", "structured"), default="text")

    p = argparse.ArgumentParser(
        prog="dquant",
        description="Graph-weight calculus for polyvector fields: enumeration, "
        "Monte-Carlo weights, and exact/numerical relation checkers.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("graphs", help="enumerate admissible graphs")
    gsub = g.add_subparsers(dest="sub", required=True)
    ge = gsub.add_parser("enum", parents=[common])
    ge.add_argument("--n", type=int, required=True)
    ge.add_argument("--edges", type=int, required=True)
    ge.add_argument("--connected", action="store_true")
    ge.add_argument("--shapes", action="store_true")
    ge.set_defaults(fn=cmd_graphs_enum)

    w = sub.add_parser("weight", help="graph weights")
    wsub = w.add_subparsers(dest="sub", required=True)
    wm = wsub.add_parser("mc", parents=[common])
    wm.add_argument("--graph", required=True)
    wm.set_defaults(fn=cmd_weight_mc)
    wl = wsub.add_parser("ladder", parents=[common])
    wl.add_argument("--m", type=int, required=True)
    wl.add_argument("--n", type=int, required=True)
    wl.set_defaults(fn=cmd_weight_ladder)
    wtab = wsub.add_parser("table", parents=[common])
    wtab.add_argument("--n", type=int, required=True)
    wtab.set_defaults(fn=cmd_weight_table)

    c = sub.add_parser("check", help="relation checkers")
    csub = c.add_subparsers(dest="sub", required=True)
    cl = csub.add_parser("linfty", parents=[common])
    cl.add_argument("--N", type=int, required=True)
    cl.add_argument("--dims", default="2")
    cl.add_argument("--arities", default=None)
    cl.add_argument("--tuples", type=int, default=3)
    cl.set_defaults(fn=cmd_check_linfty)
    cp = csub.add_parser("poisson", parents=[common])
    cp.add_argument("--input", required=True)
    cp.add_argument("--max-orders", type=int, default=2)
    cp.set_defaults(fn=cmd_check_poisson)
    co = csub.add_parser("obstruction", parents=[common])
    co.add_argument("--input", required=True)
    co.set_defaults(fn=cmd_check_obstruction)
    cf = csub.add_parser("formality", parents=[common])
    cf.add_argument("--k", type=int, required=True)
    cf.add_argument("--dims", default="2")
    cf.add_argument("--arity", type=int, default=1)
    cf.add_argument("--tuples", type=int, default=3)
    cf.set_defaults(fn=cmd_check_formality)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        cfg = RunConfig(
            cache_path=args.cache,
            samples=args.samples,
            seed=args.seed,
            workers=args.workers,
            tol_mult=args.tol_mult,
            fmt=args.format,
        )
        return args.fn(cfg, args)
    except (UsageError, graphs.GraphError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IOFailure, weights.CacheError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
