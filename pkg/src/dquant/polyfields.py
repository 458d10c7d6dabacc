"""Graded polyvector-field algebra on a truncated graded space.

A polyvector is a sum of terms coeff * x^mono * xi_{j1} ^ ... ^ xi_{jk}
with exact rational (or float) coefficients; xi_j is the odd direction
dual to the coordinate x_j.  Inner degree assigns -w(x_j) to x_j and
+w(x_j) to xi_j, where w is the coordinate's graded-component index.

Sign conventions (all pinned by the exact test suite):

* contraction with dx_i is the left xi-derivative (Koszul sign of the
  generator's position), applied in canonical edge order, innermost
  first;
* the bracket is a.b + (-1)^(kl) b.a with a.b = sum_j (d a/d xi_j) ^
  (d b/d x_j); it is graded-symmetric for the shifted degrees
  (arity mod 2) and reduces to the vector-field commutator;
* alternation is the plain signed sum over all permutations with the
  shifted Koszul sign, no 1/n!;
* the quadratic relations are the square-zero-coderivation ones: sums
  over unshuffles with shifted Koszul signs and no extra factors.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction

from .graphs import (
    AdmissibleGraph,
    GraphError,
    automorphism_count,
    contribution_filter,
    enumerate_graphs,
)

Mono = tuple[int, ...]
Wedge = tuple[int, ...]


class SpaceMismatch(ValueError):
    pass


class MissingWeightError(KeyError):
    def __init__(self, keys):
        self.keys = tuple(keys)
        super().__init__(f"missing weights for: {', '.join(self.keys)}")


@dataclass(frozen=True)
class GradedSpaceSpec:
    """Truncated graded space: dims[i] coordinates of weight i."""

    dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if any(d < 0 for d in self.dims) or self.total_dim < 1:
            raise ValueError(f"bad dims {self.dims}")

    @property
    def total_dim(self) -> int:
        return sum(self.dims)

    @property
    def coordinate_weights(self) -> tuple[int, ...]:
        out = []
        for w, d in enumerate(self.dims):
            out.extend([w] * d)
        return tuple(out)


class Polyvector:
    """Normalized polyvector field; terms keyed by (mono, wedge)."""

    __slots__ = ("space", "terms")

    def __init__(self, space: GradedSpaceSpec, terms=None):
        self.space = space
        data: dict[tuple[Mono, Wedge], object] = {}
        if terms:
            for (mono, wedge), coeff in (
                terms.items() if isinstance(terms, dict) else terms
            ):
                mono = tuple(mono)
                wedge = tuple(wedge)
                if len(mono) != space.total_dim:
                    raise ValueError(f"mono length {len(mono)} != dim {space.total_dim}")
                if list(wedge) != sorted(set(wedge)):
                    raise ValueError(f"wedge {wedge} must be strictly increasing")
                if wedge and not (1 <= wedge[0] and wedge[-1] <= space.total_dim):
                    raise ValueError(f"wedge index out of range: {wedge}")
                key = (mono, wedge)
                cur = data.get(key, 0)
                data[key] = cur + coeff
        self.terms = {k: c for k, c in data.items() if c != 0}

    # -- ring-ish operations -------------------------------------------------
    def __add__(self, other: "Polyvector") -> "Polyvector":
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return Polyvector(self.space, out)

    def __sub__(self, other: "Polyvector") -> "Polyvector":
        return self + other.scale(-1)

    def scale(self, c) -> "Polyvector":
        return Polyvector(self.space, {k: c * v for k, v in self.terms.items()})

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Polyvector)
            and self.space == other.space
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.space, tuple(sorted(self.terms.items(), key=lambda kv: kv[0]))))

    def __repr__(self):
        if not self.terms:
            return "Polyvector(0)"
        bits = []
        for (mono, wedge), c in sorted(self.terms.items()):
            xs = "".join(
                f"x{j+1}^{e}" if e > 1 else f"x{j+1}"
                for j, e in enumerate(mono)
                if e
            )
            ws = "^".join(f"xi{j}" for j in wedge)
            bits.append(f"{c}*{xs or '1'}*{ws or '1'}")
        return "Polyvector(" + " + ".join(bits) + ")"

    def is_zero(self) -> bool:
        return not self.terms

    def _check(self, other: "Polyvector"):
        if self.space != other.space:
            raise SpaceMismatch(f"{self.space} != {other.space}")

    # -- gradings -------------------------------------------------------------
    def arities(self) -> set[int]:
        return {len(w) for _, w in self.terms} or {0}

    def arity(self) -> int:
        ar = self.arities()
        if len(ar) != 1:
            raise ValueError(f"not arity-homogeneous: {sorted(ar)}")
        return next(iter(ar))

    def parity(self) -> int:
        """Shifted-degree parity (arity mod 2); requires homogeneity mod 2."""
        ps = {a % 2 for a in self.arities()}
        if len(ps) != 1:
            raise ValueError("mixed parity polyvector")
        return next(iter(ps))

    def inner_degrees(self) -> set[int]:
        w = self.space.coordinate_weights
        degs = set()
        for mono, wedge in self.terms:
            d = sum(w[j - 1] for j in wedge) - sum(
                e * w[j] for j, e in enumerate(mono)
            )
            degs.add(d)
        return degs

    def max_poly_degree(self) -> int:
        return max((sum(m) for m, _ in self.terms), default=0)

    def norm_inf(self) -> float:
        return max((abs(float(c)) for c in self.terms.values()), default=0.0)

    # -- calculus -------------------------------------------------------------
    def d_x(self, j: int) -> "Polyvector":
        """Partial derivative along coordinate x_j (1-based)."""
        out = {}
        for (mono, wedge), c in self.terms.items():
            e = mono[j - 1]
            if e:
                m = list(mono)
                m[j - 1] -= 1
                key = (tuple(m), wedge)
                out[key] = out.get(key, 0) + c * e
        return Polyvector(self.space, out)

    def d_xi(self, j: int) -> "Polyvector":
        """Left derivative along the odd direction xi_j (1-based)."""
        out = {}
        for (mono, wedge), c in self.terms.items():
            if j in wedge:
                pos = wedge.index(j)
                key = (mono, wedge[:pos] + wedge[pos + 1 :])
                out[key] = out.get(key, 0) + c * (-1) ** pos
        return Polyvector(self.space, out)

    def wedge(self, other: "Polyvector") -> "Polyvector":
        self._check(other)
        out = {}
        for (m1, w1), c1 in self.terms.items():
            for (m2, w2), c2 in other.terms.items():
                sw = _merge_wedges(w1, w2)
                if sw is None:
                    continue
                sign, w = sw
                mono = tuple(a + b for a, b in zip(m1, m2))
                key = (mono, w)
                out[key] = out.get(key, 0) + sign * c1 * c2
        return Polyvector(self.space, out)


def _merge_wedges(w1: Wedge, w2: Wedge):
    """Sort the concatenation of two increasing wedges; None if a repeat."""
    if not w1:
        return 1, w2
    if not w2:
        return 1, w1
    if set(w1) & set(w2):
        return None
    merged = []
    sign = 1
    i = j = 0
    while i < len(w1) and j < len(w2):
        if w1[i] < w2[j]:
            merged.append(w1[i])
            i += 1
        else:
            # w2[j] jumps over the remaining len(w1)-i generators
            sign *= (-1) ** (len(w1) - i)
            merged.append(w2[j])
            j += 1
    merged.extend(w1[i:])
    merged.extend(w2[j:])
    return sign, tuple(merged)


def zero(space: GradedSpaceSpec) -> Polyvector:
    return Polyvector(space, {})


def monomial(space: GradedSpaceSpec, coeff, mono, wedge) -> Polyvector:
    return Polyvector(space, {(tuple(mono), tuple(wedge)): coeff})


# ---------------------------------------------------------------------------
# Schouten bracket
# ---------------------------------------------------------------------------

def _hook(a: Polyvector, b: Polyvector) -> Polyvector:
    """sum_j (d a / d xi_j) ^ (d b / d x_j)."""
    out = zero(a.space)
    for j in range(1, a.space.total_dim + 1):
        da = a.d_xi(j)
        if da.is_zero():
            continue
        db = b.d_x(j)
        if db.is_zero():
            continue
        out = out + da.wedge(db)
    return out


def schouten(a: Polyvector, b: Polyvector) -> Polyvector:
    """Bracket extending the vector-field commutator, graded-symmetric in
    the shifted convention: [a,b] = (-1)^(arity a * arity b) [b,a].

    Requires arity-homogeneous arguments (extend by bilinearity via
    `schouten_general` if needed).
    """
    a._check(b)
    k, l = a.arity(), b.arity()
    second = _hook(b, a)
    return _hook(a, b) + (second.scale((-1) ** (k * l)) if not second.is_zero() else second)


def schouten_general(a: Polyvector, b: Polyvector) -> Polyvector:
    out = zero(a.space)
    for pa in _arity_parts(a):
        for pb in _arity_parts(b):
            out = out + schouten(pa, pb)
    return out


def _arity_parts(p: Polyvector) -> list[Polyvector]:
    by_ar: dict[int, dict] = {}
    for (mono, wedge), c in p.terms.items():
        by_ar.setdefault(len(wedge), {})[(mono, wedge)] = c
    return [Polyvector(p.space, t) for t in by_ar.values()]


# ---------------------------------------------------------------------------
# Graph operators
# ---------------------------------------------------------------------------

def contract_term(mono: Mono, wedge: Wedge, colors: tuple[int, ...]):
    """Iterated left contraction by dx_{colors[0]}, dx_{colors[1]}, ...

    Returns (sign, remaining wedge) or None when it vanishes.
    """
    w = list(wedge)
    sign = 1
    for i in colors:
        try:
            pos = w.index(i)
        except ValueError:
            return None
        sign *= (-1) ** pos
        del w[pos]
    return sign, tuple(w)


def edge_order_sign(g: AdmissibleGraph, arities) -> int:
    """Koszul sign of applying the (odd) edge contraction operators in
    canonical edge order to the slot tensor product.

    Edge (s, t) contracts one odd generator at slot s; moving that odd
    operator past the slots before s costs their current parities (input
    arity minus contractions already performed there).  This is what makes
    the operator and the weight flip together under edge reorderings.
    """
    used = [0] * g.n
    sign = 1
    for s, _ in g.edges:
        tot = 0
        for u in range(s - 1):
            tot += (arities[u] - used[u]) & 1
        if tot & 1:
            sign = -sign
        used[s - 1] += 1
    return sign


def apply_graph_operator(g: AdmissibleGraph, gammas) -> Polyvector:
    """The graph operator: sum over edge colorings of the wedge, in vertex
    label order, of (incoming derivatives applied to the outgoing-edge
    contraction of each vertex's polyvector), with the edge-operator
    ordering sign of `edge_order_sign`."""
    if len(gammas) != g.n:
        raise ValueError(f"need {g.n} polyvectors, got {len(gammas)}")
    space = gammas[0].space
    for gm in gammas[1:]:
        if gm.space != space:
            raise SpaceMismatch("polyvectors on different spaces")
    out = zero(space)
    for parts in itertools.product(*(_arity_parts(gm) for gm in gammas)):
        out = out + _apply_homogeneous(g, list(parts), space)
    return out


def _apply_homogeneous(g: AdmissibleGraph, gammas, space) -> Polyvector:
    arities = [gm.arity() for gm in gammas]
    degrees = [gm.max_poly_degree() for gm in gammas]
    if not contribution_filter(g, arities, degrees):
        return zero(space)
    pass_sign = edge_order_sign(g, arities)
    D = space.total_dim
    star = [[] for _ in range(g.n)]
    incoming = [[] for _ in range(g.n)]
    for idx, (s, t) in enumerate(g.edges):
        star[s - 1].append(idx)
        incoming[t - 1].append(idx)
    out = zero(space)
    for coloring in itertools.product(range(1, D + 1), repeat=g.e):
        psi = []
        dead = False
        for v in range(g.n):
            p = _vertex_factor(
                gammas[v],
                tuple(coloring[i] for i in star[v]),
                tuple(coloring[i] for i in incoming[v]),
            )
            if p.is_zero():
                dead = True
                break
            psi.append(p)
        if dead:
            continue
        prod = psi[0]
        for p in psi[1:]:
            prod = prod.wedge(p)
            if prod.is_zero():
                break
        out = out + prod
    return out if pass_sign == 1 else out.scale(-1)


def _vertex_factor(gamma: Polyvector, star_colors, in_colors) -> Polyvector:
    out = {}
    for (mono, wedge), c in gamma.terms.items():
        cw = contract_term(mono, wedge, star_colors)
        if cw is None:
            continue
        sign, rest = cw
        out_key = (mono, rest)
        out[out_key] = out.get(out_key, 0) + sign * c
    p = Polyvector(gamma.space, out)
    for i in in_colors:
        if p.is_zero():
            break
        p = p.d_x(i)
    return p


# ---------------------------------------------------------------------------
# Taylor components and quadratic relations
# ---------------------------------------------------------------------------

class WeightTableHandle:
    """Graph key -> (value, stderr); values exact rationals or floats."""

    def __init__(self, entries: dict[str, tuple[object, float]]):
        self.entries = dict(entries)

    @classmethod
    def from_estimates(cls, table) -> "WeightTableHandle":
        return cls({k: (est.value, est.stderr) for k, est in table.items()})

    @classmethod
    def exact(cls, mapping) -> "WeightTableHandle":
        return cls({k: (v, 0.0) for k, v in mapping.items()})

    @classmethod
    def exact_n2(cls) -> "WeightTableHandle":
        return cls({"g:n=2;e=(1,2)": (Fraction(1), 0.0)})

    def merged(self, other: "WeightTableHandle") -> "WeightTableHandle":
        out = dict(self.entries)
        out.update(other.entries)
        return WeightTableHandle(out)

    def value(self, key: str):
        return self.entries[key][0]

    def stderr(self, key: str) -> float:
        return self.entries[key][1]

    def require(self, keys):
        missing = [k for k in keys if k not in self.entries]
        if missing:
            raise MissingWeightError(missing)


def koszul_sign(parities, perm) -> int:
    """Sign of permuting graded-symmetric slots: -1 per inversion of two
    odd entries; no permutation-sign factor."""
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j] and parities[perm[i]] & parities[perm[j]] & 1:
                sign = -sign
    return sign


def taylor_contributions(n: int, gammas) -> dict[str, Polyvector]:
    """Per-graph alternating sums: key -> (1/#Aut) Alt sum_perm L_Gamma.

    taylor_L_n is the weight-linear combination of these.  The
    automorphism divisor makes the sum over labeled graphs count each
    assignment of inputs to abstract vertices once; with it (and only
    with it) the measured weights satisfy the quadratic relations
    exactly.
    """
    if len(gammas) != n:
        raise ValueError(f"need {n} polyvectors")
    parities = [gm.parity() for gm in gammas]
    space = gammas[0].space
    out: dict[str, Polyvector] = {}
    for g in enumerate_graphs(n, 2 * n - 3, connected=True):
        acc = zero(space)
        for perm in itertools.permutations(range(n)):
            eps = koszul_sign(parities, perm)
            term = apply_graph_operator(g, [gammas[i] for i in perm])
            if not term.is_zero():
                acc = acc + (term if eps == 1 else term.scale(-1))
        if not acc.is_zero():
            out[g.key()] = acc.scale(Fraction(1, automorphism_count(g)))
    return out


def taylor_L_n(gammas, weights: WeightTableHandle) -> Polyvector:
    """n-th Taylor component: alternating sum over permutations of the
    weighted graph-operator sum over connected graphs with 2n-3 edges.

    The table must cover the whole graph set for this n, vanishing
    contributions included.
    """
    n = len(gammas)
    weights.require(
        g.key() for g in enumerate_graphs(n, 2 * n - 3, connected=True)
    )
    contribs = taylor_contributions(n, gammas)
    out = zero(gammas[0].space)
    for key, pv in contribs.items():
        out = out + pv.scale(weights.value(key))
    return out


def _unshuffles(n: int, a: int):
    idx = range(n)
    for head in itertools.combinations(idx, a):
        tail = tuple(i for i in idx if i not in head)
        yield head + tail


def linfty_residual(N: int, gs, weights: WeightTableHandle):
    """Left side of the quadratic relation at arity N, with first-order
    propagation of weight stderrs.

    Returns (residual polyvector, error bound).  The bound is the largest
    per-coefficient 1-sigma value under independent weight errors.
    """
    if len(gs) != N:
        raise ValueError(f"need {N} polyvectors")
    space = gs[0].space
    parities = [g.parity() for g in gs]
    total = zero(space)
    grad: dict[str, Polyvector] = {}

    def add_grad(key, pv):
        grad[key] = grad.get(key, zero(space)) + pv

    for a in range(2, N):
        b = N + 1 - a
        if b < 2 and b != 1:
            continue
        if b == 1:
            continue  # l_1 = 0: no graphs with 2-3 edges... (n=1 has none)
        for perm in _unshuffles(N, a):
            eps = koszul_sign(parities, perm)
            head = [gs[i] for i in perm[:a]]
            tail = [gs[i] for i in perm[a:]]
            inner_contribs = taylor_contributions(a, head)
            if not inner_contribs:
                continue
            weights.require(inner_contribs.keys())
            inner_val = zero(space)
            for k, pv in inner_contribs.items():
                inner_val = inner_val + pv.scale(weights.value(k))
            # outer is linear in its first slot
            def outer(first: Polyvector) -> dict[str, Polyvector]:
                if first.is_zero():
                    return {}
                return taylor_contributions(b, [first] + tail)

            outer_contribs = outer(inner_val)
            weights.require(outer_contribs.keys())
            for j, pv in outer_contribs.items():
                contrib = pv.scale(weights.value(j))
                total = total + (contrib if eps == 1 else contrib.scale(-1))
                if weights.stderr(j) > 0:
                    add_grad(j, pv.scale(eps))
            # gradient through the inner weights
            for k, pk in inner_contribs.items():
                if weights.stderr(k) == 0:
                    continue
                for j, pv in outer(pk).items():
                    gpv = pv.scale(weights.value(j))
                    add_grad(k, gpv.scale(eps))

    bound = _coefficient_bound(space, grad, weights)
    return total, bound


def _coefficient_bound(space, grad: dict[str, Polyvector], weights) -> float:
    sig2: dict[tuple, float] = {}
    for key, pv in grad.items():
        s = weights.stderr(key)
        for term_key, c in pv.terms.items():
            sig2[term_key] = sig2.get(term_key, 0.0) + (float(c) * s) ** 2
    return max((math.sqrt(v) for v in sig2.values()), default=0.0)


def quasi_poisson_residual(alpha: Polyvector, max_terms: int,
                           weights: WeightTableHandle | None = None):
    """Per-order terms of the quasi-Poisson equation for a bivector:
    (1/2) L_2(a,a), (1/24) L_4(a,a,a,a), ... up to max_terms orders.

    Stops early when the contribution filter kills every graph at an
    order (for polynomial alpha of low degree the tail is identically 0).
    Orders beyond the first need a weight table for the matching vertex
    count.
    """
    if alpha.arity() != 2:
        raise ValueError("quasi-Poisson equation needs a bivector")
    terms = []
    deg = alpha.max_poly_degree()
    for idx in range(max_terms):
        n = 2 * (idx + 1)
        possible = any(
            contribution_filter(g, [2] * n, [deg] * n)
            for g in enumerate_graphs(n, 2 * n - 3, connected=True)
        )
        if not possible:
            break
        if n == 2:
            term = schouten(alpha, alpha).scale(Fraction(1, 2))
        else:
            if weights is None:
                raise MissingWeightError(
                    [f"(weight table for n={n} required)"]
                )
            term = taylor_L_n([alpha] * n, weights).scale(
                Fraction(1, math.factorial(n))
            )
        terms.append((n, term))
    return terms


@dataclass
class ObstructionReport:
    """First-obstruction evaluation with per-shape decomposition."""

    total: Polyvector
    shapes: list[dict]

    def contributing_shape_keys(self) -> list[str]:
        return [s["shape"] for s in self.shapes if not s["operator_zero"]]


def first_obstruction(alpha: Polyvector, weights: WeightTableHandle) -> ObstructionReport:
    """L_4(a^4)/4! restricted to the graphs a bivector can feed, with the
    per-shape breakdown (weight x labeling multiplicity vs published
    coefficients is reported, not assumed)."""
    if alpha.arity() != 2:
        raise ValueError("first obstruction is for bivectors")
    deg = alpha.max_poly_degree()
    space = alpha.space
    shapes = enumerate_graphs(4, 5, connected=True, up_to_labeling=True)
    total = zero(space)
    rows = []
    from .graphs import parse_key

    for sh in shapes:
        out_ok = all(d <= 2 for d in sh.rep.out_degrees())
        op = zero(space)
        weights.require(sh.members)
        # weight x labeling multiplicity: the published per-shape
        # coefficients fold the labeling count in, so report both.
        wsum = sum(float(weights.value(k)) for k in sh.members)
        for key in sh.members:
            g = parse_key(key)
            if not contribution_filter(g, [2] * 4, [deg] * 4):
                continue
            lg = apply_graph_operator(g, [alpha] * 4)
            op = op + lg.scale(
                weights.value(key) * Fraction(1, automorphism_count(g))
            )
        rows.append(
            {
                "shape": sh.rep.key(),
                "labeling_count": sh.labeling_count,
                "aut_count": sh.aut_count,
                "bivector_compatible": out_ok,
                "weight_sum": wsum,
                "weight_times_labelings": wsum * sh.labeling_count / len(sh.members),
                "operator_zero": op.is_zero(),
            }
        )
        total = total + op
    return ObstructionReport(total=total, shapes=rows)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _coeff_to_str(c) -> str:
    if isinstance(c, Fraction):
        return f"{c.numerator}/{c.denominator}"
    if isinstance(c, int):
        return f"{c}/1"
    return repr(float(c))


def _coeff_from_str(s: str):
    if "/" in s:
        return Fraction(s)
    return float(s)


def polyvector_to_json(p: Polyvector) -> str:
    terms = [
        {"coeff": _coeff_to_str(c), "mono": list(mono), "wedge": list(wedge)}
        for (mono, wedge), c in sorted(p.terms.items(), key=lambda kv: (kv[0][1], kv[0][0]))
    ]
    doc = {"space": {"dims": list(p.space.dims)}, "terms": terms}
    return json.dumps(doc, indent=1, sort_keys=True)


def polyvector_from_json(text: str) -> Polyvector:
    doc = json.loads(text)
    space = GradedSpaceSpec(tuple(doc["space"]["dims"]))
    terms = {}
    for t in doc["terms"]:
        key = (tuple(t["mono"]), tuple(t["wedge"]))
        terms[key] = terms.get(key, 0) + _coeff_from_str(t["coeff"])
    return Polyvector(space, terms)
