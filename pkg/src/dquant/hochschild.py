"""Polynomial algebra, Hochschild cochains as polydifferential operators,
the Gerstenhaber bracket and differential, the antisymmetrization
quasi-isomorphism from polyvector fields, the two-type graph operators,
and the morphism components with their quadratic-relation residual.

A cochain of arity l is stored as terms coeff * x^out_mono *
(d^deriv_1 (x) ... (x) d^deriv_l): it acts on l polynomials by
differentiating the s-th argument by the multi-index deriv_s and
multiplying everything together.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .graphs import GraphError, TwoTypeGraph, enumerate_two_type
from .polyfields import (
    GradedSpaceSpec,
    MissingWeightError,
    Polyvector,
    SpaceMismatch,
    contract_term,
    koszul_sign,
    schouten,
    taylor_contributions,
    zero as pv_zero,
)

Mono = tuple[int, ...]


class Polynomial:
    """Element of the polynomial algebra; terms keyed by exponent vector."""

    __slots__ = ("space", "terms")

    def __init__(self, space: GradedSpaceSpec, terms=None):
        self.space = space
        data: dict[Mono, object] = {}
        if terms:
            for mono, c in (terms.items() if isinstance(terms, dict) else terms):
                mono = tuple(mono)
                if len(mono) != space.total_dim:
                    raise ValueError("monomial length mismatch")
                data[mono] = data.get(mono, 0) + c
        self.terms = {m: c for m, c in data.items() if c != 0}

    def __add__(self, other):
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, 0) + c
        return Polynomial(self.space, out)

    def __mul__(self, other: "Polynomial") -> "Polynomial":
        out = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = tuple(a + b for a, b in zip(m1, m2))
                out[m] = out.get(m, 0) + c1 * c2
        return Polynomial(self.space, out)

    def scale(self, c) -> "Polynomial":
        return Polynomial(self.space, {m: c * v for m, v in self.terms.items()})

    def __eq__(self, other):
        return (
            isinstance(other, Polynomial)
            and self.space == other.space
            and self.terms == other.terms
        )

    def __hash__(self):
        return hash((self.space, tuple(sorted(self.terms.items()))))

    def __repr__(self):
        if not self.terms:
            return "Polynomial(0)"
        bits = []
        for m, c in sorted(self.terms.items()):
            xs = "".join(f"x{j+1}^{e}" if e > 1 else f"x{j+1}" for j, e in enumerate(m) if e)
            bits.append(f"{c}*{xs or '1'}")
        return "Polynomial(" + " + ".join(bits) + ")"

    def is_zero(self) -> bool:
        return not self.terms

    def derive(self, multi: Mono) -> "Polynomial":
        out = {}
        for m, c in self.terms.items():
            coeff = c
            new = list(m)
            ok = True
            for j, k in enumerate(multi):
                if k == 0:
                    continue
                if m[j] < k:
                    ok = False
                    break
                coeff = coeff * math.perm(m[j], k)
                new[j] = m[j] - k
            if ok:
                key = tuple(new)
                out[key] = out.get(key, 0) + coeff
        return Polynomial(self.space, out)


def poly_monomial(space, coeff, mono) -> Polynomial:
    return Polynomial(space, {tuple(mono): coeff})


class PolyDiffOperator:
    """Hochschild cochain as a polydifferential operator."""

    __slots__ = ("space", "arity", "terms")

    def __init__(self, space: GradedSpaceSpec, arity: int, terms=None):
        if arity < 0:
            raise ValueError("arity must be >= 0")
        self.space = space
        self.arity = arity
        data: dict[tuple[Mono, tuple[Mono, ...]], object] = {}
        if terms:
            for (out_mono, deriv), c in (
                terms.items() if isinstance(terms, dict) else terms
            ):
                out_mono = tuple(out_mono)
                deriv = tuple(tuple(d) for d in deriv)
                if len(deriv) != arity:
                    raise ValueError("derivative slot count != arity")
                if len(out_mono) != space.total_dim or any(
                    len(d) != space.total_dim for d in deriv
                ):
                    raise ValueError("multi-index length mismatch")
                key = (out_mono, deriv)
                data[key] = data.get(key, 0) + c
        self.terms = {k: c for k, c in data.items() if c != 0}

    def __add__(self, other: "PolyDiffOperator") -> "PolyDiffOperator":
        self._check(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return PolyDiffOperator(self.space, self.arity, out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c) -> "PolyDiffOperator":
        return PolyDiffOperator(
            self.space, self.arity, {k: c * v for k, v in self.terms.items()}
        )

    def __eq__(self, other):
        return (
            isinstance(other, PolyDiffOperator)
            and self.space == other.space
            and self.arity == other.arity
            and self.terms == other.terms
        )

    def __repr__(self):
        return f"PolyDiffOperator(arity={self.arity}, terms={len(self.terms)})"

    def is_zero(self) -> bool:
        return not self.terms

    def _check(self, other):
        if self.space != other.space:
            raise SpaceMismatch("operators on different spaces")
        if self.arity != other.arity:
            raise ValueError(f"arity mismatch {self.arity} != {other.arity}")

    @property
    def degree(self) -> int:
        """Hochschild (Gerstenhaber) degree: arity - 1."""
        return self.arity - 1

    def inner_degrees(self) -> set[int]:
        w = self.space.coordinate_weights
        degs = set()
        for out_mono, deriv in self.terms:
            d = -sum(e * w[j] for j, e in enumerate(out_mono))
            for slot in deriv:
                d += sum(e * w[j] for j, e in enumerate(slot))
            degs.add(d)
        return degs

    def norm_inf(self) -> float:
        return max((abs(float(c)) for c in self.terms.values()), default=0.0)


def op_zero(space: GradedSpaceSpec, arity: int) -> PolyDiffOperator:
    return PolyDiffOperator(space, arity, {})


def multiplication(space: GradedSpaceSpec) -> PolyDiffOperator:
    z = (0,) * space.total_dim
    return PolyDiffOperator(space, 2, {(z, (z, z)): Fraction(1)})


def identity_cochain(space: GradedSpaceSpec) -> PolyDiffOperator:
    z = (0,) * space.total_dim
    return PolyDiffOperator(space, 1, {(z, (z,)): Fraction(1)})


def apply(op: PolyDiffOperator, args) -> Polynomial:
    """Evaluate the operator on `arity` polynomials."""
    if len(args) != op.arity:
        raise ValueError(f"operator arity {op.arity}, got {len(args)} arguments")
    space = op.space
    out = Polynomial(space, {})
    for (out_mono, deriv), c in op.terms.items():
        prod = poly_monomial(space, c, out_mono)
        for slot, arg in zip(deriv, args):
            prod = prod * arg.derive(slot)
            if prod.is_zero():
                break
        out = out + prod
    return out


# ---------------------------------------------------------------------------
# Gerstenhaber structure
# ---------------------------------------------------------------------------

def _multi_splits(multi: Mono, parts: int):
    """All ways to split a derivative multi-index over `parts` factors,
    with the multinomial coefficient."""
    splits = [((0,) * len(multi),) * parts]
    coeffs = [1]
    for j, total in enumerate(multi):
        if total == 0:
            continue
        new_splits = []
        new_coeffs = []
        for base, bc in zip(splits, coeffs):
            for comp in _compositions(total, parts):
                mult = math.factorial(total)
                for k in comp:
                    mult //= math.factorial(k)
                upd = tuple(
                    tuple(
                        m[jj] + (comp[i] if jj == j else 0)
                        for jj in range(len(multi))
                    )
                    for i, m in enumerate(base)
                )
                new_splits.append(upd)
                new_coeffs.append(bc * mult)
        splits, coeffs = new_splits, new_coeffs
    return list(zip(splits, coeffs))


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for k in range(total + 1):
        for rest in _compositions(total - k, parts - 1):
            yield (k,) + rest


def insert(a: PolyDiffOperator, b: PolyDiffOperator, slot: int) -> PolyDiffOperator:
    """Compose by plugging b into the `slot`-th argument of a (0-based)."""
    if not 0 <= slot < a.arity:
        raise ValueError("bad insertion slot")
    space = a.space
    arity = a.arity + b.arity - 1
    D = space.total_dim
    out: dict = {}
    for (out_a, deriv_a), ca in a.terms.items():
        beta = deriv_a[slot]
        for (out_b, deriv_b), cb in b.terms.items():
            # distribute d^beta over x^{out_b} and the arity(b) argument stacks
            for split, mult in _multi_splits(beta, b.arity + 1):
                kappa0, kappas = split[0], split[1:]
                # d^{kappa0} x^{out_b}
                falling = 1
                new_out = list(out_b)
                dead = False
                for j in range(D):
                    k = kappa0[j]
                    if k == 0:
                        continue
                    if out_b[j] < k:
                        dead = True
                        break
                    falling *= math.perm(out_b[j], k)
                    new_out[j] = out_b[j] - k
                if dead:
                    continue
                total_out = tuple(x + y for x, y in zip(out_a, new_out))
                new_deriv = (
                    deriv_a[:slot]
                    + tuple(
                        tuple(d + k for d, k in zip(deriv_b[s], kappas[s]))
                        for s in range(b.arity)
                    )
                    + deriv_a[slot + 1 :]
                )
                key = (total_out, new_deriv)
                out[key] = out.get(key, 0) + ca * cb * mult * falling
    return PolyDiffOperator(space, arity, out)


def circ(a: PolyDiffOperator, b: PolyDiffOperator) -> PolyDiffOperator:
    """Pre-Lie composition sum with the Gerstenhaber sign per slot."""
    arity = a.arity + b.arity - 1
    out = op_zero(a.space, arity)
    for i in range(a.arity):
        term = insert(a, b, i)
        if i * (b.arity - 1) % 2:
            term = term.scale(-1)
        out = out + term
    return out


def gerstenhaber(a: PolyDiffOperator, b: PolyDiffOperator) -> PolyDiffOperator:
    """[a, b] = a o b - (-1)^((|a|-1)(|b|-1)) b o a, degrees = arity."""
    a._check(a)
    if a.space != b.space:
        raise SpaceMismatch("operators on different spaces")
    first = circ(a, b)
    second = circ(b, a)
    sign = (-1) ** ((a.arity - 1) * (b.arity - 1))
    return first - second.scale(sign)


def hoch_differential(a: PolyDiffOperator) -> PolyDiffOperator:
    """d a = [mu, a] with mu the product; squares to zero."""
    return gerstenhaber(multiplication(a.space), a)


# ---------------------------------------------------------------------------
# From polyvector fields to cochains
# ---------------------------------------------------------------------------

def hkr(gamma: Polyvector) -> PolyDiffOperator:
    """(1/k!) f_1 (x) ... (x) f_k -> gamma(df_1 ^ ... ^ df_k) on the
    arity-k part; functions map to themselves as 0-cochains."""
    space = gamma.space
    parts: dict[int, PolyDiffOperator] = {}
    D = space.total_dim
    for (mono, wedge), c in gamma.terms.items():
        k = len(wedge)
        acc = parts.setdefault(k, op_zero(space, k))
        coeff = c * Fraction(1, math.factorial(k))
        add = {}
        for colors in itertools.permutations(wedge):
            cw = contract_term(mono, wedge, colors)
            if cw is None:
                continue
            sign, _ = cw
            deriv = tuple(
                tuple(1 if j + 1 == i else 0 for j in range(D)) for i in colors
            )
            key = (mono, deriv)
            add[key] = add.get(key, 0) + sign * coeff
        parts[k] = acc + PolyDiffOperator(space, k, add)
    live = [op for op in parts.values() if not op.is_zero()]
    if not live:
        ar = gamma.arity() if gamma.terms else 0
        return op_zero(space, ar)
    if len(live) > 1:
        raise ValueError("mixed arity polyvector; split it first")
    return live[0]


def u_gamma(g: TwoTypeGraph, gammas) -> PolyDiffOperator:
    """Operator of a two-type graph: color edges by coordinates; each
    aerial vertex contributes its polyvector contracted along its outgoing
    edges (requires out-degree == arity, else 0) and differentiated along
    incoming ones; boundary vertices collect argument derivatives."""
    if len(gammas) != g.n:
        raise ValueError(f"need {g.n} polyvectors")
    if g.has_cycle():
        raise GraphError("operator undefined for graphs with oriented cycles")
    space = gammas[0].space
    for gm in gammas[1:]:
        if gm.space != space:
            raise SpaceMismatch("polyvectors on different spaces")
    D = space.total_dim
    out_deg = g.out_degrees()
    for v in range(g.n):
        if {len(w) for _, w in gammas[v].terms} - {out_deg[v]}:
            # any term with arity != out-degree contracts or wedges to zero
            gammas = list(gammas)
            gammas[v] = Polyvector(
                space,
                {
                    (m, w): c
                    for (m, w), c in gammas[v].terms.items()
                    if len(w) == out_deg[v]
                },
            )
    if any(gm.is_zero() for gm in gammas):
        return op_zero(space, g.m)
    star = [[] for _ in range(g.n)]
    into_vertex = [[] for _ in range(g.n)]
    into_slot = [[] for _ in range(g.m)]
    for idx, (s, (kind, j)) in enumerate(g.edges):
        star[s - 1].append(idx)
        if kind == "v":
            into_vertex[j - 1].append(idx)
        else:
            into_slot[j - 1].append(idx)
    out: dict = {}
    for coloring in itertools.product(range(1, D + 1), repeat=g.e):
        factors = []
        dead = False
        for v in range(g.n):
            p = _scalar_vertex_factor(
                gammas[v],
                tuple(coloring[i] for i in star[v]),
                tuple(coloring[i] for i in into_vertex[v]),
            )
            if p is None:
                dead = True
                break
            factors.append(p)
        if dead:
            continue
        prod = factors[0]
        for p in factors[1:]:
            prod = prod * p
            if prod.is_zero():
                break
        if prod.is_zero():
            continue
        deriv = tuple(
            tuple(
                sum(1 for i in into_slot[j] if coloring[i] == c + 1)
                for c in range(D)
            )
            for j in range(g.m)
        )
        for mono, cval in prod.terms.items():
            key = (mono, deriv)
            out[key] = out.get(key, 0) + cval
    return PolyDiffOperator(space, g.m, out)


def _scalar_vertex_factor(gamma: Polyvector, star_colors, in_colors):
    """Fully-contracted vertex coefficient as a Polynomial (or None)."""
    space = gamma.space
    out: dict = {}
    for (mono, wedge), c in gamma.terms.items():
        cw = contract_term(mono, wedge, star_colors)
        if cw is None:
            continue
        sign, rest = cw
        if rest:
            continue
        out[mono] = out.get(mono, 0) + sign * c
    p = Polynomial(space, out)
    for i in in_colors:
        if p.is_zero():
            return None
        p = p.derive(tuple(1 if j + 1 == i else 0 for j in range(space.total_dim)))
    return None if p.is_zero() else p


# ---------------------------------------------------------------------------
# Morphism components
# ---------------------------------------------------------------------------

class TwoTypeWeightProvider:
    """Weight lookup for two-type graphs backed by the Monte-Carlo
    estimator and an optional persistent cache."""

    def __init__(self, samples: int, seed: int, cache=None):
        self.samples = samples
        self.seed = seed
        self.cache = cache
        self._mem: dict[str, tuple[object, float]] = {}

    def get(self, g: TwoTypeGraph) -> tuple[object, float]:
        key = g.key()
        if key in self._mem:
            return self._mem[key]
        if self.cache is not None:
            prior = self.cache.get(key)
            if (
                prior is not None
                and (prior.samples, prior.seed) == (self.samples, self.seed)
            ):
                self._mem[key] = (prior.value, prior.stderr)
                return self._mem[key]
        from .weights import estimate_weight_two_type

        est = estimate_weight_two_type(g, self.samples, self.seed)
        if self.cache is not None:
            self.cache.append(est)
        self._mem[key] = (est.value, est.stderr)
        return self._mem[key]


def _raw_morphism_component(gammas, provider: TwoTypeWeightProvider):
    """Weighted two-type graph sum at fixed vertex assignment, split into
    (value operator by arity m) and (gradient operators keyed by graph)."""
    n = len(gammas)
    space = gammas[0].space
    arities = []
    for gm in gammas:
        ar = gm.arities()
        if len(ar) != 1:
            raise ValueError("split polyvectors into arity parts before f_n")
        arities.append(next(iter(ar)))
    m = sum(arities) - 2 * n + 2
    if m < 0:
        return None, {}
    value = op_zero(space, m)
    grads: dict[str, tuple[PolyDiffOperator, float]] = {}
    for g in enumerate_two_type(n, m, 2 * n + m - 2):
        if g.out_degrees() != arities:
            continue
        op = u_gamma(g, gammas)
        if op.is_zero():
            continue
        w, err = provider.get(g)
        value = value + op.scale(w)
        if err > 0:
            grads[g.key()] = (op, err)
    return value, grads


def f_n(gammas, samples: int, seed: int, cache=None,
        provider: TwoTypeWeightProvider | None = None) -> PolyDiffOperator:
    """n-th morphism component: graded-symmetrized weighted sum of
    two-type graph operators.  Functions (arity 0) at n = 1 map to
    themselves as 0-cochains."""
    op, _ = f_n_with_errors(gammas, provider or TwoTypeWeightProvider(samples, seed, cache))
    return op


def f_n_with_errors(gammas, provider: TwoTypeWeightProvider):
    n = len(gammas)
    space = gammas[0].space
    if n == 1 and gammas[0].arities() == {0}:
        # 0-cochain: the polynomial itself
        terms = {(mono, ()): c for (mono, _), c in gammas[0].terms.items()}
        return PolyDiffOperator(space, 0, terms), {}
    parities = [gm.parity() for gm in gammas]
    total = None
    grads: dict[str, tuple[PolyDiffOperator, float]] = {}
    count = 0
    for perm in itertools.permutations(range(n)):
        eps = koszul_sign(parities, perm)
        val, gr = _raw_morphism_component([gammas[i] for i in perm], provider)
        if val is None:
            continue
        count += 1
        val = val.scale(eps)
        total = val if total is None else total + val
        for key, (op, err) in gr.items():
            cur = grads.get(key)
            add = op.scale(eps)
            grads[key] = (add if cur is None else cur[0] + add, err)
    if total is None or count == 0:
        return op_zero(space, max(sum(max(gm.arities()) for gm in gammas) - 2 * n + 2, 0)), {}
    norm = Fraction(1, count)
    total = total.scale(norm)
    grads = {k: (op.scale(norm), err) for k, (op, err) in grads.items()}
    return total, grads


def probe_norm(op: PolyDiffOperator, degree: int = 2) -> float:
    """Max absolute output coefficient over all argument tuples of
    monomials with total degree <= `degree`."""
    space = op.space
    D = space.total_dim
    monos = [
        m
        for m in itertools.product(range(degree + 1), repeat=D)
        if sum(m) <= degree
    ]
    best = 0.0
    for tup in itertools.product(monos, repeat=op.arity):
        args = [poly_monomial(space, Fraction(1), m) for m in tup]
        val = apply(op, args)
        best = max(best, max((abs(float(c)) for c in val.terms.values()), default=0.0))
    return best


def morphism_residual(k: int, gammas, provider: TwoTypeWeightProvider,
                      l_weights) -> tuple[PolyDiffOperator, float]:
    """Quadratic-relation residual of the morphism at arity k:

        d f_k(x_1..x_k)
      + 1/2 sum_{i+j=k} sum_{unshuffles} eps [f_i(..), f_j(..)]
      - sum_{a>=2} sum_{unshuffles} eps f_{k-a+1}(l_a(..) ^ ..)

    Exactly zero when the weights are exact; with Monte-Carlo weights the
    error bound propagates their stderrs to the output coefficients at
    first order.
    """
    if len(gammas) != k:
        raise ValueError(f"need {k} polyvectors")
    space = gammas[0].space
    parities = [gm.parity() for gm in gammas]
    grads: dict[str, tuple[PolyDiffOperator | None, float]] = {}

    def accumulate(tgt: dict, key, op, err, transform=None):
        op2 = transform(op) if transform is not None else op
        cur = tgt.get(key)
        tgt[key] = (op2 if cur is None or cur[0] is None else cur[0] + op2, err)

    fk, fk_grads = f_n_with_errors(gammas, provider)
    total = hoch_differential(fk)
    for key, (op, err) in fk_grads.items():
        accumulate(grads, key, hoch_differential(op), err)

    # Gerstenhaber terms
    half = Fraction(1, 2)
    for i in range(1, k):
        for head in itertools.combinations(range(k), i):
            tail = tuple(x for x in range(k) if x not in head)
            perm = head + tail
            eps = koszul_sign(parities, perm) * half
            fi, gi = f_n_with_errors([gammas[x] for x in head], provider)
            fj, gj = f_n_with_errors([gammas[x] for x in tail], provider)
            total = total + gerstenhaber(fi, fj).scale(eps)
            for key, (op, err) in gi.items():
                accumulate(grads, key, gerstenhaber(op, fj).scale(eps), err)
            for key, (op, err) in gj.items():
                accumulate(grads, key, gerstenhaber(fi, op).scale(eps), err)

    # F(L ...) terms
    for a in range(2, k + 1):
        for head in itertools.combinations(range(k), a):
            tail = tuple(x for x in range(k) if x not in head)
            perm = head + tail
            eps = koszul_sign(parities, perm)
            inner_contribs = taylor_contributions(a, [gammas[x] for x in head])
            if not inner_contribs:
                continue
            l_weights.require(inner_contribs.keys())
            inner = pv_zero(space)
            for key, pv in inner_contribs.items():
                inner = inner + pv.scale(l_weights.value(key))
            rest = [gammas[x] for x in tail]

            def fl(first):
                if first.is_zero():
                    return None, {}
                return f_n_with_errors([first] + rest, provider)

            val, gr = fl(inner)
            if val is not None:
                total = total - val.scale(eps)
                for key, (op, err) in gr.items():
                    accumulate(grads, key, op.scale(-eps), err)
            for key, pv in inner_contribs.items():
                err = l_weights.stderr(key)
                if err == 0:
                    continue
                val_k, _ = fl(pv)
                if val_k is not None:
                    accumulate(grads, key, val_k.scale(-eps), err)

    sig2: dict[tuple, float] = {}
    for key, (op, err) in grads.items():
        if op is None:
            continue
        for term_key, c in op.terms.items():
            sig2[term_key] = sig2.get(term_key, 0.0) + (float(c) * err) ** 2
    bound = max((math.sqrt(v) for v in sig2.values()), default=0.0)
    return total, bound
