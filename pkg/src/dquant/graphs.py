"""Directed acyclic graphs driving both the weight integrals and the operators.

Two families:

* one-type graphs on vertices 1..n whose edges (s, t) all satisfy s < t
  (the labeling condition; it forces acyclicity),
* two-type graphs with n "aerial" vertices 1..n and m boundary vertices
  b1..bm, every edge starting at an aerial vertex.

Graphs are value objects; edge lists are always stored in canonical order.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction


class GraphError(ValueError):
    pass


# Two-type edge targets: ("v", j) is aerial vertex j, ("b", j) is boundary
# vertex b_j.
VTarget = tuple[str, int]


def _validate_one_type(n: int, edges) -> tuple[tuple[int, int], ...]:
    if n < 1:
        raise GraphError(f"vertex count must be >= 1, got {n}")
    seen = set()
    for s, t in edges:
        if not (1 <= s <= n and 1 <= t <= n):
            raise GraphError(f"edge ({s},{t}) out of range 1..{n}")
        if s == t:
            raise GraphError(f"self-loop at {s}")
        if not s < t:
            raise GraphError(f"edge ({s},{t}) violates the ordering s < t")
        if (s, t) in seen:
            raise GraphError(f"parallel edge ({s},{t})")
        seen.add((s, t))
    return tuple(sorted(seen))


@dataclass(frozen=True)
class AdmissibleGraph:
    """One-type graph: vertices 1..n, edges (s, t) with s < t, sorted lex."""

    n: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        object.__setattr__(self, "edges", _validate_one_type(self.n, self.edges))

    @property
    def e(self) -> int:
        return len(self.edges)

    def out_degrees(self) -> list[int]:
        out = [0] * self.n
        for s, _ in self.edges:
            out[s - 1] += 1
        return out

    def in_degrees(self) -> list[int]:
        inc = [0] * self.n
        for _, t in self.edges:
            inc[t - 1] += 1
        return inc

    def is_connected(self) -> bool:
        """Weak connectivity of the underlying undirected graph."""
        if self.n == 1:
            return True
        adj = {v: set() for v in range(1, self.n + 1)}
        for s, t in self.edges:
            adj[s].add(t)
            adj[t].add(s)
        seen = {1}
        stack = [1]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == self.n

    def key(self) -> str:
        return canonical_key(self)


def _two_type_sort_key(edge: tuple[int, VTarget]):
    s, (kind, j) = edge
    return (s, 0 if kind == "v" else 1, j)


@dataclass(frozen=True)
class TwoTypeGraph:
    """Two-type graph: aerial vertices 1..n, boundary vertices b1..bm.

    Every edge starts at an aerial vertex.  Construction accepts any
    loop-free, parallel-free such graph; `is_admissible` additionally
    requires s < t on aerial-aerial edges (which rules out oriented
    cycles).  Graphs with oriented cycles are representable because their
    weight is defined (it is 0; the constraint region is degenerate).
    """

    n: int
    m: int
    edges: tuple[tuple[int, VTarget], ...]

    def __post_init__(self):
        if self.n < 0 or self.m < 0 or 2 * self.n + self.m < 2:
            raise GraphError(f"need 2n+m >= 2, got n={self.n}, m={self.m}")
        seen = set()
        for s, tgt in self.edges:
            kind, j = tgt
            if not 1 <= s <= self.n:
                raise GraphError(f"edge source {s} is not an aerial vertex")
            if kind == "v":
                if not 1 <= j <= self.n:
                    raise GraphError(f"bad aerial target {j}")
                if j == s:
                    raise GraphError(f"self-loop at {s}")
            elif kind == "b":
                if not 1 <= j <= self.m:
                    raise GraphError(f"bad boundary target b{j}")
            else:
                raise GraphError(f"bad target kind {kind!r}")
            if (s, tgt) in seen:
                raise GraphError(f"parallel edge ({s},{tgt})")
            seen.add((s, tgt))
        object.__setattr__(self, "edges", tuple(sorted(seen, key=_two_type_sort_key)))

    @property
    def e(self) -> int:
        return len(self.edges)

    def has_cycle(self) -> bool:
        adj = {v: [] for v in range(1, self.n + 1)}
        for s, (kind, j) in self.edges:
            if kind == "v":
                adj[s].append(j)
        state = {}  # 0 in-progress, 1 done

        def visit(v):
            if state.get(v) == 0:
                return True
            if state.get(v) == 1:
                return False
            state[v] = 0
            if any(visit(w) for w in adj[v]):
                return True
            state[v] = 1
            return False

        return any(visit(v) for v in range(1, self.n + 1))

    def is_admissible(self) -> bool:
        return all(
            s < j for s, (kind, j) in self.edges if kind == "v"
        )

    def out_degrees(self) -> list[int]:
        out = [0] * self.n
        for s, _ in self.edges:
            out[s - 1] += 1
        return out

    def is_connected(self) -> bool:
        total = self.n + self.m
        if total == 1:
            return True
        adj = {("v", v): set() for v in range(1, self.n + 1)}
        adj.update({("b", j): set() for j in range(1, self.m + 1)})
        for s, tgt in self.edges:
            adj[("v", s)].add(tgt)
            adj[tgt].add(("v", s))
        start = next(iter(adj))
        seen = {start}
        stack = [start]
        while stack:
            for w in adj[stack.pop()]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == total

    def key(self) -> str:
        return canonical_key(self)


@dataclass(frozen=True)
class GraphShape:
    """Isomorphism class of one-type graphs, labels forgotten.

    `labeling_count` counts vertex labelings 1..n satisfying s < t on every
    edge, i.e. linear extensions of the edge partial order.  Distinct
    labelings may coincide as labeled graphs when the shape has a
    nontrivial automorphism; `members` lists the distinct labeled graphs
    (labeling_count == len(members) * aut_count).
    """

    n: int
    rep: AdmissibleGraph
    labeling_count: int
    aut_count: int
    members: tuple[str, ...] = field(default_factory=tuple)


def canonical_key(g) -> str:
    """Injective text encoding; see `parse_key` for the inverse."""
    if isinstance(g, AdmissibleGraph):
        es = "".join(f"({s},{t})" for s, t in g.edges)
        return f"g:n={g.n};e={es}"
    if isinstance(g, TwoTypeGraph):
        parts = []
        for s, (kind, j) in g.edges:
            tgt = str(j) if kind == "v" else f"b{j}"
            parts.append(f"({s},{tgt})")
        return f"g2:n={g.n};m={g.m};e={''.join(parts)}"
    raise GraphError(f"not a graph: {g!r}")


def parse_key(key: str):
    """Inverse of `canonical_key`; raises GraphError on malformed input."""
    try:
        head, _, rest = key.partition(":")
        fields = dict(part.split("=", 1) for part in rest.split(";"))
        edge_text = fields["e"]
        edges = []
        if edge_text:
            if not (edge_text.startswith("(") and edge_text.endswith(")")):
                raise ValueError("bad edge list")
            for item in edge_text[1:-1].split(")("):
                s, t = item.split(",")
                edges.append((s, t))
        if head == "g":
            return AdmissibleGraph(
                int(fields["n"]), tuple((int(s), int(t)) for s, t in edges)
            )
        if head == "g2":
            parsed = []
            for s, t in edges:
                if t.startswith("b"):
                    parsed.append((int(s), ("b", int(t[1:]))))
                else:
                    parsed.append((int(s), ("v", int(t))))
            return TwoTypeGraph(int(fields["n"]), int(fields["m"]), tuple(parsed))
    except GraphError:
        raise
    except Exception as exc:
        raise GraphError(f"malformed graph key {key!r}: {exc}") from None
    raise GraphError(f"unknown key prefix in {key!r}")


def enumerate_graphs(n: int, e: int, connected: bool = False,
                     up_to_labeling: bool = False):
    """All one-type graphs with n vertices and e edges (or their shapes).

    Exhaustive and duplicate-free.  With `up_to_labeling`, one GraphShape
    per isomorphism class of the label-forgetting digraph.
    """
    if n < 1 or e < 0:
        raise GraphError("need n >= 1 and e >= 0")
    pairs = [(s, t) for s in range(1, n + 1) for t in range(s + 1, n + 1)]
    graphs = []
    for combo in itertools.combinations(pairs, e):
        g = AdmissibleGraph(n, combo)
        if connected and not g.is_connected():
            continue
        graphs.append(g)
    if not up_to_labeling:
        return graphs
    return _group_shapes(graphs)


def _relabel(edges, perm):
    """Apply vertex permutation (1-based mapping v -> perm[v-1])."""
    return frozenset((perm[s - 1], perm[t - 1]) for s, t in edges)


def _group_shapes(graphs) -> list[GraphShape]:
    classes: dict[frozenset, list[AdmissibleGraph]] = {}
    canon: dict[frozenset, frozenset] = {}
    for g in graphs:
        es = frozenset(g.edges)
        found = None
        for rep_edges in classes:
            if _isomorphic_edge_sets(g.n, es, rep_edges):
                found = rep_edges
                break
        if found is None:
            classes[es] = [g]
            canon[es] = es
        else:
            classes[found].append(g)
    shapes = []
    for rep_edges, members in classes.items():
        rep = min(members, key=lambda g: g.edges)
        n = rep.n
        aut = sum(
            1
            for perm in itertools.permutations(range(1, n + 1))
            if _relabel(rep.edges, perm) == frozenset(rep.edges)
        )
        lc = count_labelings(rep)
        shapes.append(
            GraphShape(
                n=n,
                rep=rep,
                labeling_count=lc,
                aut_count=aut,
                members=tuple(sorted(m.key() for m in members)),
            )
        )
    shapes.sort(key=lambda sh: sh.rep.edges)
    return shapes


def _isomorphic_edge_sets(n: int, a: frozenset, b: frozenset) -> bool:
    if len(a) != len(b):
        return False
    for perm in itertools.permutations(range(1, n + 1)):
        if _relabel(a, perm) == b:
            return True
    return False


def count_labelings(g) -> int:
    """Number of vertex labelings 1..n increasing along every edge.

    Equals the number of linear extensions of the edge partial order.
    Accepts an AdmissibleGraph, a GraphShape, or (n, edges) with edges over
    arbitrary 1..n vertex names; raises on cyclic input.
    """
    if isinstance(g, GraphShape):
        g = g.rep
    if isinstance(g, AdmissibleGraph):
        n, edges = g.n, g.edges
    else:
        n, edges = g
    preds = [set() for _ in range(n)]
    for s, t in edges:
        preds[t - 1].add(s - 1)
    # DP over downward-closed vertex sets; detects cycles by never
    # completing the full set.
    counts = {0: 1}
    for _ in range(n):
        new: dict[int, int] = {}
        for mask, ways in counts.items():
            for v in range(n):
                if mask >> v & 1:
                    continue
                if all(mask >> p & 1 for p in preds[v]):
                    key = mask | 1 << v
                    new[key] = new.get(key, 0) + ways
        counts = new
        if not counts:
            raise GraphError("graph has an oriented cycle")
    return counts[(1 << n) - 1]


def automorphism_count(g: AdmissibleGraph) -> int:
    """Label permutations preserving the edge set."""
    es = frozenset(g.edges)
    return sum(
        1
        for perm in itertools.permutations(range(1, g.n + 1))
        if _relabel(es, perm) == es
    )


def contribution_filter(g: AdmissibleGraph, arities, poly_degrees) -> bool:
    """Necessary condition for the graph operator on given inputs to be nonzero.

    arities[i] is the multivector arity at vertex i+1, poly_degrees[i] the
    maximal polynomial degree of its coefficients.  A vertex with more
    outgoing edges than its arity contracts to zero; more incoming edges
    than the coefficient degree differentiates to zero.
    """
    if len(arities) != g.n or len(poly_degrees) != g.n:
        raise GraphError(
            f"need {g.n} arities and degrees, got {len(arities)}, {len(poly_degrees)}"
        )
    out = g.out_degrees()
    inc = g.in_degrees()
    return all(
        out[v] <= arities[v] and inc[v] <= poly_degrees[v] for v in range(g.n)
    )


def enumerate_two_type(n: int, m: int, e: int, connected: bool = True):
    """Admissible two-type graphs: s < t on aerial-aerial edges, e edges.

    Used by the morphism component sums; parallel edges excluded (their
    weight vanishes identically).
    """
    if n < 0 or m < 0 or 2 * n + m < 2:
        return []
    per_source = []
    for s in range(1, n + 1):
        targets = [("v", j) for j in range(s + 1, n + 1)]
        targets += [("b", j) for j in range(1, m + 1)]
        per_source.append([(s, t) for t in targets])
    out = []
    for sizes in _compositions(e, [len(p) for p in per_source]):
        pools = [
            itertools.combinations(per_source[i], sizes[i]) for i in range(n)
        ]
        for parts in itertools.product(*pools):
            edges = tuple(itertools.chain.from_iterable(parts))
            g = TwoTypeGraph(n, m, edges)
            if connected and not g.is_connected():
                continue
            out.append(g)
    out.sort(key=lambda g: g.edges)
    return out


def _compositions(total: int, caps: list[int]):
    """Split `total` into per-vertex out-degrees bounded by caps."""
    if not caps:
        if total == 0:
            yield ()
        return
    first, rest = caps[0], caps[1:]
    for k in range(min(first, total) + 1):
        for tail in _compositions(total - k, rest):
            yield (k,) + tail


def ladder_graph(m: int, n: int) -> AdmissibleGraph:
    """The rail family: m upper vertices each feeding both rails b -> c,
    and n lower vertices each fed by both rails.

    Labels: uppers 1..m, b = m+1, c = m+2, lowers m+3..m+n+2.
    ladder(0, 0) is the single edge; ladder(1, 1) is the 4-vertex graph
    whose weight integral splits into two half-plane factors.
    """
    if m < 0 or n < 0:
        raise GraphError("ladder indices must be >= 0")
    b, c = m + 1, m + 2
    edges = [(b, c)]
    for u in range(1, m + 1):
        edges += [(u, b), (u, c)]
    for k in range(1, n + 1):
        low = m + 2 + k
        edges += [(b, low), (c, low)]
    return AdmissibleGraph(m + n + 2, tuple(edges))
