"""Kernel identification by iterated fixing.

The observed joint is carried as an ordered list of per-variable
conditional factors (a topological prefix factorization).  Fixing a
vertex divides the kernel by that vertex's conditional given all its
non-descendants; in the ordered-factor representation this is a reorder
followed by dropping the vertex's factor.  Reordering two adjacent
factors is exact algebra:

    q(p, q | W) = f_p(p | W) f_q(q | W, p)
               = [sum_p f_p f_q](q | W) * [f_p f_q / sum_p f_p f_q](p | W, q)

The quotient lands on the factor that moves right; when that vertex is
itself about to be fixed the quotient is simply dropped, which is why the
textbook examples come out quotient-free.
"""

from __future__ import annotations

from dataclasses import dataclass

from .expr import (
    Cond,
    NotIdentifiable,
    Product,
    Ratio,
    Sum,
    cond,
    free,
    free_nodes,
    fresh_index,
    product,
    substitute_free,
    summed,
)
from .graphs import Admg, GraphError, districts, induced_subgraph, ystar


@dataclass
class _Factor:
    target: str
    expr: object

    def references(self, node: str) -> bool:
        return node in free_nodes(self.expr)


def _initial_factors(g: Admg) -> list[_Factor]:
    """Saturated prefix factorization of the observed joint."""
    order = g.topological_order()
    factors = []
    for i, v in enumerate(order):
        factors.append(_Factor(v, cond([free(v)], [free(u) for u in order[:i]])))
    return factors


def _merge_sum(p: str, left, right):
    """sum_p left*right, collapsed when the two factors chain over p."""
    if (
        isinstance(left, Cond)
        and isinstance(right, Cond)
        and [r.node for r in left.targets] == [p]
    ):
        left_given = frozenset(r.node for r in left.given)
        right_given = frozenset(r.node for r in right.given)
        if right_given == left_given | {p}:
            return Cond(right.targets, left.given)
    idx = fresh_index()
    body = substitute_free(product([left, right]), {p: summed(p, idx)})
    return Sum(((p, idx),), body)


def _ratio(num_factors: list, den) -> object:
    """num/den with structural cancellation of identical factors."""
    remaining = list(num_factors)
    den_parts = list(den.factors) if isinstance(den, Product) else [den]
    kept_den = []
    for d in den_parts:
        if d in remaining:
            remaining.remove(d)
        else:
            kept_den.append(d)
    if not kept_den:
        return product(remaining)
    return Ratio(product(remaining), product(kept_den))


class Fragment:
    """A conditional ADMG fragment plus its symbolic kernel factors."""

    def __init__(self, g: Admg):
        self.random: set[str] = set(g.nodes)
        self.context: set[str] = set()
        self.directed: set = set(g.directed_edges)
        self.bidirected: set = set(g.bidirected_edges)
        self.factors: list[_Factor] = _initial_factors(g)

    def order(self) -> list[str]:
        return [f.target for f in self.factors]

    def _children(self, v: str) -> set[str]:
        return {h for t, h in self.directed if t == v and h in self.random}

    def descendants(self, v: str) -> set[str]:
        seen = {v}
        stack = [v]
        while stack:
            for c in self._children(stack.pop()):
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return seen

    def district(self, v: str) -> set[str]:
        seen = {v}
        stack = [v]
        while stack:
            u = stack.pop()
            for a, b in self.bidirected:
                for x, y in ((a, b), (b, a)):
                    if x == u and y in self.random and y not in seen:
                        seen.add(y)
                        stack.append(y)
        return seen

    def fixable(self, v: str) -> bool:
        return self.district(v) & self.descendants(v) == {v}

    def _swap(self, i: int) -> None:
        """Exchange factors at i, i+1 keeping the kernel value intact."""
        left, right = self.factors[i], self.factors[i + 1]
        if not right.references(left.target):
            self.factors[i], self.factors[i + 1] = right, left
            return
        merged = _merge_sum(left.target, left.expr, right.expr)
        quotient = _ratio([left.expr, right.expr], merged)
        self.factors[i] = _Factor(right.target, merged)
        self.factors[i + 1] = _Factor(left.target, quotient)

    def _reorder_for(self, v: str) -> None:
        """Move v after all its non-descendants (descendants keep the tail)."""
        de = self.descendants(v)
        current = self.order()
        target = (
            [u for u in current if u not in de]
            + [v]
            + [u for u in current if u in de and u != v]
        )
        pos = {u: i for i, u in enumerate(target)}
        # bubble adjacent inversions; each swap preserves the kernel value
        changed = True
        while changed:
            changed = False
            for i in range(len(self.factors) - 1):
                if pos[self.factors[i].target] > pos[self.factors[i + 1].target]:
                    self._swap(i)
                    changed = True

    def fix(self, v: str) -> None:
        if v not in self.random:
            raise GraphError(f"{v} is not a random vertex of the fragment")
        if not self.fixable(v):
            raise GraphError(f"{v} is not fixable in the current fragment")
        self._reorder_for(v)
        self.factors = [f for f in self.factors if f.target != v]
        self.random.discard(v)
        self.context.add(v)
        self.directed = {(t, h) for t, h in self.directed if h != v}
        self.bidirected = {e for e in self.bidirected if v not in e}

    def kernel_expr(self):
        return product([f.expr for f in self.factors])


def fix_to(g: Admg, keep: frozenset[str]):
    """Fix everything outside keep, reverse-topologically.

    Returns the identified kernel expression, or NotIdentifiable naming
    the fragment that got stuck.
    """
    frag = Fragment(g)
    topo = g.topological_order()
    while frag.random != set(keep):
        candidates = [
            v for v in frag.random - set(keep) if frag.fixable(v)
        ]
        if not candidates:
            return NotIdentifiable(
                "no fixable vertex outside the target district",
                frozenset(frag.random),
            )
        v = max(candidates, key=topo.index)
        frag.fix(v)
    return frag.kernel_expr()


def kernel_of_district(g: Admg, s: frozenset[str]):
    """Q[S] for a district of the full graph, as observed conditionals."""
    s = frozenset(s)
    if s not in districts(g):
        raise GraphError(f"{sorted(s)} is not a district of the graph")
    expr = fix_to(g, s)
    assert not isinstance(expr, NotIdentifiable)
    return expr


def identify_kernel(g: Admg, d: frozenset[str], treatment: str, outcome: str):
    """Kernel of a district of the outcome-ancestor subgraph.

    Fixes g.nodes \\ d one vertex at a time; failure comes back as a
    NotIdentifiable value naming the stuck fragment.
    """
    d = frozenset(d)
    stars = ystar(g, treatment, outcome)
    if d not in districts(induced_subgraph(g, stars)):
        raise GraphError(
            f"{sorted(d)} is not a district of the outcome-ancestor subgraph"
        )
    return fix_to(g, d)
