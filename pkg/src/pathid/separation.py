"""d-/m-separation tests and covariate criteria for cross-world independence.

Separation is decided by reachability over (node, arrived-with-arrowhead)
states rather than path enumeration, so a verdict costs O(V + E).
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

from .graphs import Admg, CausalGraph, GraphError, mutilate

# Mixed edges as (u, v, head_at_u, head_at_v); a directed edge u->v has its
# single arrowhead at v, a bidirected edge has arrowheads at both ends.
MixedEdge = tuple[str, str, bool, bool]


@dataclass(frozen=True)
class SeparationQuery:
    x: frozenset[str]
    y: frozenset[str]
    z: frozenset[str] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "x", frozenset(self.x))
        object.__setattr__(self, "y", frozenset(self.y))
        object.__setattr__(self, "z", frozenset(self.z))
        if (self.x & self.y) or (self.x & self.z) or (self.y & self.z):
            raise GraphError("separation query sets must be pairwise disjoint")


def _mixed_edges(directed, bidirected) -> list[MixedEdge]:
    edges: list[MixedEdge] = []
    for tail, head in directed:
        edges.append((tail, head, False, True))
    for a, b in bidirected:
        edges.append((a, b, True, True))
    return edges


def _separated(
    nodes: frozenset[str],
    edges: list[MixedEdge],
    x: frozenset[str],
    y: frozenset[str],
    z: frozenset[str],
) -> bool:
    """Reachability check: is every x--y path blocked given z?"""
    adjacency: dict[str, list[tuple[str, bool, bool]]] = {v: [] for v in nodes}
    for u, v, head_u, head_v in edges:
        adjacency[u].append((v, head_u, head_v))
        adjacency[v].append((u, head_v, head_u))

    # ancestors of z (inclusive), for the open-collider rule
    an_z = set(z)
    stack = list(z)
    parents: dict[str, list[str]] = {v: [] for v in nodes}
    for u, v, head_u, head_v in edges:
        if head_v and not head_u:
            parents[v].append(u)
    while stack:
        for p in parents[stack.pop()]:
            if p not in an_z:
                an_z.add(p)
                stack.append(p)

    # states: (vertex, arrived via an edge with its head at vertex)
    visited: set[tuple[str, bool]] = set()
    frontier: list[tuple[str, bool]] = []
    for s in x:
        for w, _head_s, head_w in adjacency[s]:
            state = (w, head_w)
            if state not in visited:
                visited.add(state)
                frontier.append(state)
    while frontier:
        v, arrived_head = frontier.pop()
        if v in y:
            return False
        for w, head_v, head_w in adjacency[v]:
            collider = arrived_head and head_v
            if v in z:
                passable = collider
            else:
                passable = (not collider) or (v in an_z)
            if passable:
                state = (w, head_w)
                if state not in visited:
                    visited.add(state)
                    frontier.append(state)
    return True


def d_separated(g: CausalGraph, q: SeparationQuery) -> bool:
    """d-separation in a hidden-variable DAG.

    Hidden nodes take part as ordinary vertices but cannot be conditioned
    on; a hidden node in z is an error.
    """
    hidden_z = q.z & g.hidden
    if hidden_z:
        raise GraphError(f"cannot condition on hidden node(s) {sorted(hidden_z)}")
    for v in q.x | q.y | q.z:
        if v not in g.nodes:
            raise GraphError(f"unknown node {v}")
    return _separated(
        g.nodes, _mixed_edges(g.directed_edges, ()), q.x, q.y, q.z
    )


def m_separated(g: Admg, q: SeparationQuery) -> bool:
    """m-separation in an ADMG (bidirected edges are head-to-head)."""
    for v in q.x | q.y | q.z:
        if v not in g.nodes:
            raise GraphError(f"unknown node {v}")
    return _separated(
        g.nodes, _mixed_edges(g.directed_edges, g.bidirected_edges), q.x, q.y, q.z
    )


# ---------------------------------------------------------------------------
# Covariate criteria
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdjustmentReport:
    candidate: frozenset[str]
    passes_iia: bool
    passes_iib: bool
    passes_adjustment_criterion: bool


def _check_roles(g: CausalGraph, a: str, m: str, y: str, c) -> frozenset[str]:
    c = frozenset(c)
    roles = {a, m, y}
    if len(roles) != 3:
        raise GraphError("treatment, mediator and outcome must be distinct")
    if not roles <= g.observed:
        raise GraphError("treatment, mediator and outcome must be observed")
    if not c <= g.observed:
        raise GraphError("candidate covariates must be observed")
    if c & roles:
        raise GraphError("candidate covariates overlap the role nodes")
    return c


def cross_world_cov_check(
    g: CausalGraph, a: str, m: str, y: str, c
) -> AdjustmentReport:
    """Score a covariate set against the two cross-world criteria.

    The first asks c to separate outcome from mediator after all edges out
    of treatment and mediator are cut; the second forbids covariates that
    are descendants of treatment.
    """
    c = _check_roles(g, a, m, y, c)
    cut = mutilate(g, cut_out=frozenset({a, m}))
    iia = d_separated(cut, SeparationQuery(frozenset({y}), frozenset({m}), c))
    treated = g.descendants(a) - {a}
    iib = not (c & treated)
    return AdjustmentReport(c, iia, iib, False)


def proper_causal_nodes(
    g: CausalGraph, x: frozenset[str], y: str
) -> frozenset[str]:
    """Non-treatment nodes lying on a proper causal path from x to y."""
    # forward-reachable from x without re-entering x
    fwd: set[str] = set()
    stack = [c for v in x for c in g.children(v) if c not in x]
    while stack:
        v = stack.pop()
        if v in fwd:
            continue
        fwd.add(v)
        stack.extend(c for c in g.children(v) if c not in x)
    # of those, keep nodes with a directed path to y avoiding x
    trimmed_edges = frozenset(
        (t, h) for t, h in g.directed_edges if t not in x and h not in x
    )
    back = {y}
    stack = [y]
    while stack:
        v = stack.pop()
        for t, h in trimmed_edges:
            if h == v and t not in back:
                back.add(t)
                stack.append(t)
    return frozenset(fwd & back)


def valid_adjustment_set(
    g: CausalGraph, x: frozenset[str], y: str, z: frozenset[str]
) -> bool:
    """Generalized adjustment criterion for p(y | do(x)) in the hidden DAG.

    z must avoid descendants of nodes on proper causal paths and must
    block x from y in the proper back-door graph (the graph with the first
    edge of every proper causal path removed).
    """
    x = frozenset(x)
    z = frozenset(z)
    pcp = proper_causal_nodes(g, x, y)
    forbidden: set[str] = set()
    for w in pcp:
        forbidden |= g.descendants(w)
    if z & forbidden:
        return False
    first_edges = frozenset(
        (t, h) for t, h in g.directed_edges if t in x and h in pcp
    )
    pbd = CausalGraph(g.observed, g.hidden, g.directed_edges - first_edges)
    return d_separated(pbd, SeparationQuery(x, frozenset({y}), z))


def mediation_adjustment_report(
    g: CausalGraph, a: str, m: str, y: str, c
) -> AdjustmentReport:
    """Full adjustment-criterion verdict for natural-effect identification.

    A set passes when it satisfies both cross-world criteria and is a
    valid adjustment set for the treatment's effect on the mediator and
    for the joint (treatment, mediator) effect on the outcome.
    """
    base = cross_world_cov_check(g, a, m, y, c)
    full = (
        base.passes_iia
        and base.passes_iib
        and valid_adjustment_set(g, frozenset({a}), m, base.candidate)
        and valid_adjustment_set(g, frozenset({a, m}), y, base.candidate)
    )
    return AdjustmentReport(base.candidate, base.passes_iia, base.passes_iib, full)


def find_mediation_adjustment_sets(
    g: CausalGraph, a: str, m: str, y: str, max_size: int = 6
) -> list[AdjustmentReport]:
    """Score every candidate covariate subset up to max_size.

    Candidates are enumerated by size then lexicographically, so output
    order is stable.
    """
    _check_roles(g, a, m, y, frozenset())
    pool = sorted(g.observed - {a, m, y})
    reports = []
    for size in range(0, min(max_size, len(pool)) + 1):
        for combo in combinations(pool, size):
            reports.append(mediation_adjustment_report(g, a, m, y, frozenset(combo)))
    return reports
