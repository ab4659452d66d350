"""Shared test graphs, expression builders, and independent oracles.

The d-separation oracle here enumerates paths outright, deliberately
avoiding the reachability algorithm under test.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations, product as iterproduct
from random import Random

from pathid.expr import (
    FIXED_A,
    FIXED_A_PRIME,
    OUTCOME,
    SUMMED,
    Cond,
    Product,
    Sum,
    VarRef,
    canonicalize,
    product,
)
from pathid.graphs import Admg, CausalGraph, parse_graph

# ---------------------------------------------------------------------------
# The running example graphs (one DSL string per structure)
# ---------------------------------------------------------------------------

TWO_MEDIATORS = """\
obs A L M Y
A -> L
A -> M
A -> Y
L -> M
L -> Y
M -> Y
"""

CONFOUNDED_MEDIATION = """\
obs A M Y
hid U
A -> M
A -> Y
M -> Y
U -> M
U -> Y
"""

OUTCOME_COVARIATE = """\
obs A C M Y
hid U
A -> M
A -> Y
M -> Y
C -> Y
U -> M
U -> C
"""

MEDIATOR_COVARIATE = """\
obs A C M Y
hid U
A -> M
A -> Y
M -> Y
C -> M
U -> Y
U -> C
"""

INDUCED_CONFOUNDING = """\
obs A L M Y
A -> L
A -> M
A -> Y
L -> M
L -> Y
M -> Y
"""

INDUCED_CONFOUNDING_MY = INDUCED_CONFOUNDING + "hid U\nU -> M\nU -> Y\n"
INDUCED_CONFOUNDING_LM = INDUCED_CONFOUNDING + "hid U\nU -> M\nU -> L\n"
INDUCED_CONFOUNDING_LY = INDUCED_CONFOUNDING + "hid U\nU -> Y\nU -> L\n"

BASELINE_COVARIATES = """\
obs A C1 C2 C3 M Y
hid U1 U2 U3
A -> M
A -> Y
M -> Y
C1 -> M
C1 -> Y
C2 -> A
C2 -> M
C3 -> A
C3 -> Y
U1 -> C2
U1 -> C3
U2 -> C1
U2 -> C3
U3 -> C1
U3 -> C2
"""

COLLIDER_COVARIATES = """\
obs A C1 C2 C3 M Y
hid U1 U2 U3
A -> M
A -> Y
M -> Y
C1 -> M
C1 -> C3
C2 -> A
C3 -> Y
U1 -> C2
U1 -> C3
U2 -> C2
U2 -> M
U3 -> A
U3 -> C3
"""

INSTRUMENT_MEDIATOR = """\
obs A L M Y
hid U
A -> L
A -> Y
L -> M
M -> Y
U -> M
U -> Y
"""

INSTRUMENT_OUTCOME = """\
obs A M Y Z
hid U
A -> M
A -> Z
M -> Y
Z -> Y
U -> M
U -> Y
"""

INSTRUMENT_BOTH = """\
obs A L M Y Z
hid U
A -> L
A -> Z
L -> M
M -> Y
Z -> Y
U -> M
U -> Y
"""

BOW_ARC = """\
obs A Y
hid U
A -> Y
U -> A
U -> Y
"""

FRONT_DOOR = """\
obs A M Y
hid U
A -> M
M -> Y
U -> A
U -> Y
"""

NAPKIN = """\
obs A W1 W2 Y
hid U1 U2
W1 -> W2
W2 -> A
A -> Y
U1 -> W1
U1 -> A
U2 -> W1
U2 -> Y
"""

VERMA = """\
obs V1 V2 V3 V4
hid U1 U2
V1 -> V2
V2 -> V3
V3 -> V4
U1 -> V1
U1 -> V3
U2 -> V2
U2 -> V4
"""

ALL_NAMED_GRAPHS = {
    "two_mediators": TWO_MEDIATORS,
    "confounded_mediation": CONFOUNDED_MEDIATION,
    "outcome_covariate": OUTCOME_COVARIATE,
    "mediator_covariate": MEDIATOR_COVARIATE,
    "induced_confounding": INDUCED_CONFOUNDING,
    "induced_confounding_my": INDUCED_CONFOUNDING_MY,
    "induced_confounding_lm": INDUCED_CONFOUNDING_LM,
    "induced_confounding_ly": INDUCED_CONFOUNDING_LY,
    "baseline_covariates": BASELINE_COVARIATES,
    "collider_covariates": COLLIDER_COVARIATES,
    "instrument_mediator": INSTRUMENT_MEDIATOR,
    "instrument_outcome": INSTRUMENT_OUTCOME,
    "instrument_both": INSTRUMENT_BOTH,
    "bow_arc": BOW_ARC,
    "front_door": FRONT_DOOR,
    "napkin": NAPKIN,
    "verma": VERMA,
}


def graph(name: str) -> CausalGraph:
    return parse_graph(ALL_NAMED_GRAPHS[name])


# ---------------------------------------------------------------------------
# Expected-expression builder
# ---------------------------------------------------------------------------

def build_expr(bound: str, factors, treatment="A", outcome="Y"):
    """Construct an expression from compact factor descriptions.

    bound: space-separated node names under the sum (may be empty).
    factors: (targets, given) pairs using lowercase names; the treatment
    renders as a / a' and the outcome maps to its fixed role.
    """
    bound_nodes = bound.split()
    indices = {n: i for i, n in enumerate(bound_nodes)}

    def ref(token: str) -> VarRef:
        primed = token.endswith("'")
        name = token[:-1] if primed else token
        node = name.upper()
        if node == treatment.upper():
            return VarRef(treatment, FIXED_A_PRIME if primed else FIXED_A)
        assert not primed, token
        if node == outcome.upper():
            return VarRef(outcome, OUTCOME)
        assert name in indices, f"{token} is not bound"
        return VarRef(node, SUMMED, indices[name])

    built = []
    for targets, given in factors:
        built.append(
            Cond(
                tuple(ref(t) for t in targets.split()),
                tuple(ref(g) for g in given.split()),
            )
        )
    body = product(built)
    if not bound_nodes:
        return body
    return Sum(tuple((n.upper(), indices[n]) for n in bound_nodes), body)


def same_expr(left, right) -> bool:
    return canonicalize(left) == canonicalize(right)


# ---------------------------------------------------------------------------
# Independent separation oracle: exhaustive path enumeration
# ---------------------------------------------------------------------------

def _mixed_adjacency(directed, bidirected):
    edges = []
    for t, h in directed:
        edges.append((t, h, False, True))
        edges.append((h, t, True, False))
    for a, b in bidirected:
        edges.append((a, b, True, True))
        edges.append((b, a, True, True))
    return edges


def dsep_by_paths(nodes, directed, bidirected, x, y, z) -> bool:
    """Blocking check over every simple mixed path; exponential on purpose."""
    parents = {v: set() for v in nodes}
    for t, h in directed:
        parents[h].add(t)
    an_z = set(z)
    frontier = list(z)
    while frontier:
        for p in parents[frontier.pop()]:
            if p not in an_z:
                an_z.add(p)
                frontier.append(p)

    out_edges: dict = {}
    for (u, w, head_u, head_w) in _mixed_adjacency(directed, bidirected):
        out_edges.setdefault(u, []).append((w, head_u, head_w))

    def blocked(marks) -> bool:
        # marks: (node, head_in, head_out) for every interior node
        for node, head_in, head_out in marks:
            collider = head_in and head_out
            if collider and node not in an_z:
                return True
            if not collider and node in z:
                return True
        return False

    def walk(v, arrived_head, visited, marks) -> bool:
        if v in y:
            return not blocked(marks)
        for (w, head_v, head_w) in out_edges.get(v, ()):
            if w in visited:
                continue
            if walk(w, head_w, visited | {w}, marks + [(v, arrived_head, head_v)]):
                return True
        return False

    for s in x:
        for (w, _head_s, head_w) in out_edges.get(s, ()):
            if w in y:
                return False  # a single edge is never blocked
            if w not in x and walk(w, head_w, {s, w}, []):
                return False
    return True


def dsep_oracle_dag(g: CausalGraph, x, y, z) -> bool:
    return dsep_by_paths(
        g.nodes, g.directed_edges, (), frozenset(x), frozenset(y), frozenset(z)
    )


def msep_oracle(g: Admg, x, y, z) -> bool:
    return dsep_by_paths(
        g.nodes,
        g.directed_edges,
        g.bidirected_edges,
        frozenset(x),
        frozenset(y),
        frozenset(z),
    )


# ---------------------------------------------------------------------------
# Random graphs for the property suites
# ---------------------------------------------------------------------------

def random_hidden_dag(rng: Random, max_mid: int = 4, max_hidden: int = 3) -> CausalGraph:
    mids = ["B", "C", "D", "E"][: rng.randint(1, max_mid)]
    order = ["A"] + mids + ["Y"]
    edges = set()
    for i, u in enumerate(order):
        for v in order[i + 1:]:
            if rng.random() < 0.5:
                edges.add((u, v))
    probe = CausalGraph(frozenset(order), frozenset(), frozenset(edges))
    if "Y" not in probe.descendants("A"):
        edges.add(("A", "Y"))
    hidden = set()
    pairs = list(combinations(order, 2))
    rng.shuffle(pairs)
    for idx, (u, v) in enumerate(pairs[: rng.randint(0, max_hidden)]):
        h = f"U{idx + 1}"
        hidden.add(h)
        edges.add((h, u))
        edges.add((h, v))
    return CausalGraph(frozenset(order), frozenset(hidden), frozenset(edges))


def exact_ci_holds(joint, x, y, z) -> bool:
    """Conditional independence in an exact joint table, by definition."""
    domains = joint.domains
    zs = sorted(z)
    for z_vals in iterproduct(*(domains[v] for v in zs)):
        given = dict(zip(zs, z_vals))
        pz = joint.prob(given)
        if pz == 0:
            continue
        for x_vals in iterproduct(*(domains[v] for v in sorted(x))):
            for y_vals in iterproduct(*(domains[v] for v in sorted(y))):
                xa = dict(zip(sorted(x), x_vals))
                ya = dict(zip(sorted(y), y_vals))
                pxyz = joint.prob({**given, **xa, **ya})
                pxz = joint.prob({**given, **xa})
                pyz = joint.prob({**given, **ya})
                if pxyz * pz != pxz * pyz:
                    return False
    return True
