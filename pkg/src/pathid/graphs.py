"""Graph representations: hidden-variable causal DAGs and ADMGs.

All graph values are immutable; every operation returns a new graph.  Nodes
are plain strings matching ``[A-Za-z_][A-Za-z0-9_]*``.  Ordering is
lexicographic everywhere so that rendered output and districts come out
deterministic.
"""

from __future__ import annotations

import heapq
import re
from dataclasses import dataclass, field
from itertools import combinations

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

Edge = tuple[str, str]


class GraphError(ValueError):
    """Invalid graph structure (cycle, bad node name, bad edge)."""


class ParseError(ValueError):
    """Syntax or semantic error in graph DSL input, with line/column."""

    def __init__(self, message: str, line: int, col: int = 1):
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


def _check_name(name: str) -> None:
    if not NAME_RE.match(name):
        raise GraphError(f"invalid node name {name!r}")


def _check_acyclic(nodes: frozenset[str], edges: frozenset[Edge]) -> None:
    order = _topo_order(nodes, edges)
    if order is None:
        raise GraphError("directed part contains a cycle")


def _topo_order(nodes: frozenset[str], edges: frozenset[Edge]) -> list[str] | None:
    """Kahn's algorithm with a lexicographic heap; None if cyclic."""
    indeg = {v: 0 for v in nodes}
    children: dict[str, list[str]] = {v: [] for v in nodes}
    for tail, head in edges:
        indeg[head] += 1
        children[tail].append(head)
    ready = [v for v in nodes if indeg[v] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        v = heapq.heappop(ready)
        order.append(v)
        for c in sorted(children[v]):
            indeg[c] -= 1
            if indeg[c] == 0:
                heapq.heappush(ready, c)
    if len(order) != len(nodes):
        return None
    return order


@dataclass(frozen=True)
class CausalGraph:
    """DAG over observed and hidden nodes.

    Hidden nodes must be exogenous roots (no parents) with at least two
    observed children; use :func:`normalize_hidden` to bring arbitrary
    hidden structure into this form first.
    """

    observed: frozenset[str]
    hidden: frozenset[str] = field(default_factory=frozenset)
    directed_edges: frozenset[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "observed", frozenset(self.observed))
        object.__setattr__(self, "hidden", frozenset(self.hidden))
        object.__setattr__(self, "directed_edges", frozenset(self.directed_edges))
        for name in self.observed | self.hidden:
            _check_name(name)
        if self.observed & self.hidden:
            raise GraphError("observed and hidden node sets overlap")
        nodes = self.observed | self.hidden
        for tail, head in self.directed_edges:
            if tail not in nodes or head not in nodes:
                raise GraphError(f"edge {tail}->{head} references undeclared node")
            if tail == head:
                raise GraphError(f"self-loop on {tail}")
        _check_acyclic(nodes, self.directed_edges)
        for h in self.hidden:
            if self.parents(h):
                raise GraphError(
                    f"hidden node {h} has parents; normalize_hidden() first"
                )
            if len([c for c in self.children(h) if c in self.observed]) < 2:
                raise GraphError(
                    f"hidden node {h} must have at least two observed children"
                )

    @property
    def nodes(self) -> frozenset[str]:
        return self.observed | self.hidden

    def parents(self, v: str) -> frozenset[str]:
        return frozenset(t for t, h in self.directed_edges if h == v)

    def children(self, v: str) -> frozenset[str]:
        return frozenset(h for t, h in self.directed_edges if t == v)

    def descendants(self, v: str) -> frozenset[str]:
        """Descendants of v, inclusive."""
        seen = {v}
        stack = [v]
        while stack:
            for c in self.children(stack.pop()):
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return frozenset(seen)

    def ancestors_of(self, targets: frozenset[str]) -> frozenset[str]:
        """Ancestors of the target set, inclusive."""
        seen = set(targets)
        stack = list(targets)
        while stack:
            for p in self.parents(stack.pop()):
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return frozenset(seen)

    def topological_order(self) -> list[str]:
        order = _topo_order(self.nodes, self.directed_edges)
        assert order is not None
        return order


@dataclass(frozen=True)
class Admg:
    """Acyclic directed mixed graph over observed nodes.

    Bidirected edges are stored as lexicographically sorted pairs.
    """

    nodes: frozenset[str]
    directed_edges: frozenset[Edge] = field(default_factory=frozenset)
    bidirected_edges: frozenset[Edge] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "nodes", frozenset(self.nodes))
        object.__setattr__(self, "directed_edges", frozenset(self.directed_edges))
        object.__setattr__(
            self,
            "bidirected_edges",
            frozenset(tuple(sorted(e)) for e in self.bidirected_edges),
        )
        for name in self.nodes:
            _check_name(name)
        for tail, head in self.directed_edges:
            if tail not in self.nodes or head not in self.nodes:
                raise GraphError(f"edge {tail}->{head} references undeclared node")
            if tail == head:
                raise GraphError(f"self-loop on {tail}")
        for a, b in self.bidirected_edges:
            if a not in self.nodes or b not in self.nodes:
                raise GraphError(f"edge {a}<->{b} references undeclared node")
            if a == b:
                raise GraphError(f"bidirected self-loop on {a}")
        _check_acyclic(self.nodes, self.directed_edges)

    def parents(self, v: str) -> frozenset[str]:
        return frozenset(t for t, h in self.directed_edges if h == v)

    def children(self, v: str) -> frozenset[str]:
        return frozenset(h for t, h in self.directed_edges if t == v)

    def siblings(self, v: str) -> frozenset[str]:
        """Nodes joined to v by a bidirected edge."""
        out = set()
        for a, b in self.bidirected_edges:
            if a == v:
                out.add(b)
            elif b == v:
                out.add(a)
        return frozenset(out)

    def district_parents(self, members: frozenset[str]) -> frozenset[str]:
        """Observed parents of a node set, outside the set itself."""
        out: set[str] = set()
        for v in members:
            out |= self.parents(v)
        return frozenset(out - members)

    def descendants(self, v: str) -> frozenset[str]:
        seen = {v}
        stack = [v]
        while stack:
            for c in self.children(stack.pop()):
                if c not in seen:
                    seen.add(c)
                    stack.append(c)
        return frozenset(seen)

    def ancestors_of(self, targets: frozenset[str]) -> frozenset[str]:
        seen = set(targets)
        stack = list(targets)
        while stack:
            for p in self.parents(stack.pop()):
                if p not in seen:
                    seen.add(p)
                    stack.append(p)
        return frozenset(seen)

    def topological_order(self) -> list[str]:
        order = _topo_order(self.nodes, self.directed_edges)
        assert order is not None
        return order


District = frozenset  # a district is a plain frozenset of node names


# ---------------------------------------------------------------------------
# DSL parsing and rendering
# ---------------------------------------------------------------------------

def _parse_statements(text: str):
    """Yield (line_number, tokens) for every non-empty DSL statement."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        yield lineno, line.split()


def _parse_common(text: str):
    observed: dict[str, int] = {}
    hidden: dict[str, int] = {}
    directed: list[tuple[Edge, int]] = []
    bidirected: list[tuple[Edge, int]] = []
    for lineno, tokens in _parse_statements(text):
        if tokens[0] in ("obs", "hid"):
            names = tokens[1:]
            if not names:
                raise ParseError(f"'{tokens[0]}' requires at least one name", lineno)
            bucket = observed if tokens[0] == "obs" else hidden
            for name in names:
                if not NAME_RE.match(name):
                    raise ParseError(f"invalid node name {name!r}", lineno)
                if name in observed or name in hidden:
                    raise ParseError(f"duplicate declaration of {name}", lineno)
                bucket[name] = lineno
        elif len(tokens) == 3 and tokens[1] == "->":
            directed.append(((tokens[0], tokens[2]), lineno))
        elif len(tokens) == 3 and tokens[1] == "<->":
            bidirected.append(((tokens[0], tokens[2]), lineno))
        else:
            raise ParseError(f"cannot parse statement {' '.join(tokens)!r}", lineno)
    declared = set(observed) | set(hidden)
    seen_directed: set[Edge] = set()
    for (tail, head), lineno in directed:
        for v in (tail, head):
            if v not in declared:
                raise ParseError(f"undeclared node {v}", lineno)
        if tail == head:
            raise ParseError(f"self-loop on {tail}", lineno)
        if (tail, head) in seen_directed:
            raise ParseError(f"duplicate edge {tail} -> {head}", lineno)
        seen_directed.add((tail, head))
    seen_bidirected: set[Edge] = set()
    for (a, b), lineno in bidirected:
        for v in (a, b):
            if v not in declared:
                raise ParseError(f"undeclared node {v}", lineno)
        if a == b:
            raise ParseError(f"bidirected self-loop on {a}", lineno)
        if tuple(sorted((a, b))) in seen_bidirected:
            raise ParseError(f"duplicate edge {a} <-> {b}", lineno)
        seen_bidirected.add(tuple(sorted((a, b))))
        if hidden:
            raise ParseError("'<->' is not allowed together with hidden nodes", lineno)
    return observed, hidden, seen_directed, seen_bidirected


def parse_graph(text: str) -> CausalGraph:
    """Parse the DSL into a hidden-variable causal DAG.

    Bidirected statements are rejected here; use :func:`parse_admg` for
    ADMG input.  Hidden structure is normalized to exogenous-root form.
    """
    observed, hidden, directed, bidirected = _parse_common(text)
    if bidirected:
        raise ParseError("'<->' edges require parse_admg", 1)
    try:
        return normalize_hidden(
            frozenset(observed), frozenset(hidden), frozenset(directed)
        )
    except GraphError as exc:
        raise ParseError(str(exc), 1) from exc


def parse_admg(text: str) -> Admg:
    """Parse the DSL into an ADMG; 'hid' declarations are rejected."""
    observed, hidden, directed, bidirected = _parse_common(text)
    if hidden:
        raise ParseError("ADMG input cannot declare hidden nodes", 1)
    try:
        return Admg(frozenset(observed), frozenset(directed), frozenset(bidirected))
    except GraphError as exc:
        raise ParseError(str(exc), 1) from exc


def render_graph(g: CausalGraph) -> str:
    lines = ["obs " + " ".join(sorted(g.observed))]
    if g.hidden:
        lines.append("hid " + " ".join(sorted(g.hidden)))
    for tail, head in sorted(g.directed_edges):
        lines.append(f"{tail} -> {head}")
    return "\n".join(lines) + "\n"


def render_admg(g: Admg) -> str:
    lines = ["obs " + " ".join(sorted(g.nodes))]
    for tail, head in sorted(g.directed_edges):
        lines.append(f"{tail} -> {head}")
    for a, b in sorted(g.bidirected_edges):
        lines.append(f"{a} <-> {b}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Hidden-structure normalization
# ---------------------------------------------------------------------------

def normalize_hidden(
    observed: frozenset[str],
    hidden: frozenset[str],
    edges: frozenset[Edge],
) -> CausalGraph:
    """Rewrite arbitrary hidden structure into canonical exogenous-root form.

    Directed reachability through hidden-only intermediates is projected
    onto the observed nodes, every hidden node is cut loose from its
    parents, and hidden nodes left with fewer than two observed children
    are dropped.  The observed-margin separation statements are unchanged.
    """
    for name in observed | hidden:
        _check_name(name)
    if observed & hidden:
        raise GraphError("observed and hidden node sets overlap")
    nodes = observed | hidden
    for tail, head in edges:
        if tail not in nodes or head not in nodes:
            raise GraphError(f"edge {tail}->{head} references undeclared node")
        if tail == head:
            raise GraphError(f"self-loop on {tail}")
    _check_acyclic(nodes, edges)

    children: dict[str, set[str]] = {v: set() for v in nodes}
    for tail, head in edges:
        children[tail].add(head)

    def observed_reach(start: str) -> set[str]:
        # observed nodes reachable via hidden-only intermediate chains
        out: set[str] = set()
        stack = list(children[start])
        visited: set[str] = set()
        while stack:
            v = stack.pop()
            if v in visited:
                continue
            visited.add(v)
            if v in observed:
                out.add(v)
            else:
                stack.extend(children[v])
        return out

    new_edges: set[Edge] = set()
    for tail, head in edges:
        if tail in observed:
            if head in observed:
                new_edges.add((tail, head))
            else:
                new_edges.update((tail, w) for w in observed_reach(head))
    new_hidden: set[str] = set()
    for h in sorted(hidden):
        eff = observed_reach(h)
        if len(eff) >= 2:
            new_hidden.add(h)
            new_edges.update((h, w) for w in eff)
    return CausalGraph(observed, frozenset(new_hidden), frozenset(new_edges))


# ---------------------------------------------------------------------------
# Projection, districts, surgery
# ---------------------------------------------------------------------------

def latent_project(g: CausalGraph) -> Admg:
    """Project hidden nodes away, leaving an ADMG over the observed nodes.

    A directed edge X->Y survives iff there is a directed path whose
    intermediates are all hidden; a bidirected edge marks two observed
    nodes with a confounded path through hidden nodes only.
    """
    directed: set[Edge] = set()
    confounded: set[Edge] = set()
    for tail, head in g.directed_edges:
        if tail in g.observed and head in g.observed:
            directed.add((tail, head))
    for h in g.hidden:
        # exogenous-root form: every hidden child is observed
        kids = sorted(c for c in g.children(h) if c in g.observed)
        for a, b in combinations(kids, 2):
            confounded.add((a, b))
    return Admg(g.observed, frozenset(directed), frozenset(confounded))


def districts(g: Admg) -> frozenset[frozenset[str]]:
    """Partition of the nodes into bidirected-connected components."""
    parent: dict[str, str] = {v: v for v in g.nodes}

    def find(v: str) -> str:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for a, b in g.bidirected_edges:
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb
    blocks: dict[str, set[str]] = {}
    for v in g.nodes:
        blocks.setdefault(find(v), set()).add(v)
    return frozenset(frozenset(b) for b in blocks.values())


def district_of(g: Admg, v: str) -> frozenset[str]:
    for d in districts(g):
        if v in d:
            return d
    raise GraphError(f"unknown node {v}")


def mutilate(g, cut_out=frozenset(), cut_in=frozenset()):
    """Remove edges out of cut_out and edges with an arrowhead into cut_in.

    Works on both CausalGraph and Admg; the node set is unchanged.
    """
    cut_out, cut_in = frozenset(cut_out), frozenset(cut_in)
    unknown = (cut_out | cut_in) - g.nodes
    if unknown:
        raise GraphError(f"unknown node(s) {sorted(unknown)}")
    directed = frozenset(
        (t, h) for t, h in g.directed_edges if t not in cut_out and h not in cut_in
    )
    if isinstance(g, Admg):
        bidirected = frozenset(
            (a, b)
            for a, b in g.bidirected_edges
            if a not in cut_in and b not in cut_in
        )
        return Admg(g.nodes, directed, bidirected)
    return CausalGraph(g.observed, g.hidden, directed)


def induced_subgraph(g: Admg, keep) -> Admg:
    keep = frozenset(keep)
    unknown = keep - g.nodes
    if unknown:
        raise GraphError(f"unknown node(s) {sorted(unknown)}")
    return Admg(
        keep,
        frozenset((t, h) for t, h in g.directed_edges if t in keep and h in keep),
        frozenset((a, b) for a, b in g.bidirected_edges if a in keep and b in keep),
    )


def hidden_form(g: Admg, prefix: str = "U") -> CausalGraph:
    """Represent an ADMG as a canonical hidden-variable DAG.

    Each bidirected edge becomes a fresh exogenous hidden parent of its
    two endpoints; the latent projection of the result is g again.
    """
    hidden: set[str] = set()
    edges = set(g.directed_edges)
    taken = set(g.nodes)
    counter = 1
    for a, b in sorted(g.bidirected_edges):
        name = f"{prefix}{counter}"
        while name in taken:
            counter += 1
            name = f"{prefix}{counter}"
        counter += 1
        taken.add(name)
        hidden.add(name)
        edges.add((name, a))
        edges.add((name, b))
    return CausalGraph(g.nodes, frozenset(hidden), frozenset(edges))


def ystar(g: Admg, treatment: str, outcome: str) -> frozenset[str]:
    """Ancestors of the outcome (inclusive) once the treatment is removed."""
    for v in (treatment, outcome):
        if v not in g.nodes:
            raise GraphError(f"unknown node {v}")
    trimmed = induced_subgraph(g, g.nodes - {treatment})
    return trimmed.ancestors_of(frozenset({outcome}))
