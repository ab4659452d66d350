"""Grid search for pairs of models that agree observably but not cross-world.

The family searched keeps every observed joint strictly positive: each
observed node gets an enumerated base table over its parents plus an
independent flip noise (flip probability 1/4), and hidden confounders are
uniform.  Positivity matters: with degenerate supports two models can
disagree cross-world even on identifiable queries simply because the
identifying functional conditions on impossible events, and such pairs
would be vacuous witnesses.  Base tables are enumerated lexicographically
with hidden-value relabelings pruned, specs are bucketed by their exact
observed joint, and the first bucket collision with a cross-world gap at
least min_gap wins.  Absence within the budget is a bounded-search
verdict, not a proof.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import permutations, product as iterproduct

from .graphs import CausalGraph
from .npsem import NpsemSpec, cross_world_dist, mechanism_parents, observed_joint
from .pathsets import PathSet

FLIP = ((0, Fraction(3, 4)), (1, Fraction(1, 4)))


def _parent_configs(graph: CausalGraph, v: str, hidden_support: int):
    slots = []
    for p in mechanism_parents(graph, v):
        if p in graph.hidden:
            slots.append(tuple(range(hidden_support)))
        else:
            slots.append((0, 1))
    return sorted(iterproduct(*slots))


def _spec_from_tables(
    graph: CausalGraph, tables: dict, hidden_support: int
) -> NpsemSpec:
    uniform = tuple(
        (i, Fraction(1, hidden_support)) for i in range(hidden_support)
    )
    noise = {}
    mechanisms = {}
    for v in graph.nodes:
        noise[v] = uniform if v in graph.hidden else FLIP
    for v in graph.observed:
        table = {}
        for key, base in tables[v].items():
            table[key + (0,)] = base
            table[key + (1,)] = 1 - base
        mechanisms[v] = table
    return NpsemSpec(
        graph, {v: (0, 1) for v in graph.observed}, noise, mechanisms
    )


def _canonical_under_relabeling(graph, tables, hidden_support: int) -> bool:
    """Keep only the least encoding over hidden-value permutations."""
    hiddens = sorted(graph.hidden)
    if not hiddens:
        return True
    nodes = sorted(tables)
    parent_lists = {v: mechanism_parents(graph, v) for v in nodes}

    def encode(tbls) -> tuple:
        return tuple(tuple(sorted(tbls[v].items())) for v in nodes)

    base = encode(tables)
    perms = list(permutations(range(hidden_support)))
    for combo in iterproduct(perms, repeat=len(hiddens)):
        if all(p == tuple(range(hidden_support)) for p in combo):
            continue
        maps = dict(zip(hiddens, combo))
        relabeled = {}
        for v in nodes:
            new_table = {}
            for key, val in tables[v].items():
                new_key = tuple(
                    maps[p][k] if p in maps else k
                    for p, k in zip(parent_lists[v], key)
                )
                new_table[new_key] = val
            relabeled[v] = new_table
        if encode(relabeled) < base:
            return False
    return True


def counterexample_search(
    graph: CausalGraph,
    pi: PathSet,
    budget: int = 20000,
    min_gap: Fraction = Fraction(0),
    hidden_support: int = 2,
):
    """First pair of positive-support specs with equal observed joints but
    different cross-world distributions for pi; None if the budget runs
    out first.

    Returns (spec_a, spec_b, gap), gap being the largest pointwise
    difference between the two counterfactual outcome distributions.
    """
    nodes = sorted(graph.observed)

    def tables_for(v):
        configs = _parent_configs(graph, v, hidden_support)
        for values in iterproduct((0, 1), repeat=len(configs)):
            yield dict(zip(configs, values))

    buckets: dict[tuple, list] = {}
    count = 0
    for combo in iterproduct(*(tables_for(v) for v in nodes)):
        if count >= budget:
            return None
        count += 1
        tables = dict(zip(nodes, combo))
        if not _canonical_under_relabeling(graph, tables, hidden_support):
            continue
        spec = _spec_from_tables(graph, tables, hidden_support)
        joint = observed_joint(spec)
        key = tuple(sorted(joint.mass.items()))
        cw = cross_world_dist(spec, pi, 1, 0)
        for other_spec, other_cw in buckets.get(key, ()):
            gap = max(abs(cw[y] - other_cw[y]) for y in cw)
            if gap > 0 and gap >= min_gap:
                return other_spec, spec, gap
        buckets.setdefault(key, []).append((spec, cw))
    return None
