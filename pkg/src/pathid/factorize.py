"""Assembly of identifying functionals from district kernels.

The total-effect functional sums identified district kernels over the
outcome ancestors; the path-specific variant assigns each district the
treatment world dictated by which path bundle enters it.  On graphs with
no bidirected edges the per-node edge g-formula applies directly.
"""

from __future__ import annotations

from .expr import (
    FIXED_A,
    FIXED_A_PRIME,
    OUTCOME,
    Cond,
    NotIdentifiable,
    Sum,
    VarRef,
    cond,
    free,
    free_nodes,
    fresh_index,
    product,
    substitute_free,
    summed,
)
from .fixing import identify_kernel
from .graphs import Admg, GraphError, districts, induced_subgraph, ystar
from .pathsets import (
    ASSIGN_A,
    ASSIGN_A_PRIME,
    ASSIGN_NONE,
    DistrictAssignment,
    PathSet,
    district_assignments,
    enumerate_proper_paths,
    recanting_witness,
    validate_paths,
)


def _world_ref(treatment: str, value: str) -> VarRef:
    if value == ASSIGN_A_PRIME:
        return VarRef(treatment, FIXED_A_PRIME)
    return VarRef(treatment, FIXED_A)


def _assemble(
    g: Admg,
    treatment: str,
    outcome: str,
    assignments: list[DistrictAssignment],
):
    """Sum over outcome ancestors of per-district identified kernels."""
    stars = ystar(g, treatment, outcome)
    bound_vars = {v: fresh_index() for v in sorted(stars - {outcome})}
    factors = []
    for assignment in assignments:
        kernel = identify_kernel(g, assignment.district, treatment, outcome)
        if isinstance(kernel, NotIdentifiable):
            return kernel
        mapping: dict[str, VarRef] = {}
        strays = []
        for node in free_nodes(kernel):
            if node == outcome:
                mapping[node] = VarRef(node, OUTCOME)
            elif node in bound_vars:
                mapping[node] = summed(node, bound_vars[node])
            elif node == treatment:
                if assignment.value == ASSIGN_NONE:
                    strays.append(node)
                else:
                    mapping[node] = _world_ref(treatment, assignment.value)
            else:
                strays.append(node)
        bound = kernel
        if strays:
            # context the kernel provably does not depend on: average it out
            # against its marginal so evaluation has concrete values
            idxs = {s: fresh_index() for s in sorted(strays)}
            for s, idx in idxs.items():
                mapping[s] = summed(s, idx)
            weight = Cond(tuple(summed(s, i) for s, i in sorted(idxs.items())))
            bound = Sum(
                tuple((s, i) for s, i in sorted(idxs.items())),
                product([weight, kernel]),
            )
        factors.append(substitute_free(bound, mapping))
    body = product(factors)
    if not bound_vars:
        return body
    return Sum(tuple((v, i) for v, i in sorted(bound_vars.items())), body)


def truncated_factorization(g: Admg, treatment: str, outcome: str):
    """Identifying functional for the total effect p(Y(a) = y).

    Every district of the outcome-ancestor subgraph with the treatment as
    a parent receives the single world label a.
    """
    for v in (treatment, outcome):
        if v not in g.nodes:
            raise GraphError(f"unknown node {v}")
    stars = ystar(g, treatment, outcome)
    assignments = []
    for d in sorted(districts(induced_subgraph(g, stars)), key=sorted):
        value = ASSIGN_A if treatment in g.district_parents(d) else ASSIGN_NONE
        assignments.append(DistrictAssignment(d, value))
    return _assemble(g, treatment, outcome, assignments)


def edge_g_formula_hidden(g: Admg, pi: PathSet):
    """Path-specific identifying functional on a latent-projection ADMG.

    Raises on a recanting district (reported with its members); kernel
    failure comes back as a NotIdentifiable value.
    """
    assignments = district_assignments(g, pi)  # raises on recanting district
    return _assemble(g, pi.treatment, pi.outcome, assignments)


def edge_g_formula(g: Admg, pi: PathSet):
    """Per-node world-labelled g-formula for bidirected-free graphs."""
    if g.bidirected_edges:
        raise GraphError("edge_g_formula requires a bidirected-free graph")
    validate_paths(g, pi)
    witness = recanting_witness(g, pi)
    if witness is not None:
        raise GraphError(f"recanting witness {witness} blocks the edge g-formula")
    treatment, outcome = pi.treatment, pi.outcome
    pibar_paths = enumerate_proper_paths(g, treatment, outcome).paths - pi.paths
    pi_entries = {p[1] for p in pi.paths}
    pibar_entries = {p[1] for p in pibar_paths}
    bound_vars = {
        v: fresh_index() for v in sorted(g.nodes - {treatment, outcome})
    }

    def ref(node: str) -> VarRef:
        if node == outcome:
            return VarRef(node, OUTCOME)
        return summed(node, bound_vars[node])

    factors = []
    for v in sorted(g.nodes - {treatment}):
        given = []
        for p in sorted(g.parents(v)):
            if p == treatment:
                # a treatment edge reaching no outcome path may carry either
                # world; the factor integrates out of the formula regardless
                if v in pibar_entries:
                    given.append(VarRef(treatment, FIXED_A_PRIME))
                else:
                    given.append(VarRef(treatment, FIXED_A))
            else:
                given.append(ref(p))
        factors.append(Cond((ref(v),), tuple(given)))
    body = product(factors)
    if not bound_vars:
        return body
    return Sum(tuple((v, i) for v, i in sorted(bound_vars.items())), body)
