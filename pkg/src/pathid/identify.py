"""Top-level identification queries.

A query names the graph, the roles, and what is wanted: the total effect,
a path-specific effect for an explicit path bundle, a natural direct or
indirect effect through a mediator set, or the covariate-adjusted
mediation-formula route.  Results carry either a closed-form functional
over observed conditionals or a structured reason for failure.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .expr import (
    FIXED_A,
    FIXED_A_PRIME,
    OUTCOME,
    Cond,
    NotIdentifiable,
    Sum,
    VarRef,
    contains_kernel,
    fresh_index,
    product,
    summed,
)
from .factorize import edge_g_formula_hidden, truncated_factorization
from .graphs import Admg, CausalGraph, GraphError, latent_project
from .pathsets import (
    ASSIGN_A,
    ASSIGN_A_PRIME,
    PathSet,
    complement,
    enumerate_proper_paths,
    recanting_district,
    recanting_witness,
    validate_paths,
)
from .separation import mediation_adjustment_report
from .simplify import simplify

TOTAL = "total"
PATH_SPECIFIC = "path_specific"
NATURAL_DIRECT = "natural_direct"
NATURAL_INDIRECT = "natural_indirect"
MEDIATION_FORMULA = "mediation_formula"

_KINDS = (TOTAL, PATH_SPECIFIC, NATURAL_DIRECT, NATURAL_INDIRECT, MEDIATION_FORMULA)


class UnsupportedQuery(ValueError):
    """Feature outside the engine's scope (e.g. stratum-specific effects)."""


@dataclass(frozen=True)
class Query:
    graph: CausalGraph
    treatment: str
    outcome: str
    kind: str
    paths: frozenset = frozenset()        # PATH_SPECIFIC: tuples of node names
    mediators: frozenset = frozenset()    # NATURAL_* and MEDIATION_FORMULA
    covariates: frozenset = frozenset()   # MEDIATION_FORMULA
    swap_worlds: bool = False             # exchange which bundle carries world a

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise GraphError(f"unknown query kind {self.kind!r}")
        roles = {self.treatment, self.outcome}
        if len(roles) != 2 or not roles <= self.graph.observed:
            raise GraphError("treatment and outcome must be distinct observed nodes")
        object.__setattr__(self, "paths", frozenset(tuple(p) for p in self.paths))
        object.__setattr__(self, "mediators", frozenset(self.mediators))
        object.__setattr__(self, "covariates", frozenset(self.covariates))
        for group in (self.mediators, self.covariates):
            bad = group & roles | (group - self.graph.observed)
            if bad:
                raise GraphError(f"invalid role node(s) {sorted(bad)}")


@dataclass(frozen=True)
class NotIdentifiedReason:
    kind: str  # recanting_witness | recanting_district | unidentifiable_kernel | criterion_failure
    nodes: frozenset[str] = frozenset()
    detail: str = ""

    def __post_init__(self):
        object.__setattr__(self, "nodes", frozenset(self.nodes))


@dataclass(frozen=True)
class IdentifyResult:
    identified: bool
    expression: object = None
    reason: NotIdentifiedReason | None = None
    diagnostics: tuple = ()


def _identified(expression, diagnostics=()) -> IdentifyResult:
    assert not contains_kernel(expression)
    return IdentifyResult(True, expression, None, tuple(diagnostics))


def _failed(reason: NotIdentifiedReason, diagnostics=()) -> IdentifyResult:
    return IdentifyResult(False, None, reason, tuple(diagnostics))


def identify_total(q: Query) -> IdentifyResult:
    admg = latent_project(q.graph)
    expr = truncated_factorization(admg, q.treatment, q.outcome)
    if isinstance(expr, NotIdentifiable):
        return _failed(
            NotIdentifiedReason("unidentifiable_kernel", expr.fragment, expr.reason)
        )
    return _identified(simplify(expr, admg))


def _pathset(q: Query, admg: Admg) -> PathSet:
    ps = PathSet(q.treatment, q.outcome, q.paths)
    validate_paths(admg, ps)
    all_paths = enumerate_proper_paths(admg, q.treatment, q.outcome)
    complement(all_paths, ps)  # raises when ps strays outside the graph
    return ps


def _swap_worlds(expr):
    """Exchange the two treatment-world labels throughout an expression."""
    flip = {FIXED_A: FIXED_A_PRIME, FIXED_A_PRIME: FIXED_A}

    def walk(x):
        if isinstance(x, Cond):
            return Cond(
                tuple(
                    VarRef(r.node, flip.get(r.binding, r.binding), r.index)
                    for r in x.targets
                ),
                tuple(
                    VarRef(r.node, flip.get(r.binding, r.binding), r.index)
                    for r in x.given
                ),
            )
        if hasattr(x, "factors"):
            return type(x)(tuple(walk(f) for f in x.factors))
        if isinstance(x, Sum):
            return Sum(x.bound, walk(x.body))
        if hasattr(x, "num"):
            return type(x)(walk(x.num), walk(x.den))
        return x

    return walk(expr)


def identify_path_specific(q: Query) -> IdentifyResult:
    """Identify p(Y(pi, a, a') = y) or report why it cannot be done.

    Failure reasons, in the order checked: a recanting witness (graphs
    with no hidden structure), a recanting district, or an unidentifiable
    district kernel.  Kernel failure is exactly failure of the total
    effect, so the completeness pairing with the total-effect check holds
    by construction.
    """
    admg = latent_project(q.graph)
    pi = _pathset(q, admg)
    diagnostics = []
    if not admg.bidirected_edges:
        witness = recanting_witness(admg, pi)
        if witness is not None:
            return _failed(
                NotIdentifiedReason("recanting_witness", frozenset({witness})),
                ["recanting witness: " + witness],
            )
        diagnostics.append("recanting witness: absent")
    district = recanting_district(admg, pi)
    if district is not None:
        return _failed(
            NotIdentifiedReason("recanting_district", district),
            ["recanting district: {" + ", ".join(sorted(district)) + "}"],
        )
    diagnostics.append("recanting district: absent")
    expr = edge_g_formula_hidden(admg, pi)
    if isinstance(expr, NotIdentifiable):
        return _failed(
            NotIdentifiedReason("unidentifiable_kernel", expr.fragment, expr.reason),
            diagnostics,
        )
    expr = simplify(expr, admg)
    if q.swap_worlds:
        expr = _swap_worlds(expr)
    return _identified(expr, diagnostics)


def natural_effect_paths(
    g: Admg, treatment: str, mediators, outcome: str
) -> tuple[PathSet, PathSet]:
    """Split proper paths into the mediated bundle and its complement."""
    mediators = frozenset(mediators)
    bad = mediators & {treatment, outcome} | (mediators - g.nodes)
    if bad:
        raise GraphError(f"invalid mediator(s) {sorted(bad)}")
    all_paths = enumerate_proper_paths(g, treatment, outcome)
    indirect = PathSet(
        treatment,
        outcome,
        frozenset(p for p in all_paths.paths if set(p[1:-1]) & mediators),
    )
    direct = complement(all_paths, indirect)
    return indirect, direct


def identify_natural(q: Query) -> IdentifyResult:
    """Natural direct/indirect effects as path-specific queries.

    Default worlds follow the pure-direct / total-indirect decomposition:
    either way the identified object is the distribution with world a on
    unmediated paths and a' on mediated ones; swap_worlds exchanges them.
    """
    admg = latent_project(q.graph)
    indirect, direct = natural_effect_paths(admg, q.treatment, q.mediators, q.outcome)
    if q.kind == NATURAL_DIRECT:
        pi, swap = direct, q.swap_worlds
    else:
        # total-indirect convention: the mediated bundle carries a'
        pi, swap = indirect, not q.swap_worlds
    sub = Query(
        q.graph,
        q.treatment,
        q.outcome,
        PATH_SPECIFIC,
        paths=pi.paths,
        swap_worlds=swap,
    )
    return identify_path_specific(sub)


def mediation_formula(q: Query) -> IdentifyResult:
    """Covariate-adjustment route to p(Y(a, M(a')) = y).

    Requires the cross-world criteria and the full adjustment criterion
    for the supplied covariates; the emitted functional is the standard
    sum over covariates and mediator of p(y|a,m,c) p(m|a',c) p(c).
    """
    if len(q.mediators) != 1:
        raise GraphError("mediation_formula expects exactly one mediator")
    (mediator,) = q.mediators
    report = mediation_adjustment_report(
        q.graph, q.treatment, mediator, q.outcome, q.covariates
    )
    diagnostics = [
        f"criterion ii.a (cross-world separation): {'pass' if report.passes_iia else 'fail'}",
        f"criterion ii.b (no treatment-induced covariate): {'pass' if report.passes_iib else 'fail'}",
        f"adjustment criterion: {'pass' if report.passes_adjustment_criterion else 'fail'}",
    ]
    if not report.passes_adjustment_criterion:
        failing = []
        if not report.passes_iia:
            failing.append("ii.a")
        if not report.passes_iib:
            failing.append("ii.b")
        if not failing:
            failing.append("adjustment")
        return _failed(
            NotIdentifiedReason(
                "criterion_failure", q.covariates, "+".join(failing)
            ),
            diagnostics,
        )
    cov = sorted(q.covariates)
    med_idx = fresh_index()
    cov_idx = {c: fresh_index() for c in cov}
    a_ref = VarRef(q.treatment, FIXED_A)
    ap_ref = VarRef(q.treatment, FIXED_A_PRIME)
    m_ref = summed(mediator, med_idx)
    c_refs = [summed(c, cov_idx[c]) for c in cov]
    factors = [
        Cond((VarRef(q.outcome, OUTCOME),), tuple([a_ref, m_ref] + c_refs)),
        Cond((m_ref,), tuple([ap_ref] + c_refs)),
    ]
    if cov:
        factors.append(Cond(tuple(c_refs)))
    bound = tuple((c, cov_idx[c]) for c in cov) + ((mediator, med_idx),)
    expr = Sum(bound, product(factors))
    if q.swap_worlds:
        expr = _swap_worlds(expr)
    return _identified(expr, diagnostics)


def run_query(q: Query) -> IdentifyResult:
    if q.kind == TOTAL:
        return identify_total(q)
    if q.kind == PATH_SPECIFIC:
        return identify_path_specific(q)
    if q.kind in (NATURAL_DIRECT, NATURAL_INDIRECT):
        return identify_natural(q)
    return mediation_formula(q)


def query_from_json(graph: CausalGraph, data: dict) -> Query:
    """Build a query from its JSON wire form.

    Stratum-specific (conditional) queries are deliberately unsupported
    and rejected with an explicit message.
    """
    if "given" in data or "conditioning" in data:
        raise UnsupportedQuery(
            "conditional (stratum-specific) path-specific effects are not "
            "supported; identification there is an open problem"
        )
    return Query(
        graph,
        data["treatment"],
        data["outcome"],
        data["kind"],
        paths=frozenset(tuple(p) for p in data.get("paths", [])),
        mediators=frozenset(data.get("mediators", [])),
        covariates=frozenset(data.get("covariates", [])),
        swap_worlds=bool(data.get("swap_worlds", False)),
    )
