"""Oracle verification of identified expressions.

An identified functional is checked by evaluating it on the observed
joint of a structural model and comparing, exactly, with the model's own
counterfactual distribution computed by recursive substitution.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .evaluate import EvaluationError, evaluate
from .graphs import latent_project
from .identify import (
    MEDIATION_FORMULA,
    NATURAL_DIRECT,
    NATURAL_INDIRECT,
    PATH_SPECIFIC,
    TOTAL,
    Query,
    natural_effect_paths,
)
from .npsem import NpsemSpec, cross_world_dist, interventional_dist, observed_joint
from .pathsets import PathSet


def world_a_bundle(q: Query) -> PathSet | None:
    """The path bundle that carries world label a in the identified
    expression; None for plain total-effect queries."""
    if q.kind == TOTAL:
        return None
    admg = latent_project(q.graph)
    if q.kind == PATH_SPECIFIC:
        bundle = PathSet(q.treatment, q.outcome, q.paths)
        if q.swap_worlds:
            from .pathsets import complement, enumerate_proper_paths

            bundle = complement(
                enumerate_proper_paths(admg, q.treatment, q.outcome), bundle
            )
        return bundle
    indirect, direct = natural_effect_paths(admg, q.treatment, q.mediators, q.outcome)
    # both natural kinds and the mediation formula default to world a on
    # the unmediated bundle; swap_worlds moves it to the mediated one
    return indirect if q.swap_worlds else direct


def oracle_dist(spec: NpsemSpec, q: Query, a_val, a_prime_val) -> dict:
    bundle = world_a_bundle(q)
    if bundle is None:
        return interventional_dist(spec, {q.treatment: a_val}, q.outcome)
    return cross_world_dist(spec, bundle, a_val, a_prime_val)


@dataclass(frozen=True)
class VerifyOutcome:
    ok: bool
    detail: str = ""


def verify_expression(expr, q: Query, spec: NpsemSpec, world_pairs=None) -> VerifyOutcome:
    """Exact equality of the expression and the oracle on one model."""
    joint = observed_joint(spec)
    domain = spec.domains[q.outcome]
    pairs = world_pairs or [(1, 0), (0, 1), (1, 1), (0, 0)]
    for a_val, a_prime_val in pairs:
        expected = oracle_dist(spec, q, a_val, a_prime_val)
        for y in domain:
            try:
                got = evaluate(expr, joint, a_val, a_prime_val, y)
            except EvaluationError as exc:
                return VerifyOutcome(False, f"evaluation failed: {exc}")
            if got != expected[y]:
                return VerifyOutcome(
                    False,
                    f"mismatch at worlds ({a_val},{a_prime_val}) outcome {y}: "
                    f"expression {got}, oracle {expected[y]}",
                )
    return VerifyOutcome(True)
