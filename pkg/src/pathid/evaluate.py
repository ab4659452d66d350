"""Exact evaluation of probability expressions against tabulated joints.

All arithmetic is over fractions.  A conditional whose conditioning event
has zero mass is undefined; inside a product a factor of exactly zero
absorbs undefined co-factors (the guarded-sum convention), while an
undefined value that survives to the top level raises.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iterproduct

from .expr import (
    FIXED_A,
    FIXED_A_PRIME,
    OUTCOME,
    SUMMED,
    Cond,
    NotIdentifiable,
    Kernel,
    Product,
    Ratio,
    Sum,
    VarRef,
)


class EvaluationError(ValueError):
    pass


class _Undefined:
    """Sentinel for a conditional on a zero-probability event."""

    def __repr__(self):
        return "<undefined>"


UNDEFINED = _Undefined()


@dataclass(frozen=True, eq=False)
class JointTable:
    """Exact joint distribution over finitely many variables."""

    variables: tuple[str, ...]
    domains: dict[str, tuple]
    mass: dict[tuple, Fraction]
    _marginals: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(self.variables))
        total = Fraction(0)
        for assignment, p in self.mass.items():
            if len(assignment) != len(self.variables):
                raise ValueError("assignment arity mismatch")
            if p < 0:
                raise ValueError("negative probability mass")
            total += p
        if total != 1:
            raise ValueError(f"total mass is {total}, expected 1")

    def _marginal(self, subset: frozenset[str]) -> dict[tuple, Fraction]:
        cached = self._marginals.get(subset)
        if cached is not None:
            return cached
        cols = [i for i, v in enumerate(self.variables) if v in subset]
        table: dict[tuple, Fraction] = {}
        for assignment, p in self.mass.items():
            key = tuple(assignment[i] for i in cols)
            table[key] = table.get(key, Fraction(0)) + p
        self._marginals[subset] = table
        return table

    def prob(self, partial: dict[str, object]) -> Fraction:
        """Marginal probability of a partial assignment."""
        subset = frozenset(partial)
        table = self._marginal(subset)
        key = tuple(partial[v] for v in self.variables if v in subset)
        return table.get(key, Fraction(0))

    def conditional(self, targets: dict, given: dict):
        """p(targets | given); UNDEFINED when p(given) = 0."""
        denom = self.prob(given)
        if denom == 0:
            return UNDEFINED
        merged = dict(given)
        for v, val in targets.items():
            if v in merged and merged[v] != val:
                return Fraction(0)
            merged[v] = val
        return self.prob(merged) / denom


def _resolve(r: VarRef, env: dict, a_val, a_prime_val, y_val):
    if r.binding == SUMMED:
        return env[r.index]
    if r.binding == FIXED_A:
        return a_val
    if r.binding == FIXED_A_PRIME:
        return a_prime_val
    if r.binding == OUTCOME:
        if y_val is None:
            raise EvaluationError(
                "expression references the outcome but no outcome value was supplied"
            )
        return y_val
    raise EvaluationError(f"unbound reference to {r.node}")


def evaluate(e, joint: JointTable, a_val, a_prime_val, y_val=None) -> Fraction:
    """Evaluate an identified expression to an exact rational.

    Raises EvaluationError on kernels, failure values, stray free
    references, or an undefined conditional outside a guarded sum.
    """
    result = _eval(e, joint, {}, a_val, a_prime_val, y_val)
    if result is UNDEFINED:
        raise EvaluationError(
            "zero-probability conditioning event outside a guarded sum"
        )
    return result


def _eval(e, joint, env, a_val, a_prime_val, y_val):
    if isinstance(e, Cond):
        targets = {r.node: _resolve(r, env, a_val, a_prime_val, y_val) for r in e.targets}
        given = {r.node: _resolve(r, env, a_val, a_prime_val, y_val) for r in e.given}
        for v in list(targets) + list(given):
            if v not in joint.domains:
                raise EvaluationError(f"variable {v} missing from the joint table")
        return joint.conditional(targets, given)
    if isinstance(e, Product):
        values = [_eval(f, joint, env, a_val, a_prime_val, y_val) for f in e.factors]
        if any(v == 0 for v in values if v is not UNDEFINED):
            return Fraction(0)
        if any(v is UNDEFINED for v in values):
            return UNDEFINED
        out = Fraction(1)
        for v in values:
            out *= v
        return out
    if isinstance(e, Sum):
        total = Fraction(0)
        domains = []
        for node, _idx in e.bound:
            if node not in joint.domains:
                raise EvaluationError(f"variable {node} missing from the joint table")
            domains.append(joint.domains[node])
        for values in iterproduct(*domains):
            local = dict(env)
            for (node, idx), val in zip(e.bound, values):
                local[idx] = val
            term = _eval(e.body, joint, local, a_val, a_prime_val, y_val)
            if term is UNDEFINED:
                return UNDEFINED
            total += term
        return total
    if isinstance(e, Ratio):
        num = _eval(e.num, joint, env, a_val, a_prime_val, y_val)
        den = _eval(e.den, joint, env, a_val, a_prime_val, y_val)
        if num is UNDEFINED or den is UNDEFINED or den == 0:
            return UNDEFINED
        return num / den
    if isinstance(e, (Kernel, NotIdentifiable)):
        raise EvaluationError(f"cannot evaluate {type(e).__name__} node")
    raise EvaluationError(f"cannot evaluate {e!r}")
