"""Value-preserving rewrites toward the paper-style compact functionals.

Three families of rules run to a fixpoint: telescoping sums collapse
(sum_x p(x|w) = 1), chained conditionals merge (sum_x p(x|w) p(t|w,x) =
p(t|w)), and conditioning variables drop when m-separation in the graph
says they carry no information.  Merging may first widen or narrow a
factor's conditioning set when m-separation justifies the rewrite.
Simplification is best effort; correctness never depends on it.
"""

from __future__ import annotations

from .expr import (
    SUMMED,
    Cond,
    Product,
    Ratio,
    Sum,
    VarRef,
    product,
)
from .graphs import Admg
from .separation import SeparationQuery, m_separated


def _msep(g: Admg, targets: frozenset[str], moved: frozenset[str], rest: frozenset[str]) -> bool:
    if not moved:
        return True
    if (targets & moved) or (targets & rest) or (moved & rest):
        return False
    if not (targets | moved | rest) <= g.nodes:
        return False
    return m_separated(g, SeparationQuery(targets, moved, rest))


def _nodes(refs) -> frozenset[str]:
    return frozenset(r.node for r in refs)


def simplify(e, g: Admg):
    """Rewrite to a fixpoint of collapse, merge and conditioning-prune."""
    previous = None
    current = _normalize(e)
    while current != previous:
        previous = current
        current = _rewrite_sums(current, g)
        current = _prune_conds(current, g)
        current = _normalize(current)
    return current


def _normalize(e):
    if isinstance(e, Product):
        return product([_normalize(f) for f in e.factors])
    if isinstance(e, Sum):
        body = _normalize(e.body)
        # hoist nested sums and sums sitting inside the body product
        bound = list(e.bound)
        if isinstance(body, Product):
            flat = []
            for f in body.factors:
                if isinstance(f, Sum):
                    bound.extend(f.bound)
                    inner = f.body
                    flat.extend(inner.factors if isinstance(inner, Product) else [inner])
                else:
                    flat.append(f)
            body = product(flat)
        if isinstance(body, Sum):
            bound.extend(body.bound)
            body = body.body
        if not bound:
            return body
        return Sum(tuple(bound), body)
    if isinstance(e, Ratio):
        num, den = _normalize(e.num), _normalize(e.den)
        if num == den:
            return Product(())
        if den == Product(()):
            return num
        return Ratio(num, den)
    return e


def _refs_index(expr, idx: int) -> bool:
    if isinstance(expr, Cond):
        return any(
            r.binding == SUMMED and r.index == idx for r in expr.targets + expr.given
        )
    if isinstance(expr, Product):
        return any(_refs_index(f, idx) for f in expr.factors)
    if isinstance(expr, Sum):
        return _refs_index(expr.body, idx)
    if isinstance(expr, Ratio):
        return _refs_index(expr.num, idx) or _refs_index(expr.den, idx)
    return False


def _rewrite_sums(e, g: Admg):
    if isinstance(e, Product):
        return product([_rewrite_sums(f, g) for f in e.factors])
    if isinstance(e, Ratio):
        return Ratio(_rewrite_sums(e.num, g), _rewrite_sums(e.den, g))
    if not isinstance(e, Sum):
        return e
    body = _rewrite_sums(e.body, g)
    bound = list(e.bound)
    factors = list(body.factors) if isinstance(body, Product) else [body]
    changed = True
    while changed:
        changed = False
        for node, idx in sorted(bound):
            ref = VarRef(node, SUMMED, idx)
            involved = [f for f in factors if _refs_index(f, idx)]
            target_hits = [
                f
                for f in involved
                if isinstance(f, Cond) and ref in f.targets
            ]
            if len(target_hits) != 1:
                continue
            owner = target_hits[0]
            rest = [f for f in involved if f is not owner]
            if not rest:
                # sum_x p(..., x, ... | w) marginalizes x away
                others = tuple(r for r in owner.targets if r != ref)
                bound.remove((node, idx))
                factors.remove(owner)
                if others:
                    factors.append(Cond(others, owner.given))
                changed = True
                break
            if list(owner.targets) != [ref]:
                continue
            merged = _try_chain_merge(owner, rest, ref, g)
            if merged is not None:
                bound.remove((node, idx))
                for f in [owner] + rest:
                    factors.remove(f)
                factors.append(merged)
                changed = True
                break
    new_body = product(factors)
    if not bound:
        return new_body
    return Sum(tuple(bound), new_body)


def _try_chain_merge(owner: Cond, rest: list, ref: VarRef, g: Admg):
    """sum_x p(x|W) p(t1|W,x) p(t2|W,x,t1) ... -> p(t1,t2,...|W).

    The shared context W is not always syntactically present in every
    factor, so candidate contexts are read off each factor and the
    others are widened or narrowed to match when m-separation allows.
    """
    if not all(isinstance(f, Cond) and ref in f.given for f in rest):
        return None
    chain = sorted(rest, key=lambda f: (len(f.given), f.targets))
    candidates = [frozenset(owner.given)]
    seen_targets: set = set()
    for f in chain:
        candidates.append(frozenset(f.given) - {ref} - seen_targets)
        seen_targets |= set(f.targets)
    ordered = sorted(set(candidates), key=lambda s: (-len(s), tuple(sorted(s))))
    for base in ordered:
        fitted_owner = _match_context(owner, base, g)
        if fitted_owner is None:
            continue
        expected = set(base) | {ref}
        gathered: list[VarRef] = []
        for f in chain:
            fitted = _match_context(f, frozenset(expected), g)
            if fitted is None:
                break
            gathered.extend(fitted.targets)
            expected |= set(fitted.targets)
        else:
            return Cond(tuple(gathered), tuple(sorted(base)))
    return None


def _match_context(f: Cond, expected: frozenset, g: Admg):
    """Rewrite f's conditioning set to `expected` when m-separation allows."""
    given = frozenset(f.given)
    if given == expected:
        return f
    t_nodes = _nodes(f.targets)
    if given < expected:
        extra = expected - given
        # adding a node the factor already mentions (under any binding)
        # would make the conditional ill-formed
        if _nodes(extra) & (t_nodes | _nodes(given)):
            return None
        if _msep(g, t_nodes, _nodes(extra), _nodes(given)):
            return Cond(f.targets, tuple(sorted(expected)))
        return None
    if expected < given:
        dropped = given - expected
        if _msep(g, t_nodes, _nodes(dropped), _nodes(expected)):
            return Cond(f.targets, tuple(sorted(expected)))
        return None
    return None


def _prune_conds(e, g: Admg):
    if isinstance(e, Cond):
        given = list(e.given)
        t_nodes = _nodes(e.targets)
        changed = True
        while changed:
            changed = False
            for r in sorted(given):
                others = frozenset(x for x in given if x != r)
                if _msep(g, t_nodes, frozenset({r.node}), _nodes(others)):
                    given.remove(r)
                    changed = True
                    break
        return Cond(e.targets, tuple(given))
    if isinstance(e, Product):
        return product([_prune_conds(f, g) for f in e.factors])
    if isinstance(e, Sum):
        return Sum(e.bound, _prune_conds(e.body, g))
    if isinstance(e, Ratio):
        return Ratio(_prune_conds(e.num, g), _prune_conds(e.den, g))
    return e
