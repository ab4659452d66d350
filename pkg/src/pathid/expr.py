"""Probability-functional AST: conditionals, products, sums, kernels.

Expressions are immutable trees over variable references.  A reference
carries a binding: bound by an enclosing sum, fixed to one of the two
treatment worlds, fixed to the outcome value, or free (kernel context
awaiting substitution).  Ratios appear only when kernel identification
genuinely needs them; the worked examples never do.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

SUMMED = "summed"
FIXED_A = "fixed_a"
FIXED_A_PRIME = "fixed_a_prime"
OUTCOME = "outcome"
FREE = "free"

_BINDINGS = (SUMMED, FIXED_A, FIXED_A_PRIME, OUTCOME, FREE)


@dataclass(frozen=True, order=True)
class VarRef:
    node: str
    binding: str = FREE
    index: int = -1  # sum-binder index, meaningful only for SUMMED

    def __post_init__(self):
        if self.binding not in _BINDINGS:
            raise ValueError(f"unknown binding {self.binding!r}")
        if (self.binding == SUMMED) != (self.index >= 0):
            raise ValueError("summed refs and only summed refs carry an index")


@dataclass(frozen=True)
class Cond:
    """Conditional probability of the observed joint, p(targets | given)."""

    targets: tuple[VarRef, ...]
    given: tuple[VarRef, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "given", tuple(self.given))
        nodes = [r.node for r in self.targets + self.given]
        if len(set(nodes)) != len(nodes):
            raise ValueError(f"node repeated in conditional: {nodes}")
        if not self.targets:
            raise ValueError("conditional needs at least one target")


@dataclass(frozen=True)
class Product:
    factors: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))


@dataclass(frozen=True)
class Sum:
    """Sum over the full domains of the bound (node, index) pairs."""

    bound: tuple[tuple[str, int], ...]
    body: object

    def __post_init__(self):
        object.__setattr__(self, "bound", tuple(tuple(b) for b in self.bound))


@dataclass(frozen=True)
class Ratio:
    num: object
    den: object


@dataclass(frozen=True)
class Kernel:
    """Unidentified interventional factor; never part of a final result."""

    district: frozenset[str]
    context: tuple[VarRef, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "district", frozenset(self.district))
        object.__setattr__(self, "context", tuple(self.context))


@dataclass(frozen=True)
class NotIdentifiable:
    """Failure value naming the graph fragment that blocked identification."""

    reason: str
    fragment: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "fragment", frozenset(self.fragment))


Expr = object  # any of the node classes above

_counter = [0]


def fresh_index() -> int:
    _counter[0] += 1
    return _counter[0]


def summed(node: str, index: int) -> VarRef:
    return VarRef(node, SUMMED, index)


def free(node: str) -> VarRef:
    return VarRef(node, FREE)


def cond(targets, given=()) -> Cond:
    return Cond(tuple(targets), tuple(given))


def product(factors) -> Expr:
    flat = []
    for f in factors:
        if isinstance(f, Product):
            flat.extend(f.factors)
        else:
            flat.append(f)
    if len(flat) == 1:
        return flat[0]
    return Product(tuple(flat))


def free_nodes(e: Expr) -> frozenset[str]:
    """Nodes referenced with FREE binding anywhere in the tree."""
    out: set[str] = set()

    def walk(x):
        if isinstance(x, Cond):
            for r in x.targets + x.given:
                if r.binding == FREE:
                    out.add(r.node)
        elif isinstance(x, Product):
            for f in x.factors:
                walk(f)
        elif isinstance(x, Sum):
            walk(x.body)
        elif isinstance(x, Ratio):
            walk(x.num)
            walk(x.den)
        elif isinstance(x, Kernel):
            for r in x.context:
                if r.binding == FREE:
                    out.add(r.node)

    walk(e)
    return frozenset(out)


def all_refs(e: Expr) -> list[VarRef]:
    out: list[VarRef] = []

    def walk(x):
        if isinstance(x, Cond):
            out.extend(x.targets)
            out.extend(x.given)
        elif isinstance(x, Product):
            for f in x.factors:
                walk(f)
        elif isinstance(x, Sum):
            walk(x.body)
        elif isinstance(x, Ratio):
            walk(x.num)
            walk(x.den)
        elif isinstance(x, Kernel):
            out.extend(x.context)

    walk(e)
    return out


def substitute_free(e: Expr, mapping: dict[str, VarRef]) -> Expr:
    """Rebind FREE references node-wise; other bindings pass through."""

    def sub_ref(r: VarRef) -> VarRef:
        if r.binding == FREE and r.node in mapping:
            return mapping[r.node]
        return r

    def walk(x):
        if isinstance(x, Cond):
            return Cond(
                tuple(sub_ref(r) for r in x.targets),
                tuple(sub_ref(r) for r in x.given),
            )
        if isinstance(x, Product):
            return Product(tuple(walk(f) for f in x.factors))
        if isinstance(x, Sum):
            return Sum(x.bound, walk(x.body))
        if isinstance(x, Ratio):
            return Ratio(walk(x.num), walk(x.den))
        if isinstance(x, Kernel):
            return Kernel(x.district, tuple(sub_ref(r) for r in x.context))
        return x

    return walk(e)


def contains_kernel(e: Expr) -> bool:
    if isinstance(e, (Kernel, NotIdentifiable)):
        return True
    if isinstance(e, Product):
        return any(contains_kernel(f) for f in e.factors)
    if isinstance(e, Sum):
        return contains_kernel(e.body)
    if isinstance(e, Ratio):
        return contains_kernel(e.num) or contains_kernel(e.den)
    return False


# ---------------------------------------------------------------------------
# Canonical form
# ---------------------------------------------------------------------------

def _sort_key(e: Expr):
    return render(e, "text")


def canonicalize(e: Expr) -> Expr:
    """Normal form for expression equality.

    Products are flattened and sorted, inner sums are pulled out to the
    nearest enclosing sum where scoping permits, conditioning lists are
    sorted and bound indices renumbered in traversal order.
    """
    e = _hoist(_flatten(e))
    e = _renumber(e)
    return e


def _flatten(e: Expr) -> Expr:
    if isinstance(e, Product):
        return product([_flatten(f) for f in e.factors])
    if isinstance(e, Sum):
        body = _flatten(e.body)
        if isinstance(body, Sum):
            return Sum(e.bound + body.bound, body.body)
        if not e.bound:
            return body
        return Sum(e.bound, body)
    if isinstance(e, Ratio):
        return Ratio(_flatten(e.num), _flatten(e.den))
    if isinstance(e, Cond):
        return Cond(tuple(sorted(e.targets)), tuple(sorted(e.given)))
    return e


def _hoist(e: Expr) -> Expr:
    """Pull sums out of products: f * (sum_x g) -> sum_x (f * g)."""
    if isinstance(e, Product):
        factors = [_hoist(f) for f in e.factors]
        bound: list[tuple[str, int]] = []
        flat: list[Expr] = []
        for f in factors:
            if isinstance(f, Sum):
                bound.extend(f.bound)
                inner = f.body
                if isinstance(inner, Product):
                    flat.extend(inner.factors)
                else:
                    flat.append(inner)
            else:
                flat.append(f)
        if bound:
            return _hoist(Sum(tuple(bound), product(flat)))
        return product(flat)
    if isinstance(e, Sum):
        body = _hoist(e.body)
        if isinstance(body, Sum):
            return Sum(e.bound + body.bound, body.body)
        return Sum(e.bound, body)
    if isinstance(e, Ratio):
        # sums stay inside ratios; hoisting across a quotient is unsound
        return Ratio(_hoist(e.num), _hoist(e.den))
    return e


def _renumber(e: Expr) -> Expr:
    mapping: dict[int, int] = {}

    def ref(r: VarRef) -> VarRef:
        if r.binding == SUMMED:
            return VarRef(r.node, SUMMED, mapping[r.index])
        return r

    def walk(x):
        if isinstance(x, Sum):
            bound = sorted(x.bound)  # by (node, old index)
            for _node, idx in bound:
                mapping[idx] = len(mapping)
            new_bound = tuple((node, mapping[idx]) for node, idx in bound)
            body = walk(x.body)
            if isinstance(body, Product):
                body = Product(tuple(sorted(body.factors, key=_sort_key)))
            return Sum(new_bound, body)
        if isinstance(x, Product):
            return Product(tuple(sorted((walk(f) for f in x.factors), key=_sort_key)))
        if isinstance(x, Ratio):
            return Ratio(walk(x.num), walk(x.den))
        if isinstance(x, Cond):
            return Cond(
                tuple(sorted(ref(r) for r in x.targets)),
                tuple(sorted(ref(r) for r in x.given)),
            )
        if isinstance(x, Kernel):
            return Kernel(x.district, tuple(sorted(ref(r) for r in x.context)))
        return x

    return walk(e)


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

def _ref_label(r: VarRef, primed_nodes: frozenset[str]) -> str:
    base = r.node.lower()
    if r.binding == FIXED_A_PRIME:
        return base + "'"
    if r.binding == SUMMED and r.node in primed_nodes:
        # a bound copy of a node that also appears world-fixed elsewhere
        return base + "*"
    return base


def _primed_nodes(e: Expr) -> frozenset[str]:
    return frozenset(
        r.node for r in all_refs(e) if r.binding in (FIXED_A, FIXED_A_PRIME)
    )


def render(e: Expr, fmt: str = "text") -> str:
    """Deterministic rendering; json round-trips the exact AST."""
    if fmt == "json":
        return json.dumps(to_json(e), sort_keys=True, separators=(",", ":"))
    if fmt not in ("text", "latex"):
        raise ValueError(f"unknown format {fmt!r}")
    primed = _primed_nodes(e)

    def rend(x, top=False) -> str:
        if isinstance(x, Cond):
            targets = ",".join(_ref_label(r, primed) for r in x.targets)
            given = ",".join(_ref_label(r, primed) for r in x.given)
            if fmt == "latex":
                return f"p({targets} \\mid {given})" if given else f"p({targets})"
            return f"p({targets}|{given})" if given else f"p({targets})"
        if isinstance(x, Product):
            parts = [rend(f) for f in x.factors]
            return " ".join(parts)
        if isinstance(x, Sum):
            names = ",".join(
                _ref_label(VarRef(node, SUMMED, idx), primed)
                for node, idx in x.bound
            )
            body = rend(x.body)
            if fmt == "latex":
                return f"\\sum_{{{names}}} {body}"
            sub = names if len(names) == 1 else "{" + names + "}"
            return f"Σ_{sub} {body}"
        if isinstance(x, Ratio):
            num, den = rend(x.num), rend(x.den)
            if fmt == "latex":
                return f"\\frac{{{num}}}{{{den}}}"
            return f"[{num}] / [{den}]"
        if isinstance(x, Kernel):
            names = ",".join(sorted(n.lower() for n in x.district))
            ctx = ",".join(_ref_label(r, primed) for r in x.context)
            body = f"Q[{{{names}}}]" if fmt == "text" else f"Q[\\{{{names}\\}}]"
            return f"{body}({ctx})" if ctx else body
        if isinstance(x, NotIdentifiable):
            names = ", ".join(sorted(x.fragment))
            return f"<not identifiable: {x.reason}; fragment {{{names}}}>"
        raise TypeError(f"cannot render {x!r}")

    return rend(e, top=True)


# ---------------------------------------------------------------------------
# JSON encoding (lossless tagged-union AST)
# ---------------------------------------------------------------------------

def _ref_to_json(r: VarRef) -> dict:
    d = {"node": r.node, "binding": r.binding}
    if r.binding == SUMMED:
        d["index"] = r.index
    return d


def _ref_from_json(d: dict) -> VarRef:
    return VarRef(d["node"], d["binding"], d.get("index", -1))


def to_json(e: Expr) -> dict:
    if isinstance(e, Cond):
        return {
            "kind": "cond",
            "targets": [_ref_to_json(r) for r in e.targets],
            "given": [_ref_to_json(r) for r in e.given],
        }
    if isinstance(e, Product):
        return {"kind": "product", "factors": [to_json(f) for f in e.factors]}
    if isinstance(e, Sum):
        return {
            "kind": "sum",
            "bound": [[node, idx] for node, idx in e.bound],
            "body": to_json(e.body),
        }
    if isinstance(e, Ratio):
        return {"kind": "ratio", "num": to_json(e.num), "den": to_json(e.den)}
    if isinstance(e, Kernel):
        return {
            "kind": "kernel",
            "district": sorted(e.district),
            "context": [_ref_to_json(r) for r in e.context],
        }
    if isinstance(e, NotIdentifiable):
        return {
            "kind": "not_identifiable",
            "reason": e.reason,
            "fragment": sorted(e.fragment),
        }
    raise TypeError(f"cannot encode {e!r}")


def from_json(d: dict) -> Expr:
    kind = d["kind"]
    if kind == "cond":
        return Cond(
            tuple(_ref_from_json(r) for r in d["targets"]),
            tuple(_ref_from_json(r) for r in d["given"]),
        )
    if kind == "product":
        return Product(tuple(from_json(f) for f in d["factors"]))
    if kind == "sum":
        return Sum(tuple((n, i) for n, i in d["bound"]), from_json(d["body"]))
    if kind == "ratio":
        return Ratio(from_json(d["num"]), from_json(d["den"]))
    if kind == "kernel":
        return Kernel(
            frozenset(d["district"]),
            tuple(_ref_from_json(r) for r in d["context"]),
        )
    if kind == "not_identifiable":
        return NotIdentifiable(d["reason"], frozenset(d["fragment"]))
    raise ValueError(f"unknown expression kind {kind!r}")
