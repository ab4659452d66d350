"""Finite discrete structural-equation models with shared noise.

Every node carries an independent exact-rational noise term; hidden nodes
ARE their noise (exogenous roots shared by their children).  Cross-world
counterfactuals are computed by recursive substitution on one noise draw
at a time, so incompatible treatment assignments coexist on the shared
sample space and their joint distribution is exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iterproduct
from math import gcd
from random import Random

from .evaluate import JointTable
from .graphs import CausalGraph, latent_project, parse_graph, render_graph
from .pathsets import PathSet, enumerate_proper_paths


class SpecError(ValueError):
    pass


def mechanism_parents(graph: CausalGraph, v: str) -> list[str]:
    """Parent order used to key mechanism tables: sorted by name."""
    return sorted(graph.parents(v))


@dataclass(frozen=True, eq=False)
class NpsemSpec:
    """A complete structural-equation model over a hidden-variable DAG.

    noise maps every node to a tuple of (value, probability) pairs;
    mechanisms map every observed node to a table over parent values (in
    mechanism_parents order) followed by the node's own noise value.
    Hidden nodes have no mechanism: their value is their noise draw.
    """

    graph: CausalGraph
    domains: dict[str, tuple]
    noise: dict[str, tuple]
    mechanisms: dict[str, dict[tuple, object]]

    def __post_init__(self):
        g = self.graph
        if set(self.domains) != set(g.observed):
            raise SpecError("domains must cover exactly the observed nodes")
        if set(self.noise) != set(g.nodes):
            raise SpecError("noise must cover every node, hidden included")
        for v, pmf in self.noise.items():
            total = sum((p for _val, p in pmf), Fraction(0))
            if total != 1:
                raise SpecError(f"noise pmf of {v} sums to {total}, expected 1")
            if any(p < 0 for _val, p in pmf):
                raise SpecError(f"noise pmf of {v} has negative mass")
        if set(self.mechanisms) != set(g.observed):
            raise SpecError("mechanisms must cover exactly the observed nodes")
        for v, table in self.mechanisms.items():
            parents = mechanism_parents(g, v)
            slots = []
            for p in parents:
                slots.append(self.domains[p] if p in g.observed
                             else tuple(val for val, _ in self.noise[p]))
            slots.append(tuple(val for val, _ in self.noise[v]))
            for key in iterproduct(*slots):
                if key not in table:
                    raise SpecError(f"mechanism of {v} is missing entry {key}")
                if table[key] not in self.domains[v]:
                    raise SpecError(
                        f"mechanism of {v} maps {key} outside its domain"
                    )

    def hidden_support(self, h: str) -> tuple:
        return tuple(val for val, _ in self.noise[h])


class _Machine:
    """Precompiled evaluation order: everything indexed by topo position.

    Noise masses are integer numerators over one shared denominator, so
    enumeration accumulates plain integers and divides exactly once.
    """

    def __init__(self, spec: NpsemSpec):
        self.spec = spec
        self.order = spec.graph.topological_order()
        self.index = {v: i for i, v in enumerate(self.order)}
        self.hidden = [v in spec.graph.hidden for v in self.order]
        self.parent_idx = [
            tuple(self.index[p] for p in mechanism_parents(spec.graph, v))
            for v in self.order
        ]
        self.tables = [
            None if v in spec.graph.hidden else spec.mechanisms[v]
            for v in self.order
        ]
        self.noise_values = []
        self.noise_numerators = []
        self.denominator = 1
        for v in self.order:
            pmf = spec.noise[v]
            den = 1
            for _val, p in pmf:
                den = den * p.denominator // gcd(den, p.denominator)
            self.noise_values.append(tuple(val for val, _ in pmf))
            self.noise_numerators.append(
                tuple(p.numerator * (den // p.denominator) for _val, p in pmf)
            )
            self.denominator *= den

    def configurations(self):
        """Yield (eps value tuple, integer mass numerator)."""
        choices = [
            tuple(zip(vals, nums))
            for vals, nums in zip(self.noise_values, self.noise_numerators)
        ]
        for combo in iterproduct(*choices):
            num = 1
            for _val, n in combo:
                num *= n
            if num:
                yield tuple(val for val, _n in combo), num

    def world(self, eps: tuple, do_idx: dict | None = None) -> list:
        values = [None] * len(self.order)
        for i, table in enumerate(self.tables):
            if do_idx is not None and i in do_idx:
                values[i] = do_idx[i]
            elif table is None:
                values[i] = eps[i]
            else:
                key = tuple(values[j] for j in self.parent_idx[i]) + (eps[i],)
                values[i] = table[key]
        return values


def observed_joint(spec: NpsemSpec) -> JointTable:
    """Exact observed-margin joint, by enumerating noise configurations."""
    machine = _Machine(spec)
    variables = tuple(sorted(spec.graph.observed))
    cols = [machine.index[v] for v in variables]
    mass_num: dict[tuple, int] = {}
    for eps, num in machine.configurations():
        values = machine.world(eps)
        key = tuple(values[c] for c in cols)
        mass_num[key] = mass_num.get(key, 0) + num
    mass = {k: Fraction(n, machine.denominator) for k, n in mass_num.items()}
    domains = {v: tuple(spec.domains[v]) for v in variables}
    return JointTable(variables, domains, mass)


def interventional_dist(spec: NpsemSpec, do: dict, target: str) -> dict:
    """Distribution of target under do(.), mechanisms replaced by constants."""
    for v, val in do.items():
        if v not in spec.graph.observed:
            raise SpecError(f"cannot intervene on {v}")
        if val not in spec.domains[v]:
            raise SpecError(f"value {val!r} outside the domain of {v}")
    machine = _Machine(spec)
    do_idx = {machine.index[v]: val for v, val in do.items()}
    target_idx = machine.index[target]
    nums: dict = {val: 0 for val in spec.domains[target]}
    for eps, num in machine.configurations():
        values = machine.world(eps, do_idx)
        nums[values[target_idx]] += num
    return {val: Fraction(n, machine.denominator) for val, n in nums.items()}


class _CrossWorldPlan:
    """Straight-line recursive-substitution program for one path set.

    Entries are (node, path-suffix-to-outcome) pairs in dependency order;
    the treatment resolves to world a exactly when the assembled full
    path belongs to pi.
    """

    def __init__(self, machine: _Machine, pi: PathSet):
        self.machine = machine
        treatment = machine.index[pi.treatment]
        outcome = pi.outcome
        entry_ids: dict[tuple, int] = {}
        steps = []  # (node_idx, slots); slot: ('eps', idx)|('ctx', id)|('a',)|("a'",)

        def build(v: str, suffix: tuple) -> int:
            key = (v, suffix)
            if key in entry_ids:
                return entry_ids[key]
            idx = machine.index[v]
            if idx == treatment:
                slot = ("a",) if suffix in pi.paths else ("a'",)
                steps.append((idx, slot))
            elif machine.hidden[idx]:
                steps.append((idx, ("eps", idx)))
            else:
                slots = []
                for j in machine.parent_idx[idx]:
                    p = machine.order[j]
                    if machine.hidden[j]:
                        slots.append(("eps", j))
                    else:
                        slots.append(("ctx", build(p, (p,) + suffix)))
                steps.append((idx, ("mech", tuple(slots))))
            entry_ids[key] = len(steps) - 1
            return entry_ids[key]

        self.root = build(outcome, (outcome,))
        self.steps = steps

    def value(self, eps: tuple, a_val, a_prime_val):
        machine = self.machine
        out = [None] * len(self.steps)
        for i, (idx, slot) in enumerate(self.steps):
            kind = slot[0]
            if kind == "a":
                out[i] = a_val
            elif kind == "a'":
                out[i] = a_prime_val
            elif kind == "eps":
                out[i] = eps[slot[1]]
            else:
                key = tuple(
                    eps[s[1]] if s[0] == "eps" else out[s[1]] for s in slot[1]
                ) + (eps[idx],)
                out[i] = machine.tables[idx][key]
        return out[self.root]


def cross_world_value(spec: NpsemSpec, pi: PathSet, eps: dict, a_val, a_prime_val):
    """Nested counterfactual of the outcome for one noise draw (by name)."""
    machine = _Machine(spec)
    plan = _CrossWorldPlan(machine, pi)
    eps_tuple = tuple(eps[v] for v in machine.order)
    return plan.value(eps_tuple, a_val, a_prime_val)


def cross_world_dist(spec: NpsemSpec, pi: PathSet, a_val, a_prime_val) -> dict:
    """Exact distribution of the path-specific counterfactual outcome."""
    if pi.treatment not in spec.graph.observed:
        raise SpecError(f"unknown treatment {pi.treatment}")
    machine = _Machine(spec)
    plan = _CrossWorldPlan(machine, pi)
    nums: dict = {val: 0 for val in spec.domains[pi.outcome]}
    for eps, num in machine.configurations():
        nums[plan.value(eps, a_val, a_prime_val)] += num
    return {val: Fraction(n, machine.denominator) for val, n in nums.items()}


# ---------------------------------------------------------------------------
# Mediation estimands
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EstimandReport:
    te: Fraction
    pde: Fraction
    tie: Fraction
    tde: Fraction
    pie: Fraction
    mediated_interaction: Fraction
    rr_total: Fraction | None = None
    rr_nde: Fraction | None = None
    rr_nie: Fraction | None = None


def _mean(dist: dict) -> Fraction:
    total = Fraction(0)
    for val, p in dist.items():
        if not isinstance(val, int) or isinstance(val, bool):
            raise SpecError("estimands need a numeric-coded outcome")
        total += Fraction(val) * p
    return total


def natural_pi(all_paths: PathSet, mediators) -> PathSet:
    """Paths through at least one mediator (the indirect bundle)."""
    mediators = frozenset(mediators)
    return PathSet(
        all_paths.treatment,
        all_paths.outcome,
        frozenset(p for p in all_paths.paths if set(p[1:-1]) & mediators),
    )


def estimands(
    spec: NpsemSpec,
    mediators,
    treatment: str,
    outcome: str,
    a_val=1,
    a_prime_val=0,
) -> EstimandReport:
    """Natural-effect decompositions, all exact.

    Uses the full proper-path set of the latent projection; direct paths
    are everything avoiding the mediators.
    """
    admg = latent_project(spec.graph)
    all_paths = enumerate_proper_paths(admg, treatment, outcome)
    indirect = natural_pi(all_paths, mediators)
    direct = PathSet(treatment, outcome, all_paths.paths - indirect.paths)

    # E[Y(a, M(a'))] = mean outcome with direct paths at a, mediated at a'
    def nested_mean(direct_world, mediator_world) -> Fraction:
        return _mean(cross_world_dist(spec, direct, direct_world, mediator_world))

    y11 = nested_mean(a_val, a_val)
    y10 = nested_mean(a_val, a_prime_val)
    y01 = nested_mean(a_prime_val, a_val)
    y00 = nested_mean(a_prime_val, a_prime_val)

    te = y11 - y00
    pde = y10 - y00
    tie = y11 - y10
    tde = y11 - y01
    pie = y01 - y00
    report = dict(
        te=te, pde=pde, tie=tie, tde=tde, pie=pie,
        mediated_interaction=tde - pde,
    )
    outcome_domain = set(spec.domains[outcome])
    if outcome_domain == {0, 1} and 0 not in (y00, y10):
        report.update(
            rr_total=y11 / y00, rr_nde=y10 / y00, rr_nie=y11 / y10
        )
    return EstimandReport(**report)


# ---------------------------------------------------------------------------
# Seeded random specs compatible with a graph
# ---------------------------------------------------------------------------

def random_spec(graph: CausalGraph, rng: Random, hidden_support: int = 2) -> NpsemSpec:
    """Deterministic random binary NPSEM compatible with the graph.

    Observed nodes get 4-point noise whose last two values force the node
    to 0 and 1 respectively, making every conditional strictly positive.
    Noise masses are rationals with small denominators; hidden nodes get
    a positive pmf on {0..hidden_support-1}.
    """

    def positive_pmf(support: int) -> tuple:
        weights = [rng.randint(1, 8) for _ in range(support)]
        denom = sum(weights)
        return tuple((i, Fraction(w, denom)) for i, w in enumerate(weights))

    domains = {v: (0, 1) for v in graph.observed}
    noise: dict[str, tuple] = {}
    mechanisms: dict[str, dict[tuple, object]] = {}
    for v in sorted(graph.nodes):
        if v in graph.hidden:
            noise[v] = positive_pmf(hidden_support)
        else:
            noise[v] = positive_pmf(4)
    for v in sorted(graph.observed):
        parents = mechanism_parents(graph, v)
        slots = []
        for p in parents:
            slots.append(domains[p] if p in graph.observed
                         else tuple(val for val, _ in noise[p]))
        table: dict[tuple, object] = {}
        for key in iterproduct(*slots):
            table[key + (0,)] = rng.randint(0, 1)
            table[key + (1,)] = rng.randint(0, 1)
            table[key + (2,)] = 0
            table[key + (3,)] = 1
        mechanisms[v] = table
    return NpsemSpec(graph, domains, noise, mechanisms)


# ---------------------------------------------------------------------------
# JSON wire format
# ---------------------------------------------------------------------------

def _frac_to_str(f: Fraction) -> str:
    return f"{f.numerator}/{f.denominator}"


def _frac_from_str(s: str) -> Fraction:
    return Fraction(s)


def spec_to_json(spec: NpsemSpec) -> dict:
    return {
        "graph": render_graph(spec.graph),
        "domains": {v: list(d) for v, d in sorted(spec.domains.items())},
        "noise": {
            v: {str(val): _frac_to_str(p) for val, p in pmf}
            for v, pmf in sorted(spec.noise.items())
        },
        "mechanisms": {
            v: {",".join(map(str, key)): val for key, val in sorted(table.items())}
            for v, table in sorted(spec.mechanisms.items())
        },
    }


def spec_from_json(data: dict) -> NpsemSpec:
    graph = parse_graph(data["graph"])
    domains = {v: tuple(d) for v, d in data["domains"].items()}
    noise = {
        v: tuple((int(val), _frac_from_str(p)) for val, p in pmf.items())
        for v, pmf in data["noise"].items()
    }
    mechanisms = {}
    for v, table in data["mechanisms"].items():
        mechanisms[v] = {
            tuple(int(x) for x in key.split(",")): val
            for key, val in table.items()
        }
    return NpsemSpec(graph, domains, noise, mechanisms)


def spec_dumps(spec: NpsemSpec) -> str:
    return json.dumps(spec_to_json(spec), indent=2, sort_keys=True)


def spec_loads(text: str) -> NpsemSpec:
    return spec_from_json(json.loads(text))
