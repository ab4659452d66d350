"""Path sets from treatment to outcome, and the recanting criteria.

A path is a tuple of node names starting at the treatment and ending at
the outcome; a path set is the query object for path-specific effects.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .graphs import Admg, GraphError, districts, induced_subgraph, ystar


class PathError(ValueError):
    """Invalid path or path-set for the given graph."""


Path = tuple[str, ...]


def pathset_to_json(ps: "PathSet") -> dict:
    return {
        "treatment": ps.treatment,
        "outcome": ps.outcome,
        "paths": [list(p) for p in sorted(ps.paths)],
    }


def pathset_from_json(data: dict) -> "PathSet":
    return PathSet(
        data["treatment"],
        data["outcome"],
        frozenset(tuple(p) for p in data["paths"]),
    )


@dataclass(frozen=True)
class PathSet:
    treatment: str
    outcome: str
    paths: frozenset[Path] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "paths", frozenset(tuple(p) for p in self.paths))
        for p in self.paths:
            if len(p) < 2 or p[0] != self.treatment or p[-1] != self.outcome:
                raise PathError(f"path {p} must run from treatment to outcome")
            if len(set(p)) != len(p):
                raise PathError(f"path {p} repeats a node")
            if self.treatment in p[1:]:
                raise PathError(f"path {p} revisits the treatment")

    def sorted_paths(self) -> list[Path]:
        return sorted(self.paths)

    def entry_nodes(self) -> frozenset[str]:
        """Second node of every path: the treatment children used by the set."""
        return frozenset(p[1] for p in self.paths)


def validate_paths(g: Admg, ps: PathSet) -> None:
    """Check every consecutive pair is a directed edge of g."""
    for p in ps.paths:
        for tail, head in zip(p, p[1:]):
            if (tail, head) not in g.directed_edges:
                raise PathError(f"path {p} uses missing edge {tail}->{head}")


def enumerate_proper_paths(g: Admg, a: str, y: str) -> PathSet:
    """All directed paths from a to y; empty if y is unreachable."""
    for v in (a, y):
        if v not in g.nodes:
            raise GraphError(f"unknown node {v}")
    found: set[Path] = set()

    def walk(prefix: list[str]):
        v = prefix[-1]
        if v == y:
            found.add(tuple(prefix))
            return
        for c in sorted(g.children(v)):
            if c not in prefix:
                walk(prefix + [c])

    if a != y:
        walk([a])
    return PathSet(a, y, frozenset(found))


def complement(all_paths: PathSet, pi: PathSet) -> PathSet:
    if (pi.treatment, pi.outcome) != (all_paths.treatment, all_paths.outcome):
        raise PathError("path sets disagree on treatment/outcome roles")
    unknown = pi.paths - all_paths.paths
    if unknown:
        raise PathError(f"unknown path(s) {sorted(unknown)}")
    return PathSet(pi.treatment, pi.outcome, all_paths.paths - pi.paths)


def recanting_witness(g: Admg, pi: PathSet) -> str | None:
    """A treatment child carrying both a pi-path and a complement path.

    Only meaningful on graphs without bidirected edges; the least witness
    by name is returned when several exist.
    """
    if g.bidirected_edges:
        raise GraphError("recanting_witness requires a bidirected-free graph; "
                         "use recanting_district")
    validate_paths(g, pi)
    pibar = complement(enumerate_proper_paths(g, pi.treatment, pi.outcome), pi)
    witnesses = pi.entry_nodes() & pibar.entry_nodes()
    return min(witnesses) if witnesses else None


def _ystar_districts(g: Admg, treatment: str, outcome: str):
    stars = ystar(g, treatment, outcome)
    return districts(induced_subgraph(g, stars))


def recanting_district(g: Admg, pi: PathSet) -> frozenset[str] | None:
    """A district entered directly from the treatment by both path sets.

    Districts are taken in the outcome-ancestor subgraph; the least
    conflicted district (by sorted member names) is returned.
    """
    validate_paths(g, pi)
    pibar = complement(enumerate_proper_paths(g, pi.treatment, pi.outcome), pi)
    pi_entries = pi.entry_nodes()
    pibar_entries = pibar.entry_nodes()
    conflicted = [
        d
        for d in _ystar_districts(g, pi.treatment, pi.outcome)
        if (d & pi_entries) and (d & pibar_entries)
    ]
    if not conflicted:
        return None
    return min(conflicted, key=lambda d: sorted(d))


ASSIGN_A = "a"
ASSIGN_A_PRIME = "a_prime"
ASSIGN_NONE = "none"


@dataclass(frozen=True)
class DistrictAssignment:
    district: frozenset[str]
    value: str  # one of ASSIGN_A, ASSIGN_A_PRIME, ASSIGN_NONE


def district_assignments(g: Admg, pi: PathSet) -> list[DistrictAssignment]:
    """Per-district treatment label induced by the path split.

    Requires the absence of a recanting district; a conflict raises.
    Districts come back sorted by member names.
    """
    conflict = recanting_district(g, pi)
    if conflict is not None:
        raise GraphError(
            f"recanting district {{{', '.join(sorted(conflict))}}} "
            "makes assignments ill-defined"
        )
    pibar = complement(enumerate_proper_paths(g, pi.treatment, pi.outcome), pi)
    pi_entries = pi.entry_nodes()
    pibar_entries = pibar.entry_nodes()
    out = []
    for d in sorted(_ystar_districts(g, pi.treatment, pi.outcome), key=sorted):
        if d & pi_entries:
            value = ASSIGN_A
        elif d & pibar_entries:
            value = ASSIGN_A_PRIME
        else:
            value = ASSIGN_NONE
        out.append(DistrictAssignment(d, value))
    return out
