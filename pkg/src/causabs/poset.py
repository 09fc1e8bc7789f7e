"""Admissible intervention sets with an explicit partial order."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .scm import EMPTY, FiniteScm, Intervention, check_intervention, iter_interventions


def refines(a: Intervention, b: Intervention) -> bool:
    """Subset-with-agreement order: ``b`` fixes everything ``a`` fixes, the same way."""
    fixed = b.as_dict()
    return all(fixed.get(k, object()) == v for k, v in a.assignments)


@dataclass(frozen=True)
class InterventionPoset:
    members: tuple[Intervention, ...]
    relation: frozenset[tuple[Intervention, Intervention]]

    @classmethod
    def from_members(cls, members: Iterable[Intervention]) -> "InterventionPoset":
        """Poset ordered by :func:`refines`. Duplicates are dropped, first kept."""
        members = tuple(dict.fromkeys(members))
        relation = frozenset((a, b) for a in members for b in members if refines(a, b))
        return cls(members, relation)

    @classmethod
    def trivial(cls) -> "InterventionPoset":
        return cls.from_members([EMPTY])

    def leq(self, a: Intervention, b: Intervention) -> bool:
        return (a, b) in self.relation

    def index(self, i: Intervention) -> int:
        return self._index[i]

    def __contains__(self, i: object) -> bool:
        return i in self._index

    def __iter__(self):
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    @cached_property
    def _index(self) -> dict[Intervention, int]:
        return {m: k for k, m in enumerate(self.members)}


def poset_problems(poset: InterventionPoset) -> list[str]:
    """Order-axiom violations found by enumeration; empty when ``poset`` is a valid poset."""
    out = []
    members = poset.members
    if len(set(members)) != len(members):
        out.append("duplicate members")
    known = set(members)
    for a, b in sorted(poset.relation):
        if a not in known or b not in known:
            out.append(f"relation pair ({a}, {b}) mentions a non-member")
    up: dict[Intervention, set[Intervention]] = {m: set() for m in members}
    for a, b in poset.relation:
        if a in up and b in up:
            up[a].add(b)
    for a in members:
        if a not in up[a]:
            out.append(f"not reflexive at {a}")
    for a in members:
        for b in sorted(up[a]):
            if a < b and a in up[b]:
                out.append(f"not antisymmetric: {a} and {b}")
    for a in members:
        for b in sorted(up[a]):
            missing = up[b] - up[a]
            if missing:
                out.append(f"not transitive: {a} <= {b} <= {min(missing)}")
    if EMPTY not in known:
        out.append("missing the empty intervention")
    else:
        for m in members:
            if not poset.leq(EMPTY, m):
                out.append(f"empty intervention is not below {m}")
    return out


def check_poset_for(scm: FiniteScm, poset: InterventionPoset) -> list[str]:
    """Poset problems plus members that are not valid interventions on ``scm``."""
    out = poset_problems(poset)
    for m in poset.members:
        try:
            check_intervention(scm, m)
        except ValueError as exc:
            out.append(str(exc))
    return out


def intervention_family(scm: FiniteScm, target_sets: Sequence[Sequence[str]]) -> InterventionPoset:
    """Every value assignment to each listed target set, ordered by refinement.

    An empty target set contributes the empty intervention.
    """
    members: list[Intervention] = []
    for targets in target_sets:
        members.extend(iter_interventions(scm, list(targets)))
    if EMPTY not in members:
        members.insert(0, EMPTY)
    return InterventionPoset.from_members(members)
