"""Exhaustive search for abstractions.

Two candidate spaces:

``table``
    every surjective ``tau`` table over the joint low states (at most
    :data:`TABLE_CAP` of them), every surjective ``tau_u`` table, and every
    surjective, order-preserving ``omega``.
``partition``
    low variables are grouped (or dropped) and each group is summed into one
    high variable; exogenous variables are grouped the same way and
    ``omega`` is the intervention map the grouping induces.

Candidates come out in a fixed lexicographic order and a search returns the
first one that verifies, so results do not depend on thread scheduling.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .abstraction import (
    PairTables,
    ScmPair,
    TauAbstraction,
    check_commutation,
    check_order_preserving,
    check_pushforward,
    check_surjectivity,
    verify,
)
from .data import DataMatrix, SchemaError, majority_equation
from .scm import (
    EMPTY,
    Assignment,
    FiniteScm,
    Intervention,
    Range,
    map_distribution,
    solve,
)

TABLE_CAP = 16
DEFAULT_BUDGET = 10**6
MODES = ("partition", "table")


class CapacityError(ValueError):
    """The requested space is too large for unrestricted table enumeration."""


class NoCandidateError(ValueError):
    """The candidate space is empty."""


@dataclass(frozen=True)
class CandidateSpace:
    mode: str = "partition"
    budget: int = DEFAULT_BUDGET
    max_high_vars: int | None = None

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.budget <= 0:
            raise ValueError("budget must be positive")
        if self.max_high_vars is not None and self.max_high_vars <= 0:
            raise ValueError("max_high_vars must be positive")


@dataclass
class SearchLog:
    examined: int = 0
    rejections: dict[str, int] = field(default_factory=dict)
    budget_exhausted: bool = False
    found: bool = False

    def reject(self, reason: str) -> None:
        self.rejections[reason] = self.rejections.get(reason, 0) + 1

    def to_json(self) -> dict:
        return {
            "examined": self.examined,
            "rejections": dict(sorted(self.rejections.items())),
            "budget_exhausted": self.budget_exhausted,
            "found": self.found,
        }


def surjections(n: int, k: int) -> Iterator[tuple[int, ...]]:
    """All onto maps ``range(n) -> range(k)`` as tuples, in lexicographic order."""
    if k > n or (k == 0 and n > 0):
        return
    table = [0] * n
    hits = [0] * k

    def fill(pos: int, missing: int):
        if pos == n:
            yield tuple(table)
            return
        slots_left = n - pos
        for x in range(k):
            newly = hits[x] == 0
            if missing - newly > slots_left - 1:
                continue
            table[pos] = x
            hits[x] += 1
            yield from fill(pos + 1, missing - newly)
            hits[x] -= 1

    yield from fill(0, k)


def set_partitions(n: int) -> Iterator[tuple[int, ...]]:
    """Set partitions of ``range(n)`` as restricted growth strings, lexicographically."""
    if n == 0:
        yield ()
        return

    def grow(prefix: list[int], top: int):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for b in range(top + 2):
            prefix.append(b)
            yield from grow(prefix, max(top, b))
            prefix.pop()

    yield from grow([0], 0)


def _sum_image(ranges: Sequence[Range]) -> set[int]:
    image = {0}
    for rng in ranges:
        image = {a + b for a in image for b in rng}
    return image


def _grouped_sum_maps(low_decl, high_decl) -> Iterator[tuple[tuple[int, ...], dict]]:
    """Group assignments (value ``k`` = dropped) whose sums land exactly on the high ranges."""
    n, k = len(low_decl), len(high_decl)
    low_states = list(itertools.product(*(rng for _, rng in low_decl)))
    for assign in itertools.product(range(k + 1), repeat=n):
        groups = [[p for p in range(n) if assign[p] == h] for h in range(k)]
        if any(not g for g in groups):
            continue
        if any(_sum_image([low_decl[p][1] for p in g]) != set(high_decl[h][1])
               for h, g in enumerate(groups)):
            continue
        table = {s: tuple(sum(s[p] for p in g) for g in groups) for s in low_states}
        yield assign, table


def _induced_omega(pair: ScmPair, assign: tuple[int, ...]) -> dict | None:
    low_ids = pair.low.endogenous_ids
    high_ids = pair.high.endogenous_ids
    groups = [[low_ids[p] for p in range(len(low_ids)) if assign[p] == h] for h in range(len(high_ids))]
    omega = {}
    for i in pair.low_poset.members:
        fixed = i.as_dict()
        out = {}
        for h, g in enumerate(groups):
            covered = [v for v in g if v in fixed]
            if not covered:
                continue
            if len(covered) != len(g):
                return None
            out[high_ids[h]] = sum(fixed[v] for v in g)
        j = Intervention.of(out)
        if j not in pair.high_poset:
            return None
        omega[i] = j
    return omega


def _check_table_capacity(pair: ScmPair) -> None:
    n_v = len(pair.low.endogenous_states())
    n_u = len(pair.low.exogenous_states())
    if n_v > TABLE_CAP or n_u > TABLE_CAP:
        raise CapacityError(
            f"table mode enumerates at most {TABLE_CAP} joint low states "
            f"(endogenous {n_v}, exogenous {n_u}); use partition mode"
        )


def _structurals(pair: ScmPair, space: CandidateSpace, log: SearchLog):
    """(tau, tau_u, omega-or-None) in canonical order, stopping at the budget."""
    if space.mode == "table":
        _check_table_capacity(pair)
        low_v, high_v = pair.low.endogenous_states(), pair.high.endogenous_states()
        low_u, high_u = pair.low.exogenous_states(), pair.high.exogenous_states()
        tau_us = [dict(zip(low_u, (high_u[x] for x in s)))
                  for s in surjections(len(low_u), len(high_u))]
        gen = (
            (dict(zip(low_v, (high_v[x] for x in t))), tau_u, None)
            for t in surjections(len(low_v), len(high_v))
            for tau_u in tau_us
        )
    else:
        tau_us = [table for _, table in _grouped_sum_maps(pair.low.exogenous, pair.high.exogenous)]

        def partitioned():
            for assign, tau in _grouped_sum_maps(pair.low.endogenous, pair.high.endogenous):
                omega = _induced_omega(pair, assign)
                for tau_u in tau_us:
                    yield tau, tau_u, omega

        gen = partitioned()
    for item in gen:
        if log.examined >= space.budget:
            log.budget_exhausted = True
            return
        log.examined += 1
        yield item


def _omega_choices(pair: ScmPair, allowed: Sequence[Sequence[int]] | None = None
                   ) -> Iterator[tuple[int, ...]]:
    """Surjective, order-preserving omega index tuples in lexicographic order."""
    low = pair.low_poset.members
    high = pair.high_poset.members
    n, k = len(low), len(high)
    if k > n:
        return
    choices = allowed if allowed is not None else [range(k)] * n
    below = [[b for b in range(a) if pair.low_poset.leq(low[b], low[a])] for a in range(n)]
    above = [[b for b in range(a) if pair.low_poset.leq(low[a], low[b])] for a in range(n)]
    leq_h = [[pair.high_poset.leq(x, y) for y in high] for x in high]
    pick = [0] * n
    hits = [0] * k

    def fill(a: int, missing: int):
        if a == n:
            yield tuple(pick)
            return
        for x in choices[a]:
            newly = hits[x] == 0
            if missing - newly > n - a - 1:
                continue
            if any(not leq_h[pick[b]][x] for b in below[a]):
                continue
            if any(not leq_h[x][pick[b]] for b in above[a]):
                continue
            pick[a] = x
            hits[x] += 1
            yield from fill(a + 1, missing - newly)
            hits[x] -= 1

    yield from fill(0, k)


def enumerate_candidates(pair: ScmPair, space: CandidateSpace,
                         log: SearchLog | None = None) -> Iterator[TauAbstraction]:
    """Every candidate triple in canonical order.

    The budget counts (tau, tau_u) combinations; in table mode each one is
    followed by all of its surjective order-preserving omegas.
    """
    log = log if log is not None else SearchLog()
    members = pair.low_poset.members
    high = pair.high_poset.members
    for tau, tau_u, omega in _structurals(pair, space, log):
        if space.mode == "partition":
            if omega is None:
                log.reject("omega")
                continue
            yield TauAbstraction(tau, tau_u, omega)
            continue
        for pick in _omega_choices(pair):
            yield TauAbstraction(tau, tau_u, {i: high[x] for i, x in zip(members, pick)})


def _first_failure(pair: ScmPair, cand: TauAbstraction, tables: PairTables) -> str | None:
    if not check_surjectivity(pair, cand).passed:
        return "surjectivity"
    if not check_order_preserving(pair, cand).passed:
        return "order"
    if not check_pushforward(pair, cand, tables).passed:
        return "pushforward"
    if not check_commutation(pair, cand, tables).passed:
        return "commutation"
    return None


class _TableResolver:
    """Finds, for one (tau, tau_u), the first omega that makes the triple verify."""

    def __init__(self, pair: ScmPair, tables: PairTables):
        self.pair = pair
        self.tables = tables
        self.low_i = pair.low_poset.members
        self.high_i = pair.high_poset.members
        self.high_push = [tables.high_pushforward(j) for j in self.high_i]
        self.high_solve = [tables.high_solutions(j) for j in self.high_i]
        self.low_solve = [tables.low_solutions(i) for i in self.low_i]
        self.low_push = [tables.low_pushforward(i) for i in self.low_i]

    def resolve(self, tau, tau_u) -> tuple[TauAbstraction | None, str | None]:
        if len(set(tau.values())) < len(self.pair.high.endogenous_states()):
            return None, "surjectivity"
        allowed = []
        mapped_u = [tau_u[u] for u in self.tables.low_u]
        for a in range(len(self.low_i)):
            image = map_distribution(self.low_push[a], tau)
            by_push = [x for x in range(len(self.high_i)) if self.high_push[x] == image]
            if not by_push:
                return None, "pushforward"
            mapped = [tau[v] for v in self.low_solve[a]]
            ok = [x for x in by_push
                  if all(self.high_solve[x][hu] == w for hu, w in zip(mapped_u, mapped))]
            if not ok:
                return None, "commutation"
            allowed.append(ok)
        for pick in _omega_choices(self.pair, allowed):
            omega = {i: self.high_i[x] for i, x in zip(self.low_i, pick)}
            return TauAbstraction(tau, tau_u, omega), None
        return None, "omega"


def find_abstraction(pair: ScmPair, space: CandidateSpace, workers: int = 1,
                     log: SearchLog | None = None) -> TauAbstraction | None:
    """First candidate in canonical order that verifies, or None.

    ``workers > 1`` checks batches of candidates on a thread pool; the answer
    is still the enumeration-minimal one.
    """
    log = log if log is not None else SearchLog()
    tables = PairTables(pair)
    if space.mode == "table":
        resolver = _TableResolver(pair, tables)

        def attempt(item):
            tau, tau_u, _ = item
            return resolver.resolve(tau, tau_u)
    else:
        def attempt(item):
            tau, tau_u, omega = item
            if omega is None:
                return None, "omega"
            cand = TauAbstraction(tau, tau_u, omega)
            reason = _first_failure(pair, cand, tables)
            return (cand, None) if reason is None else (None, reason)

    stream = _structurals(pair, space, log)
    if workers <= 1:
        results = map(attempt, stream)
        found = _first_hit(results, log)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            found = None
            while found is None:
                batch = list(itertools.islice(stream, workers * 8))
                if not batch:
                    break
                found = _first_hit(pool.map(attempt, batch), log)
    if found is not None:
        report = verify(pair, found, tables)
        assert report.passed, report.failed_conditions()
        log.found = True
    return found


def _first_hit(results, log: SearchLog) -> TauAbstraction | None:
    for cand, reason in results:
        if cand is not None:
            return cand
        log.reject(reason)
    return None


def to_indices(pair: ScmPair, ab: TauAbstraction) -> tuple[tuple[int, ...], ...]:
    """Index-table form of a candidate, the key of the canonical order."""
    high_v = {v: k for k, v in enumerate(pair.high.endogenous_states())}
    high_u = {u: k for k, u in enumerate(pair.high.exogenous_states())}
    return (
        tuple(high_v[ab.tau[v]] for v in pair.low.endogenous_states()),
        tuple(high_u[ab.tau_u[u]] for u in pair.low.exogenous_states()),
        tuple(pair.high_poset.index(ab.omega[i]) for i in pair.low_poset.members),
    )


# Data-driven fitting of a high-level model.

UNIT = "_U"


class RowConsistency:
    """Number of rows whose target the model predicts from the row's other values."""

    name = "row-consistency"

    def __call__(self, scm: FiniteScm, blocks: Sequence[tuple[str, Sequence[str]]],
                 data: DataMatrix, target: str) -> int:
        (u,) = scm.support()
        ids = scm.endogenous_ids
        t = ids.index(target)
        hits = 0
        for record in data.records():
            mapped = {name: sum(record[c] for c in cols) for name, cols in blocks}
            forced = Intervention.of({k: v for k, v in mapped.items() if k != target})
            hits += solve(scm, u, forced)[t] == mapped[target]
        return hits


LOSSES = {RowConsistency.name: RowConsistency}


@dataclass(frozen=True)
class HighLevelFit:
    scm: FiniteScm
    abstraction: TauAbstraction
    score: int
    blocks: tuple[tuple[str, tuple[str, ...]], ...]
    mediators: tuple[tuple[str, ...], ...]
    examined: int = 0
    budget_exhausted: bool = False

    def summary(self) -> dict:
        return {
            "variables": {name: list(cols) for name, cols in self.blocks},
            "mediators": [list(m) for m in self.mediators],
            "equations": {
                child: {"parents": list(eq.parents),
                        "table": [{"in": list(k), "out": v} for k, v in sorted(eq.table.items())]}
                for child, eq in ((c, self.scm.equations[c]) for c in self.scm.endogenous_ids)
            },
        }


def _build_high(data: DataMatrix, target: str, cause: str | None,
                groups: Sequence[Sequence[str]]) -> tuple[FiniteScm, tuple]:
    blocks: list[tuple[str, tuple[str, ...]]] = []
    if cause is not None:
        blocks.append((cause, (cause,)))
    mediator_names = []
    for g in groups:
        name = "+".join(g)
        blocks.append((name, tuple(g)))
        mediator_names.append(name)
    blocks.append((target, (target,)))
    if len({name for name, _ in blocks} | {UNIT}) != len(blocks) + 1:
        raise SchemaError(f"high-level variable names collide (or use the reserved {UNIT!r})")

    records = data.records()
    values = {name: [sum(r[c] for c in cols) for r in records] for name, cols in blocks}
    ranges = {name: tuple(range(len(cols) + 1)) for name, cols in blocks}
    equations = {}
    if cause is not None:
        equations[cause] = majority_equation((), (), ranges[cause], [((), x) for x in values[cause]])
    for name in mediator_names:
        parents = (cause,) if cause is not None else ()
        obs = [(tuple(values[p][k] for p in parents), values[name][k]) for k in range(len(records))]
        equations[name] = majority_equation(parents, [ranges[p] for p in parents], ranges[name], obs)
    parents = tuple(mediator_names) if mediator_names else ((cause,) if cause is not None else ())
    obs = [(tuple(values[p][k] for p in parents), values[target][k]) for k in range(len(records))]
    equations[target] = majority_equation(parents, [ranges[p] for p in parents], ranges[target], obs)

    endo = [(name, ranges[name]) for name, _ in blocks]
    scm = FiniteScm([(UNIT, (0,))], endo, equations, {(0,): Fraction(1)})
    return scm, tuple(blocks)


def _data_tau(data: DataMatrix, blocks) -> dict[Assignment, Assignment]:
    pos = {c: k for k, c in enumerate(data.columns)}
    return {
        s: tuple(sum(s[pos[c]] for c in cols) for _, cols in blocks)
        for s in itertools.product((0, 1), repeat=len(data.columns))
    }


def fit_high_level(data: DataMatrix, target: str, space: CandidateSpace | None = None,
                   loss=None, cause: str | None = None) -> HighLevelFit:
    """Best-scoring high-level model whose variables aggregate the data columns.

    The target (and the cause, when given) stay single variables; every other
    column is assigned to exactly one summed mediator block, enumerated over
    all set partitions. The target's mechanism is fitted by majority vote on
    the mediator values. Highest score wins, then fewer high-level variables,
    then the earlier partition.
    """
    space = space or CandidateSpace()
    loss = loss or RowConsistency()
    if not len(data):
        raise NoCandidateError("no data rows to fit")
    if space.mode != "partition":
        raise NoCandidateError("data fitting enumerates partition-structured candidates only")
    for name in [target] + ([cause] if cause is not None else []):
        if name not in data.columns:
            raise SchemaError(f"unknown column {name!r}")
    mediators = [c for c in data.columns if c not in (target, cause)]

    best = None
    examined = 0
    exhausted = False
    for index, rgs in enumerate(set_partitions(len(mediators))):
        groups = [[m for m, b in zip(mediators, rgs) if b == k] for k in range(max(rgs, default=-1) + 1)]
        n_vars = len(groups) + 1 + (cause is not None)
        if space.max_high_vars is not None and n_vars > space.max_high_vars:
            continue
        if examined >= space.budget:
            exhausted = True
            break
        examined += 1
        scm, blocks = _build_high(data, target, cause, groups)
        score = loss(scm, blocks, data, target)
        key = (-score, n_vars, index)
        if best is None or key < best[0]:
            best = (key, scm, blocks, tuple(tuple(g) for g in groups))
    if best is None:
        raise NoCandidateError("no candidate fits within max_high_vars")
    _, scm, blocks, groups = best
    abstraction = TauAbstraction(_data_tau(data, blocks), {(0,): (0,)}, {EMPTY: EMPTY})
    return HighLevelFit(scm, abstraction, -best[0][0], blocks, groups, examined, exhausted)
