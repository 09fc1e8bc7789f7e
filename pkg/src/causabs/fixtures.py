"""Ready-made models used by the tests, the CLI demo data and the README.

``example1_*`` is the four-variable aggregation example on integer grids:
low ``A=U1, B=U2, C=A+B+U3, D=A+B+U4`` with every ``U`` in {0,1,2} (or a
wider ``range(size)``), high ``X=V1, Y=2X+V2``, abstracted by ``(A+B, C+D)``
and ``(U1+U2, U3+U4)``. The reference spot point ``U=(2,3,1,1)`` only exists
from ``size=4`` upward.

``DIETITIAN_*`` is the diet / cholesterol / heart-disease stream: two
training patients and a third whose total cholesterol rises while heart
risk falls.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

from .abstraction import ScmPair, TauAbstraction
from .data import DataMatrix
from .poset import InterventionPoset, intervention_family
from .scm import (
    EMPTY,
    Equation,
    FiniteScm,
    Intervention,
    equation_from_function,
    map_distribution,
    product_prior,
)


def example1_low(size: int = 3) -> tuple[FiniteScm, InterventionPoset]:
    """Low model with every exogenous on ``range(size)``."""
    grid = tuple(range(size))
    top = size - 1
    exo = [(f"U{k}", grid) for k in range(1, 5)]
    endo = [("A", grid), ("B", grid), ("C", tuple(range(3 * top + 1))), ("D", tuple(range(3 * top + 1)))]
    ranges = dict(exo + endo)
    equations = {
        "A": equation_from_function(["U1"], ranges, lambda u: u),
        "B": equation_from_function(["U2"], ranges, lambda u: u),
        "C": equation_from_function(["A", "B", "U3"], ranges, lambda a, b, u: a + b + u),
        "D": equation_from_function(["A", "B", "U4"], ranges, lambda a, b, u: a + b + u),
    }
    scm = FiniteScm(exo, endo, equations, product_prior(exo))
    poset = intervention_family(scm, [[], ["A", "B"], ["C", "D"], ["A", "B", "C", "D"]])
    return scm, poset


def example1_tau_u(u):
    return (u[0] + u[1], u[2] + u[3])


def example1_high(size: int = 3, y_range=None) -> tuple[FiniteScm, InterventionPoset]:
    """High model whose prior is the exogenous image of the uniform low prior."""
    low, _ = example1_low(size)
    top = size - 1
    sums = tuple(range(2 * top + 1))
    ys = tuple(range(6 * top + 1))
    exo = [("V1", sums), ("V2", sums)]
    endo = [("X", sums), ("Y", tuple(y_range) if y_range is not None else ys)]
    ranges = dict(exo + endo)
    equations = {
        "X": equation_from_function(["V1"], ranges, lambda v: v),
        "Y": equation_from_function(["X", "V2"], ranges, lambda x, v: 2 * x + v),
    }
    prior = map_distribution(low.prior, {u: example1_tau_u(u) for u in low.prior})
    scm = FiniteScm(exo, endo, equations, prior)
    members = [EMPTY]
    members += [Intervention.of(X=x) for x in sums]
    members += [Intervention.of(Y=y) for y in ys]
    members += [Intervention.of(X=x, Y=y) for x in sums for y in ys]
    return scm, InterventionPoset.from_members(members)


def example1_omega(i: Intervention) -> Intervention:
    d = i.as_dict()
    out = {}
    if "A" in d:
        out["X"] = d["A"] + d["B"]
    if "C" in d:
        out["Y"] = d["C"] + d["D"]
    return Intervention.of(out)


def example1_pair(size: int = 3) -> ScmPair:
    return ScmPair(*example1_low(size), *example1_high(size))


def example1_abstraction(pair: ScmPair | None = None) -> TauAbstraction:
    pair = pair or example1_pair()
    return TauAbstraction(
        {v: (v[0] + v[1], v[2] + v[3]) for v in pair.low.endogenous_states()},
        {u: example1_tau_u(u) for u in pair.low.exogenous_states()},
        {i: example1_omega(i) for i in pair.low_poset.members},
    )


# Single-condition mutants of the aggregation example. Each breaks exactly one of
# the four checks; see tests/test_acceptance.py.

def mutant_surjectivity() -> tuple[ScmPair, TauAbstraction]:
    """Y's declared range gains an unreachable 13, so tau misses (x, 13)."""
    low, low_poset = example1_low()
    high, high_poset = example1_high(y_range=range(14))
    pair = ScmPair(low, low_poset, high, high_poset)
    return pair, example1_abstraction(pair)


def mutant_order() -> tuple[ScmPair, TauAbstraction]:
    """High poset keeps only the empty-below-everything relations."""
    pair = example1_pair()
    hp = pair.high_poset
    relation = frozenset({(m, m) for m in hp.members} | {(EMPTY, m) for m in hp.members})
    flat = InterventionPoset(hp.members, relation)
    mutated = ScmPair(pair.low, pair.low_poset, pair.high, flat)
    return mutated, example1_abstraction(mutated)


def mutant_pushforward() -> tuple[ScmPair, TauAbstraction]:
    """Moves 1/81 of high prior mass from (0, 0) to (0, 1)."""
    pair = example1_pair()
    prior = dict(pair.high.prior)
    prior[(0, 0)] -= Fraction(1, 81)
    prior[(0, 1)] += Fraction(1, 81)
    prior = {u: p for u, p in prior.items() if p}
    high = FiniteScm(pair.high.exogenous, pair.high.endogenous, pair.high.equations, prior)
    mutated = ScmPair(pair.low, pair.low_poset, high, pair.high_poset)
    return mutated, example1_abstraction(mutated)


def mutant_commutation() -> tuple[ScmPair, TauAbstraction]:
    """tau_u sends U3+U4 through the swap 0 <-> 4; the priors are untouched."""
    pair = example1_pair()
    ab = example1_abstraction(pair)
    swap = {0: 4, 4: 0}
    tau_u = {u: (v1, swap.get(v2, v2)) for u, (v1, v2) in ab.tau_u.items()}
    return pair, TauAbstraction(ab.tau, tau_u, ab.omega)


def product_tau_mutant() -> tuple[ScmPair, TauAbstraction]:
    """tau = (A+B, min(C*D, 12)); breaks commutation (and, as a side effect, more)."""
    pair = example1_pair()
    ab = example1_abstraction(pair)
    tau = {v: (v[0] + v[1], min(v[2] * v[3], 12)) for v in pair.low.endogenous_states()}
    return pair, TauAbstraction(tau, ab.tau_u, ab.omega)


MUTANTS = {
    "surjectivity": mutant_surjectivity,
    "order": mutant_order,
    "pushforward": mutant_pushforward,
    "commutation": mutant_commutation,
}


def copy_chain() -> tuple[FiniteScm, InterventionPoset]:
    """U1 uniform on {0,1}; A = U1; B = A."""
    exo = [("U1", (0, 1))]
    endo = [("A", (0, 1)), ("B", (0, 1))]
    ranges = dict(exo + endo)
    equations = {
        "A": equation_from_function(["U1"], ranges, lambda u: u),
        "B": equation_from_function(["A"], ranges, lambda a: a),
    }
    scm = FiniteScm(exo, endo, equations, product_prior(exo))
    return scm, intervention_family(scm, [[], ["A"], ["A", "B"]])


def xor_pair() -> ScmPair:
    """Low XOR chain over two bits against a two-state constant high model.

    No candidate abstraction exists: every low state is reachable without
    intervention while the high model never leaves 0.
    """
    exo = [("U1", (0, 1)), ("U2", (0, 1))]
    endo = [("A", (0, 1)), ("B", (0, 1))]
    ranges = dict(exo + endo)
    low = FiniteScm(exo, endo, {
        "A": equation_from_function(["U1"], ranges, lambda u: u),
        "B": equation_from_function(["A", "U2"], ranges, lambda a, u: a ^ u),
    }, product_prior(exo))
    high = FiniteScm([("W", (0,))], [("Z", (0, 1))], {"Z": Equation.constant(0)},
                     {(0,): Fraction(1)})
    return ScmPair(low, InterventionPoset.trivial(), high, InterventionPoset.trivial())


DIETITIAN_COLUMNS = ("DP", "HL", "LL", "TC", "HD")
DIETITIAN_ROWS = (
    (1, 0, 0, 0, 0),
    (0, 0, 1, 1, 1),
    (0, 1, 0, 1, 0),
)
DIETITIAN_FOURTH = (1, 0, 0, 0, 0)
DIETITIAN_GRAPH = {"DP": [], "TC": ["DP"], "HD": ["TC"]}
DIETITIAN_TARGET = "HD"
DIETITIAN_CAUSE = "DP"



def write_files(directory) -> dict[str, Path]:
    """Write the fixtures as CLI input files; returns name -> path."""
    from .formats import abstraction_to_json, dump_json, graph_to_json, scm_to_json

    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    pair = example1_pair()
    copy, copy_poset = copy_chain()
    xor = xor_pair()
    cyclic = FiniteScm(
        [("U", (0, 1))], [("A", (0, 1)), ("B", (0, 1))],
        {"A": Equation(("B",), {(0,): 0, (1,): 1}), "B": Equation(("A",), {(0,): 0, (1,): 1})},
        {(0,): Fraction(1, 2), (1,): Fraction(1, 2)},
    )
    base = DataMatrix(DIETITIAN_COLUMNS, DIETITIAN_ROWS[:2])
    docs = {
        "example1_low.json": scm_to_json(pair.low, pair.low_poset),
        "example1_high.json": scm_to_json(pair.high, pair.high_poset),
        "example1_abstraction.json": abstraction_to_json(example1_abstraction(pair)),
        "example1_mutant_abstraction.json": abstraction_to_json(mutant_commutation()[1]),
        "copy_chain.json": scm_to_json(copy, copy_poset),
        "cyclic.json": scm_to_json(cyclic),
        "xor_low.json": scm_to_json(xor.low, xor.low_poset),
        "xor_high.json": scm_to_json(xor.high, xor.high_poset),
        "dietitian_graph.json": graph_to_json(DIETITIAN_GRAPH, DIETITIAN_TARGET, DIETITIAN_CAUSE),
        "search_partition.json": {"search": {"mode": "partition", "budget": 1000000, "max_high_vars": None}},
        "search_table.json": {"search": {"mode": "table", "budget": 1000000}},
    }
    paths = {}
    for name, doc in docs.items():
        paths[name] = out / name
        paths[name].write_text(dump_json(doc), encoding="utf-8")
    csvs = {
        "dietitian_base.csv": base,
        "dietitian_stream.csv": DataMatrix(DIETITIAN_COLUMNS, DIETITIAN_ROWS[2:] + (DIETITIAN_FOURTH,)),
        "dietitian_replay.csv": DataMatrix(DIETITIAN_COLUMNS, DIETITIAN_ROWS[:2]),
        "dietitian_empty.csv": DataMatrix(DIETITIAN_COLUMNS, ()),
    }
    for name, data in csvs.items():
        paths[name] = out / name
        paths[name].write_text(data.to_csv(), encoding="utf-8")
    return paths


if __name__ == "__main__":
    import sys

    for p in write_files(sys.argv[1] if len(sys.argv) > 1 else "data").values():
        print(p)
