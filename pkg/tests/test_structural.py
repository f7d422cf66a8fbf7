import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gcskernel import (
    EquationGraph,
    add_anchors,
    build_graphs,
    compile_model,
    counting_state,
    dm_decompose,
    linear_system,
    max_matching,
    scc_plan,
)
from gcskernel import zoo
from gcskernel.model import Model


def graph_of(system) -> EquationGraph:
    return EquationGraph(
        system.n_residuals, system.n_variables,
        tuple(tuple(sorted(r.expression.variables())) for r in system.residuals))


def random_graph(rng, max_side=8) -> EquationGraph:
    m = int(rng.integers(1, max_side + 1))
    n = int(rng.integers(1, max_side + 1))
    adj = tuple(
        tuple(sorted(int(v) for v in np.flatnonzero(rng.random(n) < 0.4)))
        for _ in range(m))
    return EquationGraph(m, n, adj)


def brute_force_matching_size(g: EquationGraph) -> int:
    best = [0]

    def grow(e, used, count):
        if e == g.n_equations:
            best[0] = max(best[0], count)
            return
        if count + (g.n_equations - e) <= best[0]:
            return
        grow(e + 1, used, count)
        for v in g.adjacency[e]:
            if v not in used:
                grow(e + 1, used | {v}, count + 1)

    grow(0, frozenset(), 0)
    return best[0]


def shuffled_matching(g: EquationGraph, rng) -> dict[int, int]:
    """Another maximum matching, found with a randomized augmenting order."""
    order = list(range(g.n_equations))
    rng.shuffle(order)
    match_var: dict[int, int] = {}
    match_eq: dict[int, int] = {}

    def augment(e, seen):
        neighbors = list(g.adjacency[e])
        rng.shuffle(neighbors)
        for v in neighbors:
            if v in seen:
                continue
            seen.add(v)
            owner = match_var.get(v)
            if owner is None or augment(owner, seen):
                match_var[v] = e
                match_eq[e] = v
                return True
        return False

    for e in order:
        augment(e, set())
    return match_eq


# --- graphs ----------------------------------------------------------------

def test_triangle_equation_graph_shape():
    m = zoo.triangle_model()
    s = compile_model(m)
    eg, cg = build_graphs(s, m)
    assert eg.n_equations == 7
    assert eg.n_variables == 10
    assert cg.entity_ids == ("P1", "P2", "P3", "L1", "L2")
    assert cg.entity_dof["L1"] == 2


def test_empty_graphs():
    m = Model(2, (), ())
    s = compile_model(m)
    eg, cg = build_graphs(s, m)
    assert eg.n_equations == 0 and eg.n_variables == 0
    assert cg.entity_ids == ()


def test_three_distance_anchored_graph_edges():
    m = zoo.three_distances_model()
    s = add_anchors(compile_model(m), m)
    eg, _ = build_graphs(s, m)
    assert eg.n_equations == 6 and eg.n_variables == 6
    # occurrence-based edges: 4 + 4 + 4 per distance row, 1 + 1 + 2 anchors
    assert sum(len(vs) for vs in eg.adjacency) == 16


def test_graph_dump_deterministic():
    m = zoo.three_distances_model()
    s = compile_model(m)
    eg, cg = build_graphs(s, m)
    assert eg.dump().splitlines()[0] == "equations 3 variables 6"
    assert eg.dump() == eg.dump()
    assert "e1[doc=1]: P1 P2" in cg.dump()


# --- matching ----------------------------------------------------------------

def test_matching_three_distance_perfect():
    m = zoo.three_distances_model()
    s = add_anchors(compile_model(m), m)
    eg, _ = build_graphs(s, m)
    match = max_matching(eg)
    assert len(match) == 6


def test_matching_empty_graph():
    assert max_matching(EquationGraph(0, 0, ())) == {}


def test_matching_with_duplicated_equation():
    m = zoo.three_distances_model()
    s = add_anchors(compile_model(m), m)
    eg, _ = build_graphs(s, m)
    adj = eg.adjacency + (eg.adjacency[0],)  # duplicate one distance row
    bigger = EquationGraph(7, 6, adj)
    match = max_matching(bigger)
    assert len(match) == 6
    unmatched = set(range(7)) - set(match)
    assert len(unmatched) == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_matching_is_maximum(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng)
    assert len(max_matching(g)) == brute_force_matching_size(g)


# --- Dulmage-Mendelsohn -------------------------------------------------------

def test_dm_well_constrained_triangle():
    m = zoo.triangle_model()
    s = add_anchors(compile_model(m), m)
    eg, _ = build_graphs(s, m)
    dm = dm_decompose(eg)
    assert not dm.over_equations and not dm.under_equations
    assert len(dm.well_equations) == 10 and len(dm.well_variables) == 10


def test_dm_mixed_example():
    s = linear_system([[1, 0, 0], [1, 0, 0], [0, 1, 1]], [0, 1, 1])
    dm = dm_decompose(graph_of(s))
    assert dm.over_equations == {0, 1} and dm.over_variables == {0}
    assert dm.under_equations == {2} and dm.under_variables == {1, 2}
    assert not dm.well_equations


def test_dm_saturation_criterion():
    # only unsaturated equations -> everything lands in the over part
    g = EquationGraph(3, 1, ((0,), (0,), (0,)))
    dm = dm_decompose(g)
    assert dm.over_equations == {0, 1, 2} and dm.over_variables == {0}
    # only unsaturated variables -> everything lands in the under part
    g = EquationGraph(1, 3, ((0, 1, 2),))
    dm = dm_decompose(g)
    assert dm.under_variables == {0, 1, 2} and dm.under_equations == {0}


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_dm_partition_laws(seed):
    rng = np.random.default_rng(seed)
    g = random_graph(rng)
    dm = dm_decompose(g)
    eqs = [dm.over_equations, dm.well_equations, dm.under_equations]
    vars_ = [dm.over_variables, dm.well_variables, dm.under_variables]
    assert sum(len(s) for s in eqs) == g.n_equations
    assert sum(len(s) for s in vars_) == g.n_variables
    assert not (dm.over_equations & dm.under_equations)
    if dm.over_equations:
        assert len(dm.over_equations) > len(dm.over_variables)
    if dm.under_variables:
        assert len(dm.under_variables) > len(dm.under_equations)
    well_match = {e: v for e, v in dm.matching.items() if e in dm.well_equations}
    assert len(well_match) == len(dm.well_equations)
    assert set(well_match.values()) == set(dm.well_variables)
    # canonical: a different maximum matching gives the identical partition
    other = shuffled_matching(g, np.random.default_rng(seed + 1))
    assert len(other) == len(dm.matching)
    dm2 = dm_decompose(g, other)
    assert dm2.over_equations == dm.over_equations
    assert dm2.under_variables == dm.under_variables
    assert dm2.well_equations == dm.well_equations


# --- solve plan ----------------------------------------------------------------

def test_scc_plan_anchored_three_distances():
    m = zoo.three_distances_model()
    s = add_anchors(compile_model(m), m)
    eg, _ = build_graphs(s, m)
    plan = scc_plan(eg, max_matching(eg))
    # anchors come first as univariate blocks covering x1, y1, y2
    first_vars = set()
    for eqs, vs in plan.blocks[:3]:
        assert len(eqs) == 1 and len(vs) == 1
        first_vars |= set(vs)
    assert first_vars == {0, 1, 3}  # P1.x, P1.y, P2.y
    # the last block couples the two remaining coordinates of P3
    assert plan.blocks[-1][0] == (1, 2)
    assert plan.blocks[-1][1] == (4, 5)


def test_scc_plan_single_equation():
    s = linear_system([[1.0]], [5.0])
    g = graph_of(s)
    plan = scc_plan(g, max_matching(g))
    assert plan.blocks == (((0,), (0,)),)


def test_scc_plan_coupled_block():
    s = linear_system([[1, 1], [1, -1]], [1, 0])
    g = graph_of(s)
    plan = scc_plan(g, max_matching(g))
    assert len(plan.blocks) == 1
    assert plan.blocks[0] == ((0, 1), (0, 1))


def test_scc_plan_requires_perfect_matching():
    g = EquationGraph(2, 1, ((0,), (0,)))
    with pytest.raises(ValueError):
        scc_plan(g, max_matching(g))


def test_plan_respects_dependencies():
    # triangular by construction: x0 = 1; x1 = x0 + 1; x2 = x1 + x0
    A = [[1, 0, 0], [1, 1, 0], [1, 1, 1]]
    s = linear_system(A, [1, 2, 4])
    g = graph_of(s)
    plan = scc_plan(g, max_matching(g))
    solved: set[int] = set()
    x = np.zeros(3)
    for eqs, vs in plan.blocks:
        for e in eqs:
            reads = set(g.adjacency[e]) - set(vs)
            assert reads <= solved, "block reads a variable solved later"
        sub = np.array([[A[e][v] for v in vs] for e in eqs], dtype=float)
        rhs = np.array([[1, 2, 4][e] - sum(A[e][u] * x[u] for u in solved) for e in eqs])
        x[list(vs)] = np.linalg.solve(sub, rhs)
        solved |= set(vs)
    assert x == pytest.approx([1.0, 1.0, 2.0])
    # violating the precedence fails: solving the last block first with
    # unsolved inputs gives the wrong answer
    eqs, vs = plan.blocks[-1]
    wrong = np.zeros(3)
    sub = np.array([[A[e][v] for v in vs] for e in eqs], dtype=float)
    rhs = np.array([[1, 2, 4][e] for e in eqs])
    wrong[list(vs)] = np.linalg.solve(sub, rhs)
    assert wrong[list(vs)] != pytest.approx(x[list(vs)])


# --- counting ----------------------------------------------------------------

def counting_of(model, mode="fixed-D", **kw):
    s = compile_model(model)
    _, cg = build_graphs(s, model)
    return counting_state(cg, model.dimension, mode=mode, **kw)


def test_laman_triple():
    assert counting_of(zoo.square_four_distances()).state == "under"
    assert counting_of(zoo.braced_quad_model()).state == "well"
    verdict = counting_of(zoo.k4_model())
    assert verdict.state == "over"
    assert verdict.witness_subgraph == ("P1", "P2", "P3", "P4")


def test_double_banana_counting_well_but_advisory():
    verdict = counting_of(zoo.double_banana_model())
    assert verdict.state == "well"
    assert verdict.advisory


def test_three_lines_counting_well():
    assert counting_of(zoo.three_lines_three_angles()).state == "well"


def test_counting_isomorphism_invariance():
    m = zoo.braced_quad_model()
    rng = np.random.default_rng(5)
    ids = [e.id for e in m.entities]
    for _ in range(10):
        perm = {old: f"Q{i}" for i, old in enumerate(rng.permutation(ids))}
        from gcskernel.model import Constraint, Entity
        renamed = Model(
            m.dimension,
            tuple(Entity(perm[e.id], e.kind, e.params, e.representation)
                  for e in m.entities),
            tuple(Constraint(c.id, c.kind, tuple(perm[x] for x in c.entities), c.value)
                  for c in m.constraints))
        assert counting_of(renamed).state == counting_of(m).state


def test_counting_beyond_cap_uses_edge_induced_sampling():
    # a 14-point chain exceeds the exhaustive cap; the sampled verdict is
    # still right, and a doubled edge is found through constraint pieces
    coords = {f"P{i:02d}": (float(i), 0.3 * (i % 2)) for i in range(14)}
    edges = [(f"P{i:02d}", f"P{i+1:02d}") for i in range(13)]
    chain = zoo.points_distances_model(coords, edges)
    assert counting_of(chain).state == "under"
    from gcskernel.model import Constraint
    doubled = Model(2, chain.entities,
                    chain.constraints + (Constraint(
                        "dup", "distance-pp", ("P00", "P01"), 2.0),))
    verdict = counting_of(doubled)
    assert verdict.state == "over"
    assert verdict.witness_subgraph == ("P00", "P01")


def test_counting_dor_mode():
    from gcskernel import compute_dor, generate_witness
    m = zoo.braced_quad_model()
    s = compile_model(m)
    wit = generate_witness(s, m, seed=0)

    def dor_fn(subset):
        return compute_dor(m, s, wit.assignment, columns=s.columns_of(subset)).dor

    _, cg = build_graphs(s, m)
    assert counting_state(cg, 2, mode="dor", dor_fn=dor_fn).state == "well"
    with pytest.raises(ValueError):
        counting_state(cg, 2, mode="dor")
