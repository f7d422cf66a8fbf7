"""Graph representations and structural constraint-state machinery.

The equation graph is the bipartite occurrence graph of residuals vs
variables; the constraint graph carries entities weighted by DOF and
constraints weighted by DOC (hyper-constraints stay explicit constraint
nodes, i.e. the bipartite scheme).  On top of these:

* maximum bipartite matching via deterministic augmenting paths,
* the coarse Dulmage-Mendelsohn partition into over/well/under sub-parts
  (canonical: independent of the particular maximum matching),
* a solve plan from strongly connected components of the matching-oriented
  digraph, topologically sorted,
* structural counting verdicts, either with the fixed frame dimension
  D = 3 (2D) / 6 (3D) or with a supplied degree-of-rigidity function.

The 3D fixed-D verdict is necessary but not sufficient (double-banana style
counterexamples pass it while being geometrically under-constrained), so
reports label it advisory.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Iterable, Mapping

from .compiler import ResidualSystem
from .model import Model, doc_of


@dataclass(frozen=True)
class EquationGraph:
    """Bipartite graph: equation nodes on the left, variable nodes on the right."""

    n_equations: int
    n_variables: int
    adjacency: tuple[tuple[int, ...], ...]  # per equation, sorted variable indices

    def variable_adjacency(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.n_variables)]
        for e, vs in enumerate(self.adjacency):
            for v in vs:
                out[v].append(e)
        return out

    def dump(self) -> str:
        lines = [f"equations {self.n_equations} variables {self.n_variables}"]
        for e, vs in enumerate(self.adjacency):
            lines.append(f"E{e}: " + " ".join(f"x{v}" for v in vs))
        return "\n".join(lines)


@dataclass(frozen=True)
class ConstraintGraph:
    dimension: int
    entity_ids: tuple[str, ...]
    entity_dof: Mapping[str, int]
    constraints: tuple[tuple[str, tuple[str, ...], int], ...]  # (id, entity ids, doc)

    def induced(self, subset: Iterable[str]) -> tuple[int, int, list[str]]:
        """(sum DOF, sum DOC, constraint ids) of the induced subsystem."""
        keep = set(subset)
        dof = sum(self.entity_dof[e] for e in keep)
        doc = 0
        ids = []
        for cid, ents, d in self.constraints:
            if set(ents) <= keep:
                doc += d
                ids.append(cid)
        return dof, doc, ids

    def neighbors(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {e: set() for e in self.entity_ids}
        for _, ents, _ in self.constraints:
            for a in ents:
                for b in ents:
                    if a != b:
                        adj[a].add(b)
        return adj

    def dump(self) -> str:
        lines = [f"entities {len(self.entity_ids)}"]
        for e in self.entity_ids:
            lines.append(f"{e}[dof={self.entity_dof[e]}]")
        for cid, ents, d in self.constraints:
            lines.append(f"{cid}[doc={d}]: " + " ".join(ents))
        return "\n".join(lines)


def build_graphs(system: ResidualSystem, model: Model) -> tuple[EquationGraph, ConstraintGraph]:
    adjacency = tuple(
        tuple(sorted(r.expression.variables())) for r in system.residuals
    )
    eg = EquationGraph(len(system.residuals), system.n_variables, adjacency)
    cg = ConstraintGraph(
        model.dimension,
        tuple(e.id for e in model.entities),
        {e.id: e.spec.dof for e in model.entities},
        tuple((c.id, c.entities, doc_of(c.kind, model.dimension)) for c in model.constraints),
    )
    return eg, cg


def max_matching(graph: EquationGraph) -> dict[int, int]:
    """Maximum-cardinality matching {equation: variable} via augmenting paths.

    Equations are processed in ascending index order and adjacency lists are
    sorted, so the result is deterministic for a fixed graph.
    """
    match_var: dict[int, int] = {}   # variable -> equation
    match_eq: dict[int, int] = {}

    def augment(e: int, seen: set[int]) -> bool:
        for v in graph.adjacency[e]:
            if v in seen:
                continue
            seen.add(v)
            owner = match_var.get(v)
            if owner is None or augment(owner, seen):
                match_var[v] = e
                match_eq[e] = v
                return True
        return False

    for e in range(graph.n_equations):
        augment(e, set())
    return dict(sorted(match_eq.items()))


@dataclass(frozen=True)
class DMPartition:
    over_equations: frozenset[int]
    over_variables: frozenset[int]
    well_equations: frozenset[int]
    well_variables: frozenset[int]
    under_equations: frozenset[int]
    under_variables: frozenset[int]
    matching: Mapping[int, int]


def dm_decompose(graph: EquationGraph, matching: dict[int, int] | None = None) -> DMPartition:
    """Coarse Dulmage-Mendelsohn partition from any maximum matching.

    The over part is everything reachable from unmatched equations along
    alternating paths, the under part everything reachable from unmatched
    variables; the remainder is the well part, on which the matching is
    perfect.  The partition is a canonical equation-graph invariant.
    """
    if matching is None:
        matching = max_matching(graph)
    match_var = {v: e for e, v in matching.items()}
    var_adj = graph.variable_adjacency()

    over_e: set[int] = set()
    over_v: set[int] = set()
    stack = [e for e in range(graph.n_equations) if e not in matching]
    over_e |= set(stack)
    while stack:
        e = stack.pop()
        for v in graph.adjacency[e]:
            if v in over_v:
                continue
            over_v.add(v)
            owner = match_var.get(v)
            if owner is not None and owner not in over_e:
                over_e.add(owner)
                stack.append(owner)

    under_e: set[int] = set()
    under_v: set[int] = set()
    stack_v = [v for v in range(graph.n_variables) if v not in match_var]
    under_v |= set(stack_v)
    while stack_v:
        v = stack_v.pop()
        for e in var_adj[v]:
            if e in under_e:
                continue
            under_e.add(e)
            w = matching.get(e)
            if w is not None and w not in under_v:
                under_v.add(w)
                stack_v.append(w)

    well_e = frozenset(range(graph.n_equations)) - over_e - under_e
    well_v = frozenset(range(graph.n_variables)) - over_v - under_v
    return DMPartition(
        frozenset(over_e), frozenset(over_v),
        well_e, well_v,
        frozenset(under_e), frozenset(under_v),
        matching,
    )


@dataclass(frozen=True)
class SolvePlan:
    blocks: tuple[tuple[tuple[int, ...], tuple[int, ...]], ...]  # (equations, variables)


def scc_plan(graph: EquationGraph, matching: dict[int, int]) -> SolvePlan:
    """Solve plan from the matching-oriented digraph.

    Matched edges are oriented variable -> equation and the rest equation ->
    variable; strongly connected components of the resulting digraph become
    blocks, topologically ordered so each block only reads variables solved by
    earlier blocks.  Requires a perfect matching on the graph's equations and
    variables.
    """
    if len(matching) != graph.n_equations or len(set(matching.values())) != graph.n_variables:
        raise ValueError("scc_plan needs a perfect matching on its input scope")
    owner = {v: e for e, v in matching.items()}

    # equation-level dependency digraph: e depends on the equation owning each
    # of its non-matched variables
    deps: list[set[int]] = [set() for _ in range(graph.n_equations)]
    for e in range(graph.n_equations):
        for v in graph.adjacency[e]:
            if v != matching[e]:
                deps[e].add(owner[v])

    # Tarjan, iterative, deterministic over ascending node order
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    counter = [0]
    components: list[list[int]] = []

    def strongconnect(root: int) -> None:
        work = [(root, iter(sorted(deps[root])))]
        index[root] = low[root] = counter[0]
        counter[0] += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            node, it = work[-1]
            advanced = False
            for child in it:
                if child not in index:
                    index[child] = low[child] = counter[0]
                    counter[0] += 1
                    stack.append(child)
                    on_stack.add(child)
                    work.append((child, iter(sorted(deps[child]))))
                    advanced = True
                    break
                if child in on_stack:
                    low[node] = min(low[node], index[child])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                components.append(sorted(comp))

    for e in range(graph.n_equations):
        if e not in index:
            strongconnect(e)

    # Tarjan emits components in reverse topological order of the dependency
    # digraph (dependencies first), which is exactly the solve order.
    blocks = tuple(
        (tuple(comp), tuple(sorted(matching[e] for e in comp)))
        for comp in components
    )
    return SolvePlan(blocks)


@dataclass(frozen=True)
class CountingVerdict:
    state: str  # under | well | over
    mode: str
    deficit: int                       # DOF - DOC - D(whole)
    witness_subgraph: tuple[str, ...] | None
    advisory: bool  # 3D counting is necessary-but-not-sufficient


def counting_state(cg: ConstraintGraph, dimension: int, mode: str = "fixed-D",
                   dor_fn: Callable[[frozenset[str]], int] | None = None,
                   size_cap: int = 12) -> CountingVerdict:
    """Structural verdict from DOF/DOC counting.

    ``fixed-D`` compares against D = 3 (2D) / 6 (3D); ``dor`` replaces D by a
    caller-supplied degree-of-rigidity function evaluated on entity subsets
    (typically the witness-engine's motion-basis rank).  Subgraph search is
    exhaustive over connected induced subsets up to ``size_cap`` entities;
    beyond the cap only edge-induced subsets (constraint entity sets and their
    pairwise unions) are sampled.
    """
    if mode not in ("fixed-D", "dor"):
        raise ValueError(f"unknown counting mode {mode!r}")
    if mode == "dor" and dor_fn is None:
        raise ValueError("dor mode needs a dor_fn")
    D_whole = 3 if dimension == 2 else 6
    ids = list(cg.entity_ids)

    def frame(subset: frozenset[str]) -> int:
        if mode == "fixed-D":
            return D_whole
        return dor_fn(subset)

    # Laman/Maxwell-style subgraph conditions are stated for n' >= 2 entities
    # in 2D and n' >= 3 in 3D; smaller 3D subsystems have a degenerate frame
    # (a point pair moves with 5 freedoms, not 6) and must not be flagged.
    min_sub = 2 if dimension == 2 else 3

    def subsets() -> Iterable[frozenset[str]]:
        if len(ids) <= size_cap:
            adj = cg.neighbors()
            for k in range(min_sub, len(ids) + 1):
                for combo in combinations(ids, k):
                    sub = set(combo)
                    # connectivity filter: counting violations only matter on
                    # connected pieces
                    seen = {combo[0]}
                    frontier = [combo[0]]
                    while frontier:
                        nxt = frontier.pop()
                        for nb in adj[nxt]:
                            if nb in sub and nb not in seen:
                                seen.add(nb)
                                frontier.append(nb)
                    if seen == sub:
                        yield frozenset(sub)
        else:
            seen_sets: set[frozenset[str]] = set()
            pieces = [frozenset(ents) for _, ents, _ in cg.constraints]
            for s in pieces:
                if s not in seen_sets:
                    seen_sets.add(s)
                    yield s
            for a, b in combinations(pieces, 2):
                u = a | b
                if u not in seen_sets:
                    seen_sets.add(u)
                    yield u

    advisory = dimension == 3
    if not ids:
        return CountingVerdict("well", mode, 0, None, advisory)
    whole = frozenset(ids)
    dof, doc, _ = cg.induced(whole)
    D = frame(whole)
    deficit = dof - doc - D

    witness: tuple[str, ...] | None = None
    for sub in subsets():
        if mode == "fixed-D" and len(sub) < min_sub:
            continue
        sdof, sdoc, _ = cg.induced(sub)
        if mode == "fixed-D" and sdof < D_whole:
            continue  # too small to span the frame
        if sdof - sdoc < frame(sub):
            witness = tuple(sorted(sub))
            break

    if witness is None and ids and deficit < 0:
        witness = tuple(sorted(whole))
    if witness is not None:
        return CountingVerdict("over", mode, deficit, witness, advisory)
    if mode == "fixed-D" and dof < D_whole:
        # too small to span a frame; treat as under (a lone entity is free)
        return CountingVerdict("under", mode, deficit, None, advisory)
    if deficit == 0:
        return CountingVerdict("well", mode, deficit, None, advisory)
    return CountingVerdict("under", mode, deficit, None, advisory)
