"""Cluster decomposition of well-constrained systems and recombination.

Bottom-up: seed clusters are entity pairs whose induced subsystem is already
rigid (point pairs under a distance, a point on a line, two lines under an
angle, ...).  Two merge rules apply, both validated against the witness
engine so non-rigid unions (three lines under three angles) are rejected:

* two clusters sharing two or more elements merge into one,
* three clusters pairwise sharing a geometric element merge into one.

Top-down (2D point/distance scope): brute-force search for an articulation
pair whose removal disconnects the constraint graph; the pair is duplicated
into each side, and a child that cannot fix the pair's separation on its own
receives a virtual distance bond whose value is measured from the first
solved sibling.  Splitting recurses until triangles (or irreducible cores)
remain, and the solve order is the reverse of the split order.

Recombination solves each leaf with Newton on its anchored induced subsystem,
started from the sketch re-expressed in the anchored frame so the solution
keeps the sketch's chirality, then places child solutions by least-squares
rigid alignment on shared entities.  Ternary one-point merges get their
closure point from the classical two-circle construction, with the mirror
branch picked by the orientation of the initial sketch; merges whose shared
elements are not points fall back to re-solving the node from the sketch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import geometry
from .compiler import (
    add_anchors,
    assignment_from_params,
    compile_model,
    eval_residuals,
    params_from_assignment,
)
from .detect import is_well_part
from .model import Constraint, Entity, Model, POINT2
from .numeric import SolveResult, newton_solve, optimize_solve
from .witness import WitnessError, generate_witness

ALIGN_TOL = 1e-6


class DecompositionError(RuntimeError):
    pass


class AlignmentError(RuntimeError):
    pass


@dataclass(frozen=True)
class ClusterNode:
    node_id: int
    kind: str  # seed | merge | split | triangle | irreducible
    entities: frozenset[str]
    constraints: frozenset[str]
    children: tuple["ClusterNode", ...] = ()
    shared: tuple[tuple[str, ...], ...] = ()   # shared entity sets between children
    pair: tuple[str, str] | None = None        # articulation pair of a split node
    virtual_bonds: tuple[tuple[str, str], ...] = ()  # bonds this node must honor

    def to_json_dict(self) -> dict:
        d: dict = {
            "id": self.node_id,
            "kind": self.kind,
            "entities": sorted(self.entities),
            "constraints": sorted(self.constraints),
        }
        if self.pair:
            d["pair"] = list(self.pair)
        if self.virtual_bonds:
            d["virtualBonds"] = [list(b) for b in self.virtual_bonds]
        if self.shared:
            d["shared"] = [sorted(s) for s in self.shared]
        if self.children:
            d["children"] = [c.to_json_dict() for c in self.children]
        return d


@dataclass(frozen=True)
class ClusterTree:
    strategy: str
    roots: tuple[ClusterNode, ...]
    redundant_constraints: tuple[str, ...]
    free_entities: tuple[str, ...]

    @property
    def assembled(self) -> bool:
        return len(self.roots) == 1

    def to_json_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "roots": [r.to_json_dict() for r in self.roots],
            "redundantOrConflicting": sorted(self.redundant_constraints),
            "freeEntities": sorted(self.free_entities),
        }


@dataclass(frozen=True)
class Placement:
    node_id: int
    entities: tuple[str, ...]
    rotation: np.ndarray
    translation: np.ndarray


@dataclass(frozen=True)
class RecombinePlan:
    placements: tuple[Placement, ...]


def _induced_cids(model: Model, subset: frozenset[str]) -> frozenset[str]:
    return frozenset(c.id for c in model.constraints if set(c.entities) <= subset)


# ---------------------------------------------------------------------------
# bottom-up clustering


def bottom_up(model: Model, seed: int = 0) -> ClusterTree:
    """Merge rigid seed clusters into a cluster forest (partial trees allowed)."""
    system = compile_model(model)
    try:
        witness = generate_witness(system, model, seed=seed)
    except WitnessError as err:
        raise DecompositionError(f"cannot build a witness for merge checks: {err}")
    x = witness.assignment

    counter = [0]

    def new_node(kind, entities, children=(), shared=()):
        counter[0] += 1
        ents = frozenset(entities)
        return ClusterNode(
            counter[0], kind, ents, _induced_cids(model, ents),
            tuple(children), tuple(shared))

    def rigid(entity_set: Iterable[str]) -> bool:
        return is_well_part(model, system, x, entity_set)

    active: list[ClusterNode] = []
    ids = sorted(e.id for e in model.entities)
    for single in ids:
        if _induced_cids(model, frozenset((single,))) and rigid((single,)):
            active.append(new_node("seed", (single,)))
    for a, b in combinations(ids, 2):
        pair = frozenset((a, b))
        if _induced_cids(model, pair) and rigid(pair):
            active.append(new_node("seed", pair))

    redundant: set[str] = set()
    rejected: set[tuple] = set()

    def candidates():
        out = []
        for c1, c2 in combinations(active, 2):
            if len(c1.entities & c2.entities) >= 2:
                out.append((c1, c2))
        for c1, c2, c3 in combinations(active, 3):
            if (c1.entities & c2.entities and c2.entities & c3.entities
                    and c1.entities & c3.entities):
                out.append((c1, c2, c3))
        out.sort(key=lambda grp: (
            len(frozenset().union(*(c.entities for c in grp))),
            len(grp),
            tuple(sorted(frozenset().union(*(c.entities for c in grp)))),
            tuple(sorted(tuple(sorted(c.entities)) for c in grp)),
        ))
        return out

    for _ in range(50 + 10 * len(model.entities)):
        merged = False
        for group in candidates():
            union = frozenset().union(*(c.entities for c in group))
            key = tuple(sorted((tuple(sorted(c.entities)) for c in group)))
            if key in rejected:
                continue
            if any(union <= c.entities for c in active):
                continue  # nothing new
            if rigid(union):
                shared = tuple(
                    tuple(sorted(p.entities & q.entities))
                    for p, q in combinations(group, 2))
                active.append(new_node("merge", union, children=group, shared=shared))
                merged = True
                break
            rejected.add(key)
            covered = frozenset().union(*(c.constraints for c in group))
            extra = _induced_cids(model, union) - covered
            # surplus constraints of a failed rigid-check point at redundancy
            if extra:
                redundant |= extra
        if not merged:
            break

    maximal = [
        c for c in active
        if not any(c is not o and c.entities < o.entities for o in active)
    ]
    roots = tuple(sorted(maximal, key=lambda c: (-len(c.entities), sorted(c.entities))))
    covered_e = frozenset().union(*(r.entities for r in roots)) if roots else frozenset()
    covered_c = frozenset().union(*(r.constraints for r in roots)) if roots else frozenset()
    free = tuple(sorted(set(ids) - covered_e))
    leftover = {c.id for c in model.constraints} - covered_c
    return ClusterTree("bottom-up", roots, tuple(sorted(redundant | leftover)), free)


# ---------------------------------------------------------------------------
# top-down splitting


def top_down(model: Model) -> ClusterTree:
    """Recursive articulation-pair splitting of a 2D point/distance model."""
    if model.dimension != 2 or any(e.kind != POINT2 for e in model.entities):
        raise DecompositionError("top-down splitting covers the 2D point/distance scope")
    for c in model.constraints:
        if c.kind != "distance-pp":
            raise DecompositionError(
                f"top-down splitting covers the 2D point/distance scope; "
                f"{c.id!r} has kind {c.kind!r}")

    counter = [0]

    def new_node(kind, entities, constraints, children=(), pair=None, bonds=()):
        counter[0] += 1
        return ClusterNode(
            counter[0], kind, frozenset(entities), frozenset(constraints),
            tuple(children), pair=pair, virtual_bonds=tuple(bonds))

    def components(nodes: set[str], adj: Mapping[str, set[str]]) -> list[set[str]]:
        seen: set[str] = set()
        comps = []
        for start in sorted(nodes):
            if start in seen:
                continue
            comp = {start}
            frontier = [start]
            seen.add(start)
            while frontier:
                cur = frontier.pop()
                for nb in adj[cur]:
                    if nb in nodes and nb not in seen:
                        seen.add(nb)
                        comp.add(nb)
                        frontier.append(nb)
            comps.append(comp)
        return comps

    def split(entities: frozenset[str],
              edges: list[tuple[str, frozenset[str]]]) -> ClusterNode:
        cons = {eid for eid, _ in edges if not eid.startswith("vbond:")}
        bonds_here = tuple(
            tuple(sorted(epair)) for eid, epair in edges if eid.startswith("vbond:"))
        if len(entities) <= 3:
            return new_node("triangle", entities, cons, bonds=bonds_here)
        adj: dict[str, set[str]] = {e: set() for e in entities}
        for _, epair in edges:
            a, b = sorted(epair)
            adj[a].add(b)
            adj[b].add(a)
        for a, b in combinations(sorted(entities), 2):
            rest = set(entities) - {a, b}
            comps = components(rest, adj)
            if len(comps) < 2:
                continue
            child_sets = [frozenset(comp | {a, b}) for comp in comps]
            assigned: set[str] = set()
            jobs = []
            for cs in child_sets:
                mine = []
                for eid, epair in edges:
                    if epair <= cs and eid not in assigned:
                        mine.append((eid, epair))
                        assigned.add(eid)
                count = 2 * len(cs) - len(mine)
                needs_bond = count > 3 and not any(ep == frozenset((a, b)) for _, ep in mine)
                jobs.append((needs_bond, cs, mine))
            # bond-free children solve first; they fix the pair's separation
            jobs.sort(key=lambda j: (j[0], sorted(j[1])))
            children = []
            node_bonds = []
            for needs_bond, cs, mine in jobs:
                if needs_bond:
                    mine = mine + [(f"vbond:{a}-{b}", frozenset((a, b)))]
                    node_bonds.append((a, b))
                children.append(split(cs, mine))
            return new_node("split", entities, cons, children=children,
                            pair=(a, b), bonds=tuple(node_bonds))
        return new_node("irreducible", entities, cons, bonds=bonds_here)

    edges = [(c.id, frozenset(c.entities)) for c in model.constraints]
    root = split(frozenset(e.id for e in model.entities), edges)
    return ClusterTree("top-down", (root,), (), ())


# ---------------------------------------------------------------------------
# recombination

Solution = dict[str, tuple[float, ...]]


def _points_of(model: Model, entity_ids: Iterable[str]) -> list[str]:
    tag = POINT2 if model.dimension == 2 else "point3"
    return sorted(e for e in entity_ids if model.entity(e).kind == tag)


def _coords(solution: Mapping[str, tuple[float, ...]], ids: Sequence[str]) -> np.ndarray:
    return np.array([solution[i][:2] for i in ids], dtype=float)


def align_onto(model: Model, placed: Mapping[str, tuple[float, ...]],
               child: Mapping[str, tuple[float, ...]],
               shared_points: Sequence[str]) -> tuple[Solution, np.ndarray, np.ndarray]:
    """Rigidly map a child solution onto already-placed shared points.

    Returns the transformed solution and the (R, t) used.  Raises
    :class:`AlignmentError` when the shared geometry disagrees by more than
    the alignment tolerance after the best fit.
    """
    R, t = geometry.fit_rigid_2d(_coords(child, shared_points),
                                 _coords(placed, shared_points))
    moved = {
        eid: tuple(geometry.apply_rigid(model.entity(eid), params, R, t))
        for eid, params in child.items()
    }
    for eid in shared_points:
        err = np.max(np.abs(np.asarray(moved[eid][:2]) - np.asarray(placed[eid][:2])))
        if err > ALIGN_TOL:
            raise AlignmentError(
                f"shared entity {eid!r} disagrees by {err:.3e} after alignment")
    return moved, R, t


def _circle_intersection(ca, ra, cb, rb, orientation: float) -> np.ndarray:
    ca, cb = np.asarray(ca, float), np.asarray(cb, float)
    d = float(np.linalg.norm(cb - ca))
    if d < 1e-12 or d > ra + rb + 1e-9 or d < abs(ra - rb) - 1e-9:
        raise AlignmentError("closure circles do not intersect")
    u = (cb - ca) / d
    n = np.array([-u[1], u[0]])
    along = (ra * ra - rb * rb + d * d) / (2.0 * d)
    h = math.sqrt(max(ra * ra - along * along, 0.0))
    sign = 1.0 if orientation >= 0.0 else -1.0
    return ca + along * u + sign * h * n


def _sketch_orientation(model: Model, p: str, q: str, r: str) -> float:
    a = np.asarray(model.entity(p).params[:2])
    b = np.asarray(model.entity(q).params[:2])
    c = np.asarray(model.entity(r).params[:2])
    u, v = b - a, c - a
    return float(u[0] * v[1] - u[1] * v[0])


def _sketch_solution(model: Model, entities: Iterable[str]) -> Solution:
    out: Solution = {}
    for eid in entities:
        e = model.entity(eid)
        if e.params is None:
            raise DecompositionError(f"entity {eid!r} has no sketch parameters")
        out[eid] = tuple(float(v) for v in e.params)
    return out


def _submodel(model: Model, entities: frozenset[str],
              constraint_ids: frozenset[str],
              params: Solution) -> Model:
    return Model(
        model.dimension,
        tuple(Entity(e.id, e.kind, params[e.id], e.representation)
              for e in model.entities if e.id in entities),
        tuple(c for c in model.constraints if c.id in constraint_ids),
    )


def _solve_subsystem(model: Model, entities: frozenset[str],
                     constraint_ids: frozenset[str],
                     extra: Sequence[Constraint],
                     start_solution: Solution) -> Solution:
    sub = _submodel(model, entities, constraint_ids, start_solution)
    sub = Model(sub.dimension, sub.entities, sub.constraints + tuple(extra))
    system = compile_model(sub)
    start = assignment_from_params(sub, system)
    result = optimize_solve(system, start, max_iter=300)
    if not result.converged:
        raise DecompositionError(
            f"subsystem {sorted(entities)} failed to solve: {result.status}")
    return params_from_assignment(sub, system, result.assignment)


def _solve_leaf(model: Model, node: ClusterNode,
                bond_values: Mapping[tuple[str, str], float]) -> Solution:
    """Newton on the anchored induced subsystem, started from the re-framed sketch."""
    extra = []
    for (a, b) in node.virtual_bonds:
        if (a, b) not in bond_values:
            raise DecompositionError(
                f"virtual bond {a}-{b} has no measured value; no rigid sibling solved first")
        extra.append(Constraint(f"vbond:{a}-{b}", "distance-pp", (a, b), bond_values[(a, b)]))
    sketch = _sketch_solution(model, node.entities)
    sub = _submodel(model, node.entities, node.constraints, sketch)
    sub = Model(sub.dimension, sub.entities, sub.constraints + tuple(extra))
    system = compile_model(sub)
    points = _points_of(sub, node.entities)
    if len(points) >= 2:
        anchored = add_anchors(system, sub)
        # express the sketch in the anchored frame so Newton starts nearby and
        # keeps the sketch's chirality
        p0 = np.asarray(sub.entity(points[0]).params[:2])
        p1 = np.asarray(sub.entity(points[1]).params[:2])
        theta = -math.atan2(p1[1] - p0[1], p1[0] - p0[0])
        R = geometry.rotation_2d(theta)
        t = -(R @ p0)
        framed = Model(
            sub.dimension,
            tuple(Entity(e.id, e.kind,
                         tuple(geometry.apply_rigid(e, e.params, R, t)),
                         e.representation) for e in sub.entities),
            sub.constraints,
        )
        start = assignment_from_params(framed, anchored)
        result = newton_solve(anchored, start)
        if not result.converged:
            result = optimize_solve(anchored, start, max_iter=300)
        solve_sys = anchored
    else:
        start = assignment_from_params(sub, system)
        result = optimize_solve(system, start, max_iter=300)
        solve_sys = system
    if not result.converged:
        raise DecompositionError(
            f"cluster {sorted(node.entities)} failed to solve: {result.status}")
    return params_from_assignment(sub, solve_sys, result.assignment)


def _assemble_merge(model: Model, node: ClusterNode,
                    solutions: Sequence[Solution],
                    placements: list[Placement]) -> Solution | None:
    """Place child solutions by shared-point alignment; None if not applicable."""
    merged: Solution = dict(solutions[0])
    placements.append(Placement(
        node.children[0].node_id, tuple(sorted(solutions[0])), np.eye(2), np.zeros(2)))
    pending = list(range(1, len(node.children)))
    while pending:
        progress = False
        for idx in list(pending):
            child = node.children[idx]
            sol = solutions[idx]
            shared_pts = [p for p in _points_of(model, child.entities) if p in merged]
            if len(shared_pts) >= 2:
                moved, R, t = align_onto(model, merged, sol, shared_pts[:2])
            elif len(shared_pts) == 1 and len(node.children) == 3 and len(pending) == 2:
                # ternary one-point closure: fetch the unknown shared point from
                # the two known radii
                other_idx = next(i for i in pending if i != idx)
                other = node.children[other_idx]
                anchor = shared_pts[0]
                q_candidates = [
                    p for p in _points_of(model, child.entities & other.entities)
                    if p not in merged
                ]
                r_candidates = [
                    p for p in _points_of(model, other.entities) if p in merged
                ]
                if not q_candidates or not r_candidates:
                    return None
                q, r = q_candidates[0], r_candidates[0]
                ra = float(np.linalg.norm(
                    np.asarray(sol[q][:2]) - np.asarray(sol[anchor][:2])))
                rb = float(np.linalg.norm(
                    np.asarray(solutions[other_idx][q][:2])
                    - np.asarray(solutions[other_idx][r][:2])))
                orient = _sketch_orientation(model, anchor, r, q)
                q_pos = _circle_intersection(
                    merged[anchor][:2], ra, merged[r][:2], rb, orient)
                target = dict(merged)
                target[q] = (float(q_pos[0]), float(q_pos[1]))
                moved, R, t = align_onto(model, target, sol, [anchor, q])
            else:
                continue
            placements.append(Placement(child.node_id, tuple(sorted(sol)), R, t))
            for eid, params in moved.items():
                merged.setdefault(eid, params)
            pending.remove(idx)
            progress = True
            break
        if not progress:
            return None
    return merged


def _solve_node(model: Model, node: ClusterNode,
                placements: list[Placement],
                bond_values: dict[tuple[str, str], float]) -> Solution:
    if not node.children:
        return _solve_leaf(model, node, bond_values)

    if node.kind == "split":
        a, b = node.pair
        solutions: list[Solution] = []
        for child in node.children:
            sol = _solve_node(model, child, placements, bond_values)
            if (a, b) not in bond_values:
                # the first (bond-free) child fixes the pair's separation
                bond_values[(a, b)] = float(np.linalg.norm(
                    np.asarray(sol[b][:2]) - np.asarray(sol[a][:2])))
            solutions.append(sol)
        merged = dict(solutions[0])
        placements.append(Placement(
            node.children[0].node_id, tuple(sorted(solutions[0])), np.eye(2), np.zeros(2)))
        for child, sol in zip(node.children[1:], solutions[1:]):
            moved, R, t = align_onto(model, merged, sol, [a, b])
            placements.append(Placement(child.node_id, tuple(sorted(sol)), R, t))
            for eid, params in moved.items():
                merged.setdefault(eid, params)
        return _solve_subsystem(model, node.entities, node.constraints, (), merged)

    # bottom-up merge node
    solutions = [_solve_node(model, c, placements, bond_values) for c in node.children]
    assembled = _assemble_merge(model, node, solutions, placements)
    if assembled is None:
        # shared elements are not points (line-bearing merges); re-solve the
        # node from the sketch, which is a chirality-consistent global guess
        assembled = _sketch_solution(model, node.entities)
    return _solve_subsystem(model, node.entities, node.constraints, (), assembled)


def solve_tree(model: Model, tree: ClusterTree) -> tuple[RecombinePlan, Solution, SolveResult]:
    """Solve every cluster, recombine, and certify the final assignment.

    Returns the recombination plan, per-entity solved parameters, and the
    whole-system residual certificate (anchors excluded).
    """
    if model.dimension != 2:
        raise DecompositionError("cluster recombination covers the 2D scope")
    if not tree.assembled:
        raise DecompositionError(
            f"cluster tree has {len(tree.roots)} roots; the model did not assemble")
    placements: list[Placement] = []
    bond_values: dict[tuple[str, str], float] = {}
    solution = _solve_node(model, tree.roots[0], placements, bond_values)
    system = compile_model(model)
    x = np.zeros(system.n_variables)
    for v in system.variables:
        x[v.index] = solution[v.entity_id][v.component]
    residuals = eval_residuals(system, x)
    norm = float(np.max(np.abs(residuals))) if residuals.size else 0.0
    status = "converged" if norm <= 1e-9 else "max-iterations"
    return (RecombinePlan(tuple(placements)), solution,
            SolveResult(status, x, norm, 0, residuals))
