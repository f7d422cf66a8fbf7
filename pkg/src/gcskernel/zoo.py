"""Canonical example models used across tests, the corpus and the scripts.

Sketch parameters are rough initial guesses (sometimes exact closed forms)
in the spirit of a hand-drawn CAD sketch; solvers start from them.
"""

from __future__ import annotations

import math

from .compiler import linear_system
from .model import Constraint, Entity, Model


def _pt(eid, x, y):
    return Entity(eid, "point2", (float(x), float(y)))


def _pt3(eid, x, y, z):
    return Entity(eid, "point3", (float(x), float(y), float(z)))


def _d(cid, a, b, value):
    return Constraint(cid, "distance-pp", (a, b), float(value))


def triangle_model(d1: float = 10.0, d2: float = 10.0, alpha: float = math.pi / 4) -> Model:
    """Three points, two carrier lines, two distances + an angle + four incidences.

    The sketch places P1 at the origin, P2 on the x axis, P3 by the
    ruler-and-compass construction; line parameters are in Hesse normal form.
    """
    p3 = (d1 - d2 * math.cos(alpha), d2 * math.sin(alpha))
    phi2 = math.pi - alpha + math.pi / 2.0
    rho2 = d1 * math.cos(phi2)
    return Model(2, (
        _pt("P1", 0, 0),
        _pt("P2", d1, 0),
        _pt("P3", *p3),
        Entity("L1", "line2", (math.pi / 2.0, 0.0)),
        Entity("L2", "line2", (phi2, rho2)),
    ), (
        _d("d1", "P1", "P2", d1),
        _d("d2", "P2", "P3", d2),
        Constraint("alpha", "angle-ll", ("L1", "L2"), float(alpha)),
        Constraint("i1", "point-on-line", ("P1", "L1")),
        Constraint("i2", "point-on-line", ("P2", "L1")),
        Constraint("i3", "point-on-line", ("P2", "L2")),
        Constraint("i4", "point-on-line", ("P3", "L2")),
    ))


def triangle_construction(d1: float = 10.0, d2: float = 10.0,
                          alpha: float = math.pi / 4) -> dict[str, tuple[float, float]]:
    """Closed-form ruler-and-compass coordinates: origin, x axis, two arcs."""
    return {
        "P1": (0.0, 0.0),
        "P2": (d1, 0.0),
        "P3": (d1 - d2 * math.cos(alpha), d2 * math.sin(alpha)),
    }


def three_distances_model(d1: float = 10.0, d2: float = 10.0, d3: float = 10.0) -> Model:
    """Three points pairwise constrained by distances (no carrier lines)."""
    x3 = (d1 * d1 + d3 * d3 - d2 * d2) / (2.0 * d1) if d1 > 0 else 0.0
    y3 = math.sqrt(max(d3 * d3 - x3 * x3, 0.0))
    return Model(2, (
        _pt("P1", 0, 0), _pt("P2", d1, 0), _pt("P3", x3, y3),
    ), (
        _d("e1", "P1", "P2", d1),
        _d("e2", "P2", "P3", d2),
        _d("e3", "P3", "P1", d3),
    ))


def points_distances_model(coords: dict[str, tuple[float, float]],
                           edges: list[tuple[str, str]]) -> Model:
    """2D bar framework with distance values measured from the coordinates."""
    ents = tuple(_pt(k, *coords[k]) for k in sorted(coords))
    cons = []
    for i, (a, b) in enumerate(edges, start=1):
        val = math.dist(coords[a], coords[b])
        cons.append(_d(f"e{i}", a, b, val))
    return Model(2, ents, tuple(cons))


def square_four_distances() -> Model:
    """4 points, 4 distances: structurally under-constrained (2*4-4 > 3)."""
    coords = {"P1": (0, 0), "P2": (4, 0), "P3": (4, 4), "P4": (0, 4)}
    return points_distances_model(
        coords, [("P1", "P2"), ("P2", "P3"), ("P3", "P4"), ("P4", "P1")])


def braced_quad_model() -> Model:
    """4 points, 5 distances: two triangles sharing the P2-P4 edge (well)."""
    coords = {"P1": (0, 0), "P2": (4, 0), "P3": (7, 3), "P4": (3, 4)}
    return points_distances_model(
        coords,
        [("P1", "P2"), ("P2", "P3"), ("P3", "P4"), ("P4", "P1"), ("P2", "P4")])


def k4_model() -> Model:
    """4 points, all 6 distances: structurally over-constrained."""
    coords = {"P1": (0, 0), "P2": (4, 0), "P3": (4, 4), "P4": (0, 4)}
    return points_distances_model(
        coords,
        [("P1", "P2"), ("P2", "P3"), ("P3", "P4"), ("P4", "P1"),
         ("P1", "P3"), ("P2", "P4")])


def three_lines_three_angles() -> Model:
    """Structurally well but geometrically over: the angles sum to pi."""
    return Model(2, (
        Entity("L1", "line2", (math.pi / 2.0, 0.0)),
        Entity("L2", "line2", (math.pi / 2.0 + 2.0 * math.pi / 3.0, 1.0)),
        Entity("L3", "line2", (math.pi / 2.0 - 2.0 * math.pi / 3.0, -1.0)),
    ), (
        Constraint("a12", "angle-ll", ("L1", "L2"), math.pi / 3.0),
        Constraint("a23", "angle-ll", ("L2", "L3"), math.pi / 3.0),
        Constraint("a13", "angle-ll", ("L1", "L3"), math.pi / 3.0),
    ))


def double_banana_model() -> Model:
    """8 points, 18 distances in 3D: counting says well, actually flexible."""
    tips = {"T1": (0.0, 0.0, 2.0), "T2": (0.0, 0.0, -2.0)}
    ring1 = {
        "A1": (2.0, 0.0, 0.3), "A2": (-1.0, 1.7, 0.3), "A3": (-1.0, -1.7, 0.3)}
    ring2 = {
        "B1": (1.6, 1.0, -0.2), "B2": (-1.8, 0.4, -0.2), "B3": (0.2, -1.9, -0.2)}
    coords = {**tips, **ring1, **ring2}
    edges = []
    for ring in (ring1, ring2):
        names = sorted(ring)
        edges.extend([(names[0], names[1]), (names[1], names[2]), (names[0], names[2])])
        for tip in tips:
            edges.extend([(tip, n) for n in names])
    ents = tuple(_pt3(k, *coords[k]) for k in sorted(coords))
    cons = tuple(
        _d(f"e{i}", a, b, math.dist(coords[a], coords[b]))
        for i, (a, b) in enumerate(sorted(edges), start=1)
    )
    return Model(3, ents, cons)


def collinear_points_model(n: int = 3, dimension: int = 2,
                           spacing: float = 1.0) -> Model:
    """n points on a line (no constraints); used for degree-of-rigidity checks."""
    if dimension == 2:
        ents = tuple(_pt(f"P{i+1}", i * spacing, 0.0) for i in range(n))
    else:
        ents = tuple(_pt3(f"P{i+1}", i * spacing, 0.0, 0.0) for i in range(n))
    return Model(dimension, ents, ())


def point_pair_distance_3d(value: float = 5.0) -> Model:
    return Model(3, (
        _pt3("P1", 0, 0, 0), _pt3("P2", value, 0, 0),
    ), (
        _d("d1", "P1", "P2", value),
    ))


def single_point_3d() -> Model:
    return Model(3, (_pt3("P1", 0.4, -0.2, 0.9),), ())


def parallel_lines_model(distance: float = 2.0) -> Model:
    """Two parallel 3D lines at a given distance (point-direction scheme).

    The canonical representation-sensitivity failure case: 12 columns,
    rank 5, degree of rigidity 6, so kernel dimension 7 never matches.
    """
    return Model(3, (
        Entity("Lv1", "line3", (0.0, 0.0, 0.0, 0.0, 0.0, 1.0)),
        Entity("Lv2", "line3", (distance, 0.0, 0.0, 0.0, 0.0, 1.0)),
    ), (
        Constraint("par", "parallel", ("Lv1", "Lv2")),
        Constraint("gap", "distance-ll", ("Lv1", "Lv2"), float(distance)),
    ))


def plane_prism_model(width: float = 1.0, height: float = 1.0) -> Model:
    """Four planes in a rectangular prism: two parallel pairs, one right angle,
    two plane-plane distances.  Hessian scheme: 16 columns, rank 11, DOR 5."""
    return Model(3, (
        Entity("F1", "plane3", (1.0, 0.0, 0.0, 0.0), "hessian"),
        Entity("F2", "plane3", (0.0, 1.0, 0.0, 0.0), "hessian"),
        Entity("F3", "plane3", (1.0, 0.0, 0.0, -width), "hessian"),
        Entity("F4", "plane3", (0.0, 1.0, 0.0, -height), "hessian"),
    ), (
        Constraint("par13", "parallel", ("F1", "F3")),
        Constraint("par24", "parallel", ("F2", "F4")),
        Constraint("ang12", "angle-planeplane", ("F1", "F2"), math.pi / 2.0),
        Constraint("w", "distance-planeplane", ("F1", "F3"), float(width)),
        Constraint("h", "distance-planeplane", ("F2", "F4"), float(height)),
    ))


def two_triangles_shared_vertex() -> Model:
    """Two triangles sharing P3: one internal rotation remains (free motion 1)."""
    coords = {
        "P1": (0, 0), "P2": (4, 0), "P3": (2, 3),
        "P4": (5, 5), "P5": (1, 6),
    }
    return points_distances_model(
        coords,
        [("P1", "P2"), ("P2", "P3"), ("P1", "P3"),
         ("P3", "P4"), ("P4", "P5"), ("P3", "P5")])


def two_triangles_bridge() -> Model:
    """Two triangles joined by one distance: under-constrained whole."""
    coords = {
        "P1": (0, 0), "P2": (4, 0), "P3": (2, 3),
        "P4": (8, 3), "P5": (12, 3), "P6": (10, 6),
    }
    return points_distances_model(
        coords,
        [("P1", "P2"), ("P2", "P3"), ("P1", "P3"),
         ("P4", "P5"), ("P5", "P6"), ("P4", "P6"),
         ("P3", "P4")])


def seed_demo_model() -> Model:
    """Two triangles sharing C plus a B-D brace: rigid, but greedy well-part
    detection from seed E finds only a 3-entity part."""
    coords = {"A": (0, 0), "B": (4, 0), "C": (2, 3), "D": (5, 5), "E": (0, 6)}
    return points_distances_model(
        coords,
        [("A", "B"), ("A", "C"), ("B", "C"),
         ("C", "D"), ("C", "E"), ("D", "E"), ("B", "D")])


def lindep1_system():
    """The five linear equations used to demonstrate greedy group detection."""
    A = [[1, 1, 1], [2, 1, 1], [3, 2, 1], [1, 2, 3], [2, 4, 3]]
    b = [0, 1, 1, 1, 2]
    return linear_system(A, b, ["x", "y", "z"])


def lindep2_system():
    """Same as lindep1 but with E5 doubled from E4: hides the size-2 group {E4, E5}."""
    A = [[1, 1, 1], [2, 1, 1], [3, 2, 1], [1, 2, 3], [2, 4, 6]]
    b = [0, 1, 1, 1, 2]
    return linear_system(A, b, ["x", "y", "z"])


def lindep_json_dict(which: int) -> dict:
    A = [[1, 1, 1], [2, 1, 1], [3, 2, 1], [1, 2, 3],
         [2, 4, 3] if which == 1 else [2, 4, 6]]
    b = [0, 1, 1, 1, 2]
    return {
        "variables": ["x", "y", "z"],
        "equations": [
            {"coeffs": row, "rhs": rhs} for row, rhs in zip(A, b)
        ],
    }


def tetrahedron_model() -> Model:
    """4 points, 6 distances in 3D: minimally rigid."""
    coords = {
        "P1": (0.0, 0.0, 0.0), "P2": (3.0, 0.0, 0.0),
        "P3": (1.5, 2.6, 0.0), "P4": (1.5, 0.9, 2.4),
    }
    edges = [("P1", "P2"), ("P1", "P3"), ("P1", "P4"),
             ("P2", "P3"), ("P2", "P4"), ("P3", "P4")]
    ents = tuple(_pt3(k, *coords[k]) for k in sorted(coords))
    cons = tuple(
        _d(f"e{i}", a, b, math.dist(coords[a], coords[b]))
        for i, (a, b) in enumerate(edges, start=1))
    return Model(3, ents, cons)


def triangle_strip(n_triangles: int, step: float = 4.0) -> Model:
    """Strip of triangles sharing edges: n+2 points, 2n+1 distances, rigid."""
    coords: dict[str, tuple[float, float]] = {}
    for i in range(n_triangles + 2):
        x = (i // 2) * step + (i % 2) * (step / 2.0)
        y = (i % 2) * step
        coords[f"P{i+1}"] = (x, y)
    edges = []
    for i in range(n_triangles):
        a, b, c = f"P{i+1}", f"P{i+2}", f"P{i+3}"
        if i == 0:
            edges.append((a, b))
        edges.extend([(b, c), (a, c)])
    return points_distances_model(coords, edges)


def solve_corpus() -> dict[str, Model]:
    """2D point/distance models for the decompose-vs-direct equivalence sweep."""
    right = {"P1": (0, 0), "P2": (3, 0), "P3": (0, 4)}
    kite = {"P1": (0, 0), "P2": (4, 0), "P3": (6, 3), "P4": (2, 4)}
    pentagon = {
        "P1": (0, 0), "P2": (4, 0), "P3": (5.2, 3.8),
        "P4": (2.0, 6.2), "P5": (-1.2, 3.8),
    }
    return {
        "equilateral": three_distances_model(10, 10, 10),
        "right-triangle": points_distances_model(
            right, [("P1", "P2"), ("P2", "P3"), ("P1", "P3")]),
        "scalene": three_distances_model(7, 5, 9),
        "braced-quad": braced_quad_model(),
        "kite": points_distances_model(
            kite, [("P1", "P2"), ("P2", "P3"), ("P3", "P4"), ("P4", "P1"), ("P2", "P4")]),
        "strip3": triangle_strip(3),
        "strip4": triangle_strip(4),
        "strip5": triangle_strip(5),
        "seed-demo": seed_demo_model(),
        "pentagon-fan": points_distances_model(
            pentagon,
            [("P1", "P2"), ("P2", "P3"), ("P3", "P4"), ("P4", "P5"), ("P5", "P1"),
             ("P1", "P3"), ("P1", "P4")]),
    }
