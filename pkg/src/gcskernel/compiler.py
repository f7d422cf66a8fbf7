"""Translation of a model into a residual system F(X) = 0 with analytic derivatives.

One variable is created per raw entity parameter (entity order, then component
order), one residual per DOC unit of each constraint, followed by the
normalization residuals of redundant parameterizations, followed by any frame
anchors.  Compilation is deterministic: the same model always yields the same
variable and residual ordering.

Residual conventions:

* point-point distances use the squared form ``|b - a|^2 - v^2``;
* 2D line incidence uses the Hesse normal form ``x cos(phi) + y sin(phi) - rho``;
* the 2D line-line angle compiles to ``(phi1 - phi2)^2 - (pi - v)^2`` by
  default (``angle_form="linear"`` selects ``phi1 - phi2 - (pi - v)``);
* 3D angles use dot products, 3D parallelism and point-on-line use two
  components of the relevant cross product (the dropped component is the one
  aligned with the largest initial direction coordinate, so the two kept
  equations are locally independent near the sketch).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import expr as ex
from .model import (
    CONSTRAINT_KINDS,
    HESSIAN,
    LINE3,
    PLANE3,
    POINT2,
    POINT3,
    Constraint,
    Entity,
    Model,
    validate,
)


class CompileError(ValueError):
    pass


class AnchorError(ValueError):
    pass


class EvaluationError(ValueError):
    """Domain error during evaluation, tagged with the residual index."""

    def __init__(self, residual_index: int, message: str):
        super().__init__(f"residual {residual_index}: {message}")
        self.residual_index = residual_index


@dataclass(frozen=True)
class Variable:
    index: int
    entity_id: str
    component: int
    name: str  # e.g. "P1.x"


@dataclass(frozen=True)
class Residual:
    index: int
    name: str
    expression: ex.Expr
    kind: str          # "constraint" | "normalization" | "anchor"
    source: str | None  # constraint id, entity id for normalizations, None for anchors
    singular: bool


@dataclass(frozen=True)
class ResidualSystem:
    dimension: int
    variables: tuple[Variable, ...]
    residuals: tuple[Residual, ...]

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def n_residuals(self) -> int:
        return len(self.residuals)

    def variable_names(self) -> list[str]:
        return [v.name for v in self.variables]

    def columns_of(self, entity_ids: Iterable[str]) -> list[int]:
        wanted = set(entity_ids)
        return [v.index for v in self.variables if v.entity_id in wanted]

    def singular_rows(self) -> list[int]:
        return [r.index for r in self.residuals if r.singular]

    def anchor_rows(self) -> list[int]:
        return [r.index for r in self.residuals if r.kind == "anchor"]

    def without_anchors(self) -> "ResidualSystem":
        kept = tuple(r for r in self.residuals if r.kind != "anchor")
        return ResidualSystem(self.dimension, self.variables, kept)


def _entity_vars(variables: list[Variable], counter: list[int], entity: Entity) -> list[ex.Expr]:
    spec = entity.spec
    out = []
    for comp, pname in enumerate(spec.param_names):
        idx = counter[0]
        counter[0] += 1
        variables.append(Variable(idx, entity.id, comp, f"{entity.id}.{pname}"))
        out.append(ex.var(idx))
    return out


def _initial_direction(entity: Entity, group: tuple[int, ...]) -> np.ndarray:
    if entity.params is not None:
        vec = np.array([entity.params[i] for i in group], dtype=float)
        if np.linalg.norm(vec) > 1e-12:
            return vec / np.linalg.norm(vec)
    fallback = np.zeros(len(group))
    fallback[-1] = 1.0
    return fallback


def _cross_components(a: Sequence[ex.Expr], b: Sequence[ex.Expr]) -> list[ex.Expr]:
    return [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]


def _drop_index(direction: np.ndarray) -> int:
    # The cross product of near-parallel vectors is orthogonal to them, so the
    # component along the dominant direction axis carries no information.
    return int(np.argmax(np.abs(direction)))


def _plane_normal_and_offset(entity: Entity, v: list[ex.Expr]):
    """Return (normal exprs, signed-offset expr builder) for either plane scheme."""
    if entity.spec.representation == HESSIAN:
        n = v[0:3]
        def offset(p: Sequence[ex.Expr]) -> ex.Expr:
            return ex.dot(n, p) + v[3]
    else:  # point-normal: p0 (0..2), n (3..5)
        n = v[3:6]
        p0 = v[0:3]
        def offset(p: Sequence[ex.Expr]) -> ex.Expr:
            return ex.dot(n, [p[i] - p0[i] for i in range(3)])
    return n, offset


def _direction_of(entity: Entity, v: list[ex.Expr]) -> tuple[list[ex.Expr], np.ndarray]:
    """Direction-like expression triple and its initial value for 3D line/plane."""
    if entity.kind == LINE3:
        return v[3:6], _initial_direction(entity, (3, 4, 5))
    if entity.kind == PLANE3:
        if entity.spec.representation == HESSIAN:
            return v[0:3], _initial_direction(entity, (0, 1, 2))
        return v[3:6], _initial_direction(entity, (3, 4, 5))
    raise CompileError(f"entity {entity.id!r} has no direction")


def _emit_constraint(model: Model, c: Constraint, env: dict[str, list[ex.Expr]],
                     angle_form: str, full_cross: bool = False) -> list[ex.Expr]:
    dim = model.dimension
    ents = [model.entity(eid) for eid in c.entities]
    v = [env[eid] for eid in c.entities]
    kind = c.kind

    if kind == "distance-pp":
        diff = [v[1][i] - v[0][i] for i in range(dim)]
        return [ex.dot(diff, diff) - c.value * c.value]

    if kind == "distance-pl":
        if dim == 2:
            p, (phi, rho) = v[0], v[1]
            signed = p[0] * ex.cos(phi) + p[1] * ex.sin(phi) - rho
            return [ex.square(signed) - c.value * c.value]
        p, lv = v[0], v[1]
        rel = [p[i] - lv[i] for i in range(3)]
        cr = _cross_components(rel, lv[3:6])
        return [ex.dot(cr, cr) - c.value * c.value]

    if kind == "distance-pplane":
        _, offset = _plane_normal_and_offset(ents[1], v[1])
        return [ex.square(offset(v[0])) - c.value * c.value]

    if kind == "distance-ll":
        if dim == 2:
            return [ex.square(v[0][1] - v[1][1]) - c.value * c.value]
        # distance from line 2's point to line 1 (lines held parallel by a
        # separate constraint)
        rel = [v[1][i] - v[0][i] for i in range(3)]
        cr = _cross_components(rel, v[0][3:6])
        return [ex.dot(cr, cr) - c.value * c.value]

    if kind == "distance-planeplane":
        n1, _ = _plane_normal_and_offset(ents[0], v[0])
        if ents[0].spec.representation == HESSIAN and ents[1].spec.representation == HESSIAN:
            s = ex.dot(n1, v[1][0:3])
            delta = v[0][3] - s * v[1][3]
            return [ex.square(delta) - c.value * c.value]
        # in the point-normal scheme the offset of plane 2's point from plane 1
        _, offset1 = _plane_normal_and_offset(ents[0], v[0])
        return [ex.square(offset1(v[1][0:3])) - c.value * c.value]

    if kind == "angle-ll":
        if dim == 2:
            dphi = v[0][0] - v[1][0]
            target = math.pi - c.value
            if angle_form == "squared":
                return [ex.square(dphi) - target * target]
            # the linear form must pick a sign branch; take the one nearest
            # the sketch when initial parameters are available
            sign = 1.0
            if ents[0].params is not None and ents[1].params is not None:
                if ents[0].params[0] < ents[1].params[0]:
                    sign = -1.0
            return [dphi - sign * target]
        d1, d2 = v[0][3:6], v[1][3:6]
        return [ex.dot(d1, d2) - math.cos(c.value)]

    if kind == "angle-planeplane":
        n1, _ = _plane_normal_and_offset(ents[0], v[0])
        n2, _ = _plane_normal_and_offset(ents[1], v[1])
        return [ex.dot(n1, n2) - math.cos(c.value)]

    if kind == "point-on-line":
        if dim == 2:
            p, (phi, rho) = v[0], v[1]
            return [p[0] * ex.cos(phi) + p[1] * ex.sin(phi) - rho]
        p, lv = v[0], v[1]
        rel = [p[i] - lv[i] for i in range(3)]
        cr = _cross_components(rel, lv[3:6])
        if full_cross:
            return cr
        _, d0 = _direction_of(ents[1], v[1])
        drop = _drop_index(d0)
        return [cr[i] for i in range(3) if i != drop]

    if kind == "point-on-plane":
        _, offset = _plane_normal_and_offset(ents[1], v[1])
        return [offset(v[0])]

    if kind == "parallel":
        if dim == 2:
            return [ex.sin(v[0][0] - v[1][0])]
        u1, d0 = _direction_of(ents[0], v[0])
        u2, _ = _direction_of(ents[1], v[1])
        cr = _cross_components(u1, u2)
        if full_cross:
            return cr
        drop = _drop_index(d0)
        return [cr[i] for i in range(3) if i != drop]

    if kind == "perpendicular":
        if dim == 2:
            return [ex.cos(v[0][0] - v[1][0])]
        u1, _ = _direction_of(ents[0], v[0])
        u2, _ = _direction_of(ents[1], v[1])
        return [ex.dot(u1, u2)]

    if kind == "coincident":
        return [v[0][i] - v[1][i] for i in range(dim)]

    if kind == "fix":
        ent = ents[0]
        return [v[0][i] - float(ent.params[i]) for i in range(dim)]

    raise CompileError(f"unsupported constraint kind {kind!r}")


def compile_model(model: Model, angle_form: str = "squared",
                  cross_mode: str = "reduced") -> ResidualSystem:
    """Compile a validated model into a residual system.

    ``cross_mode="full"`` emits all three components of cross-product
    constraints (3D parallelism, point on 3D line) instead of the two
    independent ones; the redundant variant over-counts DOC but describes the
    exact singular variety, which is what witness projection needs.  Both
    modes produce the identical variable layout.

    Raises :class:`CompileError` when validation reports violations or a
    constraint kind has no emitter.
    """
    problems = validate(model)
    if problems:
        summary = "; ".join(f"{p.code}({p.subject})" for p in problems[:5])
        raise CompileError(f"model does not validate: {summary}")
    if angle_form not in ("squared", "linear"):
        raise CompileError(f"unknown angle form {angle_form!r}")
    if cross_mode not in ("reduced", "full"):
        raise CompileError(f"unknown cross mode {cross_mode!r}")

    variables: list[Variable] = []
    counter = [0]
    env: dict[str, list[ex.Expr]] = {}
    for e in model.entities:
        env[e.id] = _entity_vars(variables, counter, e)

    residuals: list[Residual] = []

    def push(expression: ex.Expr, name: str, kind: str, source: str | None, singular: bool):
        residuals.append(Residual(len(residuals), name, expression, kind, source, singular))

    for c in model.constraints:
        spec = CONSTRAINT_KINDS[c.kind]
        exprs = _emit_constraint(model, c, env, angle_form,
                                 full_cross=(cross_mode == "full"))
        for k, e_ in enumerate(exprs):
            suffix = "" if len(exprs) == 1 else f"[{k}]"
            push(e_, f"{c.id}{suffix}", "constraint", c.id, spec.singular)

    for e in model.entities:
        for g, group in enumerate(e.spec.unit_groups):
            vec = [env[e.id][i] for i in group]
            push(ex.dot(vec, vec) - 1.0, f"unit:{e.id}", "normalization", e.id, True)

    return ResidualSystem(model.dimension, tuple(variables), tuple(residuals))


def add_anchors(system: ResidualSystem, model: Model) -> ResidualSystem:
    """Append residuals pinning the global frame (3 in 2D, 6 in 3D).

    2D: the first point is the origin and the first-to-second point vector is
    the x axis.  3D: first point at origin, second on the +x axis, third in
    the xy plane.
    """
    point_tag = POINT2 if system.dimension == 2 else POINT3
    points = [e for e in model.entities if e.kind == point_tag]
    need = 2 if system.dimension == 2 else 3
    if len(points) < need:
        raise AnchorError(
            f"anchoring a {system.dimension}D system needs {need} point entities, "
            f"model has {len(points)}")

    cols = {v.name: v.index for v in system.variables}

    def pv(entity_id: str, comp_name: str) -> ex.Expr:
        return ex.var(cols[f"{entity_id}.{comp_name}"])

    residuals = list(system.residuals)

    def push(expression: ex.Expr, name: str):
        residuals.append(Residual(len(residuals), name, expression, "anchor", None, False))

    p1 = points[0].id
    p2 = points[1].id
    if system.dimension == 2:
        push(pv(p1, "x"), f"anchor:{p1}.x")
        push(pv(p1, "y"), f"anchor:{p1}.y")
        push(pv(p2, "y") - pv(p1, "y"), f"anchor:{p2}.y-{p1}.y")
    else:
        p3 = points[2].id
        if all(p.params is not None for p in points[:3]):
            a = np.array(points[0].params)
            b = np.array(points[1].params)
            c = np.array(points[2].params)
            if np.linalg.norm(np.cross(b - a, c - a)) < 1e-9:
                raise AnchorError("first three points are collinear; cannot fix a 3D frame")
        for comp in ("x", "y", "z"):
            push(pv(p1, comp), f"anchor:{p1}.{comp}")
        for comp in ("y", "z"):
            push(pv(p2, comp) - pv(p1, comp), f"anchor:{p2}.{comp}-{p1}.{comp}")
        push(pv(p3, "z") - pv(p1, "z"), f"anchor:{p3}.z-{p1}.z")

    return ResidualSystem(system.dimension, system.variables, tuple(residuals))


def eval_residuals(system: ResidualSystem, assignment: Sequence[float],
                   rows: Sequence[int] | None = None) -> np.ndarray:
    x = np.asarray(assignment, dtype=float)
    if x.shape != (system.n_variables,):
        raise ValueError(f"assignment must have length {system.n_variables}, got {x.shape}")
    picked = system.residuals if rows is None else [system.residuals[i] for i in rows]
    out = np.empty(len(picked))
    for k, r in enumerate(picked):
        try:
            out[k] = ex.evaluate(r.expression, x)
        except ex.DomainError as err:
            raise EvaluationError(r.index, str(err)) from err
    return out


def eval_jacobian(system: ResidualSystem, assignment: Sequence[float],
                  rows: Sequence[int] | None = None) -> np.ndarray:
    """Analytic Jacobian, entry (i, j) = d r_i / d x_j."""
    x = np.asarray(assignment, dtype=float)
    if x.shape != (system.n_variables,):
        raise ValueError(f"assignment must have length {system.n_variables}, got {x.shape}")
    picked = system.residuals if rows is None else [system.residuals[i] for i in rows]
    J = np.zeros((len(picked), system.n_variables))
    for k, r in enumerate(picked):
        try:
            _, grad = ex.eval_with_grad(r.expression, x)
        except ex.DomainError as err:
            raise EvaluationError(r.index, str(err)) from err
        for j, d in grad.items():
            J[k, j] = d
    return J


def dump_equations(system: ResidualSystem) -> str:
    """Textual listing, one residual per line, deterministic order."""
    names = system.variable_names()
    lines = [
        f"{r.index:3d} {r.kind[:4]:4s} {r.name}: {ex.render(r.expression, names)} = 0"
        for r in system.residuals
    ]
    return "\n".join(lines)


def assignment_from_params(model: Model, system: ResidualSystem) -> np.ndarray:
    """Initial assignment from entity params; raises if any are missing."""
    x = np.zeros(system.n_variables)
    by_id = {e.id: e for e in model.entities}
    for v in system.variables:
        ent = by_id[v.entity_id]
        if ent.params is None:
            raise ValueError(f"entity {ent.id!r} has no parameters for an initial guess")
        x[v.index] = ent.params[v.component]
    return x


def params_from_assignment(model: Model, system: ResidualSystem,
                           assignment: Sequence[float]) -> dict[str, tuple[float, ...]]:
    x = np.asarray(assignment, dtype=float)
    out: dict[str, list[float]] = {e.id: [0.0] * e.spec.raw_size for e in model.entities}
    for v in system.variables:
        out[v.entity_id][v.component] = float(x[v.index])
    return {k: tuple(vals) for k, vals in out.items()}


def induced_model(model: Model, entity_ids: Iterable[str]) -> Model:
    """Submodel on an entity subset with its induced constraints."""
    keep = set(entity_ids)
    ents = tuple(e for e in model.entities if e.id in keep)
    cons = tuple(c for c in model.constraints if set(c.entities) <= keep)
    return Model(model.dimension, ents, cons)


def linear_system(coefficients, rhs, variable_names: Sequence[str] | None = None) -> ResidualSystem:
    """Residual system for A x = b, one residual per row (sum a_ij x_j - b_i).

    Used for raw (non-geometric) equation sets such as hand-written linear
    examples; rows are named E1, E2, ...
    """
    A = np.asarray(coefficients, dtype=float)
    b = np.asarray(rhs, dtype=float)
    if A.ndim != 2 or b.shape != (A.shape[0],):
        raise ValueError("need an m x n matrix and a length-m right-hand side")
    m, n = A.shape
    if variable_names is None:
        variable_names = [f"x{j}" for j in range(n)]
    variables = tuple(Variable(j, variable_names[j], 0, variable_names[j]) for j in range(n))
    residuals = []
    for i in range(m):
        terms = ex.const(-b[i])
        for j in range(n):
            if A[i, j] != 0.0:
                terms = terms + ex.const(A[i, j]) * ex.var(j)
        residuals.append(Residual(i, f"E{i + 1}", terms, "constraint", f"E{i + 1}", False))
    return ResidualSystem(0, variables, tuple(residuals))
