"""Witness configuration method: witness generation, degree of rigidity,
and the rank-based constraint-state criteria.

A witness is a generic variable assignment at which every singular
(incidence-type) residual and every normalization holds; at such a point the
Jacobian has the same rank structure as at actual solutions.  The verdict
logic on the unanchored Jacobian J (m rows, n columns) is

    over   iff  rank(J) < m            (dependent rows, kernel of J^T nonempty)
    under  iff  n - rank(J) > dor      (free perturbations beyond rigid motions)
    well   iff  neither

where dor, the degree of rigidity, is the rank of the rigid-motion basis:
translations and rotations translated to parameter-space velocities at the
witness.  On rigid-motion-invariant systems "well" coincides with the
equalities rank = m and n - rank = dor; systems containing fix constraints
can legitimately have n - rank < dor and still count as well.

Random configurations can be accidentally singular, so characterization votes
over three independently seeded witnesses and reports "unstable" when no two
agree on (rank, dor).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import geometry
from .compiler import (
    ResidualSystem,
    compile_model,
    eval_jacobian,
    params_from_assignment,
)
from .model import Entity, Model, PLANE3, HESSIAN, POINT_NORMAL, LINE3
from .numeric import RankAnalysis, optimize_solve, rank_analyze

WITNESS_TOL = 1e-9
COINCIDENCE_TOL = 1e-6


class WitnessError(RuntimeError):
    pass


@dataclass(frozen=True)
class WitnessConfiguration:
    assignment: np.ndarray
    satisfied_rows: tuple[int, ...]  # singular + normalization residual indices
    seed: int
    attempts: int


def _entities_coincide(model: Model, params: dict[str, tuple[float, ...]]) -> bool:
    by_kind: dict[tuple[str, str | None], list[np.ndarray]] = {}
    for e in model.entities:
        key = (e.kind, e.spec.representation)
        by_kind.setdefault(key, []).append(np.asarray(params[e.id]))
    for vals in by_kind.values():
        for i in range(len(vals)):
            for j in range(i + 1, len(vals)):
                if np.max(np.abs(vals[i] - vals[j])) < COINCIDENCE_TOL:
                    return True
    return False


def _cross_constraints_hold(model: Model, params: dict[str, tuple[float, ...]]) -> bool:
    # point-on-line (3D) and parallel (3D) compile to two of three cross
    # components; re-check the full cross product so a witness cannot sit on
    # the spurious branch where only the dropped component is violated.
    if model.dimension != 3:
        return True

    def direction(e: Entity) -> np.ndarray:
        p = np.asarray(params[e.id])
        if e.kind == LINE3:
            return p[3:6]
        if e.spec.representation == HESSIAN:
            return p[0:3]
        return p[3:6]

    for c in model.constraints:
        if c.kind == "parallel":
            u1 = direction(model.entity(c.entities[0]))
            u2 = direction(model.entity(c.entities[1]))
            if np.max(np.abs(np.cross(u1, u2))) > 1e-7:
                return False
        elif c.kind == "point-on-line":
            p = np.asarray(params[c.entities[0]])
            lv = np.asarray(params[c.entities[1]])
            if np.max(np.abs(np.cross(p - lv[0:3], lv[3:6]))) > 1e-7:
                return False
    return True


def generate_witness(system: ResidualSystem, model: Model, seed: int = 0,
                     max_attempts: int = 10) -> WitnessConfiguration:
    """Sample a witness: uniform in [-1, 1]^n projected onto the singular subsystem.

    The singular subsystem (incidences, parallels, normalizations) is usually
    highly under-constrained and solves in one attempt; candidates where two
    same-kind entities coincide are rejected as accidentally degenerate.
    """
    base = system.without_anchors()
    rows = [r.index for r in base.residuals if r.singular]
    # project onto the exact singular variety: cross-product constraints use
    # all three components here, so the reduced system's spurious branch is
    # never satisfied by construction
    projection = compile_model(model, cross_mode="full") if rows else base
    proj_rows = [r.index for r in projection.residuals if r.singular]
    rng = np.random.default_rng(seed)
    last_error = "no attempts made"
    for attempt in range(1, max_attempts + 1):
        x = rng.uniform(-1.0, 1.0, size=base.n_variables)
        if rows:
            result = optimize_solve(projection, x, max_iter=200, tol=WITNESS_TOL,
                                    rows=proj_rows)
            if not result.converged:
                last_error = f"singular subsystem projection: {result.status}"
                continue
            x = result.assignment
        params = params_from_assignment(model, base, x)
        if _entities_coincide(model, params):
            last_error = "coincident entities in sample"
            continue
        if not _cross_constraints_hold(model, params):
            last_error = "spurious branch of a reduced cross-product constraint"
            continue
        return WitnessConfiguration(x, tuple(rows), seed, attempt)
    raise WitnessError(
        f"witness generation failed after {max_attempts} attempts (seed {seed}): {last_error}")


@dataclass(frozen=True)
class RigidMotionBasis:
    matrix: np.ndarray  # k x n, row i = parameter velocity of generator i
    generators: tuple[str, ...]


@dataclass(frozen=True)
class DorResult:
    dor: int
    analysis: RankAnalysis


def motion_basis(model: Model, system: ResidualSystem, assignment) -> RigidMotionBasis:
    """Rigid-motion generator velocities in the system's variable coordinates."""
    x = np.asarray(assignment, dtype=float)
    k = geometry.generator_count(model.dimension)
    M = np.zeros((k, system.n_variables))
    params = params_from_assignment(model, system, x)
    col: dict[tuple[str, int], int] = {
        (v.entity_id, v.component): v.index for v in system.variables
    }
    for e in model.entities:
        rows = geometry.motion_rows(e, params[e.id])
        for comp in range(e.spec.raw_size):
            M[:, col[(e.id, comp)]] = rows[:, comp]
    names = (
        ("tx", "ty", "rot") if model.dimension == 2
        else ("tx", "ty", "tz", "rx", "ry", "rz")
    )
    return RigidMotionBasis(M, names)


def compute_dor(model: Model, system: ResidualSystem, assignment,
                columns: Sequence[int] | None = None) -> DorResult:
    """Degree of rigidity: numerical rank of the rigid-motion basis.

    ``columns`` restricts the basis to a variable subset (used for
    per-subsystem DOR in counting and detection).
    """
    basis = motion_basis(model, system, assignment)
    M = basis.matrix if columns is None else basis.matrix[:, list(columns)]
    analysis = rank_analyze(M)
    return DorResult(analysis.rank, analysis)


@dataclass(frozen=True)
class WcmReport:
    columns: int
    rows: int
    rank: int
    dor: int
    over: bool
    under: bool
    verdict: str  # well | under | over | over-and-under | unstable
    free_motions: int
    dependent_groups: tuple[tuple[int, ...], ...]
    rank_analysis: RankAnalysis | None
    seeds: tuple[int, ...] = ()
    sub_reports: tuple["WcmReport", ...] = ()

    def matched(self) -> bool:
        """Whether kernel dimension matches the degree of rigidity."""
        return self.columns - self.rank == self.dor

    def to_json_dict(self) -> dict:
        return {
            "columns": self.columns,
            "rows": self.rows,
            "rank": self.rank,
            "dor": self.dor,
            "verdict": self.verdict,
            "dependentGroups": [list(g) for g in self.dependent_groups],
            "freeMotions": self.free_motions,
            "seeds": list(self.seeds),
        }


def _dependency_supports(analysis: RankAnalysis, tol: float = 1e-10) -> tuple[tuple[int, ...], ...]:
    groups = []
    for k in range(analysis.cokernel.shape[1]):
        vec = analysis.cokernel[:, k]
        support = tuple(int(i) for i in np.flatnonzero(np.abs(vec) > tol))
        if support:
            groups.append(support)
    return tuple(groups)


def characterize_at(system: ResidualSystem, assignment, dor: int,
                    rows: Sequence[int] | None = None,
                    columns: Sequence[int] | None = None,
                    seeds: tuple[int, ...] = ()) -> WcmReport:
    """Single-witness constraint-state report on the (sub)system Jacobian."""
    J = eval_jacobian(system, assignment, rows=rows)
    if columns is not None:
        J = J[:, list(columns)]
    analysis = rank_analyze(J)
    m, n = analysis.shape
    over = analysis.rank < m
    under = (n - analysis.rank) > dor
    if over and under:
        verdict = "over-and-under"
    elif over:
        verdict = "over"
    elif under:
        verdict = "under"
    else:
        verdict = "well"
    return WcmReport(
        columns=n,
        rows=m,
        rank=analysis.rank,
        dor=dor,
        over=over,
        under=under,
        verdict=verdict,
        free_motions=max(0, (n - analysis.rank) - dor),
        dependent_groups=_dependency_supports(analysis),
        rank_analysis=analysis,
        seeds=seeds,
    )


def characterize(system: ResidualSystem, model: Model, seed: int = 0,
                 votes: int = 3, max_attempts: int = 10) -> WcmReport:
    """Majority-vote characterization over independently seeded witnesses.

    Anchors are excluded: the criteria quantify rigid-motion freedom, which
    anchoring deliberately removes.  If no two witnesses agree on (rank, dor)
    the verdict is "unstable" and the individual reports are attached.
    """
    base = system.without_anchors()
    if base.n_variables == 0:
        return characterize_at(base, np.zeros(0), 0, seeds=(seed,))
    reports: list[WcmReport] = []
    for i in range(votes):
        wseed = seed + i
        wit = generate_witness(base, model, seed=wseed, max_attempts=max_attempts)
        dor = compute_dor(model, base, wit.assignment).dor
        reports.append(characterize_at(base, wit.assignment, dor, seeds=(wseed,)))
    keys = [(r.rank, r.dor) for r in reports]
    needed = 1 if votes == 1 else max(2, votes // 2 + 1)
    for i, key in enumerate(keys):
        if keys.count(key) >= needed:
            return replace(reports[i], seeds=tuple(r.seeds[0] for r in reports))
    return WcmReport(
        columns=reports[0].columns,
        rows=reports[0].rows,
        rank=-1,
        dor=-1,
        over=False,
        under=False,
        verdict="unstable",
        free_motions=0,
        dependent_groups=(),
        rank_analysis=None,
        seeds=tuple(r.seeds[0] for r in reports),
        sub_reports=tuple(reports),
    )


_SCHEME_TAGS = {HESSIAN: PLANE3, POINT_NORMAL: PLANE3, "point-direction": LINE3}


def _convert_entity(e: Entity, scheme: str) -> Entity:
    if e.kind != _SCHEME_TAGS.get(scheme) or (e.spec.representation == scheme):
        return e
    if e.kind != PLANE3:
        raise ValueError(f"entity {e.id!r} does not support scheme {scheme!r}")
    params = None
    if e.params is not None:
        p = np.asarray(e.params, dtype=float)
        if e.spec.representation == HESSIAN and scheme == POINT_NORMAL:
            n = p[0:3] / np.linalg.norm(p[0:3])
            point = -p[3] * n
            params = tuple(np.concatenate([point, n]))
        elif e.spec.representation == POINT_NORMAL and scheme == HESSIAN:
            n = p[3:6] / np.linalg.norm(p[3:6])
            params = tuple(np.concatenate([n, [-n @ p[0:3]]]))
    return Entity(e.id, e.kind, params, scheme)


@dataclass(frozen=True)
class SchemeRow:
    scheme: str
    columns: int
    rank: int
    dor: int
    matched: bool
    verdict: str


def representation_sensitivity(model: Model, schemes: Sequence[str],
                               seed: int = 0) -> list[SchemeRow]:
    """Re-run compile + characterize under each representation scheme.

    Different schemes for the same geometry legitimately change ColumnSize,
    Rank and DOR, and can flip the match between kernel dimension and DOR;
    the returned rows make that comparison explicit.
    """
    out = []
    for scheme in schemes:
        if scheme not in _SCHEME_TAGS:
            raise ValueError(f"unsupported representation scheme {scheme!r}")
        if model.entities and not any(e.kind == _SCHEME_TAGS[scheme] for e in model.entities):
            raise ValueError(f"no entity in the model supports scheme {scheme!r}")
        converted = Model(
            model.dimension,
            tuple(_convert_entity(e, scheme) for e in model.entities),
            model.constraints,
        )
        system = compile_model(converted)
        if not converted.entities:
            out.append(SchemeRow(scheme, 0, 0, 0, True, "well"))
            continue
        report = characterize(system, converted, seed=seed)
        out.append(SchemeRow(
            scheme, report.columns, report.rank, report.dor,
            report.matched(), report.verdict))
    return out
