"""Over-constrained part and well-constrained part detection.

The greedy procedures follow the classical recipe: grow a maximal independent
row set from a seed, then blame each excluded row on that set (the emitted
group is the excluded row plus the whole independent set; the exact rows it
numerically depends on are attached as ``support``).  The exhaustive oracles
realize the actual minimality definitions by subset enumeration, which is
what exposes the documented greedy failures: greedy groups can be strictly
larger than the true minimal dependent sets, and badly seeded well parts can
be strictly smaller than the maximal ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from .compiler import ResidualSystem, eval_jacobian
from .model import Model
from .numeric import rank_analyze
from .witness import characterize_at, compute_dor

SUPPORT_TOL = 1e-10


class CapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class DependencyGroup:
    rows: frozenset[int]
    kind: str  # "greedy" | "oracle-minimal"
    excluded_row: int | None = None
    support: frozenset[int] | None = None

    def sorted_rows(self) -> tuple[int, ...]:
        return tuple(sorted(self.rows))


@dataclass(frozen=True)
class WellPart:
    entities: frozenset[str]
    constraints: frozenset[str]

    def sorted_entities(self) -> tuple[str, ...]:
        return tuple(sorted(self.entities))


def _rank(rows: np.ndarray) -> int:
    if rows.size == 0:
        return 0
    return rank_analyze(rows).rank


def greedy_dependency_groups(system: ResidualSystem, assignment,
                             seed_row: int = 0) -> list[DependencyGroup]:
    """Dependency groups from a greedily grown maximal independent row set.

    Rows are scanned in ascending index order starting from ``seed_row``; each
    row that keeps the set independent joins it.  Every excluded row r yields
    the group {r} union the independent set; ``support`` records the rows with
    nonzero coefficients in r's (unique) expansion over the set.
    """
    J = eval_jacobian(system, assignment)
    m = J.shape[0]
    if m == 0:
        return []
    if not 0 <= seed_row < m:
        raise ValueError(f"seed row {seed_row} out of range")
    order = [seed_row] + [i for i in range(m) if i != seed_row]

    independent: list[int] = []
    excluded: list[int] = []
    for i in order:
        candidate = J[independent + [i]]
        if _rank(candidate) == len(independent) + 1:
            independent.append(i)
        else:
            excluded.append(i)

    groups = []
    basis = J[independent]
    for r in excluded:
        coeffs, *_ = np.linalg.lstsq(basis.T, J[r], rcond=None)
        scale = max(1.0, float(np.max(np.abs(coeffs))) if coeffs.size else 1.0)
        support = {
            independent[k]
            for k in np.flatnonzero(np.abs(coeffs) > SUPPORT_TOL * scale)
        }
        groups.append(DependencyGroup(
            rows=frozenset(independent) | {r},
            kind="greedy",
            excluded_row=r,
            support=frozenset(support) | {r},
        ))
    return groups


def oracle_min_dependent_sets(system: ResidualSystem, assignment,
                              size_cap: int = 12) -> list[DependencyGroup]:
    """All inclusion-minimal linearly dependent row sets, by exhaustive enumeration.

    Enumeration is by increasing cardinality with superset pruning, so every
    emitted set is minimal: each proper subset is independent.
    """
    J = eval_jacobian(system, assignment)
    m = J.shape[0]
    if m > size_cap:
        raise CapExceeded(f"{m} rows exceeds the oracle cap of {size_cap}")
    found: list[frozenset[int]] = []
    for k in range(1, m + 1):
        for combo in combinations(range(m), k):
            s = frozenset(combo)
            if any(prev <= s for prev in found):
                continue
            if _rank(J[list(combo)]) < k:
                found.append(s)
    return [DependencyGroup(rows=s, kind="oracle-minimal") for s in found]


def _induced_rows(system: ResidualSystem, model: Model, entity_subset: set[str]) -> list[int]:
    constraint_of = {c.id: c for c in model.constraints}
    rows = []
    for r in system.residuals:
        if r.kind == "anchor":
            continue
        if r.kind == "normalization":
            if r.source in entity_subset:
                rows.append(r.index)
        else:
            c = constraint_of[r.source]
            if set(c.entities) <= entity_subset:
                rows.append(r.index)
    return rows


def _induced_constraints(model: Model, entity_subset: set[str]) -> frozenset[str]:
    return frozenset(
        c.id for c in model.constraints if set(c.entities) <= entity_subset)


def is_well_part(model: Model, system: ResidualSystem, assignment,
                 entity_subset: Iterable[str]) -> bool:
    """Whether the induced subsystem characterizes as well-constrained at the witness.

    A part with no induced constraints is never well (a lone free entity
    satisfies the rank equalities vacuously but is not constrained at all).
    """
    subset = set(entity_subset)
    if not subset:
        return False
    rows = _induced_rows(system, model, subset)
    constraints = _induced_constraints(model, subset)
    if not constraints:
        return False
    columns = system.columns_of(subset)
    dor = compute_dor(model, system, assignment, columns=columns).dor
    report = characterize_at(system, assignment, dor, rows=rows, columns=columns)
    return report.verdict == "well"


def greedy_well_parts(model: Model, system: ResidualSystem, assignment,
                      seed_entity: str | None = None) -> list[WellPart]:
    """Greedy maximal well-constrained parts, seed first, leftovers rescanned.

    A single ascending-id pass grows each part, adding an entity iff the
    induced subsystem stays well-constrained; the procedure repeats on the
    remaining entities until none are left.  Results are seed-dependent by
    design (that is the documented limitation), but deterministic for a fixed
    seed.
    """
    remaining = [e.id for e in model.entities]
    parts: list[WellPart] = []
    seed: str | None = seed_entity
    while remaining:
        if seed is None or seed not in remaining:
            seed = min(remaining)
        current = {seed}
        for eid in sorted(remaining):
            if eid == seed:
                continue
            if is_well_part(model, system, assignment, current | {eid}):
                current.add(eid)
        if is_well_part(model, system, assignment, current):
            parts.append(WellPart(frozenset(current), _induced_constraints(model, current)))
            remaining = [i for i in remaining if i not in current]
        else:
            remaining.remove(seed)
        seed = None
    return parts


def oracle_max_well_part(model: Model, system: ResidualSystem, assignment,
                         entity_cap: int = 10) -> WellPart:
    """Largest well-constrained entity subset by exhaustive enumeration.

    Ties break by lexicographic entity-id order; when nothing qualifies the
    returned part is empty.
    """
    ids = sorted(e.id for e in model.entities)
    if len(ids) > entity_cap:
        raise CapExceeded(f"{len(ids)} entities exceeds the oracle cap of {entity_cap}")
    for k in range(len(ids), 0, -1):
        for combo in combinations(ids, k):
            if is_well_part(model, system, assignment, combo):
                subset = set(combo)
                return WellPart(frozenset(subset), _induced_constraints(model, subset))
    return WellPart(frozenset(), frozenset())


def detection_report(dependency_groups: Sequence[DependencyGroup],
                     well_parts: Sequence[WellPart],
                     method: str, seed: int) -> dict:
    return {
        "dependencyGroups": sorted(list(g.sorted_rows()) for g in dependency_groups),
        "wellParts": sorted(list(p.sorted_entities()) for p in well_parts),
        "method": method,
        "seed": seed,
    }
