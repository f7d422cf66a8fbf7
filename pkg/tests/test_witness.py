import numpy as np
import pytest

from gcskernel import (
    Model,
    WitnessError,
    add_anchors,
    assignment_from_params,
    characterize,
    compile_model,
    compute_dor,
    eval_jacobian,
    eval_residuals,
    generate_witness,
    motion_basis,
    rank_analyze,
    representation_sensitivity,
)
from gcskernel import geometry, zoo
from gcskernel.model import Constraint, Entity


# --- witness generation -------------------------------------------------------

def test_witness_satisfies_incidences():
    m = zoo.triangle_model()
    s = compile_model(m)
    for seed in range(10):
        wit = generate_witness(s, m, seed=seed)
        r = eval_residuals(s, wit.assignment, rows=list(wit.satisfied_rows))
        assert np.max(np.abs(r)) <= 1e-9 if r.size else True


def test_witness_without_singular_constraints_is_immediate():
    m = zoo.three_distances_model()
    s = compile_model(m)
    wit = generate_witness(s, m, seed=0)
    assert wit.attempts == 1


def test_witness_projection_is_cheap_on_corpus():
    models = [zoo.triangle_model(), zoo.parallel_lines_model(),
              zoo.plane_prism_model(), zoo.double_banana_model()]
    for m in models:
        s = compile_model(m)
        wit = generate_witness(s, m, seed=0)
        assert wit.attempts == 1


def test_witness_generation_failure():
    # two points forced coincident: every projected sample is degenerate
    m = Model(2, (Entity("P1", "point2"), Entity("P2", "point2")),
              (Constraint("c", "coincident", ("P1", "P2")),))
    s = compile_model(m)
    with pytest.raises(WitnessError):
        generate_witness(s, m, seed=0, max_attempts=3)


# --- degree of rigidity ---------------------------------------------------------

def dor_of(model) -> int:
    s = compile_model(model)
    x = assignment_from_params(model, s)
    return compute_dor(model, s, x).dor


def test_dor_values():
    assert dor_of(zoo.collinear_points_model(3, 2)) == 3  # see test_acceptance note
    assert dor_of(zoo.points_distances_model(
        {"A": (0, 0), "B": (4, 0), "C": (1, 3)}, [])) == 3
    assert dor_of(zoo.point_pair_distance_3d()) == 5
    assert dor_of(zoo.single_point_3d()) == 3
    # the 3D analog of the degenerate case: rotations about the common line
    # act trivially
    assert dor_of(zoo.collinear_points_model(3, 3)) == 5
    # fully coincident 2D points: rotation velocity is a translation combo
    m = Model(2, tuple(Entity(f"P{i}", "point2", (0.5, -0.25)) for i in range(3)), ())
    assert dor_of(m) == 2


def test_dor_bounds_and_monotonicity():
    rng = np.random.default_rng(0)
    for n in range(1, 5):
        coords = {f"P{i}": tuple(rng.normal(size=2)) for i in range(n)}
        m = zoo.points_distances_model(coords, [])
        assert 0 <= dor_of(m) <= 3
    base = zoo.point_pair_distance_3d()
    assert dor_of(base) == 5
    grown = Model(3, base.entities + (Entity("P3", "point3", (1.0, 2.0, 0.5)),),
                  base.constraints)
    assert dor_of(grown) >= dor_of(base)


def test_motion_basis_matches_finite_differences():
    m = Model(3, (
        Entity("P", "point3", (0.3, -0.7, 1.1)),
        Entity("L", "line3", (0.2, 0.4, -0.1, 0.0, 0.6, 0.8)),
        Entity("F", "plane3", (0.6, 0.0, 0.8, -0.5), "hessian"),
        Entity("G", "plane3", (0.1, 0.2, 0.3, 0.0, 0.6, 0.8), "point-normal"),
    ), ())
    s = compile_model(m)
    x = assignment_from_params(m, s)
    basis = motion_basis(m, s, x)
    h = 1e-7
    generators = []
    eye = np.eye(3)
    for i in range(3):
        generators.append((np.eye(3), h * eye[i]))
    for i in range(3):
        generators.append((geometry.rotation_3d(eye[i], h), np.zeros(3)))
    for k, (R, t) in enumerate(generators):
        fd = np.zeros(s.n_variables)
        for e in m.entities:
            cols = s.columns_of([e.id])
            p0 = np.asarray(e.params, dtype=float)
            moved = geometry.apply_rigid(e, p0, R, t)
            fd[cols] = (np.asarray(moved) - p0) / h
        assert np.max(np.abs(basis.matrix[k] - fd)) <= 1e-6


def test_dor_pivot_independence():
    # rotating about any pivot only adds translation-row combinations
    m = zoo.points_distances_model(
        {"A": (3, 1), "B": (7, -2), "C": (4, 4)}, [])
    s = compile_model(m)
    x = assignment_from_params(m, s)
    basis = motion_basis(m, s, x)
    rng = np.random.default_rng(1)
    for _ in range(5):
        pivot = rng.normal(size=2)
        shifted = basis.matrix.copy()
        # velocity about pivot p = velocity about origin - rotation of p
        shifted[2] = basis.matrix[2] + pivot[1] * basis.matrix[0] - pivot[0] * basis.matrix[1]
        assert rank_analyze(shifted).rank == rank_analyze(basis.matrix).rank


# --- characterization -----------------------------------------------------------

def test_triangle_characterization():
    m = zoo.triangle_model()
    s = compile_model(m)
    r = characterize(s, m, seed=0)
    assert (r.columns, r.rank, r.dor) == (10, 7, 3)
    assert r.verdict == "well"
    assert r.free_motions == 0


def test_three_lines_over():
    m = zoo.three_lines_three_angles()
    s = compile_model(m)
    r = characterize(s, m, seed=0)
    assert r.rank == 2 and r.rows == 3
    assert r.over
    assert r.dependent_groups  # kernel(J^T) certificate present


def test_double_banana_under():
    m = zoo.double_banana_model()
    s = compile_model(m)
    r = characterize(s, m, seed=0)
    assert r.under
    assert r.columns - r.rank > r.dor == 6
    assert r.free_motions >= 1


def test_dependency_certificate_quality():
    m = zoo.three_lines_three_angles()
    s = compile_model(m)
    wit = generate_witness(s, m, seed=0)
    J = eval_jacobian(s, wit.assignment)
    a = rank_analyze(J)
    for k in range(a.cokernel.shape[1]):
        assert np.linalg.norm(a.cokernel[:, k] @ J) <= 1e-8 * a.singular_values[0]


def test_verdict_stable_across_seeds():
    cases = [
        (zoo.triangle_model(), "well"),
        (zoo.three_lines_three_angles(), "over-and-under"),
        (zoo.braced_quad_model(), "well"),
        (zoo.parallel_lines_model(), "under"),
    ]
    for m, expected in cases:
        s = compile_model(m)
        for seed in range(10):
            assert characterize(s, m, seed=seed).verdict == expected


def test_anchored_vs_unanchored_kernel_crosscheck():
    for m in [zoo.triangle_model(), zoo.braced_quad_model()]:
        s = compile_model(m)
        wit = generate_witness(s, m, seed=0)
        dor = compute_dor(m, s, wit.assignment).dor
        free = rank_analyze(eval_jacobian(s, wit.assignment)).kernel_dim
        assert free == dor
        anchored = add_anchors(s, m)
        x = assignment_from_params(m, anchored)
        solved = rank_analyze(eval_jacobian(anchored, x))
        assert solved.kernel_dim == 0


def test_unstable_when_witnesses_disagree(monkeypatch):
    # force three witnesses with pairwise different ranks; the vote must give
    # up and attach the individual reports
    m = zoo.three_distances_model()
    s = compile_model(m)
    generic = generate_witness(s, m, seed=0).assignment
    collinear = np.array([0.0, 0.0, 10.0, 0.0, 20.0, 0.0])
    all_coincident = np.zeros(6)
    fakes = iter([generic, collinear, all_coincident])

    import gcskernel.witness as w

    def fake_generate(system, model, seed=0, max_attempts=10):
        return w.WitnessConfiguration(next(fakes), (), seed, 1)

    monkeypatch.setattr(w, "generate_witness", fake_generate)
    report = w.characterize(s, m, seed=0)
    assert report.verdict == "unstable"
    assert len(report.sub_reports) == 3
    assert len({(r.rank, r.dor) for r in report.sub_reports}) == 3


def test_dor_dimension_bounds_3d():
    rng = np.random.default_rng(2)
    for n in range(1, 5):
        coords = {f"P{i}": tuple(rng.normal(size=3)) for i in range(n)}
        ents = tuple(Entity(k, "point3", v) for k, v in sorted(coords.items()))
        m = Model(3, ents, ())
        assert 0 <= dor_of(m) <= 6
    assert dor_of(zoo.plane_prism_model()) <= 6


def test_characterize_empty_system():
    m = Model(2, (), ())
    s = compile_model(m)
    r = characterize(s, m, seed=0)
    assert r.verdict == "well" and r.columns == 0


def test_report_json_shape():
    m = zoo.triangle_model()
    s = compile_model(m)
    d = characterize(s, m, seed=0).to_json_dict()
    assert set(d) == {"columns", "rows", "rank", "dor", "verdict",
                      "dependentGroups", "freeMotions", "seeds"}
    assert d["seeds"] == [0, 1, 2]


# --- representation sensitivity ----------------------------------------------

def test_line_example_row():
    m = zoo.parallel_lines_model()
    rows = representation_sensitivity(m, ["point-direction"], seed=0)
    row = rows[0]
    assert (row.columns, row.rank, row.dor) == (12, 5, 6)
    assert not row.matched


def test_plane_example_rows():
    m = zoo.plane_prism_model()
    rows = representation_sensitivity(m, ["hessian", "point-normal"], seed=0)
    hess, pn = rows
    assert (hess.columns, hess.rank, hess.dor) == (16, 11, 5)
    assert hess.matched and hess.verdict == "well"
    assert pn.columns == 24 and pn.dor == 6
    assert not pn.matched


def test_scheme_errors_and_empty():
    with pytest.raises(ValueError):
        representation_sensitivity(zoo.plane_prism_model(), ["spherical"])
    with pytest.raises(ValueError):
        representation_sensitivity(zoo.triangle_model(), ["hessian"])
    rows = representation_sensitivity(Model(3, (), ()), ["hessian"])
    assert rows[0].columns == 0 and rows[0].matched


def test_plane_scheme_conversion_consistency():
    m = zoo.plane_prism_model()
    from gcskernel.witness import _convert_entity
    for e in m.entities:
        pn = _convert_entity(e, "point-normal")
        back = _convert_entity(pn, "hessian")
        n0 = np.asarray(e.params[:3])
        n1 = np.asarray(back.params[:3])
        sign = 1.0 if n0 @ n1 > 0 else -1.0
        assert np.allclose(n0, sign * n1, atol=1e-12)
        assert e.params[3] == pytest.approx(sign * back.params[3], abs=1e-12)
