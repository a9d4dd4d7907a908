import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from linkforge.construct import gallery
from linkforge.dqcore import Line
from linkforge.linkage import (
    Configuration,
    Joint,
    Linkage,
    closure_residual,
    from_coords,
    initial_configuration,
    to_coords,
)
from linkforge.numerics import (
    ClosureSystem,
    NotOnCurve,
    angle_relation,
    closure_jacobian,
    correct_configuration,
    kernel_basis,
    mobility_estimate,
    moving_start,
    numeric_rank,
    sample_component,
    screw_condition,
    trace_point,
    track_curve,
    unwrap_angles,
)


def _fd_jacobian(system, x, h=1e-6):
    cols = []
    for k in range(len(x)):
        e = np.zeros_like(x)
        e[k] = h
        cols.append((system.residual(x + e) - system.residual(x - e)) / (2 * h))
    return np.array(cols).T


def _unit_pair(p):
    p = np.asarray(p, float)
    return p / np.linalg.norm(p)


# -- Jacobian and rank -------------------------------------------------------------


def test_planar_5r_rank_at_initial_configuration():
    L = gallery("planar_5r").linkage
    J = closure_jacobian(L, initial_configuration(L))
    assert J.shape == (7, 5)
    assert numeric_rank(np.linalg.svd(J, compute_uv=False)) == 3


def test_bennett_rank_at_curve_point():
    item = gallery("bennett")
    c = item.curve.configuration(0.37)
    J = closure_jacobian(item.linkage, c)
    assert J.shape == (7, 4)
    assert numeric_rank(np.linalg.svd(J, compute_uv=False)) == 3


def test_jacobian_requires_point_on_curve():
    L = gallery("bennett").linkage
    with pytest.raises(NotOnCurve):
        closure_jacobian(L, Configuration.build(L, [1.0, 3.1, 1.0, 3.0]))


@pytest.mark.parametrize("name", ["bennett", "p4h", "rrcrrc", "hhrrr", "line_symmetric_6h"])
def test_jacobian_matches_finite_differences(name):
    L = gallery(name).linkage
    start, _ = moving_start(L, initial_configuration(L), seed=4)
    system = ClosureSystem(L)
    for x in sample_component(L, start, n=8, steplen=0.2, seed=5).coords:
        assert np.max(np.abs(system.full_jacobian(x) - _fd_jacobian(system, x))) <= 1e-5


def test_constraint_rows_and_frozen_columns():
    cc = gallery("ccrrr")
    L = cc.linkage
    rel = cc.carving.k0_relations[0]
    system = ClosureSystem(L, [rel], frozen=[L.param_index(2, "theta")])
    x = to_coords(L, initial_configuration(L))
    J = system.jacobian(x)
    assert J.shape == (8, L.dof - 1)
    assert np.allclose(system.full_jacobian(x)[7], rel.coeffs)


def test_screw_condition_and_angle_relation_values():
    L = gallery("ccrrr").linkage
    sc = screw_condition(L, 0, 0.25)
    x = np.zeros(L.dof)
    x[L.param_index(0, "theta")] = 2.0
    x[L.param_index(0, "s")] = 0.5
    assert sc(x) == pytest.approx(0.0)
    rel = angle_relation(L, {0: 11.0, 1: -17.0})
    x[L.angle_index(1)] = 1.0
    assert rel(x) == pytest.approx(22.0 - 17.0)


# -- mobility --------------------------------------------------------------------


@pytest.mark.parametrize(
    "name,params,expected",
    [
        ("planar_nc", {"n": 4}, 4),
        ("ccrrr", {}, 3),
        ("spherical_5r", {}, 2),
        ("planar_5r", {"seed": 3}, 2),
        ("planar_4r", {}, 1),
        ("line_symmetric_6c", {}, 6),
        ("line_symmetric_6h", {}, 1),
        ("rrcrrc", {}, 2),
        ("p4h", {}, 1),
    ],
)
def test_mobility_values(name, params, expected):
    L = gallery(name, **params).linkage
    rep = mobility_estimate(L, initial_configuration(L), seed=11)
    assert rep.mobility == expected
    assert not rep.unstable
    assert rep.seed == 11
    assert rep.mobility == rep.dof - rep.rank


@pytest.mark.parametrize("n", [4, 5, 6])
def test_nc_parallel_has_mobility_2n_minus_4(n):
    """Planar nR moves with n - 3 parameters; the axial slides add n - 1."""
    L = gallery("planar_nc", n=n).linkage
    assert mobility_estimate(L, initial_configuration(L)).mobility == (n - 3) + (n - 1)


def test_random_5r_is_rigid():
    rng = np.random.default_rng(7)
    L = Linkage(tuple(Joint.R(Line.through(rng.standard_normal(3), rng.standard_normal(3))) for _ in range(5)))
    assert mobility_estimate(L, initial_configuration(L)).mobility == 0


def test_singular_start_reports_both_ranks():
    L = gallery("planar_4r").linkage
    rep = mobility_estimate(L, initial_configuration(L))
    assert rep.mobility_at_input >= rep.mobility == 1
    d = rep.to_dict()
    assert d["mobility"] == 1 and "singular_values" in d


def test_freezing_reduces_dof_and_never_raises_mobility():
    L = gallery("ccrrr").linkage
    c = initial_configuration(L)
    base = mobility_estimate(L, c)
    for k in range(L.dof):
        rep = mobility_estimate(L, c, frozen=[k])
        assert rep.dof == L.dof - 1
        assert rep.mobility <= base.mobility


def test_mobility_rejects_off_curve_point():
    L = gallery("bennett").linkage
    with pytest.raises(NotOnCurve):
        mobility_estimate(L, Configuration.build(L, [1.0, 3.5, 1.0, 3.0]))


def test_kernel_basis_is_orthonormal_kernel():
    rng = np.random.default_rng(0)
    J = rng.standard_normal((3, 6))
    N = kernel_basis(J)
    assert N.shape == (6, 3)
    assert np.allclose(J @ N, 0, atol=1e-12) and np.allclose(N.T @ N, np.eye(3), atol=1e-12)


# -- tracking --------------------------------------------------------------------


def test_bennett_tracking_stays_on_curve():
    L = gallery("bennett", a=2.0, b=1.0).linkage
    start = correct_configuration(L, Configuration.build(L, [0.3, 1.6, 0.3, 1.6]))
    sample = track_curve(L, start, steps=120, steplen=0.05, seed=1)
    assert max(sample.residual_norms) <= 1e-12
    for c in sample.configurations:
        p1, p2, p3, p4 = (_unit_pair(c[k]) for k in range(4))
        assert abs(p1[0] * p3[1] - p1[1] * p3[0]) <= 1e-8
        assert abs(p2[0] * p4[1] - p2[1] * p4[0]) <= 1e-8
        # t2 = 2 t1 + 1 in homogeneous form
        assert abs(p2[0] * p1[1] - (2 * p1[0] + p1[1]) * p2[1]) <= 1e-8


def test_planar_4r_closes_after_a_full_crank_turn():
    L = gallery("planar_4r").linkage
    x0 = to_coords(L, initial_configuration(L))
    seed_dir = np.zeros(L.dof)
    seed_dir[0] = 1.0
    sample = track_curve(
        L, initial_configuration(L), tangent_seed=seed_dir, steps=2000, steplen=0.02, stop=lambda x: x[0] >= 2 * math.pi
    )
    assert sample.coords[-1, 0] >= 2 * math.pi
    # correct onto the closing point with the crank frozen at 2 pi
    x = sample.coords[-1].copy()
    x[0] = 2 * math.pi
    end = to_coords(L, correct_configuration(L, from_coords(L, x), frozen=[0]))
    diff = (end - x0 + math.pi) % (2 * math.pi) - math.pi
    assert np.max(np.abs(diff)) <= 1e-6


def test_prrrr_tracking_opposite_signs():
    L = gallery("prrrr").linkage
    sample = track_curve(L, initial_configuration(L), steps=60, steplen=0.05)
    for c in sample.configurations:
        for a, b in [(1, 2), (3, 4)]:
            p, q = _unit_pair(c[a]), _unit_pair(c[b])
            assert abs(p[0] * q[1] + p[1] * q[0]) <= 1e-8


def test_tracking_is_deterministic_for_a_seed():
    L = gallery("goldberg").linkage
    a = track_curve(L, initial_configuration(L), steps=20, seed=3)
    b = track_curve(L, initial_configuration(L), steps=20, seed=3)
    assert np.array_equal(a.coords, b.coords)


def test_tracking_rigid_start_is_rejected():
    rng = np.random.default_rng(7)
    L = Linkage(tuple(Joint.R(Line.through(rng.standard_normal(3), rng.standard_normal(3))) for _ in range(5)))
    with pytest.raises(NotOnCurve):
        track_curve(L, initial_configuration(L), steps=5)


def test_moving_start_leaves_the_coaxial_branch():
    L = gallery("hhrrr").linkage
    x0 = to_coords(L, initial_configuration(L))
    # at the initial pose only the two coaxial joints can turn
    N = kernel_basis(ClosureSystem(L).jacobian(x0))
    assert N.shape[1] == 1 and np.allclose(N[[0, 1, 3], 0], 0)
    start, warnings = moving_start(L, initial_configuration(L), seed=0)
    N = kernel_basis(ClosureSystem(L).jacobian(to_coords(L, start)))
    assert N.shape[1] == 1 and np.all(np.abs(N[:, 0]) > 1e-6)
    assert np.linalg.norm(closure_residual(L, start)) <= 1e-12


# -- traces ----------------------------------------------------------------------


def test_trace_of_identity_sample_is_constant():
    L = gallery("bennett").linkage
    sample = track_curve(L, initial_configuration(L), steps=0)
    pts = trace_point(L, sample, 2, [0.1, 0.2, 0.3])
    assert np.allclose(pts, [[0.1, 0.2, 0.3]])


def test_planar_coupler_trace_is_planar():
    L = gallery("planar_4r").linkage
    sample = track_curve(L, initial_configuration(L), steps=100, steplen=0.05)
    pts = trace_point(L, sample, 2, [2.0, 1.0, 0.7])
    assert np.ptp(pts[:, 2]) <= 1e-9
    assert np.ptp(pts[:, 0]) > 0.1


def test_hhrrr_trace_points_come_from_closing_configurations():
    L = gallery("hhrrr").linkage.rotated(1)
    start, _ = moving_start(L, initial_configuration(L))
    sample = track_curve(L, start, steps=100, steplen=0.05)
    pts = trace_point(L, sample, 2, L.joints[2].axis.point)
    assert pts.shape == (101, 3)
    for c in sample.configurations:
        assert np.linalg.norm(closure_residual(L, c)) <= 1e-9


@settings(max_examples=50)
@given(st.lists(st.floats(-0.3, 0.3), min_size=5, max_size=40))
def test_unwrap_angles(steps):
    theta = np.cumsum([0.0] + steps) + 1.0
    pairs = [(math.cos(a / 2), math.sin(a / 2)) for a in theta]
    pairs = [(-a, -b) if i % 3 == 0 else (a, b) for i, (a, b) in enumerate(pairs)]
    got = unwrap_angles(pairs)
    assert np.allclose(np.diff(got), np.diff(theta), atol=1e-12)
