"""Acceptance checks, one test (or parametrized group) per numbered criterion.

Each test carries ``@pytest.mark.criterion(k)``; ``conftest.py`` prints one
PASS/FAIL line per criterion at the end of the run.
"""

import io
import json
import math
import time
from contextlib import redirect_stderr, redirect_stdout

import numpy as np
import pytest

from linkforge import cli
from linkforge.bonds import bond_diagram, check_bond_facts, find_bonds
from linkforge.classify import Label, classify_5_RPH
from linkforge.construct import gallery
from linkforge.dqcore import (
    DualQuaternion,
    Line,
    conj8,
    mul8,
    on_study_quadric,
    proj_equiv,
)
from linkforge.geometry import axis_angle_and_distance, offset
from linkforge.linkage import (
    Joint,
    closure_residual,
    initial_configuration,
    joint_motion,
)
from linkforge.numerics import (
    ClosureSystem,
    kernel_basis,
    mobility_estimate,
    moving_start,
    sample_component,
    track_curve,
)


def _random_line(rng):
    return Line.through(rng.standard_normal(3), rng.standard_normal(3))


def _random_displacement(rng):
    g = joint_motion(Joint.R(_random_line(rng)), rng.standard_normal())
    return g * joint_motion(Joint.P(rng.standard_normal(3)), rng.standard_normal())


def _study_element(rng):
    return _random_displacement(rng) * rng.standard_normal()


# -- 1 -------------------------------------------------------------------------


@pytest.mark.criterion(1)
def test_bennett_bonds():
    t0 = time.perf_counter()
    item = gallery("bennett", a=2.0, b=1.0)
    bonds = find_bonds(item.curve)
    assert len(bonds) == 4
    expected = []
    for z in (1j, -1j):
        expected.append((z, 2 * z + 1, z, 2 * z + 1))
        expected.append(((z - 1) / 2, z, (z - 1) / 2, z))
    got = [tuple(t / w for t, w in b.coords) for b in bonds]
    for e in expected:
        dists = [max(abs(np.array(g) - np.array(e))) for g in got]
        assert min(dists) <= 1e-9, (e, got)
    diagram = bond_diagram(item.curve, bonds)
    assert sorted(diagram.pairs()) == [(0, 2), (1, 3)]
    assert time.perf_counter() - t0 < 1.0


# -- 2 -------------------------------------------------------------------------

MOBILITY_GALLERY = [
    ("planar_5r", {}, 2),
    ("spherical_5r", {}, 2),
    ("goldberg", {}, 1),
    ("bennett", {}, 1),
    ("planar_nc", {"n": 4}, 4),
    ("ccrrr", {}, 3),
    # nC with parallel axes; the required value is n.
    ("planar_nc", {"n": 5}, 5),
    ("planar_nc", {"n": 6}, 6),
    ("prrrr", {}, 1),
]


@pytest.mark.criterion(2)
@pytest.mark.parametrize("name,params,expected", MOBILITY_GALLERY, ids=lambda v: str(v))
def test_mobility_gallery(name, params, expected):
    t0 = time.perf_counter()
    L = gallery(name, **params).linkage
    rep = mobility_estimate(L, initial_configuration(L), tol=1e-8, seed=0)
    assert not rep.unstable, rep.warnings
    mobility = rep.mobility
    assert mobility == expected, f"{name} {params}: mobility {mobility}, required {expected}"
    assert time.perf_counter() - t0 < 10.0 / len(MOBILITY_GALLERY) * 3


# -- 3 -------------------------------------------------------------------------


@pytest.mark.criterion(3)
@pytest.mark.parametrize("n", [4, 5, 6])
def test_nh_parallel(n):
    L = gallery("planar_nh", n=n).linkage
    rep = mobility_estimate(L, initial_configuration(L), seed=0)
    assert not rep.unstable
    assert rep.mobility == n - 3
    if n == 4:
        assert rep.mobility == 4 - 4 + 1


@pytest.mark.criterion(3)
def test_hhrrr_tracked_coupling():
    t0 = time.perf_counter()
    item = gallery("hhrrr")
    L = item.linkage
    start, _ = moving_start(L, initial_configuration(L), seed=0)
    rep = mobility_estimate(L, start, seed=0)
    assert rep.mobility == 1 and not rep.unstable
    sample = track_curve(L, start, steps=300, steplen=0.05, seed=0)
    assert max(sample.residual_norms) <= 1e-9
    i1, i2 = L.angle_index(0), L.angle_index(1)
    alpha = sample.coords[:, [i1, i2]]
    assert np.ptp(alpha[:, 0]) > 2 * math.pi  # the H-joints really turn
    row = item.carving.A[0].astype(float)
    coupling = alpha @ row
    assert np.max(np.abs(coupling - coupling[0])) <= 1e-7
    assert time.perf_counter() - t0 < 30.0


# -- 4 -------------------------------------------------------------------------


@pytest.mark.criterion(4)
def test_dimension_formula_hhrrr():
    t0 = time.perf_counter()
    hh = gallery("hhrrr").linkage
    start, _ = moving_start(hh, initial_configuration(hh), seed=0)
    dim_k = mobility_estimate(hh, start, seed=0).mobility
    cc = gallery("ccrrr")
    Lc = cc.linkage
    ext = mobility_estimate(Lc, initial_configuration(Lc), seed=0).mobility
    inp = cc.carving
    rels = inp.k0_relations
    k0_start, _ = moving_start(Lc, initial_configuration(Lc), seed=1, constraints=rels)
    sample = sample_component(Lc, k0_start, n=20, steplen=0.1, seed=2, constraints=rels)
    system = ClosureSystem(Lc, rels)
    dims = {kernel_basis(system.jacobian(x)).shape[1] for x in sample.coords}
    m = inp.m
    rank_a = np.linalg.matrix_rank(inp.A)
    assert (dim_k, ext, dims) == (1, 3, {2})
    assert dims == {dim_k + m - rank_a}
    assert time.perf_counter() - t0 < 30.0


# -- 5 -------------------------------------------------------------------------


def _sum_zero(p, q):
    """``t_p + t_q = 0`` for homogeneous pairs, scaled to unit pairs."""
    p = np.asarray(p, float) / np.linalg.norm(p)
    q = np.asarray(q, float) / np.linalg.norm(q)
    return abs(p[0] * q[1] + p[1] * q[0])


@pytest.mark.criterion(5)
def test_prrrr_opposite_parameters():
    t0 = time.perf_counter()
    L = gallery("prrrr").linkage
    sample = track_curve(L, initial_configuration(L), steps=99, steplen=0.05, seed=0)
    assert len(sample) == 100
    for c in sample.configurations:
        assert _sum_zero(c[1], c[2]) <= 1e-8
        assert _sum_zero(c[3], c[4]) <= 1e-8
    assert time.perf_counter() - t0 < 5.0


# -- 6 -------------------------------------------------------------------------


def _cyclic_offsets(L):
    h = [j.axis for j in L.joints]
    n = len(h)
    return [offset(h[k - 1], h[k], h[(k + 1) % n]) for k in range(n)]


@pytest.mark.criterion(6)
def test_offset_identities():
    o = _cyclic_offsets(gallery("bennett").linkage)
    assert np.max(np.abs(o)) <= 1e-7
    o = _cyclic_offsets(gallery("goldberg").linkage)
    # 1-based o(h4,h5,h1), o(h5,h1,h2), o(h1,h2,h3) have middles 5, 1, 2
    assert abs(o[4]) <= 1e-7 and abs(o[0]) <= 1e-7 and abs(o[1]) <= 1e-7
    assert abs(abs(o[2]) - abs(o[3])) <= 1e-7
    assert abs(o[2]) > 1e-3  # the identity is not trivially 0 = 0


# -- 7 -------------------------------------------------------------------------


@pytest.mark.criterion(7)
@pytest.mark.parametrize("params", [{}, {"a": 1.3, "g2": -0.7, "g4": 0.45, "seed": 3}])
def test_p4h_closes_and_is_labelled(params):
    item = gallery("p4h", **params)
    L = item.linkage
    for alpha in np.linspace(-3 * math.pi, 3 * math.pi, 61):
        c = item.reference(alpha)
        assert c[1] == c[2] and c[3] == c[4]
        assert np.linalg.norm(closure_residual(L, c)) <= 1e-9
    assert classify_5_RPH(L).label is Label.H5_ONE_P_TWO_PAIRS


# -- 8 -------------------------------------------------------------------------


@pytest.mark.criterion(8)
def test_algebra_suite():
    rng = np.random.default_rng(8)
    for _ in range(1000):
        a, b, c = (rng.standard_normal(8) for _ in range(3))
        assert np.allclose(mul8(mul8(a, b), c), mul8(a, mul8(b, c)), atol=1e-10, rtol=0)
        assert np.allclose(conj8(mul8(a, b)), mul8(conj8(b), conj8(a)), atol=1e-10, rtol=0)
        A, B = DualQuaternion(a), DualQuaternion(b)
        assert (A * B).norm().isclose(A.norm() * B.norm(), tol=1e-10)
        S, T = _study_element(rng), _study_element(rng)
        assert on_study_quadric(S, tol=1e-10) and on_study_quadric(S * T, tol=1e-10)


# -- 9 -------------------------------------------------------------------------


@pytest.mark.criterion(9)
def test_geometry_suite():
    rng = np.random.default_rng(9)
    for _ in range(500):
        h1, h2, h3 = (_random_line(rng) for _ in range(3))
        g = _random_displacement(rng)
        g1, g2, g3 = (h.transformed(g) for h in (h1, h2, h3))
        assert abs(offset(h1, h2, h3) - offset(g1, g2, g3)) <= 1e-9
        ang, dist = axis_angle_and_distance(h1, h2)
        ang_g, dist_g = axis_angle_and_distance(g1, g2)
        assert abs(ang - ang_g) <= 1e-9 and abs(dist - dist_g) <= 1e-9
        # turning h3 about h2 keeps the offset along h2
        r = joint_motion(Joint.R(h2), rng.standard_normal())
        assert abs(offset(h1, h2, h3) - offset(h1, h2, h3.transformed(r))) <= 1e-9


# -- 10 ------------------------------------------------------------------------

CURVE_GALLERY = ["bennett", "planar_isogram", "goldberg", "prrrr"]


@pytest.mark.criterion(10)
@pytest.mark.parametrize("name", CURVE_GALLERY)
def test_bond_facts_on_gallery(name):
    curve = gallery(name).curve
    rep = check_bond_facts(curve, bond_diagram(curve))
    assert rep.violations == []


# -- 11 ------------------------------------------------------------------------


@pytest.mark.criterion(11)
def test_helical_equals_carved_cylindrical():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        h = _random_line(rng)
        alpha = rng.uniform(-4 * math.pi, 4 * math.pi)
        g = rng.standard_normal()
        mh = joint_motion(Joint.H(h, g), alpha)
        mc = joint_motion(Joint.C(h), (g * alpha, (math.cos(alpha / 2), math.sin(alpha / 2))))
        assert proj_equiv(mh, mc, tol=1e-10)


# -- 12 ------------------------------------------------------------------------

JACOBIAN_GALLERY = ["bennett", "goldberg", "planar_5r", "spherical_5r", "prrrr", "ccrrr", "p4h", "line_symmetric_6c", "rrcrrc"]


@pytest.mark.criterion(12)
def test_jacobian_matches_central_differences():
    worst = 0.0
    count = 0
    for i, name in enumerate(JACOBIAN_GALLERY):
        L = gallery(name).linkage
        per = 100 // len(JACOBIAN_GALLERY) + (1 if i < 100 % len(JACOBIAN_GALLERY) else 0)
        sample = sample_component(L, initial_configuration(L), n=per - 1, steplen=0.2, seed=i)
        system = ClosureSystem(L)
        for x in sample.coords:
            J = system.full_jacobian(x)
            h = 1e-6
            fd = np.empty_like(J)
            for k in range(len(x)):
                e = np.zeros_like(x)
                e[k] = h
                fd[:, k] = (system.residual(x + e) - system.residual(x - e)) / (2 * h)
            worst = max(worst, float(np.max(np.abs(J - fd))))
            count += 1
    assert count == 100
    assert worst <= 1e-5


# -- 13 ------------------------------------------------------------------------


def _run(argv):
    out, err = io.StringIO(), io.StringIO()
    with redirect_stdout(out), redirect_stderr(err):
        code = cli.main(argv)
    return code, out.getvalue().encode(), err.getvalue().encode()


CLI_GALLERY = ["bennett", "goldberg", "planar_5r", "prrrr", "hhrrr", "planar_nc", "p4h", "line_symmetric_6c"]


@pytest.mark.criterion(13)
@pytest.mark.parametrize("name", CLI_GALLERY)
def test_cli_determinism(name, tmp_path):
    code, doc, _ = _run(["examples", name])
    assert code == 0
    path = tmp_path / f"{name}.json"
    path.write_bytes(doc)
    assert _run(["examples", name]) == (0, doc, b"")
    has_curve = "curve" in json.loads(doc)
    has_carving = "carving" in json.loads(doc)
    commands = [
        ["analyze", str(path), "--seed", "7"],
        ["classify", str(path), "--seed", "7"],
        ["trace", str(path), "--link", "2", "--point", "joint:2", "--samples", "40", "--seed", "7"],
        ["trace", str(path), "--link", "2", "--point", "0.1,0.2,0.3", "--samples", "40", "--format", "svg"],
        ["bonds", str(path)],
        ["carve", str(path), "--samples", "20", "--seed", "7"],
    ]
    for argv in commands:
        first = _run(argv)
        second = _run(argv)
        assert first == second, argv
        if argv[0] == "bonds" and has_curve:
            assert first[0] == 0
        if argv[0] == "carve" and has_carving:
            assert first[0] == 0
