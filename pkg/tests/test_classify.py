import numpy as np
import pytest

from linkforge.classify import (
    CensusError,
    Label,
    classify,
    classify_5_RP,
    classify_5_RPH,
    classify_5R,
    detect_degenerate,
    facts_4,
    verify_witness,
)
from linkforge.construct import gallery
from linkforge.dqcore import Line
from linkforge.geometry import offset
from linkforge.linkage import Joint, Linkage, initial_configuration, joint_motion
from linkforge.numerics import mobility_estimate, moving_start


def _random_line(rng):
    return Line.through(rng.standard_normal(3), rng.standard_normal(3))


def _random_linkage(kinds, seed):
    rng = np.random.default_rng(seed)
    joints = []
    for k in kinds:
        if k == "R":
            joints.append(Joint.R(_random_line(rng)))
        elif k == "P":
            joints.append(Joint.P(rng.standard_normal(3)))
        elif k == "H":
            joints.append(Joint.H(_random_line(rng), rng.uniform(0.2, 1.0)))
        else:
            joints.append(Joint.C(_random_line(rng)))
    return Linkage(tuple(joints))


def _parallel_r(n, seed, kinds=None):
    rng = np.random.default_rng(seed)
    kinds = kinds or "R" * n
    out = []
    for k in kinds:
        if k == "P":
            out.append(Joint.P(np.append(rng.standard_normal(2), 0.0)))
        else:
            out.append(Joint.R(Line.through(np.append(rng.standard_normal(2), 0.0), [0, 0, 1])))
    return Linkage(tuple(out))


# -- degeneracy ------------------------------------------------------------------


def test_rr_on_one_axis_is_degenerate():
    L = _random_linkage("RRRRR", 1)
    L = Linkage((L[0], Joint.R(L[0].axis.reversed())) + L.joints[2:])
    d = detect_degenerate(L)
    assert d is not None and d.hint == "RR->R" and d.joints == (0, 1)
    assert classify(L).label is Label.DEGENERATE


def test_h_with_p_along_axis_is_degenerate():
    L = _random_linkage("HRRRR", 2)
    L = Linkage(L.joints[:4] + (Joint.P(L[0].axis.p),))
    d = detect_degenerate(L)
    assert d is not None and d.hint == "HP->C" and d.joints == (4, 0)


def test_parallel_p_pair_is_degenerate():
    L = _parallel_r(5, 3, "PPRRR")
    L = Linkage((L[0], Joint.P(-2 * L[0].direction)) + L.joints[2:])
    assert detect_degenerate(L).hint == "PP->P"


@pytest.mark.parametrize("name", ["bennett", "goldberg", "prrrr", "p4h", "hhrrr"])
def test_gallery_is_not_degenerate(name):
    assert detect_degenerate(gallery(name).linkage) is None


# -- 5R ----------------------------------------------------------------------------


@pytest.mark.parametrize(
    "name,label,mobility",
    [
        ("spherical_5r", Label.SPHERICAL_CONCURRENT, 2),
        ("planar_5r", Label.PLANAR_ALL_PARALLEL, 2),
        ("goldberg", Label.GOLDBERG, 1),
    ],
)
def test_classify_5r_gallery(name, label, mobility):
    L = gallery(name).linkage
    c = classify_5R(L)
    assert c.label is label
    assert c.mobility.mobility == mobility
    assert verify_witness(L, c)


@pytest.mark.parametrize("seed", range(5))
def test_random_5r_is_rigid(seed):
    c = classify_5R(_random_linkage("RRRRR", seed))
    assert c.label is Label.PRESUMED_RIGID and c.mobility.mobility == 0


def test_classify_5r_census():
    with pytest.raises(CensusError):
        classify_5R(gallery("prrrr").linkage)


# -- 5 with P -----------------------------------------------------------------------


def test_prrrr_two_pairs():
    L = gallery("prrrr").linkage
    c = classify_5_RP(L)
    assert c.label is Label.PRRRR_TWO_PARALLEL_PAIRS and c.mobility.mobility == 1
    assert verify_witness(L, c)
    # any cyclic position of the P-joint
    assert classify_5_RP(L.rotated(2)).label is Label.PRRRR_TWO_PARALLEL_PAIRS


def test_pprrr_parallel_is_planar():
    c = classify_5_RP(_parallel_r(5, 4, "PPRRR"))
    assert c.label is Label.PLANAR_ALL_PARALLEL and c.mobility.mobility >= 1


@pytest.mark.parametrize("seed", range(3))
def test_random_prrrr_is_rigid(seed):
    assert classify_5_RP(_random_linkage("PRRRR", seed)).label is Label.PRESUMED_RIGID


# -- 5 with H -----------------------------------------------------------------------


def test_hhrrr_all_parallel():
    L = gallery("hhrrr").linkage
    c = classify_5_RPH(L)
    assert c.label is Label.H5_ALL_PARALLEL and c.mobility.mobility == 1
    assert verify_witness(L, c)


def test_p4h_one_p_two_pairs():
    L = gallery("p4h").linkage
    c = classify_5_RPH(L)
    assert c.label is Label.H5_ONE_P_TWO_PAIRS and c.mobility.mobility >= 1
    assert verify_witness(L, c)


@pytest.mark.parametrize("seed", range(3))
def test_random_hrrrr_is_rigid(seed):
    assert classify_5_RPH(_random_linkage("HRRRR", seed)).label is Label.PRESUMED_RIGID


def test_parallel_axes_with_mismatched_pitches_are_recorded():
    """Geometric case holds but the screw translations cannot cancel: rigid, with the case kept."""
    hh = gallery("hhrrr").linkage
    L = Linkage((Joint.H(hh[0].axis, 0.3), Joint.H(hh[1].axis, 0.5)) + hh.joints[2:])
    c = classify_5_RPH(L)
    if c.label is Label.PRESUMED_RIGID:
        assert c.witness["geometric_case"] == Label.H5_ALL_PARALLEL.value
    else:
        assert c.label is Label.H5_ALL_PARALLEL


# -- four joints --------------------------------------------------------------------


def test_bennett_facts():
    L = gallery("bennett").linkage
    c = facts_4(L)
    assert c.label is Label.BENNETT and c.mobility.mobility == 1
    assert max(abs(v) for v in c.witness["offsets"]) <= 1e-7
    h = [j.axis for j in L.joints]
    assert all(abs(offset(h[k - 1], h[k], h[(k + 1) % 4])) <= 1e-7 for k in range(4))


def test_planar_prrr():
    c = facts_4(_parallel_r(4, 5, "PRRR"))
    assert c.label is Label.PLANAR_ALL_PARALLEL


def test_generic_4r_is_rigid():
    assert facts_4(_random_linkage("RRRR", 9)).label is Label.PRESUMED_RIGID


def test_crp_degenerate_or_rigid():
    rng = np.random.default_rng(3)
    h = _random_line(rng)
    deg = Linkage((Joint.C(h), Joint.R(_random_line(rng)), Joint.P(h.p)))
    assert facts_4(deg).label is Label.DEGENERATE
    generic = _random_linkage("CRP", 4)
    assert facts_4(generic).label is Label.PRESUMED_RIGID


def test_dispatch_census():
    with pytest.raises(CensusError):
        classify(_random_linkage("RRRRRR", 0))
    with pytest.raises(CensusError):
        classify(gallery("line_symmetric_6h").linkage)


# -- invariances and cross-checks ----------------------------------------------------

LABELLED = [
    ("bennett", Label.BENNETT),
    ("goldberg", Label.GOLDBERG),
    ("spherical_5r", Label.SPHERICAL_CONCURRENT),
    ("planar_5r", Label.PLANAR_ALL_PARALLEL),
    ("prrrr", Label.PRRRR_TWO_PARALLEL_PAIRS),
    ("hhrrr", Label.H5_ALL_PARALLEL),
    ("p4h", Label.H5_ONE_P_TWO_PAIRS),
]


@pytest.mark.parametrize("name,label", LABELLED)
def test_label_invariant_under_rotation_and_displacement(name, label):
    L = gallery(name).linkage
    rng = np.random.default_rng(12)
    g = joint_motion(Joint.R(_random_line(rng)), 0.7) * joint_motion(Joint.P(rng.standard_normal(3)), 1.3)
    for shift in range(L.n):
        assert classify(L.rotated(shift)).label is label
    assert classify(L.transformed(g)).label is label


@pytest.mark.parametrize("seed", range(50))
def test_label_agrees_with_mobility(seed):
    kinds = ["planar_5r", "spherical_5r", "prrrr", "p4h", "random"]
    name = kinds[seed % len(kinds)]
    if name == "random":
        L = _random_linkage(["RRRRR", "PRRRR", "HRRRR", "RRRR"][seed % 4], seed)
    else:
        L = gallery(name, seed=seed).linkage
    c = classify(L, seed=seed)
    start, _ = moving_start(L, initial_configuration(L), seed=seed)
    m = mobility_estimate(L, start, seed=seed).mobility
    assert (c.label is not Label.PRESUMED_RIGID) == (m >= 1)


def test_label_serializes():
    d = classify(gallery("goldberg").linkage).to_dict()
    assert d["label"] == "GOLDBERG" and d["mobility"]["mobility"] == 1
