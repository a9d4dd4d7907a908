"""Screw carving, cylindrical extension, freezing families and named linkages.

Screw carving turns chosen C-joints of a linkage into H-joints by imposing
``t_k = cot(s_k / (2 g_k))``. If an integer matrix ``A`` annihilates both the
angle functions ``alpha_k`` and the functions ``s_k / g_k`` on a component
``K0`` of dimension ``d``, the carved linkage has mobility at least
``d - m + rank(A)``, with ``m`` the number of carved joints.

``K0`` is described numerically: linear relations on chart coordinates that
cut it out of the configuration set near the initial configuration, and
samples obtained by a random walk on it.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bonds import ConfigCurve, JointCurve
from .dqcore import I, Line
from .geometry import common_normal, offset
from .linkage import (
    Configuration,
    Joint,
    Linkage,
    from_coords,
    initial_configuration,
    moved_axes,
    to_coords,
)
from .numerics import (
    ClosureSystem,
    CurveSample,
    LinearConstraint,
    angle_relation,
    mobility_estimate,
    sample_component,
    unwrap_angles,
)

logger = logging.getLogger(__name__)

ANNIHILATION_TOL = 1e-7


class AnnihilationFailed(ValueError):
    """A row of ``A`` is not constant on the samples of ``K0``."""

    def __init__(self, row, sample, deviation, what):
        self.row = row
        self.sample = sample
        self.deviation = deviation
        self.what = what
        super().__init__(
            f"row {row} of A does not annihilate the {what} vector: "
            f"deviation {deviation:.3g} at sample {sample}"
        )


# ----------------------------------------------------------------------------
# cylindrical extension and carving


def cylindrical_extension(linkage: Linkage) -> tuple[Linkage, dict[int, float]]:
    """Replace every H-joint by a C-joint on the same axis.

    Returns the new linkage and the removed pitches keyed by joint index, so
    that carving with those pitches gives the original joints back.
    """
    pitches = {}
    joints = []
    for k, j in enumerate(linkage.joints):
        if j.kind == "H":
            pitches[k] = j.pitch
            joints.append(Joint.C(j.axis))
        else:
            joints.append(j)
    name = f"cyl({linkage.name})" if linkage.name and pitches else linkage.name
    return Linkage(tuple(joints), name=name), pitches


@dataclass
class CarvingInput:
    """Ingredients of screw carving.

    Parameters
    ----------
    linkage : Linkage
        Linkage with C-joints.
    A : array_like of int
        Integer matrix with one column per carved C-joint.
    pitches : sequence of float
        Nonzero pitch per carved joint.
    c_joints : sequence of int, optional
        Joints to carve, in column order of ``A``; defaults to all C-joints.
    k0_relations : sequence of LinearConstraint
        Extra equations cutting ``K0`` out of the configuration set near the
        initial configuration (empty when ``K0`` is everything).
    samples : list of CurveSample, optional
        Sample paths on ``K0``; generated by a random walk when absent.
    dimension : int, optional
        ``dim K0``; estimated numerically when absent.
    """

    linkage: Linkage
    A: np.ndarray
    pitches: Sequence[float]
    c_joints: Sequence[int] | None = None
    k0_relations: Sequence[LinearConstraint] = ()
    samples: list | None = None
    dimension: int | None = None

    def __post_init__(self):
        if self.c_joints is None:
            self.c_joints = [k for k, j in enumerate(self.linkage.joints) if j.kind == "C"]
        self.c_joints = [int(k) for k in self.c_joints]
        for k in self.c_joints:
            if self.linkage[k].kind != "C":
                raise ValueError(f"joint {k} is not a C-joint")
        A = np.atleast_2d(np.asarray(self.A))
        if A.size == 0:
            A = np.zeros((0, len(self.c_joints)), dtype=int)
        if not np.all(np.equal(np.mod(A, 1), 0)):
            raise ValueError("A must be an integer matrix")
        self.A = A.astype(int)
        if self.A.shape[1] != len(self.c_joints):
            raise ValueError(f"A has {self.A.shape[1]} columns for {len(self.c_joints)} carved joints")
        self.pitches = [float(g) for g in self.pitches]
        if len(self.pitches) != len(self.c_joints):
            raise ValueError("one pitch per carved joint expected")
        if any(g == 0 or not math.isfinite(g) for g in self.pitches):
            raise ValueError("pitches must be nonzero finite reals")
        self.k0_relations = tuple(self.k0_relations)

    @property
    def m(self) -> int:
        return len(self.c_joints)


@dataclass
class CarvingResult:
    linkage: Linkage
    bound: int
    dimension: int
    m: int
    rank: int
    samples: list = field(default_factory=list, repr=False)


def _check_annihilation(inp: CarvingInput, samples: Sequence[CurveSample], tol=ANNIHILATION_TOL):
    for sample in samples:
        cfgs = sample.configurations
        alphas = np.array([unwrap_angles([c[k][1] for c in cfgs]) for k in inp.c_joints])
        svals = np.array([[c[k][0] / g for c in cfgs] for k, g in zip(inp.c_joints, inp.pitches)])
        for what, vec in (("angle", alphas), ("s/g", svals)):
            combos = inp.A @ vec
            for r, row in enumerate(combos):
                dev = np.abs(row - row[0])
                i = int(np.argmax(dev))
                if dev[i] > tol * max(1.0, np.max(np.abs(row))):
                    raise AnnihilationFailed(r, i, float(dev[i]), what)


def carve(inp: CarvingInput, n_samples=40, steplen=0.05, seed: int | None = 0) -> CarvingResult:
    """Screw carving with a numerically verified annihilation condition.

    Nothing is imposed at runtime; the returned bound ``d - m + rank(A)`` is
    a prediction to be compared with :func:`linkforge.numerics.mobility_estimate`
    on the carved linkage.
    """
    L = inp.linkage
    start = initial_configuration(L)
    samples = inp.samples
    if samples is None:
        samples = [
            sample_component(L, start, n=n_samples, steplen=steplen, seed=seed, constraints=inp.k0_relations)
        ]
    _check_annihilation(inp, samples)
    if inp.dimension is None:
        d = mobility_estimate(L, start, seed=seed, constraints=inp.k0_relations).mobility
    else:
        d = int(inp.dimension)
    rank = int(np.linalg.matrix_rank(inp.A)) if inp.A.size else 0
    joints = list(L.joints)
    for k, g in zip(inp.c_joints, inp.pitches):
        joints[k] = Joint.H(L[k].axis, g)
    name = f"carved({L.name})" if L.name else None
    return CarvingResult(Linkage(tuple(joints), name=name), d - inp.m + rank, d, inp.m, rank, samples)


# ----------------------------------------------------------------------------
# freezing families


def freeze_family(
    Lc: Linkage,
    which: str,
    values: dict[int, float],
    steps=20,
) -> Linkage:
    """Freeze the translation or rotation parameter of chosen C-joints.

    Parameters
    ----------
    Lc : Linkage
    which : {"translations", "rotations"}
        Freezing translations turns the joints into R-joints, freezing
        rotations turns them into P-joints.
    values : dict
        Joint index -> frozen value: ``s`` for translations, ``t`` (``inf``
        allowed) for rotations.

    A configuration with the frozen values is reached from the initial one by
    continuation in the frozen values; all axes are then taken in that pose.
    """
    if which not in ("translations", "rotations"):
        raise ValueError("which must be 'translations' or 'rotations'")
    for k in values:
        if Lc[k].kind != "C":
            raise ValueError(f"joint {k} is not a C-joint")
    idx = []
    target = []
    for k, v in values.items():
        if which == "translations":
            idx.append(Lc.param_index(k, "s"))
            target.append(float(v))
        else:
            idx.append(Lc.param_index(k, "theta"))
            target.append(0.0 if math.isinf(v) else 2.0 * math.atan2(1.0, float(v)))
    system = ClosureSystem(Lc, frozen=idx)
    x = to_coords(Lc, initial_configuration(Lc))
    target = np.array(target)
    lam = 0.0
    h = 1.0 / steps
    while lam < 1.0:
        step = min(h, 1.0 - lam)
        trial = x.copy()
        trial[idx] = (lam + step) * target
        xn, rn, ok = system.correct(trial)
        if ok:
            x, lam = xn, lam + step
        else:
            h /= 2
            if h < 1e-6:
                raise ArithmeticError("could not reach the frozen values by continuation")
    config = from_coords(Lc, x)
    axes = moved_axes(Lc, config)
    joints = []
    for k, (j, ax) in enumerate(zip(Lc.joints, axes)):
        if k in values:
            joints.append(Joint.R(ax) if which == "translations" else Joint.P(ax.p))
        elif j.kind == "P":
            joints.append(Joint.P(ax))
        else:
            joints.append(j.with_axis(ax))
    return Linkage(tuple(joints), name=f"frozen({Lc.name})" if Lc.name else None)


# ----------------------------------------------------------------------------
# gallery


@dataclass
class GalleryItem:
    linkage: Linkage
    curve: ConfigCurve | None = None
    reference: Callable[[float], Configuration] | None = None
    carving: CarvingInput | None = None
    expected_mobility: int | None = None
    params: dict = field(default_factory=dict)
    notes: str = ""


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def bennett_axes(h1: Line, h2: Line, a: float, b: float) -> tuple[Line, Line]:
    """Remaining two axes of the Bennett linkage with curve ``t1=t3``, ``t2=t4``, ``t2 = a t1 + b``.

    ``h3 = (h2 + a h1 - b)^-1 (a + b h1 - h1 h2)`` and ``h4 = -(h2 + a (h1 + h3))``.
    """
    if a == 0 or (a == 1 and b == 0):
        raise ValueError("Bennett parameters need a != 0 and (a, b) != (1, 0)")
    x1, x2 = h1.dq, h2.dq
    h3 = (x2 + a * x1 - b).inverse() * (a + b * x1 - x1 * x2)
    h4 = -(x2 + a * (x1 + h3))
    return Line.from_dq(h3), Line.from_dq(h4)


def _rot_curve(t0, t1) -> JointCurve:
    return JointCurve.rotation(t0, t1)


_DEFAULT_H1 = Line([0.0, 0.0, 1.0])
_DEFAULT_H2 = Line.through([1.0, 0.0, 0.0], [0.0, 0.6, 0.8])


def bennett(a=2.0, b=1.0, h1: Line | None = None, h2: Line | None = None) -> GalleryItem:
    """Bennett 4R with curve ``t1 = t3 = u``, ``t2 = t4 = a u + b``."""
    h1 = _DEFAULT_H1 if h1 is None else h1
    h2 = _DEFAULT_H2 if h2 is None else h2
    h3, h4 = bennett_axes(h1, h2, a, b)
    L = Linkage(tuple(Joint.R(h) for h in (h1, h2, h3, h4)), name="bennett")
    u_curve = _rot_curve([0.0, 1.0], [1.0])
    v_curve = _rot_curve([b, a], [1.0])
    curve = ConfigCurve(L, [u_curve, v_curve, u_curve, v_curve])

    def ref(u):
        return Configuration.build(L, [u, a * u + b, u, a * u + b])

    return GalleryItem(L, curve, ref, expected_mobility=1, params={"a": a, "b": b})


def planar_isogram(a=2.0, b=1.0, distance=1.0) -> GalleryItem:
    """Planar 4R with a rational curve: the Bennett construction on two parallel axes."""
    h1 = Line([0.0, 0.0, 1.0])
    h2 = Line.through([distance, 0.0, 0.0], [0.0, 0.0, 1.0])
    item = bennett(a, b, h1, h2)
    L = Linkage(item.linkage.joints, name="planar_isogram")
    curve = ConfigCurve(L, item.curve.joints)
    return GalleryItem(L, curve, item.reference, expected_mobility=1, params={"a": a, "b": b, "distance": distance})


def goldberg(a=2.0, b=1.0, a2=-1.5, b2=0.7, h1: Line | None = None, h2: Line | None = None) -> GalleryItem:
    """Goldberg 5R: two Bennett linkages sharing a joint and a link, common link removed.

    The first Bennett has axes ``x1..x4``; the second is built on ``x4, x3``
    and contributes ``y3, y4``. The rotations of both about the shared axis
    ``x3`` combine into one joint. The result is relabelled cyclically so that
    the three vanishing offsets sit at ``o(h4,h5,h1)``, ``o(h5,h1,h2)``,
    ``o(h1,h2,h3)`` (1-based).
    """
    h1 = _DEFAULT_H1 if h1 is None else h1
    h2 = _DEFAULT_H2 if h2 is None else h2
    x3, x4 = bennett_axes(h1, h2, a, b)
    y3, y4 = bennett_axes(x4, x3, a2, b2)
    axes = [x3, y3, y4, h1, h2]
    L = Linkage(tuple(Joint.R(h) for h in axes), name="goldberg")
    # with tau the first Bennett parameter: u = a tau + b, w = -a2 u + b2
    u = np.array([b, a])
    w = -a2 * u + np.array([b2, 0.0])
    tau = np.array([0.0, 1.0])
    tw = np.convolve(tau, w)
    joints = [
        _rot_curve(tw - np.array([1.0, 0.0, 0.0]), tau + w),
        _rot_curve(-u, [1.0]),
        _rot_curve(w, [1.0]),
        _rot_curve(tau, [1.0]),
        _rot_curve(u, [1.0]),
    ]
    curve = ConfigCurve(L, joints)
    offs = [offset(axes[i - 1], axes[i], axes[(i + 1) % 5]) for i in range(5)]
    if max(abs(offs[4]), abs(offs[0]), abs(offs[1])) > 1e-7 or abs(abs(offs[2]) - abs(offs[3])) > 1e-7:
        raise ArithmeticError(f"Goldberg offsets do not have the expected pattern: {offs}")
    return GalleryItem(
        L, curve, lambda t: curve.configuration(t), expected_mobility=1, params={"a": a, "b": b, "a2": a2, "b2": b2}
    )


def _planar_points(n, seed):
    rng = np.random.default_rng(seed)
    phi = 2 * np.pi * np.arange(n) / n + rng.uniform(-0.3, 0.3, n) * (2 * np.pi / n)
    r = 1.0 + rng.uniform(-0.2, 0.2, n)
    return np.stack([r * np.cos(phi), r * np.sin(phi), np.zeros(n)], axis=1)


def _parallel_axes(points, direction=(0.0, 0.0, 1.0)):
    return [Line.through(p, direction) for p in points]


def planar_4r(ground=4.0, crank=1.0, coupler=3.5, rocker=3.0) -> GalleryItem:
    """Grashof crank-rocker four-bar; joint 0 is the crank's ground pivot.

    Link 0 (between joints 3 and 0) is the ground, link 1 the crank.
    """
    s, l = sorted([ground, crank, coupler, rocker])[0], max(ground, crank, coupler, rocker)
    if s + l > ground + crank + coupler + rocker - s - l or s != crank:
        raise ValueError("dimensions are not a Grashof crank-rocker")
    p0 = np.zeros(3)
    p1 = np.array([crank, 0.0, 0.0])
    p3 = np.array([ground, 0.0, 0.0])
    x = (coupler**2 - rocker**2 - crank**2 + ground**2) / (2 * (ground - crank))
    y = math.sqrt(coupler**2 - (x - crank) ** 2)
    p2 = np.array([x, y, 0.0])
    L = Linkage(tuple(Joint.R(h) for h in _parallel_axes([p0, p1, p2, p3])), name="planar_4r")
    return GalleryItem(L, expected_mobility=1, params=dict(ground=ground, crank=crank, coupler=coupler, rocker=rocker))


def planar_5r(seed=0) -> GalleryItem:
    L = Linkage(tuple(Joint.R(h) for h in _parallel_axes(_planar_points(5, seed))), name="planar_5r")
    return GalleryItem(L, expected_mobility=2, params={"seed": seed})


def spherical_5r(seed=0) -> GalleryItem:
    rng = np.random.default_rng(seed)
    L = Linkage(tuple(Joint.R(Line(_unit(rng.standard_normal(3)))) for _ in range(5)), name="spherical_5r")
    return GalleryItem(L, expected_mobility=2, params={"seed": seed})


def planar_nc(n=4, g=0.1, seed=0) -> GalleryItem:
    """n C-joints with parallel axes; carving data ``A = (1,...,1)``, ``K0 = K``, equal pitches ``g``.

    The configuration set has dimension ``2n - 4``: ``n - 3`` for the planar
    rotations plus ``n - 1`` for translations along the common direction.
    """
    if n < 4:
        raise ValueError("need n >= 4")
    L = Linkage(tuple(Joint.C(h) for h in _parallel_axes(_planar_points(n, seed))), name=f"planar_{n}c")
    inp = CarvingInput(L, np.ones((1, n), dtype=int), [g] * n)
    return GalleryItem(L, carving=inp, expected_mobility=2 * n - 4, params={"n": n, "g": g, "seed": seed})


def planar_nh(n=4, g=0.1, seed=0) -> GalleryItem:
    """Screw carving of :func:`planar_nc` with equal pitches; mobility ``n - 3``."""
    item = planar_nc(n, g, seed)
    Lc, inp = item.linkage, item.carving
    L = Linkage(tuple(Joint.H(j.axis, g) for j in Lc.joints), name=f"planar_{n}h")
    return GalleryItem(L, carving=inp, expected_mobility=n - 3, params={"n": n, "g": g, "seed": seed})


HHRRR_PITCHES = (1.0 / 17.0, -1.0 / 11.0)


def _hhrrr_axes():
    k = np.array([0.0, 0.0, 1.0])
    return [
        Line(k, [-1.0, 0.0, 0.0]),
        Line(k, [1.0, 0.0, 0.0]),
        Line(k),
        Line(k, [0.0, 2.0, 0.0]),
        Line(k),
    ]


def ccrrr() -> GalleryItem:
    """CCRRR with axes ``k - eps i, k + eps i, k, k + 2 eps j, k``; mobility 3.

    Carving data: ``K0`` is cut out by ``11 theta_1 - 17 theta_2 = 0``, which
    with pitches ``(1/17, -1/11)`` is compatible with ``s_1 + s_2 = 0``;
    ``A = (11, -17)``.
    """
    h = _hhrrr_axes()
    L = Linkage((Joint.C(h[0]), Joint.C(h[1]), Joint.R(h[2]), Joint.R(h[3]), Joint.R(h[4])), name="ccrrr")
    rel = angle_relation(L, {0: 11.0, 1: -17.0}, label="11 theta_1 - 17 theta_2 = 0")
    inp = CarvingInput(L, np.array([[11, -17]]), list(HHRRR_PITCHES), k0_relations=(rel,))
    return GalleryItem(L, carving=inp, expected_mobility=3)


def hhrrr() -> GalleryItem:
    """HHRRR with pitches ``1/17`` and ``-1/11``; mobility 1.

    Along the motion ``s_1 + s_2 = 0`` forces ``alpha_1 / 17 = alpha_2 / 11``.
    """
    h = _hhrrr_axes()
    g1, g2 = HHRRR_PITCHES
    L = Linkage((Joint.H(h[0], g1), Joint.H(h[1], g2), Joint.R(h[2]), Joint.R(h[3]), Joint.R(h[4])), name="hhrrr")
    return GalleryItem(L, carving=ccrrr().carving, expected_mobility=1, params={"pitches": list(HHRRR_PITCHES)})


def _i_image(h: Line) -> Line:
    """Image of ``h`` under the half-turn about the x-axis: ``-i h i``."""
    return Line.from_dq(-(I * h.dq * I))


LINE_SYMMETRIC_PITCHES = (0.3, -0.5, 0.7)


def line_symmetric_6c(seed=0) -> GalleryItem:
    """6C on three random lines and their half-turn images about the x-axis.

    ``K0`` is the symmetric component ``t_k = t_{k+3}``, ``s_k = s_{k+3}``
    (dimension 4); ``A`` pairs joint ``k`` with joint ``k + 3``.
    """
    rng = np.random.default_rng(seed)
    base = [Line.through(rng.standard_normal(3), rng.standard_normal(3)) for _ in range(3)]
    axes = base + [_i_image(h) for h in base]
    L = Linkage(tuple(Joint.C(h) for h in axes), name="line_symmetric_6c")
    rels = []
    for k in range(3):
        for name in ("theta", "s"):
            a = np.zeros(L.dof)
            a[L.param_index(k, name)] = 1.0
            a[L.param_index(k + 3, name)] = -1.0
            rels.append(LinearConstraint(a, 0.0, f"{name}_{k} = {name}_{k + 3}"))
    A = np.hstack([np.eye(3, dtype=int), -np.eye(3, dtype=int)])
    inp = CarvingInput(L, A, list(LINE_SYMMETRIC_PITCHES) * 2, k0_relations=tuple(rels))

    return GalleryItem(L, carving=inp, expected_mobility=6, params={"seed": seed})


def line_symmetric_6h(seed=0) -> GalleryItem:
    item = line_symmetric_6c(seed)
    g = LINE_SYMMETRIC_PITCHES * 2
    L = Linkage(tuple(Joint.H(j.axis, gk) for j, gk in zip(item.linkage.joints, g)), name="line_symmetric_6h")
    return GalleryItem(L, carving=item.carving, expected_mobility=1, params={"seed": seed, "pitches": list(g)})


def _two_pairs(lam, seed):
    rng = np.random.default_rng(seed)
    p = _unit(rng.standard_normal(3))
    pp = _unit(rng.standard_normal(3))
    w = _unit(np.cross(p, pp))
    c2 = rng.standard_normal(3)
    c4 = rng.standard_normal(3)
    return p, pp, w, c2, c4


def prrrr(lam=0.8, seed=0) -> GalleryItem:
    """PRRRR with ``h2 || h3`` and ``h4 || h5`` (same orientations), mobility 1.

    Both parallel pairs are a distance ``lam`` apart along ``w = p x p'``
    (with opposite sense), and the P-joint points along ``p + p'``. Then
    ``t2 = -t3 = t4 = -t5 = u`` and ``s1 = lam |p - p'| u / (u^2 + 1)``.
    """
    p, pp, w, c2, c4 = _two_pairs(lam, seed)
    axes = [
        Line.through(c2, p),
        Line.through(c2 + lam * w, p),
        Line.through(c4, pp),
        Line.through(c4 - lam * w, pp),
    ]
    L = Linkage((Joint.P(p + pp),) + tuple(Joint.R(h) for h in axes), name="prrrr")
    kappa = lam * float(np.linalg.norm(p - pp))
    plus = _rot_curve([0.0, 1.0], [1.0])
    minus = _rot_curve([0.0, -1.0], [1.0])
    curve = ConfigCurve(L, [JointCurve.translation([0.0, kappa], [1.0, 0.0, 1.0]), plus, minus, plus, minus])
    return GalleryItem(
        L, curve, lambda u: curve.configuration(u), expected_mobility=1, params={"lam": lam, "seed": seed}
    )


def p4h(a=0.8, g2=0.3, g4=-0.2, seed=0) -> GalleryItem:
    """P-joint and two parallel H-pairs at distance ``a`` with ``p2 = -p3``, ``p4 = -p5``.

    Pitches ``(g2, g2, g4, g4)``; along ``alpha_2 = alpha_3 = alpha_4 = alpha_5``
    the H-motions compose to a translation along ``p2 + p4`` and
    ``s1 = a |p2 - p4| sin(alpha) / 2`` closes the loop.
    """
    if a <= 0:
        raise ValueError("distance a must be positive")
    p, pp, w, c2, c4 = _two_pairs(a, seed)
    h2 = Line.through(c2, p)
    h3 = Line.through(c2 + a * w, -p)
    h4 = Line.through(c4, pp)
    h5 = Line.through(c4 - a * w, -pp)
    L = Linkage(
        (Joint.P(p + pp), Joint.H(h2, g2), Joint.H(h3, g2), Joint.H(h4, g4), Joint.H(h5, g4)),
        name="p4h",
    )
    kappa = a * float(np.linalg.norm(p - pp)) / 2

    def ref(alpha):
        return Configuration((kappa * math.sin(alpha), alpha, alpha, alpha, alpha))

    return GalleryItem(L, reference=ref, expected_mobility=1, params={"a": a, "g2": g2, "g4": g4, "seed": seed})


def rrcrrc(c_position=0.4, seed=0) -> GalleryItem:
    """RRCRRC with axes ``h1, h2, h3, h2, h1, h3`` and ``o(h1,h2,h3) = o(h3,h1,h2) = 0``.

    ``h3`` meets the common normal of ``h1, h2`` at a right angle, strictly
    between the feet, which makes both offsets vanish. Only the closure
    residual and the degenerate component ``t1 = -t5``, ``t2 = -t4``,
    ``t3 = t6 = oo``, ``s = 0`` are provided.
    """
    rng = np.random.default_rng(seed)
    h1 = Line.through(rng.standard_normal(3), rng.standard_normal(3))
    h2 = Line.through(rng.standard_normal(3), rng.standard_normal(3))
    n12, f1, f2 = common_normal(h1, h2)
    c = f1 + c_position * (f2 - f1)
    d = np.cross(n12.p, rng.standard_normal(3))
    h3 = Line.through(c, d)
    L = Linkage(
        (Joint.R(h1), Joint.R(h2), Joint.C(h3), Joint.R(h2), Joint.R(h1), Joint.C(h3)),
        name="rrcrrc",
    )

    def ref(u, v=0.5):
        return Configuration.build(L, [u, v, (0.0, math.inf), -v, -u, (0.0, math.inf)])

    return GalleryItem(L, reference=ref, expected_mobility=2, params={"c_position": c_position, "seed": seed})


GALLERY: dict[str, tuple[Callable[..., GalleryItem], str]] = {
    "bennett": (bennett, "Bennett 4R, rational curve t2 = a t1 + b"),
    "planar_isogram": (planar_isogram, "planar 4R with rational curve (Bennett construction on parallel axes)"),
    "planar_4r": (planar_4r, "Grashof crank-rocker four-bar"),
    "goldberg": (goldberg, "Goldberg 5R from two Bennett linkages"),
    "planar_5r": (planar_5r, "5R with parallel axes (mobility 2)"),
    "spherical_5r": (spherical_5r, "5R with concurrent axes (mobility 2)"),
    "planar_nc": (planar_nc, "nC with parallel axes"),
    "planar_nh": (planar_nh, "nH with parallel axes and equal pitches (mobility n-3)"),
    "ccrrr": (ccrrr, "CCRRR cylindrical extension of hhrrr (mobility 3)"),
    "hhrrr": (hhrrr, "HHRRR with parallel axes, pitches 1/17 and -1/11 (mobility 1)"),
    "line_symmetric_6c": (line_symmetric_6c, "6C on three lines and their x-axis half-turn images"),
    "line_symmetric_6h": (line_symmetric_6h, "line-symmetric 6H by screw carving (mobility 1)"),
    "prrrr": (prrrr, "PRRRR with two parallel pairs (mobility 1)"),
    "p4h": (p4h, "P-joint and two parallel H-pairs (mobility 1)"),
    "rrcrrc": (rrcrrc, "RRCRRC on three lines with two zero offsets"),
}


def gallery(name: str, **params) -> GalleryItem:
    try:
        fn, _ = GALLERY[name]
    except KeyError:
        raise ValueError(f"unknown gallery entry {name!r}; known: {', '.join(GALLERY)}") from None
    return fn(**params)
