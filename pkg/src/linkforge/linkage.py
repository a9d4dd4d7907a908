"""Joints, linkages, configurations and the closure equation.

Joint motions follow the usual quantisation:

* R: ``t - h`` for ``t`` in P^1, stored homogeneously as ``t0 - t1*h``;
* P: ``1 - eps*s*p``;
* C: ``(1 - eps*s*p)(t - h)``;
* H: ``(1 - eps*g*alpha*p)(cos(alpha/2) - sin(alpha/2)*h)``, which is
  projectively ``(1 - eps*g*alpha*p)(1 - tan(alpha/2)*h)`` without the pole at
  ``alpha = pi``.

For numerical work every configuration also has a flat real coordinate vector
("chart coordinates"): rotations are given by the angle ``theta`` with
``(t0 : t1) = (cos(theta/2) : sin(theta/2))``, i.e. ``t = cot(theta/2)``.
That chart covers all of P^1 smoothly and ``theta = 0`` is ``t = oo``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .dqcore import DEFAULT_TOL, DualQuaternion, Line, Quaternion, act_on_point, mul8

KINDS = ("R", "P", "C", "H")

# Below this the (unit-factor) product counts as the bond degeneration M = 0.
DEGENERATE_PRODUCT = 1e-12


class ClosureDegenerate(ArithmeticError):
    """The product of joint motions vanished (a bond-like point)."""


@dataclass(frozen=True, eq=False)
class Joint:
    kind: str
    axis: Line | None = None
    direction: np.ndarray | None = None
    pitch: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown joint kind {self.kind!r}")
        if self.kind == "P":
            if self.direction is None:
                raise ValueError("P-joint needs a direction")
            d = np.asarray(self.direction, dtype=float)
            if d.shape != (3,) or abs(np.linalg.norm(d) - 1.0) > DEFAULT_TOL:
                raise ValueError("P-joint direction must be a unit 3-vector")
            d = d.copy()
            d.setflags(write=False)
            object.__setattr__(self, "direction", d)
            object.__setattr__(self, "axis", None)
        else:
            if not isinstance(self.axis, Line):
                raise ValueError(f"{self.kind}-joint needs a Line axis")
            object.__setattr__(self, "direction", None)
        if self.kind == "H":
            if self.pitch is None or not np.isfinite(self.pitch) or self.pitch == 0:
                raise ValueError("H-joint needs a nonzero finite pitch")
            object.__setattr__(self, "pitch", float(self.pitch))
        elif self.pitch is not None:
            raise ValueError(f"{self.kind}-joint takes no pitch")

    @classmethod
    def R(cls, axis: Line) -> "Joint":
        return cls("R", axis=axis)

    @classmethod
    def P(cls, direction) -> "Joint":
        d = np.asarray(direction, dtype=float)
        return cls("P", direction=d / np.linalg.norm(d))

    @classmethod
    def C(cls, axis: Line) -> "Joint":
        return cls("C", axis=axis)

    @classmethod
    def H(cls, axis: Line, pitch: float) -> "Joint":
        return cls("H", axis=axis, pitch=pitch)

    @property
    def dof(self) -> int:
        return 2 if self.kind == "C" else 1

    @property
    def p(self) -> np.ndarray:
        """Direction of the axis (or of the translation for P-joints)."""
        return self.direction if self.kind == "P" else self.axis.p

    def with_axis(self, axis: Line) -> "Joint":
        return Joint(self.kind, axis=axis, pitch=self.pitch)

    def __eq__(self, other):
        if not isinstance(other, Joint):
            return NotImplemented
        if self.kind != other.kind or self.pitch != other.pitch:
            return False
        if self.kind == "P":
            return bool(np.array_equal(self.direction, other.direction))
        return self.axis == other.axis

    def __hash__(self):
        return hash((self.kind, self.pitch, self.axis, None if self.direction is None else self.direction.tobytes()))

    def __repr__(self):
        if self.kind == "P":
            return f"Joint.P({self.direction.tolist()})"
        if self.kind == "H":
            return f"Joint.H({self.axis!r}, pitch={self.pitch})"
        return f"Joint.{self.kind}({self.axis!r})"


@dataclass(frozen=True)
class Linkage:
    """Closed chain of joints; joint indices are cyclic."""

    joints: tuple[Joint, ...]
    name: str | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "joints", tuple(self.joints))
        if not self.joints:
            raise ValueError("a linkage needs at least one joint")

    @property
    def n(self) -> int:
        return len(self.joints)

    @property
    def is_short(self) -> bool:
        """Fewer than three joints: not a genuine closed loop."""
        return self.n < 3

    @property
    def kinds(self) -> str:
        return "".join(j.kind for j in self.joints)

    @property
    def dof(self) -> int:
        return sum(j.dof for j in self.joints)

    def __len__(self):
        return self.n

    def __getitem__(self, k) -> Joint:
        return self.joints[k % self.n]

    def param_labels(self) -> list[tuple[int, str]]:
        """Chart coordinate labels, e.g. ``[(0, 's'), (0, 'theta'), (1, 'theta')]``."""
        out = []
        for k, j in enumerate(self.joints):
            if j.kind == "R":
                out.append((k, "theta"))
            elif j.kind == "P":
                out.append((k, "s"))
            elif j.kind == "C":
                out.extend([(k, "s"), (k, "theta")])
            else:
                out.append((k, "alpha"))
        return out

    def param_index(self, joint: int, name: str) -> int:
        return self.param_labels().index((joint % self.n, name))

    def angle_index(self, joint: int) -> int:
        """Chart index of the rotation angle of an R-, C- or H-joint."""
        kind = self[joint].kind
        if kind == "P":
            raise ValueError("P-joints have no rotation angle")
        return self.param_index(joint, "alpha" if kind == "H" else "theta")

    def rotated(self, shift: int) -> "Linkage":
        """Cyclic relabelling so that old joint ``shift`` becomes joint 0."""
        shift %= self.n
        return Linkage(self.joints[shift:] + self.joints[:shift], name=self.name)

    def transformed(self, g: DualQuaternion) -> "Linkage":
        """Apply a global displacement to every axis and direction."""
        A = g.primal
        joints = []
        for j in self.joints:
            if j.kind == "P":
                v = (A * Quaternion.pure(j.direction) * A.conj()).vector / A.norm_squared()
                joints.append(Joint.P(v))
            else:
                joints.append(j.with_axis(j.axis.transformed(g)))
        return Linkage(tuple(joints), name=self.name)


def _as_pair(t) -> tuple:
    """Normalize an R-parameter to a homogeneous pair; ``inf`` maps to (1, 0)."""
    if isinstance(t, tuple) or (isinstance(t, (list, np.ndarray)) and np.ndim(t) == 1):
        if len(t) != 2:
            raise ValueError("homogeneous parameter needs two entries")
        t0, t1 = t
        if t0 == 0 and t1 == 0:
            raise ValueError("homogeneous pair (0 : 0) is not a point of P^1")
        return (t0, t1)
    if isinstance(t, (float, int)) and math.isinf(t):
        return (1.0, 0.0)
    return (t, 1.0)


@dataclass(frozen=True)
class Configuration:
    """One value per joint.

    R: homogeneous pair ``(t0, t1)``; P: ``s``; C: ``(s, (t0, t1))``; H: ``alpha``.
    """

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(self.values))

    def __getitem__(self, k):
        return self.values[k]

    def __len__(self):
        return len(self.values)

    @classmethod
    def build(cls, linkage: Linkage, values: Sequence) -> "Configuration":
        """Coerce loose values (floats for t, ``inf``, pairs) joint by joint."""
        if len(values) != linkage.n:
            raise ValueError(f"expected {linkage.n} joint values, got {len(values)}")
        out = []
        for j, v in zip(linkage.joints, values):
            if j.kind == "R":
                out.append(_as_pair(v))
            elif j.kind == "C":
                s, t = v
                out.append((s, _as_pair(t)))
            else:
                out.append(v)
        return cls(tuple(out))

    def t(self, k: int):
        """Affine value ``t0/t1`` of an R- or C-parameter (``inf`` at t1 = 0)."""
        v = self.values[k]
        t0, t1 = v[1] if isinstance(v[1], tuple) else v
        return math.inf if t1 == 0 else t0 / t1


def initial_configuration(linkage: Linkage) -> Configuration:
    vals = []
    for j in linkage.joints:
        if j.kind == "R":
            vals.append((1.0, 0.0))
        elif j.kind == "C":
            vals.append((0.0, (1.0, 0.0)))
        else:
            vals.append(0.0)
    return Configuration(tuple(vals))


def _translation(s, p) -> np.ndarray:
    c = np.zeros(8, dtype=np.result_type(s, float))
    c[0] = 1.0
    c[5:8] = -s * np.asarray(p)
    return c


def _rotation(t0, t1, axis: Line) -> np.ndarray:
    h = axis.dq.coeffs
    c = -t1 * h
    c = c.astype(np.result_type(t0, t1, float))
    c[0] = c[0] + t0
    return c


def _motion8(joint: Joint, value) -> np.ndarray:
    kind = joint.kind
    if kind == "R":
        t0, t1 = _as_pair(value)
        return _rotation(t0, t1, joint.axis)
    if kind == "P":
        return _translation(value, joint.direction)
    if kind == "C":
        s, t = value
        t0, t1 = _as_pair(t)
        return mul8(_translation(s, joint.axis.p), _rotation(t0, t1, joint.axis))
    alpha = value
    rot = _rotation(np.cos(alpha / 2), np.sin(alpha / 2), joint.axis)
    return mul8(_translation(joint.pitch * alpha, joint.axis.p), rot)


def joint_motion(joint: Joint, value) -> DualQuaternion:
    """Dual quaternion of a single joint motion."""
    return DualQuaternion(_motion8(joint, value))


def motion_product(linkage: Linkage, config: Configuration, start=0, stop=None) -> np.ndarray:
    """Raw product of unit-normalized motions ``m_start ... m_{stop-1}``."""
    stop = linkage.n if stop is None else stop
    M = np.zeros(8)
    M[0] = 1.0
    for k in range(start, stop):
        m = _motion8(linkage[k], config[k % linkage.n])
        M = mul8(M, m / np.linalg.norm(m))
    return M


def residual_from_product(M: np.ndarray) -> np.ndarray:
    nrm = np.linalg.norm(M)
    if nrm < DEGENERATE_PRODUCT:
        raise ClosureDegenerate(f"product of joint motions vanishes (|M| = {nrm:.3g})")
    sign = -1.0 if M[0] < 0 else 1.0
    return sign * M[1:] / nrm


def closure_residual(linkage: Linkage, config: Configuration) -> np.ndarray:
    """Seven non-identity coordinates of the unit-normalized closure product.

    Zero exactly when ``m_1 ... m_n`` is projectively 1.
    """
    if len(config) != linkage.n:
        raise ValueError("configuration does not match linkage")
    return residual_from_product(motion_product(linkage, config))


def to_coords(linkage: Linkage, config: Configuration) -> np.ndarray:
    """Flat real chart coordinates of a configuration (see module docstring)."""
    x = []
    for j, v in zip(linkage.joints, config.values):
        if j.kind == "R":
            x.append(_pair_angle(v))
        elif j.kind == "P":
            x.append(float(v))
        elif j.kind == "C":
            x.extend([float(v[0]), _pair_angle(v[1])])
        else:
            x.append(float(v))
    return np.array(x, dtype=float)


def _pair_angle(pair) -> float:
    t0, t1 = float(pair[0]), float(pair[1])
    if t0 < 0 or (t0 == 0 and t1 < 0):
        t0, t1 = -t0, -t1
    return 2.0 * math.atan2(t1, t0)


def from_coords(linkage: Linkage, x) -> Configuration:
    x = np.asarray(x, dtype=float)
    if x.shape != (linkage.dof,):
        raise ValueError(f"expected {linkage.dof} coordinates, got shape {x.shape}")
    vals = []
    i = 0
    for j in linkage.joints:
        if j.kind == "R":
            vals.append((math.cos(x[i] / 2), math.sin(x[i] / 2)))
            i += 1
        elif j.kind == "C":
            vals.append((float(x[i]), (math.cos(x[i + 1] / 2), math.sin(x[i + 1] / 2))))
            i += 2
        else:
            vals.append(float(x[i]))
            i += 1
    return Configuration(tuple(vals))


def spherical_projection(linkage: Linkage) -> Linkage:
    """Reduce modulo eps: axes become directions through the origin.

    P-joints disappear and C/H-joints become R-joints. The result may have
    fewer than three joints; check ``Linkage.is_short``.
    """
    joints = tuple(Joint.R(j.axis.spherical()) for j in linkage.joints if j.kind != "P")
    if not joints:
        raise ValueError("spherical projection of an all-P linkage is empty")
    name = f"spherical({linkage.name})" if linkage.name else None
    return Linkage(joints, name=name)


def moved_axes(linkage: Linkage, config: Configuration) -> list:
    """Axes (or P-directions) in the pose ``config``, relative to link 0.

    Joint ``k`` is carried by the partial product ``m_1 ... m_{k-1}``.
    """
    out = []
    M = np.zeros(8)
    M[0] = 1.0
    for k, j in enumerate(linkage.joints):
        g = DualQuaternion(M)
        if j.kind == "P":
            A = g.primal
            v = (A * Quaternion.pure(j.direction) * A.conj()).vector / A.norm_squared()
            out.append(np.real_if_close(v) / np.linalg.norm(v))
        else:
            out.append(j.axis.transformed(g))
        m = _motion8(j, config[k])
        M = mul8(M, m / np.linalg.norm(m))
    return out


def act_on_point_chain(linkage: Linkage, config: Configuration, link: int, x) -> np.ndarray:
    """Position of point ``x`` of link ``link`` (moved by ``m_1 ... m_link``)."""
    return act_on_point(DualQuaternion(motion_product(linkage, config, 0, link)), x)
