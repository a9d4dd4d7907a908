"""Quaternions, dual numbers and dual quaternions.

A dual quaternion ``h = A + eps*B`` is stored as a flat array of eight
coefficients ``[a0, a1, a2, a3, b0, b1, b2, b3]`` in the basis ``1, i, j, k``.
Values are never normalized implicitly; anything that depends only on the
projective class of ``h`` (closure, Study condition, ...) compares projectively.

Complex coefficients are allowed throughout so that the same arithmetic can be
used at bond parameters such as ``t = +-i``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_TOL = 1e-9

_CONJ_SIGNS = np.array([1.0, -1.0, -1.0, -1.0, 1.0, -1.0, -1.0, -1.0])


def qmul(a, b):
    """Hamilton product of two quaternion coefficient arrays (last axis = 4)."""
    a = np.asarray(a)
    b = np.asarray(b)
    a0, a1, a2, a3 = a[..., 0], a[..., 1], a[..., 2], a[..., 3]
    b0, b1, b2, b3 = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack(
        [
            a0 * b0 - a1 * b1 - a2 * b2 - a3 * b3,
            a0 * b1 + a1 * b0 + a2 * b3 - a3 * b2,
            a0 * b2 - a1 * b3 + a2 * b0 + a3 * b1,
            a0 * b3 + a1 * b2 - a2 * b1 + a3 * b0,
        ],
        axis=-1,
    )


def mul8(x, y):
    """Product of two raw 8-coefficient dual quaternion arrays."""
    x = np.asarray(x)
    y = np.asarray(y)
    primal = qmul(x[..., :4], y[..., :4])
    dual = qmul(x[..., :4], y[..., 4:]) + qmul(x[..., 4:], y[..., :4])
    return np.concatenate([primal, dual], axis=-1)


def conj8(x):
    return np.asarray(x) * _CONJ_SIGNS


def _frozen(arr, dtype=None):
    out = np.array(arr, dtype=dtype)
    if not np.iscomplexobj(out):
        out = out.astype(float)
    out.setflags(write=False)
    return out


class Quaternion:
    """Quaternion ``a0 + a1 i + a2 j + a3 k``."""

    __slots__ = ("coeffs",)

    def __init__(self, a0=0.0, a1=0.0, a2=0.0, a3=0.0):
        self.coeffs = _frozen([a0, a1, a2, a3])

    @classmethod
    def from_array(cls, arr) -> "Quaternion":
        q = cls.__new__(cls)
        q.coeffs = _frozen(arr)
        if q.coeffs.shape != (4,):
            raise ValueError(f"expected 4 coefficients, got shape {q.coeffs.shape}")
        return q

    @classmethod
    def pure(cls, v) -> "Quaternion":
        v = np.asarray(v)
        return cls.from_array(np.concatenate([[0.0], v]))

    @property
    def scalar(self):
        return self.coeffs[0]

    @property
    def vector(self) -> np.ndarray:
        return self.coeffs[1:]

    def conj(self) -> "Quaternion":
        return Quaternion.from_array(self.coeffs * _CONJ_SIGNS[:4])

    def norm_squared(self):
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def __mul__(self, other):
        if isinstance(other, Quaternion):
            return Quaternion.from_array(qmul(self.coeffs, other.coeffs))
        return Quaternion.from_array(self.coeffs * other)

    def __rmul__(self, other):
        return Quaternion.from_array(other * self.coeffs)

    def __add__(self, other):
        if not isinstance(other, Quaternion):
            other = Quaternion(other)
        return Quaternion.from_array(self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, Quaternion):
            other = Quaternion(other)
        return Quaternion.from_array(self.coeffs - other.coeffs)

    def __neg__(self):
        return Quaternion.from_array(-self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, Quaternion):
            return NotImplemented
        return bool(np.array_equal(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def isclose(self, other, tol=DEFAULT_TOL) -> bool:
        return bool(np.max(np.abs(self.coeffs - Quaternion._coerce(other).coeffs)) <= tol)

    @staticmethod
    def _coerce(x):
        return x if isinstance(x, Quaternion) else Quaternion(x)

    def __repr__(self):
        return "Quaternion({}, {}, {}, {})".format(*self.coeffs)


@dataclass(frozen=True)
class DualNumber:
    """Dual number ``re + eps*du`` with ``eps**2 = 0``."""

    re: complex | float = 0.0
    du: complex | float = 0.0

    def __add__(self, other):
        other = _as_dual_number(other)
        return DualNumber(self.re + other.re, self.du + other.du)

    __radd__ = __add__

    def __sub__(self, other):
        other = _as_dual_number(other)
        return DualNumber(self.re - other.re, self.du - other.du)

    def __neg__(self):
        return DualNumber(-self.re, -self.du)

    def __mul__(self, other):
        other = _as_dual_number(other)
        return DualNumber(self.re * other.re, self.re * other.du + self.du * other.re)

    __rmul__ = __mul__

    def isclose(self, other, tol=DEFAULT_TOL) -> bool:
        other = _as_dual_number(other)
        return abs(self.re - other.re) <= tol and abs(self.du - other.du) <= tol


def _as_dual_number(x) -> DualNumber:
    return x if isinstance(x, DualNumber) else DualNumber(x, 0.0)


class DualQuaternion:
    """Dual quaternion ``A + eps*B`` backed by an immutable length-8 array."""

    __slots__ = ("coeffs",)

    def __init__(self, coeffs=None):
        if coeffs is None:
            coeffs = np.zeros(8)
        arr = _frozen(coeffs)
        if arr.shape != (8,):
            raise ValueError(f"expected 8 coefficients, got shape {arr.shape}")
        self.coeffs = arr

    @classmethod
    def from_parts(cls, primal, dual=None) -> "DualQuaternion":
        primal = Quaternion._coerce(primal).coeffs if not isinstance(primal, np.ndarray) else primal
        if dual is None:
            dual = np.zeros(4)
        elif not isinstance(dual, np.ndarray):
            dual = Quaternion._coerce(dual).coeffs
        return cls(np.concatenate([primal, dual]))

    @classmethod
    def scalar(cls, x) -> "DualQuaternion":
        c = np.zeros(8, dtype=np.result_type(x, float))
        c[0] = x
        return cls(c)

    @property
    def primal(self) -> Quaternion:
        return Quaternion.from_array(self.coeffs[:4])

    @property
    def dual(self) -> Quaternion:
        return Quaternion.from_array(self.coeffs[4:])

    def conj(self) -> "DualQuaternion":
        return DualQuaternion(conj8(self.coeffs))

    def norm(self) -> DualNumber:
        return dq_norm(self)

    def inverse(self) -> "DualQuaternion":
        """``conj(a) / norm(a)``; needs a nonzero primal part."""
        n = self.norm()
        if n.re == 0:
            raise ZeroDivisionError("dual quaternion with zero primal part has no inverse")
        r0 = 1.0 / n.re
        r1 = -n.du / n.re**2
        c = conj8(self.coeffs)
        return DualQuaternion(np.concatenate([c[:4] * r0, c[4:] * r0 + c[:4] * r1]))

    def is_zero(self, tol=0.0) -> bool:
        return bool(np.max(np.abs(self.coeffs)) <= tol)

    def __mul__(self, other):
        if isinstance(other, DualQuaternion):
            return DualQuaternion(mul8(self.coeffs, other.coeffs))
        if isinstance(other, DualNumber):
            return self * DualQuaternion.from_dual_number(other)
        return DualQuaternion(self.coeffs * other)

    def __rmul__(self, other):
        if isinstance(other, DualNumber):
            return DualQuaternion.from_dual_number(other) * self
        return DualQuaternion(other * self.coeffs)

    def __truediv__(self, other):
        return DualQuaternion(self.coeffs / other)

    def __add__(self, other):
        if not isinstance(other, DualQuaternion):
            other = DualQuaternion.scalar(other)
        return DualQuaternion(self.coeffs + other.coeffs)

    __radd__ = __add__

    def __sub__(self, other):
        if not isinstance(other, DualQuaternion):
            other = DualQuaternion.scalar(other)
        return DualQuaternion(self.coeffs - other.coeffs)

    def __rsub__(self, other):
        return DualQuaternion.scalar(other) - self

    def __neg__(self):
        return DualQuaternion(-self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, DualQuaternion):
            return NotImplemented
        return bool(np.array_equal(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    @classmethod
    def from_dual_number(cls, x: DualNumber) -> "DualQuaternion":
        c = np.zeros(8, dtype=np.result_type(x.re, x.du, float))
        c[0] = x.re
        c[4] = x.du
        return cls(c)

    def isclose(self, other, tol=DEFAULT_TOL) -> bool:
        return bool(np.max(np.abs(self.coeffs - other.coeffs)) <= tol)

    def __repr__(self):
        a = ", ".join(f"{c:.6g}" for c in self.coeffs[:4])
        b = ", ".join(f"{c:.6g}" for c in self.coeffs[4:])
        return f"DualQuaternion([{a}] + eps[{b}])"


ONE = DualQuaternion.scalar(1.0)
I = DualQuaternion([0, 1, 0, 0, 0, 0, 0, 0])
J = DualQuaternion([0, 0, 1, 0, 0, 0, 0, 0])
K = DualQuaternion([0, 0, 0, 1, 0, 0, 0, 0])
EPS = DualQuaternion([0, 0, 0, 0, 1, 0, 0, 0])


def dq_mul(a: DualQuaternion, b: DualQuaternion) -> DualQuaternion:
    return a * b


def dq_conj(a: DualQuaternion) -> DualQuaternion:
    return a.conj()


def dq_norm(a: DualQuaternion) -> DualNumber:
    """``a * conj(a)`` as a dual number.

    The eps-part is ``2 * sum(a_i b_i)``, the real scalar of
    ``A conj(B) + B conj(A)``.
    """
    c = a.coeffs
    return DualNumber(np.sum(c[:4] * c[:4]), 2 * np.sum(c[:4] * c[4:]))


def _require_nonzero(a: DualQuaternion, name="a"):
    if a.is_zero():
        raise ValueError(f"{name} must be a nonzero dual quaternion")


def on_study_quadric(a: DualQuaternion, tol=DEFAULT_TOL) -> bool:
    """True iff ``|sum a_i b_i| <= tol * ||a||**2`` (8-norm)."""
    _require_nonzero(a)
    c = a.coeffs
    return bool(abs(np.sum(c[:4] * c[4:])) <= tol * np.sum(np.abs(c) ** 2))


def proj_equiv(a: DualQuaternion, b: DualQuaternion, tol=DEFAULT_TOL) -> bool:
    """True iff ``a`` and ``b`` span the same point of P^7.

    The rejection of ``a/|a|`` from the direction of ``b`` must be at most ``tol``.
    """
    _require_nonzero(a)
    _require_nonzero(b, "b")
    x = a.coeffs / np.linalg.norm(a.coeffs)
    y = b.coeffs / np.linalg.norm(b.coeffs)
    rejection = x - y * np.vdot(y, x)
    return bool(np.linalg.norm(rejection) <= tol)


def act_on_point(g: DualQuaternion, x, tol=DEFAULT_TOL) -> np.ndarray:
    """Apply the displacement represented by ``g`` to the point ``x``.

    Uses ``x -> (A x conj(A) + B conj(A) - A conj(B)) / |A|^2``, i.e. the
    sandwich ``g (1 + eps x) (conj(A) - eps conj(B))``. Under this convention
    ``1 - eps*s*p`` translates by ``-2 s p``.
    """
    A = g.coeffs[:4]
    B = g.coeffs[4:]
    nA = float(np.sum(A * A))
    if nA <= tol**2 * max(1.0, float(np.sum(B * B))):
        raise ValueError("displacement has zero primal part (element of E)")
    if abs(np.sum(A * B)) > tol * (nA + float(np.sum(B * B))):
        raise ValueError("dual quaternion is not on the Study quadric")
    xq = np.concatenate([[0.0], np.asarray(x, dtype=float)])
    Ac = A * _CONJ_SIGNS[:4]
    Bc = B * _CONJ_SIGNS[:4]
    out = qmul(qmul(A, xq), Ac) + qmul(B, Ac) - qmul(A, Bc)
    return np.real_if_close(out[1:] / nA)


class Line:
    """Oriented line ``h = p + eps*q`` with ``|p| = 1`` and ``p . q = 0``.

    ``p`` is the direction, ``q = c x p`` for any point ``c`` on the line, and
    ``p x q`` is the point of the line closest to the origin. These are exactly
    the pure dual quaternions with ``h**2 = -1``.
    """

    __slots__ = ("p", "q")

    def __init__(self, p, q=(0.0, 0.0, 0.0), tol=DEFAULT_TOL):
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        if p.shape != (3,) or q.shape != (3,):
            raise ValueError("line direction and moment must be 3-vectors")
        if abs(np.linalg.norm(p) - 1.0) > tol:
            raise ValueError(f"line direction must be a unit vector, |p| = {np.linalg.norm(p)}")
        if abs(p @ q) > tol * max(1.0, np.linalg.norm(q)):
            raise ValueError(f"line data violates p.q = 0 (p.q = {p @ q})")
        self.p = _frozen(p)
        self.q = _frozen(q)

    @classmethod
    def through(cls, point, direction) -> "Line":
        d = np.asarray(direction, dtype=float)
        n = np.linalg.norm(d)
        if n == 0:
            raise ValueError("zero direction")
        d = d / n
        return cls(d, np.cross(np.asarray(point, dtype=float), d))

    @classmethod
    def projected(cls, p, q) -> tuple["Line", bool]:
        """Closest valid line to possibly inconsistent Pluecker data.

        Returns the line and whether any renormalization was needed. Data that
        is already valid to within tolerance is kept bit for bit, so written
        lines read back unchanged.
        """
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        n = np.linalg.norm(p)
        if n == 0:
            raise ValueError("zero direction")
        changed = bool(abs(n - 1.0) > DEFAULT_TOL or abs(p @ q) > DEFAULT_TOL * max(1.0, np.linalg.norm(q)))
        if not changed:
            return cls(p, q), False
        p2 = p / n
        q2 = q / n
        q2 = q2 - p2 * (p2 @ q2)
        return cls(p2, q2), True

    @classmethod
    def from_dq(cls, h: DualQuaternion, tol=1e-7) -> "Line":
        """Read a line back from a dual quaternion, rescaling projectively."""
        c = np.real_if_close(h.coeffs)
        if np.iscomplexobj(c):
            raise ValueError("complex dual quaternion is not a real line")
        scale = np.linalg.norm(c[1:4])
        if scale == 0:
            raise ValueError("dual quaternion has no direction part")
        c = c / scale
        if abs(c[0]) > tol or abs(c[4]) > tol:
            raise ValueError("dual quaternion has nonzero scalar part; not a line")
        line, _ = cls.projected(c[1:4], c[5:8])
        return line

    @property
    def dq(self) -> DualQuaternion:
        return DualQuaternion(np.concatenate([[0.0], self.p, [0.0], self.q]))

    @property
    def point(self) -> np.ndarray:
        return np.cross(self.p, self.q)

    def reversed(self) -> "Line":
        return Line(-self.p, -self.q)

    def transformed(self, g: DualQuaternion) -> "Line":
        """Image of the line under the displacement ``g`` (``g h g^-1``)."""
        return Line.from_dq(g * self.dq * g.conj())

    def spherical(self) -> "Line":
        return Line(self.p, np.zeros(3))

    def __eq__(self, other):
        if not isinstance(other, Line):
            return NotImplemented
        return bool(np.array_equal(self.p, other.p) and np.array_equal(self.q, other.q))

    def __hash__(self):
        return hash((self.p.tobytes(), self.q.tobytes()))

    def isclose(self, other: "Line", tol=DEFAULT_TOL) -> bool:
        return bool(np.max(np.abs(self.p - other.p)) <= tol and np.max(np.abs(self.q - other.q)) <= tol)

    def __repr__(self):
        return f"Line(p={self.p.tolist()}, q={self.q.tolist()})"
