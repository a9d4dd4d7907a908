"""Line geometry of joint axes: parallelism, common normals, offsets."""
from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from .dqcore import DEFAULT_TOL, Line


class UndefinedGeometry(ValueError):
    """Raised when a quantity is not defined for the given lines (e.g. parallel)."""


def is_parallel(h1: Line, h2: Line, tol=DEFAULT_TOL) -> bool:
    """Directions proportional, either orientation."""
    return bool(np.linalg.norm(np.cross(h1.p, h2.p)) <= tol)


def is_same_line(h1: Line, h2: Line, tol=DEFAULT_TOL) -> bool:
    """Same point set, either orientation."""
    if not is_parallel(h1, h2, tol):
        return False
    return bool(np.linalg.norm(np.cross(h2.point - h1.point, h1.p)) <= tol * max(1.0, np.linalg.norm(h1.q)))


def _feet(h1: Line, h2: Line):
    """Closest points on two non-parallel lines."""
    p1, p2 = h1.p, h2.p
    c1, c2 = h1.point, h2.point
    n = np.cross(p1, p2)
    nn = n @ n
    d = c2 - c1
    # c1 + a p1 + b n = c2 + b' p2: solve via the standard skew-line formulas
    a = np.cross(d, p2) @ n / nn
    b = np.cross(d, p1) @ n / nn
    return c1 + a * p1, c2 + b * p2


def common_normal(h1: Line, h2: Line, tol=DEFAULT_TOL) -> tuple[Line, np.ndarray, np.ndarray]:
    """Common perpendicular of two non-parallel lines and its feet on each.

    Returns ``(normal, foot_on_h1, foot_on_h2)``. The normal is oriented along
    ``p1 x p2``.
    """
    if is_parallel(h1, h2, tol):
        raise UndefinedGeometry("common normal of parallel lines is not unique")
    f1, f2 = _feet(h1, h2)
    return Line.through(f1, np.cross(h1.p, h2.p)), f1, f2


def offset(h1: Line, h2: Line, h3: Line, tol=DEFAULT_TOL) -> float:
    """Signed distance along ``h2`` from its foot with ``h1`` to its foot with ``h3``.

    The sign follows the orientation of ``h2``.
    """
    if is_parallel(h1, h2, tol) or is_parallel(h2, h3, tol):
        raise UndefinedGeometry("offset is undefined when neighbouring lines are parallel")
    _, _, f12 = common_normal(h1, h2, tol)
    _, f23, _ = common_normal(h2, h3, tol)
    return float((f23 - f12) @ h2.p)


def axis_angle_and_distance(h1: Line, h2: Line, tol=DEFAULT_TOL) -> tuple[float, float]:
    """Angle in [0, pi] between the directions and length of the common normal."""
    c = float(np.clip(h1.p @ h2.p, -1.0, 1.0))
    angle = math.acos(c)
    n = np.cross(h1.p, h2.p)
    d = h2.point - h1.point
    if np.linalg.norm(n) <= tol:
        dist = float(np.linalg.norm(np.cross(d, h1.p)))
    else:
        dist = float(abs(d @ n) / np.linalg.norm(n))
    return angle, dist


def all_parallel(lines: Sequence[Line], tol=DEFAULT_TOL) -> bool:
    return all(is_parallel(lines[0], h, tol) for h in lines[1:])


def common_point(lines: Sequence[Line]) -> tuple[np.ndarray, float]:
    """Least-squares point closest to all lines and the largest distance to it."""
    A = np.zeros((3, 3))
    b = np.zeros(3)
    for h in lines:
        P = np.eye(3) - np.outer(h.p, h.p)
        A += P
        b += P @ h.point
    x, *_ = np.linalg.lstsq(A, b, rcond=None)
    worst = max(float(np.linalg.norm(np.cross(x - h.point, h.p))) for h in lines)
    return x, worst


def all_concurrent(lines: Sequence[Line], tol=1e-7) -> bool:
    """All lines pass through one point (parallel families excluded)."""
    if all_parallel(lines, tol):
        return False
    _, worst = common_point(lines)
    scale = max(1.0, max(float(np.linalg.norm(h.point)) for h in lines))
    return worst <= tol * scale
