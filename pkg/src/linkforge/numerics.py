"""Closure Jacobian, numerical mobility, and curve tracking.

Everything here works in the real chart coordinates of
:func:`linkforge.linkage.to_coords`. The closure residual is differentiated
analytically (product rule over prefix/suffix products); the tests check it
against central differences.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .dqcore import mul8
from .linkage import (
    Configuration,
    Linkage,
    _translation,
    act_on_point_chain,
    from_coords,
    residual_from_product,
    to_coords,
)

logger = logging.getLogger(__name__)

RANK_TOL = 1e-8
ON_CURVE_TOL = 1e-8
CORRECTOR_TOL = 1e-12
CORRECTOR_MAXITER = 20
MAX_HALVINGS = 12


class NotOnCurve(ValueError):
    """The configuration does not satisfy the closure equation."""


class TrackingFailed(RuntimeError):
    """The corrector kept diverging after the allowed number of step halvings."""


@dataclass(frozen=True)
class LinearConstraint:
    """Extra equation ``coeffs . x = value`` on chart coordinates."""

    coeffs: np.ndarray
    value: float = 0.0
    label: str = ""

    def __call__(self, x):
        return float(self.coeffs @ x - self.value)


def angle_relation(linkage: Linkage, weights: dict[int, float], value=0.0, label="") -> LinearConstraint:
    """Linear relation ``sum w_k * angle_k = value`` between joint rotation angles."""
    a = np.zeros(linkage.dof)
    for k, w in weights.items():
        a[linkage.angle_index(k)] += w
    return LinearConstraint(a, value, label or f"angles {weights} = {value}")


def screw_condition(linkage: Linkage, joint: int, pitch: float) -> LinearConstraint:
    """``t_k = cot(s_k / (2 g_k))`` on a C-joint, i.e. ``theta_k - s_k/g_k = 0``."""
    if linkage[joint].kind != "C":
        raise ValueError(f"joint {joint} is not a C-joint")
    a = np.zeros(linkage.dof)
    a[linkage.param_index(joint, "theta")] = 1.0
    a[linkage.param_index(joint, "s")] = -1.0 / pitch
    return LinearConstraint(a, 0.0, f"screw condition at joint {joint}, pitch {pitch}")


def _rot8(theta, axis):
    h = axis.dq.coeffs
    r = -np.sin(theta / 2) * h
    r[0] += np.cos(theta / 2)
    dr = -0.5 * np.cos(theta / 2) * h
    dr[0] += -0.5 * np.sin(theta / 2)
    return r, dr


def _dtrans8(p, scale=1.0):
    d = np.zeros(8)
    d[5:8] = -scale * np.asarray(p)
    return d


def _factor(joint, xs):
    """Motion of one joint at chart values ``xs`` and its partial derivatives."""
    kind = joint.kind
    if kind == "R":
        r, dr = _rot8(xs[0], joint.axis)
        return r, [dr]
    if kind == "P":
        return _translation(xs[0], joint.direction), [_dtrans8(joint.direction)]
    if kind == "C":
        s, theta = xs
        T = _translation(s, joint.axis.p)
        r, dr = _rot8(theta, joint.axis)
        return mul8(T, r), [mul8(_dtrans8(joint.axis.p), r), mul8(T, dr)]
    alpha = xs[0]
    g = joint.pitch
    T = _translation(g * alpha, joint.axis.p)
    r, dr = _rot8(alpha, joint.axis)
    return mul8(T, r), [mul8(_dtrans8(joint.axis.p, g), r) + mul8(T, dr)]


class ClosureSystem:
    """Closure residual plus optional linear constraints, with frozen coordinates.

    ``frozen`` lists chart indices that are held fixed; their Jacobian columns
    are dropped, so the free dimension shrinks by one per frozen index.
    """

    def __init__(self, linkage: Linkage, constraints: Sequence[LinearConstraint] = (), frozen: Sequence[int] = ()):
        self.linkage = linkage
        self.constraints = tuple(constraints)
        self.frozen = tuple(sorted(set(int(i) for i in frozen)))
        self.free = np.array([i for i in range(linkage.dof) if i not in self.frozen], dtype=int)
        self._slices = []
        i = 0
        for j in linkage.joints:
            self._slices.append(slice(i, i + j.dof))
            i += j.dof

    @property
    def dof(self) -> int:
        return len(self.free)

    def product(self, x) -> np.ndarray:
        M = np.zeros(8)
        M[0] = 1.0
        for j, sl in zip(self.linkage.joints, self._slices):
            m, _ = _factor(j, x[sl])
            M = mul8(M, m)
        return M

    def residual(self, x) -> np.ndarray:
        r = residual_from_product(self.product(x))
        if self.constraints:
            r = np.concatenate([r, [c(x) for c in self.constraints]])
        return r

    def full_jacobian(self, x) -> np.ndarray:
        """Jacobian with respect to all chart coordinates (frozen ones included)."""
        n = self.linkage.n
        factors = [_factor(j, x[sl]) for j, sl in zip(self.linkage.joints, self._slices)]
        prefix = [np.eye(1, 8).ravel()]
        for m, _ in factors:
            prefix.append(mul8(prefix[-1], m))
        suffix = [np.eye(1, 8).ravel()]
        for m, _ in reversed(factors):
            suffix.append(mul8(m, suffix[-1]))
        suffix = suffix[::-1]
        M = prefix[-1]
        nrm = np.linalg.norm(M)
        sign = -1.0 if M[0] < 0 else 1.0
        cols = []
        for k in range(n):
            for dm in factors[k][1]:
                dM = mul8(mul8(prefix[k], dm), suffix[k + 1])
                cols.append(sign * (dM[1:] / nrm - M[1:] * (M @ dM) / nrm**3))
        J = np.array(cols).T
        if self.constraints:
            J = np.vstack([J, np.array([c.coeffs for c in self.constraints])])
        return J

    def jacobian(self, x) -> np.ndarray:
        return self.full_jacobian(x)[:, self.free]

    def correct(self, x, tol=CORRECTOR_TOL, maxiter=CORRECTOR_MAXITER):
        """Minimum-norm Gauss-Newton projection onto the zero set.

        Returns ``(x, residual_norm, converged)``.
        """
        x = np.array(x, dtype=float)
        rn = np.inf
        for _ in range(maxiter + 1):
            r = self.residual(x)
            rn = float(np.linalg.norm(r))
            if not np.isfinite(rn):
                return x, rn, False
            if rn <= tol:
                return x, rn, True
            J = self.jacobian(x)
            dx, *_ = np.linalg.lstsq(J, r, rcond=None)
            x[self.free] -= dx
        return x, rn, False


def closure_jacobian(linkage: Linkage, config: Configuration, tol=ON_CURVE_TOL, **kwargs) -> np.ndarray:
    """Derivative of the closure residual in chart coordinates.

    Rotation parameters are differentiated in the angle chart
    ``t = cot(theta/2)``, a local chart of P^1 around any value.
    """
    system = ClosureSystem(linkage, **kwargs)
    x = to_coords(linkage, config)
    rn = float(np.linalg.norm(system.residual(x)))
    if rn > tol:
        raise NotOnCurve(f"closure residual {rn:.3g} exceeds {tol:.1g}")
    return system.jacobian(x)


def numeric_rank(s: np.ndarray, tol=RANK_TOL) -> int:
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > tol * s[0]))


@dataclass
class TangentReport:
    jacobian: np.ndarray
    rank: int
    singular_values: np.ndarray
    mobility: int
    dof: int
    unstable: bool = False
    seed: int | None = None
    coords: np.ndarray | None = None
    rank_at_input: int | None = None
    mobility_at_input: int | None = None
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "rank": self.rank,
            "mobility": self.mobility,
            "dof": self.dof,
            "singular_values": [float(s) for s in self.singular_values],
            "unstable": self.unstable,
            "seed": self.seed,
            "rank_at_input": self.rank_at_input,
            "mobility_at_input": self.mobility_at_input,
            "coords": None if self.coords is None else [float(v) for v in self.coords],
            "warnings": list(self.warnings),
        }


def _singular_values(J):
    if J.size == 0:
        return np.zeros(0)
    return np.linalg.svd(J, compute_uv=False)


def kernel_basis(J, tol=RANK_TOL):
    """Orthonormal basis (columns) of the numerical kernel of J."""
    ncols = J.shape[1]
    if J.shape[0] == 0:
        return np.eye(ncols)
    _, s, vt = np.linalg.svd(J)
    rank = numeric_rank(s, tol)
    return vt[rank:].T


def _rank_report(J, tol):
    s = _singular_values(J)
    rank = numeric_rank(s, tol)
    unstable = numeric_rank(s, tol * 10) != rank or numeric_rank(s, tol / 10) != rank
    return s, rank, unstable


def _generic_point(system: ClosureSystem, x, rng, tol=RANK_TOL, steps=3, step=2e-2):
    """Move ``x`` by a few random corrected kernel steps; returns (x, warnings)."""
    warnings = []
    for _ in range(steps):
        N = kernel_basis(system.jacobian(x), tol)
        if N.shape[1] == 0:
            break
        v = N @ rng.standard_normal(N.shape[1])
        v /= np.linalg.norm(v)
        h = step
        for _ in range(MAX_HALVINGS):
            trial = x.copy()
            trial[system.free] += h * v
            xn, rn, ok = system.correct(trial)
            if ok and np.linalg.norm(xn - trial) <= 10 * h:
                x = xn
                break
            h /= 2
        else:
            warnings.append("could not leave the input point; rank reported there")
            break
    return x, warnings


def mobility_estimate(
    linkage: Linkage,
    config: Configuration,
    tol=RANK_TOL,
    seed: int | None = 0,
    constraints: Sequence[LinearConstraint] = (),
    frozen: Sequence[int] = (),
    generic_steps=3,
    step=2e-2,
) -> TangentReport:
    """Numerical dimension of the configuration set through ``config``.

    The input point can be a singular point of the configuration set (the
    initial configuration often is), so the rank is re-evaluated after a few
    random steps inside the tangent kernel, each corrected back onto the set.
    Both numbers are reported; ``mobility`` is the one at the generic point.
    """
    system = ClosureSystem(linkage, constraints, frozen)
    x = to_coords(linkage, config)
    rn = float(np.linalg.norm(system.residual(x)))
    if rn > ON_CURVE_TOL:
        raise NotOnCurve(f"closure residual {rn:.3g} exceeds {ON_CURVE_TOL:.1g}")
    rng = np.random.default_rng(seed)
    J0 = system.jacobian(x)
    _, rank0, _ = _rank_report(J0, tol)
    x, warnings = _generic_point(system, x, rng, tol, generic_steps, step)

    J = system.jacobian(x)
    s, rank, unstable = _rank_report(J, tol)
    if unstable:
        warnings.append(f"numerical rank changes within one decade of tol={tol:g}")
    if rank != rank0:
        warnings.append(f"rank {rank0} at the input point, {rank} at a generic nearby point")
    return TangentReport(
        jacobian=J,
        rank=rank,
        singular_values=s,
        mobility=system.dof - rank,
        dof=system.dof,
        unstable=unstable,
        seed=seed,
        coords=x,
        rank_at_input=rank0,
        mobility_at_input=system.dof - rank0,
        warnings=warnings,
    )


@dataclass
class CurveSample:
    linkage: Linkage
    configurations: list[Configuration]
    residual_norms: list[float]
    coords: np.ndarray
    seed: int | None = None
    warnings: list[str] = field(default_factory=list)

    def __len__(self):
        return len(self.configurations)


def _track(
    system: ClosureSystem,
    x0,
    direction_fn: Callable,
    steps: int,
    steplen: float,
    seed,
    stop: Callable | None = None,
) -> CurveSample:
    linkage = system.linkage
    x, rn, ok = system.correct(x0)
    if not ok or rn > CORRECTOR_TOL:
        raise NotOnCurve(f"start point could not be corrected onto the set (residual {rn:.3g})")
    xs = [x.copy()]
    res = [rn]
    warnings = []
    kdim0 = kernel_basis(system.jacobian(x)).shape[1]
    if kdim0 == 0:
        raise NotOnCurve("start point is isolated (trivial tangent kernel); nothing to track")
    v = direction_fn(x, None)
    for _ in range(steps):
        h = steplen
        for _ in range(MAX_HALVINGS + 1):
            trial = x.copy()
            trial[system.free] += h * v
            xn, rn, ok = system.correct(trial)
            if ok and np.linalg.norm(xn - trial) <= 0.5 * h:
                break
            h /= 2
        else:
            raise TrackingFailed(f"corrector diverged after {MAX_HALVINGS} step halvings")
        v_new = direction_fn(xn, v)
        kdim = kernel_basis(system.jacobian(xn)).shape[1]
        if kdim != kdim0:
            warnings.append(f"tangent dimension changed from {kdim0} to {kdim} at sample {len(xs)}")
        x, v = xn, v_new
        xs.append(x.copy())
        res.append(rn)
        if stop is not None and stop(x):
            break
    configs = [from_coords(linkage, xi) for xi in xs]
    return CurveSample(linkage, configs, res, np.array(xs), seed, warnings)


def track_curve(
    linkage: Linkage,
    start: Configuration,
    tangent_seed=None,
    steps=100,
    steplen=0.05,
    seed: int | None = 0,
    constraints: Sequence[LinearConstraint] = (),
    frozen: Sequence[int] = (),
    stop: Callable | None = None,
) -> CurveSample:
    """Predictor-corrector continuation along the configuration set.

    The predictor follows the tangent kernel, keeping orientation by projecting
    the previous direction onto the new kernel; ``tangent_seed`` (a vector in
    free chart coordinates) fixes the initial direction, otherwise a seeded
    random kernel vector is used. A step is accepted when the corrector reaches
    ``1e-12`` within 20 iterations; otherwise the step is halved, at most 12 times.
    """
    system = ClosureSystem(linkage, constraints, frozen)
    rng = np.random.default_rng(seed)

    def direction(x, prev):
        N = kernel_basis(system.jacobian(x))
        if N.shape[1] == 0:
            raise TrackingFailed("reached a point with trivial tangent kernel")
        if prev is None:
            w = rng.standard_normal(N.shape[1]) if tangent_seed is None else N.T @ np.asarray(tangent_seed, float)
        else:
            w = N.T @ prev
        if np.linalg.norm(w) < 1e-12:
            w = rng.standard_normal(N.shape[1])
        v = N @ w
        return v / np.linalg.norm(v)

    return _track(system, to_coords(linkage, start), direction, steps, steplen, seed, stop)


def sample_component(
    linkage: Linkage,
    start: Configuration,
    n=50,
    steplen=0.05,
    seed: int | None = 0,
    constraints: Sequence[LinearConstraint] = (),
    frozen: Sequence[int] = (),
) -> CurveSample:
    """Random walk on the configuration set; each step picks a fresh kernel direction.

    Useful for sampling components of dimension greater than one.
    """
    system = ClosureSystem(linkage, constraints, frozen)
    rng = np.random.default_rng(seed)

    def direction(x, prev):
        N = kernel_basis(system.jacobian(x))
        if N.shape[1] == 0:
            raise TrackingFailed("reached a point with trivial tangent kernel")
        v = N @ rng.standard_normal(N.shape[1])
        return v / np.linalg.norm(v)

    return _track(system, to_coords(linkage, start), direction, n, steplen, seed)


def moving_start(
    linkage: Linkage,
    start: Configuration,
    seed: int | None = 0,
    tries=16,
    constraints: Sequence[LinearConstraint] = (),
    frozen: Sequence[int] = (),
    min_speed=1e-6,
) -> tuple[Configuration, list[str]]:
    """A generic point near ``start`` on a branch along which every free coordinate moves.

    Starting configurations are often where several branches meet, or lie on
    a branch that only moves a sub-chain (for instance two coaxial joints
    turning against each other). Seeded kernel walks are tried first; if none
    of them qualifies, random perturbations of all free coordinates (of
    growing size) are corrected back onto the set. If nothing qualifies the
    first kernel-walk point is returned with a warning.
    """
    system = ClosureSystem(linkage, constraints, frozen)
    x0 = to_coords(linkage, start)
    rng = np.random.default_rng(seed)

    def moving(x):
        N = kernel_basis(system.jacobian(x))
        return N.shape[1] > 0 and bool(np.all(np.linalg.norm(N, axis=1) > min_speed))

    first = None
    for _ in range(tries):
        x, warnings = _generic_point(system, x0.copy(), rng)
        if first is None:
            first = (x, warnings)
        if moving(x):
            return from_coords(linkage, x), warnings
    for scale in (0.3, 1.0, 3.0):
        for _ in range(tries):
            trial = x0.copy()
            trial[system.free] += scale * rng.standard_normal(system.dof)
            x, rn, ok = system.correct(trial)
            if ok and moving(x):
                return from_coords(linkage, x), [f"left the start branch by a corrected random jump of size {scale:g}"]
    x, warnings = first
    return from_coords(linkage, x), warnings + ["no branch found along which every joint moves"]


def correct_configuration(
    linkage: Linkage,
    config: Configuration,
    constraints: Sequence[LinearConstraint] = (),
    frozen: Sequence[int] = (),
    tol=CORRECTOR_TOL,
) -> Configuration:
    system = ClosureSystem(linkage, constraints, frozen)
    x, rn, ok = system.correct(to_coords(linkage, config), tol=tol)
    if not ok:
        raise NotOnCurve(f"corrector did not converge (residual {rn:.3g})")
    return from_coords(linkage, x)


def trace_point(linkage: Linkage, sample: CurveSample, link_index: int, x) -> np.ndarray:
    """Positions of a point attached to link ``link_index`` along a sample.

    Link 0 is fixed; link ``k`` sits between joints ``k`` and ``k+1`` (1-based)
    and moves by ``m_1 ... m_k``.
    """
    if not 0 <= link_index < linkage.n:
        raise ValueError(f"link index must be in [0, {linkage.n})")
    return np.array([act_on_point_chain(linkage, c, link_index, x) for c in sample.configurations])


def unwrap_angles(values) -> np.ndarray:
    """Continuous lift of ``2*arccot(t)`` along a sequence of R-parameters.

    Accepts homogeneous pairs or affine values (``inf`` allowed).
    """
    raw = []
    for v in values:
        if isinstance(v, tuple):
            t0, t1 = v
        else:
            t0, t1 = (1.0, 0.0) if np.isinf(v) else (v, 1.0)
        raw.append(2.0 * np.arctan2(t1, t0))
    return np.unwrap(np.array(raw), period=2 * np.pi)
