"""Bonds and bond diagrams of rationally parametrized configuration curves.

A :class:`ConfigCurve` gives every joint parameter as a rational function of a
single parameter ``u`` on P^1(C). R-joints are homogeneous polynomial pairs
``(t0(u) : t1(u))``, P-joints are quotients ``s(u) = num(u)/den(u)``. In both
cases the joint motion is a polynomial in ``u``:

* R: ``t0(u) - t1(u)*h``;
* P: ``den(u) - eps*num(u)*p``, which becomes ``-eps*p`` at a pole of ``s``.

Polynomial coefficients are stored in ascending order (``c[0] + c[1] u + ...``).
Bonds are the parameter values where the product of all joint motions is 0.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .dqcore import mul8
from .geometry import is_parallel, offset
from .linkage import Configuration, Linkage, closure_residual

logger = logging.getLogger(__name__)

ZERO_TOL = 1e-9
MERGE_TOL = 1e-8
MAX_DEGREE = 40
CURVE_TOL = 1e-9


class CurveInvariantViolated(ValueError):
    """Sampled real points of the curve do not close the linkage."""


class RootFindingFailed(ArithmeticError):
    pass


def _trim(c) -> np.ndarray:
    c = np.atleast_1d(np.asarray(c, dtype=complex if np.iscomplexobj(c) else float))
    nz = np.nonzero(c)[0]
    return c[: nz[-1] + 1] if nz.size else c[:1] * 0


def _deg(c) -> int:
    c = _trim(c)
    return len(c) - 1 if np.any(c) else -1


@dataclass(frozen=True)
class JointCurve:
    """Parametrization of one joint: ``(t0, t1)`` for R, ``(num, den)`` for P."""

    kind: str
    a: np.ndarray
    b: np.ndarray

    @classmethod
    def rotation(cls, t0, t1) -> "JointCurve":
        return cls("R", _trim(t0), _trim(t1))

    @classmethod
    def translation(cls, num, den=(1.0,)) -> "JointCurve":
        if _deg(den) < 0:
            raise ValueError("denominator of a P-parameter is the zero polynomial")
        return cls("P", _trim(num), _trim(den))

    @property
    def degree(self) -> int:
        return max(_deg(self.a), _deg(self.b), 0)

    def homogeneous(self, u):
        """Pair ``(a(u), b(u))``; ``u = inf`` uses the coefficients of the top degree."""
        if u is None or (np.isscalar(u) and np.isinf(u)):
            d = self.degree
            a = self.a[d] if d < len(self.a) else 0.0
            b = self.b[d] if d < len(self.b) else 0.0
            return complex(a), complex(b)
        return complex(P.polyval(u, self.a)), complex(P.polyval(u, self.b))

    def value(self, u):
        """Joint value at ``u``: a homogeneous pair for R, ``s`` (maybe ``inf``) for P."""
        a, b = self.homogeneous(u)
        if self.kind == "R":
            return (a, b)
        return np.inf if b == 0 else a / b

    def norm_polys(self) -> list[np.ndarray]:
        """Polynomials whose roots are the finite parameters with vanishing motion norm.

        For R-joints these are the two factors ``t0 +- i t1`` of ``t0^2 + t1^2``,
        kept apart so that the root finder never sees the doubled roots of a square.
        """
        if self.kind == "R":
            n = max(len(self.a), len(self.b))
            a = np.pad(self.a, (0, n - len(self.a))).astype(complex)
            b = np.pad(self.b, (0, n - len(self.b))).astype(complex)
            return [_trim(a + 1j * b), _trim(a - 1j * b)]
        return [_trim(self.b)]

    def vanishes_at_infinity(self) -> bool:
        a, b = self.homogeneous(np.inf)
        scale = max(abs(a), abs(b))
        if self.kind == "R":
            return abs(a * a + b * b) <= ZERO_TOL * scale**2
        return abs(b) <= ZERO_TOL * scale


def _motion(joint, jc: JointCurve, u) -> np.ndarray:
    a, b = jc.homogeneous(u)
    m = np.zeros(8, dtype=complex)
    if jc.kind == "R":
        m[0] = a
        m -= b * joint.axis.dq.coeffs
    else:
        m[0] = b
        m[5:8] = -a * np.asarray(joint.direction)
    scale = np.max(np.abs(m))
    if scale == 0:
        raise ValueError("joint parameter pair is (0 : 0); cancel common factors of the parametrization")
    return m / scale


def _product(motions: Sequence[np.ndarray]) -> np.ndarray:
    M = np.zeros(8, dtype=complex)
    M[0] = 1.0
    for m in motions:
        M = mul8(M, m)
        s = np.max(np.abs(M))
        if s > 1.0:
            M = M / s
    return M


def _is_zero(M) -> bool:
    return bool(np.max(np.abs(M)) <= ZERO_TOL)


class ConfigCurve:
    """Rational configuration curve of an R/P linkage.

    Parameters
    ----------
    linkage : Linkage
        Must contain only R- and P-joints.
    joints : sequence of JointCurve
        One parametrization per joint, in joint order.
    check : bool
        Verify closure on sampled real parameters (raises
        :class:`CurveInvariantViolated`).
    """

    def __init__(self, linkage: Linkage, joints: Sequence[JointCurve], check=True, samples=None):
        bad = [j.kind for j in linkage.joints if j.kind not in "RP"]
        if bad:
            raise NotImplementedError(f"bonds are defined for R- and P-joints only, got {''.join(bad)}")
        if len(joints) != linkage.n:
            raise ValueError("one joint parametrization per joint expected")
        for j, jc in zip(linkage.joints, joints):
            if j.kind != jc.kind:
                raise ValueError(f"parametrization kind {jc.kind} does not match joint kind {j.kind}")
            if jc.degree > MAX_DEGREE:
                raise ValueError(f"parametrization degree {jc.degree} exceeds {MAX_DEGREE}")
        self.linkage = linkage
        self.joints = tuple(joints)
        if check:
            self.check(samples)

    def configuration(self, u) -> Configuration:
        """Joint values at ``u``; real-typed when ``u`` is real."""
        c = Configuration(tuple(jc.value(u) for jc in self.joints))
        if np.iscomplexobj(u) or isinstance(u, complex):
            return c
        return Configuration(
            tuple((v[0].real, v[1].real) if isinstance(v, tuple) else float(np.real(v)) for v in c.values)
        )

    def motions(self, u) -> list[np.ndarray]:
        return [_motion(j, jc, u) for j, jc in zip(self.linkage.joints, self.joints)]

    def check(self, samples=None, tol=CURVE_TOL):
        """Closure residual at real sample parameters; raises if any exceeds ``tol``."""
        if samples is None:
            samples = np.linspace(-3.0, 3.0, 13) + 0.0137
        worst = 0.0
        for u in samples:
            c = self.configuration(float(u))
            if any(isinstance(v, float) and np.isinf(v) for v in c.values):
                continue
            worst = max(worst, float(np.linalg.norm(closure_residual(self.linkage, c))))
        if worst > tol:
            raise CurveInvariantViolated(f"curve does not close: sampled residual {worst:.3g} > {tol:g}")
        return worst


@dataclass(frozen=True)
class Bond:
    u: complex | float
    coords: tuple
    attached: frozenset
    motions: tuple = field(repr=False, compare=False, default=())

    def to_dict(self) -> dict:
        def enc(z):
            if isinstance(z, tuple):
                a, b = z
                if abs(b) <= ZERO_TOL * max(abs(a), abs(b)):
                    return "inf"
                z = a / b
            if isinstance(z, float) and np.isinf(z):
                return "inf"
            z = complex(z)
            return [z.real, z.imag]

        return {
            "u": enc(self.u),
            "coords": [enc(c) for c in self.coords],
            "attached": sorted(self.attached),
        }


def _polish(poly: np.ndarray, z: complex, iters=8) -> complex:
    d = P.polyder(poly)
    for _ in range(iters):
        f = P.polyval(z, poly)
        fd = P.polyval(z, d)
        if fd == 0:
            break
        step = f / fd
        z = z - step
        if abs(step) <= 1e-16 * max(1.0, abs(z)):
            break
    return complex(z)


def _roots(poly: np.ndarray) -> list[complex]:
    poly = _trim(poly)
    if _deg(poly) <= 0:
        return []
    r = P.polyroots(poly)
    if not np.all(np.isfinite(r)):
        raise RootFindingFailed("companion eigenvalues are not finite")
    return [_polish(poly, z) for z in r]


def _merge(cands: list) -> list:
    out = []
    for z in cands:
        if any(_same_param(z, w) for w in out):
            continue
        out.append(z)
    return out


def _same_param(z, w) -> bool:
    zi = isinstance(z, float) and np.isinf(z)
    wi = isinstance(w, float) and np.isinf(w)
    if zi or wi:
        return zi and wi
    return abs(z - w) <= MERGE_TOL * max(1.0, abs(z), abs(w))


def candidate_parameters(curve: ConfigCurve) -> list:
    """Parameters where at least one joint motion has vanishing norm."""
    cands = []
    for jc in curve.joints:
        for poly in jc.norm_polys():
            cands.extend(_roots(poly))
        if jc.vanishes_at_infinity():
            cands.append(np.inf)
    return _merge(cands)


def _attached_at(curve: ConfigCurve, motions) -> frozenset:
    out = set()
    for k, m in enumerate(motions):
        if curve.joints[k].kind == "R":
            a = m[0]
            # m = a - b h with h a unit line: norm is a^2 + b^2
            b = -m[1:4] @ curve.linkage[k].axis.p
            if abs(a * a + b * b) <= ZERO_TOL * max(abs(a), abs(b)) ** 2:
                out.add(k)
        elif abs(m[0]) <= ZERO_TOL:
            out.add(k)
    return frozenset(out)


def _param_key(b: Bond):
    u = b.u
    if isinstance(u, float) and np.isinf(u):
        return (1, 0.0, 0.0)
    u = complex(u)
    return (0, round(u.real, 8), round(u.imag, 8))


def find_bonds(curve: ConfigCurve) -> list[Bond]:
    """All bonds of a rational configuration curve.

    Candidates are the roots of ``t0^2 + t1^2`` per R-joint and the poles of
    ``s`` per P-joint (``u = oo`` included); a candidate is a bond when the
    product of all joint motions, each scaled to unit largest coordinate,
    has largest coordinate at most ``1e-9``.
    """
    bonds = []
    for u in candidate_parameters(curve):
        motions = curve.motions(u)
        if not _is_zero(_product(motions)):
            continue
        coords = tuple(jc.value(u) for jc in curve.joints)
        bonds.append(Bond(u, coords, _attached_at(curve, motions), tuple(motions)))
    bonds.sort(key=_param_key)
    logger.debug("found %d bonds", len(bonds))
    return bonds


def attached_joints(b: Bond) -> frozenset:
    return b.attached


def connects(b: Bond, k: int, l: int) -> bool:
    """Both cyclic products ``m_k ... m_l`` and ``m_l ... m_k`` vanish at the bond."""
    n = len(b.motions)
    k %= n
    l %= n
    if k == l or k not in b.attached or l not in b.attached:
        return False

    def chain(i, j):
        idx = [i]
        while idx[-1] != j:
            idx.append((idx[-1] + 1) % n)
        return [b.motions[x] for x in idx]

    return _is_zero(_product(chain(k, l))) and _is_zero(_product(chain(l, k)))


@dataclass
class BondDiagram:
    """Linkage graph plus connection pairs.

    Links are vertices ``0..n-1``; joint ``k`` is the edge between links
    ``k`` and ``k+1`` (mod n), so link 0 sits between the last and first joint.
    """

    n: int
    kinds: str
    connections: set = field(default_factory=set)
    bonds: list = field(default_factory=list)

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(k, (k + 1) % self.n) for k in range(self.n)]

    def connected(self, k, l) -> bool:
        return frozenset((k % self.n, l % self.n)) in self.connections

    def pairs(self) -> list[tuple[int, int]]:
        return sorted(tuple(sorted(c)) for c in self.connections)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "kinds": self.kinds,
            "edges": [list(e) for e in self.edges],
            "connections": [list(p) for p in self.pairs()],
            "bonds": [b.to_dict() for b in self.bonds],
        }


def bond_diagram(curve: ConfigCurve, bonds: Sequence[Bond] | None = None) -> BondDiagram:
    bonds = find_bonds(curve) if bonds is None else list(bonds)
    conns = set()
    for b in bonds:
        for k, l in combinations(sorted(b.attached), 2):
            if connects(b, k, l):
                conns.add(frozenset((k, l)))
    return BondDiagram(curve.linkage.n, curve.linkage.kinds, conns, bonds)


def _moves(curve: ConfigCurve, k: int) -> bool:
    jc = curve.joints[k]
    vals = []
    for u in (-1.3, 0.2, 0.9, 2.1):
        a, b = jc.homogeneous(u)
        vals.append(np.array([a, b]) / np.linalg.norm([a, b]))
    ref = vals[0]
    return any(abs(v[0] * ref[1] - v[1] * ref[0]) > 1e-9 for v in vals[1:])


@dataclass
class BondFactReport:
    violations: list[str] = field(default_factory=list)
    flags: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def check_bond_facts(curve: ConfigCurve, diagram: BondDiagram | None = None, tol=1e-7) -> BondFactReport:
    """Check the standard bond facts and the P-joint neighbour lemma on a curve.

    Violations are contradictions with the theory (a bug or a bad curve);
    flags are expected observations, such as a non-moving joint attached to
    no bond.
    """
    diagram = bond_diagram(curve) if diagram is None else diagram
    L = curve.linkage
    n = L.n
    rep = BondFactReport()
    attached_any = set()
    for b in diagram.bonds:
        attached_any |= b.attached
        if len(b.attached) < 2:
            rep.violations.append(f"(i) bond at u={b.u} attached to {sorted(b.attached)} only")
        for k in b.attached:
            if not any(connects(b, k, l) for l in b.attached if l != k):
                rep.violations.append(f"(ii) bond at u={b.u}: joint {k} connected to nothing")
    for k in range(n):
        if k not in attached_any:
            if _moves(curve, k):
                rep.violations.append(f"(iii) joint {k} moves but is attached to no bond")
            else:
                rep.flags.append(f"(iii) joint {k} is attached to no bond and does not move")
    for k in range(n):
        k1 = (k + 1) % n
        if L[k].kind == "R" and L[k1].kind == "R" and diagram.connected(k, k1):
            rep.violations.append(f"(iv) consecutive R-joints {k},{k1} connected")
    for i in range(n):
        i1, i2 = (i + 1) % n, (i + 2) % n
        if not all(L[x].kind == "R" for x in (i, i1, i2)) or not diagram.connected(i, i2):
            continue
        h0, h1, h2 = L[i].axis, L[i1].axis, L[i2].axis
        if is_parallel(h0, h1):
            if not is_parallel(h1, h2):
                rep.violations.append(f"(v) {i}-{i2} connected, h{i}||h{i1} but not h{i1}||h{i2}")
        elif not is_parallel(h1, h2):
            o = offset(h0, h1, h2)
            if abs(o) > tol:
                rep.violations.append(f"(vi) {i}-{i2} connected but offset o(h{i},h{i1},h{i2}) = {o:.3g}")
    for i in range(n):
        if L[i].kind != "P":
            continue
        for step in (1, -1):
            a, b = (i + step) % n, (i + 2 * step) % n
            if L[a].kind != "R" or L[b].kind != "R":
                continue
            if diagram.connected(i, a):
                rep.violations.append(f"P-lemma (a): P-joint {i} connected to neighbour {a}")
            if diagram.connected(i, b) and not is_parallel(L[a].axis, L[b].axis):
                rep.violations.append(f"P-lemma (b): P-joint {i} connected to {b} but h{a}, h{b} not parallel")
    return rep
