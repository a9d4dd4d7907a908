"""Degeneracy detection and classification of mobile 4- and 5-linkages.

Each classifier evaluates the geometric case predicates of the known
classification results and then cross-checks against the numerical mobility:

* a case holds and the linkage is mobile: that label;
* a case holds but the linkage is numerically rigid: ``PRESUMED_RIGID``
  (the cases are necessary conditions, not sufficient ones);
* no case holds but the linkage is mobile: ``NOT_CLASSIFIED_MOBILE`` when
  some joint does not move (outside the hypotheses of the theorems), an
  error otherwise;
* nothing holds and the linkage is rigid: ``PRESUMED_RIGID``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .dqcore import DEFAULT_TOL
from .geometry import (
    UndefinedGeometry,
    all_concurrent,
    all_parallel,
    common_point,
    is_parallel,
    is_same_line,
    offset,
)
from .linkage import Linkage, initial_configuration
from .numerics import ClosureSystem, TangentReport, kernel_basis, mobility_estimate

GEOM_TOL = 1e-7


class Label(str, enum.Enum):
    DEGENERATE = "DEGENERATE"
    PLANAR_ALL_PARALLEL = "PLANAR_ALL_PARALLEL"
    SPHERICAL_CONCURRENT = "SPHERICAL_CONCURRENT"
    BENNETT = "BENNETT"
    GOLDBERG = "GOLDBERG"
    PRRRR_TWO_PARALLEL_PAIRS = "PRRRR_TWO_PARALLEL_PAIRS"
    H5_ALL_PARALLEL = "H5_ALL_PARALLEL"
    H5_ONE_P_TWO_PAIRS = "H5_ONE_P_TWO_PAIRS"
    NOT_CLASSIFIED_MOBILE = "NOT_CLASSIFIED_MOBILE"
    PRESUMED_RIGID = "PRESUMED_RIGID"


class CensusError(ValueError):
    """The joint types do not match what the classifier handles."""


class ClassificationDisagreement(ArithmeticError):
    """Mobile linkage, all joints moving, yet no case of the theorem applies."""

    def __init__(self, linkage, report: TangentReport, witness: dict):
        self.report = report
        self.witness = witness
        super().__init__(
            f"{linkage.kinds} linkage is numerically mobile (mobility {report.mobility}) "
            f"but matches no case; witness {witness}"
        )


@dataclass
class Degeneracy:
    joints: tuple[int, int]
    reason: str
    hint: str


@dataclass
class ClassLabel:
    label: Label
    witness: dict = field(default_factory=dict)
    mobility: TangentReport | None = None
    degeneracy: Degeneracy | None = None
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = {"label": self.label.value, "witness": _jsonable(self.witness), "notes": list(self.notes)}
        if self.mobility is not None:
            out["mobility"] = self.mobility.to_dict()
        if self.degeneracy is not None:
            out["degeneracy"] = {
                "joints": list(self.degeneracy.joints),
                "reason": self.degeneracy.reason,
                "hint": self.degeneracy.hint,
            }
        return out


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, np.integer, np.bool_)):
        return x.item()
    return x


# ----------------------------------------------------------------------------
# degeneracy

_HINTS = {
    "RR": "RR->R",
    "HH": "HH->H or C",
    "HR": "HR->C",
    "PP": "PP->P",
    "HP": "HP->C",
    "CC": "CC->C",
    "CR": "CR->C",
    "CH": "CH->C",
    "CP": "CP->C",
}


def detect_degenerate(L: Linkage, tol=DEFAULT_TOL) -> Degeneracy | None:
    """First pair of neighbouring joints that can be merged into one.

    Neighbouring R/H/C-joints on the same line, neighbouring P-joints with
    parallel directions, and a P-joint along the axis of a neighbouring H- or
    C-joint.
    """
    n = L.n
    pairs = range(n) if n > 2 else range(n - 1)
    for k in pairs:
        a, b = L[k], L[k + 1]
        key = "".join(sorted(a.kind + b.kind, key="CHPR".index))
        if key not in _HINTS:
            continue
        if "P" in key and key != "PP":
            axis = a if a.kind != "P" else b
            other = b if axis is a else a
            hit = bool(np.linalg.norm(np.cross(axis.p, other.p)) <= tol)
            reason = f"P-joint along the axis of neighbouring {axis.kind}-joint"
        elif key == "PP":
            hit = bool(np.linalg.norm(np.cross(a.p, b.p)) <= tol)
            reason = "neighbouring P-joints with parallel directions"
        else:
            hit = is_same_line(a.axis, b.axis, tol)
            reason = f"neighbouring {a.kind}- and {b.kind}-joints on the same axis"
        if hit:
            return Degeneracy((k, (k + 1) % n), reason, _HINTS[key])
    return None


# ----------------------------------------------------------------------------
# helpers


def _axes(L: Linkage, kinds="RHC"):
    return [(k, j.axis) for k, j in enumerate(L.joints) if j.kind in kinds]


def _all_axes_parallel(L, kinds="RHC", tol=GEOM_TOL):
    lines = [h for _, h in _axes(L, kinds)]
    return len(lines) >= 2 and all_parallel(lines, tol)


def _offsets(L: Linkage):
    """``o(h_{k-1}, h_k, h_{k+1})`` for each ``k`` (``None`` where undefined)."""
    out = []
    for k in range(L.n):
        try:
            out.append(offset(L[k - 1].axis, L[k].axis, L[k + 1].axis))
        except UndefinedGeometry:
            out.append(None)
    return out


def _fixed_joints(L: Linkage, report: TangentReport, tol=1e-7) -> list[int]:
    """Joints whose parameters do not move to first order at the generic point."""
    system = ClosureSystem(L)
    N = kernel_basis(system.jacobian(report.coords))
    fixed = []
    for k in range(L.n):
        rows = [i for i, (j, _) in enumerate(L.param_labels()) if j == k]
        if np.max(np.abs(N[rows])) <= tol:
            fixed.append(k)
    return fixed


def _decide(L, case: Label | None, witness, seed, strict=True) -> ClassLabel:
    report = mobility_estimate(L, initial_configuration(L), seed=seed)
    if case is not None:
        if report.mobility >= 1:
            return ClassLabel(case, witness, report)
        return ClassLabel(
            Label.PRESUMED_RIGID,
            dict(witness, geometric_case=case.value),
            report,
            notes=[f"geometry matches {case.value} but the linkage is numerically rigid"],
        )
    if report.mobility == 0:
        return ClassLabel(Label.PRESUMED_RIGID, witness, report)
    fixed = _fixed_joints(L, report)
    if fixed or not strict:
        return ClassLabel(
            Label.NOT_CLASSIFIED_MOBILE,
            dict(witness, fixed_joints=fixed),
            report,
            notes=["mobile outside the listed cases; some joints do not move" if fixed else "mobile outside the listed cases"],
        )
    raise ClassificationDisagreement(L, report, witness)


def _census(L: Linkage, n: int, allowed: str):
    if L.n != n:
        raise CensusError(f"expected {n} joints, got {L.n}")
    bad = set(L.kinds) - set(allowed)
    if bad:
        raise CensusError(f"joint types {''.join(sorted(bad))} not handled here")


def _degenerate_label(L) -> ClassLabel | None:
    d = detect_degenerate(L)
    if d is None:
        return None
    return ClassLabel(Label.DEGENERATE, {"joints": list(d.joints)}, None, d, notes=[d.hint])


def _two_pairs_shift(L: Linkage, tol=GEOM_TOL):
    """Shift ``r`` with ``L[r]`` the only P-joint, ``h_{r+1}||h_{r+2}`` and ``h_{r+3}||h_{r+4}``."""
    ps = [k for k, j in enumerate(L.joints) if j.kind == "P"]
    if len(ps) != 1:
        return None
    r = ps[0]
    if is_parallel(L[r + 1].axis, L[r + 2].axis, tol) and is_parallel(L[r + 3].axis, L[r + 4].axis, tol):
        return r
    return None


# ----------------------------------------------------------------------------
# classifiers


def classify_5R(L: Linkage, seed=0) -> ClassLabel:
    """Planar, spherical or Goldberg, cross-checked by numerical mobility."""
    _census(L, 5, "R")
    deg = _degenerate_label(L)
    if deg is not None:
        return deg
    lines = [j.axis for j in L.joints]
    case, witness = None, {}
    if all_parallel(lines, GEOM_TOL):
        case, witness = Label.PLANAR_ALL_PARALLEL, {"parallel": list(range(5))}
    elif all_concurrent(lines, GEOM_TOL):
        x, worst = common_point(lines)
        case, witness = Label.SPHERICAL_CONCURRENT, {"point": x, "max_distance": worst}
    else:
        shift = goldberg_shift(L)
        if shift is not None:
            case = Label.GOLDBERG
            witness = {"shift": shift, "offsets": _offsets(L.rotated(shift))}
    return _decide(L, case, witness, seed, strict=False)


def goldberg_shift(L: Linkage, tol=GEOM_TOL) -> int | None:
    """Cyclic shift putting the offset pattern of a Goldberg 5R in place.

    After the shift (1-based): ``o(h4,h5,h1) = o(h5,h1,h2) = o(h1,h2,h3) = 0``
    and ``o(h2,h3,h4) = +-o(h3,h4,h5)``.
    """
    for s in range(5):
        o = _offsets(L.rotated(s))
        if any(v is None for v in o):
            return None
        zeros = max(abs(o[4]), abs(o[0]), abs(o[1]))
        if zeros <= tol and abs(abs(o[2]) - abs(o[3])) <= tol:
            return s
    return None


def classify_5_RP(L: Linkage, seed=0) -> ClassLabel:
    """5-linkages with R- and P-joints, at least one P."""
    _census(L, 5, "RP")
    if "P" not in L.kinds:
        raise CensusError("needs at least one P-joint")
    deg = _degenerate_label(L)
    if deg is not None:
        return deg
    case, witness = None, {}
    nP = L.kinds.count("P")
    if _all_axes_parallel(L, "R"):
        case, witness = Label.PLANAR_ALL_PARALLEL, {"parallel": [k for k, _ in _axes(L, "R")]}
    elif nP == 1:
        r = _two_pairs_shift(L)
        if r is not None:
            case = Label.PRRRR_TWO_PARALLEL_PAIRS
            witness = {"shift": r, "pairs": [[(r + 1) % 5, (r + 2) % 5], [(r + 3) % 5, (r + 4) % 5]]}
    else:
        witness = {"lemma": "two or more P-joints need all R-axes parallel"}
    return _decide(L, case, witness, seed)


def classify_5_RPH(L: Linkage, seed=0) -> ClassLabel:
    """5-linkages with R-, P- and H-joints, at least one H."""
    _census(L, 5, "RPH")
    if "H" not in L.kinds:
        raise CensusError("needs at least one H-joint")
    deg = _degenerate_label(L)
    if deg is not None:
        return deg
    case, witness = None, {}
    if _all_axes_parallel(L, "RH"):
        case, witness = Label.H5_ALL_PARALLEL, {"parallel": [k for k, _ in _axes(L, "RH")]}
    else:
        r = _two_pairs_shift(L)
        if r is not None:
            case = Label.H5_ONE_P_TWO_PAIRS
            witness = {"shift": r, "pairs": [[(r + 1) % 5, (r + 2) % 5], [(r + 3) % 5, (r + 4) % 5]]}
    return _decide(L, case, witness, seed)


def facts_4(L: Linkage, seed=0) -> ClassLabel:
    """4-linkages with R- and P-joints, and the CRP special case.

    With a P-joint all R-axes must be parallel; without, either all axes are
    parallel, or they are concurrent (spherical), or no neighbouring axes are
    parallel and all offsets vanish (Bennett). A mobile CRP linkage is
    always degenerate.
    """
    if L.n == 3 and sorted(L.kinds) == ["C", "P", "R"]:
        deg = _degenerate_label(L)
        if deg is not None:
            return deg
        return _decide(L, None, {"crp": "non-degenerate CRP"}, seed)
    _census(L, 4, "RP")
    deg = _degenerate_label(L)
    if deg is not None:
        return deg
    case, witness = None, {}
    lines = [h for _, h in _axes(L, "R")]
    if "P" in L.kinds:
        if _all_axes_parallel(L, "R"):
            case, witness = Label.PLANAR_ALL_PARALLEL, {"parallel": [k for k, _ in _axes(L, "R")]}
    elif all_parallel(lines, GEOM_TOL):
        case, witness = Label.PLANAR_ALL_PARALLEL, {"parallel": list(range(4))}
    elif all_concurrent(lines, GEOM_TOL):
        x, worst = common_point(lines)
        case, witness = Label.SPHERICAL_CONCURRENT, {"point": x, "max_distance": worst}
    else:
        offs = _offsets(L)
        if all(v is not None for v in offs) and max(abs(v) for v in offs) <= GEOM_TOL:
            case, witness = Label.BENNETT, {"offsets": offs}
    return _decide(L, case, witness, seed, strict=False)


def classify(L: Linkage, seed=0) -> ClassLabel:
    """Dispatch on the joint census."""
    kinds = set(L.kinds)
    if L.n == 3 and sorted(L.kinds) == ["C", "P", "R"]:
        return facts_4(L, seed)
    if L.n == 4 and kinds <= set("RP"):
        return facts_4(L, seed)
    if L.n == 5:
        if kinds == {"R"}:
            return classify_5R(L, seed)
        if kinds <= set("RP"):
            return classify_5_RP(L, seed)
        if kinds <= set("RPH"):
            return classify_5_RPH(L, seed)
    raise CensusError(f"no classifier for {L.n}-linkage of types {L.kinds}")


def verify_witness(L: Linkage, c: ClassLabel, tol=GEOM_TOL) -> bool:
    """Re-check the geometric witness of a label with the geometry predicates."""
    w = c.witness
    lab = c.label
    if lab == Label.PRESUMED_RIGID and "geometric_case" in w:
        lab = Label(w["geometric_case"])
    if lab in (Label.PLANAR_ALL_PARALLEL, Label.H5_ALL_PARALLEL):
        return all_parallel([L[k].axis for k in w["parallel"]], tol)
    if lab == Label.SPHERICAL_CONCURRENT:
        pts = [L[k].axis for k in range(L.n)]
        return all_concurrent(pts, tol)
    if lab == Label.BENNETT:
        offs = _offsets(L)
        return all(v is not None and abs(v) <= tol for v in offs)
    if lab == Label.GOLDBERG:
        return goldberg_shift(L.rotated(w["shift"]), tol) == 0
    if lab in (Label.PRRRR_TWO_PARALLEL_PAIRS, Label.H5_ONE_P_TWO_PAIRS):
        (a, b), (c2, d) = w["pairs"]
        return L[w["shift"]].kind == "P" and is_parallel(L[a].axis, L[b].axis, tol) and is_parallel(L[c2].axis, L[d].axis, tol)
    if lab == Label.DEGENERATE:
        return detect_degenerate(L) is not None
    return True
