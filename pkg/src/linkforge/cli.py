"""Command-line interface: ``linkforge analyze|classify|trace|bonds|carve|examples``.

Linkage documents are JSON::

    {"name": "...",
     "joints": [{"kind": "R", "axis": {"p": [0, 0, 1], "q": [0, 0, 0]}},
                {"kind": "P", "direction": [1, 0, 0]},
                {"kind": "H", "axis": {...}, "pitch": 0.1}, ...],
     "curve": {"param": "u",
               "joints": [{"t0": [...], "t1": [...]}, {"num": [...], "den": [...]}, ...]},
     "carving": {"A": [[1, 1, 1, 1]], "pitches": [...], "c_joints": [...],
                 "k0": {"relations": [{"terms": [[0, "theta", 11], [1, "theta", -17]], "value": 0}]}}}

Polynomial coefficients are listed in ascending order. Joints and links are
numbered from 0; link ``k`` sits between joints ``k-1`` and ``k`` and link 0
is fixed.

Exit codes: 0 success, 2 schema error, 3 numerical failure, 4 unsupported
census, 5 immobile input, 6 bond input missing or unsupported, 7 carving
annihilation failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import Any

import numpy as np

from . import bonds as bondmod
from .classify import CensusError, ClassificationDisagreement, classify
from .construct import GALLERY, AnnihilationFailed, CarvingInput, carve, gallery
from .dqcore import Line
from .geometry import all_parallel
from .linkage import ClosureDegenerate, Joint, Linkage, initial_configuration
from .numerics import (
    LinearConstraint,
    NotOnCurve,
    TrackingFailed,
    mobility_estimate,
    moving_start,
    trace_point,
    track_curve,
)

EXIT_OK, EXIT_SCHEMA, EXIT_NUMERIC, EXIT_CENSUS, EXIT_IMMOBILE, EXIT_BONDS, EXIT_ANNIHILATION = 0, 2, 3, 4, 5, 6, 7


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str, **extra):
        super().__init__(message)
        self.code = code
        self.kind = kind
        self.extra = extra


class SchemaError(CliError):
    def __init__(self, message, **extra):
        super().__init__(EXIT_SCHEMA, "schema", message, **extra)


# ----------------------------------------------------------------------------
# deterministic JSON


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x + 0.0, ".17g")


def dumps(obj: Any, indent=2, _level=0) -> str:
    """JSON text with sorted keys and floats at 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(obj[k], indent, _level + 1)}" for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, np.ndarray):
        return dumps(obj.tolist(), indent, _level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, complex):
        return dumps([obj.real, obj.imag], indent, _level)
    return json.dumps(str(obj))


# ----------------------------------------------------------------------------
# documents


def _vec3(x, where):
    try:
        v = np.asarray(x, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(f"{where}: expected three numbers") from None
    if v.shape != (3,) or not np.all(np.isfinite(v)):
        raise SchemaError(f"{where}: expected three finite numbers")
    return v


def _poly(x, where):
    if not isinstance(x, list) or not x:
        raise SchemaError(f"{where}: expected a non-empty coefficient list")
    try:
        return np.asarray(x, dtype=float)
    except (TypeError, ValueError):
        raise SchemaError(f"{where}: coefficients must be numbers") from None


def joint_from_dict(d: dict, k: int, notes: list) -> Joint:
    if not isinstance(d, dict) or "kind" not in d:
        raise SchemaError(f"joint {k}: expected an object with 'kind'")
    kind = d["kind"]
    if kind not in ("R", "P", "C", "H"):
        raise SchemaError(f"joint {k}: unknown kind {kind!r}")
    if kind == "P":
        v = _vec3(d.get("direction"), f"joint {k} direction")
        n = np.linalg.norm(v)
        if n == 0:
            raise SchemaError(f"joint {k}: zero direction")
        if abs(n - 1.0) > 1e-9:
            notes.append(f"joint {k}: direction renormalized (norm was {n:.17g})")
        return Joint.P(v / n)
    ax = d.get("axis")
    if not isinstance(ax, dict):
        raise SchemaError(f"joint {k}: {kind}-joint needs an 'axis' object")
    p = _vec3(ax.get("p"), f"joint {k} axis.p")
    q = _vec3(ax.get("q", [0.0, 0.0, 0.0]), f"joint {k} axis.q")
    if np.linalg.norm(p) == 0:
        raise SchemaError(f"joint {k}: zero axis direction")
    line, changed = Line.projected(p, q)
    if changed:
        notes.append(f"joint {k}: axis renormalized to |p| = 1, p.q = 0")
    if kind == "H":
        g = d.get("pitch")
        if not isinstance(g, (int, float)) or isinstance(g, bool) or not math.isfinite(g) or g == 0:
            raise SchemaError(f"joint {k}: H-joint needs a nonzero finite 'pitch'")
        return Joint.H(line, float(g))
    return Joint(kind, axis=line)


def joint_to_dict(j: Joint) -> dict:
    if j.kind == "P":
        return {"kind": "P", "direction": [float(v) for v in j.direction]}
    d = {"kind": j.kind, "axis": {"p": [float(v) for v in j.axis.p], "q": [float(v) for v in j.axis.q]}}
    if j.kind == "H":
        d["pitch"] = j.pitch
    return d


def linkage_to_doc(L: Linkage, curve: bondmod.ConfigCurve | None = None, **extra) -> dict:
    doc = {"joints": [joint_to_dict(j) for j in L.joints]}
    if L.name:
        doc["name"] = L.name
    if curve is not None:
        doc["curve"] = curve_to_dict(curve)
    doc.update(extra)
    return doc


def _real_coeffs(c):
    c = np.real_if_close(np.asarray(c))
    if np.iscomplexobj(c):
        raise ValueError("complex curve coefficients cannot be written")
    return [float(v) for v in c]


def curve_to_dict(curve: bondmod.ConfigCurve) -> dict:
    out = []
    for jc in curve.joints:
        if jc.kind == "R":
            out.append({"t0": _real_coeffs(jc.a), "t1": _real_coeffs(jc.b)})
        else:
            out.append({"num": _real_coeffs(jc.a), "den": _real_coeffs(jc.b)})
    return {"param": "u", "joints": out}


def parse_doc(doc: Any) -> tuple[Linkage, list[str]]:
    if not isinstance(doc, dict):
        raise SchemaError("document must be a JSON object")
    joints = doc.get("joints")
    if not isinstance(joints, list) or not joints:
        raise SchemaError("'joints' must be a non-empty list")
    notes: list[str] = []
    js = tuple(joint_from_dict(d, k, notes) for k, d in enumerate(joints))
    name = doc.get("name")
    if name is not None and not isinstance(name, str):
        raise SchemaError("'name' must be a string")
    return Linkage(js, name=name), notes


def parse_curve(doc: dict, L: Linkage) -> bondmod.ConfigCurve:
    cdoc = doc.get("curve")
    if cdoc is None:
        raise CliError(EXIT_BONDS, "bonds", "document has no 'curve' block")
    bad = [k for k, j in enumerate(L.joints) if j.kind not in "RP"]
    if bad:
        raise CliError(EXIT_BONDS, "bonds", f"bonds need R- and P-joints only; joints {bad} are not")
    if not isinstance(cdoc, dict) or not isinstance(cdoc.get("joints"), list):
        raise SchemaError("'curve' must be an object with a 'joints' list")
    if len(cdoc["joints"]) != L.n:
        raise SchemaError(f"curve has {len(cdoc['joints'])} entries for {L.n} joints")
    jcs = []
    for k, (j, c) in enumerate(zip(L.joints, cdoc["joints"])):
        if not isinstance(c, dict):
            raise SchemaError(f"curve entry {k} must be an object")
        if j.kind == "R":
            if "t0" not in c or "t1" not in c:
                raise SchemaError(f"curve entry {k}: R-joint needs 't0' and 't1'")
            jcs.append(bondmod.JointCurve.rotation(_poly(c["t0"], f"curve {k} t0"), _poly(c["t1"], f"curve {k} t1")))
        else:
            if "num" not in c:
                raise SchemaError(f"curve entry {k}: P-joint needs 'num' (and optionally 'den')")
            den = _poly(c.get("den", [1.0]), f"curve {k} den")
            jcs.append(bondmod.JointCurve.translation(_poly(c["num"], f"curve {k} num"), den))
    try:
        return bondmod.ConfigCurve(L, jcs)
    except bondmod.CurveInvariantViolated as e:
        raise CliError(EXIT_NUMERIC, "curve", str(e)) from None


def parse_carving(doc: dict, L: Linkage) -> CarvingInput:
    cdoc = doc.get("carving")
    if not isinstance(cdoc, dict):
        raise SchemaError("document has no 'carving' object")
    try:
        A = np.asarray(cdoc["A"], dtype=float)
        pitches = [float(g) for g in cdoc["pitches"]]
    except (KeyError, TypeError, ValueError):
        raise SchemaError("'carving' needs an integer matrix 'A' and a list 'pitches'") from None
    if any(g == 0 or not math.isfinite(g) for g in pitches):
        raise SchemaError("pitches must be nonzero finite numbers")
    rels = []
    k0 = cdoc.get("k0", {}) or {}
    for i, r in enumerate(k0.get("relations", [])):
        a = np.zeros(L.dof)
        try:
            for joint, name, w in r["terms"]:
                a[L.param_index(int(joint), str(name))] += float(w)
            value = float(r.get("value", 0.0))
        except (KeyError, TypeError, ValueError):
            raise SchemaError(f"k0 relation {i}: expected {{'terms': [[joint, param, weight], ...], 'value': v}}") from None
        rels.append(LinearConstraint(a, value, f"relation {i}"))
    try:
        return CarvingInput(
            L, A, pitches, c_joints=cdoc.get("c_joints"), k0_relations=rels, dimension=k0.get("dimension")
        )
    except ValueError as e:
        raise SchemaError(str(e)) from None


def load(path: str) -> dict:
    try:
        with open(path) as f:
            return json.load(f)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON: {e}") from None
    except OSError as e:
        raise SchemaError(f"cannot read {path}: {e.strerror}") from None


# ----------------------------------------------------------------------------
# commands


def _seed(args) -> int:
    env = os.environ.get("LINKFORGE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise SchemaError(f"LINKFORGE_SEED must be an integer, got {env!r}") from None
    return args.seed


def _mobility(L, args, seed):
    return mobility_estimate(L, initial_configuration(L), tol=args.tol, seed=seed, generic_steps=args.steps)


def cmd_analyze(args) -> dict:
    doc = load(args.input)
    L, notes = parse_doc(doc)
    seed = _seed(args)
    rep = _mobility(L, args, seed)
    return {
        "command": "analyze",
        "name": L.name,
        "kinds": L.kinds,
        "dof": L.dof,
        "mobility": rep.to_dict(),
        "warnings": notes + rep.warnings,
    }


def cmd_classify(args) -> dict:
    doc = load(args.input)
    L, notes = parse_doc(doc)
    seed = _seed(args)
    try:
        c = classify(L, seed=seed)
    except CensusError as e:
        raise CliError(EXIT_CENSUS, "census", str(e)) from None
    except ClassificationDisagreement as e:
        raise CliError(EXIT_NUMERIC, "disagreement", str(e), mobility=e.report.to_dict(), witness=e.witness) from None
    out = {"command": "classify", "name": L.name, "kinds": L.kinds, "warnings": notes}
    out.update(c.to_dict())
    if c.mobility is not None:
        out["warnings"] = notes + c.mobility.warnings
    return out


def _parse_point(text: str, L: Linkage) -> np.ndarray:
    if text.startswith("joint:"):
        k = int(text.split(":", 1)[1])
        j = L[k]
        if j.kind == "P":
            raise SchemaError("P-joints have no axis point")
        return j.axis.point
    try:
        v = [float(x) for x in text.split(",")]
    except ValueError:
        raise SchemaError(f"--point expects x,y,z or joint:K, got {text!r}") from None
    return _vec3(v, "--point")


def _projection_basis(L: Linkage, direction):
    if direction is None:
        lines = [j.axis for j in L.joints if j.kind in "RHC"]
        d = lines[0].p if lines and all_parallel(lines, 1e-7) else np.array([0.0, 0.0, 1.0])
    else:
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
    helper = np.eye(3)[int(np.argmin(np.abs(d)))]
    e1 = np.cross(d, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(d, e1)
    return d, e1, e2


def _svg(points2d) -> str:
    pts = np.asarray(points2d)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = float(max(hi[0] - lo[0], hi[1] - lo[1], 1e-12))
    size = 400.0
    margin = 10.0
    xy = (pts - lo) / span * (size - 2 * margin) + margin
    xy[:, 1] = size - xy[:, 1]
    coords = " ".join(f"{x:.6f},{y:.6f}" for x, y in xy)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size:.0f}" height="{size:.0f}" '
        f'viewBox="0 0 {size:.0f} {size:.0f}">\n'
        f'<polyline fill="none" stroke="black" stroke-width="1" points="{coords}"/>\n'
        "</svg>\n"
    )


def cmd_trace(args) -> str:
    doc = load(args.input)
    L, _ = parse_doc(doc)
    seed = _seed(args)
    fixed = args.fixed_link % L.n
    Lr = L.rotated(fixed)
    link = (args.link - fixed) % L.n
    x = _parse_point(args.point, L)
    start = initial_configuration(Lr)
    rep = mobility_estimate(Lr, start, seed=seed)
    if rep.mobility == 0:
        raise CliError(EXIT_IMMOBILE, "immobile", "linkage is numerically rigid; nothing to trace", mobility=rep.to_dict())
    start, _ = moving_start(Lr, start, seed=seed)
    sample = track_curve(Lr, start, steps=args.samples, steplen=args.steplen, seed=seed)
    pts = trace_point(Lr, sample, link, x)
    if args.format == "svg":
        d, e1, e2 = _projection_basis(L, args.direction)
        return _svg(np.stack([pts @ e1, pts @ e2], axis=1))
    labels = [f"j{(k + fixed) % L.n}_{name}" for k, name in Lr.param_labels()]
    lines = [",".join(["step"] + labels + ["x", "y", "z"])]
    for i, (c, p) in enumerate(zip(sample.coords, pts)):
        lines.append(",".join([str(i)] + [format(float(v), ".17g") for v in list(c) + list(p)]))
    return "\n".join(lines) + "\n"


def cmd_bonds(args) -> dict:
    doc = load(args.input)
    L, notes = parse_doc(doc)
    curve = parse_curve(doc, L)
    try:
        diagram = bondmod.bond_diagram(curve)
    except bondmod.RootFindingFailed as e:
        raise CliError(EXIT_NUMERIC, "roots", str(e)) from None
    facts = bondmod.check_bond_facts(curve, diagram)
    return {
        "command": "bonds",
        "name": L.name,
        "kinds": L.kinds,
        "diagram": diagram.to_dict(),
        "facts": {"violations": facts.violations, "flags": facts.flags},
        "warnings": notes,
    }


def cmd_carve(args) -> dict:
    doc = load(args.input)
    L, notes = parse_doc(doc)
    inp = parse_carving(doc, L)
    seed = _seed(args)
    try:
        res = carve(inp, n_samples=args.samples, seed=seed)
    except AnnihilationFailed as e:
        raise CliError(
            EXIT_ANNIHILATION, "annihilation", str(e), row=e.row, sample=e.sample, deviation=e.deviation, vector=e.what
        ) from None
    out = {
        "command": "carve",
        "linkage": linkage_to_doc(res.linkage),
        "bound": res.bound,
        "dimension": res.dimension,
        "m": res.m,
        "rank": res.rank,
        "seed": seed,
        "warnings": notes,
    }
    if args.verify:
        rep = mobility_estimate(res.linkage, initial_configuration(res.linkage), seed=seed)
        out["verified_mobility"] = rep.to_dict()
        if rep.mobility < res.bound:
            out["warnings"].append(f"numerical mobility {rep.mobility} is below the bound {res.bound}")
    return out


def _gallery_doc(name: str, params: dict) -> dict:
    item = gallery(name, **params)
    extra = {"params": dict(item.params)}
    if item.expected_mobility is not None:
        extra["expected_mobility"] = item.expected_mobility
    if item.carving is not None:
        inp = item.carving
        rels = []
        labels = inp.linkage.param_labels()
        for r in inp.k0_relations:
            terms = [[labels[i][0], labels[i][1], float(w)] for i, w in enumerate(r.coeffs) if w != 0]
            rels.append({"terms": terms, "value": float(r.value)})
        carving = {"A": inp.A.tolist(), "pitches": list(inp.pitches), "c_joints": list(inp.c_joints)}
        carving["k0"] = {"relations": rels}
        if inp.linkage is item.linkage or inp.linkage == item.linkage:
            extra["carving"] = carving
        else:
            extra["cylindrical_extension"] = linkage_to_doc(inp.linkage, carving=carving)
    return linkage_to_doc(item.linkage, item.curve, **extra)


def _parse_params(pairs) -> dict:
    out = {}
    for p in pairs or []:
        if "=" not in p:
            raise SchemaError(f"--param expects key=value, got {p!r}")
        k, v = p.split("=", 1)
        try:
            out[k] = json.loads(v)
        except json.JSONDecodeError:
            out[k] = v
    return out


def cmd_examples(args) -> dict:
    if args.name is None:
        return {"command": "examples", "gallery": {k: desc for k, (_, desc) in GALLERY.items()}}
    try:
        return _gallery_doc(args.name, _parse_params(args.param))
    except (TypeError, ValueError) as e:
        raise SchemaError(str(e)) from None


# ----------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="linkforge", description="Mobility, bonds and classification of closed linkages.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, tol=True):
        p.add_argument("input", help="linkage JSON document")
        p.add_argument("--seed", type=int, default=0, help="random seed (LINKFORGE_SEED overrides)")
        if tol:
            p.add_argument("--tol", type=float, default=1e-8, help="relative rank tolerance")
            p.add_argument("--steps", type=int, default=3, help="random tangent steps to a generic point")

    common(sub.add_parser("analyze", help="numerical mobility at a generic point"))
    common(sub.add_parser("classify", help="classify a 4- or 5-linkage"), tol=False)
    p = sub.add_parser("trace", help="trace a point of a moving link")
    common(p, tol=False)
    p.add_argument("--link", type=int, required=True, help="link carrying the point")
    p.add_argument("--point", required=True, help="x,y,z or joint:K for the axis point of joint K")
    p.add_argument("--fixed-link", type=int, default=0, help="link held fixed")
    p.add_argument("--samples", type=int, default=200, help="number of tracking steps")
    p.add_argument("--steplen", type=float, default=0.05)
    p.add_argument("--format", choices=("csv", "svg"), default="csv")
    p.add_argument("--direction", type=lambda s: [float(x) for x in s.split(",")], default=None,
                   help="projection direction for svg (default: common axis direction, else z)")
    p.add_argument("--output", "-o", default=None)
    common(sub.add_parser("bonds", help="bonds and bond diagram of a rational curve"), tol=False)
    p = sub.add_parser("carve", help="screw carving")
    common(p, tol=False)
    p.add_argument("--samples", type=int, default=40, help="random-walk samples on K0")
    p.add_argument("--verify", action="store_true", help="also estimate the mobility of the result")
    p = sub.add_parser("examples", help="list gallery entries or emit one as a document")
    p.add_argument("name", nargs="?", default=None)
    p.add_argument("--param", action="append", help="key=value gallery parameter (JSON value)")
    return ap


COMMANDS = {
    "analyze": cmd_analyze,
    "classify": cmd_classify,
    "trace": cmd_trace,
    "bonds": cmd_bonds,
    "carve": cmd_carve,
    "examples": cmd_examples,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        try:
            result = COMMANDS[args.command](args)
        except CliError:
            raise
        except (NotOnCurve, TrackingFailed, ClosureDegenerate, np.linalg.LinAlgError, ArithmeticError) as e:
            raise CliError(EXIT_NUMERIC, "numeric", str(e)) from None
        except NotImplementedError as e:
            raise CliError(EXIT_BONDS, "unsupported", str(e)) from None
        except ValueError as e:
            raise SchemaError(str(e)) from None
    except CliError as e:
        body = {"error": e.kind, "message": str(e), "exit_code": e.code}
        body.update(e.extra)
        sys.stderr.write(dumps(body) + "\n")
        return e.code
    text = result if isinstance(result, str) else dumps(result) + "\n"
    if getattr(args, "output", None):
        with open(args.output, "w") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
