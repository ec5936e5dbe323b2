"""Instance, solution, and trace file formats.

Instances and solutions are JSON documents carrying a schema version;
floats survive round-trips exactly because the serializer emits shortest
repr, which Python parses back to the identical double.  The trace is a
flat CSV table with one row per accepted iteration.  Solutions embed a
digest of the instance geometry so mismatched pairings are rejected.
"""

from __future__ import annotations

import csv
import hashlib
import json
from datetime import datetime, timezone

import numpy as np

from .geometry import ConvexPolygon
from .measure import DensityMesh
from .solver import Instance, IterationRecord, Solution
from .storage import StorageParams

SCHEMA_VERSION = 1

TRACE_FIELDS = ["k", "residual_l2", "residual_l1", "residual_linf",
                "ell", "r", "min_wbar"]


class FormatError(Exception):
    pass


class GeometryMismatch(FormatError):
    pass


def _instance_doc(instance: Instance, params: StorageParams | None,
                  psi0=None) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "domain": instance.domain.vertices.tolist(),
        "mesh": {
            "points": instance.mesh.points.tolist(),
            "triangles": instance.mesh.triangles.tolist(),
            "values": instance.mesh.values.tolist(),
        },
        "sites": instance.sites.tolist(),
        "capacities": instance.capacities.tolist(),
    }
    if params is not None:
        doc["h"] = params.h
        doc["eps"] = params.eps
    if psi0 is not None:
        doc["psi0"] = np.asarray(psi0, float).tolist()
    return doc


def instance_digest(instance: Instance) -> str:
    doc = _instance_doc(instance, None)
    payload = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(payload.encode()).hexdigest()


def save_instance(path, instance: Instance,
                  params: StorageParams | None = None, psi0=None):
    doc = _instance_doc(instance, params, psi0)
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def load_instance(path):
    """Read an instance file; returns (instance, params or None, psi0 or None)."""
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    try:
        mesh = DensityMesh(doc["mesh"]["points"], doc["mesh"]["triangles"],
                           doc["mesh"]["values"])
        instance = Instance(ConvexPolygon(doc["domain"]),
                            np.asarray(doc["sites"], float), mesh,
                            np.asarray(doc["capacities"], float))
    except KeyError as exc:
        raise FormatError(f"{path}: missing key {exc}") from exc
    params = None
    if "h" in doc:
        params = StorageParams(h=doc["h"], eps=doc.get("eps", 1e-6))
    psi0 = np.asarray(doc["psi0"], float) if "psi0" in doc else None
    return instance, params, psi0


def save_solution(path, solution: Solution, instance: Instance):
    doc = {
        "schema_version": SCHEMA_VERSION,
        "created": datetime.now(timezone.utc).isoformat(),
        "instance_sha256": instance_digest(instance),
        "psi": solution.psi.tolist(),
        "masses": solution.masses.tolist(),
        "wbar": solution.wbar.tolist(),
        "eps0": solution.eps0,
        "initial_residual": solution.initial_residual,
        "iterations": solution.iterations,
        "converged": solution.converged,
        "failure": solution.failure,
        "h": solution.params.h,
        "eps": solution.params.eps,
    }
    with open(path, "w") as f:
        json.dump(doc, f, indent=2, sort_keys=True)
        f.write("\n")


def load_solution(path, instance: Instance | None = None) -> dict:
    with open(path) as f:
        try:
            doc = json.load(f)
        except json.JSONDecodeError as exc:
            raise FormatError(f"{path}:{exc.lineno}: {exc.msg}") from exc
    if instance is not None:
        if doc.get("instance_sha256") != instance_digest(instance):
            raise GeometryMismatch(
                f"{path} was not produced from the given instance")
    for key in ("psi", "masses", "wbar"):
        if key in doc:
            doc[key] = np.asarray(doc[key], float)
    return doc


def save_trace(path, trace: list[IterationRecord]):
    with open(path, "w", newline="") as f:
        wr = csv.writer(f)
        wr.writerow(TRACE_FIELDS)
        for rec in trace:
            wr.writerow([rec.k, repr(rec.residual_norm),
                         repr(rec.residual_l1), repr(rec.residual_linf),
                         rec.ell, repr(rec.r), repr(rec.min_wbar)])


def load_trace(path) -> list[IterationRecord]:
    out = []
    with open(path, newline="") as f:
        rd = csv.DictReader(f)
        for row in rd:
            out.append(IterationRecord(
                k=int(row["k"]), residual_norm=float(row["residual_l2"]),
                residual_l1=float(row["residual_l1"]),
                residual_linf=float(row["residual_linf"]),
                ell=int(row["ell"]), tau=2.0 ** (-int(row["ell"])),
                r=float(row["r"]), min_wbar=float(row["min_wbar"])))
    return out
