"""File formats for coincidence data and reconstructed density matrices.

Coincidence CSV
    Header ``nu,phase_or_angle,count``. Rows for nu = 1..4 leave
    ``phase_or_angle`` empty; rows for nu = 5..16 are fringe samples.

Coincidence JSON
    ``{"n": [n1..n4] or [n1..n16], "fringes": {"5": {"angles": [...],
    "counts": [...]}, ...}, "interference": [I5..I16],
    "contrast_ref": c, "conditioning_totals": {"5": t, ...}}``. Either
    ``fringes``, ``interference`` or a full 16-entry ``n`` must be given.
"""
from __future__ import annotations

import csv
import hashlib
import json
from collections import defaultdict
from pathlib import Path

import numpy as np

from .tomography import BASIS_LABEL, CoincidenceSet


class InputFormatError(ValueError):
    pass


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_coincidence_csv(path, cs: CoincidenceSet) -> None:
    fringes = cs.meta.get("fringes")
    if fringes is None:
        raise ValueError("coincidence set carries no fringe records")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["nu", "phase_or_angle", "count"])
        for nu in range(1, 5):
            w.writerow([nu, "", repr(float(cs.n[nu - 1]))])
        for nu in range(5, 17):
            for x, c in zip(*fringes[nu]):
                w.writerow([nu, repr(float(x)), repr(float(c))])


def read_coincidence_csv(path) -> dict:
    n = {}
    fringes = defaultdict(lambda: ([], []))
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["nu", "phase_or_angle", "count"]:
            raise InputFormatError(f"{path}:1: expected header nu,phase_or_angle,count")
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise InputFormatError(f"{path}:{lineno}: expected 3 fields, got {len(row)}")
            try:
                nu = int(row[0])
                count = float(row[2])
                angle = float(row[1]) if row[1].strip() else None
            except ValueError as exc:
                raise InputFormatError(f"{path}:{lineno}: {exc}") from None
            if not 1 <= nu <= 16:
                raise InputFormatError(f"{path}:{lineno}: nu={nu} outside 1..16")
            if nu <= 4:
                if angle is not None:
                    raise InputFormatError(f"{path}:{lineno}: nu={nu} takes no phase")
                n[nu] = count
            else:
                if angle is None:
                    raise InputFormatError(f"{path}:{lineno}: fringe row needs phase_or_angle")
                fringes[nu][0].append(angle)
                fringes[nu][1].append(count)
    missing = [nu for nu in range(1, 5) if nu not in n]
    if missing:
        raise InputFormatError(f"{path}: missing rows for nu={missing}")
    missing = [nu for nu in range(5, 17) if nu not in fringes]
    if missing:
        raise InputFormatError(f"{path}: missing fringe rows for nu={missing}")
    return {
        "n": [n[k] for k in range(1, 5)],
        "fringes": {nu: (np.array(a), np.array(c)) for nu, (a, c) in fringes.items()},
    }


def read_coincidence_json(path) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputFormatError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(doc, dict) or "n" not in doc:
        raise InputFormatError(f"{path}: expected an object with field 'n'")
    n = doc["n"]
    if not isinstance(n, list) or len(n) not in (4, 16):
        raise InputFormatError(f"{path}: field 'n' must list 4 or 16 numbers")
    out = {"n": [float(x) for x in n]}
    if "fringes" in doc:
        try:
            out["fringes"] = {
                int(k): (np.asarray(v["angles"], float), np.asarray(v["counts"], float))
                for k, v in doc["fringes"].items()
            }
        except (KeyError, TypeError, ValueError) as exc:
            raise InputFormatError(f"{path}: field 'fringes': {exc}") from None
    if "interference" in doc:
        out["interference"] = [float(x) for x in doc["interference"]]
        if len(out["interference"]) != 12:
            raise InputFormatError(f"{path}: field 'interference' must list 12 numbers")
    if "contrast_ref" in doc:
        out["contrast_ref"] = doc["contrast_ref"]
    if "conditioning_totals" in doc:
        out["conditioning_totals"] = {int(k): float(v) for k, v in doc["conditioning_totals"].items()}
    if len(n) == 4 and "fringes" not in out and "interference" not in out:
        raise InputFormatError(f"{path}: need 'fringes' or 'interference' with 4 counts")
    return out


def read_coincidences(path) -> dict:
    p = Path(path)
    if not p.exists():
        raise InputFormatError(f"{path}: no such file")
    if p.suffix.lower() == ".json":
        return read_coincidence_json(p)
    return read_coincidence_csv(p)


def write_coincidence_json(path, cs: CoincidenceSet) -> None:
    doc = {"n": [float(x) for x in cs.n]}
    if cs.interference is not None:
        doc["interference"] = [float(x) for x in cs.interference]
    doc["contrast_ref"] = float(np.asarray(cs.contrast_ref).flat[0])
    fringes = cs.meta.get("fringes")
    if fringes:
        doc["fringes"] = {str(k): {"angles": [float(x) for x in a], "counts": [float(x) for x in c]}
                          for k, (a, c) in sorted(fringes.items())}
    Path(path).write_text(json.dumps(doc, indent=2) + "\n")


def matrix_json(rho) -> dict:
    r = np.asarray(rho, dtype=complex)
    return {"re": r.real.tolist(), "im": r.imag.tolist()}


def matrix_from_json(doc: dict) -> np.ndarray:
    return np.asarray(doc["re"], float) + 1j * np.asarray(doc["im"], float)


def density_report(rho, metrics: dict, *, rho_linear=None, rho_raw=None,
                   provenance: dict | None = None, bootstrap: dict | None = None) -> dict:
    """Density-matrix output document."""
    doc = {"basis": BASIS_LABEL, "rho": matrix_json(rho), "metrics": metrics}
    if rho_raw is not None:
        doc["rho_raw"] = matrix_json(rho_raw)
    if rho_linear is not None:
        doc["rho_linear"] = matrix_json(rho_linear)
    if bootstrap is not None:
        doc["bootstrap"] = bootstrap
    doc["provenance"] = provenance or {}
    return doc
