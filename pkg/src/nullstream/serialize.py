"""JSON and CSV encoding for instances, subspaces, and reports.

Floats are printed with 17 significant digits so that every IEEE double
round-trips exactly; reading goes through the stdlib json parser. CSV output
uses LF newlines and the same float format.
"""

import csv
import io
import json
import math

import numpy as np

from .errors import ValidationError
from .instances import AnvInstance, LrInstance, LspDataset
from .linalg import Subspace
from .verification import LemmaReport

__all__ = [
    "format_float",
    "dumps",
    "instance_to_json",
    "instance_from_json",
    "subspace_to_json",
    "subspace_from_json",
    "report_to_json",
    "report_from_json",
    "report_to_csv",
    "csv_cell",
]


def format_float(x) -> str:
    v = float(x)
    if not math.isfinite(v):
        raise ValidationError("cannot serialize non-finite value %r" % (v,))
    s = format(v, ".17g")
    # keep a decimal marker so json parses the value back as a float
    if "." not in s and "e" not in s:
        s += ".0"
    return s


def _emit(obj, out):
    if isinstance(obj, str):
        out.write(json.dumps(obj))
    elif isinstance(obj, (bool, np.bool_)):
        out.write("true" if obj else "false")
    elif isinstance(obj, (int, np.integer)):
        out.write(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.write(format_float(obj))
    elif obj is None:
        out.write("null")
    elif isinstance(obj, dict):
        out.write("{")
        for i, (k, v) in enumerate(obj.items()):
            if not isinstance(k, str):
                raise ValidationError("object keys must be strings, got %r" % (k,))
            if i:
                out.write(", ")
            out.write(json.dumps(k))
            out.write(": ")
            _emit(v, out)
        out.write("}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        if isinstance(obj, np.ndarray):
            obj = obj.tolist()
        out.write("[")
        for i, v in enumerate(obj):
            if i:
                out.write(", ")
            _emit(v, out)
        out.write("]")
    else:
        raise ValidationError("cannot serialize objects of type %s" % type(obj).__name__)


def dumps(doc) -> str:
    """Serialize a document to JSON text with 17-significant-digit floats."""
    out = io.StringIO()
    _emit(doc, out)
    return out.getvalue()


def _parse(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError("malformed JSON: %s" % exc) from exc
    if not isinstance(doc, dict):
        raise ValidationError("expected a JSON object at the top level")
    return doc


def instance_to_json(inst, seed) -> str:
    if isinstance(inst, AnvInstance):
        doc = {
            "type": "anv",
            "d": inst.d,
            "params": {"variant": inst.variant, "cf": inst.cf},
            "vectors": inst.vectors,
            "witness": inst.witness,
            "seed": seed,
        }
    elif isinstance(inst, LspDataset):
        doc = {
            "type": "lsp",
            "d": inst.d,
            "params": {"m": inst.n, "margin": inst.margin},
            "points": inst.xs,
            "labels": inst.ys,
            "witness": inst.witness,
            "seed": seed,
        }
    elif isinstance(inst, LrInstance):
        doc = {
            "type": "lr",
            "d": inst.d,
            "params": {"m": int(inst.a.shape[0])},
            "vectors": inst.a,
            "targets": inst.b,
            "witness": inst.witness,
            "seed": seed,
        }
    else:
        raise ValidationError("unknown instance type %s" % type(inst).__name__)
    return dumps(doc) + "\n"


def instance_from_json(text: str):
    """Parse an instance file; returns (instance, seed)."""
    doc = _parse(text)
    try:
        kind = doc["type"]
        seed = doc["seed"]
        params = doc["params"]
        witness = np.asarray(doc["witness"], dtype=float)
        if kind == "anv":
            inst = AnvInstance(
                variant=params["variant"],
                d=int(doc["d"]),
                vectors=np.asarray(doc["vectors"], dtype=float),
                witness=witness,
                cf=None if params["cf"] is None else float(params["cf"]),
            )
        elif kind == "lsp":
            inst = LspDataset(
                xs=np.asarray(doc["points"], dtype=float),
                ys=np.asarray(doc["labels"], dtype=float),
                witness=witness,
                margin=float(params["margin"]),
            )
        elif kind == "lr":
            inst = LrInstance(
                a=np.asarray(doc["vectors"], dtype=float),
                b=np.asarray(doc["targets"], dtype=float),
                witness=witness,
            )
        else:
            raise ValidationError("unknown instance type %r" % (kind,))
    except KeyError as exc:
        raise ValidationError("instance file missing field %s" % exc) from exc
    return inst, seed


def subspace_to_json(s: Subspace) -> str:
    return dumps({"ambient_dim": s.ambient_dim, "dim": s.dim, "basis": s.basis}) + "\n"


def subspace_from_json(text: str) -> Subspace:
    doc = _parse(text)
    try:
        return Subspace(
            ambient_dim=int(doc["ambient_dim"]),
            dim=int(doc["dim"]),
            basis=np.asarray(doc["basis"], dtype=float),
        )
    except KeyError as exc:
        raise ValidationError("subspace file missing field %s" % exc) from exc


def report_to_json(r: LemmaReport) -> str:
    doc = {
        "lemma_id": r.lemma_id,
        "d": r.d,
        "trials": r.trials,
        "pass_fraction": r.pass_fraction,
        "statistics": r.statistics,
        "seed": r.seed,
        "trial_rows": list(r.trial_rows),
    }
    return dumps(doc) + "\n"


def report_from_json(text: str) -> LemmaReport:
    doc = _parse(text)
    try:
        return LemmaReport(
            lemma_id=doc["lemma_id"],
            d=int(doc["d"]),
            trials=int(doc["trials"]),
            pass_fraction=float(doc["pass_fraction"]),
            statistics=doc["statistics"],
            seed=doc["seed"],
            trial_rows=tuple(doc["trial_rows"]),
        )
    except KeyError as exc:
        raise ValidationError("report file missing field %s" % exc) from exc


def csv_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return str(v)


def report_to_csv(r: LemmaReport) -> str:
    """One row per trial. Columns: lemma_id, d, seed, trial, then the union
    of the per-trial keys in sorted order; absent keys leave empty cells."""
    extra = sorted({k for row in r.trial_rows for k in row} - {"trial"})
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["lemma_id", "d", "seed", "trial"] + extra)
    for row in r.trial_rows:
        lead = [r.lemma_id, csv_cell(r.d), csv_cell(r.seed), csv_cell(row.get("trial"))]
        writer.writerow(lead + [csv_cell(row.get(k)) for k in extra])
    return out.getvalue()
