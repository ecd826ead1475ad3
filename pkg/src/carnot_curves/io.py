"""Curve documents: lossless JSON, CSV sample tables and atomic writes."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile

import numpy as np

from .curves import PiecewiseCurve
from .engel import ControlWord, CounterexampleSpec
from .hgroup import HorizontalPath, SampledCurve


class DocumentError(ValueError):
    """Malformed or unsupported curve document."""


def _plain(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj) -> str:
    """JSON text; floats use the shortest repr that round-trips exactly."""
    try:
        return json.dumps(obj, default=_plain, allow_nan=False) + "\n"
    except (TypeError, ValueError) as exc:
        raise DocumentError(str(exc)) from exc


def loads(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc}") from exc


def to_document(obj):
    """Document dictionary for a curve-like object."""
    if isinstance(obj, SampledCurve):
        doc = {
            "group": "heisenberg",
            "n": obj.n,
            "kind": "sampled",
            "samples": np.column_stack([obj.times, obj.points]).tolist(),
        }
        if obj.derivatives is not None:
            doc["derivatives"] = obj.derivatives.tolist()
        return doc
    if isinstance(obj, HorizontalPath):
        return {"group": "heisenberg", "n": obj.n, "kind": "piecewise", **obj.to_dict()}
    if isinstance(obj, PiecewiseCurve):
        return {"group": "planar", "kind": "piecewise", **obj.to_dict()}
    if isinstance(obj, CounterexampleSpec):
        return {"group": "engel", "kind": "counterexample", **obj.to_dict()}
    if isinstance(obj, ControlWord):
        return {"group": "engel", "kind": "word", **obj.to_dict()}
    raise DocumentError(f"no document form for {type(obj).__name__}")


def from_document(doc):
    """Inverse of ``to_document``."""
    if not isinstance(doc, dict):
        raise DocumentError("a curve document is a JSON object")
    try:
        group, kind = doc["group"], doc["kind"]
        if group == "heisenberg":
            n = int(doc["n"])
            if kind == "sampled":
                rows = np.array(doc["samples"], dtype=float)
                if rows.ndim != 2 or rows.shape[1] != 2 * n + 2:
                    raise DocumentError(f"samples must be rows of length {2 * n + 2}")
                derivs = doc.get("derivatives")
                return SampledCurve(rows[:, 0], rows[:, 1:], None if derivs is None else np.array(derivs, dtype=float))
            if kind == "piecewise":
                path = HorizontalPath.from_dict(doc)
                if path.n != n:
                    raise DocumentError("piece dimension disagrees with n")
                return path
        elif group == "planar" and kind == "piecewise":
            return PiecewiseCurve.from_dict(doc)
        elif group == "engel":
            if kind == "counterexample":
                return CounterexampleSpec.from_dict(doc)
            if kind == "word":
                return ControlWord.from_dict(doc)
    except DocumentError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise DocumentError(f"malformed {doc.get('group')}/{doc.get('kind')} document: {exc}") from exc
    raise DocumentError(f"unsupported document group={doc.get('group')!r} kind={doc.get('kind')!r}")


def sampled_to_csv(curve: SampledCurve) -> str:
    n = curve.n
    header = ["t"] + [f"c{k}" for k in range(1, 2 * n + 2)]
    cols = [curve.times[:, None], curve.points]
    if curve.derivatives is not None:
        header += [f"d{k}" for k in range(1, 2 * n + 2)]
        cols.append(curve.derivatives)
    return table_to_csv(header, np.hstack(cols))


def sampled_from_csv(text) -> SampledCurve:
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration as exc:
        raise DocumentError("empty CSV") from exc
    header = [h.strip() for h in header]
    if not header or header[0] != "t":
        raise DocumentError("CSV header must start with t")
    coords = [h for h in header if h.startswith("c")]
    derivs = [h for h in header if h.startswith("d")]
    width = len(coords)
    if [f"c{k}" for k in range(1, width + 1)] != coords or derivs and len(derivs) != width:
        raise DocumentError("CSV header must be t,c1..c{2n+1}[,d1..d{2n+1}]")
    try:
        rows = np.array([[float(x) for x in row] for row in reader if row], dtype=float)
    except ValueError as exc:
        raise DocumentError(f"bad CSV number: {exc}") from exc
    if rows.ndim != 2 or rows.shape[1] != len(header):
        raise DocumentError("ragged CSV rows")
    d = rows[:, 1 + width :] if derivs else None
    return SampledCurve(rows[:, 0], rows[:, 1 : 1 + width], d)


def table_to_csv(header, rows) -> str:
    rows = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(rows)):
        raise DocumentError("non-finite number in table")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows.tolist())
    return buf.getvalue()


def atomic_write(path, text):
    """Write via a temporary file in the target directory, then rename over ``path``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def read_text(path):
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def load_curve(path):
    """Curve object from a JSON document or a CSV sample table."""
    text = read_text(path)
    if os.fspath(path).lower().endswith(".csv"):
        return sampled_from_csv(text)
    return from_document(loads(text))
