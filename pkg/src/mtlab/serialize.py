"""JSON and CSV emission and schema-checked parsing of domain objects.

Numbers are written with 17 significant digits so that parse(print(x)) == x.
Domain objects must be finite; an infinite total volume is written as null.
Reports are lenient: non-finite entries become null and are listed under
"nonFinite".
"""

from __future__ import annotations

import dataclasses
import io
import json
import math

import numpy as np

from .discrete import DiscreteFunction, DiscreteMMS
from .radial import ProfileTable, RadialSpace
from .rearrange import RadialFunction


class SerializationError(ValueError):
    """A value cannot be written (non-finite) or a document fails its schema."""


# -- emission ------------------------------------------------------------------------------

def _number(x: float) -> str:
    if not math.isfinite(x):
        raise SerializationError(f"non-finite value {x!r}")
    if x == int(x) and abs(x) < 1e16:
        return repr(float(x))
    return format(x, ".17g")


def _emit(obj, out: list, indent: int, level: int):
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," if indent else ", "
    if obj is None or isinstance(obj, (bool, np.bool_)):
        out.append("null" if obj is None else ("true" if obj else "false"))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_number(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            out.append((sep if i else "") + pad + json.dumps(str(k)) + ": ")
            _emit(v, out, indent, level + 1)
        out.append(end + "}")
    elif isinstance(obj, (list, tuple, np.ndarray)):
        items = list(obj)
        if not items:
            out.append("[]")
            return
        flat = all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in items)
        out.append("[")
        for i, v in enumerate(items):
            out.append((", " if i else "") if flat else (sep if i else "") + pad)
            _emit(v, out, indent, level + 1)
        out.append("]" if flat else end + "]")
    else:
        raise SerializationError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    out: list = []
    _emit(obj, out, indent, 0)
    return "".join(out) + "\n"


def jsonable(obj, path: str = "", bad: list | None = None):
    """Plain JSON structure from dataclasses/numpy; non-finite floats become None."""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        obj = {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): jsonable(v, f"{path}.{k}" if path else str(k), bad) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [jsonable(v, f"{path}[{i}]", bad) for i, v in enumerate(obj)]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            if bad is not None:
                bad.append(f"{path}={x}")
            return None
        return x
    if obj is None or isinstance(obj, str):
        return obj
    raise SerializationError(f"cannot serialize {type(obj).__name__} at {path or 'root'}")


def report_document(report, **header) -> dict:
    bad: list = []
    body = jsonable(report, "", bad)
    doc = dict(jsonable(header))
    doc["report"] = body
    if bad:
        doc["nonFinite"] = bad
    return doc


def csv_text(columns, rows, comments=()) -> str:
    """CSV with '#' comment lines, a header row, then rows at 17 digits."""
    buf = io.StringIO()
    for c in comments:
        buf.write(f"# {c}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        cells = []
        for v in row:
            if isinstance(v, (float, np.floating)):
                v = float(v)
                cells.append(format(v, ".17g") if math.isfinite(v) else ("inf" if v > 0 else "-inf"
                                                                         if v < 0 else "nan"))
            else:
                cells.append(str(v))
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


# -- domain objects ------------------------------------------------------------------------

def space_to_dict(s: RadialSpace) -> dict:
    return {"type": "radialSpace", "n": s.n, "label": s.label, "meta": jsonable(s.meta),
            "grid": s.grid.tolist(), "warp": s.warp.tolist()}


def profile_to_dict(f: ProfileTable) -> dict:
    total = f.total_volume if math.isfinite(f.total_volume) else None
    return {"totalVolume": total,
            "points": [{"t": float(t), "phi": float(p)} for t, p in zip(f.volumes, f.perimeters)]}


def graph_to_dict(g: DiscreteMMS) -> dict:
    return {"vertices": [{"id": i, "mu": float(m)} for i, m in enumerate(g.measures)],
            "edges": [{"a": int(a), "b": int(b), "d": float(d), "w": float(w)}
                      for a, b, d, w in g.edges]}


def function_to_dict(u) -> dict:
    if isinstance(u, DiscreteFunction):
        doc = graph_to_dict(u.space)
        doc.update(kind="discrete", values=u.values.tolist())
        return doc
    return {"kind": "radial", "space": space_to_dict(u.space),
            "radii": u.radii.tolist(), "values": u.values.tolist()}


# -- parsing -------------------------------------------------------------------------------

def loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise SerializationError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None


def _field(doc, key, path, kind=None):
    if not isinstance(doc, dict) or key not in doc:
        raise SerializationError(f"{path}: missing field '{key}'")
    v = doc[key]
    if kind == "number":
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise SerializationError(f"{path}.{key}: expected a finite number, got {v!r}")
        return float(v)
    if kind == "list" and not isinstance(v, list):
        raise SerializationError(f"{path}.{key}: expected a list")
    return v


def _numbers(doc, key, path) -> np.ndarray:
    v = _field(doc, key, path, "list")
    for i, x in enumerate(v):
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise SerializationError(f"{path}.{key}[{i}]: expected a finite number, got {x!r}")
    return np.asarray(v, dtype=float)


def _build(ctor, path, *args):
    try:
        return ctor(*args)
    except ValueError as e:
        raise SerializationError(f"{path}: {e}") from None


def space_from_dict(doc, path: str = "space") -> RadialSpace:
    n = _field(doc, "n", path)
    if isinstance(n, bool) or not isinstance(n, int):
        raise SerializationError(f"{path}.n: expected an integer")
    meta = doc.get("meta", {})
    if not isinstance(meta, dict):
        raise SerializationError(f"{path}.meta: expected an object")
    return _build(RadialSpace, path, n, _numbers(doc, "grid", path), _numbers(doc, "warp", path),
                  str(doc.get("label", "")), dict(meta))


def profile_from_dict(doc, path: str = "profile") -> ProfileTable:
    total = doc.get("totalVolume") if isinstance(doc, dict) else None
    if total is None:
        total = math.inf
    elif isinstance(total, bool) or not isinstance(total, (int, float)):
        raise SerializationError(f"{path}.totalVolume: expected a number or null")
    pts = _field(doc, "points", path, "list")
    t = np.array([_field(p, "t", f"{path}.points[{i}]", "number") for i, p in enumerate(pts)])
    phi = np.array([_field(p, "phi", f"{path}.points[{i}]", "number") for i, p in enumerate(pts)])
    return _build(ProfileTable, path, t, phi, float(total))


def graph_from_dict(doc, path: str = "graph") -> DiscreteMMS:
    verts = _field(doc, "vertices", path, "list")
    ids = {}
    mu = []
    for i, v in enumerate(verts):
        vid = _field(v, "id", f"{path}.vertices[{i}]")
        if vid in ids:
            raise SerializationError(f"{path}.vertices[{i}].id: duplicate id {vid!r}")
        ids[vid] = i
        m = _field(v, "mu", f"{path}.vertices[{i}]", "number")
        if m <= 0:
            raise SerializationError(f"{path}.vertices[{i}].mu: measure must be positive, got {m}")
        mu.append(m)
    rows = []
    for k, e in enumerate(_field(doc, "edges", path, "list")):
        p = f"{path}.edges[{k}]"
        a, b = _field(e, "a", p), _field(e, "b", p)
        if a not in ids or b not in ids:
            raise SerializationError(f"{p}: unknown vertex id")
        rows.append((ids[a], ids[b], _field(e, "d", p, "number"), _field(e, "w", p, "number")))
    return _build(DiscreteMMS, path, np.array(mu), np.array(rows, dtype=float).reshape(-1, 4),
                  str(doc.get("label", "")))


def function_from_dict(doc, space: RadialSpace | None = None, path: str = "function"):
    """Discrete function (graph plus "values") or radial function ("radii", "values")."""
    kind = doc.get("kind") if isinstance(doc, dict) else None
    if kind == "discrete" or (kind is None and isinstance(doc, dict) and "vertices" in doc):
        g = graph_from_dict(doc, path)
        values = _numbers(doc, "values", path)
        return _build(DiscreteFunction, path, g, values)
    if kind not in (None, "radial"):
        raise SerializationError(f"{path}.kind: expected 'discrete' or 'radial', got {kind!r}")
    if "space" in doc:
        space = space_from_dict(doc["space"], f"{path}.space")
    if space is None:
        raise SerializationError(f"{path}: radial function needs a 'space'")
    return _build(RadialFunction, path, space, _numbers(doc, "radii", path), _numbers(doc, "values", path))
