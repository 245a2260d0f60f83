"""File formats: PLY point clouds and JSON axis/manifest/report records.

PLY files carry float32 or float64 ``x, y, z`` vertex properties, an
optional ``uchar part`` label (0 static, 1 dynamic) and optional
``uchar red, green, blue`` colors.  ASCII and binary little-endian are
supported for reading and writing.
"""

import json
import math
import os
import warnings
from pathlib import Path

import numpy as np

from .errors import FormatError, PLYParseError
from .geometry import MotionAxis, MotionKind, ObservedSequence, PointCloud

SEQUENCE_VERSION = "artic-sequence/1"
REPORT_VERSION = "artic-report/1"
SUITE_VERSION = "artic-suite/1"

_PLY_TYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}
_FORMATS = {"ascii": None, "binary_little_endian": "<", "binary_big_endian": ">"}


# ---------------------------------------------------------------- PLY

def write_ply(path, points, labels=None, colors=None, binary=True,
              dtype=np.float64):
    """Write vertices (and optional labels/colors) to a PLY file.

    Parameters
    ----------
    points : (N, 3) array_like or PointCloud
        If a PointCloud, its labels are written unless ``labels`` is given.
    colors : (N, 3) array_like of uint8, optional
    binary : bool
        Binary little-endian when True, ASCII otherwise.
    dtype : {np.float32, np.float64}
    """
    if isinstance(points, PointCloud):
        if labels is None:
            labels = points.labels
        points = points.points
    pts = np.asarray(points, dtype=dtype)
    n = len(pts)
    ftype = {np.dtype("f4"): "float", np.dtype("f8"): "double"}[np.dtype(dtype)]
    fields = [("x", "<" + pts.dtype.str[1:]), ("y", "<" + pts.dtype.str[1:]),
              ("z", "<" + pts.dtype.str[1:])]
    header = ["ply", "format %s 1.0" % ("binary_little_endian" if binary else "ascii"),
              f"element vertex {n}"]
    header += [f"property {ftype} {c}" for c in "xyz"]
    if labels is not None:
        labels = np.asarray(labels, dtype=np.uint8)
        header.append("property uchar part")
        fields.append(("part", "u1"))
    if colors is not None:
        colors = np.asarray(colors, dtype=np.uint8).reshape(n, 3)
        header += [f"property uchar {c}" for c in ("red", "green", "blue")]
        fields += [("red", "u1"), ("green", "u1"), ("blue", "u1")]
    header.append("end_header")
    rec = np.empty(n, dtype=fields)
    rec["x"], rec["y"], rec["z"] = pts[:, 0], pts[:, 1], pts[:, 2]
    if labels is not None:
        rec["part"] = labels
    if colors is not None:
        rec["red"], rec["green"], rec["blue"] = colors.T
    with open(path, "wb") as fh:
        fh.write(("\n".join(header) + "\n").encode("ascii"))
        if binary:
            fh.write(rec.tobytes())
        else:
            for row in rec:
                fh.write((" ".join(_ascii_value(v) for v in row) + "\n").encode("ascii"))


def _ascii_value(v):
    if isinstance(v, np.floating):
        return repr(v.item())
    return str(int(v))


def _parse_header(data):
    if not data.startswith(b"ply"):
        raise PLYParseError("missing 'ply' magic", offset=0)
    fmt, elements, offset = None, [], 0
    while True:
        end = data.find(b"\n", offset)
        if end < 0:
            raise PLYParseError("header has no end_header line", offset=len(data))
        raw = data[offset:end]
        try:
            line = raw.decode("ascii").strip()
        except UnicodeDecodeError:
            raise PLYParseError("non-ASCII header line", offset=offset) from None
        words = line.split()
        here, offset = offset, end + 1
        if not words or words[0] in ("comment", "obj_info"):
            continue
        key = words[0]
        if key == "ply" and here == 0:
            if len(words) != 1:
                raise PLYParseError("malformed magic line", offset=here)
        elif key == "format":
            if fmt is not None:
                raise PLYParseError("more than one format line (mixed encodings)", offset=here)
            if len(words) != 3 or words[1] not in _FORMATS:
                raise PLYParseError(f"unknown format line {line!r}", offset=here)
            if words[2] != "1.0":
                raise PLYParseError(f"unsupported PLY version {words[2]!r}", offset=here)
            if words[1] == "binary_big_endian":
                raise PLYParseError("big-endian PLY is not supported", offset=here)
            fmt = words[1]
        elif key == "element":
            if len(words) != 3:
                raise PLYParseError(f"malformed element line {line!r}", offset=here)
            try:
                count = int(words[2])
            except ValueError:
                raise PLYParseError(f"element count {words[2]!r} is not an integer",
                                    offset=here) from None
            if count < 0:
                raise PLYParseError("negative element count", offset=here)
            elements.append((words[1], count, []))
        elif key == "property":
            if not elements:
                raise PLYParseError("property before any element", offset=here)
            if len(words) >= 2 and words[1] == "list":
                raise PLYParseError("list properties are not supported", offset=here)
            if len(words) != 3:
                raise PLYParseError(f"malformed property line {line!r}", offset=here)
            if words[1] not in _PLY_TYPES:
                raise PLYParseError(f"unknown property type {words[1]!r}", offset=here)
            props = elements[-1][2]
            if words[2] in [p for p, _ in props]:
                raise PLYParseError(f"duplicate property {words[2]!r}", offset=here)
            props.append((words[2], _PLY_TYPES[words[1]]))
        elif key == "end_header":
            break
        else:
            raise PLYParseError(f"unexpected header line {line!r}", offset=here)
    if fmt is None:
        raise PLYParseError("header has no format line", offset=offset)
    return fmt, elements, offset


def _read_binary(data, offset, elements):
    out = {}
    for name, count, props in elements:
        dt = np.dtype([(p, "<" + t) for p, t in props])
        need = count * dt.itemsize
        have = len(data) - offset
        if have < need:
            rows = have // dt.itemsize if dt.itemsize else 0
            raise PLYParseError(
                f"element {name!r} declares {count} rows but data ends after {rows}",
                offset=len(data),
            )
        out[name] = np.frombuffer(data, dtype=dt, count=count, offset=offset).copy()
        offset += need
    if offset != len(data):
        raise PLYParseError(f"{len(data) - offset} trailing bytes after last element",
                            offset=offset)
    return out


def _read_ascii(data, offset, elements):
    lines = data[offset:].split(b"\n")
    pos, li, out = offset, 0, {}
    for name, count, props in elements:
        dt = np.dtype([(p, t) for p, t in props])
        rec = np.empty(count, dtype=dt)
        for r in range(count):
            while li < len(lines) and not lines[li].strip():
                pos += len(lines[li]) + 1
                li += 1
            if li >= len(lines):
                raise PLYParseError(
                    f"element {name!r} declares {count} rows but data ends after {r}",
                    offset=len(data),
                )
            tokens = lines[li].split()
            if len(tokens) != len(props):
                raise PLYParseError(
                    f"element {name!r} row {r} has {len(tokens)} values, "
                    f"expected {len(props)}", offset=pos)
            for (p, t), tok in zip(props, tokens):
                try:
                    val = float(tok) if t[0] == "f" else int(tok)
                except ValueError:
                    raise PLYParseError(f"bad {p!r} value {tok.decode(errors='replace')!r}",
                                        offset=pos) from None
                if t[0] != "f":
                    info = np.iinfo(t)
                    if not info.min <= val <= info.max:
                        raise PLYParseError(f"{p!r} value {val} out of range", offset=pos)
                rec[p][r] = val
            pos += len(lines[li]) + 1
            li += 1
        out[name] = rec
    if any(line.strip() for line in lines[li:]):
        raise PLYParseError("extra data after last element", offset=pos)
    return out


def read_ply_elements(path):
    """All elements of a PLY file as numpy structured arrays."""
    data = Path(path).read_bytes()
    fmt, elements, offset = _parse_header(data)
    if fmt == "ascii":
        return _read_ascii(data, offset, elements)
    return _read_binary(data, offset, elements)


def read_ply(path, with_colors=False):
    """Read a PLY point cloud.

    Returns
    -------
    PointCloud
        Labeled if the file has a ``part`` property.
    colors : (N, 3) uint8 ndarray or None
        Only when ``with_colors`` is True.
    """
    data = Path(path).read_bytes()
    fmt, elements, offset = _parse_header(data)
    names = [e[0] for e in elements]
    if "vertex" not in names:
        raise PLYParseError("no vertex element", offset=offset)
    props = dict(elements[names.index("vertex")][2])
    for c in "xyz":
        if c not in props:
            raise PLYParseError(f"vertex element lacks property {c!r}", offset=offset)
        if props[c] not in ("f4", "f8"):
            raise PLYParseError(f"property {c!r} must be float or double", offset=offset)
    if "part" in props and props["part"] != "u1":
        raise PLYParseError("property 'part' must be uchar", offset=offset)
    rec = (_read_ascii if fmt == "ascii" else _read_binary)(data, offset, elements)["vertex"]
    pts = np.stack([rec["x"], rec["y"], rec["z"]], axis=1).astype(np.float64)
    if len(pts) == 0:
        raise PLYParseError("vertex element is empty", offset=offset)
    if not np.all(np.isfinite(pts)):
        raise PLYParseError("non-finite vertex coordinates", offset=offset)
    labels = None
    if "part" in props:
        labels = rec["part"]
        if np.any(labels > 1):
            raise PLYParseError("part labels must be 0 or 1", offset=offset)
    cloud = PointCloud(pts, labels)
    if not with_colors:
        return cloud
    colors = None
    if all(c in props for c in ("red", "green", "blue")):
        colors = np.stack([rec["red"], rec["green"], rec["blue"]], axis=1).astype(np.uint8)
    return cloud, colors


# ---------------------------------------------------------------- JSON

def dump_json(obj, path):
    """Write JSON deterministically (fixed key order, repr floats, newline)."""
    text = json.dumps(obj, indent=2, allow_nan=False) + "\n"
    Path(path).write_text(text, encoding="utf-8")


def load_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON ({exc})") from None


def _deg_to_rad(deg):
    # radians whose degree value prints back as ``deg`` when one exists
    r = math.radians(deg)
    if math.degrees(r) == deg:
        return r
    for direction in (math.inf, -math.inf):
        x = r
        for _ in range(4):
            x = math.nextafter(x, direction)
            if math.degrees(x) == deg:
                return x
    return r


def axis_record(axis, magnitudes=()):
    """AxisRecord dict; revolute magnitudes are written in degrees."""
    mags = [float(m) for m in magnitudes]
    if axis.kind is MotionKind.REVOLUTE:
        mags = [math.degrees(m) for m in mags]
    return {
        "kind": axis.kind.value,
        "direction": [float(x) for x in axis.direction],
        "origin": [float(x) for x in axis.origin],
        "magnitudes": mags,
    }


def _vec3(rec, key):
    v = rec.get(key)
    if (not isinstance(v, list) or len(v) != 3
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
        raise FormatError(f"{key!r} must be a list of 3 numbers")
    arr = np.asarray(v, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise FormatError(f"{key!r} must be finite")
    return arr


def parse_axis_record(rec):
    """Inverse of :func:`axis_record`.

    The direction is re-normalized; a warning is issued when its norm is
    off by more than 1e-3.

    Returns
    -------
    axis : MotionAxis
    magnitudes : ndarray
        Radians for revolute joints.
    """
    if not isinstance(rec, dict):
        raise FormatError("axis record must be an object")
    try:
        kind = MotionKind(rec.get("kind"))
    except ValueError:
        raise FormatError(f"unknown axis kind {rec.get('kind')!r}") from None
    d = _vec3(rec, "direction")
    o = _vec3(rec, "origin")
    norm = float(np.linalg.norm(d))
    if norm == 0:
        raise FormatError("axis direction is zero")
    if abs(norm - 1) > 1e-3:
        warnings.warn(f"axis direction norm {norm:.6g} re-normalized", stacklevel=2)
    if abs(norm - 1) > 1e-12:
        d = d / norm
    mags = rec.get("magnitudes", [])
    if not isinstance(mags, list) or not all(
            isinstance(m, (int, float)) and not isinstance(m, bool) for m in mags):
        raise FormatError("'magnitudes' must be a list of numbers")
    if kind is MotionKind.REVOLUTE:
        mags = [_deg_to_rad(float(m)) for m in mags]
    return MotionAxis(kind, d, o), np.asarray(mags, dtype=np.float64)


def hypothesis_record(hyp):
    rec = {"axis": axis_record(hyp.axis, hyp.magnitudes),
           "residual": float(hyp.residual)}
    if hyp.candidate is not None:
        oi, di, kind = hyp.candidate
        rec["candidate"] = {"origin_index": int(oi), "direction_index": int(di),
                            "kind": kind.value}
    if hyp.frame_residuals is not None:
        rec["frame_residuals"] = [float(x) for x in hyp.frame_residuals]
    return rec


def parse_hypothesis_record(rec):
    from .search import Hypothesis

    axis, mags = parse_axis_record(rec["axis"])
    cand = rec.get("candidate")
    if cand is not None:
        cand = (cand["origin_index"], cand["direction_index"], MotionKind(cand["kind"]))
    fr = rec.get("frame_residuals")
    return Hypothesis(axis=axis, magnitudes=mags, residual=float(rec["residual"]),
                      candidate=cand,
                      frame_residuals=None if fr is None else np.asarray(fr, float))


# ---------------------------------------------------------------- sequences

def save_sequence(directory, seq, gt=None, gt_magnitudes=(), metadata=None,
                  binary=True):
    """Write a sequence as rest/frame PLY files plus ``manifest.json``.

    Returns the manifest path.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_ply(directory / "rest.ply", seq.rest, binary=binary)
    frames = []
    for t, fr in enumerate(seq.frames):
        name = f"frame_{t:03d}.ply"
        write_ply(directory / name, fr.points, binary=binary)
        frames.append(name)
    gt_rec = None
    if gt is not None:
        gt_rec = axis_record(gt, gt_magnitudes)
        dump_json(gt_rec, directory / "gt_axis.json")
    meta = dict(metadata or {})
    meta.setdefault("diagonal", seq.diagonal)
    manifest = {
        "format_version": SEQUENCE_VERSION,
        "object": meta,
        "rest": "rest.ply",
        "frames": frames,
        "ground_truth": gt_rec,
    }
    path = directory / "manifest.json"
    dump_json(manifest, path)
    return path


def load_sequence(path):
    """Load a manifest written by :func:`save_sequence`.

    Returns
    -------
    seq : ObservedSequence
    gt : MotionAxis or None
    gt_magnitudes : ndarray or None
    metadata : dict
    """
    path = Path(path)
    if path.is_dir():
        path = path / "manifest.json"
    if not path.exists():
        raise FileNotFoundError(f"manifest not found: {path}")
    man = load_json(path)
    if not isinstance(man, dict):
        raise FormatError(f"{path}: manifest must be an object")
    if man.get("format_version") != SEQUENCE_VERSION:
        raise FormatError(f"{path}: unsupported format_version {man.get('format_version')!r}")
    root = path.parent
    frames = man.get("frames")
    if not isinstance(frames, list) or not frames:
        raise FormatError(f"{path}: 'frames' must be a non-empty list")
    files = [root / man.get("rest", "")] + [root / f for f in frames]
    for f in files:
        if not f.is_file():
            raise FileNotFoundError(f"referenced file missing: {f}")
    rest = read_ply(files[0])
    if rest.labels is None:
        raise FormatError(f"{files[0]}: rest cloud needs a 'part' property")
    seq = ObservedSequence(rest=rest, frames=[read_ply(f) for f in files[1:]])
    gt = mags = None
    if man.get("ground_truth") is not None:
        gt, mags = parse_axis_record(man["ground_truth"])
    return seq, gt, mags, man.get("object", {})


def find_manifests(suite_dir):
    """Manifests below ``suite_dir`` in sorted order."""
    suite_dir = Path(suite_dir)
    if not suite_dir.is_dir():
        raise FileNotFoundError(f"suite directory not found: {suite_dir}")
    found = sorted(p for p in suite_dir.rglob("manifest.json"))
    return found


# ---------------------------------------------------------------- tables

def write_rows_csv(path, rows, fields):
    """CSV with a header row; ``None`` becomes an empty cell."""
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(fields)
        for r in rows:
            d = r if isinstance(r, dict) else r.to_dict()
            w.writerow(["" if d.get(k) is None else
                        (repr(d[k]) if isinstance(d[k], float) else d[k])
                        for k in fields])


def ensure_parent(path):
    parent = os.path.dirname(os.fspath(path))
    if parent:
        os.makedirs(parent, exist_ok=True)


# ---------------------------------------------------------------- reports

def conventions():
    from .chamfer import CONVENTION
    from .metrics import MAE_CONVENTION, MPE_CONVENTION

    return {"chamfer": CONVENTION, "mae": MAE_CONVENTION, "mpe": MPE_CONVENTION}


def trace_summary(trace):
    return {
        "restart": int(trace.restart),
        "iterations": len(trace.losses),
        "halvings": int(trace.halvings),
        "initial_loss": float(trace.losses[0]),
        "final_loss": float(trace.losses[-1]),
        "restart_residuals": [float(x) for x in trace.restart_losses],
    }


def report_record(results, config, source=None, timings=None):
    """EstimateReport JSON.

    Parameters
    ----------
    results : dict
        Method name to ``{"best": Hypothesis, "ranked": [...]}`` for the
        searcher or ``{"best": Hypothesis, "trace": OptTrace}`` for the
        optimizer.
    config : dict
        Every setting that influenced the run.
    timings : dict, optional
        Wall-clock seconds per method; omitted by default so reports are
        reproducible byte for byte.
    """
    out = {"format_version": REPORT_VERSION, "source": source,
           "conventions": conventions(), "config": config, "methods": {}}
    for method in sorted(results):
        res = results[method]
        rec = {"best": hypothesis_record(res["best"])}
        if "ranked" in res:
            rec["ranked"] = [hypothesis_record(h) for h in res["ranked"]]
        if "trace" in res:
            rec["trace"] = trace_summary(res["trace"])
        out["methods"][method] = rec
    if timings is not None:
        out["timings_s"] = {k: float(v) for k, v in sorted(timings.items())}
    return out


def parse_report(rec):
    """Hypotheses of an EstimateReport: ``{method: {"best": .., "ranked": [..]}}``."""
    if not isinstance(rec, dict) or rec.get("format_version") != REPORT_VERSION:
        raise FormatError("not an estimate report")
    out = {}
    for method, body in rec.get("methods", {}).items():
        entry = {"best": parse_hypothesis_record(body["best"])}
        if "ranked" in body:
            entry["ranked"] = [parse_hypothesis_record(h) for h in body["ranked"]]
        if "trace" in body:
            entry["trace"] = dict(body["trace"])
        out[method] = entry
    return out


def metrics_record(result, extra_config=None):
    """MetricRow table plus per-method means as a JSON-ready dict."""
    from .metrics import MetricRow

    config = dict(result.config)
    config.update(extra_config or {})
    return {
        "format_version": SUITE_VERSION,
        "conventions": conventions(),
        "config": config,
        "fields": list(MetricRow.FIELDS),
        "rows": [r.to_dict() for r in result.rows],
        "means": result.means,
    }


def parse_metrics_record(rec):
    """Rows of a :func:`metrics_record` dict as MetricRow objects."""
    from .metrics import MetricRow

    if not isinstance(rec, dict) or rec.get("format_version") != SUITE_VERSION:
        raise FormatError("not a metrics table")
    rows = []
    for r in rec.get("rows", []):
        unknown = set(r) - set(MetricRow.FIELDS)
        if unknown:
            raise FormatError(f"unknown metric fields {sorted(unknown)}")
        rows.append(MetricRow(**r))
    return rows
