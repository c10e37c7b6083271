"""Line-delimited persistence: scene logs, ground truth, tables, scripts.

One record per line, each a canonically serialized JSON object (sorted keys,
compact separators), so files are streamable, diffable, and byte-stable:
writing what was read reproduces a canonical file exactly.  Named numeric
vectors carry an explicit length field that is validated on read.

Files handled here:

* scene logs: one scene per line, strictly time-ordered
* ground-truth tables: one record per (timestamp, hypothesis id)
* descriptor tables: one labelled vector per line (classifier training data)
* query scripts: ``<timestamp> <query text>`` per line, ``#`` comments allowed
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from .core import (
    ACTIVITIES,
    FrameMeta,
    Hypothesis,
    OrientedBounds,
    Percept,
    RegionOfInterest,
    Scene,
)
from .errors import LogParseError, ValidationError
from .evalkit import SYMBOL_TYPES, GroundTruth


def _canonical(record: dict) -> str:
    return json.dumps(record, sort_keys=True, separators=(",", ":"),
                      allow_nan=False)


def _encode_vector(values: Sequence[float]) -> dict:
    v = [float(x) for x in values]
    return {"n": len(v), "v": v}


def _decode_vector(data, what: str, *, source=None, line=None) -> list[float]:
    if (not isinstance(data, dict) or "n" not in data or "v" not in data
            or not isinstance(data["v"], list)):
        raise LogParseError(f"{what}: expected {{n, v}} vector object",
                            source=source, line=line)
    if data["n"] != len(data["v"]):
        raise LogParseError(
            f"{what}: declared length {data['n']} != actual {len(data['v'])}",
            source=source, line=line)
    try:
        values = [float(x) for x in data["v"]]
    except (TypeError, ValueError):
        raise LogParseError(f"{what}: non-numeric entry", source=source,
                            line=line) from None
    if any(not math.isfinite(x) for x in values):
        raise LogParseError(f"{what}: non-finite entry", source=source,
                            line=line)
    return values


# -- scenes -------------------------------------------------------------------

def scene_to_record(scene: Scene) -> dict:
    hyps = []
    for h in scene.hypotheses:
        roi: dict = {"px": [list(p) for p in sorted(h.roi.pixel_indices)]}
        roi["points"] = (sorted(h.roi.point_indices)
                         if h.roi.point_indices is not None else None)
        if h.roi.bounds_3d is not None:
            b = h.roi.bounds_3d
            roi["bounds"] = {"c": list(b.center), "e": list(b.extents),
                             "q": list(b.quaternion)}
        else:
            roi["bounds"] = None
        record = {
            "id": h.hyp_id,
            "roi": roi,
            "vec": {p.key: _encode_vector(p.vector)
                    for p in h.percepts if p.is_numeric},
            "sym": {p.key: [p.symbol, p.confidence]
                    for p in h.percepts if not p.is_numeric},
            "gt": h.gt_object,
        }
        hyps.append(record)
    return {
        "t": scene.timestamp,
        "activity": scene.activity,
        "ann": dict(sorted(scene.annotations.items())),
        "frames": [{
            "cam": list(f.camera_pose),
            "blur": f.blur_score,
            "pixels": ([list(row) for row in f.pixels]
                       if f.pixels is not None else None),
        } for f in scene.frames],
        "hyps": hyps,
    }


def scene_from_record(data: dict, *, source=None,
                      line: int | None = None) -> Scene:
    def fail(message: str):
        raise LogParseError(message, source=source, line=line)

    if not isinstance(data, dict):
        fail("scene record must be an object")
    for key in ("t", "activity", "frames", "hyps"):
        if key not in data:
            fail(f"scene record missing key {key!r}")
    try:
        frames = []
        for f in data["frames"]:
            cam = f.get("cam")
            if not isinstance(cam, list) or len(cam) != 6:
                fail("frame camera pose must be a list of 6 numbers")
            pixels = f.get("pixels")
            frames.append(FrameMeta(
                camera_pose=tuple(float(x) for x in cam),
                blur_score=f.get("blur"),
                pixels=(tuple(tuple(float(x) for x in row) for row in pixels)
                        if pixels is not None else None)))
        hyps = []
        for h in data["hyps"]:
            roi_data = h.get("roi")
            if not isinstance(roi_data, dict) or "px" not in roi_data:
                fail(f"hypothesis {h.get('id')!r} missing roi.px")
            bounds = None
            if roi_data.get("bounds") is not None:
                b = roi_data["bounds"]
                bounds = OrientedBounds(center=tuple(b["c"]),
                                        extents=tuple(b["e"]),
                                        quaternion=tuple(b["q"]))
            points = roi_data.get("points")
            roi = RegionOfInterest(
                pixel_indices=frozenset(
                    (int(u), int(v)) for u, v in roi_data["px"]),
                point_indices=(frozenset(int(i) for i in points)
                               if points is not None else None),
                bounds_3d=bounds)
            percepts = []
            for key in sorted(h.get("vec", {})):
                values = _decode_vector(h["vec"][key],
                                        f"vector percept {key!r}",
                                        source=source, line=line)
                percepts.append(Percept(key=key, vector=tuple(values)))
            for key in sorted(h.get("sym", {})):
                entry = h["sym"][key]
                if not isinstance(entry, list) or len(entry) != 2:
                    fail(f"symbol percept {key!r} must be [symbol, confidence]")
                percepts.append(Percept(key=key, symbol=entry[0],
                                        confidence=entry[1]))
            hyps.append(Hypothesis(hyp_id=h["id"], roi=roi,
                                   percepts=tuple(percepts),
                                   gt_object=h.get("gt")))
        activity = data["activity"]
        if activity not in ACTIVITIES:
            fail(f"unknown activity {activity!r}")
        return Scene(
            timestamp=float(data["t"]),
            frames=tuple(frames),
            hypotheses=tuple(hyps),
            annotations=dict(data.get("ann", {})),
            activity=activity,
        )
    except LogParseError:
        raise
    except ValidationError as err:
        fail(str(err))
    except (KeyError, TypeError, ValueError) as err:
        fail(f"malformed scene record: {err}")


def dump_scenes(scenes: Iterable[Scene]) -> str:
    return "".join(_canonical(scene_to_record(s)) + "\n" for s in scenes)


def write_scenes(scenes: Iterable[Scene], path: str | Path) -> None:
    Path(path).write_text(dump_scenes(scenes), encoding="utf-8")


def iter_scene_lines(text: str, source=None) -> Iterator[Scene]:
    previous = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as err:
            raise LogParseError(f"invalid JSON: {err.msg}", source=source,
                                line=lineno) from None
        scene = scene_from_record(data, source=source, line=lineno)
        if previous is not None and scene.timestamp <= previous:
            raise LogParseError(
                f"scene at t={scene.timestamp} not after t={previous}",
                source=source, line=lineno)
        previous = scene.timestamp
        yield scene


def read_scenes(path: str | Path) -> list[Scene]:
    text = Path(path).read_text(encoding="utf-8")
    return list(iter_scene_lines(text, source=str(path)))


def loads_scenes(text: str) -> list[Scene]:
    return list(iter_scene_lines(text))


# -- ground truth -------------------------------------------------------------

def dump_ground_truth(gt: GroundTruth) -> str:
    lines = []
    for (ts, hyp_id), labels in sorted(gt.items()):
        record = {"t": ts, "hyp": hyp_id}
        record.update({k: labels[k] for k in SYMBOL_TYPES if k in labels})
        lines.append(_canonical(record))
    return "".join(line + "\n" for line in lines)


def write_ground_truth(gt: GroundTruth, path: str | Path) -> None:
    Path(path).write_text(dump_ground_truth(gt), encoding="utf-8")


def read_ground_truth(path: str | Path) -> GroundTruth:
    records: dict[tuple[float, str], dict[str, str]] = {}
    source = str(path)
    for lineno, raw in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as err:
            raise LogParseError(f"invalid JSON: {err.msg}", source=source,
                                line=lineno) from None
        if not isinstance(data, dict) or "t" not in data or "hyp" not in data:
            raise LogParseError("ground truth record needs 't' and 'hyp'",
                                source=source, line=lineno)
        labels = {k: str(v) for k, v in data.items()
                  if k in SYMBOL_TYPES}
        key = (float(data["t"]), str(data["hyp"]))
        if key in records:
            raise LogParseError(
                f"duplicate ground truth for t={key[0]} hyp={key[1]!r}",
                source=source, line=lineno)
        records[key] = labels
    return GroundTruth(records)


# -- descriptor tables ---------------------------------------------------------

def dump_descriptor_table(
        rows: Iterable[tuple[Sequence[float], str]]) -> str:
    return "".join(
        _canonical({"label": label, "descriptor": _encode_vector(vector)})
        + "\n"
        for vector, label in rows)


def write_descriptor_table(rows: Iterable[tuple[Sequence[float], str]],
                           path: str | Path) -> None:
    Path(path).write_text(dump_descriptor_table(rows), encoding="utf-8")


def read_descriptor_table(
        path: str | Path) -> list[tuple[tuple[float, ...], str]]:
    rows: list[tuple[tuple[float, ...], str]] = []
    source = str(path)
    for lineno, raw in enumerate(
            Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        stripped = raw.strip()
        if not stripped:
            continue
        try:
            data = json.loads(stripped)
        except json.JSONDecodeError as err:
            raise LogParseError(f"invalid JSON: {err.msg}", source=source,
                                line=lineno) from None
        if not isinstance(data, dict) or "label" not in data \
                or "descriptor" not in data:
            raise LogParseError(
                "descriptor row needs 'label' and 'descriptor'",
                source=source, line=lineno)
        vector = _decode_vector(data["descriptor"], "descriptor",
                                source=source, line=lineno)
        rows.append((tuple(vector), str(data["label"])))
    return rows


# -- query scripts --------------------------------------------------------------

def parse_query_script(text: str,
                       source=None) -> list[tuple[float, str]]:
    """Parse ``<timestamp> <query text>`` lines; '#' starts a comment line."""
    entries: list[tuple[float, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split(None, 1)
        if len(parts) != 2:
            raise LogParseError(
                "script line needs '<timestamp> <query>'",
                source=source, line=lineno)
        try:
            ts = float(parts[0])
        except ValueError:
            raise LogParseError(f"invalid timestamp {parts[0]!r}",
                                source=source, line=lineno) from None
        if not math.isfinite(ts):
            raise LogParseError(f"non-finite timestamp {parts[0]!r}",
                                source=source, line=lineno)
        entries.append((ts, parts[1]))
    if any(b < a for (a, _), (b, _) in zip(entries, entries[1:])):
        raise LogParseError("script timestamps must be non-decreasing",
                            source=source)
    return entries


def read_query_script(path: str | Path) -> list[tuple[float, str]]:
    return parse_query_script(Path(path).read_text(encoding="utf-8"),
                              source=str(path))
