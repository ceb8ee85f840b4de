"""Ground-truth object database: build, persist, load.

A database holds every labeled object cropped out of a set of frames,
with its points re-expressed in box-local coordinates so the composer can
re-pose the object anywhere.  Objects that happen to contain no points
are kept (dropping them would skew group sizes) but flagged and never
sampled.

External formats
----------------
Frame manifest   one JSON object per line:
                 {"frame_id": ..., "point_file": ...,
                  "labels": [{"cx","cy","cz","l","w","h","heading","class"[, "track"]}]}
Point file       headerless little-endian float32 quads (x, y, z, intensity)
Database file    magic ``COMGTDB1``, u32 version, u64 body length, body,
                 trailing CRC-64/XZ of everything between magic and
                 checksum.  All floats inside are little-endian float32;
                 coordinates are quantized to float32 at build time so a
                 save/load round trip is bit-exact.
"""

from __future__ import annotations

import json
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import (
    Box3D,
    ObjectFeatures,
    PEDESTRIAN_VOXELS,
    VEHICLE_VOXELS,
    VoxelScheme,
    normalize_heading,
    occupancy_from_local,
    feature_angle,
    feature_distance,
    feature_size,
    point_in_box,
    to_local,
)

CLASS_NAMES = ("vehicle", "pedestrian", "cyclist")

VOXEL_SCHEMES = {
    "vehicle": VEHICLE_VOXELS,
    "pedestrian": PEDESTRIAN_VOXELS,
    "cyclist": PEDESTRIAN_VOXELS,
}

MAGIC = b"COMGTDB1"
VERSION = 1


class DatabaseError(Exception):
    """Base class for database ingestion/persistence failures."""


class DatabaseFormatError(DatabaseError):
    """Bad magic bytes or a structurally invalid payload."""


class DatabaseVersionError(DatabaseError):
    """Layout version not understood by this reader."""


class DatabaseTruncatedError(DatabaseError):
    """File shorter than its declared length."""


class DatabaseChecksumError(DatabaseError):
    """Payload checksum mismatch."""


class ValidationError(DatabaseError):
    """Input data violates a contract (e.g. duplicate frame ids)."""


# CRC-64/XZ (reflected poly 0xC96C5795D7870F42, init/xorout all-ones).
_CRC64_POLY = 0xC96C5795D7870F42


def _crc64_table():
    table = []
    for byte in range(256):
        crc = byte
        for _ in range(8):
            crc = (crc >> 1) ^ _CRC64_POLY if crc & 1 else crc >> 1
        table.append(crc)
    return table


_CRC64_TABLE = _crc64_table()


def crc64(data: bytes) -> int:
    crc = 0xFFFFFFFFFFFFFFFF
    for b in data:
        crc = _CRC64_TABLE[(crc ^ b) & 0xFF] ^ (crc >> 8)
    return crc ^ 0xFFFFFFFFFFFFFFFF


def _f32(x: float) -> float:
    return float(np.float32(x))


def quantize_box(box: Box3D) -> Box3D:
    """Snap box fields to float32 values (heading re-normalized to a fixed point).

    Needed so that serialized (float32) boxes reload bit-identically.
    """
    heading = box.heading
    for _ in range(3):
        q = _f32(normalize_heading(heading))
        if q == heading:
            break
        heading = q
    dims = [_f32(v) for v in (box.l, box.w, box.h)]
    if min(dims) <= 0.0:
        raise ValidationError(f"box dims collapse to zero in float32: {box}")
    return Box3D(_f32(box.cx), _f32(box.cy), _f32(box.cz), *dims, heading)


@dataclass(frozen=True)
class Label:
    """One annotation: oriented box, class name, optional track id."""

    box: Box3D
    class_name: str
    track_id: str = ""

    def __post_init__(self):
        if self.class_name not in CLASS_NAMES:
            raise ValidationError(f"unknown class: {self.class_name!r}")


@dataclass
class Frame:
    """One point-cloud frame: id, (N, 4) float32 points, labels."""

    frame_id: str
    points: np.ndarray
    labels: list


@dataclass
class GtObject:
    """A cropped object: label, box-local float32 points, grouping features."""

    object_id: int
    frame_id: str
    label: Label
    points: np.ndarray  # (M, 4) float32, box-local xyz + intensity
    features: ObjectFeatures

    @property
    def num_points(self) -> int:
        return len(self.points)

    @property
    def is_empty(self) -> bool:
        return len(self.points) == 0


@dataclass
class GtDatabase:
    """All cropped objects, partitioned by class; ids are dense and unique."""

    objects: list = field(default_factory=list)
    provenance: str = ""
    version: int = VERSION

    @property
    def by_class(self) -> dict:
        parts = {c: [] for c in CLASS_NAMES}
        for obj in self.objects:
            parts[obj.label.class_name].append(obj)
        return parts

    def get(self, object_id: int) -> GtObject:
        obj = self.objects[object_id]
        if obj.object_id != object_id:
            raise KeyError(f"object ids not dense: {object_id}")
        return obj

    def __len__(self) -> int:
        return len(self.objects)


def recompute_features(obj: GtObject, schemes: dict = VOXEL_SCHEMES) -> ObjectFeatures:
    """Features re-derived from the stored representation (float32-rounded).

    Matches the stored features exactly: the same float32 local points and
    float32 box fields go through the same kernels and rounding.
    """
    box = obj.label.box
    scheme = schemes[obj.label.class_name]
    return ObjectFeatures(
        distance=_f32(feature_distance(box)),
        size=_f32(feature_size(box)),
        angle=_f32(feature_angle(box)),
        occupancy=_f32(occupancy_from_local(obj.points, box, scheme)),
    )


def extract_objects(frame: Frame, schemes: dict = VOXEL_SCHEMES) -> list:
    """Crop one GtObject per label; zero-point objects are kept.

    Points are stored box-local and quantized to float32; features are
    computed from exactly that stored representation.
    """
    out = []
    pts = np.asarray(frame.points, dtype=np.float32).reshape(-1, 4)
    for i, label in enumerate(frame.labels):
        box = quantize_box(label.box)
        qlabel = Label(box=box, class_name=label.class_name, track_id=label.track_id)
        if len(pts):
            mask = point_in_box(pts, box)
            local = to_local(pts[mask], box).astype(np.float32)
        else:
            local = np.empty((0, 4), dtype=np.float32)
        obj = GtObject(
            object_id=i,
            frame_id=frame.frame_id,
            label=qlabel,
            points=local,
            features=None,
        )
        obj.features = recompute_features(obj, schemes)
        out.append(obj)
    return out


def build_database(
    frames,
    provenance: str = "",
    schemes: dict = VOXEL_SCHEMES,
    workers: int = 1,
) -> GtDatabase:
    """Extract objects from a stream of frames; ids follow frame then label order.

    Extraction is pure per frame, so it fans out over a thread pool; the
    merge happens in input order regardless of completion order, which
    keeps the result identical for any worker count.
    """
    frames = list(frames)
    seen = set()
    for f in frames:
        if f.frame_id in seen:
            raise ValidationError(f"duplicate frame_id: {f.frame_id!r}")
        seen.add(f.frame_id)
    if workers > 1 and len(frames) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_frame = list(pool.map(lambda f: extract_objects(f, schemes), frames))
    else:
        per_frame = [extract_objects(f, schemes) for f in frames]
    db = GtDatabase(provenance=provenance)
    next_id = 0
    for objs in per_frame:
        for obj in objs:
            obj.object_id = next_id
            db.objects.append(obj)
            next_id += 1
    return db


# --- point files and manifests -------------------------------------------


def read_point_file(path) -> np.ndarray:
    """Read headerless float32 quads; returns (N, 4)."""
    raw = np.fromfile(path, dtype="<f4")
    if raw.size % 4:
        raise ValidationError(f"point file length not a multiple of 16 bytes: {path}")
    return raw.reshape(-1, 4)


def write_point_file(points: np.ndarray, path) -> None:
    np.asarray(points, dtype="<f4").reshape(-1, 4).tofile(path)


def _label_from_json(rec: dict) -> Label:
    box = Box3D(
        float(rec["cx"]), float(rec["cy"]), float(rec["cz"]),
        float(rec["l"]), float(rec["w"]), float(rec["h"]),
        float(rec["heading"]),
    )
    return Label(box=box, class_name=rec["class"], track_id=rec.get("track", ""))


def _label_to_json(label: Label) -> dict:
    b = label.box
    rec = {
        "cx": b.cx, "cy": b.cy, "cz": b.cz,
        "l": b.l, "w": b.w, "h": b.h,
        "heading": b.heading, "class": label.class_name,
    }
    if label.track_id:
        rec["track"] = label.track_id
    return rec


def read_manifest(path):
    """Iterate frames from a JSON-lines manifest; point files resolve
    relative to the manifest's directory."""
    base = Path(path).parent
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise ValidationError(f"{path}:{lineno}: bad manifest line: {e}") from e
            point_path = Path(rec["point_file"])
            if not point_path.is_absolute():
                point_path = base / point_path
            yield Frame(
                frame_id=str(rec["frame_id"]),
                points=read_point_file(point_path),
                labels=[_label_from_json(r) for r in rec["labels"]],
            )


def write_manifest(frames, path, point_dir=None) -> None:
    """Write frames as manifest + point files (one file per frame)."""
    path = Path(path)
    point_dir = Path(point_dir) if point_dir else path.parent
    point_dir.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for frame in frames:
            point_file = point_dir / f"{frame.frame_id}.bin"
            write_point_file(frame.points, point_file)
            rec = {
                "frame_id": frame.frame_id,
                "point_file": str(point_file.relative_to(path.parent))
                if point_file.is_relative_to(path.parent)
                else str(point_file),
                "labels": [_label_to_json(l) for l in frame.labels],
            }
            fh.write(json.dumps(rec) + "\n")


# --- binary database persistence -------------------------------------------


def _pack_str(s: str) -> bytes:
    raw = s.encode("utf-8")
    return struct.pack("<I", len(raw)) + raw


class _Reader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.buf):
            raise DatabaseTruncatedError(
                f"payload ends at byte {len(self.buf)}, needed {self.pos + n}"
            )
        out = self.buf[self.pos : self.pos + n]
        self.pos += n
        return out

    def u32(self) -> int:
        return struct.unpack("<I", self.take(4))[0]

    def u64(self) -> int:
        return struct.unpack("<Q", self.take(8))[0]

    def string(self) -> str:
        return self.take(self.u32()).decode("utf-8")

    def f32s(self, n: int) -> np.ndarray:
        return np.frombuffer(self.take(4 * n), dtype="<f4")


def save_database(db: GtDatabase, path) -> None:
    """Serialize; classes in canonical order so equal databases give equal bytes."""
    body = bytearray()
    body += _pack_str(db.provenance)
    parts = db.by_class
    body += struct.pack("<I", len(CLASS_NAMES))
    for cls in CLASS_NAMES:
        body += _pack_str(cls)
        objs = parts[cls]
        body += struct.pack("<I", len(objs))
        for obj in objs:
            b = obj.label.box
            body += struct.pack("<Q", obj.object_id)
            body += _pack_str(obj.frame_id)
            body += _pack_str(obj.label.track_id)
            body += np.array(
                [b.cx, b.cy, b.cz, b.l, b.w, b.h, b.heading], dtype="<f4"
            ).tobytes()
            body += obj.features.as_array().astype("<f4").tobytes()
            body += struct.pack("<I", obj.num_points)
            body += obj.points.astype("<f4").tobytes()
    payload = struct.pack("<I", VERSION) + struct.pack("<Q", len(body)) + bytes(body)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(payload)
        fh.write(struct.pack("<Q", crc64(payload)))


def load_database(path) -> GtDatabase:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < len(MAGIC) + 12 or blob[: len(MAGIC)] != MAGIC:
        raise DatabaseFormatError(f"not a COMGTDB1 file: {path}")
    version, body_len = struct.unpack("<IQ", blob[8:20])
    if version != VERSION:
        raise DatabaseVersionError(f"unsupported version {version} (expected {VERSION})")
    expected = len(MAGIC) + 12 + body_len + 8
    if len(blob) < expected:
        raise DatabaseTruncatedError(f"file is {len(blob)} bytes, expected {expected}")
    if len(blob) > expected:
        raise DatabaseFormatError(f"{len(blob) - expected} trailing bytes after checksum")
    stored_crc = struct.unpack("<Q", blob[-8:])[0]
    payload = blob[len(MAGIC) : -8]
    if crc64(payload) != stored_crc:
        raise DatabaseChecksumError("payload checksum mismatch")
    r = _Reader(blob[20:-8])
    db = GtDatabase(provenance=r.string(), version=version)
    staged = []
    for _ in range(r.u32()):
        cls = r.string()
        if cls not in CLASS_NAMES:
            raise DatabaseFormatError(f"unknown class table: {cls!r}")
        for _ in range(r.u32()):
            object_id = r.u64()
            frame_id = r.string()
            track_id = r.string()
            bx = r.f32s(7).astype(np.float64)
            label = Label(
                box=Box3D(*bx), class_name=cls, track_id=track_id
            )
            feats = r.f32s(4).astype(np.float64)
            n = r.u32()
            pts = r.f32s(4 * n).reshape(n, 4).copy()
            staged.append(
                GtObject(
                    object_id=int(object_id),
                    frame_id=frame_id,
                    label=label,
                    points=pts,
                    features=ObjectFeatures(*feats),
                )
            )
    if r.pos != len(r.buf):
        raise DatabaseFormatError(f"{len(r.buf) - r.pos} unparsed payload bytes")
    staged.sort(key=lambda o: o.object_id)
    for i, obj in enumerate(staged):
        if obj.object_id != i:
            raise DatabaseFormatError("object ids are not dense")
    db.objects = staged
    return db
