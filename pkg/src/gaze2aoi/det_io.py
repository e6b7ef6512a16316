"""Detections interchange CSV and class-manifest I/O.

The detections CSV decouples the engine from any particular detector.  It is
UTF-8, LF, with the exact header
``frame,track_id,class_id,class_name,x_min,y_min,x_max,y_max,confidence``.
Canonical serialization sorts rows by (frame, track_id), formats coordinates
with 2 decimals and confidence with 4 (round-half-even), so golden-file
comparisons are byte-exact.

A ``DetectionSet`` keeps its rows in column arrays; the list of ``Detection``
rows is materialised lazily.  Large sessions (millions of rows) stay fast
because association and metrics work on the columns directly.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateClassId,
    DuplicateClassName,
    DuplicateTrackInFrame,
    InvertedBox,
    MalformedRow,
)
from .gaze_io import VideoMeta, load_video_meta

DETECTIONS_CSV_HEADER = [
    "frame",
    "track_id",
    "class_id",
    "class_name",
    "x_min",
    "y_min",
    "x_max",
    "y_max",
    "confidence",
]

MANIFEST_CSV_HEADER = ["class_id", "class_name"]


@dataclass(frozen=True)
class Detection:
    """One bounding box: a track's presence in a single frame."""

    frame_no: int
    track_id: int
    class_id: int
    class_name: str
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    confidence: float

    @property
    def area(self) -> float:
        return (self.x_max - self.x_min) * (self.y_max - self.y_min)


@dataclass(frozen=True)
class ClassManifest:
    """The detector's class vocabulary; ids and names are both unique."""

    entries: tuple[tuple[int, str], ...]
    source: str = ""

    @property
    def ids(self) -> frozenset[int]:
        return frozenset(cid for cid, _ in self.entries)

    def name_of(self, class_id: int) -> str:
        for cid, name in self.entries:
            if cid == class_id:
                return name
        raise KeyError(class_id)

    def id_of(self, class_name: str) -> int:
        for cid, name in self.entries:
            if name == class_name:
                return cid
        raise KeyError(class_name)


class DetectionSet:
    """Sorted per-frame detections plus the video they belong to.

    Column access (``frames``, ``track_ids``, ``boxes`` ...) is the fast
    path; ``detections`` materialises row objects on first use.
    """

    def __init__(
        self,
        frames: np.ndarray,
        track_ids: np.ndarray,
        class_ids: np.ndarray,
        boxes: np.ndarray,
        confidences: np.ndarray,
        class_names: dict[int, str],
        video_meta: VideoMeta | None = None,
        class_filter: frozenset[int] = frozenset(),
    ):
        self.frames = np.asarray(frames, dtype=np.int64)
        self.track_ids = np.asarray(track_ids, dtype=np.int64)
        self.class_ids = np.asarray(class_ids, dtype=np.int64)
        self.boxes = np.asarray(boxes, dtype=np.float64).reshape(-1, 4)
        self.confidences = np.asarray(confidences, dtype=np.float64)
        self.class_names = dict(class_names)
        self.video_meta = video_meta
        self.class_filter = frozenset(class_filter)
        self._rows: list[Detection] | None = None
        self._sort()

    def _sort(self) -> None:
        order = np.lexsort((self.track_ids, self.frames))
        if not np.all(order[:-1] < order[1:]):
            self.frames = self.frames[order]
            self.track_ids = self.track_ids[order]
            self.class_ids = self.class_ids[order]
            self.boxes = self.boxes[order]
            self.confidences = self.confidences[order]

    @classmethod
    def from_rows(
        cls,
        rows: list[Detection],
        video_meta: VideoMeta | None = None,
        class_filter: frozenset[int] = frozenset(),
    ) -> "DetectionSet":
        names: dict[int, str] = {}
        for r in rows:
            names.setdefault(r.class_id, r.class_name)
        return cls(
            frames=np.array([r.frame_no for r in rows], dtype=np.int64),
            track_ids=np.array([r.track_id for r in rows], dtype=np.int64),
            class_ids=np.array([r.class_id for r in rows], dtype=np.int64),
            boxes=np.array(
                [[r.x_min, r.y_min, r.x_max, r.y_max] for r in rows], dtype=np.float64
            ).reshape(-1, 4),
            confidences=np.array([r.confidence for r in rows], dtype=np.float64),
            class_names=names,
            video_meta=video_meta,
            class_filter=class_filter,
        )

    @classmethod
    def empty(cls, video_meta: VideoMeta | None = None) -> "DetectionSet":
        return cls.from_rows([], video_meta=video_meta)

    def __len__(self) -> int:
        return int(self.frames.shape[0])

    @property
    def detections(self) -> list[Detection]:
        if self._rows is None:
            names = self.class_names
            self._rows = [
                Detection(
                    frame_no=int(self.frames[i]),
                    track_id=int(self.track_ids[i]),
                    class_id=int(self.class_ids[i]),
                    class_name=names[int(self.class_ids[i])],
                    x_min=float(self.boxes[i, 0]),
                    y_min=float(self.boxes[i, 1]),
                    x_max=float(self.boxes[i, 2]),
                    y_max=float(self.boxes[i, 3]),
                    confidence=float(self.confidences[i]),
                )
                for i in range(len(self))
            ]
        return self._rows

    def __iter__(self):
        return iter(self.detections)

    def __eq__(self, other) -> bool:
        if not isinstance(other, DetectionSet):
            return NotImplemented
        return (
            np.array_equal(self.frames, other.frames)
            and np.array_equal(self.track_ids, other.track_ids)
            and np.array_equal(self.class_ids, other.class_ids)
            and np.array_equal(self.boxes, other.boxes)
            and np.array_equal(self.confidences, other.confidences)
            and self.class_names == other.class_names
        )

    def frame_slice(self, frame_no: int) -> slice:
        """Index range of rows in ``frame_no`` (rows are frame-sorted)."""
        lo = int(np.searchsorted(self.frames, frame_no, side="left"))
        hi = int(np.searchsorted(self.frames, frame_no, side="right"))
        return slice(lo, hi)

    def track_list(self) -> list[int]:
        return sorted(int(t) for t in np.unique(self.track_ids))

    def class_name_of_track(self, track_id: int) -> str:
        idx = np.nonzero(self.track_ids == track_id)[0]
        if idx.size == 0:
            raise KeyError(track_id)
        return self.class_names[int(self.class_ids[idx[0]])]

    def restrict_to_frames(self, frames: set[int] | list[int]) -> "DetectionSet":
        """Subset containing only rows whose frame is in ``frames``."""
        wanted = np.isin(self.frames, np.fromiter(frames, dtype=np.int64, count=len(frames)))
        return DetectionSet(
            frames=self.frames[wanted],
            track_ids=self.track_ids[wanted],
            class_ids=self.class_ids[wanted],
            boxes=self.boxes[wanted],
            confidences=self.confidences[wanted],
            class_names=self.class_names,
            video_meta=self.video_meta,
            class_filter=self.class_filter,
        )


# ------------------------------------------------------------------ parsing


def _parse_int(text: str, row: int, what: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise MalformedRow(row, f"{what} is not an integer: {text!r}") from None


def _parse_float(text: str, row: int, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise MalformedRow(row, f"{what} is not a number: {text!r}") from None


def parse_detections_csv(data: bytes, video_meta: VideoMeta | None = None) -> DetectionSet:
    """Parse and validate the detections interchange CSV.

    Rejects duplicate (frame, track) rows and inverted boxes.  ``video_meta``
    is attached when supplied (the CSV itself carries no video shape).
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedRow(0, f"not valid UTF-8: {exc}") from exc

    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRow(0, "detections CSV is empty (missing header)") from None
    if header != DETECTIONS_CSV_HEADER:
        raise MalformedRow(1, f"bad header {header!r}")

    frames: list[int] = []
    tracks: list[int] = []
    class_ids: list[int] = []
    boxes: list[tuple[float, float, float, float]] = []
    confs: list[float] = []
    names: dict[int, str] = {}
    seen: set[tuple[int, int]] = set()

    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 9:
            raise MalformedRow(lineno, f"expected 9 fields, got {len(row)}")
        frame = _parse_int(row[0], lineno, "frame")
        track = _parse_int(row[1], lineno, "track_id")
        class_id = _parse_int(row[2], lineno, "class_id")
        if frame < 0 or track < 0 or class_id < 0:
            raise MalformedRow(lineno, "frame/track_id/class_id must be non-negative")
        name = row[3]
        x0 = _parse_float(row[4], lineno, "x_min")
        y0 = _parse_float(row[5], lineno, "y_min")
        x1 = _parse_float(row[6], lineno, "x_max")
        y1 = _parse_float(row[7], lineno, "y_max")
        conf = _parse_float(row[8], lineno, "confidence")
        if x0 > x1 or y0 > y1:
            raise InvertedBox(f"row {lineno}: box ({x0},{y0},{x1},{y1}) is inverted")
        if not 0.0 <= conf <= 1.0:
            raise MalformedRow(lineno, f"confidence {conf} outside [0,1]")
        key = (frame, track)
        if key in seen:
            raise DuplicateTrackInFrame(f"row {lineno}: duplicate (frame={frame}, track={track})")
        seen.add(key)
        if class_id in names and names[class_id] != name:
            raise MalformedRow(lineno, f"class_id {class_id} maps to two names")
        names.setdefault(class_id, name)

        frames.append(frame)
        tracks.append(track)
        class_ids.append(class_id)
        boxes.append((x0, y0, x1, y1))
        confs.append(conf)

    return DetectionSet(
        frames=np.array(frames, dtype=np.int64),
        track_ids=np.array(tracks, dtype=np.int64),
        class_ids=np.array(class_ids, dtype=np.int64),
        boxes=np.array(boxes, dtype=np.float64).reshape(-1, 4),
        confidences=np.array(confs, dtype=np.float64),
        class_names=names,
        video_meta=video_meta,
    )


def write_detections_csv(detection_set: DetectionSet) -> bytes:
    """Canonical serialization: sorted rows, 2dp coordinates, 4dp confidence."""
    out = io.StringIO(newline="")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(DETECTIONS_CSV_HEADER)
    names = detection_set.class_names
    for i in range(len(detection_set)):
        writer.writerow(
            [
                int(detection_set.frames[i]),
                int(detection_set.track_ids[i]),
                int(detection_set.class_ids[i]),
                names[int(detection_set.class_ids[i])],
                format(detection_set.boxes[i, 0], ".2f"),
                format(detection_set.boxes[i, 1], ".2f"),
                format(detection_set.boxes[i, 2], ".2f"),
                format(detection_set.boxes[i, 3], ".2f"),
                format(detection_set.confidences[i], ".4f"),
            ]
        )
    return out.getvalue().encode("utf-8")


def canonicalize(detection_set: DetectionSet) -> DetectionSet:
    """Quantize to the on-disk precision (what a write/parse cycle yields)."""
    out = parse_detections_csv(write_detections_csv(detection_set))
    out.video_meta = detection_set.video_meta
    out.class_filter = detection_set.class_filter
    return out


def load_detections(path: str | Path) -> DetectionSet:
    """Read a detections CSV; picks up ``<path>.meta.json`` when present."""
    path = Path(path)
    meta = None
    sidecar = Path(str(path) + ".meta.json")
    if sidecar.exists():
        meta = load_video_meta(sidecar)
    return parse_detections_csv(path.read_bytes(), video_meta=meta)


def save_detections(detection_set: DetectionSet, path: str | Path) -> None:
    """Write the CSV plus the ``.meta.json`` sidecar when meta is known."""
    path = Path(path)
    path.write_bytes(write_detections_csv(detection_set))
    if detection_set.video_meta is not None:
        Path(str(path) + ".meta.json").write_text(
            detection_set.video_meta.to_json(), encoding="utf-8"
        )


# ----------------------------------------------------------- class manifest


def parse_class_manifest(data: bytes, source: str = "") -> ClassManifest:
    """Parse ``class_id,class_name`` rows; ids and names must be unique."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedRow(0, f"not valid UTF-8: {exc}") from exc

    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRow(0, "class manifest is empty (missing header)") from None
    if header != MANIFEST_CSV_HEADER:
        raise MalformedRow(1, f"bad header {header!r}")

    entries: list[tuple[int, str]] = []
    ids: set[int] = set()
    names: set[str] = set()
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 2:
            raise MalformedRow(lineno, f"expected 2 fields, got {len(row)}")
        cid = _parse_int(row[0], lineno, "class_id")
        name = row[1]
        if cid in ids:
            raise DuplicateClassId(f"row {lineno}: class_id {cid} repeated")
        if name in names:
            raise DuplicateClassName(f"row {lineno}: class_name {name!r} repeated")
        ids.add(cid)
        names.add(name)
        entries.append((cid, name))

    return ClassManifest(entries=tuple(entries), source=source)


def write_class_manifest(manifest: ClassManifest) -> bytes:
    out = io.StringIO(newline="")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(MANIFEST_CSV_HEADER)
    for cid, name in manifest.entries:
        writer.writerow([cid, name])
    return out.getvalue().encode("utf-8")
