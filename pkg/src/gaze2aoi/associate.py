"""Join gaze and detections on the frame timeline.

For every detection row (frame, track) two flags are derived:

* ``gazed``   - some valid gaze sample falls in the frame's time window and
  inside the track's box on that frame;
* ``fixated`` - some fixation overlaps the frame's time window and its
  centroid lies inside the box.

Containment is boundary-inclusive.  Rows exist only where a detection
exists, so ``gazed`` and ``fixated`` each imply ``detected``.

Fixations are additionally resolved to a single target each (for the
transition sequence): at the fixation's midpoint frame the smallest
containing box wins, ties broken by lowest track id, and ``OUTSIDE`` when no
box contains the centroid.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Union

import numpy as np

from .det_io import DetectionSet
from .errors import FrameOutOfRange, MalformedRow
from .gaze_io import GazeRecording, VideoMeta, time_to_frame

# Distinguished fixation target for "no AOI contains the centroid".
OUTSIDE = "OUTSIDE"

Target = Union[int, str]

ASSOCIATIONS_CSV_HEADER = [
    "frame",
    "track_id",
    "class_name",
    "detected",
    "gazed",
    "fixated",
    "label",
]


@dataclass(frozen=True)
class FrameAssociation:
    """Tri-state flags for one (frame, track) pair; detected is always true."""

    frame_no: int
    track_id: int
    detected: bool
    gazed: bool
    fixated: bool


@dataclass(frozen=True)
class FixationAssignment:
    """The single AOI (or OUTSIDE) a fixation is attributed to."""

    fixation_id: int
    target: Target


class AssociationTable:
    """Column-oriented sequence of FrameAssociation rows.

    Rows keep the detection order: sorted by (frame_no, track_id).  The
    columns are the fast path for metrics; indexing/iteration materialises
    row objects for contract-level consumers.
    """

    def __init__(self, frames: np.ndarray, track_ids: np.ndarray,
                 gazed: np.ndarray, fixated: np.ndarray):
        self.frames = np.asarray(frames, dtype=np.int64)
        self.track_ids = np.asarray(track_ids, dtype=np.int64)
        self.gazed = np.asarray(gazed, dtype=bool)
        self.fixated = np.asarray(fixated, dtype=bool)

    @classmethod
    def from_rows(cls, rows: Iterable[FrameAssociation]) -> "AssociationTable":
        rows = list(rows)
        return cls(
            frames=np.array([r.frame_no for r in rows], dtype=np.int64),
            track_ids=np.array([r.track_id for r in rows], dtype=np.int64),
            gazed=np.array([r.gazed for r in rows], dtype=bool),
            fixated=np.array([r.fixated for r in rows], dtype=bool),
        )

    @classmethod
    def coerce(cls, associations) -> "AssociationTable":
        if isinstance(associations, cls):
            return associations
        return cls.from_rows(associations)

    def __len__(self) -> int:
        return int(self.frames.shape[0])

    def __getitem__(self, i: int) -> FrameAssociation:
        return FrameAssociation(
            frame_no=int(self.frames[i]),
            track_id=int(self.track_ids[i]),
            detected=True,
            gazed=bool(self.gazed[i]),
            fixated=bool(self.fixated[i]),
        )

    def __iter__(self) -> Iterator[FrameAssociation]:
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, AssociationTable):
            return NotImplemented
        return (
            np.array_equal(self.frames, other.frames)
            and np.array_equal(self.track_ids, other.track_ids)
            and np.array_equal(self.gazed, other.gazed)
            and np.array_equal(self.fixated, other.fixated)
        )

    def frame_slice(self, frame_no: int) -> slice:
        lo = int(np.searchsorted(self.frames, frame_no, side="left"))
        hi = int(np.searchsorted(self.frames, frame_no, side="right"))
        return slice(lo, hi)


def hit_test(px: float, py: float, box: tuple[float, float, float, float]) -> bool:
    """Boundary-inclusive point-in-box test."""
    x_min, y_min, x_max, y_max = box
    return x_min <= px <= x_max and y_min <= py <= y_max


def associate_frames(
    recording: GazeRecording,
    detection_set: DetectionSet,
    video_meta: VideoMeta,
) -> AssociationTable:
    """Compute the tri-state flags for every detection row.

    Raises FrameOutOfRange if a detection references a frame beyond the
    video.  Output row order equals detection row order.
    """
    det_frames = detection_set.frames
    n = det_frames.shape[0]
    if n and int(det_frames[-1]) >= video_meta.frame_count:
        raise FrameOutOfRange(
            f"detection frame {int(det_frames[-1])} >= frame_count {video_meta.frame_count}"
        )
    gazed = np.zeros(n, dtype=bool)
    fixated = np.zeros(n, dtype=bool)
    if n == 0:
        return AssociationTable(det_frames, detection_set.track_ids, gazed, fixated)

    boxes = detection_set.boxes
    fps = video_meta.fps

    valid = [s for s in recording.samples if s.valid]
    if valid:
        ts = np.array([s.timestamp_ms for s in valid], dtype=np.float64)
        sx = np.array([s.x_px for s in valid], dtype=np.float64)
        sy = np.array([s.y_px for s in valid], dtype=np.float64)
        sframe = np.floor(ts * fps / 1000.0).astype(np.int64)
        order = np.argsort(sframe, kind="stable")
        sframe = sframe[order]
        sx = sx[order]
        sy = sy[order]

        start = np.searchsorted(sframe, det_frames, side="left")
        end = np.searchsorted(sframe, det_frames, side="right")
        lengths = end - start
        total = int(lengths.sum())
        if total:
            pair_det = np.repeat(np.arange(n, dtype=np.int64), lengths)
            offsets = np.arange(total, dtype=np.int64) - np.repeat(
                np.cumsum(lengths) - lengths, lengths
            )
            pair_smp = np.repeat(start, lengths) + offsets
            px = sx[pair_smp]
            py = sy[pair_smp]
            hits = (
                (boxes[pair_det, 0] <= px)
                & (px <= boxes[pair_det, 2])
                & (boxes[pair_det, 1] <= py)
                & (py <= boxes[pair_det, 3])
            )
            gazed[pair_det[hits]] = True

    for f in recording.fixations:
        end_ms = f.start_ms + f.duration_ms
        # Candidate range padded by one frame; the direct window comparison
        # below is the authority, the floor/ceil is only a cheap bound.
        lo = int(math.floor(f.start_ms * fps / 1000.0)) - 1
        hi = int(math.ceil(end_ms * fps / 1000.0)) + 1
        i0 = int(np.searchsorted(det_frames, lo, side="left"))
        i1 = int(np.searchsorted(det_frames, hi, side="right"))
        if i0 >= i1:
            continue
        sub_frames = det_frames[i0:i1].astype(np.float64)
        win_lo = sub_frames * 1000.0 / fps
        win_hi = (sub_frames + 1) * 1000.0 / fps
        overlap = (f.start_ms < win_hi) & (win_lo < end_ms)
        sub_boxes = boxes[i0:i1]
        contained = (
            (sub_boxes[:, 0] <= f.cx_px)
            & (f.cx_px <= sub_boxes[:, 2])
            & (sub_boxes[:, 1] <= f.cy_px)
            & (f.cy_px <= sub_boxes[:, 3])
        )
        fixated[i0:i1] |= overlap & contained

    return AssociationTable(det_frames.copy(), detection_set.track_ids.copy(), gazed, fixated)


def assign_fixations(
    recording: GazeRecording,
    detection_set: DetectionSet,
    video_meta: VideoMeta,
) -> list[FixationAssignment]:
    """Resolve each fixation to one target at its midpoint frame."""
    assignments: list[FixationAssignment] = []
    for f in recording.fixations:
        mid_frame = time_to_frame(f.start_ms + f.duration_ms / 2, video_meta.fps)
        sl = detection_set.frame_slice(mid_frame)
        best: tuple[float, int] | None = None
        for i in range(sl.start, sl.stop):
            x0, y0, x1, y1 = detection_set.boxes[i]
            if x0 <= f.cx_px <= x1 and y0 <= f.cy_px <= y1:
                key = ((x1 - x0) * (y1 - y0), int(detection_set.track_ids[i]))
                if best is None or key < best:
                    best = key
        target: Target = OUTSIDE if best is None else best[1]
        assignments.append(FixationAssignment(fixation_id=f.fixation_id, target=target))
    return assignments


def active_fixation(recording: GazeRecording, frame_no: int, fps: float):
    """The fixation shown on a frame: latest start among those overlapping."""
    lo = (frame_no * 1000.0) / fps
    hi = ((frame_no + 1) * 1000.0) / fps
    candidates = [
        f for f in recording.fixations
        if f.start_ms < hi and lo < f.start_ms + f.duration_ms
    ]
    if not candidates:
        return None
    return max(candidates, key=lambda f: f.start_ms)


# ------------------------------------------------------------------- export


def write_associations_csv(
    table: AssociationTable,
    detection_set: DetectionSet,
    label_lookup=None,
) -> bytes:
    """Association export; rows mirror the detection rows positionally.

    ``label_lookup(track_id, frame_no)`` supplies the label column (may be
    None for no labels at all).
    """
    if len(table) != len(detection_set):
        raise ValueError("association table and detection set differ in length")
    out = io.StringIO(newline="")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(ASSOCIATIONS_CSV_HEADER)
    names = detection_set.class_names
    for i in range(len(table)):
        frame = int(table.frames[i])
        track = int(table.track_ids[i])
        label = label_lookup(track, frame) if label_lookup is not None else None
        writer.writerow(
            [
                frame,
                track,
                names[int(detection_set.class_ids[i])],
                1,
                1 if table.gazed[i] else 0,
                1 if table.fixated[i] else 0,
                "" if label is None else label,
            ]
        )
    return out.getvalue().encode("utf-8")


def parse_associations_csv(data: bytes) -> AssociationTable:
    """Read an association export back into a table (labels are ignored)."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedRow(0, f"not valid UTF-8: {exc}") from exc
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedRow(0, "associations CSV is empty (missing header)") from None
    if header != ASSOCIATIONS_CSV_HEADER:
        raise MalformedRow(1, f"bad header {header!r}")

    frames: list[int] = []
    tracks: list[int] = []
    gazed: list[bool] = []
    fixated: list[bool] = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 7:
            raise MalformedRow(lineno, f"expected 7 fields, got {len(row)}")
        try:
            frame = int(row[0])
            track = int(row[1])
            det, gz, fx = row[3], row[4], row[5]
        except ValueError:
            raise MalformedRow(lineno, "non-integer frame/track") from None
        for flag in (det, gz, fx):
            if flag not in ("0", "1"):
                raise MalformedRow(lineno, f"flags must be 0/1, got {flag!r}")
        if det != "1":
            raise MalformedRow(lineno, "rows must have detected=1")
        frames.append(frame)
        tracks.append(track)
        gazed.append(gz == "1")
        fixated.append(fx == "1")

    return AssociationTable(
        frames=np.array(frames, dtype=np.int64),
        track_ids=np.array(tracks, dtype=np.int64),
        gazed=np.array(gazed, dtype=bool),
        fixated=np.array(fixated, dtype=bool),
    )
