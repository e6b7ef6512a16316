"""Eye-tracking recording I/O and the gaze/frame timeline arithmetic.

The canonical gaze CSV is UTF-8 with LF line endings and the exact header
``timestamp_ms,gaze_x,gaze_y,validity,fixation_id``.  Timestamps are
milliseconds from video start, strictly increasing.  ``validity`` is 0 or 1;
invalid samples may leave the coordinate fields blank and are ignored by all
downstream computations.  ``fixation_id`` is blank for samples that belong to
no fixation; tagged samples must form contiguous runs per id.

Frame ownership follows presentation semantics: frame ``n`` owns the
half-open time window ``[n/fps, (n+1)/fps)`` seconds, so a timestamp exactly
on a boundary belongs to the later frame.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import statistics
from dataclasses import dataclass, field, replace
from pathlib import Path

from .errors import (
    EmptyRecording,
    InterleavedFixation,
    MalformedRow,
    NonMonotoneTimestamp,
    UnknownVideoFormat,
)

log = logging.getLogger(__name__)

GAZE_CSV_HEADER = ["timestamp_ms", "gaze_x", "gaze_y", "validity", "fixation_id"]

# Period fallback when a recording is too short to infer a rate from gaps.
DEFAULT_SAMPLE_RATE_HZ = 1000.0


@dataclass(frozen=True)
class GazeSample:
    """One raw eye-tracker measurement on the video timeline."""

    timestamp_ms: float
    x_px: float | None
    y_px: float | None
    valid: bool
    fixation_id: int | None = None


@dataclass(frozen=True)
class Fixation:
    """A stable-gaze event: centroid position over a half-open time interval."""

    fixation_id: int
    start_ms: float
    duration_ms: float
    cx_px: float
    cy_px: float

    @property
    def end_ms(self) -> float:
        return self.start_ms + self.duration_ms


@dataclass(frozen=True)
class GazeRecording:
    """All gaze samples plus derived fixation events for one subject/session."""

    subject_id: str
    samples: tuple[GazeSample, ...]
    fixations: tuple[Fixation, ...] = ()
    sample_rate_hz: float = DEFAULT_SAMPLE_RATE_HZ

    @property
    def sample_period_ms(self) -> float:
        return 1000.0 / self.sample_rate_hz


@dataclass(frozen=True)
class VideoMeta:
    """Shape of the stimulus video; everything downstream keys off fps."""

    fps: float
    width_px: int
    height_px: int
    frame_count: int
    subject_id: str | None = None

    @property
    def duration_ms(self) -> float:
        return self.frame_count * 1000.0 / self.fps

    def to_json(self) -> str:
        obj = {
            "fps": self.fps,
            "width_px": self.width_px,
            "height_px": self.height_px,
            "frame_count": self.frame_count,
        }
        if self.subject_id is not None:
            obj["subject_id"] = self.subject_id
        return json.dumps(obj, sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "VideoMeta":
        try:
            obj = json.loads(text)
            return cls(
                fps=float(obj["fps"]),
                width_px=int(obj["width_px"]),
                height_px=int(obj["height_px"]),
                frame_count=int(obj["frame_count"]),
                subject_id=obj.get("subject_id"),
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise UnknownVideoFormat(f"bad video meta JSON: {exc}") from exc


def load_video_meta(path: str | Path) -> VideoMeta:
    return VideoMeta.from_json(Path(path).read_text(encoding="utf-8"))


def save_video_meta(meta: VideoMeta, path: str | Path) -> None:
    Path(path).write_text(meta.to_json(), encoding="utf-8")


# ------------------------------------------------------------------ parsing


def _parse_float(text: str, row: int, what: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise MalformedRow(row, f"{what} is not a number: {text!r}") from None


def parse_gaze_csv(data: bytes, subject_id: str) -> GazeRecording:
    """Parse the canonical gaze CSV into a recording (no fixations yet).

    The sample rate is inferred as the median of the reciprocal inter-sample
    gaps; recordings with a single sample fall back to 1 kHz.
    """
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise MalformedRow(0, f"not valid UTF-8: {exc}") from exc

    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = next(reader)
    except StopIteration:
        raise EmptyRecording("gaze CSV has no header") from None
    if header != GAZE_CSV_HEADER:
        raise MalformedRow(1, f"bad header {header!r}, expected {GAZE_CSV_HEADER!r}")

    samples: list[GazeSample] = []
    prev_ts: float | None = None
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != 5:
            raise MalformedRow(lineno, f"expected 5 fields, got {len(row)}")
        ts = _parse_float(row[0], lineno, "timestamp_ms")
        if ts < 0:
            raise MalformedRow(lineno, f"negative timestamp {ts}")
        if prev_ts is not None and ts <= prev_ts:
            raise NonMonotoneTimestamp(
                lineno, f"timestamp {ts} does not increase past {prev_ts}"
            )
        prev_ts = ts

        if row[3] not in ("0", "1"):
            raise MalformedRow(lineno, f"validity must be 0 or 1, got {row[3]!r}")
        valid = row[3] == "1"

        x: float | None = None
        y: float | None = None
        if row[1] != "" or row[2] != "":
            if row[1] == "" or row[2] == "":
                raise MalformedRow(lineno, "gaze_x/gaze_y must both be present or both blank")
            x = _parse_float(row[1], lineno, "gaze_x")
            y = _parse_float(row[2], lineno, "gaze_y")
        elif valid:
            raise MalformedRow(lineno, "valid sample with blank coordinates")

        fixation_id: int | None = None
        if row[4] != "":
            try:
                fixation_id = int(row[4])
            except ValueError:
                raise MalformedRow(lineno, f"fixation_id is not an integer: {row[4]!r}") from None
            if fixation_id < 0:
                raise MalformedRow(lineno, f"negative fixation_id {fixation_id}")

        samples.append(GazeSample(ts, x, y, valid, fixation_id))

    if not samples:
        raise EmptyRecording("gaze CSV contains no samples")

    if len(samples) >= 2:
        rates = [
            1000.0 / (b.timestamp_ms - a.timestamp_ms)
            for a, b in zip(samples, samples[1:])
        ]
        rate = statistics.median(rates)
    else:
        rate = DEFAULT_SAMPLE_RATE_HZ

    return GazeRecording(
        subject_id=subject_id,
        samples=tuple(samples),
        fixations=(),
        sample_rate_hz=rate,
    )


def _fmt(value: float | int | None) -> str:
    if value is None:
        return ""
    if isinstance(value, int):
        return str(value)
    return repr(value)


def serialize_gaze_csv(recording: GazeRecording) -> bytes:
    """Canonical gaze CSV bytes; parse(serialize(r)) preserves every field."""
    out = io.StringIO(newline="")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(GAZE_CSV_HEADER)
    for s in recording.samples:
        writer.writerow(
            [
                _fmt(s.timestamp_ms),
                _fmt(s.x_px),
                _fmt(s.y_px),
                "1" if s.valid else "0",
                "" if s.fixation_id is None else str(s.fixation_id),
            ]
        )
    return out.getvalue().encode("utf-8")


# ---------------------------------------------------------------- fixations


def derive_fixations(recording: GazeRecording) -> GazeRecording:
    """Group fixation-tagged samples into Fixation events.

    Tagged samples must form contiguous runs per id (ignoring untagged
    samples in between).  The duration extends one sample period past the
    last tagged sample so single-sample fixations keep a nonzero extent.
    Fixations whose samples are all invalid are dropped with a warning.
    """
    tagged = [s for s in recording.samples if s.fixation_id is not None]
    seen: set[int] = set()
    runs: list[list[GazeSample]] = []
    current_id: int | None = None
    for s in tagged:
        if s.fixation_id == current_id:
            runs[-1].append(s)
        else:
            if s.fixation_id in seen:
                raise InterleavedFixation(
                    f"fixation_id {s.fixation_id} reappears after another fixation"
                )
            seen.add(s.fixation_id)
            current_id = s.fixation_id
            runs.append([s])

    period = recording.sample_period_ms
    fixations: list[Fixation] = []
    dropped: set[int] = set()
    for run in runs:
        fid = run[0].fixation_id
        valid = [s for s in run if s.valid]
        if not valid:
            log.warning("fixation %d has no valid samples; dropped", fid)
            dropped.add(fid)
            continue
        start = run[0].timestamp_ms
        duration = run[-1].timestamp_ms - start + period
        fixations.append(
            Fixation(
                fixation_id=fid,
                start_ms=start,
                duration_ms=duration,
                cx_px=sum(s.x_px for s in valid) / len(valid),
                cy_px=sum(s.y_px for s in valid) / len(valid),
            )
        )
    samples = recording.samples
    if dropped:
        # Keep the recording invariant: no sample may reference a fixation
        # that is not in the fixation list.
        samples = tuple(
            replace(s, fixation_id=None) if s.fixation_id in dropped else s
            for s in samples
        )
    return replace(recording, samples=samples, fixations=tuple(fixations))


# ----------------------------------------------------------- frame timeline


def time_to_frame(t_ms: float, fps: float) -> int:
    """Map a timestamp to the frame that owns it (floor of t*fps/1000)."""
    return int(math.floor(t_ms * fps / 1000.0))


def frame_window_ms(frame_no: int, fps: float) -> tuple[float, float]:
    """Half-open [start, end) window of a frame in milliseconds."""
    return (frame_no * 1000.0) / fps, ((frame_no + 1) * 1000.0) / fps


def frames_with_gaze(recording: GazeRecording, video_meta: VideoMeta) -> list[int]:
    """Sorted frames whose time window contains at least one valid sample.

    Samples mapping past the last video frame are ignored.
    """
    frames = {
        time_to_frame(s.timestamp_ms, video_meta.fps)
        for s in recording.samples
        if s.valid
    }
    return sorted(f for f in frames if 0 <= f < video_meta.frame_count)


def downsample_meta(video_meta: VideoMeta, factor: int) -> VideoMeta:
    """Video shape after keeping every ``factor``-th frame."""
    if factor < 1 or int(factor) != factor:
        raise ValueError(f"downsample factor must be an integer >= 1, got {factor}")
    factor = int(factor)
    if factor == 1:
        return video_meta
    return replace(
        video_meta,
        fps=video_meta.fps / factor,
        frame_count=max(1, math.ceil(video_meta.frame_count / factor)),
    )


def downsample(
    recording: GazeRecording, video_meta: VideoMeta, factor: int
) -> tuple[GazeRecording, VideoMeta]:
    """Keep every ``factor``-th frame: fps shrinks, timestamps stay put.

    Gaze samples are untouched; they re-map to the surviving frames through
    ``time_to_frame`` under the reduced fps.
    """
    return recording, downsample_meta(video_meta, factor)


def apply_offset(recording: GazeRecording, offset_ms: float) -> GazeRecording:
    """Shift the recording onto the video clock by ``offset_ms``.

    Samples and fixations pushed before time zero are dropped with a warning.
    """
    if offset_ms == 0:
        return recording
    samples = []
    dropped = 0
    for s in recording.samples:
        t = s.timestamp_ms + offset_ms
        if t < 0:
            dropped += 1
            continue
        samples.append(replace(s, timestamp_ms=t))
    fixations = []
    for f in recording.fixations:
        start = f.start_ms + offset_ms
        if start < 0:
            dropped += 1
            continue
        fixations.append(replace(f, start_ms=start))
    if dropped:
        log.warning("gaze offset %+g ms dropped %d samples/fixations", offset_ms, dropped)
    return replace(recording, samples=tuple(samples), fixations=tuple(fixations))
