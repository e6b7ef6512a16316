"""Brute-force reference implementations and the randomized instance family.

Everything here is deliberately written as direct per-element scans over the
defining rules, independent of the library's vectorised paths, so the main
implementations can be checked for exact equality.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from gaze2aoi.associate import OUTSIDE
from gaze2aoi.det_io import Detection, DetectionSet
from gaze2aoi.gaze_io import Fixation, GazeRecording, GazeSample, VideoMeta


def frame_of(t_ms: float, fps: float) -> int:
    return int(math.floor(t_ms * fps / 1000.0))


def in_box(px: float, py: float, d: Detection) -> bool:
    return d.x_min <= px <= d.x_max and d.y_min <= py <= d.y_max


def oracle_associate(
    recording: GazeRecording, det_rows: list[Detection], fps: float
) -> list[tuple[int, int, bool, bool, bool]]:
    """Triple enumeration: every (detection, sample) and (detection, fixation)."""
    out = []
    for d in sorted(det_rows, key=lambda r: (r.frame_no, r.track_id)):
        gazed = False
        for s in recording.samples:
            if not s.valid:
                continue
            if frame_of(s.timestamp_ms, fps) != d.frame_no:
                continue
            if in_box(s.x_px, s.y_px, d):
                gazed = True
        fixated = False
        win_lo = (d.frame_no * 1000.0) / fps
        win_hi = ((d.frame_no + 1) * 1000.0) / fps
        for f in recording.fixations:
            if f.start_ms < win_hi and win_lo < f.start_ms + f.duration_ms:
                if d.x_min <= f.cx_px <= d.x_max and d.y_min <= f.cy_px <= d.y_max:
                    fixated = True
        out.append((d.frame_no, d.track_id, True, gazed, fixated))
    return out


def oracle_assign(
    recording: GazeRecording, det_rows: list[Detection], fps: float
) -> list[tuple[int, object]]:
    out = []
    for f in recording.fixations:
        mid = frame_of(f.start_ms + f.duration_ms / 2, fps)
        best = None
        for d in det_rows:
            if d.frame_no != mid:
                continue
            if in_box(f.cx_px, f.cy_px, d):
                key = ((d.x_max - d.x_min) * (d.y_max - d.y_min), d.track_id)
                if best is None or key < best:
                    best = key
        out.append((f.fixation_id, OUTSIDE if best is None else best[1]))
    return out


def oracle_visits(fix_frames: list[int], gap_frames: int) -> int:
    visits = 0
    prev = None
    for f in fix_frames:
        if prev is None or f - prev > gap_frames + 1:
            visits += 1
        prev = f
    return visits


@dataclass
class OracleMetrics:
    track_id: int
    class_name: str
    first_appearance_ms: float
    ttff_ms: float | None
    dwell_gaze_ms: float
    dwell_fix_ms: float
    fixation_count: int
    visit_count: int
    revisit_count: int


def oracle_metrics(
    assoc_rows: list[tuple[int, int, bool, bool, bool]],
    assignments: list[tuple[int, object]],
    det_rows: list[Detection],
    fps: float,
    gap_frames: int,
) -> tuple[list[OracleMetrics], dict[tuple[object, object], int]]:
    """Per-frame simulation of every metric, one track at a time."""
    tracks = sorted({d.track_id for d in det_rows})
    class_of: dict[int, str] = {}
    for d in sorted(det_rows, key=lambda r: (r.frame_no, r.track_id)):
        class_of.setdefault(d.track_id, d.class_name)

    results = []
    for t in tracks:
        det_frames = sorted(d.frame_no for d in det_rows if d.track_id == t)
        gazed_frames = sorted(r[0] for r in assoc_rows if r[1] == t and r[3])
        fix_frames = sorted(r[0] for r in assoc_rows if r[1] == t and r[4])
        visits = oracle_visits(fix_frames, gap_frames)
        results.append(
            OracleMetrics(
                track_id=t,
                class_name=class_of[t],
                first_appearance_ms=(det_frames[0] * 1000.0) / fps,
                ttff_ms=(fix_frames[0] * 1000.0) / fps if fix_frames else None,
                dwell_gaze_ms=(len(gazed_frames) * 1000.0) / fps,
                dwell_fix_ms=(len(fix_frames) * 1000.0) / fps,
                fixation_count=sum(1 for _, target in assignments if target == t),
                visit_count=visits,
                revisit_count=max(visits - 1, 0),
            )
        )

    transitions: dict[tuple[object, object], int] = {}
    for (_, a), (_, b) in zip(assignments, assignments[1:]):
        if a != b:
            transitions[(a, b)] = transitions.get((a, b), 0) + 1
    return results, transitions


def oracle_keyframes(det_rows: list[Detection]) -> list[int]:
    """Signature-change scan over frames with detections."""
    by_frame: dict[int, list[str]] = {}
    for d in det_rows:
        by_frame.setdefault(d.frame_no, []).append(d.class_name)
    selected: list[int] = []
    last_sig: list[str] | None = None
    for frame in sorted(by_frame):
        sig = sorted(by_frame[frame])
        if last_sig is None or sig != last_sig:
            selected.append(frame)
            last_sig = sig
    return selected


# --------------------------------------------------------- instance family

CLASS_POOL = [(0, "Person"), (1, "Window"), (2, "Human face"), (3, "Car"), (4, "Dog")]


def random_instance(seed: int):
    """One synthetic session within the desk-scale bounds.

    Returns (recording, det_rows, detection_set, video_meta).
    """
    rng = random.Random(seed)
    fps = rng.choice([10.0, 24.0, 25.0, 29.97, 30.0, 60.0])
    frame_count = rng.randint(1, 200)
    meta = VideoMeta(fps=fps, width_px=200, height_px=200, frame_count=frame_count)
    duration_ms = frame_count * 1000.0 / fps

    det_rows: list[Detection] = []
    boxes: list[tuple[float, float, float, float]] = []
    n_tracks = rng.randint(0, 10)
    for track_id in range(1, n_tracks + 1):
        class_id, class_name = rng.choice(CLASS_POOL)
        first = rng.randint(0, frame_count - 1)
        last = rng.randint(first, frame_count - 1)
        x0 = rng.uniform(0, 180)
        y0 = rng.uniform(0, 180)
        w = rng.uniform(0, 60)
        h = rng.uniform(0, 60)
        drift = rng.uniform(-0.5, 0.5)
        for frame in range(first, last + 1):
            dx = drift * (frame - first)
            box = (x0 + dx, y0, x0 + w + dx, y0 + h)
            boxes.append(box)
            det_rows.append(
                Detection(
                    frame_no=frame,
                    track_id=track_id,
                    class_id=class_id,
                    class_name=class_name,
                    x_min=box[0],
                    y_min=box[1],
                    x_max=box[2],
                    y_max=box[3],
                    confidence=round(rng.uniform(0.3, 1.0), 4),
                )
            )

    samples: list[GazeSample] = []
    n_samples = rng.randint(0, 100)
    t = 0.0
    for _ in range(n_samples):
        t += rng.uniform(0.5, max(1.0, duration_ms / max(n_samples, 1)))
        if t >= duration_ms:
            break
        valid = rng.random() > 0.15
        if valid and boxes and rng.random() < 0.25:
            # Sometimes aim into (or exactly onto the edge of) a real box.
            bx = rng.choice(boxes)
            x = rng.choice([bx[0], bx[2], rng.uniform(bx[0], bx[2])])
            y = rng.choice([bx[1], bx[3], rng.uniform(bx[1], bx[3])])
        else:
            x = rng.uniform(-10, 210)
            y = rng.uniform(-10, 210)
        samples.append(
            GazeSample(
                timestamp_ms=t,
                x_px=x if valid else None,
                y_px=y if valid else None,
                valid=valid,
            )
        )

    fixations: list[Fixation] = []
    n_fix = rng.randint(0, 40)
    t = rng.uniform(0, 50)
    for fid in range(1, n_fix + 1):
        if t >= duration_ms * 1.05:
            break
        dur = rng.uniform(1.0, 400.0)
        if boxes and rng.random() < 0.5:
            bx = rng.choice(boxes)
            cx = rng.choice([bx[0], bx[2], rng.uniform(bx[0], bx[2])])
            cy = rng.choice([bx[1], bx[3], rng.uniform(bx[1], bx[3])])
        else:
            cx = rng.uniform(-10, 210)
            cy = rng.uniform(-10, 210)
        fixations.append(
            Fixation(fixation_id=fid, start_ms=t, duration_ms=dur, cx_px=cx, cy_px=cy)
        )
        t += dur + rng.uniform(0.1, 200.0)

    recording = GazeRecording(
        subject_id="synthetic",
        samples=tuple(samples),
        fixations=tuple(fixations),
        sample_rate_hz=60.0,
    )
    detection_set = DetectionSet.from_rows(det_rows, video_meta=meta)
    return recording, det_rows, detection_set, meta
