"""Deterministic demo session: tiny video, gaze recording and detections.

Generates a complete session directory that exercises every interesting
path: nested boxes, an AOI that is never looked at, a gaze sample inside a
box whose fixation lands outside (gazed without fixated), revisits, and a
transition chain through OUTSIDE.  Used by the test suite, the README
quickstart and the front-end integration test:

    python -m gaze2aoi.demo_session --out /tmp/demo

Layout written: ``s01_video.rgbv`` (+ mock-adapter fixture sidecar),
``s01_gaze.csv``, ``classes.csv``, ``detections.csv``, ``labels.json``,
``gaze2aoi.conf`` and ``session.json``.
"""

from __future__ import annotations

import argparse
import json
import shlex
import sys
from pathlib import Path

import numpy as np

from . import det_io, gaze_io, rawvideo
from .labels import LabelStore, save_label_store

WIDTH = 96
HEIGHT = 72
FPS = 25.0
FRAME_COUNT = 50

# Static boxes: (track_id, class_id, class_name, first, last, box, confidence)
TRACKS = [
    (1, 0, "Person", 0, 49, (5.0, 10.0, 35.0, 60.0), 0.9),
    (2, 1, "Window", 10, 39, (50.0, 8.0, 88.0, 40.0), 0.85),
    (3, 2, "Human face", 20, 29, (12.0, 14.0, 28.0, 30.0), 0.8),
    (4, 4, "House", 0, 9, (60.0, 45.0, 90.0, 70.0), 0.75),
]

CLASSES = [
    (0, "Person"),
    (1, "Window"),
    (2, "Human face"),
    (3, "Oven"),
    (4, "House"),
    (5, "Hat"),
]


def video_meta() -> gaze_io.VideoMeta:
    return gaze_io.VideoMeta(
        fps=FPS,
        width_px=WIDTH,
        height_px=HEIGHT,
        frame_count=FRAME_COUNT,
        subject_id="s01",
    )


def detection_rows() -> list[det_io.Detection]:
    rows = []
    for track_id, class_id, name, first, last, box, conf in TRACKS:
        for frame in range(first, last + 1):
            rows.append(
                det_io.Detection(
                    frame_no=frame,
                    track_id=track_id,
                    class_id=class_id,
                    class_name=name,
                    x_min=box[0],
                    y_min=box[1],
                    x_max=box[2],
                    y_max=box[3],
                    confidence=conf,
                )
            )
    return rows


def detection_set() -> det_io.DetectionSet:
    return det_io.DetectionSet.from_rows(detection_rows(), video_meta=video_meta())


def _fixation_points(cx: float, cy: float, n: int) -> list[tuple[float, float]]:
    """n points (n odd) whose mean is exactly (cx, cy): offsets cancel pairwise."""
    assert n % 2 == 1
    pts = [(cx, cy)]
    for k in range(1, n, 2):
        d = 1.0 + (k // 2) % 2
        pts.append((cx + d, cy + d))
        pts.append((cx - d, cy - d))
    return pts


def gaze_samples() -> list[tuple[float, str, str, int, str]]:
    """100 samples at 50 Hz (20 ms period) as raw CSV field tuples."""
    rows: dict[int, tuple[float, float, bool, int | None]] = {}

    def put(i, x, y, fid=None, valid=True):
        rows[i] = (float(x), float(y), valid, fid)

    # Lead-in, outside every box.
    for i in range(0, 4):
        put(i, 40.0 + i, 30.0)
    # Fixation 1: centroid (20, 30), inside Person; frames 2..6.
    for j, (x, y) in enumerate(_fixation_points(20.0, 30.0, 9)):
        put(4 + j, x, y, fid=1)
    # Drift right of the Person box (x > 35, outside Window's y range).
    for j in range(11):
        put(13 + j, 37.0 + j, 50.0 - j)
    # Fixation 2: centroid (60, 20), inside Window; frames 12..16.
    for j, (x, y) in enumerate(_fixation_points(60.0, 20.0, 9)):
        put(24 + j, x, y, fid=2)
    # Drift below the Window box.
    for j in range(9):
        put(33 + j, 58.0 - j, 42.0 + j)
    # Fixation 3: centroid (44, 60), outside every box, but one sample
    # strays into the Window box: gazed without fixated on that frame.
    fix3 = [(44.0, 60.0), (45.0, 54.0), (43.0, 66.0), (52.0, 30.0),
            (36.0, 70.0), (45.0, 70.0), (43.0, 70.0)]
    for j, (x, y) in enumerate(fix3):
        put(42 + j, x, y, fid=3)
    put(49, 45.0, 58.0)
    put(50, 0.0, 0.0, valid=False)
    # Stray valid sample inside Person (gazed on frame 25 without fixation).
    put(51, 30.0, 50.0)
    # Fixation 4: centroid (20, 20), inside Human face nested in Person.
    for j, (x, y) in enumerate(_fixation_points(20.0, 20.0, 9)):
        put(52 + j, x, y, fid=4)
    # Drift, staying right of the Person box.
    for j in range(13):
        put(61 + j, 44.0 - j * 0.5, 58.0)
    # Fixation 5: centroid (20, 40), back inside Person (a revisit).
    for j, (x, y) in enumerate(_fixation_points(20.0, 40.0, 9)):
        put(74 + j, x, y, fid=5)
    # Tail drift, outside every box.
    for j in range(17):
        put(83 + j, 37.0 + j * 0.5, 55.0)

    out = []
    for i in range(100):
        t = i * 20.0
        x, y, valid, fid = rows[i]
        if not valid:
            out.append((t, "", "", 0, ""))
        else:
            out.append((t, repr(x), repr(y), 1, "" if fid is None else str(fid)))
    return out


def gaze_csv_bytes() -> bytes:
    lines = [",".join(gaze_io.GAZE_CSV_HEADER)]
    for t, x, y, valid, fid in gaze_samples():
        lines.append(f"{t!r},{x},{y},{valid},{fid}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def recording() -> gaze_io.GazeRecording:
    rec = gaze_io.parse_gaze_csv(gaze_csv_bytes(), subject_id="s01")
    return gaze_io.derive_fixations(rec)


def video_frames():
    """Procedural frames: a deterministic gradient varying per frame."""
    ys, xs = np.mgrid[0:HEIGHT, 0:WIDTH]
    for frame in range(FRAME_COUNT):
        r = ((xs * 3 + frame) % 256).astype(np.uint8)
        g = ((ys * 5) % 256).astype(np.uint8)
        b = np.full_like(r, (frame * 4) % 256)
        yield np.stack([r, g, b], axis=-1)


def class_manifest() -> det_io.ClassManifest:
    return det_io.ClassManifest(entries=tuple(CLASSES), source="demo")


def build_demo_session(out_dir: str | Path, with_detections: bool = True) -> Path:
    """Write the full session directory; returns its path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    meta = video_meta()

    video_path = out / "s01_video.rgbv"
    rawvideo.write_rgbv(video_path, meta, video_frames())

    dets = detection_set()
    fixture_path = Path(str(video_path) + ".detections.csv")
    fixture_path.write_bytes(det_io.write_detections_csv(dets))

    (out / "s01_gaze.csv").write_bytes(gaze_csv_bytes())
    (out / "classes.csv").write_bytes(det_io.write_class_manifest(class_manifest()))
    save_label_store(LabelStore(session_id="demo"), out / "labels.json")

    python = shlex.quote(sys.executable)
    conf = "\n".join(
        [
            "# demo session config: offline raw-RGB pipe codec + mock adapter",
            f"adapter_cmd = {python} -m gaze2aoi.mock_adapter",
            f"decoder_cmd = {python} -m gaze2aoi.rawvideo decode --input {{input}}",
            (
                f"encoder_cmd = {python} -m gaze2aoi.rawvideo encode "
                "--output {output} --width {width} --height {height} --fps {fps}"
            ),
        ]
    )
    (out / "gaze2aoi.conf").write_text(conf + "\n", encoding="utf-8")

    session = {
        "session_id": "demo",
        "video": "s01_video.rgbv",
        "gaze": "s01_gaze.csv",
        "classes": "classes.csv",
        "labels": "labels.json",
        "config": "gaze2aoi.conf",
    }
    if with_detections:
        det_io.save_detections(dets, out / "detections.csv")
        session["detections"] = "detections.csv"
    (out / "session.json").write_text(
        json.dumps(session, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return out


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gaze2aoi.demo_session")
    parser.add_argument("--out", required=True, help="directory to create")
    parser.add_argument(
        "--no-detections",
        action="store_true",
        help="omit the precomputed detections (tracking must be run)",
    )
    args = parser.parse_args(argv)
    path = build_demo_session(args.out, with_detections=not args.no_detections)
    print(f"demo session written to {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
