"""Adapter entry point implementing the engine's invocation contract:

    gaze2aoi-adapter --video V --classes id,id,... --out D.csv
                     [--skip-frames FILE] [--downsample K]
                     [--dump-classes PATH] [--model WEIGHTS]

Progress goes to stdout as one JSON object per line ``{"progress": n}``;
exit 0 on success, 1 on any failure with a message on stderr and no partial
output left behind.  Skipped frames are never run through the model; with
down-sampling only every K-th frame is processed and output frame numbers
are renumbered onto the reduced timeline.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from pathlib import Path

from .frames import iter_frames
from .model import RawDetection, TrackerModel

CSV_HEADER = [
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

MODEL_ENV = "GAZE2AOI_ADAPTER_MODEL"
DEFAULT_WEIGHTS = "yolov8n-oiv7.pt"
PROGRESS_EVERY = 10


def _progress(frames_done: int) -> None:
    sys.stdout.write(json.dumps({"progress": frames_done}) + "\n")
    sys.stdout.flush()


def _load_skip(path: str) -> set[int]:
    text = Path(path).read_text(encoding="utf-8")
    return {int(line) for line in text.splitlines() if line.strip()}


def _write_csv(rows: list[tuple[int, RawDetection, str]], out_path: Path) -> None:
    """Write sorted rows atomically: temp file in place, then rename."""
    rows.sort(key=lambda r: (r[0], r[1].track_id))
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for frame_no, det, name in rows:
        writer.writerow(
            [
                frame_no,
                det.track_id,
                det.class_id,
                name,
                format(det.x_min, ".2f"),
                format(det.y_min, ".2f"),
                format(det.x_max, ".2f"),
                format(det.y_max, ".2f"),
                format(min(max(det.confidence, 0.0), 1.0), ".4f"),
            ]
        )
    tmp = out_path.with_suffix(out_path.suffix + ".tmp")
    tmp.write_text(buf.getvalue(), encoding="utf-8")
    os.replace(tmp, out_path)


def run_adapter(args: argparse.Namespace, model: TrackerModel) -> int:
    names = model.names

    if args.dump_classes:
        buf = io.StringIO(newline="")
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["class_id", "class_name"])
        for class_id in sorted(names):
            writer.writerow([class_id, names[class_id]])
        Path(args.dump_classes).write_text(buf.getvalue(), encoding="utf-8")
        return 0

    if not args.video or not args.classes or not args.out:
        raise ValueError("--video, --classes and --out are required for tracking")
    class_ids = sorted({int(c) for c in args.classes.split(",") if c != ""})
    if not class_ids:
        raise ValueError("empty class filter")
    unknown = [c for c in class_ids if c not in names]
    if unknown:
        raise ValueError(f"class ids unknown to the model: {unknown}")

    skip: set[int] | None = None
    if args.skip_frames:
        skip = _load_skip(args.skip_frames)
    factor = max(1, args.downsample)

    rows: list[tuple[int, RawDetection, str]] = []
    seen_tracks_frames: set[tuple[int, int]] = set()
    processed = 0
    for frame_no, frame in enumerate(iter_frames(args.video)):
        if skip is not None and frame_no not in skip:
            continue
        if frame_no % factor != 0:
            continue
        out_frame = frame_no // factor
        for det in model.track(frame, class_ids):
            if det.class_id not in class_ids:
                continue  # belt and braces: some models ignore the filter
            key = (out_frame, det.track_id)
            if key in seen_tracks_frames:
                continue
            seen_tracks_frames.add(key)
            rows.append((out_frame, det, names[det.class_id]))
        processed += 1
        if processed % PROGRESS_EVERY == 0:
            _progress(processed)
    _progress(processed)

    _write_csv(rows, Path(args.out))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gaze2aoi-adapter")
    parser.add_argument("--video")
    parser.add_argument("--classes")
    parser.add_argument("--out")
    parser.add_argument("--skip-frames", dest="skip_frames")
    parser.add_argument("--downsample", type=int, default=1)
    parser.add_argument("--dump-classes", dest="dump_classes")
    parser.add_argument(
        "--model",
        default=os.environ.get(MODEL_ENV, DEFAULT_WEIGHTS),
        help="path to local model weights",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        from .model import UltralyticsTracker

        model = UltralyticsTracker(args.model)
        return run_adapter(args, model)
    except Exception as exc:
        print(f"gaze2aoi-adapter: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
