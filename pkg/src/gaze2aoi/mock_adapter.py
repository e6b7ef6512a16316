"""Model-free detector adapter: replays a detections fixture.

Implements the full adapter invocation contract without any ML dependency,
so integration tests and demos run offline.  The "model output" comes from a
sidecar next to the video: ``<video>.detections.csv`` in the interchange
format.  Class filtering, skip lists and down-sampling are applied to the
replayed rows exactly as a real adapter would apply them to its predictions.

Progress is reported as one JSON object per stdout line: ``{"progress": n}``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import det_io


def _emit_progress(frames_done: int) -> None:
    sys.stdout.write(json.dumps({"progress": frames_done}) + "\n")
    sys.stdout.flush()


def _load_fixture(video: str) -> det_io.DetectionSet:
    video_path = Path(video)
    if not video_path.exists():
        raise FileNotFoundError(f"video not found: {video}")
    fixture = Path(str(video_path) + ".detections.csv")
    if not fixture.exists():
        raise FileNotFoundError(f"mock fixture not found: {fixture}")
    return det_io.parse_detections_csv(fixture.read_bytes())


def run(args: argparse.Namespace) -> int:
    fixture = _load_fixture(args.video)

    if args.dump_classes:
        ids = sorted(fixture.class_names)
        manifest = det_io.ClassManifest(
            entries=tuple((cid, fixture.class_names[cid]) for cid in ids),
            source="mock",
        )
        Path(args.dump_classes).write_bytes(det_io.write_class_manifest(manifest))
        return 0

    if args.classes is None or args.out is None:
        raise ValueError("--classes and --out are required for tracking runs")
    wanted = {int(c) for c in args.classes.split(",") if c != ""}
    if not wanted:
        raise ValueError("empty class filter")

    skip: set[int] | None = None
    if args.skip_frames:
        text = Path(args.skip_frames).read_text(encoding="utf-8")
        skip = {int(line) for line in text.splitlines() if line.strip()}

    factor = args.downsample or 1
    rows = []
    for d in fixture.detections:
        if d.class_id not in wanted:
            continue
        if skip is not None and d.frame_no not in skip:
            continue
        if d.frame_no % factor != 0:
            continue
        frame = d.frame_no // factor
        rows.append(
            det_io.Detection(
                frame_no=frame,
                track_id=d.track_id,
                class_id=d.class_id,
                class_name=d.class_name,
                x_min=d.x_min,
                y_min=d.y_min,
                x_max=d.x_max,
                y_max=d.y_max,
                confidence=d.confidence,
            )
        )

    # Non-JSON chatter must be tolerated by the job runner (goes to its log).
    print("mock adapter: replaying fixture", flush=True)

    out = det_io.DetectionSet.from_rows(rows, class_filter=frozenset(wanted))
    frames_done = 0
    distinct = sorted({int(f) for f in out.frames})
    for i, _ in enumerate(distinct, start=1):
        frames_done = i
        if i % 10 == 0:
            _emit_progress(frames_done)
    _emit_progress(frames_done)

    Path(args.out).write_bytes(det_io.write_detections_csv(out))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gaze2aoi.mock_adapter")
    parser.add_argument("--video", required=True)
    parser.add_argument("--classes")
    parser.add_argument("--out")
    parser.add_argument("--skip-frames", dest="skip_frames")
    parser.add_argument("--downsample", type=int, default=1)
    parser.add_argument("--dump-classes", dest="dump_classes")
    args = parser.parse_args(argv)
    try:
        return run(args)
    except Exception as exc:
        print(f"mock adapter error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
