"""Batch entry points mirroring the service workflow.

Exit codes: 0 success, 1 runtime failure, 2 usage/validation.  Failures
print one machine-parseable line to stderr (``gaze2aoi: <Code>: <message>``)
and remove any partial output files.
"""

from __future__ import annotations

import argparse
import sys
import tempfile
from pathlib import Path

from . import associate as assoc
from . import det_io, detector_bridge, gaze_io, keyframes as kf, labels as lb
from . import metrics as mx
from . import overlay as ov
from . import rawvideo, report
from .config import Config, load_config
from .errors import (
    ConfigError,
    EmptyClassFilter,
    EmptyLabel,
    Gaze2AOIError,
    NotAKeyFrame,
    NothingToProcess,
    UnknownClass,
    UnknownVideoFormat,
)

_VALIDATION_ERRORS = (
    ConfigError,
    EmptyClassFilter,
    UnknownClass,
    NothingToProcess,
    EmptyLabel,
    NotAKeyFrame,
)


class _Outputs:
    """Tracks files a command writes so failures leave nothing behind."""

    def __init__(self):
        self.paths: list[Path] = []

    def register(self, *paths: str | Path) -> None:
        self.paths.extend(Path(p) for p in paths)

    def cleanup(self) -> None:
        for p in self.paths:
            try:
                p.unlink(missing_ok=True)
            except OSError:
                pass


def _load_recording(path: str, config: Config) -> gaze_io.GazeRecording:
    subject = config.subject_of(Path(path).name) or Path(path).stem
    recording = gaze_io.parse_gaze_csv(Path(path).read_bytes(), subject)
    recording = gaze_io.derive_fixations(recording)
    return gaze_io.apply_offset(recording, config.gaze_offset_ms)


def _require_meta(detections: det_io.DetectionSet, source: str) -> gaze_io.VideoMeta:
    if detections.video_meta is None:
        raise UnknownVideoFormat(
            f"{source} has no video meta; expected {source}.meta.json alongside it"
        )
    return detections.video_meta


# ---------------------------------------------------------------- commands


def _cmd_detect(args, config: Config, outputs: _Outputs) -> int:
    import shutil

    tokens = [t for t in args.classes.split(",") if t.strip() != ""]
    if not tokens:
        raise EmptyClassFilter("empty --classes")

    video_meta = rawvideo.probe_video(args.video)
    work_dir = Path(tempfile.mkdtemp(prefix="gaze2aoi-job-"))
    manager = detector_bridge.JobManager(config.adapter_cmd, work_dir)

    try:
        manifest = _dump_manifest(manager, args.video)
        class_ids: set[int] = set()
        for token in tokens:
            token = token.strip()
            if token.lstrip("-").isdigit():
                class_ids.add(int(token))
            else:
                if manifest is None:
                    raise UnknownClass(
                        f"class name {token!r} cannot be resolved: adapter has no --dump-classes"
                    )
                try:
                    class_ids.add(manifest.id_of(token))
                except KeyError:
                    raise UnknownClass(
                        f"class name {token!r} not in the adapter manifest"
                    ) from None

        skip = None
        if args.skip_ungazed:
            if not args.gaze:
                raise ConfigError("--skip-ungazed requires --gaze")
            recording = _load_recording(args.gaze, config)
            skip = detector_bridge.skip_list_from_gaze(recording, video_meta)

        outputs.register(args.out, str(args.out) + ".meta.json")
        job = manager.start_tracking(
            args.video,
            video_meta,
            class_ids,
            manifest=manifest,
            skip_frames=skip,
            downsample_factor=args.downsample,
            out_path=args.out,
        )
        job = manager.wait(job.job_id)
        if job.state != "done":
            detector_bridge.raise_job_error(job)
        outputs.paths.clear()
        return 0
    finally:
        shutil.rmtree(work_dir, ignore_errors=True)


def _dump_manifest(manager, video: str) -> det_io.ClassManifest | None:
    """Ask the adapter for its class vocabulary; None when unsupported."""
    import subprocess

    argv = manager.resolve_adapter()
    with tempfile.NamedTemporaryFile(suffix=".csv", delete=False) as tmp:
        dump_path = tmp.name
    try:
        proc = subprocess.run(
            argv + ["--dump-classes", dump_path, "--video", video],
            capture_output=True,
            timeout=120,
        )
        if proc.returncode != 0:
            return None
        return det_io.parse_class_manifest(Path(dump_path).read_bytes())
    except (OSError, subprocess.TimeoutExpired, Gaze2AOIError):
        return None
    finally:
        Path(dump_path).unlink(missing_ok=True)


def _cmd_associate(args, config: Config, outputs: _Outputs) -> int:
    video_meta = gaze_io.load_video_meta(args.video_meta)
    recording = _load_recording(args.gaze, config)
    detections = det_io.load_detections(args.detections)
    detections.video_meta = video_meta
    table = assoc.associate_frames(recording, detections, video_meta)
    outputs.register(args.out)
    Path(args.out).write_bytes(assoc.write_associations_csv(table, detections))
    outputs.paths.clear()
    return 0


def _load_label_store(path: str | None) -> lb.LabelStore:
    if path is None:
        return lb.LabelStore(session_id="")
    return lb.load_label_store(path)


def _cmd_metrics(args, config: Config, outputs: _Outputs) -> int:
    table = assoc.parse_associations_csv(Path(args.associations).read_bytes())
    detections = det_io.load_detections(args.detections)
    video_meta = _require_meta(detections, args.detections)
    recording = _load_recording(args.gaze, config)
    assignments = assoc.assign_fixations(recording, detections, video_meta)
    rows, matrix = mx.compute_all(
        table, assignments, detections, video_meta.fps, config.gap_frames
    )
    store = _load_label_store(args.labels)
    if args.labelled_only:
        rows = lb.filter_unlabelled(rows, store)
    outputs.register(args.out_metrics, args.out_transitions)
    Path(args.out_metrics).write_bytes(
        mx.write_metrics_csv(rows, label_lookup=lambda t: lb.final_label(store, t))
    )
    Path(args.out_transitions).write_bytes(mx.write_transitions_csv(matrix))
    outputs.paths.clear()
    return 0


def _cmd_keyframes(args, config: Config, outputs: _Outputs) -> int:
    detections = det_io.load_detections(args.detections)
    frames = kf.extract_keyframes(detections, config.keyframe_rule)
    outputs.register(args.out)
    Path(args.out).write_bytes(kf.write_keyframes_json(frames))
    outputs.paths.clear()
    return 0


def _cmd_annotate(args, config: Config, outputs: _Outputs) -> int:
    video_meta = rawvideo.probe_video(args.video)
    recording = _load_recording(args.gaze, config)
    detections = det_io.load_detections(args.detections)
    if detections.video_meta is None:
        detections.video_meta = video_meta
    store = _load_label_store(args.labels)
    table = assoc.associate_frames(recording, detections, video_meta)

    overlays = {}
    for frame_no in range(video_meta.frame_count):
        commands = ov.build_overlay(
            frame_no, table, detections, recording, store, video_meta
        )
        if commands:
            overlays[frame_no] = commands

    outputs.register(args.out)
    ov.render_annotated_video(
        args.video,
        video_meta,
        overlays,
        config.decoder_cmd,
        config.encoder_cmd,
        args.out,
        colors=config.color_map(),
    )
    outputs.paths.clear()
    return 0


def _cmd_report(args, config: Config, outputs: _Outputs) -> int:
    detections = det_io.load_detections(args.detections)
    video_meta = _require_meta(detections, args.detections)
    recording = _load_recording(args.gaze, config)
    table = assoc.associate_frames(recording, detections, video_meta)
    assignments = assoc.assign_fixations(recording, detections, video_meta)
    rows, matrix = mx.compute_all(
        table, assignments, detections, video_meta.fps, config.gap_frames
    )
    store = _load_label_store(args.labels)
    written = report.write_report(
        args.out_dir, table, detections, rows, matrix, store=store, fps=video_meta.fps
    )
    for path in written:
        print(path)
    return 0


def _cmd_serve(args, config: Config | None, outputs: _Outputs) -> int:
    import uvicorn

    from .service import create_app, load_session

    session = load_session(args.session_dir, config)
    app = create_app(session)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaze2aoi",
        description="Fuse object tracking with eye-tracking data into AOI analytics.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file (else $GAZE2AOI_CONFIG)")

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", parents=[common], help="run the detector adapter")
    p.add_argument("--video", required=True)
    p.add_argument("--classes", required=True, help="comma-separated class ids or names")
    p.add_argument("--out", required=True)
    p.add_argument("--skip-ungazed", action="store_true", dest="skip_ungazed")
    p.add_argument("--gaze")
    p.add_argument("--downsample", type=int, default=1)
    p.set_defaults(func=_cmd_detect)

    p = sub.add_parser("associate", parents=[common], help="join gaze and detections")
    p.add_argument("--video-meta", required=True, dest="video_meta")
    p.add_argument("--gaze", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_associate)

    p = sub.add_parser("metrics", parents=[common], help="compute AOI metrics")
    p.add_argument("--associations", required=True)
    p.add_argument("--gaze", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--out-metrics", required=True, dest="out_metrics")
    p.add_argument("--out-transitions", required=True, dest="out_transitions")
    p.add_argument("--labelled-only", action="store_true", dest="labelled_only")
    p.add_argument("--labels")
    p.set_defaults(func=_cmd_metrics)

    p = sub.add_parser("keyframes", parents=[common], help="extract review key-frames")
    p.add_argument("--detections", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_keyframes)

    p = sub.add_parser("annotate", parents=[common], help="render the annotated video")
    p.add_argument("--video", required=True)
    p.add_argument("--gaze", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--labels")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_annotate)

    p = sub.add_parser("report", parents=[common], help="CSV exports plus figures")
    p.add_argument("--gaze", required=True)
    p.add_argument("--detections", required=True)
    p.add_argument("--labels")
    p.add_argument("--out-dir", required=True, dest="out_dir")
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("serve", parents=[common], help="run the labelling service")
    p.add_argument("--session-dir", required=True, dest="session_dir")
    p.add_argument("--port", type=int, required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    outputs = _Outputs()
    try:
        if args.command == "serve":
            config = load_config(args.config) if args.config else None
            return args.func(args, config, outputs)
        config = load_config(args.config)
        return args.func(args, config, outputs)
    except _VALIDATION_ERRORS as exc:
        outputs.cleanup()
        _print_error(exc.code, exc)
        return 2
    except Gaze2AOIError as exc:
        outputs.cleanup()
        _print_error(exc.code, exc)
        return 1
    except OSError as exc:
        outputs.cleanup()
        _print_error("OSError", exc)
        return 1


def _print_error(code: str, exc: Exception) -> None:
    message = " ".join(str(exc).split())
    print(f"gaze2aoi: {code}: {message}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
