"""Orchestration of the external detector adapter subprocess.

The adapter contract is batch-shaped: one process run per tracking job,

    <adapter> --video <path> --classes <id,id,...> --out <csv>
              [--skip-frames <file>] [--downsample <k>]

with one JSON progress object per stdout line (``{"progress": n}``) and exit
code 0 on success.  Non-JSON stdout lines are kept in the job log.  The
written CSV must validate under det_io; the bridge re-serializes it
canonically (plus a ``.meta.json`` sidecar) so downstream golden comparisons
are byte-stable regardless of the adapter's formatting.
"""

from __future__ import annotations

import json
import shlex
import shutil
import subprocess
import threading
import uuid
from dataclasses import dataclass, replace
from pathlib import Path

from . import det_io
from .det_io import ClassManifest
from .errors import (
    AdapterCrashed,
    AdapterNotFound,
    EmptyClassFilter,
    InvalidAdapterOutput,
    NothingToProcess,
    ParseError,
    UnknownClass,
    UnknownJob,
)
from .gaze_io import GazeRecording, VideoMeta, downsample_meta, frames_with_gaze


@dataclass(frozen=True)
class TrackingJob:
    """Immutable snapshot of one adapter run."""

    job_id: str
    video_path: str
    class_filter: frozenset[int]
    skip_frames: tuple[int, ...] | None
    downsample_factor: int
    state: str  # queued | running | done | failed
    progress_frames: int = 0
    output_path: str = ""
    error: str | None = None
    log: tuple[str, ...] = ()


def skip_list_from_gaze(recording: GazeRecording, video_meta: VideoMeta) -> list[int]:
    """Frames worth running inference on: exactly the gazed frames."""
    return frames_with_gaze(recording, video_meta)


class JobManager:
    """Runs tracking jobs on background threads; poll_job is thread-safe."""

    def __init__(self, adapter_cmd: str, work_dir: str | Path):
        self.adapter_cmd = adapter_cmd
        self.work_dir = Path(work_dir)
        self._jobs: dict[str, TrackingJob] = {}
        self._threads: dict[str, threading.Thread] = {}
        self._lock = threading.Lock()

    # ------------------------------------------------------------- queries

    def poll_job(self, job_id: str) -> TrackingJob:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                raise UnknownJob(f"no job {job_id!r}")
            return job

    def wait(self, job_id: str, timeout: float | None = None) -> TrackingJob:
        thread = self._threads.get(job_id)
        if thread is not None:
            thread.join(timeout)
        return self.poll_job(job_id)

    def jobs(self) -> list[TrackingJob]:
        with self._lock:
            return sorted(self._jobs.values(), key=lambda j: j.job_id)

    # -------------------------------------------------------------- control

    def _update(self, job_id: str, **changes) -> TrackingJob:
        with self._lock:
            job = self._jobs[job_id]
            if "progress_frames" in changes:
                changes["progress_frames"] = max(
                    job.progress_frames, changes["progress_frames"]
                )
            job = replace(job, **changes)
            self._jobs[job_id] = job
            return job

    def resolve_adapter(self) -> list[str]:
        if not self.adapter_cmd.strip():
            raise AdapterNotFound("adapter_cmd is not configured")
        argv = shlex.split(self.adapter_cmd)
        exe = argv[0]
        if shutil.which(exe) is None and not Path(exe).exists():
            raise AdapterNotFound(f"adapter executable not found: {exe}")
        return argv

    def start_tracking(
        self,
        video_path: str,
        video_meta: VideoMeta,
        class_filter: set[int],
        *,
        manifest: ClassManifest | None = None,
        skip_frames: list[int] | None = None,
        downsample_factor: int = 1,
        out_path: str | Path | None = None,
        on_success=None,
    ) -> TrackingJob:
        """Validate, spawn the adapter on a worker thread, return the job.

        ``skip_frames=None`` means "process everything"; an explicit empty
        list is refused (nothing to do).  ``on_success(job, detection_set)``
        runs on the worker thread after validation.
        """
        if not class_filter:
            raise EmptyClassFilter("class filter is empty")
        if manifest is not None:
            unknown = set(class_filter) - manifest.ids
            if unknown:
                raise UnknownClass(f"class ids not in manifest: {sorted(unknown)}")
        if skip_frames is not None and len(skip_frames) == 0:
            raise NothingToProcess("skip list is empty; no frames carry gaze")
        if downsample_factor < 1:
            raise ValueError("downsample_factor must be >= 1")
        argv_base = self.resolve_adapter()

        job_id = uuid.uuid4().hex[:12]
        self.work_dir.mkdir(parents=True, exist_ok=True)
        if out_path is None:
            out_path = self.work_dir / f"detections-{job_id}.csv"
        out_path = Path(out_path)

        job = TrackingJob(
            job_id=job_id,
            video_path=video_path,
            class_filter=frozenset(class_filter),
            skip_frames=tuple(skip_frames) if skip_frames is not None else None,
            downsample_factor=downsample_factor,
            state="queued",
            output_path=str(out_path),
        )
        with self._lock:
            self._jobs[job_id] = job

        argv = argv_base + [
            "--video", video_path,
            "--classes", ",".join(str(c) for c in sorted(class_filter)),
            "--out", str(out_path),
        ]
        if skip_frames is not None:
            skip_path = self.work_dir / f"skip-{job_id}.txt"
            skip_path.write_text(
                "".join(f"{f}\n" for f in skip_frames), encoding="utf-8"
            )
            argv += ["--skip-frames", str(skip_path)]
        if downsample_factor > 1:
            argv += ["--downsample", str(downsample_factor)]

        out_meta = downsample_meta(video_meta, downsample_factor)
        expected_frames: frozenset[int] | None = None
        if skip_frames is not None:
            expected_frames = frozenset(
                f // downsample_factor for f in skip_frames if f % downsample_factor == 0
            )

        thread = threading.Thread(
            target=self._run_job,
            args=(
                job_id,
                argv,
                out_path,
                out_meta,
                frozenset(class_filter),
                expected_frames,
                on_success,
            ),
            daemon=True,
        )
        self._threads[job_id] = thread
        thread.start()
        return job

    def _run_job(
        self,
        job_id: str,
        argv: list[str],
        out_path: Path,
        out_meta: VideoMeta,
        class_filter: frozenset[int],
        expected_frames: frozenset[int] | None,
        on_success,
    ) -> None:
        self._update(job_id, state="running")
        log_lines: list[str] = []
        try:
            proc = subprocess.Popen(
                argv,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
            )
        except OSError as exc:
            self._update(job_id, state="failed", error=f"AdapterNotFound: {exc}")
            return

        for line in proc.stdout:
            line = line.rstrip("\n")
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                log_lines.append(line)
                self._update(job_id, log=tuple(log_lines))
                continue
            if isinstance(obj, dict) and isinstance(obj.get("progress"), int):
                self._update(job_id, progress_frames=obj["progress"])
            else:
                log_lines.append(line)
                self._update(job_id, log=tuple(log_lines))
        stderr = proc.stderr.read()
        rc = proc.wait()

        if rc != 0:
            self._update(
                job_id,
                state="failed",
                error=f"AdapterCrashed: exit {rc}: {stderr.strip()}",
                log=tuple(log_lines),
            )
            return

        try:
            detections = det_io.parse_detections_csv(out_path.read_bytes())
        except (OSError, ParseError) as exc:
            self._update(
                job_id,
                state="failed",
                error=f"InvalidAdapterOutput: {exc}",
                log=tuple(log_lines),
            )
            return

        extra = set(detections.class_names) - set(class_filter)
        if extra:
            self._update(
                job_id,
                state="failed",
                error=f"InvalidAdapterOutput: classes outside the filter: {sorted(extra)}",
                log=tuple(log_lines),
            )
            return

        if expected_frames is not None and len(detections):
            stray = {int(f) for f in detections.frames} - expected_frames
            if stray:
                self._update(
                    job_id,
                    state="failed",
                    error=(
                        "InvalidAdapterOutput: frames outside the skip list: "
                        f"{sorted(stray)[:10]}"
                    ),
                    log=tuple(log_lines),
                )
                return

        detections.video_meta = out_meta
        detections.class_filter = class_filter
        det_io.save_detections(detections, out_path)

        job = self._update(job_id, state="done", log=tuple(log_lines))
        if on_success is not None:
            on_success(job, detections)


def raise_job_error(job: TrackingJob) -> None:
    """Map a failed job back onto the typed errors (synchronous callers)."""
    if job.state != "failed" or not job.error:
        return
    code, _, message = job.error.partition(": ")
    exc_type = {
        "AdapterNotFound": AdapterNotFound,
        "AdapterCrashed": AdapterCrashed,
        "InvalidAdapterOutput": InvalidAdapterOutput,
    }.get(code, AdapterCrashed)
    raise exc_type(message or job.error)
