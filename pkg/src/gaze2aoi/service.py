"""HTTP API powering the labelling UI.

One service process hosts one session (a directory described by
``session.json``).  All analytics are computed by the library modules and
cached; export endpoints return the exact serializer bytes, so CSV downloads
are byte-equal to the CLI pipeline on the same inputs.

The service holds no state outside the session directory: labels and the
active-detections pointer are files, so a restart replays identical
payloads.
"""

from __future__ import annotations

import io
import json
import os
import shlex
import subprocess
import threading
from pathlib import Path

import numpy as np
from fastapi import FastAPI, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, StreamingResponse
from PIL import Image
from pydantic import BaseModel

from . import associate, det_io, detector_bridge, gaze_io, keyframes as kf, labels as lb
from . import metrics as mx
from . import overlay as ov
from . import rawvideo
from .config import Config
from .errors import (
    FileUnreadable,
    FrameOutOfRange,
    Gaze2AOIError,
    ParseError,
)

WEBUI_DIR_ENV = "GAZE2AOI_WEBUI_DIR"

_STATUS_BY_CODE = {
    "UnknownTrack": 404,
    "UnknownJob": 404,
    "FrameOutOfRange": 404,
    "BeforeFirstKeyFrame": 404,
    "FileUnreadable": 404,
    "UnknownVideoFormat": 404,
    "NotAKeyFrame": 409,
    "EmptyLabel": 422,
    "EmptyClassFilter": 422,
    "UnknownClass": 422,
    "NothingToProcess": 422,
    "AdapterNotFound": 422,
    "ConfigError": 422,
}


def _status_of(exc: Gaze2AOIError) -> int:
    if isinstance(exc, ParseError):
        return 422
    return _STATUS_BY_CODE.get(exc.code, 500)


class SubjectCheck:
    def __init__(self, by_file: dict[str, str | None]):
        self.by_file = by_file
        ids = {s for s in by_file.values() if s is not None}
        self.ok = len(ids) <= 1

    def to_json_obj(self) -> dict:
        return {
            "status": "ok" if self.ok else "mismatch",
            "subjects": self.by_file,
        }


class Session:
    """All loaded artefacts of one session directory plus derived caches."""

    def __init__(self, session_dir: str | Path, config: Config):
        self.dir = Path(session_dir)
        self.config = config
        self.lock = threading.RLock()

        spec_path = self.dir / "session.json"
        if not spec_path.exists():
            raise FileUnreadable(f"missing {spec_path}")
        spec = json.loads(spec_path.read_text(encoding="utf-8"))
        self.session_id = spec.get("session_id", self.dir.name)

        self.video_path = self._resolve(spec, "video", required=True)
        self.video_meta = rawvideo.probe_video(self.video_path)
        gaze_path = self._resolve(spec, "gaze", required=True)

        subject = config.subject_of(gaze_path.name)
        try:
            recording = gaze_io.parse_gaze_csv(gaze_path.read_bytes(), subject or "")
        except OSError as exc:
            raise FileUnreadable(f"cannot read gaze file: {exc}") from exc
        recording = gaze_io.derive_fixations(recording)
        self.recording = gaze_io.apply_offset(recording, config.gaze_offset_ms)

        self.manifest: det_io.ClassManifest | None = None
        classes_path = self._resolve(spec, "classes")
        if classes_path is not None:
            self.manifest = det_io.parse_class_manifest(
                classes_path.read_bytes(), source=str(classes_path)
            )

        self.labels_path = self.dir / spec.get("labels", "labels.json")
        if self.labels_path.exists():
            self.label_store = lb.load_label_store(self.labels_path)
        else:
            self.label_store = lb.LabelStore(session_id=self.session_id)

        self.detections: det_io.DetectionSet | None = None
        self.detections_path: Path | None = None
        self.downsample_factor = 1
        pointer = self.dir / "active_detections.json"
        initial = None
        if pointer.exists():
            state = json.loads(pointer.read_text(encoding="utf-8"))
            initial = self.dir / state["path"]
            self.downsample_factor = int(state.get("downsample_factor", 1))
        else:
            initial = self._resolve(spec, "detections")
        if initial is not None:
            self._load_detections(initial)

        files = {str(self.video_path.name): config.subject_of(self.video_path.name),
                 str(gaze_path.name): config.subject_of(gaze_path.name)}
        if self.detections_path is not None:
            files[str(self.detections_path.name)] = config.subject_of(
                self.detections_path.name
            )
        self.subject_check = SubjectCheck(files)

        self.jobs = detector_bridge.JobManager(config.adapter_cmd, self.dir / "jobs")
        self._invalidate()

    def _resolve(self, spec: dict, key: str, required: bool = False) -> Path | None:
        rel = spec.get(key)
        if rel is None:
            if required:
                raise FileUnreadable(f"session.json lacks {key!r}")
            return None
        path = self.dir / rel
        if not path.exists():
            raise FileUnreadable(f"{key} file not found: {path}")
        return path

    # ----------------------------------------------------------- detections

    def _load_detections(self, path: Path) -> None:
        detections = det_io.load_detections(path)
        if detections.video_meta is None:
            detections.video_meta = gaze_io.downsample_meta(
                self.video_meta, self.downsample_factor
            )
        self.detections = detections
        self.detections_path = path

    def adopt_detections(self, path: Path, downsample_factor: int = 1) -> None:
        """Switch the active detection set (called when a job finishes)."""
        with self.lock:
            self.downsample_factor = downsample_factor
            self._load_detections(path)
            pointer = self.dir / "active_detections.json"
            state = {
                "path": str(path.relative_to(self.dir)),
                "downsample_factor": downsample_factor,
            }
            pointer.write_text(
                json.dumps(state, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
            self._invalidate()

    def _invalidate(self) -> None:
        self._assoc: associate.AssociationTable | None = None
        self._assignments: list[associate.FixationAssignment] | None = None
        self._keyframes: list[kf.KeyFrame] | None = None
        self._metrics: tuple | None = None

    @property
    def analysis_meta(self) -> gaze_io.VideoMeta:
        if self.detections is not None and self.detections.video_meta is not None:
            return self.detections.video_meta
        return self.video_meta

    def associations(self) -> associate.AssociationTable:
        with self.lock:
            if self._assoc is None:
                dets = self.detections or det_io.DetectionSet.empty(self.video_meta)
                self._assoc = associate.associate_frames(
                    self.recording, dets, self.analysis_meta
                )
            return self._assoc

    def assignments(self) -> list[associate.FixationAssignment]:
        with self.lock:
            if self._assignments is None:
                dets = self.detections or det_io.DetectionSet.empty(self.video_meta)
                self._assignments = associate.assign_fixations(
                    self.recording, dets, self.analysis_meta
                )
            return self._assignments

    def keyframes(self) -> list[kf.KeyFrame]:
        with self.lock:
            if self._keyframes is None:
                dets = self.detections or det_io.DetectionSet.empty(self.video_meta)
                self._keyframes = kf.extract_keyframes(dets, self.config.keyframe_rule)
            return self._keyframes

    def metrics(self) -> tuple[list[mx.AOIMetrics], mx.TransitionMatrix]:
        with self.lock:
            if self._metrics is None:
                dets = self.detections or det_io.DetectionSet.empty(self.video_meta)
                self._metrics = mx.compute_all(
                    self.associations(),
                    self.assignments(),
                    dets,
                    self.analysis_meta.fps,
                    self.config.gap_frames,
                )
            return self._metrics

    # --------------------------------------------------------------- labels

    def put_label(self, track_id: int, from_frame: int, text: str) -> None:
        with self.lock:
            dets = self.detections
            valid_tracks = set(dets.track_list()) if dets is not None else set()
            frames = {k.frame_no for k in self.keyframes()}
            self.label_store = lb.put_label(
                self.label_store,
                track_id,
                from_frame,
                text,
                valid_tracks=valid_tracks,
                keyframe_frames=frames,
            )
            lb.save_label_store(self.label_store, self.labels_path)

    def remove_label(self, track_id: int, from_frame: int) -> None:
        with self.lock:
            self.label_store = lb.remove_label(self.label_store, track_id, from_frame)
            lb.save_label_store(self.label_store, self.labels_path)

    # --------------------------------------------------------------- frames

    def frame_image(self, frame_no: int) -> np.ndarray:
        meta = self.analysis_meta
        if not 0 <= frame_no < meta.frame_count:
            raise FrameOutOfRange(f"frame {frame_no} outside [0, {meta.frame_count})")
        original = frame_no * self.downsample_factor
        original = min(original, self.video_meta.frame_count - 1)
        if rawvideo.is_rgbv(self.video_path):
            return rawvideo.read_rgbv_frame(self.video_path, original)
        return self._decode_frame(original)

    def _decode_frame(self, frame_no: int) -> np.ndarray:
        meta = self.video_meta
        argv = [
            part.format(
                input=str(self.video_path),
                width=meta.width_px,
                height=meta.height_px,
                fps=meta.fps,
            )
            for part in shlex.split(self.config.decoder_cmd)
        ]
        size = meta.width_px * meta.height_px * 3
        proc = subprocess.Popen(argv, stdout=subprocess.PIPE, stderr=subprocess.DEVNULL)
        try:
            for _ in range(frame_no):
                skipped = proc.stdout.read(size)
                if len(skipped) != size:
                    raise FrameOutOfRange(f"decoder ended before frame {frame_no}")
            data = proc.stdout.read(size)
            if len(data) != size:
                raise FrameOutOfRange(f"decoder ended before frame {frame_no}")
        finally:
            proc.stdout.close()
            proc.terminate()
            proc.wait()
        return np.frombuffer(data, dtype=np.uint8).reshape(meta.height_px, meta.width_px, 3)


class TrackRequest(BaseModel):
    class_ids: list[int]
    skip_ungazed: bool = False
    downsample: int = 1


class LabelRequest(BaseModel):
    from_frame: int
    text: str


def _job_json(job: detector_bridge.TrackingJob) -> dict:
    return {
        "job_id": job.job_id,
        "state": job.state,
        "progress_frames": job.progress_frames,
        "output_path": job.output_path,
        "class_ids": sorted(job.class_filter),
        "downsample_factor": job.downsample_factor,
        "error": job.error,
        "log": list(job.log),
    }


def create_app(session: Session) -> FastAPI:
    app = FastAPI(title="gaze2aoi", version="0.1.0")

    @app.exception_handler(Gaze2AOIError)
    async def engine_error(_req: Request, exc: Gaze2AOIError):
        return JSONResponse(
            status_code=_status_of(exc),
            content={"code": exc.code, "message": str(exc)},
        )

    @app.exception_handler(RequestValidationError)
    async def validation_error(_req: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=422,
            content={"code": "ValidationError", "message": str(exc.errors())},
        )

    def _csv(data: bytes) -> StreamingResponse:
        return StreamingResponse(io.BytesIO(data), media_type="text/csv")

    @app.get("/api/session")
    def session_summary():
        dets = session.detections
        return {
            "session_id": session.session_id,
            "subject_check": session.subject_check.to_json_obj(),
            "video": {
                "fps": session.video_meta.fps,
                "width_px": session.video_meta.width_px,
                "height_px": session.video_meta.height_px,
                "frame_count": session.video_meta.frame_count,
            },
            "gaze": {
                "subject_id": session.recording.subject_id,
                "samples": len(session.recording.samples),
                "fixations": len(session.recording.fixations),
                "sample_rate_hz": session.recording.sample_rate_hz,
            },
            "detections": None
            if dets is None
            else {
                "rows": len(dets),
                "tracks": dets.track_list(),
                "path": str(session.detections_path.name),
                "downsample_factor": session.downsample_factor,
            },
            "keyframes": len(session.keyframes()),
            "labels": len(session.label_store.entries),
        }

    @app.get("/api/classes")
    def classes(letter: str | None = None):
        if session.manifest is None:
            return []
        entries = sorted(session.manifest.entries, key=lambda e: e[1].lower())
        if letter:
            prefix = letter.lower()
            entries = [e for e in entries if e[1].lower().startswith(prefix)]
        return [{"class_id": cid, "class_name": name} for cid, name in entries]

    @app.post("/api/jobs/track")
    def start_track(req: TrackRequest):
        skip = None
        if req.skip_ungazed:
            skip = detector_bridge.skip_list_from_gaze(
                session.recording, session.video_meta
            )

        def on_success(job, _detections):
            session.adopt_detections(Path(job.output_path), job.downsample_factor)

        job = session.jobs.start_tracking(
            str(session.video_path),
            session.video_meta,
            set(req.class_ids),
            manifest=session.manifest,
            skip_frames=skip,
            downsample_factor=req.downsample,
            on_success=on_success,
        )
        return {"job_id": job.job_id}

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str):
        return _job_json(session.jobs.poll_job(job_id))

    @app.get("/api/keyframes")
    def keyframes_endpoint():
        return Response(
            content=kf.write_keyframes_json(session.keyframes()),
            media_type="application/json",
        )

    @app.get("/api/frames/{frame_no}/image")
    def frame_image(frame_no: int):
        frame = session.frame_image(frame_no)
        buf = io.BytesIO()
        Image.fromarray(frame, mode="RGB").save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    @app.get("/api/frames/{frame_no}/overlay")
    def frame_overlay(frame_no: int):
        dets = session.detections or det_io.DetectionSet.empty(session.video_meta)
        commands = ov.build_overlay(
            frame_no,
            session.associations(),
            dets,
            session.recording,
            session.label_store,
            session.analysis_meta,
        )
        return [c.to_json_obj() for c in commands]

    @app.get("/api/frames/{frame_no}/objects")
    def frame_objects(frame_no: int):
        meta = session.analysis_meta
        if not 0 <= frame_no < meta.frame_count:
            raise FrameOutOfRange(f"frame {frame_no} outside [0, {meta.frame_count})")
        dets = session.detections
        if dets is None:
            return []
        table = session.associations()
        sl = table.frame_slice(frame_no)
        det_sl = dets.frame_slice(frame_no)
        out = []
        for a_idx, d_idx in zip(range(sl.start, sl.stop), range(det_sl.start, det_sl.stop)):
            track = int(table.track_ids[a_idx])
            out.append(
                {
                    "track_id": track,
                    "class_name": dets.class_names[int(dets.class_ids[d_idx])],
                    "gazed": bool(table.gazed[a_idx]),
                    "fixated": bool(table.fixated[a_idx]),
                    "effective_label": lb.effective_label(
                        session.label_store, track, frame_no
                    ),
                }
            )
        return out

    @app.put("/api/labels/{track_id}", status_code=204)
    def put_label(track_id: int, req: LabelRequest):
        session.put_label(track_id, req.from_frame, req.text)
        return Response(status_code=204)

    @app.delete("/api/labels/{track_id}", status_code=204)
    def delete_label(track_id: int, from_frame: int):
        session.remove_label(track_id, from_frame)
        return Response(status_code=204)

    @app.get("/api/export/associations.csv")
    def export_associations():
        dets = session.detections or det_io.DetectionSet.empty(session.video_meta)
        data = associate.write_associations_csv(
            session.associations(),
            dets,
            label_lookup=lambda track, frame: lb.effective_label(
                session.label_store, track, frame
            ),
        )
        return _csv(data)

    @app.get("/api/export/metrics.csv")
    def export_metrics(labelled_only: bool = False):
        rows, _ = session.metrics()
        if labelled_only:
            rows = lb.filter_unlabelled(rows, session.label_store)
        data = mx.write_metrics_csv(
            rows, label_lookup=lambda track: lb.final_label(session.label_store, track)
        )
        return _csv(data)

    @app.get("/api/export/transitions.csv")
    def export_transitions(include_outside: bool = True):
        _, matrix = session.metrics()
        return _csv(mx.write_transitions_csv(matrix, include_outside=include_outside))

    @app.get("/api/export/labels.json")
    def export_labels():
        return Response(
            content=lb.serialize_label_store(session.label_store),
            media_type="application/json",
        )

    _mount_webui(app)
    return app


def _mount_webui(app: FastAPI) -> None:
    webui = os.environ.get(WEBUI_DIR_ENV)
    if webui and Path(webui).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=webui, html=True), name="webui")


def load_session(session_dir: str | Path, config: Config | None = None) -> Session:
    """Build a session; config resolution prefers the session's own file."""
    session_dir = Path(session_dir)
    if config is None:
        spec_path = session_dir / "session.json"
        conf_rel = None
        if spec_path.exists():
            conf_rel = json.loads(spec_path.read_text(encoding="utf-8")).get("config")
        from .config import load_config

        config = load_config(session_dir / conf_rel if conf_rel else None)
    return Session(session_dir, config)


def create_session(
    video_path: str | Path,
    gaze_path: str | Path,
    detections_path: str | Path | None = None,
    *,
    classes_path: str | Path | None = None,
    session_dir: str | Path | None = None,
    session_id: str | None = None,
    config: Config | None = None,
) -> Session:
    """Assemble a session directory from loose files and load it.

    Files stay where they are (absolute paths go into session.json); only
    the session descriptor and the label store live in the directory.  A
    subject mismatch between the file names is recorded, not fatal.
    """
    import tempfile

    session_dir = Path(session_dir or tempfile.mkdtemp(prefix="gaze2aoi-session-"))
    session_dir.mkdir(parents=True, exist_ok=True)
    spec: dict = {
        "session_id": session_id or session_dir.name,
        "video": str(Path(video_path).resolve()),
        "gaze": str(Path(gaze_path).resolve()),
        "labels": "labels.json",
    }
    if detections_path is not None:
        spec["detections"] = str(Path(detections_path).resolve())
    if classes_path is not None:
        spec["classes"] = str(Path(classes_path).resolve())
    (session_dir / "session.json").write_text(
        json.dumps(spec, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return Session(session_dir, config if config is not None else Config())
