"""Acceptance suite: one test per release criterion, at its stated bound.

Run with ``pytest -s tests/test_acceptance.py`` to see one PASS line per
criterion.  Every expected value is either computed by an independent
brute-force oracle in ``oracles.py`` or frozen in ``tests/golden/`` (and the
golden values are themselves re-checked against the oracles here).
"""

from __future__ import annotations

import shlex
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

import oracles
from make_goldens import build_all, demo_label_store
from gaze2aoi import associate, cli, demo_session, det_io, gaze_io, keyframes
from gaze2aoi import labels as lb
from gaze2aoi import metrics as mx
from gaze2aoi import overlay
from gaze2aoi.associate import AssociationTable
from gaze2aoi.det_io import DetectionSet
from gaze2aoi.detector_bridge import JobManager, skip_list_from_gaze
from gaze2aoi.gaze_io import Fixation, GazeRecording, GazeSample, VideoMeta
from gaze2aoi.service import create_app, load_session

GOLDEN_DIR = Path(__file__).parent / "golden"
N_ORACLE_INSTANCES = 500
MOCK_CMD = f"{shlex.quote(sys.executable)} -m gaze2aoi.mock_adapter"


def _ok(name: str, detail: str = "") -> None:
    suffix = f" ({detail})" if detail else ""
    print(f"\nACCEPTANCE {name}: PASS{suffix}")


# ------------------------------------------------------------------ oracles


def test_oracle_equivalence_metrics():
    """compute_all equals the per-frame simulation oracle on 500 instances."""
    start = time.perf_counter()
    checked = 0
    for seed in range(N_ORACLE_INSTANCES):
        rec, det_rows, ds, meta = oracles.random_instance(seed)
        table = associate.associate_frames(rec, ds, meta)
        assignments = associate.assign_fixations(rec, ds, meta)
        gap = seed % 4
        rows, matrix = mx.compute_all(table, assignments, ds, meta.fps, gap)

        assoc_rows = [(r.frame_no, r.track_id, r.detected, r.gazed, r.fixated) for r in table]
        assign_rows = [(a.fixation_id, a.target) for a in assignments]
        exp_rows, exp_transitions = oracles.oracle_metrics(
            assoc_rows, assign_rows, det_rows, meta.fps, gap
        )

        assert len(rows) == len(exp_rows)
        for got, exp in zip(rows, exp_rows):
            assert (
                got.track_id, got.class_name, got.first_appearance_ms, got.ttff_ms,
                got.dwell_gaze_ms, got.dwell_fix_ms, got.fixation_count,
                got.visit_count, got.revisit_count,
            ) == (
                exp.track_id, exp.class_name, exp.first_appearance_ms, exp.ttff_ms,
                exp.dwell_gaze_ms, exp.dwell_fix_ms, exp.fixation_count,
                exp.visit_count, exp.revisit_count,
            )
        assert {(s, d): c for s, d, c in matrix.counts} == exp_transitions
        checked += 1
    elapsed = time.perf_counter() - start
    assert checked == N_ORACLE_INSTANCES
    assert elapsed < 60.0, f"oracle sweep took {elapsed:.1f}s"
    _ok("oracle-equivalence-metrics", f"{checked} instances in {elapsed:.1f}s")


def test_association_oracle():
    """associate_frames equals direct triple enumeration, exact equality."""
    for seed in range(N_ORACLE_INSTANCES):
        rec, det_rows, ds, meta = oracles.random_instance(seed)
        table = associate.associate_frames(rec, ds, meta)
        got = [(r.frame_no, r.track_id, r.detected, r.gazed, r.fixated) for r in table]
        assert got == oracles.oracle_associate(rec, det_rows, meta.fps)
    _ok("association-oracle", f"{N_ORACLE_INSTANCES} instances")


def test_tristate_contract():
    """gazed/fixated imply detected; flags are demonstrably independent."""
    for seed in range(100):
        rec, det_rows, ds, meta = oracles.random_instance(seed)
        table = associate.associate_frames(rec, ds, meta)
        # Rows exist exactly for detection keys, and detected is always set.
        assert [(int(f), int(t)) for f, t in zip(table.frames, table.track_ids)] == [
            (d.frame_no, d.track_id) for d in ds.detections
        ]
        for row in table:
            assert row.detected
            assert not row.gazed or row.detected
            assert not row.fixated or row.detected

    # Constructed counterexample: a tagged sample strays into the Window box
    # while its fixation centroid stays outside: gazed without fixated.
    rec = demo_session.recording()
    ds = demo_session.detection_set()
    table = associate.associate_frames(rec, ds, demo_session.video_meta())
    idx = next(
        i for i in range(len(table))
        if int(table.frames[i]) == 22 and int(table.track_ids[i]) == 2
    )
    assert bool(table.gazed[idx]) and not bool(table.fixated[idx])
    _ok("tri-state-contract", "flag independence shown on fixture frame 22")


def test_keyframe_rule():
    """Adjacent signatures differ; completeness against brute-force scan."""
    streams = 0
    for seed in range(200):
        _, det_rows, ds, _ = oracles.random_instance(seed)
        kfs = keyframes.extract_keyframes(ds)
        for a, b in zip(kfs, kfs[1:]):
            assert a.signature != b.signature
        assert [k.frame_no for k in kfs] == oracles.oracle_keyframes(det_rows)
        streams += 1
    assert streams == 200
    _ok("key-frame-rule", "200 random detection streams")


# -------------------------------------------------------------- round-trips


def test_round_trips_and_goldens():
    """parse -> write -> parse is identity; goldens are byte-stable."""
    rec = demo_session.recording()
    ds = demo_session.detection_set()
    store = demo_label_store()

    gaze_bytes = gaze_io.serialize_gaze_csv(rec)
    back = gaze_io.derive_fixations(gaze_io.parse_gaze_csv(gaze_bytes, rec.subject_id))
    assert back.samples == rec.samples
    assert back.fixations == rec.fixations
    assert gaze_io.serialize_gaze_csv(back) == gaze_bytes

    det_bytes = det_io.write_detections_csv(ds)
    assert det_io.parse_detections_csv(det_bytes) == ds
    assert det_io.write_detections_csv(det_io.parse_detections_csv(det_bytes)) == det_bytes

    label_bytes = lb.serialize_label_store(store)
    assert lb.parse_label_store(label_bytes) == store
    assert lb.serialize_label_store(lb.parse_label_store(label_bytes)) == label_bytes

    produced = build_all()
    for name, data in produced.items():
        golden = (GOLDEN_DIR / name).read_bytes()
        assert data == golden, f"{name} drifted from its golden file"

    # The golden metrics must equal the oracle's values, not just history.
    meta = demo_session.video_meta()
    table = associate.associate_frames(rec, ds, meta)
    assignments = associate.assign_fixations(rec, ds, meta)
    assoc_rows = [(r.frame_no, r.track_id, r.detected, r.gazed, r.fixated) for r in table]
    assign_rows = [(a.fixation_id, a.target) for a in assignments]
    exp_rows, _ = oracles.oracle_metrics(
        assoc_rows, assign_rows, ds.detections, meta.fps, 0
    )
    golden_lines = (GOLDEN_DIR / "metrics.csv").read_text().splitlines()[1:]
    for exp, line in zip(exp_rows, golden_lines):
        fields = line.split(",")
        assert int(fields[0]) == exp.track_id
        assert fields[4] == ("" if exp.ttff_ms is None else repr(exp.ttff_ms))
        assert fields[5] == repr(exp.dwell_gaze_ms)
    _ok("round-trips-and-goldens", f"{len(produced)} golden files")


# ------------------------------------------------------- optimisation paths


def _run_mock(tmp_path: Path, video: Path, skip=None, downsample=1) -> DetectionSet:
    manager = JobManager(MOCK_CMD, tmp_path / f"jobs-{len(list(tmp_path.iterdir()))}")
    job = manager.start_tracking(
        str(video), demo_session.video_meta(), {0, 1, 2, 4},
        skip_frames=skip, downsample_factor=downsample,
    )
    job = manager.wait(job.job_id, timeout=60)
    assert job.state == "done", job.error
    return det_io.load_detections(job.output_path)


def test_skip_frames_optimisation(tmp_path):
    """Restricting full-run detections to gazed frames equals the skip run."""
    from dataclasses import replace

    session_dir = demo_session.build_demo_session(tmp_path / "s")
    video = session_dir / "s01_video.rgbv"
    meta = demo_session.video_meta()
    # Gaze covering only the first second, so half the video is skippable.
    full_rec = demo_session.recording()
    rec = replace(
        full_rec,
        samples=tuple(s for s in full_rec.samples if s.timestamp_ms < 1000.0),
        fixations=tuple(f for f in full_rec.fixations if f.end_ms <= 1000.0),
    )
    skip = skip_list_from_gaze(rec, meta)
    assert skip == list(range(25)), "fixture must leave gaze-less frames"

    full = _run_mock(tmp_path, video)
    skipped = _run_mock(tmp_path, video, skip=skip)
    restricted = full.restrict_to_frames(skip)

    def _metrics_bytes(ds: DetectionSet) -> bytes:
        table = associate.associate_frames(rec, ds, meta)
        assignments = associate.assign_fixations(rec, ds, meta)
        rows, matrix = mx.compute_all(table, assignments, ds, meta.fps, 0)
        return mx.write_metrics_csv(rows) + mx.write_transitions_csv(matrix)

    assert det_io.write_detections_csv(restricted) == det_io.write_detections_csv(skipped)
    assert _metrics_bytes(restricted) == _metrics_bytes(skipped)
    _ok("skip-frames-optimisation", f"{len(skip)} gazed frames of {meta.frame_count}")


def test_downsample_identity(tmp_path):
    """factor=1 is the identity end to end: byte-equal exports."""
    session_dir = demo_session.build_demo_session(tmp_path / "s")
    conf = ["--config", str(session_dir / "gaze2aoi.conf")]
    video = str(session_dir / "s01_video.rgbv")
    gaze = str(session_dir / "s01_gaze.csv")

    outputs = {}
    for tag, extra in (("plain", []), ("ds1", ["--downsample", "1"])):
        d_csv = tmp_path / f"d-{tag}.csv"
        a_csv = tmp_path / f"a-{tag}.csv"
        m_csv = tmp_path / f"m-{tag}.csv"
        t_csv = tmp_path / f"t-{tag}.csv"
        meta_json = tmp_path / f"meta-{tag}.json"
        assert cli.main(["detect", "--video", video, "--classes", "0,1,2,4",
                         "--out", str(d_csv)] + extra + conf) == 0
        gaze_io.save_video_meta(det_io.load_detections(d_csv).video_meta, meta_json)
        assert cli.main(["associate", "--video-meta", str(meta_json), "--gaze", gaze,
                         "--detections", str(d_csv), "--out", str(a_csv)] + conf) == 0
        assert cli.main(["metrics", "--associations", str(a_csv), "--gaze", gaze,
                         "--detections", str(d_csv), "--out-metrics", str(m_csv),
                         "--out-transitions", str(t_csv)] + conf) == 0
        outputs[tag] = tuple(p.read_bytes() for p in (d_csv, a_csv, m_csv, t_csv))

    assert outputs["plain"] == outputs["ds1"]
    _ok("downsample-identity", "detect/associate/metrics byte-equal")


# ------------------------------------------------------------- performance


def _perf_instance(n_frames: int, n_tracks: int = 10, fps: float = 25.0, gaze_hz: float = 30.0):
    rng = np.random.default_rng(42)
    frames = np.repeat(np.arange(n_frames, dtype=np.int64), n_tracks)
    tracks = np.tile(np.arange(1, n_tracks + 1, dtype=np.int64), n_frames)
    x0 = rng.uniform(0, 1800, size=frames.shape)
    y0 = rng.uniform(0, 950, size=frames.shape)
    boxes = np.stack([x0, y0, x0 + rng.uniform(20, 120, size=frames.shape),
                      y0 + rng.uniform(20, 120, size=frames.shape)], axis=1)
    ds = DetectionSet(
        frames=frames,
        track_ids=tracks,
        class_ids=np.zeros_like(frames),
        boxes=boxes,
        confidences=np.full(frames.shape, 0.5),
        class_names={0: "Person"},
    )
    meta = VideoMeta(fps=fps, width_px=1920, height_px=1080, frame_count=n_frames)

    duration_ms = n_frames * 1000.0 / fps
    n_samples = int(duration_ms / 1000.0 * gaze_hz)
    ts = (np.arange(n_samples) + 0.5) * (1000.0 / gaze_hz)
    xs = rng.uniform(0, 1920, size=n_samples)
    ys = rng.uniform(0, 1080, size=n_samples)
    samples = tuple(
        GazeSample(timestamp_ms=float(t), x_px=float(x), y_px=float(y), valid=True)
        for t, x, y in zip(ts, xs, ys)
    )
    n_fix = max(1, int(duration_ms / 1300.0))
    starts = np.sort(rng.uniform(0, duration_ms - 400, size=n_fix))
    fixations = tuple(
        Fixation(fixation_id=i, start_ms=float(s), duration_ms=float(rng.uniform(80, 350)),
                 cx_px=float(rng.uniform(0, 1920)), cy_px=float(rng.uniform(0, 1080)))
        for i, s in enumerate(starts)
    )
    rec = GazeRecording("perf", samples=samples, fixations=fixations, sample_rate_hz=gaze_hz)
    return rec, ds, meta


def _timed_pipeline(rec, ds, meta) -> float:
    start = time.perf_counter()
    table = associate.associate_frames(rec, ds, meta)
    assignments = associate.assign_fixations(rec, ds, meta)
    rows, matrix = mx.compute_all(table, assignments, ds, meta.fps, 0)
    elapsed = time.perf_counter() - start
    assert len(rows) == 10
    return elapsed


def test_throughput():
    """100k frames x 10 tracks x 30 Hz gaze in < 5 s, scaling ~linearly."""
    timings = {}
    for n in (25_000, 50_000, 100_000):
        rec, ds, meta = _perf_instance(n)
        _ = _timed_pipeline(rec, ds, meta)  # warm-up: allocator and caches
        timings[n] = _timed_pipeline(rec, ds, meta)

    assert timings[100_000] < 5.0, f"100k frames took {timings[100_000]:.2f}s"
    # Linear scaling within generous slack: 4x the rows, at most ~8x the time.
    assert timings[100_000] <= 8 * max(timings[25_000], 1e-3)
    detail = ", ".join(f"{n // 1000}k={t:.2f}s" for n, t in timings.items())
    _ok("throughput", detail)


# ------------------------------------------------------------------ parity


def test_cli_service_parity(tmp_path):
    """CLI metrics.csv equals the service export byte for byte."""
    session_dir = demo_session.build_demo_session(tmp_path / "s")
    conf = ["--config", str(session_dir / "gaze2aoi.conf")]
    gaze = str(session_dir / "s01_gaze.csv")
    d_csv = str(session_dir / "detections.csv")
    a_csv = tmp_path / "a.csv"
    m_csv = tmp_path / "m.csv"
    t_csv = tmp_path / "t.csv"
    meta_json = tmp_path / "meta.json"
    gaze_io.save_video_meta(demo_session.video_meta(), meta_json)

    assert cli.main(["associate", "--video-meta", str(meta_json), "--gaze", gaze,
                     "--detections", d_csv, "--out", str(a_csv)] + conf) == 0
    assert cli.main(["metrics", "--associations", str(a_csv), "--gaze", gaze,
                     "--detections", d_csv, "--out-metrics", str(m_csv),
                     "--out-transitions", str(t_csv)] + conf) == 0

    session = load_session(session_dir)
    with TestClient(create_app(session)) as client:
        service_metrics = client.get("/api/export/metrics.csv").content
        service_transitions = client.get("/api/export/transitions.csv").content
        service_assoc = client.get("/api/export/associations.csv").content

    assert m_csv.read_bytes() == service_metrics
    assert t_csv.read_bytes() == service_transitions
    assert a_csv.read_bytes() == service_assoc
    _ok("cli-service-parity", "metrics/transitions/associations byte-equal")


def test_color_rule():
    """Overlay boxes are green exactly where the fixated flag is set."""
    rec = demo_session.recording()
    ds = demo_session.detection_set()
    meta = demo_session.video_meta()
    table = associate.associate_frames(rec, ds, meta)
    boxes_checked = 0
    for frame_no in range(meta.frame_count):
        commands = overlay.build_overlay(frame_no, table, ds, rec, None, meta)
        boxes = [c for c in commands if c.kind == "box"]
        sl = table.frame_slice(frame_no)
        assert len(boxes) == sl.stop - sl.start
        for cmd, fixated in zip(boxes, table.fixated[sl]):
            assert cmd.color == ("green" if fixated else "red")
            boxes_checked += 1
    assert boxes_checked == len(ds)
    _ok("color-rule", f"{boxes_checked} boxes over {meta.frame_count} frames")
