from __future__ import annotations

import subprocess
import sys

import numpy as np
import pytest

from gaze2aoi import rawvideo
from gaze2aoi.errors import UnknownVideoFormat
from gaze2aoi.gaze_io import VideoMeta

META = VideoMeta(fps=10.0, width_px=8, height_px=6, frame_count=4)


def _frames():
    for i in range(META.frame_count):
        yield np.full((6, 8, 3), i * 10, dtype=np.uint8)


@pytest.fixture()
def rgbv_path(tmp_path):
    path = tmp_path / "clip.rgbv"
    rawvideo.write_rgbv(path, META, _frames())
    return path


class TestContainer:
    def test_meta_round_trip(self, rgbv_path):
        meta = rawvideo.read_rgbv_meta(rgbv_path)
        assert (meta.fps, meta.width_px, meta.height_px, meta.frame_count) == (10.0, 8, 6, 4)

    def test_iteration(self, rgbv_path):
        frames = list(rawvideo.iter_rgbv_frames(rgbv_path))
        assert len(frames) == 4
        assert frames[2][0, 0, 0] == 20

    def test_random_access(self, rgbv_path):
        frame = rawvideo.read_rgbv_frame(rgbv_path, 3)
        assert frame[0, 0, 0] == 30
        with pytest.raises(IndexError):
            rawvideo.read_rgbv_frame(rgbv_path, 4)

    def test_frame_count_mismatch_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            rawvideo.write_rgbv(tmp_path / "bad.rgbv", META, list(_frames())[:2])


class TestProbe:
    def test_probe_rgbv(self, rgbv_path):
        assert rawvideo.probe_video(rgbv_path).frame_count == 4

    def test_probe_sidecar(self, tmp_path):
        video = tmp_path / "clip.bin"
        video.write_bytes(b"opaque")
        (tmp_path / "clip.bin.meta.json").write_text(META.to_json())
        assert rawvideo.probe_video(video) == VideoMeta(
            fps=10.0, width_px=8, height_px=6, frame_count=4
        )

    def test_probe_unknown(self, tmp_path):
        video = tmp_path / "clip.bin"
        video.write_bytes(b"opaque")
        with pytest.raises(UnknownVideoFormat):
            rawvideo.probe_video(video)

    def test_probe_missing_file(self, tmp_path):
        with pytest.raises(UnknownVideoFormat):
            rawvideo.probe_video(tmp_path / "missing.rgbv")


class TestPipeCli:
    def test_decode_encode_round_trip(self, rgbv_path, tmp_path):
        decoded = subprocess.run(
            [sys.executable, "-m", "gaze2aoi.rawvideo", "decode", "--input", str(rgbv_path)],
            capture_output=True,
            check=True,
        ).stdout
        assert len(decoded) == 4 * 8 * 6 * 3

        out_path = tmp_path / "out.rgbv"
        subprocess.run(
            [
                sys.executable, "-m", "gaze2aoi.rawvideo", "encode",
                "--output", str(out_path), "--width", "8", "--height", "6", "--fps", "10",
            ],
            input=decoded,
            check=True,
        )
        frames = list(rawvideo.iter_rgbv_frames(out_path))
        assert len(frames) == 4
        assert all(
            np.array_equal(a, b) for a, b in zip(frames, rawvideo.iter_rgbv_frames(rgbv_path))
        )

    def test_probe_cli(self, rgbv_path):
        out = subprocess.run(
            [sys.executable, "-m", "gaze2aoi.rawvideo", "probe", "--input", str(rgbv_path)],
            capture_output=True,
            check=True,
        ).stdout
        assert b'"frame_count": 4' in out
