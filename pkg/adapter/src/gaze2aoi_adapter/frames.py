"""Video frame sources.

Two backends: OpenCV for real containers (mp4 and friends), and a built-in
reader for the ``.rgbv`` raw-RGB container the engine uses for fixtures and
offline tests (one JSON header line, then width*height*3 bytes per frame).
Frames are yielded as (H, W, 3) uint8 RGB arrays.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterator

import numpy as np


class VideoOpenError(RuntimeError):
    pass


def _read_rgbv_header(fh) -> dict:
    line = fh.readline()
    try:
        header = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise VideoOpenError(f"not an rgbv file: {exc}") from exc
    if header.get("magic") != "rgbv1":
        raise VideoOpenError(f"bad rgbv magic: {header.get('magic')!r}")
    return header


def _is_rgbv(path: Path) -> bool:
    try:
        with open(path, "rb") as fh:
            _read_rgbv_header(fh)
        return True
    except (VideoOpenError, OSError):
        return False


def _iter_rgbv(path: Path) -> Iterator[np.ndarray]:
    with open(path, "rb") as fh:
        header = _read_rgbv_header(fh)
        w, h = int(header["width"]), int(header["height"])
        size = w * h * 3
        while True:
            data = fh.read(size)
            if not data:
                return
            if len(data) != size:
                raise VideoOpenError("truncated rgbv frame")
            yield np.frombuffer(data, dtype=np.uint8).reshape(h, w, 3)


def _iter_cv2(path: Path) -> Iterator[np.ndarray]:
    try:
        import cv2
    except ImportError as exc:
        raise VideoOpenError(
            f"cannot read {path}: OpenCV is not installed and the file is not rgbv"
        ) from exc
    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise VideoOpenError(f"cannot open video: {path}")
    try:
        while True:
            ok, frame = cap.read()
            if not ok:
                return
            yield frame[:, :, ::-1]  # BGR -> RGB
    finally:
        cap.release()


def iter_frames(path: str | Path) -> Iterator[np.ndarray]:
    path = Path(path)
    if not path.exists():
        raise VideoOpenError(f"video not found: {path}")
    if _is_rgbv(path):
        return _iter_rgbv(path)
    return _iter_cv2(path)
