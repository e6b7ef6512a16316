"""Self-describing raw RGB video container plus the pipe codec CLI.

The render pipeline exchanges frames with external decoder/encoder processes
as raw 8-bit RGB, row-major.  For tests, fixtures and offline use this module
provides a trivial container (``.rgbv``): one JSON header line followed by
the concatenated frames.  ``python -m gaze2aoi.rawvideo decode|encode`` turns
it into a decoder/encoder pair that satisfies the pipe contract without any
codec dependency; production setups point the config at ffmpeg instead.
"""

from __future__ import annotations

import argparse
import json
import shutil
import sys
import tempfile
from pathlib import Path

import numpy as np

from .errors import UnknownVideoFormat
from .gaze_io import VideoMeta

MAGIC = "rgbv1"


def frame_nbytes(width: int, height: int) -> int:
    return width * height * 3


def write_rgbv(path: str | Path, meta: VideoMeta, frames) -> None:
    """Write frames (HxWx3 uint8 arrays or raw bytes) under a JSON header."""
    header = {
        "magic": MAGIC,
        "width": meta.width_px,
        "height": meta.height_px,
        "fps": meta.fps,
        "frame_count": meta.frame_count,
    }
    size = frame_nbytes(meta.width_px, meta.height_px)
    count = 0
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
        for frame in frames:
            data = frame.tobytes() if isinstance(frame, np.ndarray) else bytes(frame)
            if len(data) != size:
                raise ValueError(f"frame {count}: {len(data)} bytes, expected {size}")
            fh.write(data)
            count += 1
    if count != meta.frame_count:
        raise ValueError(f"wrote {count} frames, header says {meta.frame_count}")


def _read_header(fh) -> tuple[dict, int]:
    line = fh.readline()
    try:
        header = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise UnknownVideoFormat(f"not an rgbv file: {exc}") from exc
    if header.get("magic") != MAGIC:
        raise UnknownVideoFormat(f"bad magic {header.get('magic')!r}")
    return header, len(line)


def read_rgbv_meta(path: str | Path) -> VideoMeta:
    with open(path, "rb") as fh:
        header, _ = _read_header(fh)
    return VideoMeta(
        fps=float(header["fps"]),
        width_px=int(header["width"]),
        height_px=int(header["height"]),
        frame_count=int(header["frame_count"]),
    )


def iter_rgbv_frames(path: str | Path):
    """Yield frames as (H, W, 3) uint8 arrays."""
    with open(path, "rb") as fh:
        header, _ = _read_header(fh)
        w, h = int(header["width"]), int(header["height"])
        size = frame_nbytes(w, h)
        while True:
            data = fh.read(size)
            if not data:
                break
            if len(data) != size:
                raise UnknownVideoFormat("truncated rgbv frame")
            yield np.frombuffer(data, dtype=np.uint8).reshape(h, w, 3)


def read_rgbv_frame(path: str | Path, frame_no: int) -> np.ndarray:
    """Random access to one frame."""
    with open(path, "rb") as fh:
        header, offset = _read_header(fh)
        w, h = int(header["width"]), int(header["height"])
        count = int(header["frame_count"])
        if not 0 <= frame_no < count:
            raise IndexError(f"frame {frame_no} outside [0, {count})")
        size = frame_nbytes(w, h)
        fh.seek(offset + frame_no * size)
        data = fh.read(size)
        if len(data) != size:
            raise UnknownVideoFormat("truncated rgbv frame")
        return np.frombuffer(data, dtype=np.uint8).reshape(h, w, 3)


def is_rgbv(path: str | Path) -> bool:
    try:
        with open(path, "rb") as fh:
            _read_header(fh)
        return True
    except (UnknownVideoFormat, OSError):
        return False


def probe_video(path: str | Path) -> VideoMeta:
    """Resolve a video's shape: rgbv header, ``.meta.json`` sidecar, or cv2.

    The sidecar convention covers containers we do not parse ourselves.
    """
    path = Path(path)
    if not path.exists():
        raise UnknownVideoFormat(f"no such video: {path}")
    if is_rgbv(path):
        return read_rgbv_meta(path)
    sidecar = Path(str(path) + ".meta.json")
    if sidecar.exists():
        return VideoMeta.from_json(sidecar.read_text(encoding="utf-8"))
    try:
        import cv2
    except ImportError:
        cv2 = None
    if cv2 is not None:
        cap = cv2.VideoCapture(str(path))
        if cap.isOpened():
            meta = VideoMeta(
                fps=float(cap.get(cv2.CAP_PROP_FPS)),
                width_px=int(cap.get(cv2.CAP_PROP_FRAME_WIDTH)),
                height_px=int(cap.get(cv2.CAP_PROP_FRAME_HEIGHT)),
                frame_count=int(cap.get(cv2.CAP_PROP_FRAME_COUNT)),
            )
            cap.release()
            if meta.fps > 0 and meta.frame_count > 0:
                return meta
    raise UnknownVideoFormat(
        f"cannot determine video shape of {path}; provide {path}.meta.json"
    )


# ----------------------------------------------------------------- pipe CLI


def _cmd_decode(args) -> int:
    out = sys.stdout.buffer
    for frame in iter_rgbv_frames(args.input):
        out.write(frame.tobytes())
    out.flush()
    return 0


def _cmd_encode(args) -> int:
    size = frame_nbytes(args.width, args.height)
    count = 0
    with tempfile.NamedTemporaryFile(dir=Path(args.output).parent, delete=False) as tmp:
        while True:
            data = sys.stdin.buffer.read(size)
            if not data:
                break
            if len(data) != size:
                print("truncated frame on stdin", file=sys.stderr)
                return 1
            tmp.write(data)
            count += 1
        tmp.flush()
        header = {
            "magic": MAGIC,
            "width": args.width,
            "height": args.height,
            "fps": args.fps,
            "frame_count": count,
        }
        with open(args.output, "wb") as out:
            out.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
            tmp.seek(0)
            shutil.copyfileobj(tmp, out)
    Path(tmp.name).unlink(missing_ok=True)
    return 0


def _cmd_probe(args) -> int:
    meta = probe_video(args.input)
    sys.stdout.write(meta.to_json())
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="gaze2aoi.rawvideo")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decode", help="rgbv file -> raw RGB frames on stdout")
    p.add_argument("--input", required=True)
    p.set_defaults(func=_cmd_decode)

    p = sub.add_parser("encode", help="raw RGB frames on stdin -> rgbv file")
    p.add_argument("--output", required=True)
    p.add_argument("--width", type=int, required=True)
    p.add_argument("--height", type=int, required=True)
    p.add_argument("--fps", type=float, required=True)
    p.set_defaults(func=_cmd_encode)

    p = sub.add_parser("probe", help="print video meta JSON")
    p.add_argument("--input", required=True)
    p.set_defaults(func=_cmd_probe)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
