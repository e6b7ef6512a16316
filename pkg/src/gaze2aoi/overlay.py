"""Per-frame draw commands and the annotated-video render pipeline.

The engine decides geometry and color here (pure, testable); pixel pushing
is delegated to external decoder/encoder processes exchanging raw 8-bit RGB
frames over pipes.  Command templates carry ``{input}``, ``{output}``,
``{width}``, ``{height}`` and ``{fps}`` placeholders.

Color coding follows the review convention: an AOI box is green exactly when
the frame's fixation point lies inside it, red otherwise; the fixation
itself is a small purple dot.
"""

from __future__ import annotations

import shlex
import subprocess
import threading
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from PIL import Image, ImageDraw

from .associate import AssociationTable, active_fixation
from .det_io import DetectionSet
from .errors import DecoderFailed, EncoderFailed, FrameOutOfRange
from .gaze_io import GazeRecording, VideoMeta
from .labels import LabelStore, effective_label

DEFAULT_COLORS: dict[str, tuple[int, int, int]] = {
    "green": (0, 200, 0),
    "red": (220, 0, 0),
    "purple": (160, 32, 240),
}

BOX_STROKE_PX = 2
DOT_RADIUS_PX = 6


@dataclass(frozen=True)
class DrawCommand:
    """One primitive: a colored box (with caption), dot, or free text."""

    kind: str  # box | dot | text
    color: str  # green | red | purple
    x_min: float = 0.0
    y_min: float = 0.0
    x_max: float = 0.0
    y_max: float = 0.0
    cx: float = 0.0
    cy: float = 0.0
    radius: float = 0.0
    caption: str | None = None

    def to_json_obj(self) -> dict:
        if self.kind == "box":
            geometry = {
                "x_min": self.x_min,
                "y_min": self.y_min,
                "x_max": self.x_max,
                "y_max": self.y_max,
            }
        elif self.kind == "dot":
            geometry = {"cx": self.cx, "cy": self.cy, "radius": self.radius}
        else:
            geometry = {"cx": self.cx, "cy": self.cy}
        return {
            "kind": self.kind,
            "color": self.color,
            "geometry": geometry,
            "caption": self.caption,
        }


def build_overlay(
    frame_no: int,
    associations: AssociationTable,
    detection_set: DetectionSet,
    recording: GazeRecording,
    store: LabelStore | None,
    video_meta: VideoMeta,
) -> list[DrawCommand]:
    """Draw commands for one frame: boxes color-coded by the fixated flag,
    captions carrying the class name plus any effective label, and the
    active fixation dot."""
    if not 0 <= frame_no < video_meta.frame_count:
        raise FrameOutOfRange(f"frame {frame_no} outside [0, {video_meta.frame_count})")

    commands: list[DrawCommand] = []
    sl = associations.frame_slice(frame_no)
    det_sl = detection_set.frame_slice(frame_no)
    if (sl.stop - sl.start) != (det_sl.stop - det_sl.start):
        raise ValueError("association rows do not mirror detection rows")
    for a_idx, d_idx in zip(range(sl.start, sl.stop), range(det_sl.start, det_sl.stop)):
        track = int(associations.track_ids[a_idx])
        if track != int(detection_set.track_ids[d_idx]):
            raise ValueError("association rows do not mirror detection rows")
        class_name = detection_set.class_names[int(detection_set.class_ids[d_idx])]
        label = effective_label(store, track, frame_no) if store is not None else None
        caption = class_name if label is None else f"{class_name} — {label}"
        x0, y0, x1, y1 = detection_set.boxes[d_idx]
        commands.append(
            DrawCommand(
                kind="box",
                color="green" if associations.fixated[a_idx] else "red",
                x_min=float(x0),
                y_min=float(y0),
                x_max=float(x1),
                y_max=float(y1),
                caption=caption,
            )
        )

    fixation = active_fixation(recording, frame_no, video_meta.fps)
    if fixation is not None:
        commands.append(
            DrawCommand(
                kind="dot",
                color="purple",
                cx=fixation.cx_px,
                cy=fixation.cy_px,
                radius=float(DOT_RADIUS_PX),
            )
        )
    return commands


def rasterize(
    frame: np.ndarray,
    commands: Sequence[DrawCommand],
    colors: Mapping[str, tuple[int, int, int]] = DEFAULT_COLORS,
) -> np.ndarray:
    """Burn draw commands into an (H, W, 3) uint8 RGB frame."""
    image = Image.fromarray(frame, mode="RGB")
    draw = ImageDraw.Draw(image)
    for cmd in commands:
        rgb = tuple(colors[cmd.color])
        if cmd.kind == "box":
            x0, y0 = round(cmd.x_min), round(cmd.y_min)
            x1, y1 = round(cmd.x_max), round(cmd.y_max)
            draw.rectangle([x0, y0, x1, y1], outline=rgb, width=BOX_STROKE_PX)
            if cmd.caption:
                ty = y0 - 11 - 2  # default bitmap font is 11 px tall
                draw.text((x0, max(0, ty)), cmd.caption, fill=rgb)
        elif cmd.kind == "dot":
            r = cmd.radius
            draw.ellipse(
                [round(cmd.cx - r), round(cmd.cy - r), round(cmd.cx + r), round(cmd.cy + r)],
                fill=rgb,
            )
        elif cmd.kind == "text":
            if cmd.caption:
                draw.text((round(cmd.cx), round(cmd.cy)), cmd.caption, fill=rgb)
        else:
            raise ValueError(f"unknown draw command kind {cmd.kind!r}")
    return np.asarray(image)


def _format_cmd(template: str, **values) -> list[str]:
    return [part.format(**values) for part in shlex.split(template)]


def _drain(stream, chunks: list[bytes]) -> None:
    chunks.append(stream.read())


def render_annotated_video(
    video_path: str,
    video_meta: VideoMeta,
    overlays: Mapping[int, Sequence[DrawCommand]],
    decoder_cmd: str,
    encoder_cmd: str,
    out_path: str,
    colors: Mapping[str, tuple[int, int, int]] = DEFAULT_COLORS,
) -> int:
    """Decode, burn overlays, re-encode.  Returns the frame count written.

    Frames flow decoder -> rasterize -> encoder strictly in order; overlay
    lookups are by frame number, frames without commands pass through
    untouched.
    """
    w, h, fps = video_meta.width_px, video_meta.height_px, video_meta.fps
    size = w * h * 3
    dec_argv = _format_cmd(decoder_cmd, input=video_path, width=w, height=h, fps=fps)
    enc_argv = _format_cmd(encoder_cmd, output=out_path, width=w, height=h, fps=fps)

    try:
        decoder = subprocess.Popen(dec_argv, stdout=subprocess.PIPE, stderr=subprocess.PIPE)
    except OSError as exc:
        raise DecoderFailed(f"cannot start decoder {dec_argv[0]!r}: {exc}") from exc
    try:
        encoder = subprocess.Popen(enc_argv, stdin=subprocess.PIPE, stderr=subprocess.PIPE)
    except OSError as exc:
        decoder.kill()
        decoder.wait()
        raise EncoderFailed(f"cannot start encoder {enc_argv[0]!r}: {exc}") from exc

    dec_err: list[bytes] = []
    enc_err: list[bytes] = []
    t_dec = threading.Thread(target=_drain, args=(decoder.stderr, dec_err), daemon=True)
    t_enc = threading.Thread(target=_drain, args=(encoder.stderr, enc_err), daemon=True)
    t_dec.start()
    t_enc.start()

    frame_no = 0
    try:
        while True:
            data = decoder.stdout.read(size)
            if not data:
                break
            if len(data) != size:
                raise DecoderFailed(f"decoder produced a truncated frame ({len(data)} bytes)")
            commands = overlays.get(frame_no)
            if commands:
                frame = np.frombuffer(data, dtype=np.uint8).reshape(h, w, 3).copy()
                data = rasterize(frame, commands, colors).tobytes()
            encoder.stdin.write(data)
            frame_no += 1
        encoder.stdin.close()
        dec_rc = decoder.wait()
        enc_rc = encoder.wait()
    except BrokenPipeError as exc:
        decoder.kill()
        decoder.wait()
        encoder.wait()
        t_enc.join()
        raise EncoderFailed(
            f"encoder exited early: {b''.join(enc_err).decode(errors='replace').strip()}"
        ) from exc
    finally:
        t_dec.join(timeout=5)
        t_enc.join(timeout=5)

    if dec_rc != 0:
        raise DecoderFailed(
            f"decoder exit {dec_rc}: {b''.join(dec_err).decode(errors='replace').strip()}"
        )
    if enc_rc != 0:
        raise EncoderFailed(
            f"encoder exit {enc_rc}: {b''.join(enc_err).decode(errors='replace').strip()}"
        )
    return frame_no
