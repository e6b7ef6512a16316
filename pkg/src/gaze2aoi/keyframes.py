"""Key-frame extraction for the labelling review flow.

A key-frame marks a change in what is on screen.  Under the default
``signature_change`` rule a frame is selected when its multiset of detected
class names differs from the most recent key-frame's; the alternative
``new_object_only`` rule fires only when some class gains an instance, so
disappearances do not trigger.  Frames without detections are never
key-frames and do not reset the comparison.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass

from .det_io import DetectionSet
from .errors import BeforeFirstKeyFrame

KEYFRAME_RULES = ("signature_change", "new_object_only")


@dataclass(frozen=True)
class KeyFrame:
    """A review point: the class-name multiset and tracks visible there."""

    frame_no: int
    signature: tuple[str, ...]
    track_ids: tuple[int, ...]


def _frame_groups(detection_set: DetectionSet):
    """Yield (frame_no, class name multiset, track ids) per detected frame."""
    names = detection_set.class_names
    i = 0
    n = len(detection_set)
    while i < n:
        frame = int(detection_set.frames[i])
        sig: Counter[str] = Counter()
        tracks: list[int] = []
        while i < n and int(detection_set.frames[i]) == frame:
            sig[names[int(detection_set.class_ids[i])]] += 1
            tracks.append(int(detection_set.track_ids[i]))
            i += 1
        yield frame, sig, tracks


def _gained(sig: Counter, reference: Counter) -> bool:
    return any(count > reference.get(name, 0) for name, count in sig.items())


def extract_keyframes(
    detection_set: DetectionSet, rule: str = "signature_change"
) -> list[KeyFrame]:
    """Scan frames in order and select the review frames per ``rule``.

    ``signature_change`` compares each frame with the most recent key-frame;
    ``new_object_only`` compares with the previous detected frame, so an
    object re-entering the scene counts as newly detected.
    """
    if rule not in KEYFRAME_RULES:
        raise ValueError(f"unknown keyframe rule {rule!r}")
    keyframes: list[KeyFrame] = []
    last_kf_sig: Counter[str] | None = None
    prev_sig: Counter[str] | None = None
    for frame, sig, tracks in _frame_groups(detection_set):
        if last_kf_sig is None:
            selected = True
        elif rule == "signature_change":
            selected = sig != last_kf_sig
        else:
            selected = _gained(sig, prev_sig)
        if selected:
            keyframes.append(
                KeyFrame(
                    frame_no=frame,
                    signature=tuple(sorted(sig.elements())),
                    track_ids=tuple(sorted(tracks)),
                )
            )
            last_kf_sig = sig
        prev_sig = sig
    return keyframes


def keyframe_for(frame_no: int, keyframes: list[KeyFrame]) -> KeyFrame:
    """The latest key-frame at or before ``frame_no``."""
    if not keyframes or frame_no < keyframes[0].frame_no:
        raise BeforeFirstKeyFrame(f"frame {frame_no} precedes the first key-frame")
    idx = bisect_right([k.frame_no for k in keyframes], frame_no) - 1
    return keyframes[idx]


def write_keyframes_json(keyframes: list[KeyFrame]) -> bytes:
    payload = [
        {
            "frame": k.frame_no,
            "classes": list(k.signature),
            "track_ids": list(k.track_ids),
        }
        for k in keyframes
    ]
    return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")


def parse_keyframes_json(data: bytes) -> list[KeyFrame]:
    payload = json.loads(data.decode("utf-8"))
    return [
        KeyFrame(
            frame_no=int(item["frame"]),
            signature=tuple(item["classes"]),
            track_ids=tuple(int(t) for t in item["track_ids"]),
        )
        for item in payload
    ]
