"""Human-entered AOI labels with key-frame-scoped overrides.

An entry applies to its track from its key-frame forward until a later entry
supersedes it, so both paper-style uses work: naming an AOI once for the
whole track, and correcting a misdetection from a given point on.

The store persists as one JSON file per session, written atomically
(temp-then-rename) so a crash never leaves a corrupt file.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from pathlib import Path

from .errors import EmptyLabel, NotAKeyFrame, UnknownTrack


@dataclass(frozen=True)
class LabelEntry:
    track_id: int
    from_frame: int
    text: str
    author: str | None = None
    entered_at: str = ""


@dataclass(frozen=True)
class LabelStore:
    """All label entries of a session, ordered by (track_id, from_frame)."""

    session_id: str
    entries: tuple[LabelEntry, ...] = ()

    def entries_for(self, track_id: int) -> list[LabelEntry]:
        return [e for e in self.entries if e.track_id == track_id]

    def labelled_tracks(self) -> set[int]:
        return {e.track_id for e in self.entries}


def _now_iso() -> str:
    return datetime.now(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def put_label(
    store: LabelStore,
    track_id: int,
    from_frame: int,
    text: str,
    *,
    valid_tracks: set[int] | None = None,
    keyframe_frames: set[int] | None = None,
    author: str | None = None,
    entered_at: str | None = None,
) -> LabelStore:
    """Insert or replace the entry for (track_id, from_frame).

    ``valid_tracks``/``keyframe_frames`` carry the session context the
    checks run against; pass None to skip a check (batch tooling).
    """
    text = text.strip()
    if not text:
        raise EmptyLabel("label text is empty")
    if valid_tracks is not None and track_id not in valid_tracks:
        raise UnknownTrack(f"track {track_id} not in the active detection set")
    if keyframe_frames is not None and from_frame not in keyframe_frames:
        raise NotAKeyFrame(f"frame {from_frame} is not a key-frame")
    entry = LabelEntry(
        track_id=track_id,
        from_frame=from_frame,
        text=text,
        author=author,
        entered_at=entered_at if entered_at is not None else _now_iso(),
    )
    kept = [
        e for e in store.entries
        if not (e.track_id == track_id and e.from_frame == from_frame)
    ]
    kept.append(entry)
    kept.sort(key=lambda e: (e.track_id, e.from_frame))
    return replace(store, entries=tuple(kept))


def remove_label(store: LabelStore, track_id: int, from_frame: int) -> LabelStore:
    """Drop the entry for (track_id, from_frame); error if absent."""
    kept = [
        e for e in store.entries
        if not (e.track_id == track_id and e.from_frame == from_frame)
    ]
    if len(kept) == len(store.entries):
        raise UnknownTrack(f"no label for track {track_id} at frame {from_frame}")
    return replace(store, entries=tuple(kept))


def effective_label(store: LabelStore, track_id: int, frame_no: int) -> str | None:
    """Text of the entry with the largest from_frame <= frame_no, if any."""
    best: LabelEntry | None = None
    for e in store.entries:
        if e.track_id == track_id and e.from_frame <= frame_no:
            if best is None or e.from_frame > best.from_frame:
                best = e
    return best.text if best else None


def final_label(store: LabelStore, track_id: int) -> str | None:
    """The label in force at the end of the video (largest from_frame)."""
    entries = store.entries_for(track_id)
    return entries[-1].text if entries else None


def filter_unlabelled(metrics_rows: list, store: LabelStore) -> list:
    """Keep only metric rows whose track carries at least one label."""
    labelled = store.labelled_tracks()
    return [m for m in metrics_rows if m.track_id in labelled]


# -------------------------------------------------------------- persistence


def serialize_label_store(store: LabelStore) -> bytes:
    payload = {
        "session_id": store.session_id,
        "entries": [
            {
                "track_id": e.track_id,
                "from_frame": e.from_frame,
                "text": e.text,
                "author": e.author,
                "entered_at": e.entered_at,
            }
            for e in store.entries
        ],
    }
    return (json.dumps(payload, indent=2, sort_keys=True) + "\n").encode("utf-8")


def parse_label_store(data: bytes) -> LabelStore:
    payload = json.loads(data.decode("utf-8"))
    entries = tuple(
        LabelEntry(
            track_id=int(e["track_id"]),
            from_frame=int(e["from_frame"]),
            text=e["text"],
            author=e.get("author"),
            entered_at=e.get("entered_at", ""),
        )
        for e in payload.get("entries", [])
    )
    return LabelStore(session_id=payload["session_id"], entries=entries)


def save_label_store(store: LabelStore, path: str | Path) -> None:
    """Atomic write: temp file in the same directory, then rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(serialize_label_store(store))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_label_store(path: str | Path) -> LabelStore:
    return parse_label_store(Path(path).read_bytes())
