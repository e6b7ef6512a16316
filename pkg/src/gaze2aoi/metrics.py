"""Per-AOI attention metrics and the session transition matrix.

All durations are frame-count based: a frame contributes 1000/fps ms.  TTFF
is measured from video start (frame 0); the AOI's own first appearance is
exported alongside so either convention can be formed by the analyst.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .associate import OUTSIDE, AssociationTable, FixationAssignment, Target
from .det_io import DetectionSet
from .errors import UnknownTrack

METRICS_CSV_HEADER = [
    "track_id",
    "class_name",
    "label",
    "first_appearance_ms",
    "ttff_ms",
    "dwell_gaze_ms",
    "dwell_fix_ms",
    "fixation_count",
    "visit_count",
    "revisit_count",
]

TRANSITIONS_CSV_HEADER = ["from", "to", "count"]


@dataclass(frozen=True)
class AOIMetrics:
    """Attention summary for one AOI track."""

    track_id: int
    class_name: str
    first_appearance_ms: float
    ttff_ms: float | None
    dwell_gaze_ms: float
    dwell_fix_ms: float
    fixation_count: int
    visit_count: int
    revisit_count: int


@dataclass(frozen=True)
class TransitionMatrix:
    """Counts of consecutive fixation pairs moving between targets.

    Self-transitions are excluded, so the diagonal is all zeros; only
    nonzero cells are stored.
    """

    nodes: tuple[Target, ...]
    counts: tuple[tuple[Target, Target, int], ...]

    def count(self, a: Target, b: Target) -> int:
        for src, dst, c in self.counts:
            if src == a and dst == b:
                return c
        return 0

    @property
    def total(self) -> int:
        return sum(c for _, _, c in self.counts)


def _node_key(node: Target) -> tuple[int, int]:
    if node == OUTSIDE:
        return (1, 0)
    return (0, int(node))


def _track_mask(table: AssociationTable, track_id: int) -> np.ndarray:
    mask = table.track_ids == track_id
    if not mask.any():
        raise UnknownTrack(f"track {track_id} has no association rows")
    return mask


def compute_ttff(associations, track_id: int, fps: float) -> float | None:
    """Time from video start to the first fixated frame; None if never."""
    table = AssociationTable.coerce(associations)
    mask = _track_mask(table, track_id)
    fix_frames = table.frames[mask & table.fixated]
    if fix_frames.size == 0:
        return None
    return (int(fix_frames.min()) * 1000.0) / fps


def compute_dwell(associations, track_id: int, fps: float) -> tuple[float, float]:
    """(gaze-based, fixation-based) dwell in ms for one track."""
    table = AssociationTable.coerce(associations)
    mask = _track_mask(table, track_id)
    n_gaze = int(np.count_nonzero(table.gazed & mask))
    n_fix = int(np.count_nonzero(table.fixated & mask))
    return (n_gaze * 1000.0) / fps, (n_fix * 1000.0) / fps


def _count_visits(fix_frames: np.ndarray, gap_frames: int) -> int:
    """``fix_frames`` must be sorted and duplicate-free."""
    if fix_frames.size == 0:
        return 0
    gaps = np.diff(fix_frames)
    return 1 + int(np.count_nonzero(gaps > gap_frames + 1))


def compute_visits(associations, track_id: int, gap_frames: int = 0) -> tuple[int, int]:
    """Count maximal fixated runs, merging runs separated by <= gap_frames."""
    if gap_frames < 0:
        raise ValueError("gap_frames must be >= 0")
    table = AssociationTable.coerce(associations)
    mask = _track_mask(table, track_id)
    fix_frames = np.sort(table.frames[mask & table.fixated])
    visits = _count_visits(fix_frames, gap_frames)
    return visits, max(visits - 1, 0)


def compute_transitions(
    assignments: list[FixationAssignment],
    nodes: list[Target] | None = None,
) -> TransitionMatrix:
    """Count target changes between consecutive fixations.

    ``assignments`` must be ordered by fixation start time.  ``nodes``
    defaults to the targets present plus OUTSIDE.
    """
    counts: dict[tuple[Target, Target], int] = {}
    for a, b in zip(assignments, assignments[1:]):
        if a.target != b.target:
            key = (a.target, b.target)
            counts[key] = counts.get(key, 0) + 1
    if nodes is None:
        node_set = {a.target for a in assignments} | {OUTSIDE}
    else:
        node_set = set(nodes) | {OUTSIDE}
    ordered = tuple(sorted(node_set, key=_node_key))
    cells = tuple(
        (src, dst, counts[(src, dst)])
        for src, dst in sorted(counts, key=lambda k: (_node_key(k[0]), _node_key(k[1])))
    )
    return TransitionMatrix(nodes=ordered, counts=cells)


def compute_all(
    associations,
    assignments: list[FixationAssignment],
    detection_set: DetectionSet,
    fps: float,
    gap_frames: int = 0,
) -> tuple[list[AOIMetrics], TransitionMatrix]:
    """One AOIMetrics per track in the detection set, plus the transitions."""
    table = AssociationTable.coerce(associations)
    tracks = detection_set.track_list()

    fix_count: dict[int, int] = {t: 0 for t in tracks}
    for a in assignments:
        if a.target != OUTSIDE:
            fix_count[int(a.target)] = fix_count.get(int(a.target), 0) + 1

    results: list[AOIMetrics] = []
    for t in tracks:
        mask = table.track_ids == t
        frames_t = table.frames[mask]
        if frames_t.size == 0:
            raise UnknownTrack(f"track {t} present in detections but not associations")
        fix_frames = np.sort(frames_t[table.fixated[mask]])
        n_gaze = int(np.count_nonzero(table.gazed[mask]))
        n_fix = int(fix_frames.size)
        visits = _count_visits(fix_frames, gap_frames)
        results.append(
            AOIMetrics(
                track_id=t,
                class_name=detection_set.class_name_of_track(t),
                first_appearance_ms=(int(frames_t.min()) * 1000.0) / fps,
                ttff_ms=(int(fix_frames.min()) * 1000.0) / fps if n_fix else None,
                dwell_gaze_ms=(n_gaze * 1000.0) / fps,
                dwell_fix_ms=(n_fix * 1000.0) / fps,
                fixation_count=fix_count.get(t, 0),
                visit_count=visits,
                revisit_count=max(visits - 1, 0),
            )
        )

    matrix = compute_transitions(assignments, nodes=list(tracks) + [OUTSIDE])
    return results, matrix


# ------------------------------------------------------------------- export


def _fmt_ms(value: float | None) -> str:
    return "" if value is None else repr(value)


def write_metrics_csv(rows: list[AOIMetrics], label_lookup=None) -> bytes:
    """Metrics export; the label column is each track's final label."""
    out = io.StringIO(newline="")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(METRICS_CSV_HEADER)
    for m in rows:
        label = label_lookup(m.track_id) if label_lookup is not None else None
        writer.writerow(
            [
                m.track_id,
                m.class_name,
                "" if label is None else label,
                _fmt_ms(m.first_appearance_ms),
                _fmt_ms(m.ttff_ms),
                _fmt_ms(m.dwell_gaze_ms),
                _fmt_ms(m.dwell_fix_ms),
                m.fixation_count,
                m.visit_count,
                m.revisit_count,
            ]
        )
    return out.getvalue().encode("utf-8")


def write_transitions_csv(matrix: TransitionMatrix, include_outside: bool = True) -> bytes:
    """Long-form nonzero transition counts, sorted by (from, to)."""
    out = io.StringIO(newline="")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TRANSITIONS_CSV_HEADER)
    for src, dst, count in matrix.counts:
        if not include_outside and (src == OUTSIDE or dst == OUTSIDE):
            continue
        writer.writerow([src, dst, count])
    return out.getvalue().encode("utf-8")
