"""Figure rendering for the report path.

``write_report`` drops the delimited exports next to a small set of figures
summarising the session: a transition-matrix heatmap, per-AOI dwell bars and
an attention timeline of fixated frame runs.  Figures are PNG at a fixed
dpi; the CSVs come straight from the canonical serializers.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import associate, labels as lb, metrics as mx
from .associate import OUTSIDE, AssociationTable
from .det_io import DetectionSet

FIG_DPI = 120


def _node_label(node) -> str:
    return str(node)


def fig_transition_heatmap(matrix: mx.TransitionMatrix) -> plt.Figure:
    nodes = list(matrix.nodes)
    n = len(nodes)
    table = np.zeros((n, n), dtype=int)
    index = {node: i for i, node in enumerate(nodes)}
    for src, dst, count in matrix.counts:
        table[index[src], index[dst]] = count

    fig, ax = plt.subplots(figsize=(1.2 + 0.6 * n, 1.0 + 0.6 * n))
    im = ax.imshow(table, cmap="viridis")
    ax.set_xticks(range(n), [_node_label(x) for x in nodes], rotation=45, ha="right")
    ax.set_yticks(range(n), [_node_label(x) for x in nodes])
    ax.set_xlabel("to")
    ax.set_ylabel("from")
    ax.set_title("Fixation transitions")
    for i in range(n):
        for j in range(n):
            if table[i, j]:
                ax.text(j, i, str(table[i, j]), ha="center", va="center", color="w")
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    return fig


def fig_dwell_bars(rows: list[mx.AOIMetrics]) -> plt.Figure:
    names = [f"{m.track_id}: {m.class_name}" for m in rows]
    gaze = [m.dwell_gaze_ms for m in rows]
    fix = [m.dwell_fix_ms for m in rows]
    y = np.arange(len(rows))

    fig, ax = plt.subplots(figsize=(7, 1.0 + 0.5 * max(1, len(rows))))
    ax.barh(y - 0.2, gaze, height=0.4, label="gaze dwell", color="#4878d0")
    ax.barh(y + 0.2, fix, height=0.4, label="fixation dwell", color="#ee854a")
    ax.set_yticks(y, names)
    ax.invert_yaxis()
    ax.set_xlabel("dwell (ms)")
    ax.set_title("Dwell per AOI")
    ax.legend(loc="lower right")
    fig.tight_layout()
    return fig


def fig_attention_timeline(
    table: AssociationTable, detection_set: DetectionSet, fps: float
) -> plt.Figure:
    tracks = detection_set.track_list()
    fig, ax = plt.subplots(figsize=(8, 1.0 + 0.45 * max(1, len(tracks))))
    for row, track in enumerate(tracks):
        mask = table.track_ids == track
        frames = table.frames[mask]
        if frames.size:
            ax.broken_barh(
                _runs(np.sort(frames)), (row - 0.35, 0.7), color="#dddddd"
            )
        fix_frames = np.sort(table.frames[mask & table.fixated])
        if fix_frames.size:
            ax.broken_barh(_runs(fix_frames), (row - 0.35, 0.7), color="#2ca02c")
    ax.set_yticks(
        range(len(tracks)),
        [f"{t}: {detection_set.class_name_of_track(t)}" for t in tracks],
    )
    ax.invert_yaxis()
    ax.set_xlabel(f"frame (fps={fps:g})")
    ax.set_title("Detected (grey) and fixated (green) frames per AOI")
    fig.tight_layout()
    return fig


def _runs(frames: np.ndarray) -> list[tuple[int, int]]:
    """Sorted frame numbers -> (start, length) spans of consecutive runs."""
    spans: list[tuple[int, int]] = []
    start = prev = int(frames[0])
    for f in frames[1:]:
        f = int(f)
        if f == prev + 1:
            prev = f
            continue
        spans.append((start, prev - start + 1))
        start = prev = f
    spans.append((start, prev - start + 1))
    return spans


def write_report(
    out_dir: str | Path,
    table: AssociationTable,
    detection_set: DetectionSet,
    rows: list[mx.AOIMetrics],
    matrix: mx.TransitionMatrix,
    store: lb.LabelStore | None = None,
    fps: float | None = None,
) -> list[Path]:
    """Write metrics/transitions/associations CSVs plus the figures."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    fps = fps if fps is not None else detection_set.video_meta.fps

    written: list[Path] = []

    def _put(name: str, data: bytes) -> None:
        path = out / name
        path.write_bytes(data)
        written.append(path)

    label_of = (lambda t: lb.final_label(store, t)) if store is not None else None
    _put("metrics.csv", mx.write_metrics_csv(rows, label_lookup=label_of))
    _put("transitions.csv", mx.write_transitions_csv(matrix))
    effective = (
        (lambda t, f: lb.effective_label(store, t, f)) if store is not None else None
    )
    _put(
        "associations.csv",
        associate.write_associations_csv(table, detection_set, label_lookup=effective),
    )

    for name, fig in (
        ("transitions.png", fig_transition_heatmap(matrix)),
        ("dwell.png", fig_dwell_bars(rows)),
        ("timeline.png", fig_attention_timeline(table, detection_set, fps)),
    ):
        path = out / name
        fig.savefig(path, dpi=FIG_DPI)
        plt.close(fig)
        written.append(path)
    return written
