"""Tracking-model abstraction.

``TrackerModel`` is the seam the CLI runs against: tests inject a
deterministic fake, production uses ``UltralyticsTracker`` which wraps an
Ultralytics YOLO model with its built-in multi-object tracker (ByteTrack by
default; BoT-SORT via tracker config).  Weights must be available locally;
the adapter performs no downloads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol

import numpy as np


@dataclass(frozen=True)
class RawDetection:
    """One tracked box in the current frame, model-native values."""

    track_id: int
    class_id: int
    x_min: float
    y_min: float
    x_max: float
    y_max: float
    confidence: float


class TrackerModel(Protocol):
    @property
    def names(self) -> dict[int, str]:
        """class_id -> class_name for every class the model can emit."""

    def track(self, frame_rgb: np.ndarray, class_ids: list[int]) -> list[RawDetection]:
        """Detect and track on one frame, restricted to ``class_ids``."""


class UltralyticsTracker:
    """Wraps ``ultralytics.YOLO`` in streaming per-frame tracking mode."""

    def __init__(self, weights: str, tracker: str = "bytetrack.yaml"):
        try:
            from ultralytics import YOLO
        except ImportError as exc:
            raise RuntimeError(
                "ultralytics is not installed; install gaze2aoi-adapter[ml]"
            ) from exc
        self._model = YOLO(weights)
        self._tracker = tracker

    @property
    def names(self) -> dict[int, str]:
        return {int(k): str(v) for k, v in self._model.names.items()}

    def track(self, frame_rgb: np.ndarray, class_ids: list[int]) -> list[RawDetection]:
        results = self._model.track(
            frame_rgb[:, :, ::-1],  # model expects BGR
            persist=True,
            classes=class_ids,
            tracker=self._tracker,
            verbose=False,
        )
        out: list[RawDetection] = []
        boxes = results[0].boxes
        if boxes is None or boxes.id is None:
            return out
        for track_id, class_id, conf, xyxy in zip(
            boxes.id.tolist(), boxes.cls.tolist(), boxes.conf.tolist(), boxes.xyxy.tolist()
        ):
            out.append(
                RawDetection(
                    track_id=int(track_id),
                    class_id=int(class_id),
                    x_min=float(xyxy[0]),
                    y_min=float(xyxy[1]),
                    x_max=float(xyxy[2]),
                    y_max=float(xyxy[3]),
                    confidence=float(conf),
                )
            )
        return out
