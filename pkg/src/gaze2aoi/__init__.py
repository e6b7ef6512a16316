"""Gaze2AOI: fuse per-frame object tracks with eye-tracking data into labelled AOIs.

The package is organised as a library plus a CLI (``gaze2aoi``) and an HTTP
service for the labelling front-end.  Core data flows:

    gaze CSV ──parse──► GazeRecording ─┐
                                       ├─► associate ─► metrics / overlay
    detections CSV ──► DetectionSet ───┘        │
                                                └─► keyframes ─► labels
"""

__version__ = "0.1.0"

from .errors import Gaze2AOIError

__all__ = ["Gaze2AOIError", "__version__"]
