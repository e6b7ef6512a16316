"""Reference detector adapter for the gaze2aoi engine.

Speaks the batch adapter contract (argv in, detections CSV + JSON progress
lines out) and keeps all ML specifics - model choice, tracker selection,
weights - on this side of the process boundary.
"""

__version__ = "0.1.0"
