from __future__ import annotations

import json
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fake_model import FakeModel  # noqa: E402


@pytest.fixture()
def fake_model():
    return FakeModel()


@pytest.fixture()
def clip_10s(tmp_path) -> Path:
    """A 10-second 25 fps rgbv clip (250 frames, 16x12)."""
    path = tmp_path / "clip.rgbv"
    header = {"magic": "rgbv1", "width": 16, "height": 12, "fps": 25.0, "frame_count": 250}
    with open(path, "wb") as fh:
        fh.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for i in range(250):
            fh.write(np.full((12, 16, 3), i % 256, dtype=np.uint8).tobytes())
    return path
