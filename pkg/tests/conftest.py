from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gaze2aoi import demo_session


@pytest.fixture(scope="session")
def demo_dir(tmp_path_factory) -> Path:
    """Shared read-only demo session directory."""
    path = tmp_path_factory.mktemp("demo-session")
    return demo_session.build_demo_session(path)


@pytest.fixture()
def fresh_demo_dir(tmp_path) -> Path:
    """Per-test demo session for flows that mutate labels or detections."""
    return demo_session.build_demo_session(tmp_path / "session")


@pytest.fixture(scope="session")
def demo_parts():
    """In-memory demo artefacts: (recording, detection_set, video_meta)."""
    return (
        demo_session.recording(),
        demo_session.detection_set(),
        demo_session.video_meta(),
    )
