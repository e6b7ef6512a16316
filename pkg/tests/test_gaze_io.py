from __future__ import annotations

import math

import pytest
from hypothesis import given, strategies as st

from gaze2aoi import gaze_io
from gaze2aoi.errors import (
    EmptyRecording,
    InterleavedFixation,
    MalformedRow,
    NonMonotoneTimestamp,
)

HEADER = "timestamp_ms,gaze_x,gaze_y,validity,fixation_id\n"


def _csv(rows: str) -> bytes:
    return (HEADER + rows).encode("utf-8")


class TestParseGazeCsv:
    def test_header_only_is_empty_recording(self):
        with pytest.raises(EmptyRecording):
            gaze_io.parse_gaze_csv(_csv(""), "s01")

    def test_sample_rate_from_median_gap(self):
        rec = gaze_io.parse_gaze_csv(_csv("0,1,1,1,\n10,2,2,1,\n20,3,3,1,\n"), "s01")
        assert rec.sample_rate_hz == 100.0

    def test_invalid_row_with_blank_coordinates_is_kept(self):
        rec = gaze_io.parse_gaze_csv(_csv("0,1,1,1,\n10,,,0,\n"), "s01")
        assert len(rec.samples) == 2
        s = rec.samples[1]
        assert not s.valid
        assert s.x_px is None and s.y_px is None

    def test_valid_row_with_blank_coordinates_rejected(self):
        with pytest.raises(MalformedRow):
            gaze_io.parse_gaze_csv(_csv("0,,,1,\n"), "s01")

    def test_non_monotone_timestamps_rejected(self):
        with pytest.raises(NonMonotoneTimestamp):
            gaze_io.parse_gaze_csv(_csv("0,1,1,1,\n10,1,1,1,\n10,1,1,1,\n"), "s01")

    def test_malformed_row_reports_row_number(self):
        with pytest.raises(MalformedRow) as err:
            gaze_io.parse_gaze_csv(_csv("0,1,1,1,\nnope,1,1,1,\n"), "s01")
        assert err.value.row == 3

    def test_bad_header_rejected(self):
        with pytest.raises(MalformedRow):
            gaze_io.parse_gaze_csv(b"t,x,y,v,f\n0,1,1,1,\n", "s01")

    def test_bad_validity_rejected(self):
        with pytest.raises(MalformedRow):
            gaze_io.parse_gaze_csv(_csv("0,1,1,2,\n"), "s01")

    def test_subject_id_carried(self):
        rec = gaze_io.parse_gaze_csv(_csv("0,1,1,1,\n"), "s07")
        assert rec.subject_id == "s07"


class TestRoundTrip:
    def test_serialize_parse_preserves_fields(self):
        rows = "0.0,10.5,20.25,1,1\n16.6,11.0,21.0,1,1\n33.9,,,0,\n50.1,12.75,22.5,1,\n"
        rec = gaze_io.parse_gaze_csv(_csv(rows), "s01")
        back = gaze_io.parse_gaze_csv(gaze_io.serialize_gaze_csv(rec), "s01")
        assert back.samples == rec.samples
        assert back.sample_rate_hz == rec.sample_rate_hz

    def test_serialization_is_byte_stable(self):
        rec = gaze_io.parse_gaze_csv(_csv("0,1.5,2.5,1,3\n10,2.5,3.5,1,3\n"), "s01")
        assert gaze_io.serialize_gaze_csv(rec) == gaze_io.serialize_gaze_csv(rec)


class TestDeriveFixations:
    def test_two_sample_fixation(self):
        rec = gaze_io.parse_gaze_csv(_csv("0,10,10,1,1\n10,20,20,1,1\n"), "s01")
        rec = gaze_io.derive_fixations(rec)
        (fx,) = rec.fixations
        assert fx.start_ms == 0.0
        assert fx.duration_ms == 20.0
        assert (fx.cx_px, fx.cy_px) == (15.0, 15.0)

    def test_no_tags_means_no_fixations(self):
        rec = gaze_io.parse_gaze_csv(_csv("0,1,1,1,\n10,2,2,1,\n"), "s01")
        assert gaze_io.derive_fixations(rec).fixations == ()

    def test_interleaved_ids_rejected(self):
        rec = gaze_io.parse_gaze_csv(
            _csv("0,1,1,1,1\n10,2,2,1,2\n20,3,3,1,1\n"), "s01"
        )
        with pytest.raises(InterleavedFixation):
            gaze_io.derive_fixations(rec)

    def test_untagged_gap_does_not_split_a_run(self):
        rec = gaze_io.parse_gaze_csv(
            _csv("0,10,10,1,1\n10,0,0,1,\n20,20,20,1,1\n"), "s01"
        )
        rec = gaze_io.derive_fixations(rec)
        assert len(rec.fixations) == 1
        assert rec.fixations[0].duration_ms == 30.0

    def test_all_invalid_fixation_dropped_with_warning(self, caplog):
        rec = gaze_io.parse_gaze_csv(_csv("0,,,0,1\n10,,,0,1\n20,5,5,1,\n"), "s01")
        with caplog.at_level("WARNING"):
            rec = gaze_io.derive_fixations(rec)
        assert rec.fixations == ()
        assert any("no valid samples" in r.message for r in caplog.records)
        # Invariant restored: no sample references a missing fixation.
        assert all(s.fixation_id is None for s in rec.samples)

    def test_centroid_uses_only_valid_samples(self):
        rec = gaze_io.parse_gaze_csv(
            _csv("0,10,10,1,1\n10,,,0,1\n20,30,30,1,1\n"), "s01"
        )
        rec = gaze_io.derive_fixations(rec)
        assert (rec.fixations[0].cx_px, rec.fixations[0].cy_px) == (20.0, 20.0)

    def test_fixation_intervals_disjoint_and_ordered(self):
        rows = "".join(
            f"{t},5,5,1,{fid}\n"
            for t, fid in [(0, 1), (10, 1), (30, 2), (40, 2), (60, 3)]
        )
        rec = gaze_io.derive_fixations(gaze_io.parse_gaze_csv(_csv(rows), "s01"))
        spans = [(f.start_ms, f.end_ms) for f in rec.fixations]
        assert spans == sorted(spans)
        for (_, end), (start, _) in zip(spans, spans[1:]):
            assert end <= start


class TestTimeToFrame:
    def test_zero(self):
        assert gaze_io.time_to_frame(0.0, 25.0) == 0

    def test_exact_boundary_belongs_to_later_frame(self):
        assert gaze_io.time_to_frame(1000.0, 25.0) == 25

    def test_inside_first_frame(self):
        assert gaze_io.time_to_frame(39.9, 25.0) == 0

    @given(
        n=st.integers(min_value=0, max_value=100_000),
        fps=st.sampled_from([10.0, 24.0, 25.0, 29.97, 30.0, 50.0, 60.0, 120.0]),
        u=st.floats(min_value=0.01, max_value=0.99),
    )
    def test_window_ownership(self, n, fps, u):
        t_ms = ((n + u) / fps) * 1000.0
        assert gaze_io.time_to_frame(t_ms, fps) == n

    @given(
        t1=st.floats(min_value=0, max_value=1e7),
        t2=st.floats(min_value=0, max_value=1e7),
        fps=st.floats(min_value=1.0, max_value=240.0),
    )
    def test_monotone(self, t1, t2, fps):
        lo, hi = sorted([t1, t2])
        assert gaze_io.time_to_frame(lo, fps) <= gaze_io.time_to_frame(hi, fps)


class TestFramesWithGaze:
    def _rec(self, rows):
        return gaze_io.parse_gaze_csv(_csv(rows), "s01")

    def test_first_second_of_25fps(self):
        rows = "".join(f"{t},5,5,1,\n" for t in range(0, 1000, 10))
        meta = gaze_io.VideoMeta(fps=25.0, width_px=10, height_px=10, frame_count=100)
        assert gaze_io.frames_with_gaze(self._rec(rows), meta) == list(range(25))

    def test_all_invalid_gives_empty(self):
        meta = gaze_io.VideoMeta(fps=25.0, width_px=10, height_px=10, frame_count=100)
        assert gaze_io.frames_with_gaze(self._rec("0,,,0,\n10,,,0,\n"), meta) == []

    def test_exact_second_boundary(self):
        meta = gaze_io.VideoMeta(fps=25.0, width_px=10, height_px=10, frame_count=100)
        assert gaze_io.frames_with_gaze(self._rec("1000,5,5,1,\n"), meta) == [25]

    def test_samples_past_video_end_ignored(self):
        meta = gaze_io.VideoMeta(fps=25.0, width_px=10, height_px=10, frame_count=10)
        assert gaze_io.frames_with_gaze(self._rec("2000,5,5,1,\n"), meta) == []


class TestDownsample:
    def test_factor_one_is_identity(self, demo_parts):
        rec, _, meta = demo_parts
        rec2, meta2 = gaze_io.downsample(rec, meta, 1)
        assert rec2 is rec
        assert meta2 is meta

    def test_factor_two_halves_fps(self):
        meta = gaze_io.VideoMeta(fps=30.0, width_px=10, height_px=10, frame_count=101)
        _, meta2 = gaze_io.downsample(
            gaze_io.GazeRecording("s", samples=()), meta, 2
        )
        assert meta2.fps == 15.0
        assert meta2.frame_count == math.ceil(101 / 2)

    def test_factor_beyond_frame_count(self):
        rows = "0,5,5,1,\n10,5,5,1,\n"
        rec = gaze_io.parse_gaze_csv(_csv(rows), "s01")
        meta = gaze_io.VideoMeta(fps=25.0, width_px=10, height_px=10, frame_count=5)
        rec2, meta2 = gaze_io.downsample(rec, meta, 100)
        assert meta2.frame_count == 1
        assert gaze_io.frames_with_gaze(rec2, meta2) == [0]

    @given(seed=st.integers(min_value=0, max_value=500), k=st.integers(min_value=1, max_value=7))
    def test_frames_with_gaze_commutes(self, seed, k):
        import oracles

        rec, _, _, meta = oracles.random_instance(seed)
        before = gaze_io.frames_with_gaze(rec, meta)
        rec2, meta2 = gaze_io.downsample(rec, meta, k)
        after = gaze_io.frames_with_gaze(rec2, meta2)
        assert set(after) == {f // k for f in before}


class TestApplyOffset:
    def test_zero_offset_is_identity(self, demo_parts):
        rec, _, _ = demo_parts
        assert gaze_io.apply_offset(rec, 0.0) is rec

    def test_positive_offset_shifts(self):
        rec = gaze_io.parse_gaze_csv(_csv("0,1,1,1,\n10,2,2,1,\n"), "s01")
        shifted = gaze_io.apply_offset(rec, 100.0)
        assert [s.timestamp_ms for s in shifted.samples] == [100.0, 110.0]

    def test_negative_offset_drops_early_samples(self):
        rec = gaze_io.parse_gaze_csv(_csv("0,1,1,1,\n10,2,2,1,\n"), "s01")
        shifted = gaze_io.apply_offset(rec, -5.0)
        assert [s.timestamp_ms for s in shifted.samples] == [5.0]
