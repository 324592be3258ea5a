import pytest
from hypothesis import given, strategies as st

from helpers import kp, make_record, sentinel_kp, session_of
from musicking_lab.errors import InvariantError, UnknownColumn
from musicking_lab.model import (
    BeatGrid,
    CHORUS_IDS,
    Keypoint,
    Record,
    SKELETON_PARTS,
    Session,
    canonical_columns,
    column_values,
    validate_record,
    validate_session,
)


class TestValidateRecord:
    def test_valid_record_has_no_violations(self):
        r = make_record(100.0, chorus_id=3, flow=50, eda=400,
                        keypoints={"nose": kp(10.0, 20.0, 0.9)})
        assert validate_record(r) == []

    def test_bad_chorus_id(self):
        r = make_record(100.0, chorus_id=7)
        assert validate_record(r) == ["chorus_id not in {0..5,999}"]

    @pytest.mark.parametrize("chorus", sorted(CHORUS_IDS))
    def test_all_legal_chorus_ids(self, chorus):
        assert validate_record(make_record(0.0, chorus_id=chorus)) == []

    def test_sentinel_mismatch(self):
        r = make_record(0.0, keypoints={"nose": Keypoint(-1.0, 120.0, 0.0)})
        assert any("sentinel mismatch" in v for v in validate_record(r))

    def test_sentinel_pair_is_fine(self):
        r = make_record(0.0, keypoints={"nose": sentinel_kp()})
        assert validate_record(r) == []

    def test_confidence_out_of_range(self):
        r = make_record(0.0, keypoints={"nose": Keypoint(1.0, 2.0, 1.5)})
        assert validate_record(r) == ["nose: confidence not in [0,1]"]

    def test_negative_eda_and_flow(self):
        r = make_record(0.0, eda=-4, flow=-1)
        violations = validate_record(r)
        assert "eda below 0" in violations
        assert "flow below 0" in violations

    def test_coordinates_below_sentinel(self):
        r = make_record(0.0, keypoints={"neck": Keypoint(-2.0, -2.0, 0.5)})
        violations = validate_record(r)
        assert "neck: x below -1" in violations
        assert "neck: y below -1" in violations

    def test_unknown_part_flagged(self):
        r = make_record(0.0, keypoints={"tail": kp(1.0, 2.0)})
        assert "tail: unknown body part" in validate_record(r)

    def test_null_fields_never_violate(self):
        assert validate_record(make_record(0.0)) == []


class TestValidateSession:
    def test_monotone_positions_pass(self):
        assert validate_session(session_of([0, 130, 260])) == []

    def test_repeated_position_flagged(self):
        violations = validate_session(session_of([0, 130, 130]))
        assert violations == ["position not strictly increasing at index 2"]

    def test_empty_records(self):
        assert validate_session(Session("s", ())) == ["records empty"]

    def test_record_violations_carry_index(self):
        s = session_of([0, 130], chorus=[None, 42])
        assert validate_session(s) == ["record 1: chorus_id not in {0..5,999}"]

    @given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=30))
    def test_clean_validation_implies_increasing_diffs(self, positions):
        s = session_of(positions)
        if validate_session(s) == []:
            diffs = [b - a for a, b in zip(positions, positions[1:])]
            assert all(d > 0 for d in diffs)

    @given(st.lists(st.floats(0, 1e6, allow_nan=False), min_size=1, max_size=20))
    def test_validation_is_pure(self, positions):
        s = session_of(positions)
        assert validate_session(s) == validate_session(s)


class TestBeatGrid:
    def test_bar_off_beat_rejected(self):
        with pytest.raises(InvariantError, match="bar time not in beats"):
            BeatGrid(beat_times=(0.5, 1.5), bar_times=(1.0,), tempo_bpm=60.0,
                     duration_s=10.0, audio_sample_rate_hz=22050)

    def test_bars_must_be_every_fourth_beat(self):
        beats = (0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0)
        with pytest.raises(InvariantError, match="every 4th"):
            BeatGrid(beat_times=beats, bar_times=(0.0, 2.0), tempo_bpm=60.0,
                     duration_s=10.0, audio_sample_rate_hz=22050)

    def test_non_monotone_beats_rejected(self):
        with pytest.raises(InvariantError, match="not strictly increasing"):
            BeatGrid(beat_times=(0.0, 2.0, 1.0), bar_times=(0.0,), tempo_bpm=60.0,
                     duration_s=10.0, audio_sample_rate_hz=22050)

    def test_valid_grid(self):
        g = BeatGrid(beat_times=(0.0, 1.0, 2.0, 3.0, 4.0), bar_times=(0.0, 4.0),
                     tempo_bpm=60.0, duration_s=6.0, audio_sample_rate_hz=22050)
        assert g.n_bars == 2


class TestColumns:
    def test_canonical_count(self):
        # 5 sync/physio scalars + 4 EEG + 12 parts x 3 axes
        assert len(canonical_columns()) == 5 + 4 + len(SKELETON_PARTS) * 3

    def test_alias_and_canonical_agree(self):
        s = session_of([0, 130], eda=[400, 410])
        assert column_values(s, "eda") == column_values(s, "hardware_bitalino_eda")

    def test_skeleton_column_with_missing_part(self):
        s = session_of([0, 130], keypoints=[{"nose": kp(4.0, 5.0)}, {}])
        assert column_values(s, "nose_x") == [4.0, None]
        assert column_values(s, "hardware_skeleton_nose_confidence") == [0.9, None]

    def test_extras_fallback(self):
        r = Record(backing_track_position=0.0, extras={"foo": 7})
        s = Session("s", (r,))
        assert column_values(s, "foo") == [7]

    def test_unknown_column(self):
        with pytest.raises(UnknownColumn):
            column_values(session_of([0]), "no_such_column")
