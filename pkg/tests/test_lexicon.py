import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from foresight.errors import MalformedRow, OutOfRange, ScoreOutOfRange
from foresight.lexicon import VadLexicon, VadScore, load_vad, quantize


class TestLoad:
    def test_documented_probe_words(self, small_lexicon):
        assert small_lexicon.lookup("loneliness") == VadScore(0.15, 0.18, 0.22)
        assert small_lexicon.lookup("abandon") == VadScore(0.05, 0.52, 0.25)

    def test_case_insensitive_lookup(self, small_lexicon):
        assert small_lexicon.lookup("LONELINESS") == small_lexicon.lookup("loneliness")
        assert "Joy" in small_lexicon

    def test_score_out_of_range(self):
        with pytest.raises(ScoreOutOfRange):
            load_vad("bad\t1.3\t0.0\t0.0")

    def test_malformed_row_reports_line(self):
        with pytest.raises(MalformedRow) as e:
            load_vad("good\t0.9\t0.5\t0.5\nbroken row without tabs")
        assert e.value.line == 2

    def test_non_numeric_score_mid_file(self):
        with pytest.raises(MalformedRow):
            load_vad("good\t0.9\t0.5\t0.5\nbad\tx\t0.5\t0.5")

    def test_header_optional(self):
        with_header = load_vad("word\tvalence\tarousal\tdominance\njoy\t0.9\t0.8\t0.5")
        without = load_vad("joy\t0.9\t0.8\t0.5")
        assert len(with_header) == len(without) == 1

    def test_bad_grid_config(self):
        with pytest.raises(OutOfRange):
            VadLexicon({}, n_v=0, n_a=8)


class TestQuantize:
    def test_origin_cell(self):
        assert quantize(0.0, 0.0, 8, 8) == 0

    def test_boundary_clamps_into_last_cell(self):
        assert quantize(1.0, 1.0, 8, 8) == 63

    def test_loneliness_cell(self):
        # derived from the documented VAD scores (0.15, 0.18): v_idx=1, a_idx=1
        assert quantize(0.15, 0.18, 8, 8) == 9

    def test_out_of_range(self):
        with pytest.raises(OutOfRange):
            quantize(-0.1, 0.5, 8, 8)
        with pytest.raises(OutOfRange):
            quantize(0.5, 1.1, 8, 8)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0, 1), st.floats(0, 1))
    def test_total_on_unit_square(self, v, a):
        assert 0 <= quantize(v, a, 8, 8) <= 63

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0, 1), st.floats(0, 1), st.floats(0, 1))
    def test_monotone_in_valence(self, v1, v2, a):
        lo, hi = min(v1, v2), max(v1, v2)
        # within a fixed arousal row, the valence index never decreases
        assert quantize(hi, a, 8, 8) % 8 >= quantize(lo, a, 8, 8) % 8

    def test_preimages_tile_unit_square(self, rng):
        """Every grid cell is hit and ids agree with the index arithmetic."""
        pts = rng.uniform(0, 1, size=(20000, 2))
        ids = np.array([quantize(v, a, 8, 8) for v, a in pts])
        expected = np.minimum((pts[:, 1] * 8).astype(int), 7) * 8 + np.minimum(
            (pts[:, 0] * 8).astype(int), 7
        )
        np.testing.assert_array_equal(ids, expected)
        assert set(np.unique(ids)) <= set(range(64))

    def test_n_emo_is_65_for_default_grid(self, small_lexicon):
        assert small_lexicon.n_ids == 65
        assert small_lexicon.special_id == 64


class TestEmotionIds:
    def test_known_word(self, small_lexicon):
        assert small_lexicon.emotion_ids(["loneliness"]) == [9]

    def test_unknown_word_gets_special_id(self, small_lexicon):
        assert small_lexicon.emotion_ids(["zzzunknown"]) == [64]

    def test_empty_input(self, small_lexicon):
        assert small_lexicon.emotion_ids([]) == []

    def test_every_lexicon_word_maps_to_valid_id(self, synthetic_lexicon):
        for word in [f"w{i:05d}" for i in range(0, 500, 7)]:
            assert 0 <= synthetic_lexicon.emotion_id(word) < synthetic_lexicon.special_id

    def test_histogram_counts(self, small_lexicon):
        hist = small_lexicon.histogram(["loneliness", "loneliness", "mystery"])
        assert hist[9] == 2
        assert hist[64] == 1
        assert hist.sum() == 3
