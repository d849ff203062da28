import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from liplink.dataset import (
    default_lexicon,
    generate_synthetic,
    load_lexicon,
    save_lexicon,
    split_train_val,
    synthetic_params,
)
from liplink.errors import BadParams, DuplicateText, EmptyDataset, SchemaError


class TestLexicon:
    def test_two_phrase_file(self):
        lex = load_lexicon(json.dumps({"version": 1, "phrases": ["a", "b"]}))
        assert len(lex) == 2
        assert lex.text(0) == "a" and lex.text(1) == "b"

    def test_duplicate_text(self):
        with pytest.raises(DuplicateText):
            load_lexicon(json.dumps({"phrases": ["a", "a"]}))

    def test_88_entries_version_preserved(self):
        phrases = [f"mondat {i}" for i in range(88)]
        lex = load_lexicon(json.dumps({"version": 7, "phrases": phrases}))
        assert len(lex) == 88
        assert lex.version == 7

    def test_roundtrip(self):
        lex = default_lexicon(12)
        assert load_lexicon(save_lexicon(lex)) == lex

    def test_schema_error(self):
        with pytest.raises(SchemaError):
            load_lexicon("[]")
        with pytest.raises(SchemaError):
            load_lexicon(json.dumps({"phrases": [1, 2]}))


class TestSplit:
    def test_paper_regime_88x5(self):
        recs = {p: [f"r{p}_{i}" for i in range(5)] for p in range(88)}
        split = split_train_val(recs, 0.6, seed=0)
        assert len(split.train) == 264
        assert len(split.validation) == 176
        for p in range(88):
            mine = {f"r{p}_{i}" for i in range(5)}
            assert len(mine & set(split.train)) == 3
            assert len(mine & set(split.validation)) == 2

    def test_single_recording_goes_to_train_with_warning(self):
        split = split_train_val({0: ["only"]}, 0.6, seed=0)
        assert split.train == ["only"]
        assert split.validation == []
        assert split.validation_empty

    def test_determinism(self):
        recs = {p: list(range(p * 10, p * 10 + 4)) for p in range(6)}
        a = split_train_val(recs, 0.6, seed=3)
        b = split_train_val(recs, 0.6, seed=3)
        assert a.train == b.train and a.validation == b.validation

    def test_empty_dataset(self):
        with pytest.raises(EmptyDataset):
            split_train_val({}, 0.6, 0)

    @settings(max_examples=100, deadline=None)
    @given(
        counts=st.lists(st.integers(1, 9), min_size=1, max_size=10),
        ratio=st.floats(0.05, 0.95),
        seed=st.integers(0, 10**6),
    )
    def test_disjoint_covering_stratified(self, counts, ratio, seed):
        recs = {
            p: [f"{p}:{i}" for i in range(n)] for p, n in enumerate(counts)
        }
        split = split_train_val(recs, ratio, seed)
        train, val = set(split.train), set(split.validation)
        assert not train & val
        assert train | val == {f"{p}:{i}" for p, n in enumerate(counts) for i in range(n)}
        for p, n in enumerate(counts):
            mine = {f"{p}:{i}" for i in range(n)}
            assert len(mine & train) >= 1
            if n >= 2:
                assert len(mine & val) >= 1


class TestSynthetic:
    def test_reps_identical_without_noise(self):
        clips = generate_synthetic(2, 2, 8, 16, 0.0, seed=0)
        (k0, a), (_, b) = clips[0], clips[1]
        assert k0 == 0
        assert (a.values == b.values).all()

    def test_classes_differ_at_mid_sequence(self):
        clips = generate_synthetic(2, 1, 16, 16, 0.0, seed=0)
        a = clips[0][1].values
        b = clips[1][1].values
        # frequencies 1 vs 2 diverge most a quarter of the way through
        assert np.abs(a[4] - b[4]).sum() > 0
        assert np.abs(a - b).sum() > 0

    def test_values_clipped_to_unit_interval(self):
        for sigma in (0.0, 0.05, 0.5, 2.0):
            clips = generate_synthetic(3, 1, 4, 12, sigma, seed=1)
            for _, t in clips:
                assert t.values.min() >= 0.0 and t.values.max() <= 1.0

    def test_pure_function(self):
        a = generate_synthetic(3, 2, 5, 12, 0.1, seed=9)
        b = generate_synthetic(3, 2, 5, 12, 0.1, seed=9)
        for (ka, ta), (kb, tb) in zip(a, b):
            assert ka == kb
            assert (ta.values == tb.values).all()

    def test_frequency_phase_pairs_unique_up_to_64_classes(self):
        for k in range(2, 65):
            params = synthetic_params(k)
            assert len(set(params)) == k

    def test_bad_params(self):
        with pytest.raises(BadParams):
            generate_synthetic(1, 1, 4, 8, 0.0, 0)
        with pytest.raises(BadParams):
            generate_synthetic(2, 0, 4, 8, 0.0, 0)
