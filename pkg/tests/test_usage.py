import numpy as np
import pytest

from histsem.corpus import DecadeLabel, Sentence
from histsem.encoder.states import EmbeddingRecord
from histsem.stats import cosine_similarity
from histsem.usage import (
    AnnotatedPair,
    Usage,
    build_human_matrix,
    build_model_matrix,
    dups_usages,
    find_usages,
    load_dups,
    write_dups,
)

D1910 = DecadeLabel(1910)


def _sent(doc_id, index, text, decade=D1910):
    return Sentence(doc_id, index, text.split(), decade)


class TestFindUsages:
    def test_double_occurrence(self):
        usages = find_usages([_sent("d", 0, "the coach met the coach")], "coach")
        assert len(usages) == 2
        assert [u.focus_index for u in usages] == [1, 4]
        assert len({u.usage_id for u in usages}) == 2

    def test_absent_word(self):
        assert find_usages([_sent("d", 0, "nothing here")], "coach") == []

    def test_seventeen_usages_from_twelve_sentences(self):
        # 12 sentences, some with repeated occurrences, totalling 17
        counts = [1, 1, 2, 1, 1, 2, 1, 2, 1, 2, 2, 1]
        assert sum(counts) == 17 and len(counts) == 12
        sentences = []
        for i, c in enumerate(counts):
            words = ["filler"] * 3 + ["coach"] * c
            sentences.append(_sent(f"doc{i}", i, " ".join(words)))
        usages = find_usages(sentences, "coach")
        assert len(usages) == 17

    def test_count_matches_naive_scan(self):
        rng = np.random.default_rng(2)
        vocab = ["coach", "horse", "road", "the", "a"]
        sentences = [
            _sent(f"d{i}", i, " ".join(rng.choice(vocab, size=8))) for i in range(40)
        ]
        naive = sum(tok == "coach" for s in sentences for tok in s.tokens)
        assert len(find_usages(sentences, "coach")) == naive

    def test_decade_inherited(self):
        u = find_usages([_sent("d", 0, "a coach", DecadeLabel(1990))], "coach")[0]
        assert u.decade == DecadeLabel(1990)

    def test_unnormalized_word_rejected(self):
        with pytest.raises(ValueError):
            find_usages([], "Coach")


class TestUsageInvariants:
    def test_focus_must_match_word(self):
        with pytest.raises(ValueError):
            Usage("u", "coach", ["the", "horse"], 1, D1910)

    def test_focus_index_bounds(self):
        with pytest.raises(ValueError):
            Usage("u", "coach", ["coach"], 3, D1910)

    def test_punctuated_focus_token_accepted(self):
        Usage("u", "coach", ["the", "coach."], 1, D1910)


def _dups_rows():
    # three usages of "coach": pairs (a,b), (a,c), (b,c)
    a = ("the old coach rolled on", 8, "1910-1920")
    b = ("our coach trains the team", 4, "1990-2000")
    c = ("a coach and four horses", 2, "1920-1930")
    def row(x, y, scores):
        return ("coach", x[0], x[1], x[2], y[0], y[1], y[2], *scores)
    return [
        row(a, b, (4, 4, 3, 4, 4)),
        row(a, c, (2, 2, 2, 1, 2)),
        row(b, c, (1, 1, 2, 1, 1)),
    ]


class TestLoadDups:
    def test_mean_score(self, tmp_path):
        path = tmp_path / "dups.csv"
        write_dups(_dups_rows(), path)
        dataset = load_dups(path)
        assert dataset.words == ["coach"]
        assert dataset.pairs[0].mean_score == pytest.approx(3.8)

    def test_mean_permutation_invariant(self):
        u = Usage("u1", "coach", ["coach", "go"], 0, D1910)
        v = Usage("u2", "coach", ["go", "coach"], 1, D1910)
        p1 = AnnotatedPair("coach", u, v, [1, 2, 3, 4, 5])
        p2 = AnnotatedPair("coach", u, v, [5, 4, 3, 2, 1])
        assert p1.mean_score == p2.mean_score

    def test_wrong_score_count_rejected(self):
        u = Usage("u1", "coach", ["coach"], 0, D1910)
        with pytest.raises(ValueError):
            AnnotatedPair("coach", u, u, [1, 2, 3, 4])

    def test_wrong_column_count(self, tmp_path):
        path = tmp_path / "dups.csv"
        write_dups(_dups_rows(), path)
        lines = path.read_text().splitlines()
        lines[1] = ",".join(lines[1].split(",")[:-1])
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ValueError, match="columns"):
            load_dups(path)

    def test_non_numeric_score(self, tmp_path):
        path = tmp_path / "dups.csv"
        rows = _dups_rows()
        rows[0] = rows[0][:7] + ("high", 4, 3, 4, 4)
        write_dups(rows, path)
        with pytest.raises(ValueError, match="score"):
            load_dups(path)

    def test_missing_decade_label(self, tmp_path):
        path = tmp_path / "dups.csv"
        rows = _dups_rows()
        rows[0] = rows[0][:3] + ("",) + rows[0][4:]
        write_dups(rows, path)
        with pytest.raises(ValueError, match="interval"):
            load_dups(path)

    def test_bad_header(self, tmp_path):
        path = tmp_path / "dups.csv"
        path.write_text("word,foo\n")
        with pytest.raises(ValueError, match="header"):
            load_dups(path)

    def test_identical_snippets_share_usage_id(self, tmp_path):
        path = tmp_path / "dups.csv"
        write_dups(_dups_rows(), path)
        dataset = load_dups(path)
        assert len(dups_usages(dataset, "coach")) == 3


class TestBuildHumanMatrix:
    def _dataset(self, tmp_path, rows=None):
        path = tmp_path / "dups.csv"
        write_dups(rows or _dups_rows(), path)
        return load_dups(path)

    def test_complete_three_by_three(self, tmp_path):
        m = build_human_matrix(self._dataset(tmp_path), "coach")
        assert m.n == 3
        off = ~np.eye(3, dtype=bool)
        assert np.isfinite(m.values[off]).all()
        np.testing.assert_allclose(m.values, m.values.T)
        assert m.values[0, 1] == pytest.approx(3.8)

    def test_partial_annotation_pattern(self, tmp_path):
        rows = _dups_rows()
        d = ("coach rides were slow then", 0, "1930-1940")
        rows.append(("coach", rows[0][1], rows[0][2], rows[0][3], d[0], d[1], d[2], 3, 3, 3, 3, 3))
        m = build_human_matrix(self._dataset(tmp_path, rows), "coach")
        assert m.n == 4
        iu = np.triu_indices(4, 1)
        assert int(np.isfinite(m.values[iu]).sum()) == 4

    def test_duplicate_annotations_averaged(self, tmp_path):
        rows = _dups_rows()[:1]
        dup = rows[0][:7] + (2, 2, 2, 2, 2)
        rows.append(dup)
        m = build_human_matrix(self._dataset(tmp_path, rows), "coach")
        assert m.values[0, 1] == pytest.approx((3.8 + 2.0) / 2)

    def test_unknown_word_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            build_human_matrix(self._dataset(tmp_path), "sphere")


def _record(uid, vec, encoder_id="enc-1"):
    return EmbeddingRecord(word="coach", usage_id=uid, decade=D1910, vector=np.array(vec, float), encoder_id=encoder_id)


class TestBuildModelMatrix:
    def _mask(self, n=3, missing=()):
        vals = np.full((n, n), np.nan)
        for i in range(n):
            for j in range(n):
                if i != j and (i, j) not in missing and (j, i) not in missing:
                    vals[i, j] = 2.0
        ids = [f"u{i}" for i in range(n)]
        from histsem.usage import SimilarityMatrix

        return SimilarityMatrix("coach", ids, vals, "human")

    def test_identical_vectors(self):
        recs = [_record("u0", [1, 0]), _record("u1", [2, 0]), _record("u2", [0, 1])]
        m = build_model_matrix(recs, "coach", self._mask())
        assert m.values[0, 1] == pytest.approx(1.0)
        assert m.values[0, 2] == pytest.approx(0.0)
        assert np.all(np.diag(m.values) == 1.0)

    def test_hand_computed_cosines(self):
        recs = [_record("u0", [1, 1]), _record("u1", [1, 0]), _record("u2", [0, 2])]
        m = build_model_matrix(recs, "coach", self._mask())
        s = 1 / np.sqrt(2)
        np.testing.assert_allclose(m.values[0, 1], s)
        np.testing.assert_allclose(m.values[0, 2], s)
        np.testing.assert_allclose(m.values[1, 2], 0.0)
        for i in range(3):
            for j in range(3):
                if i != j:
                    assert m.values[i, j] == pytest.approx(
                        cosine_similarity(recs[i].vector, recs[j].vector)
                    )

    def test_missing_pattern_preserved(self):
        recs = [_record(f"u{i}", [1, i + 1]) for i in range(3)]
        mask = self._mask(missing=[(0, 2)])
        m = build_model_matrix(recs, "coach", mask)
        assert np.isnan(m.values[0, 2]) and np.isnan(m.values[2, 0])
        off = ~np.eye(3, dtype=bool)
        np.testing.assert_array_equal(np.isfinite(m.values[off]), np.isfinite(mask.values[off]))
        assert m.usage_ids == mask.usage_ids

    def test_missing_embedding_rejected(self):
        recs = [_record("u0", [1, 0]), _record("u1", [0, 1])]
        with pytest.raises(ValueError, match="missing"):
            build_model_matrix(recs, "coach", self._mask())

    def test_mixed_encoders_rejected(self):
        recs = [
            _record("u0", [1, 0]),
            _record("u1", [0, 1], encoder_id="enc-2"),
            _record("u2", [1, 1]),
        ]
        with pytest.raises(ValueError, match="encoder"):
            build_model_matrix(recs, "coach", self._mask())


def test_matrix_json_roundtrip(tmp_path):
    from histsem.usage import SimilarityMatrix

    vals = np.array([[1.0, 0.5, np.nan], [0.5, 1.0, 0.2], [np.nan, 0.2, 1.0]])
    m = SimilarityMatrix("coach", ["a", "b", "c"], vals, "enc-1")
    path = tmp_path / "m.json"
    m.save(path)
    back = SimilarityMatrix.load(path)
    assert back.word == m.word and back.usage_ids == m.usage_ids and back.source == m.source
    np.testing.assert_array_equal(np.isnan(back.values), np.isnan(m.values))
    np.testing.assert_allclose(back.values[np.isfinite(m.values)], m.values[np.isfinite(m.values)])
