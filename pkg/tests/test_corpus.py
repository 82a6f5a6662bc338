import numpy as np
import pytest

from histsem.corpus import (
    CorpusManifest,
    DecadeLabel,
    RawDocument,
    Sentence,
    bucket_by_decade,
    load_documents,
    normalize_text,
    prepare_document,
    read_pretraining_corpus,
    rejoin_contractions,
    select_by_keyword,
    split_sentences,
    write_pretraining_corpus,
)


class TestNormalizeText:
    def test_lowercasing(self):
        assert normalize_text("The Coach") == "the coach"

    def test_accent_stripping_splits_punct(self):
        assert normalize_text("café.") == "cafe ."

    def test_empty(self):
        assert normalize_text("") == ""

    def test_word_internal_apostrophe_kept(self):
        assert normalize_text("don't stop") == "don't stop"
        assert normalize_text("Smith's") == "smith's"

    def test_quote_apostrophe_split(self):
        assert normalize_text("'hello'") == "' hello '"

    def test_whitespace_collapsed(self):
        assert normalize_text("  a \t b\n\nc ") == "a b c"

    @pytest.mark.parametrize(
        "text",
        ["The Coach", "café.", "don't", "a  b,c!  d", "élève naïve", "", "'tis"],
    )
    def test_idempotent(self, text):
        once = normalize_text(text)
        assert normalize_text(once) == once


class TestRejoinContractions:
    def test_do_nt(self):
        assert rejoin_contractions("do n't") == "don't"

    def test_we_ll(self):
        assert rejoin_contractions("we 'll go") == "we'll go"

    def test_noop(self):
        assert rejoin_contractions("coach") == "coach"

    def test_leading_clitic_left_alone(self):
        assert rejoin_contractions("n't go") == "n't go"

    @pytest.mark.parametrize("text", ["do n't", "we 're here", "i 'm it 's he 'd", "plain words"])
    def test_idempotent(self, text):
        once = rejoin_contractions(text)
        assert rejoin_contractions(once) == once


class TestSplitSentences:
    def _doc(self, text, year=1915):
        return RawDocument(doc_id="d1", year=year, text=text)

    def test_two_terminal_periods(self):
        sents = split_sentences(self._doc("it rained . we left ."))
        assert len(sents) == 2
        assert sents[0].tokens == ["it", "rained", "."]

    def test_abbreviation_not_split(self):
        assert len(split_sentences(self._doc("mr. smith left ."))) == 1
        # normalized form with the period split off
        assert len(split_sentences(self._doc("mr . smith left ."))) == 1

    def test_trailing_segment_kept(self):
        assert len(split_sentences(self._doc("no punctuation here"))) == 1

    def test_no_alpha_yields_empty(self):
        assert split_sentences(self._doc(". . ! 42 ?")) == []

    def test_token_stream_preserved(self):
        text = "it rained . we left ! did you see ? yes"
        sents = split_sentences(self._doc(text))
        flat = [t for s in sents for t in s.tokens]
        assert flat == text.split()

    def test_indices_and_decade(self):
        sents = split_sentences(self._doc("a b . c d .", year=1923))
        assert [s.index for s in sents] == [0, 1]
        assert all(s.decade == DecadeLabel(1920) for s in sents)


class TestBucketByDecade:
    RANGE = (DecadeLabel(1910), DecadeLabel(2000))

    def test_containment(self):
        m = bucket_by_decade([RawDocument("a", 1915, "x y")], self.RANGE)
        assert m.buckets == {1910: ["a"]}

    def test_last_decade_excluded(self):
        m = bucket_by_decade([RawDocument("a", 2015, "x")], self.RANGE)
        assert m.buckets == {}
        assert m.excluded == ["a"]

    def test_boundary_inclusive(self):
        m = bucket_by_decade(
            [RawDocument("a", 1910, "x"), RawDocument("b", 2009, "y")], self.RANGE
        )
        assert m.buckets == {1910: ["a"], 2000: ["b"]}

    def test_empty_input(self):
        m = bucket_by_decade([], self.RANGE)
        assert m.buckets == {} and m.excluded == []

    def test_partition_property(self):
        rng = np.random.default_rng(7)
        docs = [
            RawDocument(f"d{i}", int(rng.integers(1890, 2030)), "w " * int(rng.integers(1, 9)))
            for i in range(200)
        ]
        m = bucket_by_decade(docs, self.RANGE)
        bucketed = m.all_doc_ids()
        assert len(bucketed) == len(set(bucketed))
        in_range = {d.doc_id for d in docs if 1910 <= d.year <= 2009}
        assert set(bucketed) == in_range
        assert set(m.excluded) == {d.doc_id for d in docs} - in_range
        for start, ids in m.buckets.items():
            for doc in docs:
                if doc.doc_id in ids:
                    assert DecadeLabel(start).contains(doc.year)

    def test_token_counts(self):
        m = bucket_by_decade(
            [RawDocument("a", 1911, "x y z"), RawDocument("b", 1919, "p q")], self.RANGE
        )
        assert m.token_counts == {1910: 5}

    def test_duplicate_doc_id_rejected(self):
        docs = [RawDocument("a", 1915, "x"), RawDocument("a", 1925, "y")]
        with pytest.raises(ValueError, match="duplicate"):
            bucket_by_decade(docs, self.RANGE)


class TestSelectByKeyword:
    def test_whole_token_match(self):
        docs = [RawDocument("a", 1915, "the stage coach arrived")]
        assert select_by_keyword(docs, "coach") == docs

    def test_inflected_form_not_matched(self):
        docs = [RawDocument("a", 1915, "two coaches arrived")]
        assert select_by_keyword(docs, "coach") == []

    def test_empty_docs(self):
        assert select_by_keyword([], "coach") == []

    def test_empty_keyword_error(self):
        with pytest.raises(ValueError):
            select_by_keyword([], "")

    def test_subset_and_rescan(self):
        docs = [
            RawDocument("a", 1915, "the Coach left."),
            RawDocument("b", 1916, "nothing here"),
            RawDocument("c", 1917, "coach and horses"),
        ]
        selected = select_by_keyword(docs, "coach")
        assert [d.doc_id for d in selected] == ["a", "c"]
        for doc in selected:
            assert "coach" in rejoin_contractions(normalize_text(doc.text)).split()


def _sentences_for(doc):
    return split_sentences(prepare_document(doc))


class TestWritePretrainingCorpus:
    def _fixture(self):
        docs = [
            RawDocument("doc1", 1915, "It rained hard. We left town."),
            RawDocument("doc2", 1912, "The coach arrived. Horses do n't rest."),
            RawDocument("doc3", 1995, "Modern text here."),
        ]
        manifest = bucket_by_decade(docs, (DecadeLabel(1910), DecadeLabel(2000)))
        sentences = {d.doc_id: _sentences_for(d) for d in docs}
        return manifest, sentences

    def test_layout_and_roundtrip(self, tmp_path):
        manifest, sentences = self._fixture()
        paths = write_pretraining_corpus(manifest, sentences, tmp_path, truncate_fraction=0.0, seed=1)
        assert sorted(paths) == [1910, 1990]
        text = paths[1910].read_text()
        assert not text.endswith("\n\n")
        assert "\n\n\n" not in text
        docs_back = read_pretraining_corpus(paths[1910])
        assert docs_back == [
            [s.tokens for s in sentences["doc1"]],
            [s.tokens for s in sentences["doc2"]],
        ]

    def test_zero_fraction_never_truncates(self, tmp_path):
        manifest, sentences = self._fixture()
        paths = write_pretraining_corpus(manifest, sentences, tmp_path, truncate_fraction=0.0, seed=5)
        for path in paths.values():
            for doc in read_pretraining_corpus(path):
                for tokens in doc:
                    assert tokens  # untouched sentences round-trip below
        assert read_pretraining_corpus(paths[1910])[0] == [s.tokens for s in sentences["doc1"]]

    def test_truncated_sentences_are_strict_prefixes(self, tmp_path):
        manifest, sentences = self._fixture()
        paths = write_pretraining_corpus(manifest, sentences, tmp_path, truncate_fraction=0.9, seed=5)
        originals = {
            1910: [[s.tokens for s in sentences["doc1"]], [s.tokens for s in sentences["doc2"]]],
            1990: [[s.tokens for s in sentences["doc3"]]],
        }
        for decade, path in paths.items():
            for doc, orig_doc in zip(read_pretraining_corpus(path), originals[decade]):
                for tokens, orig in zip(doc, orig_doc):
                    if tokens != orig:
                        assert len(tokens) < len(orig)
                        assert tokens == orig[: len(tokens)]
                        assert len(tokens) >= 1

    def test_byte_identical_reruns(self, tmp_path):
        manifest, sentences = self._fixture()
        a = write_pretraining_corpus(manifest, sentences, tmp_path / "a", truncate_fraction=0.3, seed=9)
        b = write_pretraining_corpus(manifest, sentences, tmp_path / "b", truncate_fraction=0.3, seed=9)
        for decade in a:
            assert a[decade].read_bytes() == b[decade].read_bytes()

    def test_missing_document_rejected(self, tmp_path):
        manifest, sentences = self._fixture()
        del sentences["doc2"]
        with pytest.raises(KeyError):
            write_pretraining_corpus(manifest, sentences, tmp_path)

    def test_bad_fraction(self, tmp_path):
        manifest, sentences = self._fixture()
        with pytest.raises(ValueError):
            write_pretraining_corpus(manifest, sentences, tmp_path, truncate_fraction=1.5)


def test_no_lemmatization_inflected_forms_survive(tmp_path):
    doc = RawDocument("d", 1915, "The coaches were running. Horses galloped faster.")
    manifest = bucket_by_decade([doc], (DecadeLabel(1910), DecadeLabel(2000)))
    paths = write_pretraining_corpus(manifest, {"d": _sentences_for(doc)}, tmp_path)
    tokens = [t for d in read_pretraining_corpus(paths[1910]) for s in d for t in s]
    for inflected in ("coaches", "running", "galloped", "faster", "were"):
        assert inflected in tokens


def test_manifest_json_roundtrip(tmp_path):
    manifest = CorpusManifest(
        buckets={1910: ["a", "b"], 1990: ["c"]},
        token_counts={1910: 12, 1990: 3},
        excluded=["z"],
        seed=42,
        config_digest="abc",
        content_digest="def",
    )
    path = tmp_path / "manifest.json"
    manifest.save(path)
    back = CorpusManifest.load(path)
    assert back == manifest


def test_load_documents_from_filenames(tmp_path):
    (tmp_path / "doc_1915_ab.txt").write_text("one two")
    (tmp_path / "doc_1992_cd.txt").write_text("three")
    (tmp_path / "ignore.txt").write_text("skip")
    docs = load_documents(tmp_path)
    assert [(d.doc_id, d.year) for d in docs] == [("ab", 1915), ("cd", 1992)]


def test_load_documents_from_tsv(tmp_path):
    (tmp_path / "f1.txt").write_text("hello there")
    tsv = tmp_path / "manifest.tsv"
    tsv.write_text("d1\t1933\tfiction\tf1.txt\n")
    docs = load_documents(tmp_path, tsv)
    assert docs[0].doc_id == "d1" and docs[0].year == 1933 and docs[0].genre == "fiction"
    tsv.write_text("d1\t1933\tf1.txt\n")
    with pytest.raises(ValueError):
        load_documents(tmp_path, tsv)


def test_decade_label_validation():
    with pytest.raises(ValueError):
        DecadeLabel(1915)
    assert DecadeLabel.of_year(1915) == DecadeLabel(1910)
    assert DecadeLabel(1910).label == "1910s"


def test_sentence_invariants():
    with pytest.raises(ValueError):
        Sentence("d", 0, [], DecadeLabel(1910))
    with pytest.raises(ValueError):
        Sentence("d", 0, ["a b"], DecadeLabel(1910))
