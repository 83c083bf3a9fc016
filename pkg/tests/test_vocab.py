import pytest

from sagetok.errors import DataError, VocabError
from sagetok.vocab import (
    MARKER,
    PROV_ALPHABET,
    PROV_SURVIVOR,
    Vocabulary,
    content_length,
    corpus_alphabet,
    is_protected,
    is_word_initial,
    load_vocab,
    save_vocab,
)


class TestProtection:
    def test_marker_and_chars_protected(self):
        assert is_protected(MARKER)
        assert is_protected("a")
        assert is_protected(MARKER + "a")

    def test_content_tokens_not_protected(self):
        assert not is_protected("ab")
        assert not is_protected(MARKER + "ab")

    def test_content_length(self):
        assert content_length(MARKER) == 0
        assert content_length(MARKER + "abc") == 3
        assert content_length("abc") == 3

    def test_word_initial(self):
        assert is_word_initial(MARKER + "x")
        assert not is_word_initial("x")


class TestVocabulary:
    def test_dense_ids_follow_order(self):
        vocab = Vocabulary(["b", "a", "ab"])
        assert vocab.id_of == {"b": 0, "a": 1, "ab": 2}
        assert vocab.unk_id == 3

    def test_duplicates_rejected(self):
        with pytest.raises(VocabError):
            Vocabulary(["a", "a"])

    def test_subset_preserves_order_and_reflags(self):
        vocab = Vocabulary(["a", "ab", "b", "abc"], [PROV_ALPHABET, "merged", PROV_ALPHABET, "merged"])
        small = vocab.subset([0, 3, 2])
        assert small.tokens == ("a", "b", "abc")
        assert small.provenance == (PROV_ALPHABET, PROV_ALPHABET, PROV_SURVIVOR)

    def test_digest_changes_with_order(self):
        assert Vocabulary(["a", "b"]).digest() != Vocabulary(["b", "a"]).digest()


class TestCorpusAlphabet:
    def test_chars_and_initials(self):
        words = [MARKER + "ab", MARKER + "ba", MARKER + "ac"]
        chars, initials = corpus_alphabet(words)
        assert set(chars) == {MARKER, "a", "b", "c"}
        assert set(initials) == {MARKER + "a", MARKER + "b"}


class TestVocabIO:
    def test_roundtrip_with_header(self, tmp_path):
        vocab = Vocabulary([MARKER, "a", MARKER + "the", "ing"])
        path = tmp_path / "v.vocab"
        save_vocab(vocab, path, {"version": "0.1.0", "seed": 7})
        loaded, meta = load_vocab(path)
        assert loaded.tokens == vocab.tokens
        assert meta == {"version": "0.1.0", "seed": "7"}

    def test_order_is_file_order(self, tmp_path):
        path = tmp_path / "v.vocab"
        path.write_text("zz\naa\n", encoding="utf-8")
        loaded, _ = load_vocab(path)
        assert loaded.tokens == ("zz", "aa")

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "v.vocab"
        path.write_text("", encoding="utf-8")
        with pytest.raises(DataError):
            load_vocab(path)
