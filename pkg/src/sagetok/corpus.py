"""Corpus ingestion and the tokenized sentence store.

A corpus is one sentence per line. Loading normalizes whitespace, drops
empty lines, and scrubs any literal boundary-marker character so that the
marker is unambiguous downstream. Sentences are pretokenized into
marker-prefixed words; skipgram windows never cross sentence boundaries.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from collections.abc import Iterable

import numpy as np

from .errors import DataError, VocabError
from .vocab import MARKER, Vocabulary, is_protected


@dataclass(frozen=True)
class NormalizePolicy:
    """Line normalization applied at load time.

    ``marker_fallback`` replaces literal occurrences of the reserved
    boundary marker in raw text, keeping segmentations invertible.
    """

    lowercase: bool = False
    collapse_whitespace: bool = True
    marker_fallback: str = "_"


def normalize_line(line: str, policy: NormalizePolicy = NormalizePolicy()) -> str:
    if policy.lowercase:
        line = line.lower()
    if policy.collapse_whitespace:
        line = " ".join(line.split())
    if MARKER in line:
        line = line.replace(MARKER, policy.marker_fallback)
    return line


@dataclass(frozen=True)
class RawCorpus:
    """Normalized, non-empty corpus lines (one sentence per line)."""

    lines: tuple[str, ...]

    def __len__(self) -> int:
        return len(self.lines)

    @classmethod
    def from_lines(cls, lines: Iterable[str], policy: NormalizePolicy = NormalizePolicy()) -> "RawCorpus":
        kept = [n for n in (normalize_line(l, policy) for l in lines) if n]
        if not kept:
            raise DataError("corpus has zero non-empty lines")
        return cls(tuple(kept))

    def digest(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for line in self.lines:
            h.update(line.encode("utf-8"))
            h.update(b"\n")
        return h.hexdigest()[:16]


def load_corpus(path, policy: NormalizePolicy = NormalizePolicy()) -> RawCorpus:
    """Read a UTF-8 line-per-sentence file, normalizing per ``policy``.

    Invalid UTF-8 is reported with its 1-based line number.
    """
    try:
        with open(path, "rb") as f:
            raw = f.read()
    except OSError as exc:
        raise DataError(f"cannot read corpus file {path}: {exc}") from exc
    kept: list[str] = []
    for lineno, blob in enumerate(raw.split(b"\n"), start=1):
        try:
            text = blob.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DataError(f"{path}: invalid UTF-8 on line {lineno}: {exc}") from exc
        norm = normalize_line(text, policy)
        if norm:
            kept.append(norm)
    if not kept:
        raise DataError(f"corpus file {path} has zero non-empty lines")
    return RawCorpus(tuple(kept))


def pretokenize(line: str) -> tuple[str, ...]:
    """Split a normalized line on single spaces and prefix each word with the marker."""
    if not line:
        return ()
    return tuple(MARKER + w for w in line.split(" "))


class SentenceStore:
    """Corpus as token-id sequences under one vocabulary.

    Holds, per sentence: the pretokenized words, the encoded id array,
    the characters absorbed by UNK tokens (in emission order, for exact
    round-trips), and optionally a cached per-sentence skipgram NLL.
    """

    __slots__ = ("words", "ids", "unk_chars", "nll", "vocab_digest")

    def __init__(
        self,
        words: list[tuple[str, ...]],
        ids: list[np.ndarray],
        unk_chars: list[tuple[str, ...]],
        vocab_digest: str,
        nll: np.ndarray | None = None,
    ):
        self.words = words
        self.ids = ids
        self.unk_chars = unk_chars
        self.vocab_digest = vocab_digest
        self.nll = nll

    def __len__(self) -> int:
        return len(self.ids)

    def total_tokens(self) -> int:
        return sum(len(a) for a in self.ids)

    def total_nll(self) -> float:
        if self.nll is None:
            raise VocabError("sentence store has no likelihood cache")
        return float(np.sum(self.nll))

    def decode_words(self, sentence: int, vocab: Vocabulary) -> tuple[str, ...]:
        """Reconstruct the pretokenized words of one sentence.

        A new word starts at every marker-initial token. UNK ids are
        replaced by their recorded source characters.
        """
        unk_iter = iter(self.unk_chars[sentence])
        words: list[str] = []
        for token_id in self.ids[sentence]:
            if token_id == vocab.unk_id:
                piece = next(unk_iter)
            else:
                piece = vocab.tokens[token_id]
            if piece.startswith(MARKER) and token_id != vocab.unk_id:
                words.append(piece)
            elif words:
                words[-1] += piece
            else:
                words.append(piece)
        return tuple(words)

    def decode_line(self, sentence: int, vocab: Vocabulary) -> str:
        return " ".join(w[1:] if w.startswith(MARKER) else w for w in self.decode_words(sentence, vocab))


class TokenIndex:
    """Inverted index: token id -> set of sentence ids containing it.

    Empty postings are dropped, so an incrementally maintained index
    compares equal to one rebuilt from scratch.
    """

    __slots__ = ("postings",)

    def __init__(self, postings: dict[int, set[int]] | None = None):
        self.postings: dict[int, set[int]] = postings if postings is not None else {}

    def sentences(self, token_id: int) -> set[int]:
        return self.postings.get(token_id, set())

    def update_sentence(self, sentence: int, old_ids: np.ndarray, new_ids: np.ndarray) -> None:
        old = set(int(t) for t in np.unique(old_ids))
        new = set(int(t) for t in np.unique(new_ids))
        for t in old - new:
            bucket = self.postings.get(t)
            if bucket is not None:
                bucket.discard(sentence)
                if not bucket:
                    del self.postings[t]
        for t in new - old:
            self.postings.setdefault(t, set()).add(sentence)

    def __eq__(self, other) -> bool:
        return isinstance(other, TokenIndex) and self.postings == other.postings

    def __len__(self) -> int:
        return len(self.postings)


def build_index(store: SentenceStore, unk_id: int | None = None) -> TokenIndex:
    """Fresh index over the store. UNK ids are not indexed (not prunable)."""
    postings: dict[int, set[int]] = {}
    for s, ids in enumerate(store.ids):
        for t in np.unique(ids):
            t = int(t)
            if unk_id is not None and t == unk_id:
                continue
            postings.setdefault(t, set()).add(s)
    return TokenIndex(postings)


def retokenize_sentences(
    store: SentenceStore,
    index: TokenIndex,
    removed: set[int],
    vocab: Vocabulary,
    cv,
    table=None,
    window: int | None = None,
):
    """Re-encode exactly the sentences containing any removed token.

    ``cv`` must already exclude the removed tokens. Untouched sentences
    keep their arrays bit-identical. When the store carries a likelihood
    cache, ``table`` and ``window`` are required and the cache entries of
    re-encoded sentences are refreshed; the returned delta is the new
    minus old total NLL over the whole store (zero contribution from
    untouched sentences).
    """
    for t in removed:
        if is_protected(vocab.tokens[t]):
            raise VocabError(f"cannot remove protected token {vocab.tokens[t]!r}")
    if store.nll is not None and (table is None or window is None):
        raise VocabError("store has a likelihood cache: table and window are required")

    affected: set[int] = set()
    for t in removed:
        affected |= index.sentences(t)
    order = sorted(affected)
    if not order:
        return store, index, 0.0

    memo: dict[str, tuple[list[int], tuple[str, ...]]] = {}
    new_arrays: list[np.ndarray] = []
    for s in order:
        ids: list[int] = []
        unks: list[str] = []
        for w in store.words[s]:
            got = memo.get(w)
            if got is None:
                got = cv.encode_word(w)
                memo[w] = got
            ids.extend(got[0])
            unks.extend(got[1])
        arr = np.asarray(ids, dtype=np.int32)
        new_arrays.append(arr)
        index.update_sentence(s, store.ids[s], arr)
        store.ids[s] = arr
        store.unk_chars[s] = tuple(unks)

    delta = 0.0
    if store.nll is not None:
        from .objective import batched_sentence_nll

        new_nll = batched_sentence_nll([store.ids[s] for s in order], table, window)
        old = np.asarray([store.nll[s] for s in order])
        delta = float(np.sum(new_nll) - np.sum(old))
        for pos, s in enumerate(order):
            store.nll[s] = new_nll[pos]
    return store, index, delta


def save_store(store: SentenceStore, path) -> None:
    """Binary store cache: id sequences plus a vocabulary digest header."""
    flat = np.concatenate([a for a in store.ids]) if store.ids else np.zeros(0, dtype=np.int32)
    lengths = np.asarray([len(a) for a in store.ids], dtype=np.int64)
    unk_payload = json.dumps([list(u) for u in store.unk_chars])
    np.savez_compressed(
        path,
        flat=flat.astype(np.int32),
        lengths=lengths,
        unks=np.frombuffer(unk_payload.encode("utf-8"), dtype=np.uint8),
        vocab_digest=np.frombuffer(store.vocab_digest.encode("utf-8"), dtype=np.uint8),
        nll=store.nll if store.nll is not None else np.zeros(0),
        has_nll=np.asarray([store.nll is not None]),
    )


def load_store(path, corpus: RawCorpus, vocab: Vocabulary) -> SentenceStore:
    """Load a store cache, verifying it was produced under ``vocab``."""
    with np.load(path) as z:
        digest = bytes(z["vocab_digest"]).decode("utf-8")
        if digest != vocab.digest():
            raise DataError(
                f"store cache is stale: built under vocabulary {digest}, expected {vocab.digest()}"
            )
        lengths = z["lengths"]
        flat = z["flat"]
        unks = json.loads(bytes(z["unks"]).decode("utf-8"))
        nll = z["nll"] if bool(z["has_nll"][0]) else None
    if len(lengths) != len(corpus.lines):
        raise DataError("store cache does not match corpus line count")
    ids: list[np.ndarray] = []
    offset = 0
    for n in lengths:
        ids.append(flat[offset : offset + int(n)].copy())
        offset += int(n)
    words = [pretokenize(line) for line in corpus.lines]
    return SentenceStore(
        words, ids, [tuple(u) for u in unks], digest, None if nll is None else nll.copy()
    )
