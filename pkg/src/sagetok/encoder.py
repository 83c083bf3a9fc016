"""Greedy longest-match encoder, the single decoding semantics of the toolkit.

Every trainer and every inference path segments a word the same way:
repeatedly take the longest vocabulary token that prefixes the remaining
suffix. A character with no match at all (not even as a single-character
token) emits the reserved UNK id and advances one position; the source
character is recorded so decoding stays lossless.
"""

from __future__ import annotations

from collections.abc import Iterable

import numpy as np

from .corpus import RawCorpus, SentenceStore, pretokenize
from .errors import VocabError
from .vocab import Vocabulary


class _TrieNode:
    __slots__ = ("children", "token_id")

    def __init__(self):
        self.children: dict[str, _TrieNode] = {}
        self.token_id: int | None = None


class CompiledVocab:
    """Prefix trie over the active tokens of a vocabulary.

    Immutable once built; share freely across threads. ``token_ids`` keep
    the ids of the underlying vocabulary, so a trie compiled over a
    pruned subset still emits stable ids.
    """

    __slots__ = ("vocab", "root", "unk_id", "active_count", "active_digest")

    def __init__(self, vocab: Vocabulary, root: _TrieNode, active_count: int, active_digest: str):
        self.vocab = vocab
        self.root = root
        self.unk_id = vocab.unk_id
        self.active_count = active_count
        self.active_digest = active_digest

    def longest_prefix(self, text: str, start: int = 0, banned: frozenset[int] = frozenset()):
        """(token_id, match length) of the longest active token prefixing text[start:].

        Returns (None, 0) when nothing matches.
        """
        node = self.root
        best_id: int | None = None
        best_len = 0
        for i in range(start, len(text)):
            node = node.children.get(text[i])
            if node is None:
                break
            if node.token_id is not None and node.token_id not in banned:
                best_id = node.token_id
                best_len = i - start + 1
        return best_id, best_len

    def encode_word(self, word: str, banned: frozenset[int] = frozenset()):
        """Segment one marker-prefixed word into token ids.

        Returns (ids, unk_chars); unk_chars lists the source characters
        of UNK emissions in order.
        """
        ids: list[int] = []
        unks: list[str] = []
        pos = 0
        n = len(word)
        while pos < n:
            token_id, length = self.longest_prefix(word, pos, banned)
            if token_id is None:
                ids.append(self.unk_id)
                unks.append(word[pos])
                pos += 1
            else:
                ids.append(token_id)
                pos += length
        return ids, unks


def compile(vocab: Vocabulary, active_ids: Iterable[int] | None = None) -> CompiledVocab:
    """Build the longest-prefix structure over ``active_ids`` (default: all).

    Build time is linear in total token characters.
    """
    if len(vocab) == 0:
        raise VocabError("cannot compile an empty vocabulary")
    ids = range(len(vocab)) if active_ids is None else sorted(set(active_ids))
    root = _TrieNode()
    active_tokens: list[str] = []
    for token_id in ids:
        token = vocab.tokens[token_id]
        node = root
        for ch in token:
            nxt = node.children.get(ch)
            if nxt is None:
                nxt = _TrieNode()
                node.children[ch] = nxt
            node = nxt
        if node.token_id is not None:
            raise VocabError(f"duplicate token {token!r} while compiling")
        node.token_id = token_id
        active_tokens.append(token)
    import hashlib

    digest = hashlib.sha256("\n".join(active_tokens).encode("utf-8")).hexdigest()[:16]
    return CompiledVocab(vocab, root, len(active_tokens), digest)


def encode_corpus(corpus: RawCorpus, cv: CompiledVocab) -> SentenceStore:
    """Pretokenize and encode every line; likelihood cache left unset."""
    memo: dict[str, tuple[list[int], list[str]]] = {}
    words_all: list[tuple[str, ...]] = []
    ids_all: list[np.ndarray] = []
    unks_all: list[tuple[str, ...]] = []
    for line in corpus.lines:
        words = pretokenize(line)
        ids: list[int] = []
        unks: list[str] = []
        for w in words:
            got = memo.get(w)
            if got is None:
                got = cv.encode_word(w)
                memo[w] = got
            ids.extend(got[0])
            unks.extend(got[1])
        words_all.append(words)
        ids_all.append(np.asarray(ids, dtype=np.int32))
        unks_all.append(tuple(unks))
    return SentenceStore(words_all, ids_all, unks_all, cv.active_digest)
