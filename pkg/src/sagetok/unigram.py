"""Unigram-likelihood vocabulary pruning baseline.

Starts from every frequent word-internal substring, then repeatedly
removes the batch of tokens whose ablation costs the least corpus
log-likelihood, where likelihood uses maximum-likelihood unigram
probabilities refit to the retokenized corpus. Decoding is the shared
greedy encoder throughout, and protected tokens are never candidates.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

import numpy as np

from . import encoder
from .bpe import word_type_counts
from .corpus import RawCorpus, SentenceStore
from .errors import ConfigError, DataError, VocabError
from .vocab import PROV_ALPHABET, PROV_SURVIVOR, Vocabulary, corpus_alphabet, is_protected


def init_substring_vocab(corpus: RawCorpus, max_len: int = 16, min_count: int = 2) -> Vocabulary:
    """All word-internal substrings (marker included) of length <= max_len
    occurring at least min_count times, plus the full alphabet.

    Ordered: alphabet by code point, then substrings by descending count
    and string.
    """
    if max_len < 1:
        raise ConfigError("max_len must be >= 1")
    if len(corpus) == 0:
        raise DataError("cannot build a vocabulary from an empty corpus")
    wcounts = word_type_counts(corpus)
    sub_counts: Counter = Counter()
    for word, count in wcounts.items():
        n = len(word)
        for i in range(n):
            top = min(n, i + max_len)
            for j in range(i + 1, top + 1):
                sub_counts[word[i:j]] += count
    chars, initials = corpus_alphabet(wcounts.keys())
    alphabet = sorted(set(chars) | set(initials))
    learned = sorted(
        (t for t, c in sub_counts.items() if c >= min_count and t not in set(alphabet)),
        key=lambda t: (-sub_counts[t], t),
    )
    tokens = alphabet + learned
    provenance = [PROV_ALPHABET] * len(alphabet) + [PROV_SURVIVOR] * len(learned)
    return Vocabulary(tokens, provenance)


@dataclass
class UnigramModel:
    """Unigram probabilities fit to the current tokenization (MLE).

    ``probs`` has one entry per vocabulary id; ids never emitted by the
    tokenization carry probability zero and must not be scored.
    """

    vocab: Vocabulary
    probs: np.ndarray

    @classmethod
    def fit(cls, store: SentenceStore, vocab: Vocabulary) -> "UnigramModel":
        counts = np.zeros(len(vocab), dtype=np.int64)
        for ids in store.ids:
            counts += np.bincount(ids, minlength=len(vocab))[: len(vocab)]
        total = counts.sum()
        if total == 0:
            raise DataError("store is empty; cannot fit unigram probabilities")
        return cls(vocab, counts / total)


def corpus_loglik(store: SentenceStore, model: UnigramModel) -> float:
    """Sum of log-probabilities of every token occurrence (<= 0)."""
    counts = np.zeros(len(model.vocab), dtype=np.int64)
    for ids in store.ids:
        if len(ids) and int(ids.max()) >= len(model.vocab):
            raise VocabError("store contains ids outside the model vocabulary")
        counts += np.bincount(ids, minlength=len(model.vocab))[: len(model.vocab)]
    used = counts > 0
    if np.any(used & (model.probs <= 0)):
        bad = int(np.nonzero(used & (model.probs <= 0))[0][0])
        raise VocabError(f"token {model.vocab.tokens[bad]!r} has zero probability")
    return float(np.sum(counts[used] * np.log(model.probs[used])))


def _loglik_from_counts(counts: np.ndarray) -> float:
    """MLE corpus log-likelihood from integer token counts.

    Equals sum(c * log(c / N)) over the support; written as
    sum(c * log c) - N * log N so every caller sums in id order.
    """
    used = counts > 0
    total = int(counts.sum())
    if total == 0:
        return 0.0
    c = counts[used].astype(np.float64)
    return float(np.sum(c * np.log(c)) - total * np.log(total))


def train_unigram(
    corpus: RawCorpus,
    target_size: int,
    prune_batch: int = 1,
    max_len: int = 16,
    min_count: int = 2,
) -> Vocabulary:
    """Prune an all-substrings vocabulary down to ``target_size``.

    Each iteration scores every prunable token by the likelihood change
    of removing it (retokenizing affected words, refitting MLE
    probabilities), prunes the lowest min(batch, excess) tokens, and
    refits. Ties go to lower corpus frequency, then the smaller string.
    """
    if prune_batch < 1:
        raise ConfigError("prune batch must be >= 1")
    vocab = init_substring_vocab(corpus, max_len=max_len, min_count=min_count)
    n_protected = sum(1 for t in vocab.tokens if is_protected(t))
    if target_size < n_protected:
        raise ConfigError(
            f"target size {target_size} is below the protected alphabet size {n_protected}"
        )
    if target_size >= len(vocab):
        return vocab

    wcounts = word_type_counts(corpus)
    word_list = sorted(wcounts)
    word_weight = np.asarray([wcounts[w] for w in word_list], dtype=np.int64)

    alive = set(range(len(vocab)))
    cv = encoder.compile(vocab, alive)
    word_ids: list[list[int]] = [cv.encode_word(w)[0] for w in word_list]
    token_words: dict[int, set[int]] = {}
    counts = np.zeros(len(vocab), dtype=np.int64)
    for wi, ids in enumerate(word_ids):
        for t in ids:
            counts[t] += word_weight[wi]
        for t in set(ids):
            token_words.setdefault(t, set()).add(wi)

    while len(alive) > target_size:
        batch = min(prune_batch, len(alive) - target_size)
        base = _loglik_from_counts(counts)
        scored: list[tuple[float, int, str, int]] = []
        for t in sorted(alive):
            if is_protected(vocab.tokens[t]):
                continue
            trial = counts.copy()
            for wi in token_words.get(t, ()):
                new_ids = cv.encode_word(word_list[wi], frozenset((t,)))[0]
                w = word_weight[wi]
                for old_t in word_ids[wi]:
                    trial[old_t] -= w
                for new_t in new_ids:
                    trial[new_t] += w
            loss = _loglik_from_counts(trial) - base
            scored.append((loss, int(counts[t]), vocab.tokens[t], t))
        scored.sort(key=lambda item: item[:3])
        pruned = {item[3] for item in scored[:batch]}

        alive -= pruned
        cv = encoder.compile(vocab, alive)
        changed = set()
        for t in pruned:
            changed |= token_words.pop(t, set())
        for wi in sorted(changed):
            new_ids = cv.encode_word(word_list[wi])[0]
            w = word_weight[wi]
            for old_t in word_ids[wi]:
                counts[old_t] -= w
            for new_t in new_ids:
                counts[new_t] += w
            for old_t in set(word_ids[wi]) - set(new_ids):
                bucket = token_words.get(old_t)
                if bucket is not None:
                    bucket.discard(wi)
                    if not bucket:
                        del token_words[old_t]
            for new_t in set(new_ids) - set(word_ids[wi]):
                token_words.setdefault(new_t, set()).add(wi)
            word_ids[wi] = new_ids

    return vocab.subset(alive)


def save_probs(model: UnigramModel, path, meta: dict | None = None) -> None:
    """TSV dump: token <TAB> log-probability, support only."""
    lines = [f"#sagetok {k}={v}" for k, v in (meta or {}).items()]
    for i, token in enumerate(model.vocab.tokens):
        if model.probs[i] > 0:
            lines.append(f"{token}\t{np.log(model.probs[i])}")
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines) + "\n")
