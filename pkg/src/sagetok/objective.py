"""Skipgram corpus likelihood and per-token ablation losses.

The score of a tokenized corpus is the negative log-likelihood of
predicting each in-window context token from its target token through
the sigmoid of the target/context embedding dot product. Windows span
``window`` tokens on each side, truncated at sentence boundaries, and
every ordered (target, context) pair contributes one term. No negative
sampling enters this computation; it is pure likelihood estimation over
frozen embedding tables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import SentenceStore, TokenIndex
from .errors import VocabError
from .vocab import Vocabulary, is_protected


def softplus(x: np.ndarray) -> np.ndarray:
    """log(1 + exp(x)) with the standard large-|x| stable branch."""
    x = np.asarray(x, dtype=np.float64)
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


@dataclass(frozen=True)
class AblationLoss:
    """Change in total NLL caused by removing one token and re-encoding."""

    token_id: int
    loss: float
    affected_sentences: int


def _check_ids(ids: np.ndarray, rows: int) -> None:
    if len(ids) and (int(ids.max()) >= rows or int(ids.min()) < 0):
        raise VocabError(
            f"token id out of bounds for embedding table with {rows} rows"
        )


def batched_sentence_nll(sentences: list[np.ndarray], table, window: int) -> np.ndarray:
    """Per-sentence NLL for a batch, sharing one vectorized pass.

    Pairs never cross sentence boundaries. Per-sentence sums are
    accumulated offset by offset in a fixed order, so results do not
    depend on how sentences are grouped into batches.
    """
    if not sentences:
        return np.zeros(0, dtype=np.float64)
    # per-sentence accumulation in extended precision, rounded once at
    # the end; keeps sums independent of addition order at double
    # precision (the zero-table combinatorial identity holds exactly)
    acc = np.zeros(len(sentences), dtype=np.longdouble)
    flat = np.concatenate(sentences) if len(sentences) > 1 else np.asarray(sentences[0])
    flat = flat.astype(np.int64, copy=False)
    _check_ids(flat, table.target.shape[0])
    if len(flat) == 0:
        return acc.astype(np.float64)
    sent_of = np.repeat(np.arange(len(sentences)), [len(s) for s in sentences])
    tgt = table.target[flat]
    ctx = table.context[flat]
    for delta in range(1, window + 1):
        if delta >= len(flat):
            break
        same = sent_of[:-delta] == sent_of[delta:]
        if not same.any():
            continue
        seg = sent_of[:-delta][same]
        # target at i predicting context at i+delta, and the reverse
        fwd = np.einsum("ij,ij->i", tgt[:-delta][same], ctx[delta:][same])
        bwd = np.einsum("ij,ij->i", tgt[delta:][same], ctx[:-delta][same])
        vals = softplus(-fwd) + softplus(-bwd)
        np.add.at(acc, seg, vals)
    return acc.astype(np.float64)


def sentence_nll(ids, table, window: int) -> float:
    """NLL of one sentence; zero when it has fewer than two tokens."""
    arr = np.asarray(ids, dtype=np.int64)
    return float(batched_sentence_nll([arr], table, window)[0])


def corpus_nll(store: SentenceStore, table, window: int, chunk_sentences: int = 4096) -> float:
    """Sum of per-sentence NLL over the whole store.

    Refreshes the store's likelihood cache as a side product when one is
    allocated; chunking is by whole sentences so cached values are
    independent of the chunk size.
    """
    if store.vocab_digest and getattr(table, "vocab_digest", "") and store.vocab_digest != table.vocab_digest:
        raise VocabError(
            "store and embedding table were built under different vocabularies"
        )
    total = 0.0
    for start in range(0, len(store.ids), chunk_sentences):
        chunk = store.ids[start : start + chunk_sentences]
        vals = batched_sentence_nll(chunk, table, window)
        if store.nll is not None:
            store.nll[start : start + len(chunk)] = vals
        total += float(np.sum(vals))
    return total


def attach_nll_cache(store: SentenceStore, table, window: int) -> float:
    """Allocate and fill the store's per-sentence NLL cache; returns the total."""
    store.nll = np.zeros(len(store.ids), dtype=np.float64)
    return corpus_nll(store, table, window)


def ablation_loss(
    token_id: int,
    store: SentenceStore,
    index: TokenIndex,
    vocab: Vocabulary,
    table,
    cv,
    window: int,
    word_cache: dict[str, list[int]] | None = None,
) -> AblationLoss:
    """Score removing ``token_id``: re-encode only the sentences that
    contain it (on scratch copies; the store is never touched) and return
    new-minus-old NLL over those sentences.

    Requires a cached per-sentence NLL so the old side is read, not
    recomputed. ``word_cache`` may supply current word tokenizations so
    only words actually containing the token are re-segmented.
    """
    token = vocab.tokens[token_id]
    if is_protected(token):
        raise VocabError(f"token {token!r} is protected and cannot be ablated")
    if store.nll is None:
        raise VocabError("ablation scoring requires a store with a likelihood cache")
    affected = sorted(index.sentences(token_id))
    if not affected:
        return AblationLoss(token_id, 0.0, 0)
    banned = frozenset((token_id,))
    memo: dict[str, list[int]] = {}
    new_sentences: list[np.ndarray] = []
    for s in affected:
        ids: list[int] = []
        for w in store.words[s]:
            got = memo.get(w)
            if got is None:
                if word_cache is not None:
                    cur = word_cache[w]
                    got = cv.encode_word(w, banned)[0] if token_id in cur else cur
                else:
                    got = cv.encode_word(w, banned)[0]
                memo[w] = got
            ids.extend(got)
        new_sentences.append(np.asarray(ids, dtype=np.int64))
    new_vals = batched_sentence_nll(new_sentences, table, window)
    old_vals = np.asarray([store.nll[s] for s in affected])
    loss = float(np.sum(new_vals) - np.sum(old_vals))
    return AblationLoss(token_id, loss, len(affected))
