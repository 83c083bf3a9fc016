"""Context-aware vocabulary pruning driven by the skipgram objective.

The trainer overshoots the target vocabulary size with a base trainer
(BPE by default), trains embedding tables over the tokenized corpus,
then iteratively removes the batch of tokens whose ablation least hurts
the corpus skipgram likelihood. Heavy steps are amortized: full loss
recalculation happens every ``recalc_period`` iterations (candidates in
between come from a cached bottom set), and embeddings are retrained
every ``embed_period`` full-recalculation cycles. Protected tokens are
never candidates, all bookkeeping is incremental at sentence level, and
every pruning decision is appended to a replayable event log.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import encoder
from .bpe import train_bpe, word_type_counts
from .corpus import RawCorpus, SentenceStore, TokenIndex, build_index, retokenize_sentences
from .embeddings import EmbedConfig, SkipGramTable, train_embeddings
from .errors import ConfigError, DataError, VocabError
from .objective import ablation_loss, attach_nll_cache, corpus_nll
from .unigram import train_unigram
from .vocab import Vocabulary, is_protected, load_vocab

BASE_TRAINERS = ("bpe", "unigram", "file")


@dataclass(frozen=True)
class SageConfig:
    """All pruning-loop hyperparameters.

    ``window`` scopes the scoring objective; embedding training has its
    own window inside ``embed``.
    """

    final_size: int
    overshoot: float = 1.25
    prune_batch: int = 100
    recalc_period: int = 10
    candidate_pool: int = 1500
    embed_period: int = 4
    window: int = 5
    embed: EmbedConfig = field(default_factory=EmbedConfig)
    base_trainer: str = "bpe"
    initial_vocab_path: str | None = None
    unigram_max_len: int = 16
    unigram_min_count: int = 2

    def initial_size(self) -> int:
        return math.ceil(self.overshoot * self.final_size)

    def validate(self) -> None:
        """Raise one ConfigError listing every problem, before any work starts."""
        problems = []
        if self.final_size < 1:
            problems.append("final vocabulary size must be >= 1")
        if self.prune_batch < 1:
            problems.append("prune batch must be >= 1")
        if self.recalc_period < 1:
            problems.append("loss recalculation period must be >= 1")
        if self.embed_period < 1:
            problems.append("embedding recalculation period must be >= 1")
        if self.candidate_pool < self.prune_batch:
            problems.append("candidate pool must be at least the prune batch size")
        if self.window < 1:
            problems.append("window must be >= 1")
        if self.base_trainer not in BASE_TRAINERS:
            problems.append(f"unknown base trainer {self.base_trainer!r}")
        if self.base_trainer == "file" and not self.initial_vocab_path:
            problems.append("base trainer 'file' requires initial_vocab_path")
        if (
            self.base_trainer != "file"
            and self.final_size >= 1
            and self.initial_size() <= self.final_size
        ):
            problems.append("overshoot must make the initial vocabulary larger than the target")
        try:
            self.embed.validate()
        except ConfigError as exc:
            problems.append(str(exc))
        if problems:
            raise ConfigError("; ".join(problems))

    def digest(self) -> str:
        import hashlib

        payload = dataclasses.asdict(self)
        return hashlib.sha256(json.dumps(payload, sort_keys=True).encode()).hexdigest()[:16]


@dataclass
class PruneState:
    """Everything the pruning loop mutates, plus its replayable event log."""

    iteration: int
    vocab: Vocabulary
    alive: set[int]
    store: SentenceStore
    index: TokenIndex
    table: SkipGramTable
    bottom: list[int]
    losses: dict[int, float]
    events: list[dict]
    total_nll: float
    freq: np.ndarray
    cv: encoder.CompiledVocab
    word_ids: dict[str, list[int]]
    token_words: dict[int, set[str]]
    word_weight: dict[str, int]
    loss_evals: list[int] = field(default_factory=list)
    embeddings_fresh: bool = True

    def alive_size(self) -> int:
        return len(self.alive)

    def alive_vocabulary(self) -> Vocabulary:
        return self.vocab.subset(self.alive)


def _train_base(corpus: RawCorpus, cfg: SageConfig) -> Vocabulary:
    size = cfg.initial_size()
    if cfg.base_trainer == "bpe":
        vocab, _ = train_bpe(corpus, size)
    elif cfg.base_trainer == "unigram":
        vocab = train_unigram(
            corpus,
            size,
            prune_batch=cfg.prune_batch,
            max_len=cfg.unigram_max_len,
            min_count=cfg.unigram_min_count,
        )
    else:
        vocab, _ = load_vocab(cfg.initial_vocab_path)
    if len(vocab) < cfg.final_size:
        raise DataError(
            f"base vocabulary has {len(vocab)} tokens, below the target {cfg.final_size}"
        )
    return vocab


def init_state(corpus: RawCorpus, cfg: SageConfig) -> PruneState:
    """Base vocabulary, tokenized store, index, initial embeddings, caches."""
    cfg.validate()
    if len(corpus) == 0:
        raise DataError("cannot train on an empty corpus")
    vocab = _train_base(corpus, cfg)
    n_protected = sum(1 for t in vocab.tokens if is_protected(t))
    if cfg.final_size < n_protected:
        raise ConfigError(
            f"target size {cfg.final_size} is below the {n_protected} protected tokens "
            "of the base vocabulary"
        )
    cv = encoder.compile(vocab)
    store = encoder.encode_corpus(corpus, cv)
    index = build_index(store, unk_id=vocab.unk_id)
    table = train_embeddings(store, vocab, cfg.embed)
    total_nll = attach_nll_cache(store, table, cfg.window)

    wcounts = word_type_counts(corpus)
    word_ids: dict[str, list[int]] = {}
    token_words: dict[int, set[str]] = {}
    freq = np.zeros(len(vocab), dtype=np.int64)
    for word, weight in wcounts.items():
        ids = cv.encode_word(word)[0]
        word_ids[word] = ids
        for t in ids:
            if t != vocab.unk_id:
                freq[t] += weight
        for t in set(ids):
            if t != vocab.unk_id:
                token_words.setdefault(t, set()).add(word)

    return PruneState(
        iteration=0,
        vocab=vocab,
        alive=set(range(len(vocab))),
        store=store,
        index=index,
        table=table,
        bottom=[],
        losses={},
        events=[],
        total_nll=total_nll,
        freq=freq,
        cv=cv,
        word_ids=word_ids,
        token_words=token_words,
        word_weight=dict(wcounts),
    )


def _rank_key(state: PruneState, losses: dict[int, float]):
    """Prune order: lowest loss, then lowest corpus frequency, then token string."""

    def key(t: int):
        return (losses[t], int(state.freq[t]), state.vocab.tokens[t])

    return key


def _commit_prune(state: PruneState, cfg: SageConfig, pruned: set[int]) -> float:
    """Remove tokens, re-encode affected sentences, refresh all caches."""
    state.alive -= pruned
    state.cv = encoder.compile(state.vocab, state.alive)
    _, _, delta = retokenize_sentences(
        state.store, state.index, pruned, state.vocab, state.cv, state.table, cfg.window
    )
    changed: set[str] = set()
    for t in pruned:
        changed |= state.token_words.pop(t, set())
    for word in sorted(changed):
        new_ids = state.cv.encode_word(word)[0]
        old_ids = state.word_ids[word]
        weight = state.word_weight[word]
        for t in old_ids:
            if t != state.vocab.unk_id:
                state.freq[t] -= weight
        for t in new_ids:
            if t != state.vocab.unk_id:
                state.freq[t] += weight
        for t in set(old_ids) - set(new_ids):
            bucket = state.token_words.get(t)
            if bucket is not None:
                bucket.discard(word)
                if not bucket:
                    del state.token_words[t]
        for t in set(new_ids) - set(old_ids):
            state.token_words.setdefault(t, set()).add(word)
        state.word_ids[word] = new_ids
    return delta


def prune_iteration(state: PruneState, cfg: SageConfig) -> PruneState:
    """One pass of the pruning loop; appends one event and advances i."""
    if state.alive_size() <= cfg.final_size:
        raise VocabError("vocabulary already at (or below) the target size")

    cycle = cfg.embed_period * cfg.recalc_period
    retrained = False
    if state.iteration % cycle == 0 and not state.embeddings_fresh:
        embed_cfg = dataclasses.replace(cfg.embed, seed=cfg.embed.seed + state.iteration)
        state.table = train_embeddings(state.store, state.vocab, embed_cfg)
        state.total_nll = corpus_nll(state.store, state.table, cfg.window)
        retrained = True
    state.embeddings_fresh = False

    need = min(cfg.prune_batch, state.alive_size() - cfg.final_size)
    full = state.iteration % cfg.recalc_period == 0
    forced = False
    if not full and len(state.bottom) < need:
        full = True
        forced = True

    if full:
        candidates = [
            t for t in sorted(state.alive) if not is_protected(state.vocab.tokens[t])
        ]
    else:
        candidates = list(state.bottom)

    losses: dict[int, float] = {}
    for t in candidates:
        losses[t] = ablation_loss(
            t,
            state.store,
            state.index,
            state.vocab,
            state.table,
            state.cv,
            cfg.window,
            word_cache=state.word_ids,
        ).loss
    state.loss_evals.append(len(candidates))

    if full:
        ranked = sorted(candidates, key=_rank_key(state, losses))
        state.bottom = ranked[: cfg.candidate_pool]
    else:
        ranked = sorted(state.bottom, key=_rank_key(state, losses))
        state.bottom = ranked
    state.losses = {t: losses[t] for t in state.bottom}

    pruned_list = state.bottom[:need]
    pruned = set(pruned_list)
    state.bottom = state.bottom[need:]
    event_losses = {t: state.losses.pop(t) for t in pruned_list}

    delta = _commit_prune(state, cfg, pruned)
    state.total_nll += delta

    state.events.append(
        {
            "iteration": state.iteration,
            "pruned": [
                {"id": int(t), "token": state.vocab.tokens[t], "loss": float(event_losses[t])}
                for t in pruned_list
            ],
            "vocab_size": state.alive_size(),
            "total_nll": float(state.total_nll),
            "full_recalc": bool(full),
            "forced_recalc": bool(forced),
            "embeddings_retrained": bool(retrained),
            "loss_evals": len(candidates),
        }
    )
    state.iteration += 1
    return state


def train_sage(
    corpus: RawCorpus,
    cfg: SageConfig,
    checkpoint_path=None,
    checkpoint_every: int | None = None,
    resume_path=None,
    progress=None,
) -> tuple[Vocabulary, list[dict]]:
    """Run the full pruning loop down to exactly ``final_size`` tokens.

    Returns the final vocabulary (initial order preserved) and the event
    log. ``checkpoint_path``/``checkpoint_every`` write resumable
    snapshots at iteration boundaries; ``resume_path`` continues one.
    """
    if resume_path is not None:
        state = load_checkpoint(resume_path, corpus, cfg)
    else:
        state = init_state(corpus, cfg)
    while state.alive_size() > cfg.final_size:
        prune_iteration(state, cfg)
        if progress is not None:
            progress(state.events[-1])
        if checkpoint_path is not None and checkpoint_every:
            if state.iteration % checkpoint_every == 0:
                save_checkpoint(state, cfg, corpus, checkpoint_path)
    if checkpoint_path is not None:
        save_checkpoint(state, cfg, corpus, checkpoint_path)
    return state.alive_vocabulary(), state.events


def save_events(events: list[dict], path, meta: dict | None = None) -> None:
    """Event log as JSON lines; the first record carries run metadata."""
    with open(path, "w", encoding="utf-8") as f:
        f.write(json.dumps({"meta": meta or {}}) + "\n")
        for event in events:
            f.write(json.dumps(event) + "\n")


def load_events(path) -> tuple[list[dict], dict]:
    events = []
    meta: dict = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            record = json.loads(line)
            if "meta" in record and not events:
                meta = record["meta"]
            else:
                events.append(record)
    return events, meta


def save_checkpoint(state: PruneState, cfg: SageConfig, corpus: RawCorpus, path) -> None:
    """Resumable snapshot at an iteration boundary.

    The store is not serialized: re-encoding the corpus under the alive
    vocabulary reproduces it exactly, and per-sentence likelihoods are
    recomputed from the dumped tables bit-for-bit.
    """
    np.savez_compressed(
        path,
        tokens=np.frombuffer(
            json.dumps(list(state.vocab.tokens)).encode("utf-8"), dtype=np.uint8
        ),
        provenance=np.frombuffer(
            json.dumps(list(state.vocab.provenance)).encode("utf-8"), dtype=np.uint8
        ),
        alive=np.asarray(sorted(state.alive), dtype=np.int64),
        iteration=np.asarray([state.iteration], dtype=np.int64),
        target=state.table.target,
        context=state.table.context,
        window=np.asarray([state.table.window], dtype=np.int64),
        bottom=np.asarray(state.bottom, dtype=np.int64),
        bottom_losses=np.asarray([state.losses.get(t, 0.0) for t in state.bottom]),
        events=np.frombuffer(json.dumps(state.events).encode("utf-8"), dtype=np.uint8),
        total_nll=np.asarray([state.total_nll]),
        config_digest=np.frombuffer(cfg.digest().encode("utf-8"), dtype=np.uint8),
        corpus_digest=np.frombuffer(corpus.digest().encode("utf-8"), dtype=np.uint8),
        embeddings_fresh=np.asarray([state.embeddings_fresh]),
    )


def load_checkpoint(path, corpus: RawCorpus, cfg: SageConfig) -> PruneState:
    cfg.validate()
    with np.load(path) as z:
        if bytes(z["config_digest"]).decode() != cfg.digest():
            raise ConfigError("checkpoint was written under a different configuration")
        if bytes(z["corpus_digest"]).decode() != corpus.digest():
            raise DataError("checkpoint was written for a different corpus")
        tokens = json.loads(bytes(z["tokens"]).decode("utf-8"))
        provenance = json.loads(bytes(z["provenance"]).decode("utf-8"))
        alive = set(int(t) for t in z["alive"])
        iteration = int(z["iteration"][0])
        table = SkipGramTable(
            z["target"].copy(), z["context"].copy(), z["target"].shape[1], int(z["window"][0])
        )
        bottom = [int(t) for t in z["bottom"]]
        bottom_losses = [float(x) for x in z["bottom_losses"]]
        events = json.loads(bytes(z["events"]).decode("utf-8"))
        total_nll = float(z["total_nll"][0])
        fresh = bool(z["embeddings_fresh"][0])

    vocab = Vocabulary(tokens, provenance)
    table.vocab_digest = vocab.digest()
    cv = encoder.compile(vocab, alive)
    store = encoder.encode_corpus(corpus, cv)
    store.vocab_digest = vocab.digest()
    index = build_index(store, unk_id=vocab.unk_id)
    attach_nll_cache(store, table, cfg.window)

    wcounts = word_type_counts(corpus)
    word_ids: dict[str, list[int]] = {}
    token_words: dict[int, set[str]] = {}
    freq = np.zeros(len(vocab), dtype=np.int64)
    for word, weight in wcounts.items():
        ids = cv.encode_word(word)[0]
        word_ids[word] = ids
        for t in ids:
            if t != vocab.unk_id:
                freq[t] += weight
        for t in set(ids):
            if t != vocab.unk_id:
                token_words.setdefault(t, set()).add(word)

    return PruneState(
        iteration=iteration,
        vocab=vocab,
        alive=alive,
        store=store,
        index=index,
        table=table,
        bottom=bottom,
        losses=dict(zip(bottom, bottom_losses)),
        events=events,
        total_nll=total_nll,
        freq=freq,
        cv=cv,
        word_ids=word_ids,
        token_words=token_words,
        word_weight=dict(wcounts),
        embeddings_fresh=fresh,
    )
