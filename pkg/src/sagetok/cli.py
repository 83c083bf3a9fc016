"""Command-line entry point.

Subcommands: train-bpe, train-unigram, train-sage, encode, analyze,
diff. Every output file carries a ``#sagetok`` metadata header (tool
version, config hash, corpus hash, seed). Long runs report progress as
JSON lines on stderr. Exit codes: 0 success, 2 config error, 3 data
error, 4 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__, analysis, bpe, encoder, sage, unigram
from .corpus import NormalizePolicy, load_corpus, pretokenize
from .embeddings import EmbedConfig
from .errors import ConfigError, DataError, SagetokError
from .unigram import UnigramModel
from .vocab import load_vocab, save_vocab


def _meta(corpus_digest: str, config_digest: str, seed: int | None = None) -> dict:
    meta = {"version": __version__, "config": config_digest, "corpus": corpus_digest}
    if seed is not None:
        meta["seed"] = seed
    return meta


def _config_digest(payload: dict) -> str:
    import hashlib

    return hashlib.sha256(json.dumps(payload, sort_keys=True, default=str).encode()).hexdigest()[:16]


def _policy(args) -> NormalizePolicy:
    return NormalizePolicy(lowercase=getattr(args, "lowercase", False))


def cmd_train_bpe(args) -> int:
    corpus = load_corpus(args.corpus, _policy(args))
    vocab, merges = bpe.train_bpe(corpus, args.vocab_size)
    digest = _config_digest({"cmd": "train-bpe", "vocab_size": args.vocab_size})
    meta = _meta(corpus.digest(), digest)
    save_vocab(vocab, args.out, meta)
    merge_path = args.merge_log or str(args.out) + ".merges"
    bpe.save_merges(merges, merge_path, meta)
    print(f"wrote {len(vocab)} tokens to {args.out}, {len(merges)} merges to {merge_path}")
    return 0


def cmd_train_unigram(args) -> int:
    corpus = load_corpus(args.corpus, _policy(args))
    vocab = unigram.train_unigram(
        corpus,
        args.vocab_size,
        prune_batch=args.prune_batch,
        max_len=args.max_len,
        min_count=args.min_count,
    )
    digest = _config_digest(
        {
            "cmd": "train-unigram",
            "vocab_size": args.vocab_size,
            "prune_batch": args.prune_batch,
            "max_len": args.max_len,
            "min_count": args.min_count,
        }
    )
    meta = _meta(corpus.digest(), digest)
    save_vocab(vocab, args.out, meta)
    if args.probs_out:
        cv = encoder.compile(vocab)
        store = encoder.encode_corpus(corpus, cv)
        unigram.save_probs(UnigramModel.fit(store, vocab), args.probs_out, meta)
    print(f"wrote {len(vocab)} tokens to {args.out}")
    return 0


def _load_config_file(path) -> dict:
    try:
        with open(path, encoding="utf-8") as f:
            return json.load(f)
    except OSError as exc:
        raise DataError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc


_SAGE_KEYS = (
    "vocab_size",
    "overshoot",
    "prune_batch",
    "candidate_pool",
    "recalc_every",
    "embed_every",
    "window",
    "dim",
    "embed_window",
    "negatives",
    "epochs",
    "lr",
    "seed",
    "base_trainer",
    "initial_vocab",
)

_SAGE_DEFAULTS = {
    "vocab_size": 16000,
    "overshoot": 1.25,
    "prune_batch": 100,
    "candidate_pool": 1500,
    "recalc_every": 10,
    "embed_every": 4,
    "window": 5,
    "dim": 50,
    "embed_window": 5,
    "negatives": 15,
    "epochs": 5,
    "lr": 0.025,
    "seed": 1,
    "base_trainer": "bpe",
    "initial_vocab": None,
}


def _sage_config(args) -> sage.SageConfig:
    """Flags > config file > defaults."""
    file_cfg = _load_config_file(args.config) if args.config else {}
    unknown = set(file_cfg) - set(_SAGE_KEYS)
    if unknown:
        raise ConfigError(f"unknown config file keys: {sorted(unknown)}")
    values = {}
    for key in _SAGE_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
        elif key in file_cfg:
            values[key] = file_cfg[key]
        else:
            values[key] = _SAGE_DEFAULTS[key]
    embed = EmbedConfig(
        dim=values["dim"],
        window=values["embed_window"],
        negatives=values["negatives"],
        epochs=values["epochs"],
        lr_initial=values["lr"],
        seed=values["seed"],
    )
    base = "file" if values["initial_vocab"] else values["base_trainer"]
    return sage.SageConfig(
        final_size=values["vocab_size"],
        overshoot=values["overshoot"],
        prune_batch=values["prune_batch"],
        recalc_period=values["recalc_every"],
        candidate_pool=values["candidate_pool"],
        embed_period=values["embed_every"],
        window=values["window"],
        embed=embed,
        base_trainer=base,
        initial_vocab_path=values["initial_vocab"],
    )


def cmd_train_sage(args) -> int:
    cfg = _sage_config(args)
    cfg.validate()
    corpus = load_corpus(args.corpus, _policy(args))

    def progress(event: dict) -> None:
        print(
            json.dumps(
                {
                    "iteration": event["iteration"],
                    "vocab_size": event["vocab_size"],
                    "total_nll": event["total_nll"],
                }
            ),
            file=sys.stderr,
            flush=True,
        )

    vocab, events = sage.train_sage(
        corpus,
        cfg,
        checkpoint_path=args.checkpoint,
        checkpoint_every=args.checkpoint_every,
        resume_path=args.resume,
        progress=progress if not args.quiet else None,
    )
    meta = _meta(corpus.digest(), cfg.digest(), cfg.embed.seed)
    save_vocab(vocab, args.out, meta)
    events_path = args.events_out or str(args.out) + ".events.jsonl"
    sage.save_events(events, events_path, meta)
    print(f"wrote {len(vocab)} tokens to {args.out}, event log to {events_path}")
    return 0


def cmd_encode(args) -> int:
    vocab, _ = load_vocab(args.vocab)
    cv = encoder.compile(vocab)
    corpus = load_corpus(args.input, _policy(args))
    out = open(args.out, "w", encoding="utf-8") if args.out else sys.stdout
    try:
        memo: dict[str, tuple[list[int], list[str]]] = {}
        for line in corpus.lines:
            pieces: list[str] = []
            for word in pretokenize(line):
                got = memo.get(word)
                if got is None:
                    got = cv.encode_word(word)
                    memo[word] = got
                ids, unks = got
                if args.format == "ids":
                    pieces.extend(str(i) for i in ids)
                else:
                    unk_iter = iter(unks)
                    for i in ids:
                        pieces.append(next(unk_iter) if i == cv.unk_id else vocab.tokens[i])
            out.write(" ".join(pieces) + "\n")
    finally:
        if args.out:
            out.close()
    return 0


def cmd_analyze(args) -> int:
    vocab, _ = load_vocab(args.vocab)
    corpus = load_corpus(args.corpus, _policy(args))
    cv = encoder.compile(vocab)
    digest = _config_digest({"cmd": "analyze", "window": args.window})
    meta = _meta(corpus.digest(), digest)
    outdir = Path(args.outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    analysis.write_histogram_csv(
        analysis.token_length_hist(vocab), outdir / "token_length.csv", "length", meta
    )
    analysis.write_histogram_csv(
        analysis.fertility_hist(corpus, cv), outdir / "fertility.csv", "subwords_per_word", meta
    )
    stats = analysis.token_stats(corpus, cv, args.window)
    analysis.write_token_stats_csv(stats, outdir / "token_stats.csv", meta)
    report = analysis.summary_report(vocab, corpus, cv, args.window, meta)
    with open(outdir / "summary.json", "w", encoding="utf-8") as f:
        json.dump(report, f, indent=2, sort_keys=True)
    print(f"wrote analysis reports to {outdir}")
    return 0


def cmd_diff(args) -> int:
    vocab_a, _ = load_vocab(args.a)
    vocab_b, _ = load_vocab(args.b)
    report = analysis.vocab_diff(vocab_a, vocab_b).to_dict()
    report["meta"] = {"version": __version__, "a": str(args.a), "b": str(args.b)}
    text = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sagetok", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-bpe", help="train a BPE vocabulary bottom-up")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab-size", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--merge-log")
    p.add_argument("--lowercase", action="store_true")
    p.set_defaults(func=cmd_train_bpe)

    p = sub.add_parser("train-unigram", help="train a unigram-pruning vocabulary top-down")
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab-size", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--prune-batch", type=int, default=1)
    p.add_argument("--max-len", type=int, default=16)
    p.add_argument("--min-count", type=int, default=2)
    p.add_argument("--probs-out")
    p.add_argument("--lowercase", action="store_true")
    p.set_defaults(func=cmd_train_unigram)

    p = sub.add_parser("train-sage", help="prune an overshoot vocabulary by skipgram ablation loss")
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="JSON config file (flags override it)")
    p.add_argument("--vocab-size", type=int, dest="vocab_size")
    p.add_argument("--overshoot", type=float)
    p.add_argument("--prune-batch", type=int, dest="prune_batch")
    p.add_argument("--candidate-pool", type=int, dest="candidate_pool")
    p.add_argument("--recalc-every", type=int, dest="recalc_every")
    p.add_argument("--embed-every", type=int, dest="embed_every")
    p.add_argument("--window", type=int)
    p.add_argument("--dim", type=int)
    p.add_argument("--embed-window", type=int, dest="embed_window")
    p.add_argument("--negatives", type=int)
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--base-trainer", choices=("bpe", "unigram"), dest="base_trainer")
    p.add_argument("--initial-vocab", dest="initial_vocab", help="skip base training, prune this vocabulary file")
    p.add_argument("--events-out")
    p.add_argument("--checkpoint", help="checkpoint file (.npz), written at iteration boundaries")
    p.add_argument("--checkpoint-every", type=int)
    p.add_argument("--resume", help="resume from a checkpoint file")
    p.add_argument("--deterministic", action="store_true", help="single-worker mode (runs are always seeded)")
    p.add_argument("--threads", type=int, default=1, help="reserved; current pipeline is serial")
    p.add_argument("--quiet", action="store_true")
    p.add_argument("--lowercase", action="store_true")
    p.set_defaults(func=cmd_train_sage)

    p = sub.add_parser("encode", help="segment a corpus with a trained vocabulary")
    p.add_argument("--vocab", required=True)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out")
    p.add_argument("--format", choices=("tokens", "ids"), default="tokens")
    p.add_argument("--lowercase", action="store_true")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("analyze", help="vocabulary and tokenization statistics over a corpus")
    p.add_argument("--vocab", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--outdir", required=True)
    p.add_argument("--window", type=int, default=5)
    p.add_argument("--lowercase", action="store_true")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("diff", help="compare two vocabulary files")
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_diff)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        # stdout consumer went away (e.g. piping into head)
        try:
            sys.stdout.close()
        except OSError:
            pass
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except SagetokError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
