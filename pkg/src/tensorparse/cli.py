"""Command-line entry points.

Exit codes: 0 success, 2 usage/configuration error, 3 numeric failure
(training diverged), 4 data error.
"""
import argparse
import json
import logging
import os
import sys

from . import io, synthetic
from .decoder import decode, heads_to_matrix
from .errors import ConfigError, DataError, NumericError, TreeError
from .model import ParserModel, load_model, save_model
from .projection import (SentenceAlignment, SourceCorpus, WordAlignment, blankout, project,
                         standardize, subsample)
from .trainer import (Example, TrainConfig, attachment_score, default_epochs, evaluate_uas,
                      train)

log = logging.getLogger("tensorparse")

EXIT_USAGE, EXIT_NUMERIC, EXIT_DATA = 2, 3, 4


class UsageError(Exception):
    pass


def _require_files(*paths):
    for p in paths:
        if p is not None and not os.path.isfile(p):
            raise UsageError(f"no such file: {p}")


def _add_training_flags(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--subsample", type=int, default=None)
    p.add_argument("--hidden", type=int, default=100)
    p.add_argument("--layers", type=int, default=4)
    p.add_argument("--learning-rate", type=float, default=0.1)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--dropout-input", type=float, default=0.2)
    p.add_argument("--dropout-hidden", type=float, default=0.5)
    p.add_argument("--noise-scale", type=float, default=1.0)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--max-epochs", type=int, default=100)
    p.add_argument("--no-pos", action="store_true", help="leave POS one-hots out of features")


def _config(args, loss_mode, epochs):
    cfg = TrainConfig(loss_mode=loss_mode, learning_rate=args.learning_rate,
                      batch_size=args.batch_size, noise_scale=args.noise_scale,
                      dropout_hidden=args.dropout_hidden, dropout_input=args.dropout_input,
                      hidden=args.hidden, layers=args.layers, epochs=epochs,
                      patience=args.patience, max_epochs=args.max_epochs, seed=args.seed,
                      subsample=args.subsample)
    cfg.validate()
    return cfg


def _gold_examples(sentences, model_features, embeddings, what):
    out = []
    for s in sentences:
        if s.heads is None:
            raise DataError(f"{what}: sentence {s.id} has no gold heads")
        out.append(Example(io.featurize(s, embeddings, model_features.pos_vocab,
                                        model_features.use_pos), heads=list(s.heads)))
    return out


def _training_examples(sentences, fc, embeddings, loss_mode, cross_lingual):
    """Build examples; cross-lingual cross-entropy decodes projected scores first."""
    examples = []
    for s in sentences:
        feats = io.featurize(s, embeddings, fc.pos_vocab, fc.use_pos)
        if cross_lingual:
            if loss_mode == "xent":
                examples.append(Example(feats, heads=decode(s.scores)))
            else:
                examples.append(Example(feats, target=s.scores))
        else:
            if s.heads is None:
                raise DataError(f"training sentence {s.id} has no gold heads")
            if loss_mode == "xent":
                examples.append(Example(feats, heads=list(s.heads)))
            else:
                examples.append(Example(feats, target=heads_to_matrix(s.heads).astype(float)))
    return examples


def cmd_train(args):
    if args.mode == "mono" and args.epochs is None and args.dev is None:
        raise UsageError("monolingual training needs --dev (early stopping) or --epochs")
    _require_files(args.train, args.dev, args.embeddings)
    epochs = args.epochs
    if args.mode == "xling" and epochs is None:
        epochs = default_epochs(args.loss)
    cfg = _config(args, args.loss, epochs)

    embeddings = io.read_embeddings(args.embeddings)
    cross_lingual = args.mode == "xling"
    sentences = io.read_score_corpus(args.train) if cross_lingual else io.read_treebank(args.train)
    if not sentences:
        raise DataError(f"{args.train}: no training sentences")
    fc = io.FeatureConfig.from_sentences(sentences, embeddings.width, use_pos=not args.no_pos)
    data = _training_examples(sentences, fc, embeddings, args.loss, cross_lingual)
    dev = None
    if args.dev is not None:
        dev = _gold_examples(io.read_treebank(args.dev), fc, embeddings, args.dev)

    metrics_path = args.metrics or args.out + ".metrics.jsonl"
    with open(metrics_path, "w", encoding="utf-8") as fh:
        def on_epoch(m):
            fh.write(json.dumps(m.as_record()) + "\n")
            fh.flush()
            log.info("epoch %d: loss %.4f dev UAS %s", m.epoch, m.train_loss,
                     "-" if m.dev_uas is None else f"{100 * m.dev_uas:.2f}")
        result = train(data, dev, cfg, on_epoch=on_epoch)
    save_model(ParserModel(result.params, fc), args.out)
    print(f"saved model from epoch {result.best_epoch} to {args.out}")
    return 0


def cmd_export_scores(args):
    _require_files(args.model, args.input, args.embeddings)
    model = load_model(args.model)
    embeddings = io.read_embeddings(args.embeddings)
    out = []
    for s in io.read_treebank(args.input):
        out.append(io.ScoredSentence(s.id, s.tokens, s.pos, model.score(s, embeddings)))
    io.write_score_corpus(out, args.out)
    print(f"wrote {len(out)} score matrices to {args.out}")
    return 0


def cmd_project(args):
    n = len(args.sources)
    if not (len(args.sent_align) == len(args.word_align) == n):
        raise UsageError("--sources, --sent-align and --word-align need the same number of files")
    _require_files(args.target, *args.sources, *args.sent_align, *args.word_align)
    targets = io.read_treebank(args.target)
    sources, saligns, waligns = [], [], []
    for src, sa, wa in zip(args.sources, args.sent_align, args.word_align):
        corpus = SourceCorpus(src, io.read_score_corpus(src))
        sources.append(corpus if args.no_standardize else standardize(corpus))
        saligns.append(SentenceAlignment(io.read_sentence_alignments(sa), path=sa))
        waligns.append(WordAlignment(io.read_word_alignments(wa), path=wa))
    projected = project(targets, sources, saligns, waligns)
    io.write_score_corpus(projected, args.out)
    print("id\tmissing_fraction")
    for inst in projected:
        print(f"{inst.id}\t{inst.missing_fraction:.4f}")
    if projected:
        mean = sum(i.missing_fraction for i in projected) / len(projected)
        print(f"# mean missing fraction {mean:.4f} over {len(projected)} sentences")
    return 0


def cmd_parse(args):
    _require_files(args.model, args.input, args.embeddings)
    model = load_model(args.model)
    embeddings = io.read_embeddings(args.embeddings)
    sentences = io.read_treebank(args.input)
    heads = [model.parse(s, embeddings) for s in sentences]
    io.write_treebank(sentences, heads, args.out)
    print(f"parsed {len(sentences)} sentences into {args.out}")
    return 0


def cmd_eval(args):
    _require_files(args.gold, args.pred)
    gold = io.read_treebank(args.gold)
    pred = io.read_treebank(args.pred)
    if len(gold) != len(pred):
        raise DataError(f"{len(gold)} gold sentences but {len(pred)} predicted")
    for g, p in zip(gold, pred):
        if g.heads is None or p.heads is None:
            raise DataError(f"sentence {g.id}: heads missing")
        if len(g) != len(p):
            raise DataError(f"sentence {g.id}: token counts differ")
    uas = attachment_score([g.heads for g in gold], [p.heads for p in pred])
    print(f"{100 * uas:.2f}")
    return 0


def _parse_fractions(text):
    try:
        values = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"bad --fractions {text!r}") from None
    if not values or any(not 0 <= v <= 1 for v in values):
        raise UsageError("--fractions must be comma-separated values in [0, 1]")
    return values


def run_blankout_experiment(projected, test, embeddings, fractions, losses, args, use_pos=True):
    """Train one model per (fraction, loss) and return the curve rows."""
    fc = io.FeatureConfig.from_sentences(projected, embeddings.width, use_pos=use_pos)
    test_examples = _gold_examples(test, fc, embeddings, "test set")
    if args.subsample is not None:
        projected = subsample(projected, args.subsample, args.seed)
    rows = []
    for fraction in fractions:
        blanked = blankout(projected, fraction, args.seed)
        cells = [len(i.tokens) ** 2 for i in blanked]  # unmasked cells per sentence
        zeros = sum(i.missing_fraction * n for i, n in zip(blanked, cells))
        missing = zeros / sum(cells)
        for loss in losses:
            epochs = args.epochs if args.epochs is not None else default_epochs(loss)
            cfg = _config(args, loss, epochs)
            cfg.subsample = None
            data = _training_examples(blanked, fc, embeddings, loss, cross_lingual=True)
            result = train(data, None, cfg)
            uas = evaluate_uas(result.params, test_examples)
            log.info("fraction %.2f loss %s: UAS %.2f", fraction, loss, 100 * uas)
            rows.append((fraction, loss, missing, uas))
    return rows


def cmd_blankout_experiment(args):
    fractions = _parse_fractions(args.fractions)
    losses = ["mse", "xent"] if args.loss == "both" else [args.loss]
    _require_files(args.train, args.test, args.embeddings)
    _config(args, losses[0], args.epochs or 1)
    embeddings = io.read_embeddings(args.embeddings)
    projected = io.read_score_corpus(args.train)
    if not projected:
        raise DataError(f"{args.train}: empty score corpus")
    test = io.read_treebank(args.test)
    rows = run_blankout_experiment(projected, test, embeddings, fractions, losses, args,
                                   use_pos=not args.no_pos)
    lines = ["fraction\tloss\tmissing_fraction\tuas"]
    lines += [f"{f:.4f}\t{loss}\t{m:.6f}\t{100 * u:.4f}" for f, loss, m, u in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)
    if len(losses) == 2 and len(fractions) > 1:
        lo, hi = min(fractions), max(fractions)
        table = {(f, loss): u for f, loss, _, u in rows}
        drop = {loss: 100 * (table[(lo, loss)] - table[(hi, loss)]) for loss in losses}
        verdict = "slower" if drop["mse"] < drop["xent"] else "not slower"
        print(f"# UAS drop from {lo:g} to {hi:g}: mse {drop['mse']:.2f}, "
              f"xent {drop['xent']:.2f} (mse degrades {verdict})")
    return 0


def cmd_synth(args):
    """Write a toy-grammar dataset: treebanks, embeddings, source corpora, alignments."""
    os.makedirs(args.out_dir, exist_ok=True)
    d = args.out_dir
    train_tb = synthetic.generate_treebank(args.train_size, args.seed, args.max_len, "t")
    test_tb = synthetic.generate_treebank(args.test_size, args.seed + 1, args.max_len, "e")
    io.write_treebank(train_tb, None, os.path.join(d, "train.conllu"))
    io.write_treebank(test_tb, None, os.path.join(d, "test.conllu"))
    io.write_treebank(train_tb, [None] * len(train_tb), os.path.join(d, "target.conllu"))
    emb = synthetic.generate_embeddings(args.embedding_width, args.seed + 2)
    synthetic.write_embeddings(emb, os.path.join(d, "embeddings.txt"))
    for k in range(args.sources):
        corpus, sa, wa = synthetic.make_source_language(
            train_tb, f"src{k + 1}", args.seed + 1000 * (k + 1))
        io.write_score_corpus(corpus.sentences, os.path.join(d, f"src{k + 1}.jsonl"))
        io.write_sentence_alignments(
            [(s, t, c) for t, entries in sa.by_target.items() for s, c, _ in entries],
            os.path.join(d, f"src{k + 1}.sent"))
        io.write_word_alignments({key: links for key, (links, _) in wa.links.items()},
                                 os.path.join(d, f"src{k + 1}.word"))
    print(f"wrote synthetic data to {d}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="tensorparse",
                                     description="Tensor-LSTM dependency parsing toolkit")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a parser")
    p.add_argument("--mode", choices=["mono", "xling"], required=True)
    p.add_argument("--loss", choices=["xent", "mse"], required=True)
    p.add_argument("--train", required=True)
    p.add_argument("--dev")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--metrics", help="per-epoch JSON lines log (default: OUT.metrics.jsonl)")
    _add_training_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("export-scores", help="write raw score matrices for a treebank")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_export_scores)

    p = sub.add_parser("project", help="project source scores onto a target corpus")
    p.add_argument("--target", required=True)
    p.add_argument("--sources", nargs="+", required=True)
    p.add_argument("--sent-align", nargs="+", required=True)
    p.add_argument("--word-align", nargs="+", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-standardize", action="store_true")
    p.set_defaults(func=cmd_project)

    p = sub.add_parser("parse", help="parse a CoNLL-U file")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("eval", help="unlabeled attachment score of predicted vs gold CoNLL-U")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("blankout-experiment", help="UAS as projected scores are blanked out")
    p.add_argument("--train", required=True, help="projected score corpus")
    p.add_argument("--test", required=True, help="gold CoNLL-U test set")
    p.add_argument("--embeddings", required=True)
    p.add_argument("--fractions", default="0,0.1,0.2,0.3,0.4")
    p.add_argument("--loss", choices=["both", "mse", "xent"], default="both")
    p.add_argument("--out", help="TSV curve table (also printed)")
    _add_training_flags(p)
    p.set_defaults(func=cmd_blankout_experiment)

    p = sub.add_parser("synth", help="generate a toy-grammar dataset")
    p.add_argument("--out-dir", required=True)
    p.add_argument("--train-size", type=int, default=200)
    p.add_argument("--test-size", type=int, default=50)
    p.add_argument("--max-len", type=int, default=12)
    p.add_argument("--embedding-width", type=int, default=8)
    p.add_argument("--sources", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"{parser.prog} {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, TreeError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
