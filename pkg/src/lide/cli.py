"""``lide`` command-line interface.

Exit codes: 0 on success, 1 on data or model errors, 2 on usage errors.
"""
from __future__ import annotations

import argparse
import logging
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from lide import __version__
from lide.corpus import SplitSpec, read_dsl, split, vocab_overlap
from lide.ensemble import DEFAULT_ROSTER, EnsembleModel, MetaConfig, fit_stacker, train_ensemble
from lide.errors import LideError
from lide.evaluation import (
    confusion,
    evaluate_model,
    ngram_sweep,
    prefix_scan,
    write_sweep_csv,
)
from lide.extbench import (
    REFERENCE_RESULTS,
    AdapterSpec,
    SupportPolicy,
    format_report,
    read_predictions,
    run_adapter,
    score_external,
)
from lide.features import NgramSpec, build_vocab, format_sparse_row, ngrams_up_to, vectorize_counts
from lide.linear import DEFAULT_LINEAR_SPEC, LogRegConfig, fit_logreg, fit_mnb
from lide.persist import load_model, load_model_file, save_model
from lide.rnn.gru import TrainConfig, train_gru, write_history_csv
from lide.rnn.search import SearchGrid, corpus_evaluator, two_stage_search, write_report_csv

log = logging.getLogger("lide")

UNDETERMINED = "und"


def _ngram(text: str) -> NgramSpec:
    try:
        return NgramSpec.parse(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _range(text: str) -> list[int]:
    lo, _, hi = text.partition("-")
    try:
        a, b = int(lo), int(hi or lo)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}; expected e.g. 1-8") from None
    if not 1 <= a <= b:
        raise argparse.ArgumentTypeError(f"bad range {text!r}")
    return list(range(a, b + 1))


def _list_of(kind):
    def parse(text: str):
        try:
            return tuple(kind(x) for x in text.split(",") if x.strip())
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad list {text!r}") from None
    return parse


@contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as f:
            yield f


def _read(path, args):
    return read_dsl(path, label_first=getattr(args, "label_first", False))


def _gru_config(args) -> TrainConfig:
    return TrainConfig(
        epochs=args.epochs, hidden=args.hidden, dropout=args.dropout, embed_dim=args.embed_dim,
        lr=args.lr if args.lr is not None else 1e-3, batch_size=args.batch_size or 16,
        max_len=args.max_len, seed=args.seed, pooling=args.pooling, clip_norm=args.clip_norm,
    )


# ----------------------------------------------------------------------------
# Subcommands
# ----------------------------------------------------------------------------

def cmd_train(args) -> int:
    train = _read(args.train, args).known()
    valid = _read(args.valid, args).known() if args.valid else None
    kind = args.model
    if kind == "mnb":
        model = fit_mnb(train, args.ngram or DEFAULT_LINEAR_SPEC, args.alpha, args.min_count)
    elif kind == "logreg":
        cfg = LogRegConfig(args.lam, args.epochs, args.lr if args.lr is not None else 0.1,
                           args.batch_size or 64, args.seed)
        model = fit_logreg(train, args.ngram or DEFAULT_LINEAR_SPEC, cfg, valid, args.min_count)
    elif kind == "gru":
        if valid is None:
            train, valid = split(train, SplitSpec(0.9, args.seed, True))
        model = train_gru(train, valid, args.ngram or NgramSpec("char", 2, 2), _gru_config(args))
    else:
        roster = args.roster or DEFAULT_ROSTER
        extra = []
        if args.include_linear:
            extra = [fit_mnb(train, DEFAULT_LINEAR_SPEC, args.alpha),
                     fit_logreg(train, DEFAULT_LINEAR_SPEC, LogRegConfig(seed=args.seed))]
        model = train_ensemble(train, roster, _gru_config(args),
                               MetaConfig(k=args.k, seed=args.seed), args.seed, extra)
    save_model(model, args.out)
    if args.history and getattr(model, "history", None):
        write_history_csv(model.history, args.history)
    acc, _ = evaluate_model(model, train)
    print(f"trained {kind} on {len(train)} sentences ({len(model.classes)} classes); "
          f"training accuracy {acc:.4f}; wrote {args.out}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    out = sys.stdout
    for line in sys.stdin:
        text = line.rstrip("\n")
        if not text.strip():
            out.write(UNDETERMINED + "\n")
        else:
            out.write(model.predict([text])[0] + "\n")
        out.flush()
    return 0


def cmd_evaluate(args) -> int:
    mf = load_model_file(args.model)
    test = _read(args.test, args).known().with_labels(mf.model.classes)
    acc, predictions = evaluate_model(mf.model, test)
    print(f"accuracy {acc:.4f} on {len(test)} sentences")
    if args.confusion:
        cm = confusion(predictions, test.labels, mf.registry, collapse_groups=args.groups)
        with _output(args.confusion) as f:
            cm.write_csv(f)
    if args.predictions:
        with _output(args.predictions) as f:
            f.writelines(p + "\n" for p in predictions)
    return 0


def cmd_sweep(args) -> int:
    train = _read(args.train, args)
    valid = _read(args.valid, args)
    rows = ngram_sweep(train, valid, args.kind, args.unit, args.n, args.mode, args.alpha,
                       LogRegConfig(seed=args.seed))
    with _output(args.out) as f:
        write_sweep_csv(rows, f)
    return 0


def cmd_grid_search(args) -> int:
    devel = _read(args.devel, args)
    grid = SearchGrid(args.epochs_grid, args.hidden_grid, args.dropout_grid)
    base = _gru_config(args)
    best, rows = two_stage_search(corpus_evaluator(devel, args.ngram, args.seed), grid, base, args.top_k)
    if args.out:
        write_report_csv(rows, args.out)
    print(f"best: epochs={best.epochs} hidden={best.hidden} dropout={best.dropout}")
    return 0


def cmd_stack(args) -> int:
    members = [load_model(p) for p in args.members]
    if args.combiner == "stacker":
        valid = _read(args.valid, args) if args.valid else None
        if valid is None:
            raise LideError("--valid is required for the stacker combiner")
        model = fit_stacker(members, valid, MetaConfig(k=args.k, seed=args.seed))
    else:
        weights = np.array(args.weights) if args.weights else None
        model = EnsembleModel(members, args.combiner, weights=weights)
    save_model(model, args.out, member_paths=args.members)
    print(f"wrote {args.combiner} ensemble of {len(members)} members to {args.out}")
    return 0


def cmd_prefix_scan(args) -> int:
    model = load_model(args.model)
    sentences = [args.sentence] if args.sentence is not None else [l.rstrip("\n") for l in sys.stdin]
    with _output(args.out) as f:
        for i, s in enumerate(sentences):
            if not s.strip():
                continue
            if i and args.sentence is None:
                f.write("\n")
            prefix_scan(model, s).write_tsv(f)
    return 0


def cmd_overlap(args) -> int:
    corpus = _read(args.corpus, args)
    print(f"{vocab_overlap(corpus, args.source, args.target):.4f}")
    return 0


def cmd_export_vectors(args) -> int:
    corpus = _read(args.corpus, args)
    spec = args.ngram or NgramSpec("word", 1, 5)
    vocab = build_vocab((ngrams_up_to(t, spec) for t in corpus.texts), args.min_count)
    with _output(args.out) as f:
        for s in corpus:
            f.write(format_sparse_row(s.label, vectorize_counts(ngrams_up_to(s.text, spec), vocab)) + "\n")
    return 0


def cmd_bench_external(args) -> int:
    gold = _read(args.gold, args)
    policy = SupportPolicy.from_json(Path(args.policy).read_text(encoding="utf-8")) if args.policy else None
    if args.predictions:
        with open(args.predictions, encoding="utf-8") as f:
            preds = read_predictions(f)
        if len(preds) > len(gold.known()):
            raise LideError(f"{len(preds)} predictions for {len(gold.known())} gold sentences")
    elif args.adapter_cmd:
        preds = run_adapter(AdapterSpec.subprocess(args.adapter_cmd), gold.known())
    else:
        preds = run_adapter(AdapterSpec(url=args.adapter_url, parallelism=args.parallelism), gold.known())
    result = score_external(preds, gold, policy)
    print(f"accuracy {result.accuracy:.4f} on {result.scored} sentences ({result.skipped} skipped)")
    if args.confusion:
        with _output(args.confusion) as f:
            result.confusion.write_csv(f)
    if args.report:
        print(format_report([(args.name, result.accuracy), *REFERENCE_RESULTS]), end="")
    return 0


# ----------------------------------------------------------------------------
# Parser
# ----------------------------------------------------------------------------

def _add_gru_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("GRU")
    g.add_argument("--epochs", type=int, default=10)
    g.add_argument("--hidden", type=int, default=64)
    g.add_argument("--dropout", type=float, default=0.2)
    g.add_argument("--embed-dim", type=int, default=32)
    g.add_argument("--max-len", type=int, default=256)
    g.add_argument("--pooling", choices=("mean", "last"), default="mean")
    g.add_argument("--clip-norm", type=float, default=None)
    g.add_argument("--lr", type=float, default=None,
                   help="learning rate (default 1e-3 for GRU, 0.1 for logreg)")
    g.add_argument("--batch-size", type=int, default=None,
                   help="default 16 for GRU, 64 for logreg")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lide", description="Language identification toolkit.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--label-first", action="store_true",
                        help="corpus lines are label<TAB>sentence")

    p = sub.add_parser("train", parents=[common], help="train a model")
    p.add_argument("--model", choices=("mnb", "logreg", "gru", "ensemble"), required=True)
    p.add_argument("--ngram", type=_ngram, help="unit:min-max[:mode], e.g. char:1-9:restricted")
    p.add_argument("--train", required=True)
    p.add_argument("--valid")
    p.add_argument("--out", required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=1e-4, help="L2 strength for logreg")
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--history", help="write per-epoch accuracy CSV here")
    p.add_argument("--roster", type=_list_of(NgramSpec.parse),
                   help="ensemble member specs, comma separated")
    p.add_argument("--include-linear", action="store_true", help="add MNB and LR ensemble members")
    p.add_argument("--k", type=int, default=5, help="stacker cross-validation folds")
    _add_gru_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="label sentences read from stdin, one per line")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", parents=[common], help="accuracy on a labelled corpus")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--confusion", help="write confusion matrix CSV ('-' for stdout)")
    p.add_argument("--groups", action="store_true", help="collapse the matrix to language groups")
    p.add_argument("--predictions", help="write one predicted label per line")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep-ngrams", parents=[common], help="accuracy as a function of n")
    p.add_argument("--train", required=True)
    p.add_argument("--valid", required=True)
    p.add_argument("--kind", choices=("mnb", "logreg"), default="mnb")
    p.add_argument("--unit", choices=("char", "word"), default="char")
    p.add_argument("--n", type=_range, default=_range("1-8"), help="range of n, e.g. 1-8")
    p.add_argument("--mode", choices=("restricted", "spanning"), default="restricted")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("grid-search", parents=[common], help="two-stage GRU hyper-parameter search")
    p.add_argument("--devel", required=True)
    p.add_argument("--ngram", type=_ngram, default=NgramSpec("char", 2, 2))
    p.add_argument("--epochs-grid", type=_list_of(int), default=(5, 10, 15, 20))
    p.add_argument("--hidden-grid", type=_list_of(int), default=(32, 64, 128))
    p.add_argument("--dropout-grid", type=_list_of(float), default=(0.0, 0.2, 0.45))
    p.add_argument("--top-k", type=int, default=2)
    p.add_argument("--out", help="write the search report CSV here")
    _add_gru_flags(p)
    p.set_defaults(func=cmd_grid_search)

    p = sub.add_parser("stack", parents=[common], help="combine trained models into an ensemble")
    p.add_argument("--members", nargs="+", required=True)
    p.add_argument("--valid", help="held-out corpus for the stacker")
    p.add_argument("--combiner", choices=("stacker", "median", "weighted"), default="stacker")
    p.add_argument("--weights", type=_list_of(float))
    p.add_argument("--k", type=int, default=5)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stack)

    p = sub.add_parser("prefix-scan", help="classify growing word prefixes of a sentence")
    p.add_argument("--model", required=True)
    p.add_argument("--sentence", help="sentence to scan (default: one per stdin line)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_prefix_scan)

    p = sub.add_parser("overlap", parents=[common], help="share of source word types found in target")
    p.add_argument("--corpus", required=True)
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.set_defaults(func=cmd_overlap)

    p = sub.add_parser("export-vectors", parents=[common], help="write sparse n-gram count rows")
    p.add_argument("--corpus", required=True)
    p.add_argument("--ngram", type=_ngram, help="default word:1-5")
    p.add_argument("--min-count", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_export_vectors)

    p = sub.add_parser("bench-external", parents=[common], help="score an external detector")
    p.add_argument("--gold", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--predictions", help="file with one predicted tag per gold sentence")
    src.add_argument("--adapter-cmd", help="command reading sentences on stdin, writing tags")
    src.add_argument("--adapter-url", help='endpoint taking {"text": ...}, returning {"lang": ...}')
    p.add_argument("--parallelism", type=int, default=4)
    p.add_argument("--policy", help="JSON with unsupported / variety_insensitive_groups")
    p.add_argument("--confusion")
    p.add_argument("--name", default="candidate")
    p.add_argument("--report", action="store_true", help="print a table next to published results")
    p.set_defaults(func=cmd_bench_external)
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (LideError, OSError, ValueError) as e:
        print(f"lide: error: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
