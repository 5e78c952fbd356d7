"""Command-line front end.

Exit codes: 0 success, 1 partial (some metric failed), 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import harness
from .embeddings import SkipGramConfig, load_embeddings, save_embeddings, train_skipgram
from .metric import TrainingPlan, read_corpus, train_two_stage
from .neural import ModelConfig, TrainConfig, load_checkpoint

EXIT_OK, EXIT_PARTIAL, EXIT_INVALID = 0, 1, 2


def _global_flags() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--metrics", default=",".join(harness.METRICS),
                   help="comma-separated subset of " + ",".join(harness.METRICS))
    p.add_argument("--embeddings", type=Path, help="word-vector text file")
    p.add_argument("--checkpoint", type=Path, help="encoder checkpoint directory")
    p.add_argument("--stopword-mode", choices=harness.STOPWORD_MODES, default="both")
    p.add_argument("--format", choices=("jsonl", "tsv", "coco-json"), help="dataset format")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = argparse.ArgumentParser(prog="i2ce", description="Caption evaluation toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("score", parents=[common], help="score one or more candidate datasets")
    p.add_argument("datasets", nargs="+", type=Path)
    p.add_argument("--candidates", nargs="*", type=Path,
                   help="COCO results files, one per dataset argument (coco-json only)")
    p.add_argument("--names", help="comma-separated column names")
    p.add_argument("--out", type=Path, default=Path("i2ce_report"),
                   help="write OUT.json and OUT.txt (default: %(default)s)")

    p = sub.add_parser("train-embeddings", parents=[common], help="skip-gram word vectors")
    p.add_argument("corpus", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--dim", type=int, default=50)
    p.add_argument("--window", type=int, default=2)
    p.add_argument("--negatives", type=int, default=5)
    p.add_argument("--epochs", type=int, default=5)
    p.add_argument("--lr", type=float, default=0.05)

    p = sub.add_parser("train-encoder", parents=[common], help="two-stage auto-encoder training")
    p.add_argument("--stage1", type=Path, help="generic sentences, one per line")
    p.add_argument("--stage2", type=Path, required=True, help="caption sentences, one per line")
    p.add_argument("--skip-stage1", action="store_true")
    p.add_argument("--out", type=Path, required=True, help="checkpoint directory")
    p.add_argument("--epochs1", type=int, default=10)
    p.add_argument("--epochs2", type=int, default=100)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--lr-decay", type=float, default=0.97)
    p.add_argument("--optimizer", choices=("sgd", "adam"), default="adam")
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--attn", type=int, default=32)
    p.add_argument("--max-len", type=int, default=20)
    p.add_argument("--min-count", type=int, default=2)

    p = sub.add_parser("stopword-exp", parents=[common], help="B@1 vs B@1* vs MEAN table")
    p.add_argument("datasets", nargs="+", type=Path)

    p = sub.add_parser("perturb", parents=[common], help="rewrite candidates")
    p.add_argument("dataset", type=Path)
    p.add_argument("--kind", choices=("synonym", "shuffle", "stopword-drop"), required=True)
    p.add_argument("--synonyms", type=Path, help="word<TAB>replacement table (default: shipped sample)")
    p.add_argument("--out", type=Path, required=True, help="output jsonl")

    p = sub.add_parser("compare", parents=[common], help="normalized drops between two reports")
    p.add_argument("original", type=Path)
    p.add_argument("perturbed", type=Path)

    p = sub.add_parser("correlate", parents=[common], help="per-item correlation of two metrics")
    p.add_argument("report", type=Path)
    p.add_argument("metric_a")
    p.add_argument("metric_b")
    return parser


def _load_resources(args, metrics):
    embeddings = model = None
    if args.embeddings is not None and ({"mean", "wmd"} & set(metrics) or args.command == "stopword-exp"):
        embeddings = load_embeddings(args.embeddings)
    if args.checkpoint is not None and "i2ce" in metrics:
        model = load_checkpoint(args.checkpoint)
    return embeddings, model


def _datasets(args) -> dict[str, harness.EvaluationDataset]:
    names = args.names.split(",") if getattr(args, "names", None) else [p.stem for p in args.datasets]
    if len(names) != len(args.datasets):
        raise harness.DatasetError("--names must give one name per dataset")
    cands = getattr(args, "candidates", None) or [None] * len(args.datasets)
    if len(cands) != len(args.datasets):
        raise harness.DatasetError("--candidates must give one file per dataset")
    return {n: harness.load_dataset(p, args.format, c, n) for n, p, c in zip(names, args.datasets, cands)}


def _write_report(out: Path, payload: str, text: str) -> None:
    out.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{out}.json").write_text(payload, encoding="utf-8")
    Path(f"{out}.txt").write_text(text, encoding="utf-8")
    sys.stdout.write(text)


def cmd_score(args) -> int:
    metrics = [m.strip() for m in args.metrics.split(",") if m.strip()]
    datasets = _datasets(args)
    embeddings, model = _load_resources(args, metrics)
    config = {"seed": args.seed, "stopword_mode": args.stopword_mode,
              "embeddings_sha256": harness.file_sha256(args.embeddings) if args.embeddings else None,
              "checkpoint_sha256": (harness.file_sha256(args.checkpoint / "params.bin")
                                    if args.checkpoint else None)}
    reports = {name: harness.evaluate(ds, metrics, embeddings, model, config=config)
               for name, ds in datasets.items()}
    if len(reports) == 1:
        (report,) = reports.values()
        payload, text = report.to_json(), report.render_text()
    else:
        payload = json.dumps({"schema": "i2ce-report-set", "schema_version": harness.REPORT_VERSION,
                              "reports": {k: r.to_dict() for k, r in reports.items()}},
                             indent=2, sort_keys=True) + "\n"
        text = harness.table_from_reports(reports)
    _write_report(args.out, payload, text)
    return EXIT_PARTIAL if any(r.failed for r in reports.values()) else EXIT_OK


def cmd_train_embeddings(args) -> int:
    cfg = SkipGramConfig(dim=args.dim, window=args.window, negatives=args.negatives,
                         epochs=args.epochs, lr=args.lr, seed=args.seed)
    table, history = train_skipgram(read_corpus(args.corpus), cfg, return_history=True)
    save_embeddings(table, args.out)
    print(f"wrote {len(table.vocab.tokens)} vectors (d={table.dim}) to {args.out}; "
          f"loss {history[0]:.4f} -> {history[-1]:.4f}")
    return EXIT_OK


def cmd_train_encoder(args) -> int:
    embeddings = load_embeddings(args.embeddings) if args.embeddings else None
    stage = lambda epochs, k: TrainConfig(epochs=epochs, lr=args.lr, seed=args.seed + k,
                                          optimizer=args.optimizer, lr_decay=args.lr_decay)
    plan = TrainingPlan(
        stage1_corpus=None if args.skip_stage1 else args.stage1,
        stage2_corpus=args.stage2,
        stage1=stage(args.epochs1, 1), stage2=stage(args.epochs2, 2),
        model=ModelConfig(hidden=args.hidden, attn=args.attn, max_len=args.max_len),
        min_count=args.min_count, init_seed=args.seed, skip_stage1=args.skip_stage1,
        checkpoint_dir=args.out)
    result = train_two_stage(plan, embeddings)
    for path in result.checkpoints:
        print(f"checkpoint: {path}")
    if result.stage1_losses:
        print(f"stage 1 loss {result.stage1_losses[0]:.4f} -> {result.stage1_losses[-1]:.4f}")
    print(f"stage 2 loss {result.stage2_losses[0]:.4f} -> {result.stage2_losses[-1]:.4f}")
    return EXIT_OK


def cmd_stopword_exp(args) -> int:
    datasets = _datasets(args)
    embeddings = load_embeddings(args.embeddings) if args.embeddings else None
    sys.stdout.write(harness.stopword_table(datasets, embeddings, args.stopword_mode))
    return EXIT_OK if embeddings is not None else EXIT_PARTIAL


def cmd_perturb(args) -> int:
    dataset = harness.load_dataset(args.dataset, args.format)
    table = harness.load_synonyms(args.synonyms) if args.kind == "synonym" else None
    out = harness.perturb(dataset, args.kind, table, args.seed)
    with open(args.out, "w", encoding="utf-8") as fh:
        for it in out.items:
            fh.write(json.dumps({"id": it.item_id, "candidate": it.candidate,
                                 "references": it.references}) + "\n")
    return EXIT_OK


def _read_report(path: Path) -> harness.EvaluationReport:
    try:
        return harness.EvaluationReport.from_dict(json.loads(path.read_text(encoding="utf-8")))
    except json.JSONDecodeError as exc:
        raise harness.DatasetError(f"{path}: {exc}") from None


def cmd_compare(args) -> int:
    deltas = harness.robustness_compare(_read_report(args.original), _read_report(args.perturbed))
    sys.stdout.write(harness.format_table({k: [v] for k, v in deltas.items()}, ["normalized drop"]))
    return EXIT_OK


def cmd_correlate(args) -> int:
    result = harness.correlate(_read_report(args.report), args.metric_a, args.metric_b)
    print(json.dumps(result, sort_keys=True))
    return EXIT_OK


COMMANDS = {
    "score": cmd_score, "train-embeddings": cmd_train_embeddings, "train-encoder": cmd_train_encoder,
    "stopword-exp": cmd_stopword_exp, "perturb": cmd_perturb, "compare": cmd_compare,
    "correlate": cmd_correlate,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (harness.DatasetError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
