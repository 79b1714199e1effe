"""Command-line pipeline: generate -> embed -> train -> synthesize -> evaluate.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Every output file is a pure function of the configuration, the input files
and the seed; wall-clock timings go to a separate ``.timing.csv`` sidecar.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

from .config import RunConfig, load_config
from .datagen import (
    filter_redundant,
    generate_expressions,
    make_learning_problems,
    read_problems,
    split_train_test,
    write_problems,
)
from .decode import decode_batch, ensemble
from .embeddings import kb_to_triples, load_embeddings, lookup_examples, save_embeddings, train_transe
from .errors import DataError, NCESError, NumericError
from .expressions import expression_length, parse_expression
from .kb import build_vocabulary, load_kb
from .metrics import EvalRecord, semantic_quality, summarize, write_report
from .nn import ModelConfig, build_model
from .training import (
    TrainConfig,
    load_checkpoint,
    prepare_examples,
    save_checkpoint,
    train,
    write_metrics_csv,
)

log = logging.getLogger("nces")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# commands


def _require_kb(cfg: RunConfig):
    if cfg.kb_path is None:
        raise UsageError("a knowledge base is required (--kb or kb_path in the config file)")
    return load_kb(cfg.kb_path)


def _out(cfg: RunConfig, name: str) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out / name


def cmd_generate(cfg: RunConfig, args) -> int:
    kb = _require_kb(cfg)
    exprs = generate_expressions(kb, max_len=cfg.expression_max_len, budget=cfg.budget, seed=cfg.seed)
    exprs = filter_redundant(kb, exprs)
    problems = make_learning_problems(kb, exprs, n=cfg.n, seed=cfg.seed)
    if len(problems) < 2:
        raise DataError(f"only {len(problems)} usable learning problems; cannot split")
    train_p, test_p = split_train_test(problems, cfg.ratio, seed=cfg.seed)
    write_problems(_out(cfg, "train.tsv"), train_p)
    write_problems(_out(cfg, "test.tsv"), test_p)
    print(f"expressions {len(exprs)} train {len(train_p)} test {len(test_p)}")
    return EXIT_OK


def cmd_embed(cfg: RunConfig, args) -> int:
    kb = _require_kb(cfg)
    table = train_transe(kb_to_triples(kb), d=cfg.d, epochs=cfg.transe_epochs, margin=cfg.margin,
                         lr=cfg.transe_lr, seed=cfg.seed)
    path = _out(cfg, "embeddings.txt")
    save_embeddings(table, path)
    final = f" final loss {table.history[-1]:.6f}" if table.history else ""
    print(f"embedded {len(table.entities)} entities and {len(table.relations)} relations in d={cfg.d}{final}")
    return EXIT_OK


def _model_config(cfg: RunConfig, arch: str, num_classes: int) -> ModelConfig:
    return ModelConfig(arch=arch, d=cfg.d, num_classes=num_classes, max_len=cfg.L, heads=cfg.heads,
                       inducing_points=cfg.m, hidden=cfg.hidden_width)


def cmd_train(cfg: RunConfig, args) -> int:
    kb = _require_kb(cfg)
    vocab = build_vocabulary(kb)
    problems = read_problems(args.problems, kb)
    if not problems:
        raise DataError(f"{args.problems}: no learning problems")
    longest = max(expression_length(p.target) for p in problems if p.target is not None)
    if longest > cfg.L:
        raise DataError(f"longest training target has {longest} tokens but L={cfg.L}")
    table = load_embeddings(args.embeddings)
    examples = prepare_examples(problems, table, vocab, cfg.L)
    tcfg = TrainConfig(epochs=cfg.epochs, batch_size=cfg.batch_size, lr=cfg.lr, gc=cfg.gc, seed=cfg.seed)
    for arch in cfg.architectures:
        model = build_model(_model_config(cfg, arch, vocab.num_classes), seed=cfg.seed)
        result = train(model, examples, tcfg, pad_id=vocab.pad_id)
        save_checkpoint(model, _out(cfg, f"model_{arch}.json"), vocab)
        write_metrics_csv(result.history, _out(cfg, f"metrics_{arch}.csv"))
        last = result.history[-1]
        print(f"{arch}: epoch {last.epoch} loss {last.loss:.6f} soft {last.soft_acc:.4f} hard {last.hard_acc:.4f}")
    return EXIT_OK


def _checkpoint_paths(cfg: RunConfig, args) -> list[str]:
    if args.checkpoint:
        return list(args.checkpoint)
    archs = cfg.ensemble or cfg.architectures[:1]
    return [str(Path(cfg.out_dir) / f"model_{arch}.json") for arch in archs]


def cmd_synthesize(cfg: RunConfig, args) -> int:
    kb = _require_kb(cfg)
    vocab = build_vocabulary(kb)
    problems = read_problems(args.problems, kb)
    if not problems:
        raise DataError(f"{args.problems}: no learning problems to solve")
    table = load_embeddings(args.embeddings)
    inputs = [lookup_examples(table, p) for p in problems]

    start = time.perf_counter()
    scores = []
    for path in _checkpoint_paths(cfg, args):
        model, _ = load_checkpoint(path, vocab)
        scores.append(model.predict(inputs))
    combined = scores[0] if len(scores) == 1 else ensemble(scores)
    results = decode_batch(combined, vocab)
    elapsed = time.perf_counter() - start

    out = Path(args.output) if args.output else _out(cfg, "predictions.tsv")
    out.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{r.expression_text}\t{'ok' if r.parse_ok else 'unparsed'}" for r in results]
    out.write_text("\n".join(lines) + "\n", encoding="utf-8")
    per_problem = elapsed / len(problems)
    timing = out.with_suffix(".timing.csv")
    timing.write_text("problem,runtime_seconds\n" + "".join(f"{i},{per_problem:.6f}\n" for i in range(len(problems))),
                      encoding="utf-8")
    print(f"synthesized {len(results)} expressions ({sum(r.parse_ok for r in results)} parsed), "
          f"{per_problem:.4f} s per problem")
    return EXIT_OK


def _read_predictions(path: str, kb) -> list[tuple[str, Optional[object]]]:
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        text, _, status = line.partition("\t")
        expr = None
        if status != "unparsed" and text.strip():
            try:
                expr = parse_expression(text, kb)
            except NCESError:
                log.warning("line %d: prediction %r does not parse", lineno, text)
        out.append((text, expr))
    return out


def _read_timings(path: str) -> list[float]:
    rows = Path(path).read_text(encoding="utf-8").splitlines()[1:]
    return [float(r.split(",")[1]) for r in rows if r.strip()]


def cmd_evaluate(cfg: RunConfig, args) -> int:
    kb = _require_kb(cfg)
    problems = read_problems(args.problems, kb)
    predictions = _read_predictions(args.predictions, kb)
    if len(problems) != len(predictions):
        raise DataError(f"{len(problems)} problems but {len(predictions)} predictions")
    timings = _read_timings(args.timings) if args.timings else [0.0] * len(problems)
    if len(timings) != len(problems):
        raise DataError("timing sidecar does not match the number of problems")
    records = []
    for problem, (text, expr), seconds in zip(problems, predictions, timings):
        q = semantic_quality(kb, problem, expr)
        target = "" if problem.target is None else str(problem.target)
        records.append(EvalRecord(target, text, q.f1, q.accuracy, seconds, q.ok))
    out = Path(args.output) if args.output else _out(cfg, "report.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    write_report(records, out)
    stats = summarize(records)
    print(f"F1 {stats['f1'][0]:.4f} ± {stats['f1'][1]:.4f}  accuracy {stats['accuracy'][0]:.4f} ± "
          f"{stats['accuracy'][1]:.4f}  over {len(records)} problems")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "embed": cmd_embed,
    "train": cmd_train,
    "synthesize": cmd_synthesize,
    "evaluate": cmd_evaluate,
}


# ---------------------------------------------------------------------------
# argument parsing


_OVERRIDES = [
    ("--kb", "kb_path", str), ("--out", "out_dir", str), ("--seed", "seed", int), ("--d", "d", int),
    ("--L", "L", int), ("--n", "n", int), ("--m", "m", int), ("--heads", "heads", int),
    ("--hidden", "hidden_width", int), ("--epochs", "epochs", int), ("--batch-size", "batch_size", int),
    ("--lr", "lr", float), ("--gc", "gc", float), ("--arch", "architectures", str),
    ("--ensemble", "ensemble", str), ("--ratio", "ratio", float), ("--max-len", "max_len", int),
    ("--budget", "budget", int), ("--transe-epochs", "transe_epochs", int),
    ("--transe-lr", "transe_lr", float), ("--margin", "margin", float),
]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file with an [nces] section")
    common.add_argument("-v", "--verbose", action="store_true")
    for flag, dest, kind in _OVERRIDES:
        common.add_argument(flag, dest=dest, type=kind, default=None)

    parser = _Parser(prog="nces", description="Neural class expression synthesis pipeline")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("generate", parents=[common], help="generate train/test learning problems")
    sub.add_parser("embed", parents=[common], help="train TransE embeddings of the KB")
    p = sub.add_parser("train", parents=[common], help="train synthesizers")
    p.add_argument("--problems", required=True)
    p.add_argument("--embeddings", required=True)
    p = sub.add_parser("synthesize", parents=[common], help="synthesize expressions for problems")
    p.add_argument("--problems", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--checkpoint", action="append", help="checkpoint file; repeat to ensemble")
    p.add_argument("--output")
    p = sub.add_parser("evaluate", parents=[common], help="score predictions against problems")
    p.add_argument("--problems", required=True)
    p.add_argument("--predictions", required=True)
    p.add_argument("--timings", help="timing sidecar written by synthesize")
    p.add_argument("--output")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    overrides = {dest: getattr(args, dest) for _, dest, _ in _OVERRIDES}
    try:
        cfg = load_config(args.config, **overrides)
        return COMMANDS[args.command](cfg, args)
    except (UsageError, ValueError, configparser.Error) as exc:
        if isinstance(exc, NCESError):
            print(f"nces: data error: {exc}", file=sys.stderr)
            return EXIT_DATA
        print(f"nces: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (NumericError, FloatingPointError, OverflowError) as exc:
        print(f"nces: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (NCESError, KeyError, OSError) as exc:
        print(f"nces: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
