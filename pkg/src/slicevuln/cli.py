"""Command-line entry point. Thin wrappers around the library stages.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
Progress goes to stderr; machine-readable output is written to files only.
The seed defaults to --seed, then SLICEVULN_SEED, then 42.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import balancer, corpus, experiments, metrics, model, slicer, synth, tokenizer
from .errors import DataError, NumericError


def _log(msg: str) -> None:
    print(msg, file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _default_seed() -> int:
    env = os.environ.get("SLICEVULN_SEED")
    return int(env) if env and env.isdigit() else 42


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="default: SLICEVULN_SEED env var, then 42")
    p.add_argument("--out", type=Path, required=True, help="output file or directory")


def _resolve_seed(args, spec_cfg: dict | None = None) -> int:
    if args.seed is not None:
        return args.seed
    if spec_cfg and "seed" in spec_cfg:
        return int(spec_cfg["seed"])
    return _default_seed()


def _build_parser() -> _Parser:
    parser = _Parser(prog="slicevuln", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("slice", help="extract candidate slices from C/C++ sources")
    p.add_argument("--in", dest="inputs", type=Path, nargs="+", required=True)
    p.add_argument("--api-list", type=Path, default=None)
    p.add_argument("--max-lines", type=int, default=30)
    p.add_argument("--hops", type=int, default=2)
    p.add_argument("--jobs", type=int, default=1,
                   help="worker processes across input files; never changes results")
    _add_common(p)

    p = sub.add_parser("build-dataset", help="generate a synthetic labeled corpus")
    p.add_argument("--preset", choices=["reference", "desk"], default="desk")
    p.add_argument("--counts", type=Path, default=None,
                   help="per-kind counts manifest (overrides --preset)")
    _add_common(p)

    p = sub.add_parser("balance", help="downsample a corpus under H1 or H2")
    p.add_argument("--hypothesis", choices=["h1", "h2"], required=True)
    p.add_argument("--in", dest="input", type=Path, required=True)
    _add_common(p)

    p = sub.add_parser("train", help="train the classifier on a labeled corpus")
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--train-fraction", type=float, default=0.8)
    _add_model_flags(p)
    _add_common(p)

    p = sub.add_parser("evaluate", help="evaluate a checkpoint on a labeled corpus")
    p.add_argument("--model", dest="checkpoint", type=Path, required=True)
    p.add_argument("--vocab", type=Path, required=True)
    p.add_argument("--in", dest="input", type=Path, required=True)
    p.add_argument("--no-normalize", action="store_true")
    _add_common(p)

    p = sub.add_parser("run-strategy", help="run one strategy end to end")
    p.add_argument("--spec", type=Path, default=None, help="JSON run-config file")
    p.add_argument("--strategy", choices=["s1", "s2", "s3"], default=None)
    p.add_argument("--in", dest="input", type=Path, default=None)
    _add_model_flags(p)
    _add_common(p)

    p = sub.add_parser("report", help="compare previously written JSON reports")
    p.add_argument("--in", dest="inputs", type=Path, nargs="+", required=True)
    _add_common(p)
    return parser


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--layers", type=int, default=None)
    p.add_argument("--hidden", type=int, default=None)
    p.add_argument("--heads", type=int, default=None)
    p.add_argument("--ff", type=int, default=None)
    p.add_argument("--max-len", type=int, default=None)
    p.add_argument("--vocab-size", type=int, default=None)
    p.add_argument("--dropout", type=float, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--patience", type=int, default=None)
    p.add_argument("--weight-decay", type=float, default=None)
    p.add_argument("--no-normalize", action="store_true")


_MODEL_KEYS = {
    "layers": "num_layers", "hidden": "hidden_dim", "heads": "num_heads",
    "ff": "ff_dim", "max_len": "max_len", "vocab_size": "vocab_size",
    "dropout": "dropout",
}
_TRAIN_KEYS = {
    "lr": "learning_rate", "batch_size": "batch_size", "epochs": "epochs",
    "patience": "early_stop_patience", "weight_decay": "weight_decay",
}


def _configs_from_args(args, spec_cfg: dict, seed: int) -> tuple[model.ModelConfig, model.TrainConfig]:
    model_kw = dict(spec_cfg.get("model", {}))
    train_kw = dict(spec_cfg.get("train", {}))
    for flag, key in _MODEL_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            model_kw[key] = value
    for flag, key in _TRAIN_KEYS.items():
        value = getattr(args, flag, None)
        if value is not None:
            train_kw[key] = value
    train_kw["seed"] = seed
    return model.ModelConfig(**model_kw), model.TrainConfig(**train_kw)


def _slice_one_file(job: tuple[str, frozenset, int, int]) -> list[dict]:
    path, api, max_lines, hops = job
    cfg = slicer.SliceConfig(api_list=api, max_slice_lines=max_lines, def_use_hops=hops)
    source = Path(path).read_text(encoding="utf-8")
    records = []
    for j, cand in enumerate(slicer.extract_candidates(source, cfg)):
        records.append({
            "id": f"{Path(path).name}#{j}",
            "kind": cand.kind.value,
            "focus": cand.focus,
            "line": cand.line,
            "span": list(cand.span),
            "code": slicer.build_slice(source, cand, cfg),
            "source": path,
        })
    return records


def _cmd_slice(args) -> int:
    api = slicer.load_api_list(args.api_list) if args.api_list else slicer.DEFAULT_API_LIST
    jobs = [(str(p), api, args.max_lines, args.hops) for p in args.inputs]
    if args.jobs > 1 and len(jobs) > 1:
        # pool.map preserves input order, so worker count cannot change output
        from multiprocessing import Pool

        with Pool(min(args.jobs, len(jobs))) as pool:
            per_file = pool.map(_slice_one_file, jobs)
    else:
        per_file = [_slice_one_file(job) for job in jobs]
    args.out.mkdir(parents=True, exist_ok=True)
    out_path = args.out / "slices.jsonl"
    count = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        for records in per_file:
            for record in records:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
                count += 1
    _log(f"wrote {count} candidate slices to {out_path}")
    return 0


def _cmd_build_dataset(args) -> int:
    if args.counts is not None:
        counts = synth.read_counts_manifest(args.counts)
        sset = synth.pattern_corpus(counts, seed=_resolve_seed(args))
    elif args.preset == "reference":
        sset = synth.reference_corpus()
    else:
        sset = synth.pattern_corpus(seed=_resolve_seed(args))
    args.out.parent.mkdir(parents=True, exist_ok=True)
    corpus.save(sset, args.out)
    _log(f"wrote {len(sset)} samples to {args.out}")
    return 0


def _cmd_balance(args) -> int:
    sset = corpus.load(args.input)
    fn = balancer.balance_h1 if args.hypothesis == "h1" else balancer.balance_h2
    bset = fn(sset, _resolve_seed(args))
    data_path, manifest_path = balancer.save_balanced(bset, args.out)
    _log(f"balanced {len(sset)} -> {len(bset)} samples ({bset.hypothesis}); "
         f"wrote {data_path} and {manifest_path}")
    return 0


def _encode_samples(sset, vocab, max_len, api_list, normalize_symbols):
    encodings, labels = [], []
    for s in sset:
        text = tokenizer.normalize(s.code, api_list) if normalize_symbols else s.code
        encodings.append(tokenizer.encode(text, vocab, max_len))
        labels.append(int(s.label))
    return tokenizer.EncodedDataset.from_encodings(encodings, labels)


def _cmd_train(args) -> int:
    seed = _resolve_seed(args)
    mcfg, tcfg = _configs_from_args(args, {}, seed)
    sset = corpus.load(args.input)
    train_set, val_set = corpus.split(sset, args.train_fraction, seed)
    api = slicer.DEFAULT_API_LIST
    normalize_symbols = not args.no_normalize
    texts = [tokenizer.normalize(s.code, api) if normalize_symbols else s.code
             for s in train_set]
    vocab = tokenizer.build_vocab(texts, mcfg.vocab_size)
    train_data = _encode_samples(train_set, vocab, mcfg.max_len, api, normalize_symbols)
    val_data = _encode_samples(val_set, vocab, mcfg.max_len, api, normalize_symbols)
    net = model.init(mcfg, seed)
    _log(f"training on {len(train_data)} samples, validating on {len(val_data)}")
    net, history = model.train(net, train_data, val_data, tcfg)
    args.out.mkdir(parents=True, exist_ok=True)
    vocab_path = vocab.save(args.out / "vocab.txt")
    ckpt = model.save_checkpoint(net, args.out / "checkpoint.npz", vocab.content_hash())
    (args.out / "history.json").write_text(json.dumps({
        "train_loss": history.train_loss,
        "val_loss": history.val_loss,
        "val_accuracy": history.val_accuracy,
        "stopped_epoch": history.stopped_epoch,
    }, indent=2) + "\n", encoding="utf-8")
    _log(f"stopped at epoch {history.stopped_epoch}; wrote {ckpt} and {vocab_path}")
    return 0


def _cmd_evaluate(args) -> int:
    vocab = tokenizer.Vocab.load(args.vocab)
    net, _ = model.load_checkpoint(args.checkpoint, vocab.content_hash())
    sset = corpus.load(args.input)
    api = slicer.DEFAULT_API_LIST
    data = _encode_samples(sset, vocab, net.config.max_len, api, not args.no_normalize)
    predictions = model.predict(net, data)
    per_kind = {}
    for kind in corpus.KIND_ORDER:
        sel = [i for i, s in enumerate(sset) if s.kind == kind]
        if sel:
            per_kind[kind] = metrics.confusion(
                [int(predictions[i]) for i in sel],
                [int(sset.samples[i].label) for i in sel],
            )
    per_kind_ms, overall = metrics.aggregate(per_kind)
    rows = metrics.kind_rows(per_kind_ms, overall)
    args.out.mkdir(parents=True, exist_ok=True)
    (args.out / "metrics.txt").write_text(
        metrics.format_metric_table(rows) + "\n", encoding="utf-8")
    lines = ["category," + ",".join(m.lower() for m in metrics.METRIC_NAMES)]
    lines += [f"{name}," + metrics.csv_row(ms) for name, ms in rows.items()]
    (args.out / "metrics.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    _log(f"evaluated {len(sset)} samples; wrote metrics under {args.out}")
    return 0


def _cmd_run_strategy(args) -> int:
    spec_cfg = {}
    if args.spec is not None:
        try:
            spec_cfg = json.loads(args.spec.read_text(encoding="utf-8"))
        except json.JSONDecodeError as e:
            raise DataError(f"{args.spec}: malformed spec file ({e.msg})") from e
    strategy = (args.strategy or spec_cfg.get("strategy", "s2")).upper()
    seed = _resolve_seed(args, spec_cfg)
    corpus_path = args.input or (
        Path(spec_cfg["paths"]["corpus"]) if "paths" in spec_cfg else None
    )
    if corpus_path is None:
        raise DataError("no corpus: pass --in or a spec file with paths.corpus")
    mcfg, tcfg = _configs_from_args(args, spec_cfg, seed)
    spec = experiments.StrategySpec(
        id=strategy, seed=seed, model_config=mcfg, train_config=tcfg,
        normalize_symbols=not args.no_normalize and spec_cfg.get("normalize", True),
        vocab_size=mcfg.vocab_size,
    )
    sset = corpus.load(corpus_path)
    _log(f"running {spec.id} ({spec.hypothesis}) on {len(sset)} samples, seed {seed}")
    report = experiments.run(spec, sset)
    run_dir = args.out / f"{spec.id.lower()}-seed{seed}"
    for fmt, name in (("table", "metrics.txt"), ("csv", "metrics.csv"),
                      ("json", "report.json")):
        experiments.emit(report, fmt, run_dir / name)
    _log(f"overall F1 {metrics.percent(report.overall.f1)}%; reports under {run_dir}")
    return 0


def _cmd_report(args) -> int:
    reports = []
    for path in args.inputs:
        payload = json.loads(path.read_text(encoding="utf-8"))
        reports.append(payload)
    lines = ["strategy,overall_f1_pct,overall_accuracy_pct,wall_time_s,peak_memory_mb"]
    for payload in reports:
        overall = payload["metrics"]["Overall"]
        res = payload["resources"]
        f1 = "" if overall["f1"] is None else f"{100 * overall['f1']:.2f}"
        acc = "" if overall["accuracy"] is None else f"{100 * overall['accuracy']:.2f}"
        lines.append(
            f"{payload['strategy']},{f1},{acc},"
            f"{res['wall_time_seconds']:.2f},"
            f"{res['peak_resident_memory_bytes'] / 2**20:.1f}"
        )
    args.out.mkdir(parents=True, exist_ok=True)
    out_path = args.out / "comparison.csv"
    out_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    _log(f"wrote {out_path}")
    return 0


_COMMANDS = {
    "slice": _cmd_slice,
    "build-dataset": _cmd_build_dataset,
    "balance": _cmd_balance,
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "run-strategy": _cmd_run_strategy,
    "report": _cmd_report,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:  # argparse exits; surface as a return code
        return int(e.code) if e.code is not None else 0
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        return _COMMANDS[args.command](args)
    except NumericError as e:
        _log(f"numeric failure: {e}")
        return 3
    except (DataError, FileNotFoundError, OSError) as e:
        _log(f"data error: {e}")
        return 2


def entry() -> None:
    sys.exit(main())
