"""End-to-end strategy runs: balance, split, tokenize, train, evaluate, report.

Strategies:

* S1 -- balance under Hypothesis 1, split 80/20, test on the held-out 20%.
* S2 -- balance under Hypothesis 2, split 80/20, test on the held-out 20%.
* S3 -- same training procedure as S2, but evaluated on the full remainder
  of the corpus (everything the balanced set left out).

The held-out 20% doubles as the early-stopping validation set.  Every
random stage is keyed by the spec seed, so a rerun with the same seed
regenerates identical datasets, models, and metric files; only wall time
and memory readings differ.
"""

from __future__ import annotations

import hashlib
import json
import resource
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from . import balancer, corpus, metrics, model, tokenizer
from .corpus import KIND_ORDER, Kind, SampleSet
from .slicer import DEFAULT_API_LIST

STRATEGY_IDS = ("S1", "S2", "S3")


@dataclass
class StrategySpec:
    id: str
    seed: int = 42
    model_config: model.ModelConfig = field(default_factory=model.ModelConfig)
    train_config: model.TrainConfig = field(default_factory=model.TrainConfig)
    train_fraction: float = 0.8
    vocab_size: int = 4096
    normalize_symbols: bool = True
    api_list: frozenset[str] = DEFAULT_API_LIST

    def __post_init__(self):
        if self.id not in STRATEGY_IDS:
            raise ValueError(f"strategy id must be one of {STRATEGY_IDS}, got {self.id!r}")

    @property
    def hypothesis(self) -> str:
        return "H1" if self.id == "S1" else "H2"


@dataclass
class ResourceUsage:
    wall_time: float          # seconds, training phase only
    peak_resident_memory: int  # bytes, best-effort process peak


@dataclass
class Report:
    strategy: StrategySpec
    per_kind: dict[Kind, metrics.MetricSet]
    overall: metrics.MetricSet
    per_kind_confusion: dict[Kind, metrics.ConfusionMatrix]
    resources: ResourceUsage
    fingerprints: dict
    history: model.TrainHistory


def _peak_rss_bytes() -> int:
    peak = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss
    # ru_maxrss is kilobytes on Linux, bytes on macOS
    return peak if sys.platform == "darwin" else peak * 1024


def _ids_digest(samples: Sequence[corpus.Sample]) -> str:
    h = hashlib.sha256()
    for s in samples:
        h.update(s.id.encode("utf-8"))
        h.update(b"\0")
    return h.hexdigest()


class _Stage:
    """Tags exceptions escaping a pipeline stage with the stage name."""

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc is not None and not hasattr(exc, "stage"):
            exc.stage = self.name
            exc.args = (f"[stage: {self.name}] {exc}",) + exc.args[1:]
        return False


def _encode_set(
    sset: SampleSet, vocab: tokenizer.Vocab, spec: StrategySpec
) -> tokenizer.EncodedDataset:
    encodings = []
    labels = []
    for s in sset:
        text = tokenizer.normalize(s.code, spec.api_list) if spec.normalize_symbols else s.code
        encodings.append(tokenizer.encode(text, vocab, spec.model_config.max_len))
        labels.append(int(s.label))
    return tokenizer.EncodedDataset.from_encodings(encodings, labels)


def run(spec: StrategySpec, full_corpus: SampleSet) -> Report:
    """Execute one strategy end to end and assemble its report."""
    with _Stage("balance"):
        if spec.hypothesis == "H1":
            balanced = balancer.balance_h1(full_corpus, spec.seed)
        else:
            balanced = balancer.balance_h2(full_corpus, spec.seed)

    with _Stage("split"):
        train_set, heldout = corpus.split(
            balanced.samples, spec.train_fraction, spec.seed, stratify=True
        )

    if spec.id == "S3":
        with _Stage("remainder"):
            test_set = balancer.remainder(full_corpus, balanced)
    else:
        test_set = heldout

    with _Stage("tokenize"):
        if spec.normalize_symbols:
            train_texts = [tokenizer.normalize(s.code, spec.api_list) for s in train_set]
        else:
            train_texts = [s.code for s in train_set]
        vocab = tokenizer.build_vocab(train_texts, spec.vocab_size)
        train_data = _encode_set(train_set, vocab, spec)
        val_data = _encode_set(heldout, vocab, spec)
        test_data = _encode_set(test_set, vocab, spec)

    with _Stage("train"):
        net = model.init(spec.model_config, spec.seed)
        t0 = time.monotonic()
        net, history = model.train(net, train_data, val_data, spec.train_config)
        resources = ResourceUsage(
            wall_time=time.monotonic() - t0,
            peak_resident_memory=_peak_rss_bytes(),
        )

    with _Stage("evaluate"):
        predictions = model.predict(net, test_data)
        per_kind_cm: dict[Kind, metrics.ConfusionMatrix] = {}
        for kind in KIND_ORDER:
            sel = [i for i, s in enumerate(test_set) if s.kind == kind]
            if not sel:
                continue
            per_kind_cm[kind] = metrics.confusion(
                [int(predictions[i]) for i in sel],
                [int(test_set.samples[i].label) for i in sel],
            )
        per_kind_ms, overall = metrics.aggregate(per_kind_cm)

    fingerprints = {
        "strategy": spec.id,
        "hypothesis": spec.hypothesis,
        "seed": spec.seed,
        "corpus_total": len(full_corpus),
        "corpus_counts": {
            f"{k.value}/{int(l)}": n for (k, l), n in sorted(
                full_corpus.manifest.items(),
                key=lambda kv: (KIND_ORDER.index(kv[0][0]), int(kv[0][1])),
            )
        },
        "balanced_total": len(balanced),
        "balanced_counts": {
            k.value: {"vulnerable": c[0], "non_vulnerable": c[1]}
            for k, c in balanced.per_kind_counts.items()
        },
        "train_size": len(train_set),
        "val_size": len(heldout),
        "test_size": len(test_set),
        "train_ids_sha256": _ids_digest(train_set.samples),
        "test_ids_sha256": _ids_digest(test_set.samples),
        "vocab_sha256": vocab.content_hash(),
    }
    return Report(
        strategy=spec,
        per_kind=per_kind_ms,
        overall=overall,
        per_kind_confusion=per_kind_cm,
        resources=resources,
        fingerprints=fingerprints,
        history=history,
    )


def _report_rows(report: Report) -> dict[str, metrics.MetricSet]:
    return metrics.kind_rows(report.per_kind, report.overall)


def emit(report: Report, format: str, path: str | Path) -> Path:
    """Write a report file: 'table' and 'csv' are deterministic metric views,
    'json' additionally carries resources, history, and fingerprints."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = _report_rows(report)
    if format == "table":
        body = f"Strategy {report.strategy.id} ({report.strategy.hypothesis})\n"
        body += metrics.format_metric_table(rows) + "\n"
        path.write_text(body, encoding="utf-8")
    elif format == "csv":
        lines = ["category," + ",".join(m.lower() for m in metrics.METRIC_NAMES)]
        for name, ms in rows.items():
            lines.append(f"{name}," + metrics.csv_row(ms))
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    elif format == "json":
        payload = {
            "strategy": report.strategy.id,
            "hypothesis": report.strategy.hypothesis,
            "seed": report.strategy.seed,
            "metrics": {name: ms.as_dict() for name, ms in rows.items()},
            "confusion": {
                k.value: {"tp": cm.tp, "fp": cm.fp, "tn": cm.tn, "fn": cm.fn}
                for k, cm in report.per_kind_confusion.items()
            },
            "resources": {
                "wall_time_seconds": report.resources.wall_time,
                "peak_resident_memory_bytes": report.resources.peak_resident_memory,
            },
            "history": {
                "train_loss": report.history.train_loss,
                "val_loss": report.history.val_loss,
                "val_accuracy": report.history.val_accuracy,
                "stopped_epoch": report.history.stopped_epoch,
            },
            "fingerprints": report.fingerprints,
        }
        path.write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")
    else:
        raise ValueError(f"unknown report format {format!r}")
    return path


def compare(reports: Sequence[Report]) -> str:
    """Side-by-side overall F1, accuracy, wall time, and peak memory."""
    if len(reports) < 2:
        raise ValueError("compare needs at least two reports")
    names = [r.strategy.id for r in reports]
    rows = [
        ("overall_f1_pct", [metrics.percent(r.overall.f1) for r in reports]),
        ("overall_accuracy_pct", [metrics.percent(r.overall.accuracy) for r in reports]),
        ("wall_time_s", [f"{r.resources.wall_time:.2f}" for r in reports]),
        ("peak_memory_mb", [f"{r.resources.peak_resident_memory / 2**20:.1f}" for r in reports]),
    ]
    width = max(len(n) for n, _ in rows)
    col = max(12, *(len(n) + 2 for n in names))
    out = ["metric".ljust(width) + "".join(n.rjust(col) for n in names)]
    if len(reports) == 2:
        out[0] += "delta".rjust(col)
    for name, cells in rows:
        line = name.ljust(width) + "".join(c.rjust(col) for c in cells)
        if len(reports) == 2:
            try:
                delta = float(cells[1]) - float(cells[0])
                line += f"{delta:+.2f}".rjust(col)
            except ValueError:
                line += "n/a".rjust(col)
        out.append(line)
    return "\n".join(out) + "\n"
