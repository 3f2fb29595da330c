"""Seeded downsampling under the two balancing hypotheses.

Hypothesis 1 keeps every vulnerable sample of each kind and draws an
equal-sized uniform subset of that kind's non-vulnerable pool.  Hypothesis
2 applies a uniform quota to both classes of every kind, equal to the
smallest per-kind vulnerable count.

Selection uses a counter-based Philox generator keyed by (seed, kind), and
pools are sorted by id before sampling, so results depend on neither load
order nor the other kinds' pools.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import KIND_ORDER, Kind, Label, Sample, SampleSet, save
from .errors import DataError


@dataclass
class BalancedSet:
    samples: SampleSet
    hypothesis: str  # "H1" or "H2"
    seed: int
    per_kind_counts: dict[Kind, tuple[int, int]]  # kind -> (vulnerable, non-vulnerable)

    def __len__(self) -> int:
        return len(self.samples)


def _pools(corpus: SampleSet) -> dict[tuple[Kind, Label], list[Sample]]:
    pools: dict[tuple[Kind, Label], list[Sample]] = {}
    for s in corpus:
        pools.setdefault((s.kind, s.label), []).append(s)
    for pool in pools.values():
        pool.sort(key=lambda s: s.id)
    return pools


def _draw(pool: list[Sample], count: int, seed: int, kind: Kind, label: Label) -> list[Sample]:
    if count == len(pool):
        return list(pool)
    rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence(
            entropy=seed, spawn_key=(KIND_ORDER.index(kind), int(label))))
    )
    chosen = rng.choice(len(pool), size=count, replace=False)
    return [pool[i] for i in sorted(int(i) for i in chosen)]


def balance_h1(corpus: SampleSet, seed: int) -> BalancedSet:
    """All vulnerable samples per kind, matched 1:1 by sampled non-vulnerable."""
    pools = _pools(corpus)
    out: list[Sample] = []
    counts: dict[Kind, tuple[int, int]] = {}
    for kind in KIND_ORDER:
        vul = pools.get((kind, Label.VULNERABLE), [])
        non = pools.get((kind, Label.NON_VULNERABLE), [])
        if not vul and not non:
            continue
        if len(non) < len(vul):
            raise DataError(
                f"kind {kind.value}: non-vulnerable pool ({len(non)}) is smaller "
                f"than the vulnerable count ({len(vul)})"
            )
        picked = _draw(non, len(vul), seed, kind, Label.NON_VULNERABLE)
        out.extend(vul)
        out.extend(picked)
        counts[kind] = (len(vul), len(picked))
    return BalancedSet(SampleSet(out), "H1", seed, counts)


def balance_h2(corpus: SampleSet, seed: int) -> BalancedSet:
    """Uniform quota per kind and class: the smallest per-kind vulnerable count."""
    pools = _pools(corpus)
    kinds = [k for k in KIND_ORDER
             if (k, Label.VULNERABLE) in pools or (k, Label.NON_VULNERABLE) in pools]
    if not kinds:
        raise DataError("corpus is empty")
    for kind in kinds:
        for label in (Label.VULNERABLE, Label.NON_VULNERABLE):
            if not pools.get((kind, label)):
                raise DataError(f"kind {kind.value}: class {int(label)} is empty")
    quota = min(len(pools[(k, Label.VULNERABLE)]) for k in kinds)
    out: list[Sample] = []
    counts: dict[Kind, tuple[int, int]] = {}
    for kind in kinds:
        non = pools[(kind, Label.NON_VULNERABLE)]
        if len(non) < quota:
            raise DataError(
                f"kind {kind.value}: non-vulnerable pool ({len(non)}) is smaller "
                f"than the quota ({quota})"
            )
        vul_pick = _draw(pools[(kind, Label.VULNERABLE)], quota, seed, kind, Label.VULNERABLE)
        non_pick = _draw(non, quota, seed, kind, Label.NON_VULNERABLE)
        out.extend(vul_pick)
        out.extend(non_pick)
        counts[kind] = (quota, quota)
    return BalancedSet(SampleSet(out), "H2", seed, counts)


def remainder(corpus: SampleSet, balanced: BalancedSet) -> SampleSet:
    """The corpus minus the balanced selection, by id, in corpus order."""
    corpus_ids = corpus.ids()
    taken = balanced.samples.ids()
    missing = taken - corpus_ids
    if missing:
        raise DataError(
            f"balanced set contains {len(missing)} id(s) not present in the corpus, "
            f"e.g. {sorted(missing)[0]!r}"
        )
    return SampleSet(s for s in corpus if s.id not in taken)


def save_balanced(bset: BalancedSet, out_dir: str | Path) -> tuple[Path, Path]:
    """Write balanced.jsonl plus a manifest sidecar; returns both paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data_path = save(bset.samples, out_dir / "balanced.jsonl")
    manifest = {
        "hypothesis": bset.hypothesis,
        "seed": bset.seed,
        "per_kind_counts": {
            kind.value: {"vulnerable": c[0], "non_vulnerable": c[1]}
            for kind, c in bset.per_kind_counts.items()
        },
        "total": len(bset),
    }
    manifest_path = out_dir / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return data_path, manifest_path
