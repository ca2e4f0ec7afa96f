"""Entity-level scoring, mistake-detection metrics, noise injection and run summaries."""

from __future__ import annotations

import enum
import math
import statistics
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus, EntitySpan, convert_iob1_to_bio, extract_entities, spans_from_tags


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float
    gold: int
    predicted: int
    correct: int

    @classmethod
    def from_counts(cls, gold: int, predicted: int, correct: int) -> "PRF":
        p = correct / predicted if predicted else 0.0
        r = correct / gold if gold else 0.0
        f = 2 * p * r / (p + r) if p + r else 0.0
        return cls(p, r, f, gold, predicted, correct)


@dataclass(frozen=True)
class EntityScore(PRF):
    per_type: dict[str, PRF] = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [f"{k}={v}" for k, v in (
            ("precision", f"{self.precision:.6f}"), ("recall", f"{self.recall:.6f}"),
            ("f1", f"{self.f1:.6f}"), ("gold", self.gold), ("predicted", self.predicted),
            ("correct", self.correct))]
        for t, s in sorted(self.per_type.items()):
            lines += [f"{t}.precision={s.precision:.6f}", f"{t}.recall={s.recall:.6f}",
                      f"{t}.f1={s.f1:.6f}", f"{t}.gold={s.gold}", f"{t}.predicted={s.predicted}",
                      f"{t}.correct={s.correct}"]
        return "\n".join(lines) + "\n"


def _key(sp: EntitySpan) -> tuple[int, int, str]:
    return sp.start, sp.end, sp.entity_type


def entity_f1(gold: Corpus, predicted: Sequence[Sequence[str]]) -> EntityScore:
    """Micro-averaged exact-match span F1 with per-type breakdown.

    Predicted tags are read leniently, as conlleval does: an ``I-X`` that
    cannot continue an ``X`` entity opens a new one.
    """
    if len(predicted) != len(gold):
        raise ValueError(f"{len(predicted)} predicted sequences for {len(gold)} gold sentences")
    n_gold, n_pred, n_ok = Counter(), Counter(), Counter()
    for sent, tags in zip(gold, predicted):
        if len(tags) != len(sent):
            raise ValueError(f"sentence {sent.index}: {len(tags)} predicted tags for {len(sent)} tokens")
        g = {_key(sp) for sp in extract_entities(sent)}
        p = {_key(sp) for sp in spans_from_tags(sent.words, convert_iob1_to_bio(tags))}
        n_gold.update(k[2] for k in g)
        n_pred.update(k[2] for k in p)
        n_ok.update(k[2] for k in g & p)
    per_type = {t: PRF.from_counts(n_gold[t], n_pred[t], n_ok[t]) for t in sorted(n_gold | n_pred)}
    total = PRF.from_counts(sum(n_gold.values()), sum(n_pred.values()), sum(n_ok.values()))
    return EntityScore(**vars(total), per_type=per_type)


def mistake_detection_metrics(flagged: Iterable[int], truth: Iterable[int], universe: int) -> PRF:
    flagged, truth = set(flagged), set(truth)
    if not truth:
        raise ValueError("truth set is empty")
    bad = [i for i in flagged | truth if not 0 <= i < universe]
    if bad:
        raise ValueError(f"indices outside 0..{universe - 1}: {sorted(bad)[:5]}")
    return PRF.from_counts(len(truth), len(flagged), len(flagged & truth))


class NoiseKind(str, enum.Enum):
    TYPE_SWAP = "TypeSwap"
    BOUNDARY_SHRINK = "BoundaryShrink"
    BOUNDARY_GROW = "BoundaryGrow"
    ENTITY_DROP = "EntityDrop"


@dataclass(frozen=True)
class NoiseSpec:
    """Corruption settings.

    With ``surface_consistency`` at 0 every corrupted sentence is picked and
    corrupted independently.  A positive value corrupts names instead: each
    picked entity surface gets one fixed corruption, applied to each of its
    occurrences with that probability, mimicking an annotator who repeats
    the same mistake.
    """

    rate: float
    kinds: frozenset[NoiseKind] = frozenset(NoiseKind)
    seed: int = 0
    surface_consistency: float = 0.0

    def __post_init__(self):
        if not 0.0 < self.rate < 1.0:
            raise ValueError(f"noise rate {self.rate} outside (0, 1)")
        if not self.kinds:
            raise ValueError("no noise kinds given")
        if not 0.0 <= self.surface_consistency <= 1.0:
            raise ValueError("surface_consistency outside [0, 1]")
        object.__setattr__(self, "kinds", frozenset(NoiseKind(k) for k in self.kinds))


def _applicable(kind: NoiseKind, tags: Sequence[str], sp: EntitySpan, n_types: int) -> bool:
    if kind is NoiseKind.TYPE_SWAP:
        return n_types > 1
    if kind is NoiseKind.BOUNDARY_SHRINK:
        return sp.end - sp.start > 1
    if kind is NoiseKind.BOUNDARY_GROW:
        return (sp.start > 0 and tags[sp.start - 1] == "O") or (sp.end < len(tags) and tags[sp.end] == "O")
    return True


def _corrupt(kind: NoiseKind, tags: Sequence[str], sp: EntitySpan, types: Sequence[str],
             choice: int) -> list[str]:
    """Apply ``kind`` to span ``sp``; ``choice`` picks the new type or the side to change."""
    tags = list(tags)
    s, e, t = sp.start, sp.end, sp.entity_type
    if kind is NoiseKind.TYPE_SWAP:
        others = [x for x in types if x != t]
        new = others[choice % len(others)]
        tags[s:e] = [f"B-{new}"] + [f"I-{new}"] * (e - s - 1)
    elif kind is NoiseKind.BOUNDARY_SHRINK:
        if choice % 2:
            tags[e - 1] = "O"
        else:
            tags[s] = "O"
            tags[s + 1] = f"B-{t}"
    elif kind is NoiseKind.BOUNDARY_GROW:
        left = s > 0 and tags[s - 1] == "O"
        right = e < len(tags) and tags[e] == "O"
        if left and (not right or choice % 2 == 0):
            tags[s - 1] = f"B-{t}"
            tags[s] = f"I-{t}"
        else:
            tags[e] = f"I-{t}"
    else:
        tags[s:e] = ["O"] * (e - s)
    return tags


def inject_noise(corpus: Corpus, spec: NoiseSpec) -> tuple[Corpus, set[int]]:
    """Corrupt ``ceil(rate * n)`` entity-bearing sentences, one corruption each.

    Returns the noisy corpus and the exact set of changed sentence indices.
    """
    rng = np.random.default_rng(spec.seed)
    types = corpus.entity_types
    kinds = [k for k in NoiseKind if k in spec.kinds]
    spans = {s.index: extract_entities(s) for s in corpus}
    corruptible = [i for i, sps in spans.items()
                   if any(_applicable(k, corpus[i].tags, sp, len(types)) for sp in sps for k in kinds)]
    need = math.ceil(spec.rate * len(corpus))
    if need > len(corruptible):
        raise ValueError(f"need {need} corruptible sentences, corpus has {len(corruptible)}")

    updates: dict[int, list[str]] = {}
    if spec.surface_consistency > 0:
        _corrupt_by_surface(corpus, spans, kinds, types, need, spec.surface_consistency, rng, updates)
    remaining = [i for i in corruptible if i not in updates]
    picks = rng.choice(len(remaining), size=need - len(updates), replace=False)
    for i in sorted(remaining[j] for j in picks):
        tags = corpus[i].tags
        opts = [(sp, ks) for sp in spans[i]
                if (ks := [k for k in kinds if _applicable(k, tags, sp, len(types))])]
        sp, ks = opts[rng.integers(len(opts))]
        updates[i] = _corrupt(ks[rng.integers(len(ks))], tags, sp, types, int(rng.integers(1 << 30)))
    noisy = corpus.replace({i: corpus[i].with_tags(t) for i, t in updates.items()})
    return noisy, set(updates)


def _corrupt_by_surface(corpus, spans, kinds, types, need, consistency, rng, updates):
    occurrences: dict[str, list[tuple[int, EntitySpan]]] = {}
    for i, sps in spans.items():
        for sp in sps:
            occurrences.setdefault(sp.surface, []).append((i, sp))
    surfaces = sorted(occurrences)
    for si in rng.permutation(len(surfaces)):
        occ = occurrences[surfaces[si]]
        i0, sp0 = occ[0]
        ks = [k for k in kinds if k is NoiseKind.BOUNDARY_GROW
              or _applicable(k, corpus[i0].tags, sp0, len(types))]
        if not ks:
            continue
        kind = ks[rng.integers(len(ks))]
        choice = int(rng.integers(1 << 30))
        for i, sp in occ:
            if len(updates) >= need:
                return
            if i in updates or rng.random() >= consistency:
                continue
            if _applicable(kind, corpus[i].tags, sp, len(types)):
                updates[i] = _corrupt(kind, corpus[i].tags, sp, types, choice)


@dataclass(frozen=True)
class RunSummary:
    f1s: tuple[float, ...]
    mean: float
    std: float


def summarize_runs(f1s: Sequence[float]) -> RunSummary:
    if not f1s:
        raise ValueError("no runs to summarize")
    std = statistics.stdev(f1s) if len(f1s) > 1 else 0.0
    return RunSummary(tuple(f1s), statistics.fmean(f1s), std)


def write_indices(indices: Iterable[int]) -> str:
    return "".join(f"{i}\n" for i in sorted(indices))


def read_indices(text: str) -> set[int]:
    return {int(line) for line in text.split()}
