"""Cross-checked mistake estimation and sentence reweighing.

Each estimation iteration draws a fresh k-fold partition.  A tagger is
trained for every fold on the sentences outside it, optionally dropping any
sentence that shares an entity surface name with the fold, and then tags the
held-out sentences.  A sentence whose prediction differs from its gold tags
anywhere is marked for that iteration.  Marks over ``t`` iterations become
weights ``epsilon ** c`` for the final weighted training run.
"""

from __future__ import annotations

import enum
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus, WeightVector, surface_set
from .evaluation import PRF, mistake_detection_metrics
from .tagger import TaggerModel, TrainConfig, predict, train

log = logging.getLogger(__name__)


class Heuristic(str, enum.Enum):
    RATIO = "ratio"
    AT_LEAST_ONE = "at-least-one"
    MAJORITY = "majority"
    ALL = "all"


class DisjointMode(str, enum.Enum):
    ON = "on"
    OFF = "off"
    RANDOM_DISCARD = "random-discard"


class InfeasibleFoldError(RuntimeError):
    """A fold's filtered training set came out empty."""


@dataclass(frozen=True)
class CrossWeighConfig:
    k: int = 10
    t: int = 3
    epsilon: float = 0.7
    heuristic: Heuristic = Heuristic.RATIO
    entity_disjoint: DisjointMode = DisjointMode.ON
    seed: int = 0

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.t < 1:
            raise ValueError("t must be >= 1")
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        object.__setattr__(self, "heuristic", Heuristic(self.heuristic))
        object.__setattr__(self, "entity_disjoint", DisjointMode(self.entity_disjoint))


@dataclass(frozen=True)
class FoldPlan:
    assignment: tuple[int, ...]
    k: int
    seed: int

    def fold(self, f: int) -> list[int]:
        return [i for i, a in enumerate(self.assignment) if a == f]


@dataclass(frozen=True)
class MistakeCounts:
    delta: tuple[int, ...]
    t: int
    # predictions[iteration][sentence] -> tag tuple
    predictions: tuple[tuple[tuple[str, ...], ...], ...] = ()
    # train-set sizes per (iteration, fold)
    train_sizes: tuple[tuple[int, ...], ...] = ()

    @property
    def flagged(self) -> set[int]:
        return {i for i, d in enumerate(self.delta) if d >= 1}


def derive_seed(*parts: int) -> int:
    """Deterministic sub-seed from a master seed and position indices."""
    return int(np.random.SeedSequence([abs(p) for p in parts]).generate_state(1)[0])


def partition(corpus: Corpus, k: int, seed: int) -> FoldPlan:
    n = len(corpus)
    if k > n:
        raise ValueError(f"cannot split {n} sentences into {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    assignment = [0] * n
    for f, block in enumerate(np.array_split(perm, k)):
        for i in block:
            assignment[int(i)] = f
    return FoldPlan(tuple(assignment), k, seed)


def collect_test_entities(corpus: Corpus, fold: Iterable[int]) -> set[str]:
    out: set[str] = set()
    for i in fold:
        out |= surface_set(corpus[i])
    return out


def build_train_set(corpus: Corpus, fold: Iterable[int], test_entities: set[str],
                    mode: DisjointMode = DisjointMode.ON, seed: int = 0) -> list[int]:
    """Training indices for the model that checks ``fold``.

    ``RANDOM_DISCARD`` removes, uniformly at random, as many sentences as
    entity-disjoint filtering would have removed.
    """
    mode = DisjointMode(mode)
    held = set(fold)
    rest = [j for j in range(len(corpus)) if j not in held]
    if mode is DisjointMode.OFF:
        return rest
    disjoint = [j for j in rest if not (surface_set(corpus[j]) & test_entities)]
    if mode is DisjointMode.ON:
        return disjoint
    keep = len(disjoint)
    picked = np.random.default_rng(seed).choice(len(rest), size=keep, replace=False)
    return sorted(rest[i] for i in picked)


def _fold_job(args) -> tuple[list[int], list[tuple[str, ...]]]:
    corpus, train_idx, test_idx, train_config = args
    model = train(corpus.subset(train_idx), config=train_config)
    return test_idx, [tuple(predict(model, corpus[j])) for j in test_idx]


def estimate_mistakes(corpus: Corpus, config: CrossWeighConfig,
                      train_config: TrainConfig = TrainConfig(), jobs: int = 1) -> MistakeCounts:
    if len(corpus) == 0:
        raise ValueError("cannot estimate mistakes on an empty corpus")
    n = len(corpus)
    delta = [0] * n
    all_preds = []
    sizes = []
    for it in range(config.t):
        plan = partition(corpus, config.k, derive_seed(config.seed, it))
        tasks = []
        for f in range(config.k):
            fold = plan.fold(f)
            ents = collect_test_entities(corpus, fold)
            idx = build_train_set(corpus, fold, ents, config.entity_disjoint,
                                  seed=derive_seed(config.seed, it, f))
            if not idx:
                raise InfeasibleFoldError(
                    f"iteration {it}, fold {f}: no training sentences left after entity-disjoint "
                    f"filtering; increase k (currently {config.k})")
            tasks.append((corpus, idx, fold, train_config))
        sizes.append(tuple(len(t[1]) for t in tasks))
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                results = list(pool.map(_fold_job, tasks))
        else:
            results = [_fold_job(t) for t in tasks]
        preds: list[tuple[str, ...]] = [()] * n
        for fold, fold_preds in results:  # merged in fold order
            for j, p in zip(fold, fold_preds):
                preds[j] = p
                if p != corpus[j].tags:
                    delta[j] += 1
        all_preds.append(tuple(preds))
        log.info("iteration %d: %d sentences marked so far", it + 1, sum(d > 0 for d in delta))
    return MistakeCounts(tuple(delta), config.t, tuple(all_preds), tuple(sizes))


def confidences(delta: Sequence[int], t: int, heuristic: Heuristic) -> list[int]:
    heuristic = Heuristic(heuristic)
    if heuristic is Heuristic.RATIO:
        return list(delta)
    if heuristic is Heuristic.AT_LEAST_ONE:
        threshold = 1
    elif heuristic is Heuristic.MAJORITY:
        threshold = t // 2 + 1
    else:
        threshold = t
    return [t if d >= threshold else 0 for d in delta]


def compute_weights(counts: MistakeCounts, epsilon: float,
                    heuristic: Heuristic = Heuristic.RATIO) -> WeightVector:
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    return WeightVector(tuple(epsilon ** c for c in confidences(counts.delta, counts.t, heuristic)))


@dataclass
class AuditEntry:
    index: int
    delta: int
    c: int
    w: float
    gold: tuple[str, ...]
    predictions: tuple[tuple[str, ...], ...]


@dataclass
class MistakeAuditReport:
    config: CrossWeighConfig
    entries: list[AuditEntry]
    detection: PRF | None = None
    extra: dict[str, str] = field(default_factory=dict)

    @property
    def flagged(self) -> set[int]:
        return {e.index for e in self.entries if e.delta >= 1}

    @property
    def weights(self) -> WeightVector:
        return WeightVector(tuple(e.w for e in self.entries))

    def to_text(self) -> str:
        lines = ["# crossweigh audit report 1"]
        for key, val in asdict(self.config).items():
            lines.append(f"config.{key}={getattr(val, 'value', val)}")
        lines += [f"summary.sentences={len(self.entries)}", f"summary.flagged={len(self.flagged)}"]
        if self.detection is not None:
            d = self.detection
            lines += [f"detection.precision={d.precision:.6f}", f"detection.recall={d.recall:.6f}",
                      f"detection.f1={d.f1:.6f}", f"detection.truth={d.gold}",
                      f"detection.true_flagged={d.correct}"]
        lines += [f"{k}={v}" for k, v in sorted(self.extra.items())]
        lines.append("")
        for e in self.entries:
            rec = [f"index={e.index}", f"delta={e.delta}", f"c={e.c}", f"w={e.w!r}",
                   "gold=" + ",".join(e.gold)]
            rec += [f"pred{it + 1}=" + ",".join(p) for it, p in enumerate(e.predictions)]
            lines.append("\t".join(rec))
        return "\n".join(lines) + "\n"


def parse_report(text: str) -> tuple[dict[str, str], list[dict[str, str]]]:
    """Summary key-values and per-sentence records of a serialized report."""
    header, records = {}, []
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        if line.startswith("index="):
            records.append(dict(f.split("=", 1) for f in line.split("\t")))
        else:
            k, v = line.split("=", 1)
            header[k] = v
    return header, records


def build_report(corpus: Corpus, config: CrossWeighConfig, counts: MistakeCounts,
                 truth: Iterable[int] | None = None) -> MistakeAuditReport:
    cs = confidences(counts.delta, counts.t, config.heuristic)
    weights = compute_weights(counts, config.epsilon, config.heuristic)
    entries = [AuditEntry(i, counts.delta[i], cs[i], weights[i], corpus[i].tags,
                          tuple(p[i] for p in counts.predictions))
               for i in range(len(corpus))]
    report = MistakeAuditReport(config, entries)
    if truth is not None:
        report.detection = mistake_detection_metrics(report.flagged, truth, len(corpus))
    return report


def audit(corpus: Corpus, config: CrossWeighConfig, truth: Iterable[int] | None = None,
          train_config: TrainConfig = TrainConfig(), jobs: int = 1) -> MistakeAuditReport:
    counts = estimate_mistakes(corpus, config, train_config, jobs)
    return build_report(corpus, config, counts, truth)


def run(corpus: Corpus, config: CrossWeighConfig, train_config: TrainConfig = TrainConfig(),
        truth: Iterable[int] | None = None, jobs: int = 1) -> tuple[TaggerModel, MistakeAuditReport]:
    """Estimate mistakes, reweigh, and train the final model on the full corpus."""
    report = audit(corpus, config, truth, train_config, jobs)
    model = train(corpus, report.weights, train_config)
    return model, report
