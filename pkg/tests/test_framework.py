import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from crossweigh.corpus import Corpus, WeightVector, surface_set
from crossweigh.evaluation import NoiseSpec, inject_noise
from crossweigh.framework import (CrossWeighConfig, DisjointMode, Heuristic, InfeasibleFoldError,
                                  MistakeCounts, audit, build_report, build_train_set,
                                  collect_test_entities, compute_weights, confidences,
                                  estimate_mistakes, parse_report, partition, run)
from crossweigh.synthetic import TemplateConfig, template_corpus
from crossweigh.tagger import TrainConfig, save_model, train

FAST = TrainConfig(epochs=3)


def corpus_of(*entity_lists):
    """One sentence per entry; each entry lists (surface, type) pairs."""
    data = []
    for ents in entity_lists:
        words, tags = ["say"], ["O"]
        for surface, etype in ents:
            toks = surface.split()
            words += toks + ["and"]
            tags += [f"B-{etype}"] + [f"I-{etype}"] * (len(toks) - 1) + ["O"]
        data.append((words, tags))
    return Corpus.from_tagged(data)


@st.composite
def random_corpora(draw):
    names = ["Chicago", "Japan", "NZ", "NZ First", "Bolger", "Haifa", "Tel Aviv", "China"]
    n = draw(st.integers(4, 25))
    ents = [draw(st.lists(st.tuples(st.sampled_from(names), st.sampled_from(["LOC", "ORG", "PER"])),
                          max_size=3)) for _ in range(n)]
    return corpus_of(*ents)


# -- partition --------------------------------------------------------------

def test_partition_one_per_fold():
    plan = partition(corpus_of(*[[]] * 10), 10, seed=1)
    assert sorted(len(plan.fold(f)) for f in range(10)) == [1] * 10


def test_partition_near_equal():
    plan = partition(corpus_of(*[[]] * 10), 3, seed=1)
    assert sorted(len(plan.fold(f)) for f in range(3)) == [3, 3, 4]


def test_partition_deterministic():
    c = corpus_of(*[[]] * 30)
    assert partition(c, 4, 9) == partition(c, 4, 9)
    assert partition(c, 4, 9) != partition(c, 4, 10)


def test_partition_rejects_too_many_folds():
    with pytest.raises(ValueError):
        partition(corpus_of([], []), 3, 0)


@given(st.integers(1, 60), st.integers(2, 12), st.integers(0, 2**31))
def test_partition_laws(n, k, seed):
    if k > n:
        return
    plan = partition(corpus_of(*[[]] * n), k, seed)
    folds = [plan.fold(f) for f in range(k)]
    assert sorted(itertools.chain(*folds)) == list(range(n))
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1


# -- entity-disjoint filtering ----------------------------------------------

def test_collect_test_entities():
    c = corpus_of([("Chicago", "ORG")], [], [("Japan", "LOC")], [("Japan", "LOC"), ("NZ", "LOC")])
    assert collect_test_entities(c, [0]) == {"Chicago"}
    assert collect_test_entities(c, [1]) == set()
    assert collect_test_entities(c, [2, 3]) == {"Japan", "NZ"}


def test_disjoint_ignores_entity_type():
    c = corpus_of([("Chicago", "ORG")], [("Chicago", "LOC")], [("Paris", "LOC")], [])
    ents = collect_test_entities(c, [0])
    assert build_train_set(c, [0], ents, DisjointMode.ON) == [2, 3]


def test_off_mode_is_plain_complement():
    c = corpus_of([("Chicago", "ORG")], [("Chicago", "LOC")], [("Paris", "LOC")], [])
    assert build_train_set(c, [0], {"Chicago"}, DisjointMode.OFF) == [1, 2, 3]


@settings(max_examples=150)
@given(random_corpora(), st.integers(2, 4), st.integers(0, 1000))
def test_filtering_laws(c, k, seed):
    if k > len(c):
        return
    plan = partition(c, k, seed)
    for f in range(k):
        fold = plan.fold(f)
        ents = collect_test_entities(c, fold)
        on = build_train_set(c, fold, ents, DisjointMode.ON)
        off = build_train_set(c, fold, ents, DisjointMode.OFF)
        rnd = build_train_set(c, fold, ents, DisjointMode.RANDOM_DISCARD, seed=seed + f)
        assert all(not (surface_set(c[j]) & ents) for j in on)
        assert all(j in on for j in off if not surface_set(c[j]) & ents)
        assert off == [j for j in range(len(c)) if j not in fold]
        assert len(rnd) == len(on) and set(rnd) <= set(off)
        assert rnd == build_train_set(c, fold, ents, DisjointMode.RANDOM_DISCARD, seed=seed + f)


# -- weights ----------------------------------------------------------------

def test_ratio_weights():
    w = compute_weights(MistakeCounts((0, 1, 3), 3), 0.7, Heuristic.RATIO)
    assert w.weights == pytest.approx([1.0, 0.7, 0.343], abs=1e-12)


def test_majority_weight():
    w = compute_weights(MistakeCounts((2,), 3), 0.7, Heuristic.MAJORITY)
    assert w.weights[0] == pytest.approx(0.343, abs=1e-12)


@pytest.mark.parametrize("h", list(Heuristic))
def test_unflagged_keeps_full_weight(h):
    assert compute_weights(MistakeCounts((0, 0), 3), 0.7, h).weights == (1.0, 1.0)


@pytest.mark.parametrize("eps", [0.0, 1.0, -0.5, 1.2])
def test_epsilon_range(eps):
    with pytest.raises(ValueError):
        compute_weights(MistakeCounts((0,), 3), eps)


@given(st.integers(1, 6).flatmap(lambda t: st.tuples(st.just(t), st.lists(st.integers(0, t), max_size=20))),
       st.floats(0.01, 0.99))
def test_weight_laws(t_delta, eps):
    t, delta = t_delta
    counts = MistakeCounts(tuple(delta), t)
    ratio = compute_weights(counts, eps, Heuristic.RATIO).weights
    for d, c, w in zip(delta, confidences(delta, t, Heuristic.RATIO), ratio):
        assert (w == 1.0) == (c == 0) == (d == 0)
    order = np.argsort(delta, kind="stable")
    assert all(ratio[a] >= ratio[b] for a, b in zip(order, order[1:]))
    extremes = [i for i, d in enumerate(delta) if d in (0, t)]
    results = [compute_weights(counts, eps, h).weights for h in Heuristic]
    for i in extremes:
        assert len({r[i] for r in results}) == 1


# -- estimation -------------------------------------------------------------

@pytest.fixture(scope="module")
def clean_templates():
    return template_corpus(TemplateConfig(n_sentences=300, names_per_type=150, seed=5))


@pytest.fixture(scope="module")
def learnable():
    """Single-token names whose type is fixed by the neighbouring words."""
    rng = np.random.default_rng(0)
    frames = [(["Mr.", None, "said", "."], "PER"), (["flights", "to", None, "."], "LOC"),
              ([None, "shares", "rose", "."], "ORG"), (["the", None, "team", "won"], "MISC")]
    names = {t: [f"{t[0]}{i}x{t[1].lower()}" for i in range(40)] for _, t in frames}
    data = []
    for _ in range(240):
        words, etype = frames[rng.integers(4)]
        name = names[etype][rng.integers(40)].capitalize()
        data.append(([name if w is None else w for w in words],
                     [f"B-{etype}" if w is None else "O" for w in words]))
    return Corpus.from_tagged(data)


def test_learnable_corpus_has_no_marks(learnable):
    counts = estimate_mistakes(learnable, CrossWeighConfig(k=5, t=3, seed=1), FAST)
    assert set(counts.delta) == {0}


def test_corrupted_sentence_marked_every_iteration(learnable):
    noisy, truth = inject_noise(learnable, NoiseSpec(0.001, frozenset({"TypeSwap"}), seed=3))
    (bad,) = truth
    counts = estimate_mistakes(noisy, CrossWeighConfig(k=5, t=3, seed=2), FAST)
    assert counts.delta[bad] == 3
    assert sum(counts.delta) == 3


def test_single_iteration_bounds(clean_templates):
    counts = estimate_mistakes(clean_templates.subset(range(60)), CrossWeighConfig(k=4, t=1), FAST)
    assert set(counts.delta) <= {0, 1}
    assert len(counts.predictions) == 1 and all(counts.predictions[0])


def test_each_sentence_scored_once_per_iteration(clean_templates):
    c = clean_templates.subset(range(80))
    counts = estimate_mistakes(c, CrossWeighConfig(k=4, t=3, seed=4), FAST)
    for it, preds in enumerate(counts.predictions):
        assert len(preds) == len(c)
        assert all(len(p) == len(s) for p, s in zip(preds, c))
        marked = [i for i, s in enumerate(c) if preds[i] != s.tags]
        assert all(counts.delta[i] >= 1 for i in marked)
    recount = [sum(p[i] != c[i].tags for p in counts.predictions) for i in range(len(c))]
    assert list(counts.delta) == recount


def test_empty_filtered_fold_is_an_error():
    c = corpus_of(*[[("Japan", "LOC")]] * 6)
    with pytest.raises(InfeasibleFoldError, match="increase k"):
        estimate_mistakes(c, CrossWeighConfig(k=2, t=1), FAST)


def test_config_invariants():
    for bad in (dict(k=1), dict(t=0), dict(epsilon=1.0), dict(heuristic="median")):
        with pytest.raises(ValueError):
            CrossWeighConfig(**bad)


def test_parallel_jobs_match_serial(clean_templates):
    c = clean_templates.subset(range(60))
    cfg = CrossWeighConfig(k=3, t=1, seed=8)
    assert estimate_mistakes(c, cfg, FAST, jobs=2) == estimate_mistakes(c, cfg, FAST, jobs=1)


# -- run / audit ------------------------------------------------------------

def test_run_on_clean_corpus_matches_plain_training():
    c = template_corpus(TemplateConfig(n_sentences=120, names_per_type=200, seed=1))
    cfg = CrossWeighConfig(k=4, t=1, seed=0)
    model, report = run(c, cfg, FAST)
    expected = train(c, report.weights, FAST)
    assert save_model(model) == save_model(expected)
    if not report.flagged:
        assert save_model(model) == save_model(train(c, None, FAST))
    assert len(report.flagged) == sum(e.delta >= 1 for e in report.entries)


def test_report_flag_count_and_serialization():
    c = corpus_of(*[[("Japan", "LOC")], [("Chicago", "ORG")], []] * 4)
    cfg = CrossWeighConfig(k=3, t=2, seed=3)
    counts = MistakeCounts(tuple([0, 1, 2] * 4), 2, predictions=(tuple(s.tags for s in c),) * 2)
    report = build_report(c, cfg, counts, truth={1, 2, 3})
    header, records = parse_report(report.to_text())
    assert header["summary.flagged"] == "8" == str(len(report.flagged))
    assert header["config.k"] == "3" and header["config.heuristic"] == "ratio"
    assert float(header["detection.precision"]) == pytest.approx(2 / 8, abs=1e-6)
    assert float(header["detection.recall"]) == pytest.approx(2 / 3, abs=1e-6)
    assert [int(r["delta"]) for r in records] == [0, 1, 2] * 4
    assert [float(r["w"]) for r in records[:3]] == [1.0, 0.7, 0.7 ** 2]
    assert records[0]["gold"] == ",".join(c[0].tags) == records[0]["pred1"]


def test_audit_detection_bounds(clean_templates):
    noisy, truth = inject_noise(clean_templates, NoiseSpec(0.05, seed=11))
    cfg = CrossWeighConfig(k=5, t=2, seed=0)
    report = audit(noisy, cfg, truth, FAST)
    assert report.detection.gold == len(truth)
    same = build_report(noisy, cfg, MistakeCounts(tuple(e.delta for e in report.entries), 2,
                                                  tuple(zip(*[e.predictions for e in report.entries]))),
                        truth=report.flagged)
    assert same.detection.precision == same.detection.recall == 1.0
    outside = set(range(len(noisy))) - report.flagged
    assert build_report(noisy, cfg, MistakeCounts(tuple(e.delta for e in report.entries), 2,
                                                  tuple(zip(*[e.predictions for e in report.entries]))),
                        truth=outside).detection.precision == 0.0


def test_weights_vector_from_report(clean_templates):
    c = clean_templates.subset(range(50))
    report = audit(c, CrossWeighConfig(k=5, t=1, seed=2), train_config=FAST)
    assert isinstance(report.weights, WeightVector) and len(report.weights) == 50
