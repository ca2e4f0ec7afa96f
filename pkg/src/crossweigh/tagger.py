"""Weighted averaged structured perceptron for BIO sequence labeling.

Each sentence ``i`` contributes its update scaled by ``w_i``, the perceptron
counterpart of scaling the per-sentence loss term.  Training decodes with a
Hamming cost added, so gold has to win by a margin.  Averaging runs over
weighted time (each visit advances the clock by ``w_i``), so a sentence with
weight zero leaves the trained model untouched.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Corpus, Sentence, repair_bio

FORMAT_HEADER = "crossweigh-tagger 1"
START = "<S>"
STOP = "</S>"


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5
    shuffle_seed: int = 0
    averaging: bool = True
    # visit sentences in corpus order when False
    shuffle: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


def word_shape(word: str) -> str:
    out = []
    for ch in word:
        if ch.isupper():
            out.append("X")
        elif ch.islower():
            out.append("x")
        elif ch.isdigit():
            out.append("d")
        else:
            out.append(ch)
    return "".join(out)


def _features(words: Sequence[str], i: int) -> list[str]:
    w = words[i]
    low = w.lower()
    feats = ["bias", f"w0={w}", f"w0.lower={low}", f"shape={word_shape(w)}"]
    for n in (1, 2, 3):
        if len(w) >= n:
            feats.append(f"pre{n}={w[:n]}")
            feats.append(f"suf{n}={w[-n:]}")
    if i == 0:
        feats += ["BOS", "w-1=<BOS>"]
    else:
        feats += [f"w-1={words[i - 1]}", f"w-1.lower={words[i - 1].lower()}"]
    if i == len(words) - 1:
        feats += ["EOS", "w+1=<EOS>"]
    else:
        feats += [f"w+1={words[i + 1]}", f"w+1.lower={words[i + 1].lower()}"]
    return feats


def featurize(sentence: Sentence, position: int) -> frozenset[str]:
    if not 0 <= position < len(sentence):
        raise IndexError(f"position {position} outside sentence of length {len(sentence)}")
    return frozenset(_features(sentence.words, position))


@dataclass(frozen=True, eq=False)
class TaggerModel:
    """Dense parameter arrays indexed by feature row and tag position.

    ``emission`` carries one extra all-zero row at the end, used as a
    placeholder so every token has at least one row to sum over.
    """

    labels: tuple[str, ...]
    features: dict[str, int]
    emission: np.ndarray
    transition: np.ndarray
    start: np.ndarray
    stop: np.ndarray
    averaged: bool = False

    @classmethod
    def zeros(cls, labels: Sequence[str], features: Sequence[str] = ()) -> "TaggerModel":
        T = len(labels)
        index = {f: i for i, f in enumerate(features)}
        return cls(tuple(labels), index, np.zeros((len(index) + 1, T)), np.zeros((T, T)),
                   np.zeros(T), np.zeros(T))

    @property
    def feature_weights(self) -> dict[tuple[str, str], float]:
        out = {}
        for f, row in self.features.items():
            for j in np.flatnonzero(self.emission[row]):
                out[f, self.labels[j]] = float(self.emission[row, j])
        return out

    @property
    def transition_weights(self) -> dict[tuple[str, str], float]:
        out = {}
        for a, prev in enumerate(self.labels):
            out[START, prev] = float(self.start[a])
            out[prev, STOP] = float(self.stop[a])
            for b, cur in enumerate(self.labels):
                out[prev, cur] = float(self.transition[a, b])
        return out

    def encode(self, words: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
        """Flat emission-row ids and per-token offsets for ``np.add.reduceat``."""
        pad = len(self.features)
        ids: list[int] = []
        offsets = []
        get = self.features.get
        for i in range(len(words)):
            offsets.append(len(ids))
            ids.append(pad)
            for f in _features(words, i):
                r = get(f)
                if r is not None:
                    ids.append(r)
        return np.asarray(ids, dtype=np.intp), np.asarray(offsets, dtype=np.intp)


def _viterbi(E: np.ndarray, trans: np.ndarray, start: np.ndarray, stop: np.ndarray) -> np.ndarray:
    L, T = E.shape
    cols = np.arange(T)
    score = start + E[0]
    back = np.zeros((L, T), dtype=np.intp)
    for p in range(1, L):
        cand = score[:, None] + trans
        back[p] = cand.argmax(axis=0)  # first maximum, i.e. lowest tag index
        score = cand[back[p], cols] + E[p]
    score = score + stop
    path = np.empty(L, dtype=np.intp)
    path[-1] = score.argmax()
    for p in range(L - 1, 0, -1):
        path[p - 1] = back[p, path[p]]
    return path


def _decode_ids(model: TaggerModel, ids: np.ndarray, offsets: np.ndarray) -> np.ndarray:
    E = np.add.reduceat(model.emission[ids], offsets, axis=0)
    return _viterbi(E, model.transition, model.start, model.stop)


def viterbi_decode(model: TaggerModel, sentence: Sentence) -> list[str]:
    if len(sentence) == 0:
        raise ValueError("cannot decode an empty sentence")
    ids, offsets = model.encode(sentence.words)
    return [model.labels[j] for j in _decode_ids(model, ids, offsets)]


def predict(model: TaggerModel, sentence: Sentence) -> list[str]:
    return repair_bio(viterbi_decode(model, sentence))


def predict_corpus(model: TaggerModel, corpus: Corpus) -> list[list[str]]:
    return [predict(model, s) for s in corpus]


def _score_delta(T: int, gold: np.ndarray, pred: np.ndarray):
    """Integer count differences Phi(x, gold) - Phi(x, pred) for boundary and transition features."""
    d_start = np.bincount([gold[0]], minlength=T) - np.bincount([pred[0]], minlength=T)
    d_stop = np.bincount([gold[-1]], minlength=T) - np.bincount([pred[-1]], minlength=T)
    d_trans = (np.bincount(gold[:-1] * T + gold[1:], minlength=T * T)
               - np.bincount(pred[:-1] * T + pred[1:], minlength=T * T))
    return d_start, d_stop, d_trans


class _Trainer:
    def __init__(self, model: TaggerModel):
        self.model = model
        # sums of (clock before update) * update, for averaging
        self.acc = {name: np.zeros_like(getattr(model, name))
                    for name in ("emission", "transition", "start", "stop")}
        self.clock = 0.0

    def step(self, ids, offsets, gold: np.ndarray, weight: float):
        m = self.model
        # cost-augmented decode: gold must beat every other path by its Hamming distance,
        # so exact ties count as mistakes instead of resting on tie-breaking order
        E = np.add.reduceat(m.emission[ids], offsets, axis=0) + 1.0
        E[np.arange(len(gold)), gold] -= 1.0
        pred = _viterbi(E, m.transition, m.start, m.stop)
        if weight != 0.0 and not np.array_equal(pred, gold):
            self.update(ids, offsets, gold, pred, weight)
        self.clock += weight

    def update(self, ids, offsets, gold, pred, weight):
        m = self.model
        T = len(m.labels)
        pad = len(m.features)
        bounds = np.append(offsets, len(ids))
        keys, signs = [], []
        for p in np.flatnonzero(gold != pred):
            rows = ids[bounds[p]:bounds[p + 1]]
            rows = rows[rows != pad]
            keys += [rows * T + gold[p], rows * T + pred[p]]
            signs += [np.ones(len(rows), dtype=np.int64), -np.ones(len(rows), dtype=np.int64)]
        if keys:
            k = np.concatenate(keys)
            uniq, inv = np.unique(k, return_inverse=True)
            counts = np.bincount(inv, weights=np.concatenate(signs)).astype(np.int64)
            nz = counts != 0
            self._add("emission", uniq[nz], counts[nz], weight)
        d_start, d_stop, d_trans = _score_delta(T, gold, pred)
        for name, delta in (("start", d_start), ("stop", d_stop), ("transition", d_trans)):
            nz = np.flatnonzero(delta)
            if len(nz):
                self._add(name, nz, delta[nz], weight)

    def _add(self, name: str, flat_idx: np.ndarray, counts: np.ndarray, weight: float):
        delta = weight * counts
        getattr(self.model, name).reshape(-1)[flat_idx] += delta
        self.acc[name].reshape(-1)[flat_idx] += self.clock * delta

    def finish(self, averaging: bool) -> TaggerModel:
        m = self.model
        if not averaging or self.clock == 0.0:
            return m
        avg = {name: getattr(m, name) - self.acc[name] / self.clock for name in self.acc}
        return TaggerModel(m.labels, m.features, avg["emission"], avg["transition"],
                           avg["start"], avg["stop"], averaged=True)


def _check_weights(weights, n: int) -> list[float]:
    ws = [1.0] * n if weights is None else [float(w) for w in weights]
    if len(ws) != n:
        raise ValueError(f"{len(ws)} weights for {n} sentences")
    for w in ws:
        if not (math.isfinite(w) and 0.0 <= w <= 1.0):
            raise ValueError(f"weight {w!r} outside [0, 1]")
    return ws


def train(corpus: Corpus, weights: Sequence[float] | None = None,
          config: TrainConfig = TrainConfig()) -> TaggerModel:
    """Train on ``corpus`` with per-sentence ``weights`` (default all ones).

    Plain sequences may contain zeros; a ``WeightVector`` cannot.
    """
    if len(corpus) == 0:
        raise ValueError("cannot train on an empty corpus")
    ws = _check_weights(weights, len(corpus))
    labels = corpus.tag_list
    tag_id = {t: i for i, t in enumerate(labels)}

    features: dict[str, None] = {}
    for s in corpus:
        for i in range(len(s)):
            features.update(dict.fromkeys(_features(s.words, i)))
    model = TaggerModel.zeros(labels, list(features))

    encoded = [model.encode(s.words) + (np.array([tag_id[t] for t in s.tags], dtype=np.intp),)
               for s in corpus]
    trainer = _Trainer(model)
    rng = np.random.default_rng(config.shuffle_seed)
    for _ in range(config.epochs):
        order = rng.permutation(len(corpus)) if config.shuffle else range(len(corpus))
        for i in order:
            ids, offsets, gold = encoded[i]
            trainer.step(ids, offsets, gold, ws[i])
    return trainer.finish(config.averaging)


def save_model(model: TaggerModel) -> str:
    lines = [FORMAT_HEADER, f"averaged {str(model.averaged).lower()}", "labels " + " ".join(model.labels)]
    for f, row in sorted(model.features.items()):
        for j in np.flatnonzero(model.emission[row]):
            lines.append(f"E {f} {model.labels[j]} {float(model.emission[row, j])!r}")
    for (a, b), w in model.transition_weights.items():
        if w != 0.0:
            lines.append(f"T {a} {b} {w!r}")
    return "\n".join(lines) + "\n"


def load_model(text: str) -> TaggerModel:
    lines = text.splitlines()
    if not lines or lines[0] != FORMAT_HEADER:
        raise ValueError("not a tagger model file (bad header)")
    averaged = lines[1] == "averaged true"
    labels = lines[2].split()[1:]
    emit = [ln.split() for ln in lines[3:] if ln.startswith("E ")]
    trans = [ln.split() for ln in lines[3:] if ln.startswith("T ")]
    features = list(dict.fromkeys(parts[1] for parts in emit))
    m = TaggerModel.zeros(labels, features)
    tag_id = {t: i for i, t in enumerate(labels)}
    for _, f, tag, w in emit:
        m.emission[m.features[f], tag_id[tag]] = float(w)
    for _, a, b, w in trans:
        if a == START:
            m.start[tag_id[b]] = float(w)
        elif b == STOP:
            m.stop[tag_id[a]] = float(w)
        else:
            m.transition[tag_id[a], tag_id[b]] = float(w)
    return TaggerModel(m.labels, m.features, m.emission, m.transition, m.start, m.stop, averaged)
