"""CoNLL corpus handling: parsing, BIO conversion, entity spans and weight sidecars."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

DEFAULT_TYPES = ("PER", "LOC", "ORG", "MISC")
DOCSTART = "-DOCSTART-"


class CorpusError(ValueError):
    pass


class ParseError(CorpusError):
    def __init__(self, message: str, lineno: int):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class BIOError(CorpusError):
    def __init__(self, message: str, index: int):
        super().__init__(f"token {index}: {message}")
        self.index = index


class WeightsError(CorpusError):
    pass


class Scheme(str, enum.Enum):
    IOB1 = "IOB1"
    BIO = "BIO"


def bio_tags(types: Iterable[str]) -> list[str]:
    """Ordered BIO alphabet: ``O`` first, then ``B-``/``I-`` pairs by sorted type."""
    tags = ["O"]
    for t in sorted(set(types)):
        tags += [f"B-{t}", f"I-{t}"]
    return tags


def split_tag(tag: str) -> tuple[str, str | None]:
    if tag == "O":
        return "O", None
    prefix, sep, etype = tag.partition("-")
    if not sep or prefix not in ("B", "I") or not etype:
        raise CorpusError(f"unknown tag {tag!r}")
    return prefix, etype


@dataclass(frozen=True)
class Token:
    surface: str
    tag: str

    def __post_init__(self):
        if not self.surface or any(c.isspace() for c in self.surface):
            raise CorpusError(f"bad token surface {self.surface!r}")


@dataclass(frozen=True)
class EntitySpan:
    start: int
    end: int
    entity_type: str
    surface: str


@dataclass(frozen=True)
class Sentence:
    index: int
    tokens: tuple[Token, ...]
    doc_id: str | None = None

    def __post_init__(self):
        if not self.tokens:
            raise CorpusError("sentence has no tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(t.surface for t in self.tokens)

    @property
    def tags(self) -> tuple[str, ...]:
        return tuple(t.tag for t in self.tokens)

    @classmethod
    def from_pairs(cls, index: int, words: Sequence[str], tags: Sequence[str],
                   doc_id: str | None = None) -> "Sentence":
        if len(words) != len(tags):
            raise CorpusError("words and tags differ in length")
        return cls(index, tuple(Token(w, t) for w, t in zip(words, tags)), doc_id)

    def with_tags(self, tags: Sequence[str]) -> "Sentence":
        return Sentence.from_pairs(self.index, self.words, tags, self.doc_id)


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[Sentence, ...]
    label_alphabet: frozenset[str] = field(default_factory=lambda: frozenset(bio_tags(DEFAULT_TYPES)))
    # encoding of the stored tags; always BIO once parsed
    scheme: Scheme = Scheme.BIO

    def __post_init__(self):
        for i, s in enumerate(self.sentences):
            if s.index != i:
                raise CorpusError(f"sentence at position {i} has index {s.index}")
            for tok in s.tokens:
                if tok.tag not in self.label_alphabet:
                    raise CorpusError(f"sentence {i}: tag {tok.tag!r} not in label alphabet")

    def __len__(self) -> int:
        return len(self.sentences)

    def __getitem__(self, i: int) -> Sentence:
        return self.sentences[i]

    def __iter__(self):
        return iter(self.sentences)

    @property
    def entity_types(self) -> list[str]:
        return sorted({split_tag(t)[1] for t in self.label_alphabet if t != "O"})

    @property
    def tag_list(self) -> list[str]:
        return bio_tags(self.entity_types)

    @classmethod
    def from_tagged(cls, data: Iterable[tuple[Sequence[str], Sequence[str]]],
                    types: Iterable[str] = DEFAULT_TYPES) -> "Corpus":
        """Build a BIO corpus from ``(words, tags)`` pairs."""
        sentences = tuple(Sentence.from_pairs(i, w, t) for i, (w, t) in enumerate(data))
        return cls.build(sentences, types)

    @classmethod
    def build(cls, sentences: Sequence[Sentence], types: Iterable[str] = DEFAULT_TYPES) -> "Corpus":
        seen = {split_tag(tok.tag)[1] for s in sentences for tok in s.tokens if tok.tag != "O"}
        return cls(tuple(sentences), frozenset(bio_tags(set(types) | seen)))

    def replace(self, updates: dict[int, Sentence]) -> "Corpus":
        sents = tuple(updates.get(s.index, s) for s in self.sentences)
        return Corpus(sents, self.label_alphabet, self.scheme)

    def subset(self, indices: Iterable[int]) -> "Corpus":
        """Re-indexed sub-corpus keeping the label alphabet."""
        sents = tuple(Sentence(i, self.sentences[j].tokens, self.sentences[j].doc_id)
                      for i, j in enumerate(indices))
        return Corpus(sents, self.label_alphabet, self.scheme)


def concat(*corpora: Corpus) -> Corpus:
    sents = []
    alphabet: set[str] = set()
    for c in corpora:
        alphabet |= c.label_alphabet
        for s in c:
            sents.append(Sentence(len(sents), s.tokens, s.doc_id))
    return Corpus(tuple(sents), frozenset(alphabet))


def convert_iob1_to_bio(tags: Sequence[str]) -> list[str]:
    out = []
    prev_type = None
    for tag in tags:
        prefix, etype = split_tag(tag)
        if prefix == "I" and etype != prev_type:
            tag = f"B-{etype}"
        out.append(tag)
        prev_type = etype
    return out


def check_bio(tags: Sequence[str]) -> None:
    prev_type = None
    for i, tag in enumerate(tags):
        prefix, etype = split_tag(tag)
        if prefix == "I" and etype != prev_type:
            raise BIOError(f"{tag} does not continue an entity of type {etype}", i)
        prev_type = etype


def repair_bio(tags: Sequence[str]) -> list[str]:
    """Rewrite every I-X that does not continue an X entity as B-X."""
    return convert_iob1_to_bio(tags)


def spans_from_tags(words: Sequence[str], tags: Sequence[str]) -> list[EntitySpan]:
    check_bio(tags)
    spans = []
    start = etype = None
    for i, tag in enumerate(list(tags) + ["O"]):
        prefix, t = split_tag(tag)
        if start is not None and prefix != "I":
            spans.append(EntitySpan(start, i, etype, " ".join(words[start:i])))
            start = None
        if prefix == "B":
            start, etype = i, t
    return spans


def extract_entities(sentence: Sentence) -> list[EntitySpan]:
    return spans_from_tags(sentence.words, sentence.tags)


def surface_set(sentence: Sentence) -> frozenset[str]:
    return frozenset(sp.surface for sp in extract_entities(sentence))


def parse_conll(text: str, column_of_tag: int = -1, scheme: Scheme | str = Scheme.BIO,
                types: Iterable[str] = DEFAULT_TYPES) -> Corpus:
    """Parse CoNLL text (one token per line, blank line between sentences).

    ``column_of_tag`` may be negative to count from the last column.  IOB1
    input is converted to BIO; BIO input must already be well formed.
    """
    scheme = Scheme(scheme)
    sentences: list[Sentence] = []
    words: list[str] = []
    tags: list[str] = []
    linenos: list[int] = []
    doc_id: str | None = None
    ndocs = 0

    def flush():
        if not words:
            return
        seq = convert_iob1_to_bio(tags) if scheme is Scheme.IOB1 else list(tags)
        try:
            check_bio(seq)
        except BIOError as e:
            raise ParseError(str(e), linenos[e.index]) from None
        sentences.append(Sentence.from_pairs(len(sentences), words, seq, doc_id))
        words.clear()
        tags.clear()
        linenos.clear()

    for lineno, line in enumerate(text.splitlines(), 1):
        cols = line.split()
        if not cols:
            flush()
            continue
        if cols[0] == DOCSTART:
            flush()
            doc_id = str(ndocs)
            ndocs += 1
            continue
        # token column plus tag column at minimum
        need = max(2, column_of_tag + 1 if column_of_tag >= 0 else -column_of_tag)
        if len(cols) < need:
            raise ParseError(f"expected at least {need} columns, got {len(cols)}", lineno)
        tag = cols[column_of_tag]
        try:
            split_tag(tag)
        except CorpusError as e:
            raise ParseError(str(e), lineno) from None
        words.append(cols[0])
        tags.append(tag)
        linenos.append(lineno)
    flush()
    return Corpus.build(sentences, types)


def write_conll(corpus: Corpus) -> str:
    lines = []
    doc = None
    for s in corpus:
        if s.doc_id is not None and s.doc_id != doc:
            lines += [f"{DOCSTART} O", ""]
        doc = s.doc_id
        lines += [f"{t.surface} {t.tag}" for t in s.tokens]
        lines.append("")
    return "\n".join(lines) + ("\n" if lines else "")


def write_tag_sequences(corpus: Corpus, predictions: Sequence[Sequence[str]]) -> str:
    """CoNLL text of ``corpus`` words with ``predictions`` as the tag column."""
    if len(predictions) != len(corpus):
        raise CorpusError("prediction count does not match corpus")
    return write_conll(Corpus.build([s.with_tags(p) for s, p in zip(corpus, predictions)],
                                    corpus.entity_types))


@dataclass(frozen=True)
class WeightVector:
    weights: tuple[float, ...]

    def __post_init__(self):
        for i, w in enumerate(self.weights):
            if not (math.isfinite(w) and 0.0 < w <= 1.0):
                raise WeightsError(f"weight {i} = {w!r} outside (0, 1]")

    @classmethod
    def uniform(cls, n: int) -> "WeightVector":
        return cls((1.0,) * n)

    def __len__(self) -> int:
        return len(self.weights)

    def __getitem__(self, i: int) -> float:
        return self.weights[i]

    def __iter__(self):
        return iter(self.weights)


def read_weights(text: str) -> WeightVector:
    ws = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            ws.append(float(line))
        except ValueError:
            raise WeightsError(f"line {lineno}: not a number: {line!r}") from None
    return WeightVector(tuple(ws))


def write_weights(weights: WeightVector) -> str:
    return "".join(f"{w!r}\n" for w in weights)
