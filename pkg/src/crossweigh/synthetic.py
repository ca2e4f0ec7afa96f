"""Template-generated NER corpora with known clean labels.

Sentence frames fix the entity type of each slot through their context
words, so a tagger can label unseen names from context alone.  Names are
drawn from per-type pools built out of random syllables; every name recurs
in several sentences, as real entity names do.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .corpus import Corpus

SYLLABLES = ("ka", "lo", "mi", "ren", "sa", "tor", "vi", "bel", "dun", "gar", "hol", "ix",
             "jo", "mar", "nor", "pel", "qua", "ros", "sten", "ul", "wen", "yar", "zo", "fal")

FRAMES = (
    "{PER} said on Monday that {ORG} would appeal .",
    "{ORG} beat {ORG} 3 - 1 in {LOC} .",
    "{PER} , a spokesman for {ORG} , declined to comment .",
    "Police in {LOC} arrested {PER} late on Tuesday .",
    "{ORG} shares rose 2 percent in {LOC} trading .",
    "The {MISC} government met officials from {LOC} .",
    "{PER} scored twice as {ORG} won the {MISC} Cup .",
    "Talks between {LOC} and {LOC} resumed in {LOC} .",
    "{PER} told reporters the {MISC} team was ready .",
    "Analysts at {ORG} expect growth in {LOC} to slow .",
    "{PER} met {PER} at the summit .",
    "Floods hit northern {LOC} on Sunday .",
    "The {MISC} champion {PER} retired .",
    "{ORG} signed {PER} from {ORG} .",
)

SUFFIX = {"ORG": ("United", "Corp", "Bank", "Group"), "LOC": (), "PER": (), "MISC": ()}


@dataclass(frozen=True)
class TemplateConfig:
    n_sentences: int = 2000
    names_per_type: int = 600
    # probability that an ORG/PER name gets a second token
    multi_token: float = 0.5
    seed: int = 0


def _name(rng: np.random.Generator, etype: str, multi: float) -> list[str]:
    def word():
        n = int(rng.integers(2, 4))
        return "".join(SYLLABLES[i] for i in rng.integers(len(SYLLABLES), size=n)).capitalize()

    if etype == "MISC":
        return [word() + "ian"]
    toks = [word()]
    if etype in ("PER", "ORG") and rng.random() < multi:
        toks.append(SUFFIX["ORG"][rng.integers(4)] if etype == "ORG" else word())
    return toks


def name_pools(config: TemplateConfig) -> dict[str, list[tuple[str, ...]]]:
    rng = np.random.default_rng([config.seed, 1])
    pools: dict[str, list[tuple[str, ...]]] = {}
    seen: set[tuple[str, ...]] = set()
    for etype in ("PER", "LOC", "ORG", "MISC"):
        pool = []
        while len(pool) < config.names_per_type:
            name = tuple(_name(rng, etype, config.multi_token))
            if name not in seen:
                seen.add(name)
                pool.append(name)
        pools[etype] = pool
    return pools


def _fill(frame: str, pools, rng) -> tuple[list[str], list[str]]:
    words, tags = [], []
    for piece in frame.split():
        if piece.startswith("{") and piece.endswith("}"):
            etype = piece[1:-1]
            pool = pools[etype]
            name = pool[rng.integers(len(pool))]
            words += name
            tags += [f"B-{etype}"] + [f"I-{etype}"] * (len(name) - 1)
        else:
            words.append(piece)
            tags.append("O")
    return words, tags


def template_corpus(config: TemplateConfig = TemplateConfig(),
                    pools: dict[str, list[tuple[str, ...]]] | None = None) -> Corpus:
    pools = pools or name_pools(config)
    rng = np.random.default_rng([config.seed, 2])
    data = [_fill(FRAMES[rng.integers(len(FRAMES))], pools, rng) for _ in range(config.n_sentences)]
    return Corpus.from_tagged(data)


def train_test_corpora(config: TemplateConfig = TemplateConfig(), n_test: int = 500,
                       unseen_names: float = 0.2) -> tuple[Corpus, Corpus]:
    """Clean train corpus plus a test corpus drawing on names partly unseen in training."""
    pools = name_pools(config)
    train_pools = {t: p[:max(1, round(len(p) * (1 - unseen_names)))] for t, p in pools.items()}
    train = template_corpus(config, train_pools)
    test = template_corpus(replace(config, n_sentences=n_test, seed=config.seed + 7919), pools)
    return train, test
