import pytest
from hypothesis import given, settings, strategies as st

from crossweigh.corpus import (BIOError, Corpus, CorpusError, EntitySpan, ParseError, Scheme,
                               Sentence, WeightVector, WeightsError, concat, convert_iob1_to_bio,
                               extract_entities, parse_conll, read_weights, surface_set, write_conll,
                               write_weights)

TYPES = ["PER", "LOC", "ORG", "MISC"]


def sent(words, tags, index=0):
    return Sentence.from_pairs(index, words.split() if isinstance(words, str) else words, tags)


# -- strategies -------------------------------------------------------------

words_st = st.text(alphabet="abcXYZ019.-'", min_size=1, max_size=6)


@st.composite
def bio_tags(draw, n):
    tags = []
    for _ in range(n):
        choice = draw(st.sampled_from(["O", "B", "I"]))
        etype = draw(st.sampled_from(TYPES))
        if choice == "I" and tags and tags[-1] != "O":
            tags.append("I-" + tags[-1][2:])
        elif choice == "O":
            tags.append("O")
        else:
            tags.append("B-" + etype)
    return tags


@st.composite
def sentences(draw, index=0):
    n = draw(st.integers(1, 8))
    words = draw(st.lists(words_st, min_size=n, max_size=n))
    return Sentence.from_pairs(index, words, draw(bio_tags(n)))


@st.composite
def corpora(draw):
    n = draw(st.integers(0, 6))
    docs = draw(st.booleans())
    sents = []
    doc = 0
    for i in range(n):
        s = draw(sentences(i))
        # the parser numbers documents 0, 1, ... in file order
        if i and draw(st.booleans()):
            doc += 1
        sents.append(Sentence(i, s.tokens, str(doc) if docs else None))
    return Corpus.build(sents)


# -- parse_conll ------------------------------------------------------------

def test_parse_iob1_converts_entity_initial_tag():
    c = parse_conll("EU NNP B-NP I-ORG\n", column_of_tag=3, scheme="IOB1")
    assert len(c) == 1
    assert c[0].tokens[0].surface == "EU"
    assert c[0].tags == ("B-ORG",)


def test_parse_empty():
    assert len(parse_conll("")) == 0


def test_parse_two_sentences():
    c = parse_conll("a O\nb B-PER\n\nc O\n")
    assert [s.index for s in c] == [0, 1]
    assert c[1].words == ("c",)


def test_blank_line_runs_collapse():
    c = parse_conll("\n\na O\n\n\n\nb O\n\n")
    assert len(c) == 2


def test_docstart_sets_document_boundaries():
    text = "-DOCSTART- -X- O\n\na O\n\nb O\n\n-DOCSTART- -X- O\n\nc O\n"
    c = parse_conll(text)
    assert [s.words for s in c] == [("a",), ("b",), ("c",)]
    assert [s.doc_id for s in c] == ["0", "0", "1"]


def test_parse_missing_column_reports_line():
    with pytest.raises(ParseError) as err:
        parse_conll("EU NNP B-NP I-ORG\nrejects VBZ\n", column_of_tag=3, scheme="IOB1")
    assert err.value.lineno == 2


def test_parse_unknown_prefix():
    with pytest.raises(ParseError) as err:
        parse_conll("a O\nb E-PER\n")
    assert err.value.lineno == 2


def test_parse_rejects_ill_formed_bio():
    with pytest.raises(ParseError) as err:
        parse_conll("a O\nb I-PER\n", scheme="BIO")
    assert err.value.lineno == 2


def test_parse_keeps_unseen_types_in_alphabet():
    c = parse_conll("a B-product\n")
    assert "B-product" in c.label_alphabet
    assert "I-PER" in c.label_alphabet


# -- convert_iob1_to_bio ----------------------------------------------------

@pytest.mark.parametrize("tags, expected", [
    (["I-ORG", "I-ORG"], ["B-ORG", "I-ORG"]),
    (["O", "I-LOC"], ["O", "B-LOC"]),
    (["B-PER", "I-PER"], ["B-PER", "I-PER"]),
    (["I-PER", "B-PER", "I-PER"], ["B-PER", "B-PER", "I-PER"]),
    (["I-PER", "I-LOC"], ["B-PER", "B-LOC"]),
    ([], []),
])
def test_convert_iob1_to_bio(tags, expected):
    assert convert_iob1_to_bio(tags) == expected


@given(st.integers(0, 10).flatmap(bio_tags))
def test_conversion_is_idempotent_on_bio(tags):
    assert convert_iob1_to_bio(tags) == tags


# -- entities ---------------------------------------------------------------

def test_extract_entities_hapoel_haifa():
    s = sent("Hapoel Haifa 3", ["B-ORG", "I-ORG", "O"])
    assert extract_entities(s) == [EntitySpan(0, 2, "ORG", "Hapoel Haifa")]


def test_extract_entities_all_o():
    assert extract_entities(sent("a b", ["O", "O"])) == []


def test_extract_entities_adjacent():
    spans = extract_entities(sent("Paris John", ["B-LOC", "B-PER"]))
    assert [(sp.start, sp.end, sp.entity_type) for sp in spans] == [(0, 1, "LOC"), (1, 2, "PER")]


def test_extract_entities_rejects_ill_formed():
    s = Sentence.from_pairs(0, ["a", "b", "c"], ["B-PER", "O", "I-PER"])
    with pytest.raises(BIOError) as err:
        extract_entities(s)
    assert err.value.index == 2


def test_surface_set_ignores_type():
    s = sent("Chicago beat Chicago", ["B-ORG", "O", "B-LOC"])
    assert surface_set(s) == {"Chicago"}


def test_surface_set_nested_names():
    s = sent("NZ 's Bolger says NZ First", ["B-LOC", "O", "B-PER", "O", "B-ORG", "I-ORG"])
    assert surface_set(s) == {"NZ", "Bolger", "NZ First"}


def test_surface_set_empty():
    assert surface_set(sent("a", ["O"])) == frozenset()


@given(sentences())
def test_span_properties(s):
    spans = extract_entities(s)
    assert all(0 <= sp.start < sp.end <= len(s) for sp in spans)
    assert all(a.end <= b.start for a, b in zip(spans, spans[1:]))
    for sp in spans:
        assert sp.surface == " ".join(s.words[sp.start:sp.end])
    assert surface_set(s) == {sp.surface for sp in spans}


# -- round trips ------------------------------------------------------------

@settings(max_examples=200)
@given(corpora())
def test_conll_round_trip(c):
    assert parse_conll(write_conll(c)) == c


def test_round_trip_drops_extra_columns():
    text = "-DOCSTART- -X- -X- O\n\nEU NNP B-NP I-ORG\nrejects VBZ B-VP O\n"
    c = parse_conll(text, column_of_tag=3, scheme=Scheme.IOB1)
    assert parse_conll(write_conll(c)) == c


def test_read_weights():
    assert read_weights("1.0\n0.343\n").weights == (1.0, 0.343)


@pytest.mark.parametrize("text", ["1.0\n0.0\n", "1.5\n", "-0.2\n", "nan\n", "abc\n"])
def test_read_weights_rejects(text):
    with pytest.raises(WeightsError):
        read_weights(text)


@given(st.lists(st.floats(min_value=1e-9, max_value=1.0), max_size=20))
def test_weights_round_trip(ws):
    w = WeightVector(tuple(ws))
    assert read_weights(write_weights(w)) == w


def test_weight_vector_default_uniform():
    assert WeightVector.uniform(3).weights == (1.0, 1.0, 1.0)


def test_corpus_invariants():
    s = sent("a", ["O"], index=1)
    with pytest.raises(CorpusError):
        Corpus((s,))
    with pytest.raises(CorpusError):
        Corpus((sent("a", ["B-FOO"]),))


def test_token_surface_has_no_whitespace():
    with pytest.raises(CorpusError):
        sent(["a b"], ["O"])


def test_concat_reindexes():
    a = Corpus.from_tagged([(["x"], ["O"])])
    b = Corpus.from_tagged([(["y"], ["B-PER"]), (["z"], ["O"])])
    c = concat(a, b)
    assert [s.index for s in c] == [0, 1, 2]
    assert c[1].words == ("y",)
