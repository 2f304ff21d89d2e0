import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from lmgeo.tagger.scheme import (ENTITY_TYPES, N_TAGS, TAGS, LocationEntity, TokenizedPage,
                                 decode_bieso, encode_bieso, entity, tokenize)

ADDRESS_TOKENS = "800 Avenue O , Ely , NV 89301".split()
ADDRESS_TAGS = ["B-det", "I-det", "E-det", "O", "S-city", "O", "S-state", "S-zip"]


def random_labeling(rng: random.Random, length: int):
    tokens = [f"w{i}" for i in range(length)]
    ents, i = [], 0
    while i < length:
        if rng.random() < 0.4:
            span = rng.randint(1, min(4, length - i))
            ents.append(entity(tokens, i, i + span - 1, rng.choice(ENTITY_TYPES)))
            i += span
        else:
            i += 1
    return tokens, ents


def test_tag_set_size():
    assert N_TAGS == 21 == len(TAGS) == len(set(TAGS))
    assert TAGS[0] == "O"
    assert all(t == "O" or t.split("-")[0] in "BIES" for t in TAGS)


def test_tokenizer_isolates_punctuation():
    assert tokenize("800 Avenue O, Ely, NV 89301") == ADDRESS_TOKENS
    assert tokenize("© 2020 Acme-Corp.") == ["©", "2020", "Acme", "-", "Corp", "."]


def test_street_address_example():
    ents = decode_bieso(ADDRESS_TOKENS, ADDRESS_TAGS)
    got = {(e.entity_type, e.text) for e in ents}
    assert got == {("detailed", "800 Avenue O"), ("city", "Ely"), ("state", "NV"), ("zip", "89301")}
    assert len(ents) == 4


def test_all_o_decodes_empty():
    assert decode_bieso(["a", "b"], ["O", "O"]) == []


def test_round_trip_on_random_labelings():
    rng = random.Random(7)
    for _ in range(1000):
        tokens, ents = random_labeling(rng, rng.randint(1, 25))
        assert decode_bieso(tokens, encode_bieso(ents, len(tokens))) == ents


def test_adjacent_same_type_entities_stay_separate():
    toks = ["Ely", "Reno"]
    ents = decode_bieso(toks, ["S-city", "S-city"])
    assert [e.text for e in ents] == ["Ely", "Reno"]


@pytest.mark.parametrize("tags,expected", [
    (["I-det", "I-det", "O"], [(0, 1, "detailed")]),
    (["B-det", "I-det", "I-det"], [(0, 2, "detailed")]),
    (["B-det", "I-city", "E-city"], [(0, 0, "detailed"), (1, 2, "city")]),
    (["E-zip", "O"], [(0, 0, "zip")]),
])
def test_lenient_repair(tags, expected):
    toks = [f"t{i}" for i in range(len(tags))]
    got = [(e.start, e.end, e.entity_type) for e in decode_bieso(toks, tags)]
    assert got == expected


@given(st.lists(st.sampled_from(TAGS), min_size=1, max_size=30))
def test_decode_is_total_and_spans_valid(tags):
    toks = [f"t{i}" for i in range(len(tags))]
    ents = decode_bieso(toks, tags)
    covered = set()
    for e in ents:
        assert 0 <= e.start <= e.end < len(tags)
        assert e.text == " ".join(toks[e.start:e.end + 1])
        assert covered.isdisjoint(range(e.start, e.end + 1))
        covered.update(range(e.start, e.end + 1))
        assert all(tags[i] != "O" for i in range(e.start, e.end + 1))


def test_length_mismatch_rejected():
    with pytest.raises(ValueError):
        decode_bieso(["a"], ["O", "O"])


def test_page_invariants():
    with pytest.raises(ValueError):
        TokenizedPage((), "x")
    with pytest.raises(ValueError):
        TokenizedPage(("a b",), "x")
    assert isinstance(entity(["a", "b"], 0, 1, "city"), LocationEntity)
