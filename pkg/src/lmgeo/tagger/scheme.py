"""BIESO tag scheme, tokenization and span encoding/decoding."""

from __future__ import annotations

import re
from dataclasses import dataclass

ENTITY_TYPES = ("organization", "detailed", "city", "state", "zip")
ADDRESS_TYPES = ("detailed", "city", "state", "zip")
TYPE_CODES = {"organization": "org", "detailed": "det", "city": "city", "state": "state", "zip": "zip"}
CODE_TYPES = {code: name for name, code in TYPE_CODES.items()}
POSITIONS = ("B", "I", "E", "S")

TAGS = ("O",) + tuple(f"{pos}-{TYPE_CODES[t]}" for t in ENTITY_TYPES for pos in POSITIONS)
TAG_INDEX = {tag: i for i, tag in enumerate(TAGS)}
N_TAGS = len(TAGS)

_TOKEN_RE = re.compile(r"\w+|[^\w\s]", re.UNICODE)


def tokenize(text: str) -> list[str]:
    """Split on whitespace, with every punctuation character its own token."""
    return _TOKEN_RE.findall(text)


def split_tag(tag: str) -> tuple[str, str | None]:
    """Return ``(position, entity_type)``; ``("O", None)`` for the outside tag."""
    if tag == "O":
        return "O", None
    pos, _, code = tag.partition("-")
    if pos not in POSITIONS or code not in CODE_TYPES:
        raise ValueError(f"unknown tag {tag!r}")
    return pos, CODE_TYPES[code]


def make_tag(position: str, entity_type: str) -> str:
    return f"{position}-{TYPE_CODES[entity_type]}"


@dataclass(frozen=True)
class TokenizedPage:
    tokens: tuple[str, ...]
    source_id: str = ""

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise ValueError("a page needs at least one token")
        for tok in self.tokens:
            if not tok or any(ch.isspace() for ch in tok):
                raise ValueError(f"invalid token {tok!r}")

    def __len__(self):
        return len(self.tokens)


@dataclass(frozen=True, order=True)
class LocationEntity:
    """A typed token span; ``end`` is inclusive."""

    start: int
    end: int
    entity_type: str
    text: str
    low_confidence: bool = False

    @property
    def token_range(self) -> tuple[int, int]:
        return self.start, self.end

    def key(self) -> tuple[int, int, str]:
        return self.start, self.end, self.entity_type


def entity(tokens, start: int, end: int, entity_type: str, **kw) -> LocationEntity:
    if entity_type not in ENTITY_TYPES:
        raise ValueError(f"unknown entity type {entity_type!r}")
    if not 0 <= start <= end < len(tokens):
        raise ValueError(f"span [{start}, {end}] outside page of {len(tokens)} tokens")
    return LocationEntity(start, end, entity_type, " ".join(tokens[start:end + 1]), **kw)


def encode_bieso(entities, length: int) -> list[str]:
    tags = ["O"] * length
    for ent in entities:
        if ent.start == ent.end:
            tags[ent.start] = make_tag("S", ent.entity_type)
            continue
        tags[ent.start] = make_tag("B", ent.entity_type)
        for i in range(ent.start + 1, ent.end):
            tags[i] = make_tag("I", ent.entity_type)
        tags[ent.end] = make_tag("E", ent.entity_type)
    return tags


def decode_bieso(tokens, tags) -> list[LocationEntity]:
    """Decode a tag sequence into entities.

    Well-formed ``B I* E`` and ``S`` spans decode exactly. Malformed runs
    (an ``I`` without ``B``, a ``B`` without ``E``) are repaired leniently:
    consecutive tags of one type merge until an ``E``/``S`` closes the span,
    a ``B``/``S`` opens a new one, or the type changes.
    """
    if len(tokens) != len(tags):
        raise ValueError(f"{len(tokens)} tokens but {len(tags)} tags")
    out = []
    start = None
    cur_type = None

    def close(end):
        out.append(entity(tokens, start, end, cur_type))

    for i, tag in enumerate(tags):
        pos, etype = split_tag(tag)
        if start is not None and (etype != cur_type or pos in ("B", "S")):
            close(i - 1)
            start = None
        if etype is None:
            continue
        if start is None:
            start, cur_type = i, etype
        if pos in ("E", "S"):
            close(i)
            start = None
    if start is not None:
        close(len(tags) - 1)
    return out
