"""Organization-name dictionary with first-word index and longest-match scanning."""

from __future__ import annotations

from pathlib import Path

from lmgeo.tagger.scheme import LocationEntity, TokenizedPage, entity, tokenize


def _fold(tokens) -> tuple[str, ...]:
    return tuple(t.lower() for t in tokens)


class OrgDictionary:
    """Names bucketed by their lower-cased first token, longest names first.

    Example
    -------
    >>> d = OrgDictionary.build(["Acme Corp", "Acme Corporation of America"])
    >>> d.bucket("acme")
    ['Acme Corporation of America', 'Acme Corp']
    """

    def __init__(self, index: dict[str, list[tuple[str, ...]]]):
        self.index = index

    @classmethod
    def build(cls, names) -> "OrgDictionary":
        seen = set()
        index: dict[str, list[tuple[str, ...]]] = {}
        for name in names:
            toks = tuple(tokenize(name))
            if not toks:
                continue
            folded = _fold(toks)
            if folded in seen:
                continue
            seen.add(folded)
            index.setdefault(folded[0], []).append(toks)
        for key, bucket in index.items():
            bucket.sort(key=lambda t: (-len(t), _fold(t), t))
        return cls(index)

    def __len__(self):
        return sum(len(b) for b in self.index.values())

    def bucket(self, word: str) -> list[str]:
        return [" ".join(t) for t in self.index.get(word.lower(), [])]

    def names(self) -> list[str]:
        return [" ".join(t) for key in sorted(self.index) for t in self.index[key]]

    def save(self, path) -> None:
        Path(path).write_text("".join(n + "\n" for n in self.names()), encoding="utf-8")

    @classmethod
    def load(cls, path) -> "OrgDictionary":
        return cls.build(line.strip() for line in
                         Path(path).read_text(encoding="utf-8").splitlines() if line.strip())


def build_dictionary(names) -> OrgDictionary:
    return OrgDictionary.build(names)


def match_organizations(dictionary: OrgDictionary, page) -> list[LocationEntity]:
    """Greedy left-to-right longest match; scanning resumes after each match.

    Single-token matches are flagged ``low_confidence``.
    """
    tokens = page.tokens if isinstance(page, TokenizedPage) else tuple(page)
    folded = _fold(tokens)
    out = []
    i = 0
    n = len(tokens)
    while i < n:
        for name in dictionary.index.get(folded[i], ()):
            k = len(name)
            if i + k <= n and folded[i:i + k] == _fold(name):
                out.append(entity(tokens, i, i + k - 1, "organization", low_confidence=k == 1))
                i += k
                break
        else:
            i += 1
    return out
