"""Turn a raw page and its known address/organization into a trimmed labeled page.

Gold items are located in the token stream; only those inside a copyright
window or a recognized address section keep their entity tags, and the
page is cut down to the text surrounding those sections.
"""

from __future__ import annotations

from lmgeo.tagger.scheme import ADDRESS_TYPES, TokenizedPage, encode_bieso, entity, tokenize

COPYRIGHT = "©"


def find_spans(tokens, phrase_tokens) -> list[tuple[int, int]]:
    """All (start, end) occurrences of a token phrase, case-insensitive."""
    n = len(phrase_tokens)
    if n == 0:
        return []
    target = [t.lower() for t in phrase_tokens]
    low = [t.lower() for t in tokens]
    return [(i, i + n - 1) for i in range(len(tokens) - n + 1) if low[i:i + n] == target]


def copyright_windows(tokens, context: int = 100) -> list[tuple[int, int]]:
    return [(max(0, k - context), min(len(tokens) - 1, k + context))
            for k, tok in enumerate(tokens) if tok == COPYRIGHT]


def cohesion_scores(length: int, item_spans: dict[str, list[tuple[int, int]]],
                    window: int = 12) -> list[int]:
    """For every window start, how many distinct address item types touch it."""
    scores = []
    for w0 in range(max(1, length - window + 1)):
        w1 = w0 + window - 1
        scores.append(sum(1 for spans in item_spans.values()
                          if any(s <= w1 and e >= w0 for s, e in spans)))
    return scores


def address_sections(length: int, item_spans: dict[str, list[tuple[int, int]]],
                     window: int = 12, min_score: int = 3) -> list[tuple[int, int]]:
    """Token ranges covered by item occurrences inside cohesive windows, merged."""
    ranges = []
    for w0, score in enumerate(cohesion_scores(length, item_spans, window)):
        if score < min_score:
            continue
        w1 = w0 + window - 1
        hit = [(s, e) for spans in item_spans.values() for s, e in spans if s <= w1 and e >= w0]
        ranges.append((min(s for s, _ in hit), max(e for _, e in hit)))
    return _merge(ranges)


def _merge(ranges):
    out = []
    for s, e in sorted(ranges):
        if out and s <= out[-1][1] + 1:
            out[-1] = (out[-1][0], max(out[-1][1], e))
        else:
            out.append((s, e))
    return out


def preprocess_page(raw_text: str, gold_address_items: dict[str, str] | None = None,
                    gold_org: str | None = None, source_id: str = "", context: int = 100,
                    window: int = 12, min_score: int = 3):
    """Label and trim a raw page; returns ``(TokenizedPage, tags)``.

    Pages with no copyright mark and no address section come back all-O and
    cut to at most ``2 * context + 1`` tokens.
    """
    tokens = tokenize(raw_text)
    if not tokens:
        raise ValueError("page text has no tokens")
    gold_address_items = gold_address_items or {}
    item_spans = {t: find_spans(tokens, tokenize(v)) for t, v in gold_address_items.items()
                  if t in ADDRESS_TYPES and v}
    org_spans = find_spans(tokens, tokenize(gold_org)) if gold_org else []

    cwin = copyright_windows(tokens, context)
    asec = address_sections(len(tokens), item_spans, window, min_score)
    labeled_zones = _merge(cwin + asec)

    def inside(span):
        return any(z0 <= span[0] and span[1] <= z1 for z0, z1 in labeled_zones)

    ents = []
    taken = set()
    candidates = [(s, e, t) for t, spans in item_spans.items() for s, e in spans]
    candidates += [(s, e, "organization") for s, e in org_spans]
    # longer spans first so overlapping gold items keep the more specific label
    for s, e, t in sorted(candidates, key=lambda c: (c[0] - c[1], c[0])):
        if inside((s, e)) and not taken.intersection(range(s, e + 1)):
            ents.append(entity(tokens, s, e, t))
            taken.update(range(s, e + 1))
    tags = encode_bieso(ents, len(tokens))

    keep_zones = _merge(cwin + [(max(0, s - context), min(len(tokens) - 1, e + context))
                                for s, e in asec])
    if not keep_zones:
        keep_zones = [(0, min(len(tokens), 2 * context + 1) - 1)]
    keep = [i for z0, z1 in keep_zones for i in range(z0, z1 + 1)]
    page = TokenizedPage([tokens[i] for i in keep], source_id)
    return page, [tags[i] for i in keep]
