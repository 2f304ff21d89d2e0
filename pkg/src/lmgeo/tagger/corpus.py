"""Labeled corpus records, the tab-delimited corpus format and a template generator."""

from __future__ import annotations

import random
from dataclasses import dataclass
from pathlib import Path

from lmgeo.tagger.scheme import (LocationEntity, TAG_INDEX, decode_bieso, encode_bieso,
                                 entity, split_tag)


@dataclass(frozen=True)
class LabeledPage:
    page_id: str
    tokens: tuple[str, ...]
    tags: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "tags", tuple(self.tags))
        if len(self.tokens) != len(self.tags):
            raise ValueError(f"page {self.page_id}: {len(self.tokens)} tokens, {len(self.tags)} tags")
        if not self.tokens:
            raise ValueError(f"page {self.page_id} is empty")
        for tag in self.tags:
            split_tag(tag)

    def entities(self) -> list[LocationEntity]:
        return decode_bieso(self.tokens, self.tags)

    def tag_ids(self) -> list[int]:
        return [TAG_INDEX[t] for t in self.tags]


def write_corpus(pages, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for page in pages:
            if "\t" in page.page_id or "\n" in page.page_id:
                raise ValueError(f"page id {page.page_id!r} contains a delimiter")
            fh.write(f"{page.page_id}\t{' '.join(page.tokens)}\t{' '.join(page.tags)}\n")


def read_corpus(path) -> list[LabeledPage]:
    pages = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected 3 tab-separated fields, got {len(parts)}")
        try:
            pages.append(LabeledPage(parts[0], parts[1].split(" "), parts[2].split(" ")))
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return pages


# --- template generator -----------------------------------------------------

_ORG_HEAD = ["Acme", "Blue", "Summit", "Granite", "Riverside", "Pioneer", "Evergreen", "Harbor",
             "Liberty", "Sierra", "Cedar", "Golden", "Northwind", "Redwood", "Silver", "Prairie",
             "Beacon", "Maple", "Atlas", "Keystone", "Lakeside", "Frontier", "Heritage", "Orchard"]
_ORG_MID = ["Valley", "Ridge", "Creek", "Peak", "Point", "Bay", "Stone", "Oak", "Star", "Field",
            "Brook", "Hill", "Mesa", "Lake", "River"]
_ORG_KIND = ["Dental", "Law", "Insurance", "Medical", "Realty", "Plumbing", "Construction",
             "Veterinary", "Accounting", "Auto", "Printing", "Software", "Roofing", "Family"]
_ORG_TAIL = ["Group", "Corp", "Inc", "LLC", "Associates", "Partners", "Clinic", "Services",
             "Company", "Center", "Agency", "Co"]
_STREET = ["Main", "Oak", "Maple", "Washington", "Lincoln", "Park", "Lake", "Hill", "Church",
           "Pine", "Elm", "Cedar", "Sunset", "Highland", "Jefferson", "Madison", "Franklin",
           "Adams", "Spring", "Ridge", "Mill", "Union", "River", "Walnut", "Center"]
_SUFFIX = ["St", "Street", "Ave", "Avenue", "Rd", "Road", "Blvd", "Dr", "Drive", "Ln", "Way",
           "Ct", "Pkwy", "Hwy"]
_DIRS = ["N", "S", "E", "W", "North", "South", "NE", "SW"]
_UNIT = ["Suite", "Ste", "Unit", "Floor", "Apt", "Bldg"]
_CITIES = ["Ely", "Reno", "Austin", "Dallas", "Denver", "Boise", "Tulsa", "Fresno", "Omaha",
           "Tampa", "Mesa", "Provo", "Ogden", "Salem", "Eugene", "Spokane", "Tucson", "Laredo",
           "Peoria", "Akron", "Dayton", "Toledo", "Madison", "Aurora", "Joliet", "Naperville",
           "Salt Lake City", "San Diego", "San Jose", "Los Angeles", "Las Vegas", "New York",
           "El Paso", "Fort Worth", "Kansas City", "Santa Fe", "Grand Rapids", "Baton Rouge",
           "Little Rock", "Sioux Falls", "Cedar Rapids", "Fort Collins", "Palo Alto",
           "Ann Arbor", "Rock Hill", "Mountain View", "Carson City", "Park City"]
_STATES = ["AL", "AK", "AZ", "AR", "CA", "CO", "CT", "DE", "FL", "GA", "HI", "ID", "IL", "IN",
           "IA", "KS", "KY", "LA", "ME", "MD", "MA", "MI", "MN", "MS", "MO", "MT", "NE", "NV",
           "NH", "NJ", "NM", "NY", "NC", "ND", "OH", "OK", "OR", "PA", "RI", "SC", "SD", "TN",
           "TX", "UT", "VT", "VA", "WA", "WV", "WI", "WY"]
_FILLER = ["Welcome to our website .", "We look forward to serving you .",
           "Call us today for a free quote .", "Open Monday through Friday .",
           "Read our latest news and updates .", "Follow us on social media .",
           "Our team has decades of experience .", "Request an appointment online .",
           "Quality service since 1998 .", "Privacy Policy | Terms of Use"]


def random_org(rng: random.Random) -> str:
    shape = rng.random()
    if shape < 0.35:
        parts = [rng.choice(_ORG_HEAD), rng.choice(_ORG_MID), rng.choice(_ORG_KIND), rng.choice(_ORG_TAIL)]
    elif shape < 0.7:
        parts = [rng.choice(_ORG_HEAD), rng.choice(_ORG_KIND), rng.choice(_ORG_TAIL)]
    else:
        parts = [rng.choice(_ORG_HEAD), rng.choice(_ORG_MID), rng.choice(_ORG_TAIL)]
    return " ".join(parts)


def random_detailed(rng: random.Random) -> str:
    num = str(rng.randint(1, 9999))
    shape = rng.random()
    if shape < 0.15:
        return f"{num} Avenue {rng.choice('ABCDEFGHJKLMNOP')}"
    if shape < 0.25:
        return f"PO Box {rng.randint(1, 999)}"
    parts = [num]
    if rng.random() < 0.3:
        parts.append(rng.choice(_DIRS))
    parts.append(rng.choice(_STREET))
    parts.append(rng.choice(_SUFFIX))
    if rng.random() < 0.3:
        parts += [rng.choice(_UNIT), str(rng.randint(1, 999))]
    return " ".join(parts)


def random_zip(rng: random.Random) -> str:
    z = f"{rng.randint(1001, 99950):05d}"
    if rng.random() < 0.15:
        z += f" - {rng.randint(0, 9999):04d}"
    return z


_TEMPLATES = [
    "Contact us : {org} , {det} , {city} , {state} {zip} . Phone : ( {a} ) {b} - {c}",
    "© {year} {org} . All rights reserved .",
    "Visit {org} at {det} , {city} , {state} {zip} .",
    "Copyright © {year} {org} | {det} | {city} , {state} {zip}",
    "Our office : {det} , {city} {state} {zip} . Email info @ example . com",
    "{org} | Home . {filler} Address : {det} {city} , {state} {zip}",
    "{filler} {org} is located at {det} , {city} , {state} {zip} .",
    "Mailing address : {org} {det} {city} {state} {zip} Tel {a} - {b} - {c}",
    # pages without any location clue
    "{filler} {filler2} Phone : ( {a} ) {b} - {c}",
    "{filler} {filler2}",
]


def _render(template: str, values: dict[str, str]):
    tokens: list[str] = []
    spans = []
    for piece in template.split(" "):
        if piece.startswith("{") and piece.endswith("}"):
            key = piece[1:-1]
            words = values[key].split(" ")
            start = len(tokens)
            tokens.extend(words)
            if key in ("org", "det", "city", "state", "zip"):
                spans.append((start, len(tokens) - 1, key))
        else:
            tokens.append(piece)
    return tokens, spans


_KEY_TYPE = {"org": "organization", "det": "detailed", "city": "city", "state": "state", "zip": "zip"}


def synthetic_corpus(n: int, seed: int = 0) -> list[LabeledPage]:
    """Template-generated labeled snippets of contact and copyright text."""
    rng = random.Random(seed)
    pages = []
    for k in range(n):
        template = rng.choice(_TEMPLATES)
        values = {
            "org": random_org(rng), "det": random_detailed(rng), "city": rng.choice(_CITIES),
            "state": rng.choice(_STATES), "zip": random_zip(rng), "year": str(rng.randint(1995, 2020)),
            "a": str(rng.randint(200, 999)), "b": str(rng.randint(200, 999)),
            "c": f"{rng.randint(0, 9999):04d}", "filler": rng.choice(_FILLER),
            "filler2": rng.choice(_FILLER),
        }
        tokens, spans = _render(template, values)
        if rng.random() < 0.25:
            distractor = f"Proudly serving {rng.choice(_CITIES)} and surrounding areas ."
            tokens = tokens + distractor.split(" ")
        ents = [entity(tokens, s, e, _KEY_TYPE[key]) for s, e, key in spans]
        pages.append(LabeledPage(f"syn{k:05d}", tokens, encode_bieso(ents, len(tokens))))
    return pages


def split_corpus(pages, validation_fraction: float = 0.2, seed: int = 0):
    order = list(range(len(pages)))
    random.Random(seed).shuffle(order)
    n_val = max(1, int(round(len(pages) * validation_fraction))) if len(pages) > 1 else 0
    val = sorted(order[:n_val])
    train = sorted(order[n_val:])
    return [pages[i] for i in train], [pages[i] for i in val]
