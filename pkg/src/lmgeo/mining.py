"""Turn crawled home/contact pages into landmark records.

A page yields a landmark by one of three routes: a complete street
address is geocoded directly; an organization name plus a city, state or
ZIP is geocoded inside that region; an organization name alone is
geocoded inside the region the delay constraints allow. When a lookup
returns several sites, measurement-based selection picks one.
"""

from __future__ import annotations

import csv
import ipaddress
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

from lmgeo.cbg import CandidateCoordinate, build_circles, filter_candidates, merge_close, region_hint
from lmgeo.geo import GeoCoordinate, MeasurementConstants, distance_matrix
from lmgeo.geolocate import SOURCE_RANK, Landmark, ip_sort_key
from lmgeo.orgdict import OrgDictionary, match_organizations
from lmgeo.selection import SelectionError, landmarks_in_vicinity, select_coordinate
from lmgeo.tagger.scheme import TokenizedPage, tokenize

log = logging.getLogger(__name__)

PAGE_KINDS = ("home", "contact")
ADDRESS_FIELDS = ("detailed", "city", "state", "zip")
_PAGE_NAME = re.compile(r"^(\d+\.\d+\.\d+\.\d+)_(home|contact)\.txt$")


@dataclass(frozen=True)
class PageRecord:
    ip: str
    url: str
    text: str
    kind: str = "home"

    def __post_init__(self):
        ipaddress.IPv4Address(self.ip)
        if self.kind not in PAGE_KINDS:
            raise ValueError(f"page kind must be one of {PAGE_KINDS}, got {self.kind!r}")
        if not self.text.strip():
            raise ValueError("page text is empty")


@dataclass(frozen=True)
class FormattedAddress:
    detailed: str | None = None
    city: str | None = None
    state: str | None = None
    zip: str | None = None
    organization: str | None = None

    @property
    def complete(self) -> bool:
        return all(getattr(self, f) for f in ADDRESS_FIELDS)

    @property
    def region_text(self) -> str | None:
        parts = [p for p in (self.city, self.state, self.zip) if p]
        return " ".join(parts) if parts else None

    def query(self) -> str:
        return ", ".join(getattr(self, f) for f in ADDRESS_FIELDS if getattr(self, f))


def normalize_query(text: str) -> str:
    return " ".join(t.lower() for t in tokenize(text))


@dataclass(frozen=True)
class GeocodeHit:
    name: str
    position: GeoCoordinate
    region: str


class GeocoderStub:
    """Exact lookup on normalized query strings with optional region filtering.

    A region hint is either free text (every hint token must occur in the
    entry's region) or a ``(center, radius_km)`` pair.
    """

    def __init__(self, entries=()):
        self.table: dict[str, list[GeocodeHit]] = {}
        for query, name, lat, lon, region in entries:
            hit = GeocodeHit(name, GeoCoordinate(float(lat), float(lon)), region)
            self.table.setdefault(normalize_query(query), []).append(hit)
        for hits in self.table.values():
            hits.sort(key=lambda h: (h.name, h.position.lat, h.position.lon, h.region))

    @classmethod
    def load(cls, path) -> "GeocoderStub":
        entries = []
        with open(path, encoding="utf-8", newline="") as fh:
            for lineno, row in enumerate(csv.reader(fh, delimiter="\t"), 1):
                if not row or row[0].startswith("#"):
                    continue
                if len(row) != 5:
                    raise ValueError(f"{path}:{lineno}: expected 5 tab-separated fields")
                try:
                    entries.append((row[0], row[1], float(row[2]), float(row[3]), row[4]))
                except ValueError as exc:
                    raise ValueError(f"{path}:{lineno}: {exc}") from None
        return cls(entries)

    def geocode(self, query: str, hint=None) -> list[GeocodeHit]:
        hits = self.table.get(normalize_query(query), [])
        if hint is None:
            return list(hits)
        if isinstance(hint, str):
            want = set(normalize_query(hint).split())
            return [h for h in hits if want <= set(normalize_query(h.region).split())]
        center, radius_km = hint
        if not hits:
            return []
        d = distance_matrix([center], [h.position for h in hits])[0]
        return [h for h, dist in zip(hits, d) if dist <= radius_km]


@dataclass(frozen=True)
class MiningConfig:
    k_cbg_probes: int = 100
    merge_km: float = 1.0
    vicinity_factor: float = 5.0
    vicinity_km: float = 200.0
    landmark_limit: int = 1000
    alpha_delay: float = 0.5
    beta_topo: float = 0.5
    consts: MeasurementConstants = field(default_factory=MeasurementConstants)


@dataclass
class MiningOutcome:
    ip: str
    landmark: Landmark | None
    branch: str
    reason: str = ""
    candidates: list[CandidateCoordinate] = field(default_factory=list)


def extract_clues(page: PageRecord, tagger_params=None, dictionary: OrgDictionary | None = None
                  ) -> FormattedAddress:
    """Collect the first entity of each type; the dictionary fills a missing organization."""
    tokens = tokenize(page.text)
    if not tokens:
        return FormattedAddress()
    doc = TokenizedPage(tuple(tokens), page.ip)
    found: dict[str, str] = {}
    if tagger_params is not None:
        from lmgeo.tagger import tag_page
        for ent in tag_page(tagger_params, doc):
            found.setdefault(ent.entity_type, ent.text)
    if "organization" not in found and dictionary is not None:
        matches = match_organizations(dictionary, doc)
        confident = [m for m in matches if not m.low_confidence]
        pick = (confident or matches or [None])[0]
        if pick is not None:
            found["organization"] = pick.text
    return FormattedAddress(found.get("detailed"), found.get("city"), found.get("state"),
                            found.get("zip"), found.get("organization"))


def _candidates(hits, merge_km: float) -> list[CandidateCoordinate]:
    return merge_close([CandidateCoordinate(h.position, h.name) for h in hits], merge_km)


def _circles(ip: str, source, config: MiningConfig):
    vec = source.delay_vector(ip)
    if vec is None:
        return None
    nearest = sorted(vec.rtts.items(), key=lambda item: (item[1], item[0]))[:config.k_cbg_probes]
    return build_circles([source.probe_position(p) for p, _ in nearest],
                         [rtt for _, rtt in nearest], config.consts)


def selection_landmarks(ip: str, candidates, source, reference: dict,
                        config: MiningConfig | None = None, circles=None) -> dict:
    """Reference landmarks near the candidates, used to score them for ``ip``.

    The radius is ``vicinity_factor`` times the smallest constraint circle
    around ``ip``, or ``vicinity_km`` when no circle is available.
    """
    config = config or MiningConfig()
    if circles is None:
        circles = _circles(ip, source, config)
    radius = (config.vicinity_factor * region_hint(circles)[1]) if circles else config.vicinity_km
    return landmarks_in_vicinity(candidates, {k: v for k, v in reference.items() if k != ip},
                                 radius, config.landmark_limit)


def mine_landmark(page: PageRecord, extraction: FormattedAddress, geocoder: GeocoderStub,
                  source=None, config: MiningConfig | None = None, reference=None) -> MiningOutcome:
    """Resolve one page's clues to a landmark.

    ``reference`` maps landmark ip to coordinate and feeds selection when
    a lookup returns several sites; with no reference the outcome is
    ``deferred`` so a later pass can retry once more landmarks exist.
    """
    config = config or MiningConfig()
    if extraction.complete:
        hits = geocoder.geocode(extraction.query())
        if not hits:
            return MiningOutcome(page.ip, None, "address", "geocoder miss on complete address")
        return MiningOutcome(page.ip, Landmark(page.ip, hits[0].position, "full-address"), "address")
    if not extraction.organization:
        return MiningOutcome(page.ip, None, "none", "no usable clue")

    circles = None
    if extraction.region_text:
        branch = "org+region"
        hits = geocoder.geocode(extraction.organization, extraction.region_text)
    else:
        branch = "org+delay"
        if source is None:
            return MiningOutcome(page.ip, None, branch, "no measurements for delay region")
        circles = _circles(page.ip, source, config)
        if circles is None:
            return MiningOutcome(page.ip, None, branch, "target unreachable")
        hits = geocoder.geocode(extraction.organization, region_hint(circles))
    candidates = _candidates(hits, config.merge_km)
    if circles is not None:
        candidates = filter_candidates(circles, candidates)
    if not candidates:
        return MiningOutcome(page.ip, None, branch, "no candidate site")
    if len(candidates) == 1:
        return MiningOutcome(page.ip, Landmark(page.ip, candidates[0].position, "org-name+region"),
                             branch, candidates=candidates)

    if source is None:
        return MiningOutcome(page.ip, None, branch, "no measurements for selection", candidates)
    if not reference:
        return MiningOutcome(page.ip, None, "deferred", "awaiting reference landmarks", candidates)
    nearby = selection_landmarks(page.ip, candidates, source, reference, config, circles)
    reason = ""
    try:
        chosen = select_coordinate(candidates, nearby, page.ip, source,
                                   config.alpha_delay, config.beta_topo).best
    except SelectionError as exc:
        chosen = min(candidates, key=lambda c: (-c.merged_count, c.position.lat, c.position.lon))
        reason = f"selection fallback: {exc}"
    return MiningOutcome(page.ip, Landmark(page.ip, chosen.position, "org-name+selection"),
                         branch, reason, candidates)


def filter_proxies(pages, whois: dict, blacklist) -> list[PageRecord]:
    """Drop pages whose hosting organization is a blacklisted proxy provider."""
    banned = {name.strip().lower() for name in blacklist if name.strip()}
    return [p for p in pages if (whois.get(p.ip) or "").strip().lower() not in banned]


@dataclass
class MiningDeps:
    geocoder: GeocoderStub
    tagger_params: object = None
    dictionary: OrgDictionary | None = None
    source: object = None
    whois: dict = field(default_factory=dict)
    blacklist: tuple = ()
    reference: dict = field(default_factory=dict)


@dataclass
class MiningReport:
    counts: dict[str, int] = field(default_factory=dict)
    rejects: list[tuple[str, str, str]] = field(default_factory=list)
    filtered: int = 0

    def to_text(self) -> str:
        rows = ["kind\tkey\tvalue"]
        rows.append(f"filtered\tproxy\t{self.filtered}")
        for tier in sorted(SOURCE_RANK, key=lambda t: -SOURCE_RANK[t]):
            if tier != "manual":
                rows.append(f"count\t{tier}\t{self.counts.get(tier, 0)}")
        for ip, kind, reason in self.rejects:
            rows.append(f"reject\t{ip}_{kind}\t{reason}")
        return "\n".join(rows) + "\n"


def _better(a: Landmark, b: Landmark | None) -> bool:
    return b is None or SOURCE_RANK[a.source] > SOURCE_RANK[b.source]


def build_database(pages, deps: MiningDeps, config: MiningConfig | None = None,
                   rejects=()) -> tuple[list[Landmark], MiningReport]:
    """Mine every page and keep the most trusted landmark per ip.

    Pages needing selection are retried after the first pass so that
    landmarks mined from other pages can serve as references.
    """
    config = config or MiningConfig()
    report = MiningReport(rejects=list(rejects))
    pages = sorted(pages, key=lambda p: (ip_sort_key(p.ip), p.kind, p.url))
    kept = filter_proxies(pages, deps.whois, deps.blacklist)
    report.filtered = len(pages) - len(kept)
    best: dict[str, Landmark] = {}
    deferred = []
    for page in kept:
        try:
            clues = extract_clues(page, deps.tagger_params, deps.dictionary)
            outcome = mine_landmark(page, clues, deps.geocoder, deps.source, config)
        except (ValueError, KeyError) as exc:
            report.rejects.append((page.ip, page.kind, f"error: {exc}"))
            continue
        if outcome.branch == "deferred":
            deferred.append((page, clues))
        elif outcome.landmark is None:
            report.rejects.append((page.ip, page.kind, outcome.reason))
        elif _better(outcome.landmark, best.get(page.ip)):
            best[page.ip] = outcome.landmark

    reference = dict(deps.reference)
    reference.update({ip: lm.position for ip, lm in best.items()})
    for page, clues in deferred:
        if page.ip in best and SOURCE_RANK[best[page.ip].source] >= SOURCE_RANK["org-name+selection"]:
            continue
        outcome = mine_landmark(page, clues, deps.geocoder, deps.source, config, reference)
        if outcome.landmark is None:
            reason = outcome.reason if outcome.branch != "deferred" else "no reference landmarks"
            report.rejects.append((page.ip, page.kind, reason))
        elif _better(outcome.landmark, best.get(page.ip)):
            best[page.ip] = outcome.landmark

    db = [best[ip] for ip in sorted(best, key=ip_sort_key)]
    for lm in db:
        report.counts[lm.source] = report.counts.get(lm.source, 0) + 1
    report.rejects.sort(key=lambda r: (ip_sort_key(r[0]), r[1], r[2]))
    return db, report


def load_pages(directory) -> tuple[list[PageRecord], list[tuple[str, str, str]]]:
    """Read ``<ip>_<kind>.txt`` files; unreadable or misnamed files become rejects."""
    pages, rejects = [], []
    for path in sorted(Path(directory).iterdir()):
        if not path.is_file():
            continue
        m = _PAGE_NAME.match(path.name)
        if not m:
            rejects.append((path.stem, "-", "unrecognized page file name"))
            continue
        ip, kind = m.groups()
        try:
            text = path.read_text(encoding="utf-8")
            url = f"http://{ip}/" + ("contact" if kind == "contact" else "")
            pages.append(PageRecord(ip, url, text, kind))
        except (OSError, UnicodeDecodeError, ValueError) as exc:
            rejects.append((ip, kind, f"unreadable page: {exc}"))
    return pages, rejects


def load_whois(path) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{path}:{lineno}: expected ip<TAB>organization")
            out[parts[0]] = parts[1]
    return out


def load_blacklist(path) -> list[str]:
    return [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines()
            if line.strip() and not line.startswith("#")]
