"""Landmark database file: a version header followed by one tab-separated record per line."""

from __future__ import annotations

from lmgeo.geo import GeoCoordinate
from lmgeo.geolocate import Landmark, ip_sort_key

HEADER = "# landmark-db v1"
COLUMNS = ("ip", "lat", "lon", "source", "confidence")


class StoreError(ValueError):
    pass


def format_db(landmarks) -> str:
    """Serialize landmarks sorted by numeric ip; duplicate ips are rejected."""
    landmarks = list(landmarks)
    seen = set()
    for lm in landmarks:
        if lm.ip in seen:
            raise StoreError(f"duplicate landmark ip {lm.ip}")
        seen.add(lm.ip)
    lines = [HEADER, "\t".join(COLUMNS)]
    for lm in sorted(landmarks, key=lambda lm: ip_sort_key(lm.ip)):
        lines.append(f"{lm.ip}\t{lm.position.lat!r}\t{lm.position.lon!r}\t{lm.source}\t{lm.confidence}")
    return "\n".join(lines) + "\n"


def write_db(path, landmarks) -> None:
    text = format_db(landmarks)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def parse_db(text: str, origin: str = "<db>") -> list[Landmark]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise StoreError(f"{origin}:1: missing header {HEADER!r}")
    out, seen = [], set()
    for lineno, line in enumerate(lines[1:], 2):
        if not line.strip() or line.startswith("#") or line == "\t".join(COLUMNS):
            continue
        parts = line.split("\t")
        if len(parts) != len(COLUMNS):
            raise StoreError(f"{origin}:{lineno}: expected {len(COLUMNS)} fields, got {len(parts)}")
        try:
            lm = Landmark(parts[0], GeoCoordinate(float(parts[1]), float(parts[2])), parts[3],
                          int(parts[4]))
        except ValueError as exc:
            raise StoreError(f"{origin}:{lineno}: {exc}") from None
        if lm.ip in seen:
            raise StoreError(f"{origin}:{lineno}: duplicate landmark ip {lm.ip}")
        seen.add(lm.ip)
        out.append(lm)
    return out


def read_db(path) -> list[Landmark]:
    with open(path, encoding="utf-8") as fh:
        return parse_db(fh.read(), str(path))
