"""Constraint circles from probe delays and iterative candidate filtering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from lmgeo.geo import (EARTH_RADIUS_KM, GeoCoordinate, MeasurementConstants, delay_to_distance,
                       distance_matrix)


@dataclass(frozen=True)
class ConstraintCircle:
    center: GeoCoordinate
    radius: float

    def __post_init__(self):
        if not self.radius >= 0:
            raise ValueError(f"negative radius {self.radius}")


@dataclass(frozen=True)
class CandidateCoordinate:
    position: GeoCoordinate
    label: str | None = None
    merged_count: int = 1

    def __post_init__(self):
        if self.merged_count < 1:
            raise ValueError("merged_count must be at least 1")


def build_circles(probe_positions, rtts_ms, consts: MeasurementConstants | None = None):
    """One circle per probe, radius from the delay bound, smallest first (stable)."""
    probe_positions = list(probe_positions)
    rtts_ms = list(rtts_ms)
    if not probe_positions:
        raise ValueError("no probes")
    if len(probe_positions) != len(rtts_ms):
        raise ValueError(f"{len(probe_positions)} probes but {len(rtts_ms)} delays")
    circles = [ConstraintCircle(pos, delay_to_distance(rtt, consts))
               for pos, rtt in zip(probe_positions, rtts_ms)]
    return sorted(circles, key=lambda c: c.radius)


def filter_candidates(circles, candidates, radius: float = EARTH_RADIUS_KM):
    """Drop candidates outside each circle in turn; survivors lie inside all of them."""
    kept = list(candidates)
    for circle in circles:
        if not kept:
            break
        d = distance_matrix([circle.center], [c.position for c in kept], radius)[0]
        kept = [c for c, dist in zip(kept, d) if dist <= circle.radius]
    return kept


def region_hint(circles) -> tuple[GeoCoordinate, float]:
    """Center and radius of the smallest circle."""
    circles = list(circles)
    if not circles:
        raise ValueError("no circles")
    smallest = min(circles, key=lambda c: c.radius)
    return smallest.center, smallest.radius


def merge_close(candidates, threshold_km: float = 1.0, radius: float = EARTH_RADIUS_KM):
    """Single-linkage merge of candidates closer than ``threshold_km``.

    Each cluster collapses to the mean lat/lon of its members, keeps the
    first member's label, and is emitted in order of its first member.
    """
    candidates = list(candidates)
    n = len(candidates)
    if n < 2:
        return candidates
    d = distance_matrix([c.position for c in candidates], [c.position for c in candidates], radius)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j in zip(*np.nonzero(np.triu(d < threshold_km, k=1))):
        ri, rj = find(int(i)), find(int(j))
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    clusters: dict[int, list[int]] = {}
    for i in range(n):
        clusters.setdefault(find(i), []).append(i)
    out = []
    for root in sorted(clusters):
        members = clusters[root]
        lat = float(np.mean([candidates[i].position.lat for i in members]))
        lon = float(np.mean([candidates[i].position.lon for i in members]))
        count = sum(candidates[i].merged_count for i in members)
        out.append(CandidateCoordinate(GeoCoordinate(lat, lon), candidates[members[0]].label, count))
    return out
