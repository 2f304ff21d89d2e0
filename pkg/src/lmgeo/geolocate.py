"""Map a target IP to the best-scoring landmark in a landmark database."""

from __future__ import annotations

import ipaddress
import logging
import math
from dataclasses import dataclass, field

from lmgeo.geo import GeoCoordinate
from lmgeo.selection import (DelayVector, LandmarkScore, SelectionError, combine_scores,
                             delay_scores, route_lengths_for, shared_probe_count, topology_scores)

log = logging.getLogger(__name__)

# higher rank wins when two records claim the same ip
SOURCE_RANK = {
    "manual": 3,
    "full-address": 2,
    "org-name+region": 1,
    "org-name+selection": 0,
}


class MeasurementError(RuntimeError):
    """The target has no usable measurements."""


class GeolocationError(RuntimeError):
    """No landmark could be scored against the target."""


@dataclass(frozen=True)
class Landmark:
    ip: str
    position: GeoCoordinate
    source: str = "manual"
    confidence: int | None = None

    def __post_init__(self):
        ipaddress.IPv4Address(self.ip)
        if self.source not in SOURCE_RANK:
            raise ValueError(f"unknown landmark source {self.source!r}")
        if self.confidence is None:
            object.__setattr__(self, "confidence", SOURCE_RANK[self.source])


def ip_sort_key(ip: str) -> int:
    return int(ipaddress.IPv4Address(ip))


@dataclass(frozen=True)
class GeolocateConfig:
    k_probes: int = 200
    k_candidates: int = 1000
    alpha_delay: float = 0.5
    beta_topo: float = 0.5

    def __post_init__(self):
        if self.k_probes < 1 or self.k_candidates < 1:
            raise ValueError("k_probes and k_candidates must be at least 1")
        if self.alpha_delay < 0 or self.beta_topo < 0:
            raise ValueError("score weights must be non-negative")


@dataclass
class GeolocationResult:
    target: str
    position: GeoCoordinate
    landmark: str
    scores: dict[str, LandmarkScore]
    probes: list[str]
    audit: dict = field(default_factory=dict)

    def record(self) -> dict:
        return {
            "target": self.target,
            "lat": self.position.lat,
            "lon": self.position.lon,
            "landmark": self.landmark,
            "score": self.scores[self.landmark].s,
            "probes": len(self.probes),
            **{k: self.audit[k] for k in sorted(self.audit)},
        }


def select_probes(target: DelayVector, k: int) -> list[str]:
    """The ``k`` probes with the smallest RTT to the target, ties by probe id."""
    if k < 1:
        raise ValueError("k must be at least 1")
    ranked = sorted(target.rtts.items(), key=lambda item: (item[1], item[0]))
    if k > len(ranked):
        log.warning("asked for %d probes but only %d measured the target", k, len(ranked))
    return [p for p, _ in ranked[:k]]


def geolocate_target(target: str, landmarks, source, config: GeolocateConfig | None = None
                     ) -> GeolocationResult:
    """Estimate the target's position as that of its best-scoring landmark.

    Landmarks are ranked by delay score, the top ``k_candidates`` are kept
    and their delay scores renormalized, then topology scores are folded
    in. Landmarks without delay data are skipped and counted in the audit.
    """
    config = config or GeolocateConfig()
    db = {lm.ip: lm for lm in landmarks}
    if not db:
        raise GeolocationError("empty landmark database")
    v_all = source.delay_vector(target)
    if v_all is None:
        raise MeasurementError(f"target {target} is unreachable")
    probes = select_probes(v_all, config.k_probes)
    v_t = v_all.restrict(probes)

    vectors = {}
    unreachable = 0
    for ip in sorted(db, key=ip_sort_key):
        if ip == target:
            continue
        v = source.delay_vector(ip)
        v = v.restrict(probes) if v is not None else None
        if v is None:
            unreachable += 1
            continue
        vectors[ip] = v
    try:
        s_d_all = delay_scores(vectors, v_t)
    except SelectionError as exc:
        raise GeolocationError(str(exc)) from exc

    ranked = sorted(s_d_all, key=lambda ip: (-s_d_all[ip], ip_sort_key(ip)))
    kept = ranked[:config.k_candidates]
    total = math.fsum(s_d_all[ip] for ip in kept)
    s_d = {ip: s_d_all[ip] / total for ip in kept}

    lengths = route_lengths_for(source, target, kept, probes)
    s_t = topology_scores(lengths)
    shared = {ip: shared_probe_count(vectors[ip], v_t) for ip in kept}
    scores = combine_scores(s_d, s_t, config.alpha_delay, config.beta_topo, shared, lengths)

    best = min(kept, key=lambda ip: (-scores[ip].s, db[ip].position.lat, db[ip].position.lon,
                                     ip_sort_key(ip)))
    audit = {
        "landmarks": len(db),
        "unreachable": unreachable,
        "no_shared_probe": len(vectors) - len(s_d_all),
        "pruned": len(s_d_all) - len(kept),
        "with_route": len(s_t),
    }
    return GeolocationResult(target, db[best].position, best, scores, probes, audit)


def audit_table(result: GeolocationResult, limit: int | None = None) -> str:
    """Tab-delimited landmark scores, best first."""
    rows = ["landmark\ts_d\ts_t\talpha\tbeta\ts\tshared_probes\troute_ms"]
    order = sorted(result.scores, key=lambda ip: (-result.scores[ip].s, ip_sort_key(ip)))
    for ip in order[:limit]:
        ls = result.scores[ip]
        st = "-" if ls.s_t is None else f"{ls.s_t:.9f}"
        rl = "-" if ls.route_length is None else f"{ls.route_length:.6f}"
        rows.append(f"{ip}\t{ls.s_d:.9f}\t{st}\t{ls.alpha_delay:g}\t{ls.beta_topo:g}\t{ls.s:.9f}"
                    f"\t{ls.shared_probes}\t{rl}")
    return "\n".join(rows) + "\n"
