"""Measurement-based scoring of landmarks and candidate coordinates.

Landmarks are scored from delay-vector similarity and from the length of
the indirect route through the closest common router; those scores are
then passed to candidate coordinates through distance-based gates.

Distances and route lengths are divided by their maximum over the set
being summed before exponentiation. Raw kilometres or milliseconds would
overflow ``exp``; the scaling keeps order, which is all the scores use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from lmgeo import kernels
from lmgeo.cbg import CandidateCoordinate
from lmgeo.geo import EARTH_RADIUS_KM, GeoCoordinate, distance_matrix

LOW_CONFIDENCE_PROBES = 3


class SelectionError(RuntimeError):
    """No landmark carries usable measurements."""


class DegenerateScoreError(SelectionError):
    """Every delay similarity is zero, so scores cannot be normalized."""


class DelayVector:
    """Round-trip times (ms) keyed by probe id; probes may be missing."""

    __slots__ = ("rtts",)

    def __init__(self, rtts):
        rtts = dict(rtts)
        clean = {}
        for probe, rtt in rtts.items():
            if rtt is None:
                continue
            rtt = float(rtt)
            if not (rtt >= 0 and math.isfinite(rtt)):
                raise ValueError(f"invalid delay {rtt} for probe {probe}")
            clean[probe] = rtt
        if not clean:
            raise ValueError("a delay vector needs at least one measured probe")
        self.rtts = clean

    def __getitem__(self, probe):
        return self.rtts[probe]

    def __contains__(self, probe):
        return probe in self.rtts

    def __len__(self):
        return len(self.rtts)

    def __eq__(self, other):
        return isinstance(other, DelayVector) and self.rtts == other.rtts

    def __repr__(self):
        return f"DelayVector({self.rtts!r})"

    def probes(self):
        return sorted(self.rtts)

    def restrict(self, probes) -> "DelayVector | None":
        kept = {p: self.rtts[p] for p in probes if p in self.rtts}
        return DelayVector(kept) if kept else None


@dataclass(frozen=True)
class TraceRoute:
    """Hops as ``(node, cumulative RTT ms)``; a silent hop is ``(None, None)``."""

    probe: str
    destination: str
    hops: tuple
    complete: bool

    def __post_init__(self):
        hops = tuple((h[0], None if h[1] is None else float(h[1])) for h in self.hops)
        object.__setattr__(self, "hops", hops)
        last = -math.inf
        for node, rtt in hops:
            if rtt is None:
                continue
            if rtt < last:
                raise ValueError("cumulative RTTs must not decrease along a route")
            last = rtt
        if self.complete:
            if not hops or hops[-1][0] != self.destination:
                raise ValueError("a complete route must end at its destination")
            if any(node is None for node, _ in hops):
                raise ValueError("a complete route cannot contain silent hops")

    @property
    def end_rtt(self) -> float:
        return self.hops[-1][1]


class MeasurementSource(Protocol):
    def probes(self) -> list[str]: ...

    def probe_position(self, probe: str) -> GeoCoordinate: ...

    def delay_vector(self, host: str) -> DelayVector | None: ...

    def traceroutes(self, host: str) -> dict[str, TraceRoute]: ...


@dataclass
class LandmarkScore:
    landmark: str
    s_d: float
    s_t: float | None
    s: float
    alpha_delay: float
    beta_topo: float
    shared_probes: int = 0
    route_length: float | None = None


@dataclass
class CoordinateScore:
    candidate: CandidateCoordinate
    score: float
    gates: dict[str, float] = field(default_factory=dict)


@dataclass
class SelectionResult:
    best: CandidateCoordinate
    table: list[CoordinateScore]
    landmark_scores: dict[str, LandmarkScore]


def shared_probe_count(v_l: DelayVector, v_t: DelayVector) -> int:
    return len(set(v_l.rtts) & set(v_t.rtts))


def delay_similarity(v_l: DelayVector, v_t: DelayVector) -> float | None:
    """Cosine similarity over the probes both vectors measured; None if none shared."""
    shared = sorted(set(v_l.rtts) & set(v_t.rtts))
    if not shared:
        return None
    a = np.array([v_l.rtts[p] for p in shared])
    b = np.array([v_t.rtts[p] for p in shared])
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 1.0 if na == nb else 0.0
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def delay_scores(landmark_vectors: dict, target: DelayVector) -> dict[str, float]:
    """Similarity of each landmark to the target, normalized to sum to one.

    Landmarks sharing no probe with the target are dropped; negative
    similarities count as zero.
    """
    sims = {}
    for lid, vec in landmark_vectors.items():
        if vec is None:
            continue
        sim = delay_similarity(vec, target)
        if sim is not None:
            sims[lid] = max(sim, 0.0)
    if not sims:
        raise SelectionError("no landmark shares a probe with the target")
    total = math.fsum(sims.values())
    if total <= 0:
        raise DegenerateScoreError("all delay similarities are zero")
    return {lid: sim / total for lid, sim in sims.items()}


def closest_common_router(route_l: TraceRoute, route_t: TraceRoute):
    """``(node, length)`` through the common node minimizing the summed residual delays.

    Ties prefer the node deepest in the route to the target, then the
    lowest node id. Returns None when the routes share no node.
    """
    t_pos = {}
    for k, (node, rtt) in enumerate(route_t.hops):
        if node is not None:
            t_pos[node] = (k, rtt)
    l_end, t_end = route_l.end_rtt, route_t.end_rtt
    best = None
    for node, rtt in route_l.hops:
        if node is None or node not in t_pos:
            continue
        depth, t_rtt = t_pos[node]
        length = max(l_end - rtt, 0.0) + max(t_end - t_rtt, 0.0)
        key = (length, -depth, str(node))
        if best is None or key < best[0]:
            best = (key, node, length)
    return None if best is None else (best[1], best[2])


def shortest_route_length(routes_to_landmark: dict, routes_to_target: dict) -> float | None:
    """Minimum over shared probes of the indirect landmark-target route length."""
    best = None
    for probe in sorted(set(routes_to_landmark) & set(routes_to_target)):
        rl, rt = routes_to_landmark[probe], routes_to_target[probe]
        if not (rl.complete and rt.complete):
            continue
        found = closest_common_router(rl, rt)
        if found is not None and (best is None or found[1] < best):
            best = found[1]
    return best


def complement_softmax(values) -> np.ndarray:
    """``1 - exp(v_i) / sum_j exp(v_j)``; a single value maps to 0."""
    v = np.asarray(values, dtype=np.float64)
    e = np.exp(v - v.max()) if v.size else v
    return 1.0 - e / e.sum()


def _max_normalize(values: np.ndarray) -> np.ndarray:
    top = values.max(axis=-1, keepdims=True) if values.size else values
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(top > 0, values / np.where(top > 0, top, 1.0), 0.0)


def topology_scores(route_lengths: dict) -> dict[str, float]:
    """Shorter indirect routes earn higher scores; unavailable lengths are skipped."""
    ids = [lid for lid, r in route_lengths.items() if r is not None and not math.isnan(r)]
    if not ids:
        return {}
    if len(ids) == 1:
        return {ids[0]: 0.0}
    lengths = _max_normalize(np.array([route_lengths[i] for i in ids], dtype=np.float64))
    return dict(zip(ids, complement_softmax(lengths).tolist()))


def combine_scores(s_d: dict, s_t: dict, alpha: float = 0.5, beta: float = 0.5,
                   shared: dict | None = None, lengths: dict | None = None) -> dict[str, LandmarkScore]:
    """Weighted blend; landmarks without a topology score fall back to (1, 0)."""
    out = {}
    for lid, sd in s_d.items():
        st = s_t.get(lid)
        a, b = (alpha, beta) if st is not None else (1.0, 0.0)
        s = a * sd + b * (st if st is not None else 0.0)
        out[lid] = LandmarkScore(lid, sd, st, s, a, b,
                                 (shared or {}).get(lid, 0), (lengths or {}).get(lid))
    return out


def redistribute(candidates, landmark_positions, landmark_scores,
                 radius: float = EARTH_RADIUS_KM) -> list[CoordinateScore]:
    """Score every candidate as the gate-weighted sum of landmark scores.

    ``landmark_positions`` maps landmark id to coordinate and
    ``landmark_scores`` maps the same ids to a float score.
    """
    ids = [lid for lid in landmark_scores if lid in landmark_positions]
    candidates = list(candidates)
    if not ids or not candidates:
        return [CoordinateScore(c, 0.0, {}) for c in candidates]
    s = np.array([float(landmark_scores[i]) for i in ids])
    d = distance_matrix([c.position for c in candidates], [landmark_positions[i] for i in ids], radius)
    if len(ids) == 1:
        gates = np.ones_like(d)
    else:
        dn = _max_normalize(d)
        e = np.exp(dn - dn.max(axis=1, keepdims=True))
        gates = 1.0 - e / e.sum(axis=1, keepdims=True)
    scores = gates @ s
    return [CoordinateScore(c, float(scores[k]), dict(zip(ids, gates[k].tolist())))
            for k, c in enumerate(candidates)]


def _argmax(table: list[CoordinateScore]) -> CoordinateScore:
    return min(table, key=lambda cs: (-cs.score, -cs.candidate.merged_count,
                                      cs.candidate.position.lat, cs.candidate.position.lon))


def landmarks_in_vicinity(candidates, landmarks: dict, radius_km: float, limit: int = 1000,
                          radius: float = EARTH_RADIUS_KM) -> dict:
    """Landmarks within ``radius_km`` of any candidate, nearest first, at most ``limit``."""
    ids = sorted(landmarks)
    if not ids or not candidates:
        return {}
    d = distance_matrix([c.position for c in candidates], [landmarks[i] for i in ids], radius).min(axis=0)
    order = sorted((dist, lid) for dist, lid in zip(d.tolist(), ids) if dist <= radius_km)
    return {lid: landmarks[lid] for _, lid in order[:limit]}


def score_landmarks(landmark_ids, target: str, source: MeasurementSource, alpha: float = 0.5,
                    beta: float = 0.5, probes=None) -> dict[str, LandmarkScore]:
    """Delay and topology scores for landmarks against one target host."""
    probes = list(probes) if probes is not None else source.probes()
    v_t = source.delay_vector(target)
    v_t = v_t.restrict(probes) if v_t is not None else None
    if v_t is None:
        raise SelectionError(f"target {target} has no delay measurements")
    vectors = {}
    for lid in landmark_ids:
        v = source.delay_vector(lid)
        vectors[lid] = v.restrict(probes) if v is not None else None
    s_d = delay_scores(vectors, v_t)
    shared = {lid: shared_probe_count(vectors[lid], v_t) for lid in s_d}
    lengths = route_lengths_for(source, target, list(s_d), probes)
    s_t = topology_scores(lengths)
    return combine_scores(s_d, s_t, alpha, beta, shared, lengths)


def select_coordinate(candidates, landmarks: dict, target: str, source: MeasurementSource,
                      alpha: float = 0.5, beta: float = 0.5, probes=None,
                      radius: float = EARTH_RADIUS_KM) -> SelectionResult:
    """Pick the candidate with the highest redistributed landmark score.

    ``landmarks`` maps landmark host id to its coordinate. A lone candidate
    is returned without touching measurements. Ties go to the larger
    ``merged_count``, then the smaller ``(lat, lon)``.
    """
    candidates = list(candidates)
    if not candidates:
        raise ValueError("no candidates to select from")
    if len(candidates) == 1:
        return SelectionResult(candidates[0], [CoordinateScore(candidates[0], 1.0, {})], {})
    if not landmarks:
        raise SelectionError("no landmarks available for selection")
    scores = score_landmarks(sorted(landmarks), target, source, alpha, beta, probes)
    table = redistribute(candidates, landmarks, {lid: ls.s for lid, ls in scores.items()}, radius)
    return SelectionResult(_argmax(table).candidate, table, scores)


def score_report(result: SelectionResult) -> str:
    """Tab-delimited audit of landmark and candidate scores."""
    rows = ["# landmarks", "landmark\ts_d\ts_t\talpha\tbeta\ts\tshared_probes\troute_ms"]
    for lid in sorted(result.landmark_scores):
        ls = result.landmark_scores[lid]
        st = "-" if ls.s_t is None else f"{ls.s_t:.9f}"
        rl = "-" if ls.route_length is None else f"{ls.route_length:.6f}"
        rows.append(f"{lid}\t{ls.s_d:.9f}\t{st}\t{ls.alpha_delay:g}\t{ls.beta_topo:g}"
                    f"\t{ls.s:.9f}\t{ls.shared_probes}\t{rl}")
    rows.append("# candidates")
    rows.append("lat\tlon\tlabel\tmerged_count\tscore\tgates")
    for cs in result.table:
        c = cs.candidate
        gates = ",".join(f"{lid}:{g:.6f}" for lid, g in sorted(cs.gates.items()))
        rows.append(f"{c.position.lat:.6f}\t{c.position.lon:.6f}\t{c.label or '-'}"
                    f"\t{c.merged_count}\t{cs.score:.9f}\t{gates}")
    return "\n".join(rows) + "\n"


def pack_routes(route_maps, probes, node_index: dict):
    """Pack per-host ``{probe: TraceRoute}`` maps into padded kernel arrays.

    Incomplete or missing routes get length 0. ``node_index`` is extended
    in place with any unseen node ids.
    """
    width = 1
    for routes in route_maps:
        for p in probes:
            r = routes.get(p)
            if r is not None and r.complete:
                width = max(width, len(r.hops))
    n, m = len(route_maps), len(probes)
    nodes = np.zeros((n, m, width), dtype=np.int64)
    cum = np.zeros((n, m, width), dtype=np.float64)
    lens = np.zeros((n, m), dtype=np.int64)
    for a, routes in enumerate(route_maps):
        for b, p in enumerate(probes):
            r = routes.get(p)
            if r is None or not r.complete:
                continue
            for k, (node, rtt) in enumerate(r.hops):
                nodes[a, b, k] = node_index.setdefault(node, len(node_index))
                cum[a, b, k] = rtt
            lens[a, b] = len(r.hops)
    return nodes, cum, lens


def route_lengths_batch(landmark_routes, target_routes, probes) -> np.ndarray:
    """Vectorized shortest indirect route per landmark (NaN where unavailable)."""
    index: dict = {}
    t_nodes, t_cum, t_len = pack_routes([target_routes], probes, index)
    l_nodes, l_cum, l_len = pack_routes(landmark_routes, probes, index)
    return kernels.route_lengths(t_nodes[0], t_cum[0], t_len[0], l_nodes, l_cum, l_len,
                                 max(len(index), 1))


def route_lengths_for(source, target: str, landmark_ids, probes) -> dict:
    """Shortest indirect route per landmark via the route kernel (None if unavailable).

    Sources exposing packed route arrays skip building TraceRoute objects.
    """
    landmark_ids = list(landmark_ids)
    if hasattr(source, "packed"):
        all_probes = source.probes()
        col = {p: b for b, p in enumerate(all_probes)}
        idx = [col[p] for p in probes]
        t_nodes, t_cum, t_len = source.packed([target], idx)
        l_nodes, l_cum, l_len = source.packed(landmark_ids, idx)
        n_nodes = len(source.node_names)
        width = max(t_nodes.shape[-1], l_nodes.shape[-1])
    else:
        index: dict = {}
        t_nodes, t_cum, t_len = pack_routes([source.traceroutes(target)], probes, index)
        l_nodes, l_cum, l_len = pack_routes([source.traceroutes(lid) for lid in landmark_ids],
                                            probes, index)
        n_nodes = max(len(index), 1)
        width = max(t_nodes.shape[-1], l_nodes.shape[-1])
    t_nodes, t_cum = _pad(t_nodes, width), _pad(t_cum, width)
    l_nodes, l_cum = _pad(l_nodes, width), _pad(l_cum, width)
    out = kernels.route_lengths(t_nodes[0], t_cum[0], t_len[0], l_nodes, l_cum, l_len, n_nodes)
    return {lid: (None if math.isnan(v) else float(v)) for lid, v in zip(landmark_ids, out)}


def _pad(a: np.ndarray, width: int) -> np.ndarray:
    if a.shape[-1] == width:
        return np.ascontiguousarray(a)
    pad = [(0, 0)] * (a.ndim - 1) + [(0, width - a.shape[-1])]
    return np.pad(a, pad)
