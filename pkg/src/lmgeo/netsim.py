"""Deterministic synthetic Internet: routers, hosts, pings and traceroutes.

Routers are scattered uniformly over a square patch and wired as a Gabriel
graph; every host hangs off its nearest router. Link lengths are
great-circle kilometres between the endpoints' real coordinates, so a
path is never shorter than the great-circle distance between its ends.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from functools import cached_property

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import Delaunay, QhullError, cKDTree

from lmgeo.geo import (EARTH_RADIUS_KM, LIGHT_SPEED_KM_S, GeoCoordinate, as_latlon_array,
                       distance_matrix, offset_coordinate)
from lmgeo.selection import DelayVector, TraceRoute

DELAY_MODES = ("proportional", "proportional+noise", "proportional+lasthop")
KIND_OCTET = {"probe": 0, "landmark": 1, "target": 2, "extra": 3}
SNAPSHOT_FORMAT = "lmgeo-snapshot"
TOPOLOGY_FORMAT = "lmgeo-topology"
FORMAT_VERSION = 1


class SimConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DelayModel:
    mode: str = "proportional"
    propagation_factor: float = 0.4
    noise_ms: float = 0.0
    last_hop_ms: float = 0.0
    nonresponse_prob: float = 0.0

    def __post_init__(self):
        if self.mode not in DELAY_MODES:
            raise SimConfigError(f"unknown delay mode {self.mode!r}")
        if not 0 < self.propagation_factor <= 1:
            raise SimConfigError("propagation_factor must be in (0, 1]")
        if self.noise_ms < 0 or self.last_hop_ms < 0:
            raise SimConfigError("delay model parameters must be non-negative")
        if not 0 <= self.nonresponse_prob <= 1:
            raise SimConfigError("nonresponse_prob must be in [0, 1]")

    @property
    def ms_per_km(self) -> float:
        return 1000.0 / (self.propagation_factor * LIGHT_SPEED_KM_S)


@dataclass(frozen=True)
class SimConfig:
    region_km: float = 500.0
    center_lat: float = 39.0
    center_lon: float = -98.0
    n_routers: int = 400
    n_probes: int = 50
    n_landmarks: int = 100
    n_targets: int = 10
    model: DelayModel = field(default_factory=DelayModel)

    def __post_init__(self):
        if self.n_routers < 1:
            raise SimConfigError("need at least one router")
        if self.region_km <= 0 or self.region_km > 1000:
            raise SimConfigError("region_km must be in (0, 1000]")
        for name in ("n_probes", "n_landmarks", "n_targets"):
            if getattr(self, name) < 0:
                raise SimConfigError(f"{name} must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        data = dict(data)
        model = data.pop("model", {})
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise SimConfigError(f"unknown sim config keys: {sorted(unknown)}")
        model_keys = {f.name for f in fields(DelayModel)}
        if set(model) - model_keys:
            raise SimConfigError(f"unknown delay model keys: {sorted(set(model) - model_keys)}")
        return cls(model=DelayModel(**model), **data)


def load_sim_config(path) -> SimConfig:
    """Read a flat ``key = value`` sim config; ``model.*`` keys set the delay model."""
    values: dict = {}
    model: dict = {}
    types = {f.name: f.type for f in fields(SimConfig)}
    model_types = {f.name: f.type for f in fields(DelayModel)}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise SimConfigError(f"{path}:{lineno}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            if key.startswith("model."):
                name = key[6:]
                if name not in model_types:
                    raise SimConfigError(f"{path}:{lineno}: unknown key {key!r}")
                model[name] = val if name == "mode" else float(val)
            elif key in types and key != "model":
                values[key] = int(val) if key.startswith("n_") else float(val)
            else:
                raise SimConfigError(f"{path}:{lineno}: unknown key {key!r}")
    return SimConfig(model=DelayModel(**model), **values)


@dataclass(frozen=True)
class Host:
    ip: str
    kind: str
    position: GeoCoordinate
    router: int
    access_km: float


def _host_ip(kind: str, i: int) -> str:
    return f"10.{KIND_OCTET[kind]}.{i // 256}.{i % 256}"


def gabriel_edges(xy: np.ndarray) -> list[tuple[int, int]]:
    """Gabriel graph edges over planar points (sorted, ``i < j``)."""
    n = len(xy)
    if n < 2:
        return []
    candidates = set()
    try:
        if n < 3:
            raise QhullError("too few points")
        tri = Delaunay(xy)
        for simplex in tri.simplices:
            for a in range(3):
                for b in range(a + 1, 3):
                    i, j = sorted((int(simplex[a]), int(simplex[b])))
                    candidates.add((i, j))
    except QhullError:
        candidates = {(i, j) for i in range(n) for j in range(i + 1, n)}
    tree = cKDTree(xy)
    edges = []
    for i, j in sorted(candidates):
        mid = (xy[i] + xy[j]) / 2.0
        r2 = float(((xy[i] - xy[j]) ** 2).sum()) / 4.0
        inside = tree.query_ball_point(mid, math.sqrt(r2) * (1 - 1e-12))
        if all(k in (i, j) or ((xy[k] - mid) ** 2).sum() >= r2 for k in inside):
            edges.append((i, j))
    return edges


class SimTopology:
    """Routers, Gabriel-graph links (km) and attached hosts.

    Hosts with identical coordinates share a site gateway, the last hop
    before the host, located at the site itself.
    """

    def __init__(self, config: SimConfig, seed: int, router_xy: np.ndarray,
                 router_pos: list[GeoCoordinate], edges: list[tuple[int, int, float]],
                 hosts: list[Host]):
        self.config = config
        self.seed = seed
        self.router_xy = router_xy
        self.router_pos = router_pos
        self.edges = edges
        self.hosts = hosts
        self.host_index = {h.ip: k for k, h in enumerate(hosts)}
        if len(self.host_index) != len(hosts):
            raise SimConfigError("duplicate host ip")
        sites: dict[tuple[float, float], int] = {}
        self.site_of = {h.ip: sites.setdefault((h.position.lat, h.position.lon), len(sites))
                        for h in hosts}
        self.n_sites = len(sites)
        self._sp_cache: dict[int, tuple[np.ndarray, np.ndarray]] = {}

    @property
    def n_routers(self) -> int:
        return len(self.router_pos)

    def router_id(self, r: int) -> str:
        return f"r{r:05d}"

    def site_id(self, s: int) -> str:
        return f"g{s:05d}"

    def node_names(self, hosts) -> list[str]:
        """Routers, then site gateways, then the given hosts."""
        return ([self.router_id(r) for r in range(self.n_routers)]
                + [self.site_id(s) for s in range(self.n_sites)] + list(hosts))

    def hosts_of(self, kind: str) -> list[Host]:
        return [h for h in self.hosts if h.kind == kind]

    def host(self, ip: str) -> Host:
        try:
            return self.hosts[self.host_index[ip]]
        except KeyError:
            raise KeyError(f"unknown host {ip}") from None

    @cached_property
    def graph(self) -> csr_matrix:
        n = self.n_routers
        if not self.edges:
            return csr_matrix((n, n))
        i, j, w = zip(*self.edges)
        rows = np.array(i + j)
        cols = np.array(j + i)
        data = np.array(w + w)
        return csr_matrix((data, (rows, cols)), shape=(n, n))

    def shortest_paths(self, router: int):
        """Distances (km) and predecessors from one router, cached."""
        if router not in self._sp_cache:
            dist, pred = dijkstra(self.graph, directed=False, indices=router, return_predecessors=True)
            self._sp_cache[router] = (dist, pred)
        return self._sp_cache[router]

    def router_path(self, src: int, dst: int) -> list[int]:
        _, pred = self.shortest_paths(src)
        path = [dst]
        while path[-1] != src:
            nxt = pred[path[-1]]
            if nxt < 0:
                return []
            path.append(int(nxt))
        return path[::-1]

    def is_connected(self) -> bool:
        dist, _ = self.shortest_paths(0)
        return bool(np.all(np.isfinite(dist)))

    def with_hosts(self, extra) -> "SimTopology":
        """A copy with additional ``(ip, kind, GeoCoordinate)`` hosts attached."""
        new = list(self.hosts)
        for ip, kind, pos in extra:
            new.append(_attach(ip, kind, pos, self.router_pos))
        topo = SimTopology(self.config, self.seed, self.router_xy, self.router_pos, self.edges, new)
        topo._sp_cache = self._sp_cache
        return topo

    # -- serialization ---------------------------------------------------

    def to_json(self) -> str:
        doc = {
            "format": TOPOLOGY_FORMAT, "version": FORMAT_VERSION, "seed": self.seed,
            "config": self.config.to_dict(),
            "routers": [[p.lat, p.lon, float(x), float(y)]
                        for p, (x, y) in zip(self.router_pos, self.router_xy)],
            "edges": [[i, j, w] for i, j, w in self.edges],
            "hosts": [[h.ip, h.kind, h.position.lat, h.position.lon, h.router, h.access_km]
                      for h in self.hosts],
        }
        return json.dumps(doc, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "SimTopology":
        doc = json.loads(text)
        if doc.get("format") != TOPOLOGY_FORMAT or doc.get("version") != FORMAT_VERSION:
            raise ValueError("not a supported topology file")
        routers = doc["routers"]
        return cls(SimConfig.from_dict(doc["config"]), doc["seed"],
                   np.array([[r[2], r[3]] for r in routers], dtype=np.float64).reshape(-1, 2),
                   [GeoCoordinate(r[0], r[1]) for r in routers],
                   [(int(i), int(j), float(w)) for i, j, w in doc["edges"]],
                   [Host(ip, kind, GeoCoordinate(lat, lon), int(r), float(a))
                    for ip, kind, lat, lon, r, a in doc["hosts"]])


def _attach(ip, kind, pos: GeoCoordinate, router_pos) -> Host:
    """Attach a host to its nearest router (lowest index on ties)."""
    d = distance_matrix([pos], router_pos)[0]
    r = int(np.argmin(d))
    return Host(ip, kind, pos, r, float(d[r]))


def _pairwise_km(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Row-wise haversine distance between two ``(n, 2)`` lat/lon arrays."""
    pa, pb = np.radians(a[:, 0]), np.radians(b[:, 0])
    dl = np.radians(b[:, 1] - a[:, 1])
    h = np.sin((pb - pa) / 2) ** 2 + np.cos(pa) * np.cos(pb) * np.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_KM * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def generate(config: SimConfig, seed: int = 0) -> SimTopology:
    """Build a topology reproducibly from ``(config, seed)``."""
    rng = np.random.default_rng([seed, 104729])
    half = config.region_km / 2.0
    center = GeoCoordinate(config.center_lat, config.center_lon)
    xy = rng.uniform(-half, half, (config.n_routers, 2))
    router_pos = [offset_coordinate(center, float(x), float(y)) for x, y in xy]
    pair_edges = gabriel_edges(xy)
    edges = []
    if pair_edges:
        ll = as_latlon_array(router_pos)
        i_idx = np.array([i for i, _ in pair_edges])
        j_idx = np.array([j for _, j in pair_edges])
        d = _pairwise_km(ll[i_idx], ll[j_idx])
        # a zero-length link would vanish from the sparse graph
        edges = [(int(i), int(j), max(float(w), 1e-9)) for i, j, w in zip(i_idx, j_idx, d)]
    hosts = []
    for kind, count in (("probe", config.n_probes), ("landmark", config.n_landmarks),
                        ("target", config.n_targets)):
        pts = rng.uniform(-half, half, (count, 2))
        for i, (x, y) in enumerate(pts):
            hosts.append(_attach(_host_ip(kind, i), kind,
                                 offset_coordinate(center, float(x), float(y)), router_pos))
    return SimTopology(config, seed, xy, router_pos, edges, hosts)


# -- measurements ------------------------------------------------------------

def _pair_rng(topo: SimTopology, src: str, dst: str) -> np.random.Generator:
    digest = hashlib.blake2b(f"{src}>{dst}".encode(), digest_size=8).digest()
    return np.random.default_rng([topo.seed, 7919, int.from_bytes(digest, "little")])


def _one_way_km(topo: SimTopology, src: Host, dst: Host) -> float:
    if src.ip == dst.ip:
        return 0.0
    dist, _ = topo.shortest_paths(src.router)
    core = float(dist[dst.router])
    if not math.isfinite(core):
        return math.inf
    return src.access_km + core + dst.access_km


def _measure(topo: SimTopology, model: DelayModel, src: Host, dst: Host, with_route: bool):
    """RTT and (optionally) the traceroute hop list for one ordered host pair."""
    km = _one_way_km(topo, src, dst)
    if not math.isfinite(km):
        return None, None
    needs_rng = (model.mode == "proportional+noise" and model.noise_ms > 0) or \
        (with_route and model.nonresponse_prob > 0)
    rng = _pair_rng(topo, src.ip, dst.ip) if needs_rng else None
    rtt = 2.0 * km * model.ms_per_km
    noisy = model.mode == "proportional+noise" and model.noise_ms > 0
    if noisy:
        rtt += abs(float(rng.normal(0.0, model.noise_ms)))
    if model.mode == "proportional+lasthop":
        rtt += model.last_hop_ms
    if not with_route:
        return rtt, None
    hops = []
    if src.ip != dst.ip:
        path = topo.router_path(src.router, dst.router)
        dist, _ = topo.shortest_paths(src.router)
        n = len(path) + 1
        jitter = np.abs(rng.normal(0.0, model.noise_ms, n)) if noisy else np.zeros(n)
        silent = (rng.random(n) < model.nonresponse_prob) if model.nonresponse_prob > 0 \
            else np.zeros(n, dtype=bool)
        one_way = [src.access_km + float(dist[r]) for r in path] + [km]
        names = [topo.router_id(r) for r in path] + [topo.site_id(topo.site_of[dst.ip])]
        last = 0.0
        for k, name in enumerate(names):
            value = min(max(2.0 * one_way[k] * model.ms_per_km + jitter[k], last), rtt)
            last = value
            hops.append((None, None) if silent[k] else (name, value))
    hops.append((dst.ip, rtt))
    return rtt, hops


def ping(topo: SimTopology, model: DelayModel, src: str, dst: str) -> float | None:
    """Round-trip time in ms; None when the hosts are not connected."""
    rtt, _ = _measure(topo, model, topo.host(src), topo.host(dst), False)
    return rtt


def traceroute(topo: SimTopology, model: DelayModel, probe: str, dst: str) -> TraceRoute:
    rtt, hops = _measure(topo, model, topo.host(probe), topo.host(dst), True)
    if rtt is None:
        return TraceRoute(probe, dst, (), False)
    complete = all(node is not None for node, _ in hops)
    return TraceRoute(probe, dst, tuple(hops), complete)


class SimulatorSource:
    """Live measurement source over a topology; counts every measurement call."""

    def __init__(self, topo: SimTopology, model: DelayModel | None = None, probes=None):
        self.topo = topo
        self.model = model or topo.config.model
        self._probes = list(probes) if probes is not None else [h.ip for h in topo.hosts_of("probe")]
        self.calls = 0

    def probes(self) -> list[str]:
        return list(self._probes)

    def probe_position(self, probe: str) -> GeoCoordinate:
        return self.topo.host(probe).position

    def delay_vector(self, host: str) -> DelayVector | None:
        self.calls += 1
        rtts = {p: ping(self.topo, self.model, p, host) for p in self._probes}
        rtts = {p: r for p, r in rtts.items() if r is not None}
        return DelayVector(rtts) if rtts else None

    def traceroutes(self, host: str) -> dict[str, TraceRoute]:
        self.calls += 1
        return {p: traceroute(self.topo, self.model, p, host) for p in self._probes}


class Snapshot:
    """Immutable bundle of delay vectors and traceroutes from a fixed probe set.

    Routes are kept packed: ``nodes`` indexes ``node_names`` (-1 for a
    silent hop), ``cum`` holds cumulative RTTs, ``lens`` the hop counts.
    """

    def __init__(self, probes, probe_positions, hosts, rtt, node_names, nodes, cum, lens, complete):
        self._probes = list(probes)
        self.probe_positions = dict(probe_positions)
        self.hosts = list(hosts)
        self.host_index = {h: k for k, h in enumerate(self.hosts)}
        self.rtt = rtt
        self.node_names = list(node_names)
        self.nodes = nodes
        self.cum = cum
        self.lens = lens
        self.complete = complete

    def probes(self) -> list[str]:
        return list(self._probes)

    def probe_position(self, probe: str) -> GeoCoordinate:
        return self.probe_positions[probe]

    def delay_vector(self, host: str) -> DelayVector | None:
        k = self.host_index.get(host)
        if k is None:
            return None
        row = self.rtt[k]
        rtts = {p: float(v) for p, v in zip(self._probes, row) if np.isfinite(v)}
        return DelayVector(rtts) if rtts else None

    def traceroutes(self, host: str) -> dict[str, TraceRoute]:
        k = self.host_index.get(host)
        if k is None:
            return {}
        out = {}
        for b, p in enumerate(self._probes):
            n = int(self.lens[k, b])
            hops = tuple((None, None) if self.nodes[k, b, j] < 0
                         else (self.node_names[self.nodes[k, b, j]], float(self.cum[k, b, j]))
                         for j in range(n))
            out[p] = TraceRoute(p, host, hops, bool(self.complete[k, b]))
        return out

    def packed(self, hosts, probe_idx=None):
        """Kernel arrays for ``hosts``: incomplete routes get length 0."""
        rows = np.array([self.host_index[h] for h in hosts], dtype=np.int64)
        cols = np.arange(len(self._probes)) if probe_idx is None else np.asarray(probe_idx)
        nodes = self.nodes[np.ix_(rows, cols)]
        cum = self.cum[np.ix_(rows, cols)]
        lens = np.where(self.complete[np.ix_(rows, cols)], self.lens[np.ix_(rows, cols)], 0)
        return np.maximum(nodes, 0).astype(np.int64), cum, lens.astype(np.int64)

    # -- serialization ---------------------------------------------------

    def to_lines(self):
        header = {"format": SNAPSHOT_FORMAT, "version": FORMAT_VERSION, "probes": self._probes,
                  "probe_positions": {p: [c.lat, c.lon] for p, c in sorted(self.probe_positions.items())},
                  "hosts": len(self.hosts)}
        yield json.dumps(header, sort_keys=True)
        for k, h in enumerate(self.hosts):
            routes = []
            for b in range(len(self._probes)):
                n = int(self.lens[k, b])
                routes.append({"complete": bool(self.complete[k, b]),
                               "hops": [[None, None] if self.nodes[k, b, j] < 0 else
                                        [self.node_names[self.nodes[k, b, j]], float(self.cum[k, b, j])]
                                        for j in range(n)]})
            rtts = [float(v) if np.isfinite(v) else None for v in self.rtt[k]]
            yield json.dumps({"host": h, "rtts": rtts, "routes": routes}, sort_keys=True)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in self.to_lines():
                fh.write(line + "\n")

    @classmethod
    def load(cls, path) -> "Snapshot":
        with open(path, encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            if header.get("format") != SNAPSHOT_FORMAT or header.get("version") != FORMAT_VERSION:
                raise ValueError(f"{path}: not a supported snapshot file")
            records = [json.loads(line) for line in fh if line.strip()]
        probes = header["probes"]
        positions = {p: GeoCoordinate(*v) for p, v in header["probe_positions"].items()}
        hosts = [r["host"] for r in records]
        width = max([1] + [len(rt["hops"]) for r in records for rt in r["routes"]])
        rtt = np.full((len(hosts), len(probes)), np.nan)
        nodes = np.full((len(hosts), len(probes), width), -1, dtype=np.int64)
        cum = np.zeros((len(hosts), len(probes), width))
        lens = np.zeros((len(hosts), len(probes)), dtype=np.int64)
        complete = np.zeros((len(hosts), len(probes)), dtype=bool)
        names: dict[str, int] = {}
        for k, r in enumerate(records):
            rtt[k] = [np.nan if v is None else v for v in r["rtts"]]
            for b, rt in enumerate(r["routes"]):
                complete[k, b] = rt["complete"]
                lens[k, b] = len(rt["hops"])
                for j, (node, value) in enumerate(rt["hops"]):
                    if node is not None:
                        nodes[k, b, j] = names.setdefault(node, len(names))
                        cum[k, b, j] = value
        node_names = [None] * len(names)
        for name, i in names.items():
            node_names[i] = name
        return cls(probes, positions, hosts, rtt, node_names, nodes, cum, lens, complete)


def _tree_paths(dist: np.ndarray, pred: np.ndarray, root: int):
    """Router paths from ``root`` to every router as a padded ``(R, D)`` array."""
    n = len(pred)
    depth = np.zeros(n, dtype=np.int64)
    reach = np.isfinite(dist)
    # parents are strictly closer than children, so distance order is a topological order
    order = [int(r) for r in np.argsort(dist, kind="stable") if reach[r] and r != root]
    depth[root] = 1
    for r in order:
        depth[r] = depth[pred[r]] + 1
    width = int(depth.max()) if n else 1
    paths = np.zeros((n, max(width, 1)), dtype=np.int64)
    paths[root, 0] = root
    for r in order:
        d = depth[r]
        paths[r, :d - 1] = paths[pred[r], :d - 1]
        paths[r, d - 1] = r
    return paths, depth


def _snapshot_fast(topo: SimTopology, model: DelayModel, probes, hosts):
    """Vectorized measurement for models without per-pair randomness.

    A non-response probability of exactly 1 is deterministic: every hop
    before the destination is silent.
    """
    n_h, n_p = len(hosts), len(probes)
    host_objs = [topo.host(h) for h in hosts]
    hr = np.array([h.router for h in host_objs], dtype=np.int64)
    site_nodes = topo.n_routers + np.array([topo.site_of[h] for h in hosts], dtype=np.int64)
    acc = np.array([h.access_km for h in host_objs])
    extra = model.last_hop_ms if model.mode == "proportional+lasthop" else 0.0
    per_probe = []
    width = 1
    for p in probes:
        src = topo.host(p)
        dist, pred = topo.shortest_paths(src.router)
        paths, depth = _tree_paths(dist, pred, src.router)
        per_probe.append((src, dist, paths, depth))
        width = max(width, paths.shape[1] + 2)
    rtt = np.full((n_h, n_p), np.nan)
    nodes = np.full((n_h, n_p, width), -1, dtype=np.int64)
    cum = np.zeros((n_h, n_p, width))
    lens = np.zeros((n_h, n_p), dtype=np.int64)
    complete = np.zeros((n_h, n_p), dtype=bool)
    cols = np.arange(width)
    host_nodes = topo.n_routers + topo.n_sites + np.arange(n_h)
    for b, (src, dist, paths, depth) in enumerate(per_probe):
        core = dist[hr]
        ok = np.isfinite(core)
        base = 2.0 * (src.access_km + core + acc) * model.ms_per_km
        value = base + extra
        dep = depth[hr]
        row_nodes = paths[hr]
        row_cum = np.minimum(2.0 * (src.access_km + dist[row_nodes]) * model.ms_per_km, value[:, None])
        within = cols[None, :row_nodes.shape[1]] < dep[:, None]
        w = row_nodes.shape[1]
        nodes[:, b, :w] = np.where(within, row_nodes, -1)
        cum[:, b, :w] = np.where(within, row_cum, 0.0)
        rows = np.arange(n_h)
        nodes[rows, b, dep] = site_nodes
        cum[rows, b, dep] = np.minimum(base, value)
        nodes[rows, b, dep + 1] = host_nodes
        cum[rows, b, dep + 1] = value
        lens[:, b] = dep + 2
        same = np.array([h == src.ip for h in hosts])
        if same.any():
            value[same] = extra
            nodes[same, b, :] = -1
            cum[same, b, :] = 0.0
            nodes[same, b, 0] = host_nodes[same]
            cum[same, b, 0] = extra
            lens[same, b] = 1
        if model.nonresponse_prob == 1:
            silent = (cols[None, :] < lens[:, b, None] - 1)
            nodes[:, b, :] = np.where(silent, -1, nodes[:, b, :])
            cum[:, b, :] = np.where(silent, 0.0, cum[:, b, :])
        rtt[ok, b] = value[ok]
        complete[ok, b] = lens[ok, b] == 1 if model.nonresponse_prob == 1 else True
        nodes[~ok, b, :] = -1
        lens[~ok, b] = 0
    used = max(int(lens.max()) if lens.size else 1, 1)
    return rtt, nodes[:, :, :used], cum[:, :, :used], lens, complete


def _snapshot_pairs(topo: SimTopology, model: DelayModel, probes, hosts):
    """Per-pair measurement, used when noise or silent hops need a pair-keyed draw."""
    n_h, n_p = len(hosts), len(probes)
    host_node = {h: topo.n_routers + topo.n_sites + k for k, h in enumerate(hosts)}
    rtt = np.full((n_h, n_p), np.nan)
    per_pair = []
    width = 1
    for b, p in enumerate(probes):
        src = topo.host(p)
        for k, h in enumerate(hosts):
            value, hops = _measure(topo, model, src, topo.host(h), True)
            if value is None:
                continue
            rtt[k, b] = value
            per_pair.append((k, b, hops, all(n is not None for n, _ in hops)))
            width = max(width, len(hops))
    nodes = np.full((n_h, n_p, width), -1, dtype=np.int64)
    cum = np.zeros((n_h, n_p, width))
    lens = np.zeros((n_h, n_p), dtype=np.int64)
    complete = np.zeros((n_h, n_p), dtype=bool)
    for k, b, hops, ok in per_pair:
        lens[k, b] = len(hops)
        complete[k, b] = ok
        for j, (node, value) in enumerate(hops):
            if node is None:
                continue
            if j == len(hops) - 1:
                nodes[k, b, j] = host_node[node]
            else:
                offset = topo.n_routers if node[0] == "g" else 0
                nodes[k, b, j] = offset + int(node[1:])
            cum[k, b, j] = value
    return rtt, nodes, cum, lens, complete


def snapshot(topo: SimTopology, model: DelayModel | None = None, probes=None, hosts=None) -> Snapshot:
    """Measure every host from every probe into a :class:`Snapshot`."""
    model = model or topo.config.model
    probes = [h.ip for h in topo.hosts_of("probe")] if probes is None else list(probes)
    hosts = [h.ip for h in topo.hosts] if hosts is None else list(hosts)
    if len(set(hosts)) != len(hosts) or len(set(probes)) != len(probes):
        raise ValueError("snapshot hosts and probes must be unique")
    node_names = topo.node_names(hosts)
    randomized = (model.mode == "proportional+noise" and model.noise_ms > 0) or \
        0 < model.nonresponse_prob < 1
    measure = _snapshot_pairs if randomized else _snapshot_fast
    rtt, nodes, cum, lens, complete = measure(topo, model, probes, hosts)
    positions = {p: topo.host(p).position for p in probes}
    return Snapshot(probes, positions, hosts, rtt, node_names, nodes, cum, lens, complete)


def with_model(config: SimConfig, **changes) -> SimConfig:
    return replace(config, model=replace(config.model, **changes))
