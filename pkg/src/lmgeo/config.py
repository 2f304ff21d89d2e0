"""Engine configuration: one flat ``key = value`` file for every tunable."""

from __future__ import annotations

from dataclasses import dataclass, fields, replace

from lmgeo.geo import EARTH_RADIUS_KM, LIGHT_SPEED_KM_S, MAX_FACTOR, MeasurementConstants


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EngineConfig:
    factor: float = 4.0 / 9.0
    light_speed: float = LIGHT_SPEED_KM_S
    sphere_radius: float = EARTH_RADIUS_KM
    alpha_delay: float = 0.5
    beta_topo: float = 0.5
    k_probes: int = 200
    k_candidates: int = 1000
    k_cbg_probes: int = 100
    merge_km: float = 1.0
    vicinity_factor: float = 5.0
    vicinity_km: float = 200.0
    embed_dim: int = 50
    encoder_hidden: int = 256
    decoder_hidden: int = 512
    alpha_distinguish: float = 64.0
    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 0.05
    clip_norm: float = 5.0
    max_weight: float = 2.0
    sim_config: str = ""
    seed: int = 0

    def __post_init__(self):
        checks = {
            "factor": 0 < self.factor <= MAX_FACTOR,
            "light_speed": self.light_speed > 0,
            "sphere_radius": self.sphere_radius > 0,
            "alpha_delay": self.alpha_delay >= 0,
            "beta_topo": self.beta_topo >= 0,
            "k_probes": self.k_probes >= 1,
            "k_candidates": self.k_candidates >= 1,
            "k_cbg_probes": self.k_cbg_probes >= 1,
            "merge_km": self.merge_km >= 0,
            "vicinity_factor": self.vicinity_factor > 0,
            "vicinity_km": self.vicinity_km > 0,
            "embed_dim": self.embed_dim >= 1,
            "encoder_hidden": self.encoder_hidden >= 1,
            "decoder_hidden": self.decoder_hidden >= 1,
            "alpha_distinguish": self.alpha_distinguish >= 0,
            "epochs": self.epochs >= 1,
            "batch_size": self.batch_size >= 1,
            "learning_rate": self.learning_rate > 0,
            "clip_norm": self.clip_norm > 0,
            "max_weight": self.max_weight >= 1,
        }
        for key, ok in checks.items():
            if not ok:
                raise ConfigError(f"invalid value for {key}: {getattr(self, key)!r}")

    @property
    def constants(self) -> MeasurementConstants:
        return MeasurementConstants(self.factor, self.light_speed, self.sphere_radius)

    def geolocate_config(self):
        from lmgeo.geolocate import GeolocateConfig
        return GeolocateConfig(self.k_probes, self.k_candidates, self.alpha_delay, self.beta_topo)

    def mining_config(self):
        from lmgeo.mining import MiningConfig
        return MiningConfig(self.k_cbg_probes, self.merge_km, self.vicinity_factor, self.vicinity_km,
                            self.k_candidates, self.alpha_delay, self.beta_topo, self.constants)

    def train_config(self):
        from lmgeo.tagger.model import TaggerDims
        from lmgeo.tagger.train import TrainConfig
        dims = TaggerDims(self.embed_dim, self.encoder_hidden, self.decoder_hidden)
        return TrainConfig(self.epochs, self.batch_size, self.learning_rate, self.alpha_distinguish,
                           self.clip_norm, self.max_weight, self.seed, dims)

    def override(self, **changes) -> "EngineConfig":
        """Apply non-None overrides (e.g. from command-line flags)."""
        changes = {k: v for k, v in changes.items() if v is not None}
        try:
            return replace(self, **changes)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


_TYPES = {f.name: f.type for f in fields(EngineConfig)}


def _parse(key: str, raw: str):
    kind = _TYPES[key]
    try:
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {kind}") from None
    return raw


def parse_config(text: str, origin: str = "<config>") -> EngineConfig:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"{origin}:{lineno}: unknown key {key!r}")
        values[key] = _parse(key, val)
    return EngineConfig(**values)


def load_config(path) -> EngineConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), str(path))


def dump_config(config: EngineConfig) -> str:
    lines = []
    for f in fields(EngineConfig):
        value = getattr(config, f.name)
        lines.append(f"{f.name} = {value if isinstance(value, str) else repr(value)}\n")
    return "".join(lines)
