"""Median error distance as landmark density grows, measured in the simulator."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from lmgeo.geo import distance_matrix
from lmgeo.geolocate import GeolocateConfig, Landmark, geolocate_target
from lmgeo.netsim import DelayModel, SimConfig, generate, snapshot

CDF_THRESHOLDS_KM = (1, 5, 10, 25, 50, 100, 250)


@dataclass(frozen=True)
class MedConfig:
    landmark_counts: tuple = (10, 100, 1000)
    trials: int = 30
    region_km: float = 500.0
    n_routers: int = 400
    n_probes: int = 50
    k_candidates: int = 1000
    alpha_delay: float = 0.5
    beta_topo: float = 0.5
    seed: int = 0
    model: DelayModel = field(default_factory=DelayModel)

    def __post_init__(self):
        counts = tuple(int(n) for n in self.landmark_counts)
        if not counts or min(counts) < 1:
            raise ValueError("landmark counts must be positive")
        if self.trials < 1:
            raise ValueError("need at least one trial")
        object.__setattr__(self, "landmark_counts", counts)


@dataclass
class MedResult:
    config: MedConfig
    errors: dict[int, list[float]]
    nearest: list[float]

    def med(self, n: int) -> float:
        return float(np.median(self.errors[n]))

    @property
    def nearest_median(self) -> float:
        return float(np.median(self.nearest))


def run_med(config: MedConfig | None = None) -> MedResult:
    """One simulated network per trial; smaller landmark sets are prefixes of the largest."""
    config = config or MedConfig()
    largest = max(config.landmark_counts)
    errors: dict[int, list[float]] = {n: [] for n in config.landmark_counts}
    nearest = []
    geo_config = GeolocateConfig(config.n_probes, config.k_candidates,
                                 config.alpha_delay, config.beta_topo)
    for trial in range(config.trials):
        sim = SimConfig(region_km=config.region_km, n_routers=config.n_routers,
                        n_probes=config.n_probes, n_landmarks=largest, n_targets=1, model=config.model)
        topo = generate(sim, seed=config.seed + trial)
        snap = snapshot(topo)
        landmarks = [Landmark(h.ip, h.position) for h in topo.hosts_of("landmark")]
        target = topo.hosts_of("target")[0]
        for n in config.landmark_counts:
            result = geolocate_target(target.ip, landmarks[:n], snap, geo_config)
            errors[n].append(float(distance_matrix([result.position], [target.position])[0, 0]))
        nearest.append(float(distance_matrix([target.position], [lm.position for lm in landmarks]).min()))
    return MedResult(config, errors, nearest)


def med_table(result: MedResult) -> str:
    """MED per landmark count followed by the empirical error CDF."""
    rows = ["# med", "landmarks\ttrials\tmed_km\tp25_km\tp75_km"]
    for n in result.config.landmark_counts:
        e = np.asarray(result.errors[n])
        rows.append(f"{n}\t{len(e)}\t{np.median(e):.3f}\t{np.percentile(e, 25):.3f}"
                    f"\t{np.percentile(e, 75):.3f}")
    rows.append(f"nearest-landmark\t{len(result.nearest)}\t{result.nearest_median:.3f}"
                f"\t{np.percentile(result.nearest, 25):.3f}\t{np.percentile(result.nearest, 75):.3f}")
    rows.append("# cdf")
    rows.append("landmarks\t" + "\t".join(f"le_{t}km" for t in CDF_THRESHOLDS_KM))
    for n in result.config.landmark_counts:
        e = np.asarray(result.errors[n])
        rows.append(f"{n}\t" + "\t".join(f"{np.mean(e <= t):.4f}" for t in CDF_THRESHOLDS_KM))
    return "\n".join(rows) + "\n"
