"""Geodesic and delay-to-distance primitives."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from lmgeo import kernels

EARTH_RADIUS_KM = 6371.0088
LIGHT_SPEED_KM_S = 299792.458
DEFAULT_FACTOR = 4.0 / 9.0
MAX_FACTOR = 2.0 / 3.0


def _normalize_lon(lon: float) -> float:
    lon = math.fmod(lon, 360.0)
    if lon <= -180.0:
        lon += 360.0
    elif lon > 180.0:
        lon -= 360.0
    return lon


@dataclass(frozen=True, order=True)
class GeoCoordinate:
    """A latitude/longitude pair in degrees.

    Longitude is folded into (-180, 180] on construction.
    """

    lat: float
    lon: float

    def __post_init__(self):
        lat = float(self.lat)
        lon = float(self.lon)
        if not (math.isfinite(lat) and math.isfinite(lon)):
            raise ValueError(f"non-finite coordinate ({lat}, {lon})")
        if not -90.0 <= lat <= 90.0:
            raise ValueError(f"latitude {lat} outside [-90, 90]")
        object.__setattr__(self, "lat", lat)
        object.__setattr__(self, "lon", _normalize_lon(lon))

    def __iter__(self):
        yield self.lat
        yield self.lon


@dataclass(frozen=True)
class MeasurementConstants:
    factor: float = DEFAULT_FACTOR
    light_speed: float = LIGHT_SPEED_KM_S
    sphere_radius: float = EARTH_RADIUS_KM

    def __post_init__(self):
        if not 0.0 < self.factor <= MAX_FACTOR:
            raise ValueError(f"converting factor {self.factor} outside (0, 2/3]")
        if not self.light_speed > 0 or not self.sphere_radius > 0:
            raise ValueError("light speed and sphere radius must be positive")


def great_circle_distance(a: GeoCoordinate, b: GeoCoordinate,
                          radius: float = EARTH_RADIUS_KM) -> float:
    """Haversine distance in km between two coordinates on a sphere."""
    phi1 = math.radians(a.lat)
    phi2 = math.radians(b.lat)
    dphi = phi2 - phi1
    dlmb = math.radians(b.lon - a.lon)
    h = math.sin(dphi / 2.0) ** 2 + math.cos(phi1) * math.cos(phi2) * math.sin(dlmb / 2.0) ** 2
    h = min(1.0, max(0.0, h))
    return 2.0 * radius * math.asin(math.sqrt(h))


def distance_matrix(points_a, points_b, radius: float = EARTH_RADIUS_KM) -> np.ndarray:
    """Pairwise great-circle distances (km) between two coordinate lists.

    ``points_a`` and ``points_b`` may be sequences of :class:`GeoCoordinate`
    or ``(n, 2)`` arrays of ``(lat, lon)`` degrees.
    """
    a = as_latlon_array(points_a)
    b = as_latlon_array(points_b)
    return kernels.haversine_matrix(a[:, 0], a[:, 1], b[:, 0], b[:, 1], radius)


def as_latlon_array(points) -> np.ndarray:
    if isinstance(points, np.ndarray):
        arr = np.asarray(points, dtype=np.float64)
        return arr.reshape(-1, 2)
    return np.array([(p.lat, p.lon) for p in points], dtype=np.float64).reshape(-1, 2)


def delay_to_distance(rtt_ms: float, consts: MeasurementConstants | None = None) -> float:
    """Upper-bound distance (km) a signal covers in half the round trip."""
    consts = consts or MeasurementConstants()
    if not rtt_ms >= 0 or not math.isfinite(rtt_ms):
        raise ValueError(f"round-trip time must be a non-negative number, got {rtt_ms}")
    return (rtt_ms / 2.0 / 1000.0) * consts.factor * consts.light_speed


def offset_coordinate(origin: GeoCoordinate, east_km: float, north_km: float,
                      radius: float = EARTH_RADIUS_KM) -> GeoCoordinate:
    """Map a local plane offset around ``origin`` to lat/lon (equirectangular)."""
    lat = origin.lat + math.degrees(north_km / radius)
    lon = origin.lon + math.degrees(east_km / (radius * math.cos(math.radians(origin.lat))))
    return GeoCoordinate(lat, lon)
