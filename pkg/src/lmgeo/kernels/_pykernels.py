"""Pure numpy implementations of the hot kernels.

Each function here has a compiled twin in ``_ckernels.pyx`` with the same
signature and semantics.
"""

import numpy as np


def haversine_matrix(lat1, lon1, lat2, lon2, radius):
    lat1 = np.radians(np.asarray(lat1, dtype=np.float64))[:, None]
    lon1 = np.radians(np.asarray(lon1, dtype=np.float64))[:, None]
    lat2 = np.radians(np.asarray(lat2, dtype=np.float64))[None, :]
    lon2 = np.radians(np.asarray(lon2, dtype=np.float64))[None, :]
    h = (np.sin((lat2 - lat1) / 2.0) ** 2
         + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2.0) ** 2)
    np.clip(h, 0.0, 1.0, out=h)
    return 2.0 * radius * np.arcsin(np.sqrt(h))


def route_lengths(t_nodes, t_cum, t_len, l_nodes, l_cum, l_len, n_nodes):
    """Shortest indirect route length from each landmark to one target.

    ``t_*`` describe the target's routes, one row per probe; ``l_*`` carry a
    leading landmark axis. Route rows are padded; a length of 0 marks an
    unusable (incomplete or missing) route. Returns one length per landmark,
    NaN where no probe yields a common node.
    """
    t_nodes = np.asarray(t_nodes, dtype=np.int64)
    t_cum = np.asarray(t_cum, dtype=np.float64)
    t_len = np.asarray(t_len, dtype=np.int64)
    l_nodes = np.asarray(l_nodes, dtype=np.int64)
    l_cum = np.asarray(l_cum, dtype=np.float64)
    l_len = np.asarray(l_len, dtype=np.int64)
    n_land, n_probe, width = l_nodes.shape
    best = np.full(n_land, np.inf)
    lookup = np.full(n_nodes, np.nan)
    hop_idx = np.arange(width)
    rows = np.arange(n_land)
    for p in range(n_probe):
        tl = t_len[p]
        if tl <= 0:
            continue
        t_end = t_cum[p, tl - 1]
        nodes = t_nodes[p, :tl]
        lookup[nodes] = np.maximum(t_end - t_cum[p, :tl], 0.0)
        ll = l_len[:, p]
        valid = hop_idx[None, :] < ll[:, None]
        idx = np.where(valid, l_nodes[:, p, :], 0)
        t_part = np.where(valid, lookup[idx], np.nan)
        l_end = l_cum[rows, p, np.maximum(ll - 1, 0)]
        l_part = np.maximum(l_end[:, None] - l_cum[:, p, :], 0.0)
        total = t_part + l_part
        with np.errstate(invalid="ignore"):
            per_probe = np.where(np.isnan(total), np.inf, total).min(axis=1)
        np.minimum(best, per_probe, out=best)
        lookup[nodes] = np.nan
    best[~np.isfinite(best)] = np.nan
    return best
