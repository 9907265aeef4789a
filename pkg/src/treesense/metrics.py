"""Counterexample quality: distance from data to the counterexample region,
and win/draw/loss aggregation across search modes.

The model is constant over the axis-aligned region a counterexample pair
certifies, so quality is measured to the region rather than to the witness
point: a dataset row inside the region's projection on the insensitive
features is at distance zero.  Features are min-max normalized before the
Euclidean clamp distance.
"""

import math
from dataclasses import dataclass

import numpy as np

from .dataaware import Dataset

__all__ = ["RegionDistanceReport", "region_distance", "compare_modes", "TIE_EPS"]

TIE_EPS = 1e-9


@dataclass
class RegionDistanceReport:
    distance: float
    nearest_row_index: int
    contributions: dict  # feature -> normalized clamp gap for the nearest row


def region_distance(d: Dataset, pair, features, scaler) -> RegionDistanceReport:
    """Min over rows of the normalized L2 clamp distance to the region.

    ``features`` is the sensitive set (excluded from the distance);
    ``scaler`` holds per-feature (min, max) pairs, typically from the
    dataset.  Degenerate features (max <= min) and features the region does
    not constrain contribute zero.  The two regions of a pair agree outside
    the sensitive set, so the first region's projection is used.
    """
    if d.num_rows < 1:
        raise ValueError("dataset is empty")
    fs = set(features)
    region = pair.region1
    rows = d.rows
    n = rows.shape[0]
    gaps = {}
    total = np.zeros(n)
    for f, (lo, hi) in sorted(region.items()):
        if f in fs:
            continue
        mn, mx = scaler[f]
        span = mx - mn
        if not span > 0:
            continue
        xn = (rows[:, f] - mn) / span
        lon = -math.inf if lo == -math.inf else (lo - mn) / span
        hin = math.inf if hi == math.inf else (hi - mn) / span
        gap = np.maximum(0.0, np.maximum(lon - xn, xn - hin))
        gaps[f] = gap
        total += gap * gap
    dist = np.sqrt(total)
    idx = int(np.argmin(dist))
    contributions = {f: float(g[idx]) for f, g in gaps.items() if g[idx] > 0}
    return RegionDistanceReport(float(dist[idx]), idx, contributions)


def compare_modes(distances: dict, tie_eps: float = TIE_EPS) -> dict:
    """Aggregate per-instance distances per mode into means and pairwise rates.

    ``distances`` maps mode name to a list of per-instance distances aligned
    across modes; ``None`` marks an instance the mode did not solve
    (NotSensitive/Timeout).  Pairwise comparisons drop instances where either
    side is ``None``; lower distance wins.
    """
    modes = sorted(distances)
    if not modes:
        raise ValueError("no modes to compare")
    length = len(distances[modes[0]])
    for mode in modes:
        if len(distances[mode]) != length:
            raise ValueError("mode %r has %d instances, expected %d"
                             % (mode, len(distances[mode]), length))
    means = {}
    for mode in modes:
        vals = [v for v in distances[mode] if v is not None]
        means[mode] = float(np.mean(vals)) if vals else None
    pairwise = {}
    for a in modes:
        for b in modes:
            if a == b:
                continue
            win = draw = loss = 0
            for da, db in zip(distances[a], distances[b]):
                if da is None or db is None:
                    continue
                if abs(da - db) <= tie_eps:
                    draw += 1
                elif da < db:
                    win += 1
                else:
                    loss += 1
            n = win + draw + loss
            pairwise["%s_vs_%s" % (a, b)] = {
                "instances": n,
                "win": win,
                "draw": draw,
                "loss": loss,
                "win_pct": 100.0 * win / n if n else None,
                "draw_pct": 100.0 * draw / n if n else None,
                "loss_pct": 100.0 * loss / n if n else None,
            }
    return {"means": means, "pairwise": pairwise}
