"""Expected utility of a tile: quality x distinguishable voxels x visibility."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .geometry import Viewpoint, is_visible, lod_table, visible_mask
from .media import AXIS_VECTORS, ObjectManifest
from .window import WindowState

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class UtilityCoeffs:
    alpha: float
    beta: float


@dataclass(frozen=True)
class PredictorConfig:
    p_err_min: float = 0.1
    p_err_slope: float = 0.3
    # None: divide by the current window span; a number: fixed span in seconds
    denominator: float | None = None

    def __post_init__(self):
        if self.p_err_min < 0 or self.p_err_slope < 0 or self.p_err_min + self.p_err_slope > 0.5:
            raise ValueError("need p_err_min >= 0, p_err_slope >= 0 and p_err_min + p_err_slope <= 0.5")


def normalize_coeffs(bandwidths) -> UtilityCoeffs:
    """Coefficients putting the lowest rung at alpha and the top rung at exactly 1."""
    b = np.asarray(bandwidths, dtype=float)
    b1, bm = float(b.min()), float(b.max())
    if b1 <= 0:
        raise ValueError("bandwidths must be positive")
    return UtilityCoeffs(alpha=1.0 / (1.0 + math.log(bm / b1)), beta=math.e / b1)


def u(bandwidth: float, coeffs: UtilityCoeffs) -> float:
    if bandwidth < 0:
        raise ValueError("bandwidth must be >= 0")
    if bandwidth == 0:
        return 0.0
    val = coeffs.alpha * math.log(coeffs.beta * bandwidth)
    if val < 0:
        log.warning("utility of %.6g bps is negative under these coefficients; clamped to 0", bandwidth)
        return 0.0
    return val


def u_array(bandwidths, coeffs: UtilityCoeffs) -> np.ndarray:
    b = np.asarray(bandwidths, dtype=float)
    with np.errstate(divide="ignore"):
        val = coeffs.alpha * np.log(coeffs.beta * np.where(b > 0, b, 1.0))
    return np.where(b > 0, np.maximum(val, 0.0), 0.0)


def p_err(tau: float, window: WindowState, t: float, cfg: PredictorConfig = PredictorConfig(), obj: int = 0) -> float:
    """Probability that current visibility mispredicts a tile at media time ``tau``.

    Lowest at the trailing edge, growing linearly toward the leading edge.
    """
    trail = window.trail(t, obj)
    lead = window.lead(t, obj)
    if not trail - 1e-9 <= tau <= lead + 1e-9:
        raise ValueError(f"media time {tau} outside window [{trail}, {lead}]")
    return float(p_err_array(np.array([tau]), trail, _span(window, t, obj, cfg), cfg)[0])


def _span(window: WindowState, t: float, obj: int, cfg: PredictorConfig) -> float:
    if cfg.denominator is not None:
        return window.objects[obj].speed * cfg.denominator
    return window.span(t, obj)


def p_err_array(tau, trail: float, span: float, cfg: PredictorConfig) -> np.ndarray:
    frac = np.minimum(1.0, np.maximum(np.asarray(tau, float) - trail, 0.0) / span)
    return cfg.p_err_min + cfg.p_err_slope * frac


def p_visible(tile_pos, normal, view: Viewpoint, perr: float) -> float:
    return 1.0 - perr if is_visible(tile_pos, normal, view) else perr


def utility_table(
    positions,
    normals,
    perr,
    manifest: ObjectManifest,
    views,
    coeffs: UtilityCoeffs,
) -> np.ndarray:
    """Utility for K tiles over representations 0..M, shape (K, M+1).

    ``normals`` are world-space vectors and ``perr`` holds one error
    probability per tile.
    """
    if not views:
        raise ValueError("at least one viewpoint is required")
    positions = np.atleast_2d(np.asarray(positions, float))
    perr = np.asarray(perr, float)
    k = len(positions)
    best = np.zeros((k, len(manifest.representations)))
    for view in views:
        vis = visible_mask(positions, normals, view)
        prob = np.where(vis, 1.0 - perr, perr)
        np.maximum(best, lod_table(positions, manifest, view) * prob[:, None], out=best)
    out = np.zeros((k, len(manifest.representations) + 1))
    out[:, 1:] = u_array(manifest.bandwidths, coeffs)[None, :] * best
    return out


def tile_utility(
    tile_pos,
    normal,
    tau: float,
    m: int,
    manifest: ObjectManifest,
    views,
    window: WindowState,
    t: float,
    coeffs: UtilityCoeffs,
    cfg: PredictorConfig = PredictorConfig(),
    obj: int = 0,
) -> float:
    """Expected utility of one tile at representation ``m`` (0 = none)."""
    if not views:
        raise ValueError("at least one viewpoint is required")
    if m == 0:
        return 0.0
    perr = p_err(tau, window, t, cfg, obj)
    nrm = np.asarray(normal)
    if nrm.ndim == 0:
        nrm = AXIS_VECTORS[int(nrm)]
    table = utility_table([tile_pos], nrm[None, :], [perr], manifest, views, coeffs)
    return float(table[0, m])
