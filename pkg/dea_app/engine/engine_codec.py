"""
Box codecs.

Anchor-free codec: a prediction at cell (m, n) of a pyramid level holds the
distances (v_t, v_l, v_b, v_r) from the cell's image-plane location to the
four box sides. Anchor-based codec: center offsets scaled by the anchor
extents plus log extent ratios.
"""
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from ..errors import CodecError, ConfigurationError
from .engine_anchors import PyramidConfig
from .engine_geometry import HBox

logger = logging.getLogger(__name__)

Distances = tuple[float, float, float, float]  # (v_t, v_l, v_b, v_r)

# per-level caps on max(v_t, v_l, v_b, v_r) for P_2..P_6, intervals are (lo, hi]
DEFAULT_AF_RANGES: tuple[tuple[float, float], ...] = (
    (0.0, 64.0), (64.0, 128.0), (128.0, 256.0), (256.0, 512.0), (512.0, math.inf),
)

# log-extent clamp the usual Faster R-CNN decoders apply to network outputs
DEFAULT_MAX_LOG_RATIO = math.log(1000.0 / 16.0)

_DEFAULT_PYRAMID = PyramidConfig()


@dataclass(frozen=True)
class PredVector:
    m: int
    n: int
    level: int
    v_t: float
    v_l: float
    v_b: float
    v_r: float
    class_scores: tuple[float, ...] = (1.0,)
    centerness: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'class_scores', tuple(float(s) for s in self.class_scores))
        if not self.class_scores:
            raise CodecError("a prediction needs at least one class score")
        if not 0.0 <= self.centerness <= 1.0:
            raise CodecError(f"centerness must lie in [0, 1], got {self.centerness}")

    def distances(self) -> Distances:
        return (self.v_t, self.v_l, self.v_b, self.v_r)

    @property
    def class_id(self) -> int:
        scores = self.class_scores
        return max(range(len(scores)), key=lambda i: (scores[i], -i))

    @property
    def score(self) -> float:
        return max(self.class_scores)


@dataclass(frozen=True)
class DeltaVector:
    dx: float
    dy: float
    dw: float
    dh: float

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.dx, self.dy, self.dw, self.dh)


def cell_center(m: int, n: int, stride: float) -> tuple[float, float]:
    return ((m + 0.5) * stride, (n + 0.5) * stride)


def decode_distances(location: tuple[float, float], distances: Distances,
                     class_id: int | None = None) -> HBox:
    """Box whose sides lie at the given distances from an image point."""
    v_t, v_l, v_b, v_r = distances
    if not all(math.isfinite(v) for v in distances):
        raise CodecError(f"distances must be finite, got {distances}")
    if min(distances) < 0:
        raise CodecError(f"distances must be non-negative, got {distances}")
    w, h = v_l + v_r, v_t + v_b
    if w <= 0 or h <= 0:
        raise CodecError(f"distances {distances} decode to a zero-area box")
    px, py = location
    return HBox(px - v_l, py - v_t, w, h, class_id)


def decode_af(v: PredVector, pyramid: PyramidConfig | None = None) -> HBox:
    stride = (pyramid or _DEFAULT_PYRAMID).stride_of(v.level)
    return decode_distances(cell_center(v.m, v.n, stride), v.distances(), v.class_id)


def encode_af(box: HBox, location: tuple[float, float]) -> Distances:
    px, py = location
    if not box.contains_point(px, py, strict=True):
        raise CodecError(f"location {location} is not strictly inside {box.as_xywh()}")
    return (py - box.y, px - box.x, box.y2 - py, box.x2 - px)


def encode_delta(anchor: HBox, gt: HBox) -> DeltaVector:
    return DeltaVector(
        (gt.cx - anchor.cx) / anchor.w,
        (gt.cy - anchor.cy) / anchor.h,
        math.log(gt.w / anchor.w),
        math.log(gt.h / anchor.h),
    )


def decode_delta(anchor: HBox, d: DeltaVector, class_id: int | None = None,
                 max_log_ratio: float | None = None) -> HBox:
    dw, dh = d.dw, d.dh
    if max_log_ratio is not None:
        dw = min(max(dw, -max_log_ratio), max_log_ratio)
        dh = min(max(dh, -max_log_ratio), max_log_ratio)
    cx = anchor.cx + d.dx * anchor.w
    cy = anchor.cy + d.dy * anchor.h
    w = anchor.w * math.exp(dw)
    h = anchor.h * math.exp(dh)
    return HBox(cx - 0.5 * w, cy - 0.5 * h, w, h, class_id)


def centerness_target(distances: Distances) -> float:
    v_t, v_l, v_b, v_r = distances
    if min(distances) <= 0:
        raise CodecError(f"centerness needs positive distances, got {distances}")
    lr = min(v_l, v_r) / max(v_l, v_r)
    tb = min(v_t, v_b) / max(v_t, v_b)
    return math.sqrt(lr * tb)


@dataclass(frozen=True)
class LocationTarget:
    level: int
    m: int
    n: int
    gt_index: int
    distances: Distances

    @property
    def centerness(self) -> float:
        return centerness_target(self.distances)


def _interior_cells(box: HBox, stride: float, cols: int, rows: int):
    m_lo = max(0, math.floor(box.x / stride - 0.5) + 1)
    m_hi = min(cols - 1, math.ceil(box.x2 / stride - 0.5) - 1)
    n_lo = max(0, math.floor(box.y / stride - 0.5) + 1)
    n_hi = min(rows - 1, math.ceil(box.y2 / stride - 0.5) - 1)
    for n in range(n_lo, n_hi + 1):
        for m in range(m_lo, m_hi + 1):
            loc = cell_center(m, n, stride)
            if box.contains_point(*loc, strict=True):
                yield m, n, loc


def _level_targets(box: HBox, stride: float, cols: int, rows: int, lo: float, hi: float):
    """(m, n, distances) for interior cells whose max side distance lies in (lo, hi]."""
    m_lo = max(0, math.floor(box.x / stride - 0.5) + 1)
    m_hi = min(cols - 1, math.ceil(box.x2 / stride - 0.5) - 1)
    n_lo = max(0, math.floor(box.y / stride - 0.5) + 1)
    n_hi = min(rows - 1, math.ceil(box.y2 / stride - 0.5) - 1)
    if m_lo > m_hi or n_lo > n_hi:
        return
    ms = np.arange(m_lo, m_hi + 1)
    ns = np.arange(n_lo, n_hi + 1)
    px, py = np.meshgrid((ms + 0.5) * stride, (ns + 0.5) * stride)
    # same operations as encode_af, so values match it exactly
    dist = np.stack([py - box.y, px - box.x, box.y2 - py, box.x2 - px], axis=-1)
    reach = dist.max(axis=-1)
    keep = (dist.min(axis=-1) > 0) & (reach > lo) & (reach <= hi)
    for j, i in zip(*np.nonzero(keep)):
        yield int(ms[i]), int(ns[j]), tuple(float(v) for v in dist[j, i])


def _claim_nearest(claims, gi: int, gt: HBox, pyramid: PyramidConfig) -> bool:
    # level paling halus dulu, lalu sel kosong terdekat ke pusat gt
    for level_id in pyramid.level_ids:
        stride = pyramid.stride_of(level_id)
        cols, rows = pyramid.grid_shape(level_id)
        cells = sorted(_interior_cells(gt, stride, cols, rows),
                       key=lambda c: ((c[2][0] - gt.cx) ** 2 + (c[2][1] - gt.cy) ** 2, c[1], c[0]))
        for m, n, loc in cells:
            if (level_id, m, n) not in claims:
                claims[(level_id, m, n)] = (gt.area(), gi, encode_af(gt, loc))
                return True
    return False


def assign_af_targets(gts: Sequence[HBox], pyramid: PyramidConfig,
                      ranges: Sequence[tuple[float, float]] = DEFAULT_AF_RANGES,
                      ensure_coverage: bool = False) -> list[LocationTarget]:
    """Anchor-free regression targets: each interior location goes to the
    smallest-area gt whose max side distance falls in the level's range.

    With ensure_coverage, a gt left without any location gets the free interior
    cell nearest to its center, finest level first, regardless of the ranges.
    """
    if len(ranges) != len(pyramid.strides):
        raise ConfigurationError(
            f"{len(ranges)} regression ranges for {len(pyramid.strides)} pyramid levels")

    claims: dict[tuple[int, int, int], tuple[float, int, Distances]] = {}
    for level_id, (lo, hi) in zip(pyramid.level_ids, ranges):
        stride = pyramid.stride_of(level_id)
        cols, rows = pyramid.grid_shape(level_id)
        for gi, gt in enumerate(gts):
            # interior max distances span [max(w, h) / 2, max(w, h))
            if max(gt.w, gt.h) * 0.5 > hi or max(gt.w, gt.h) <= lo:
                continue
            for m, n, dist in _level_targets(gt, stride, cols, rows, lo, hi):
                key = (level_id, m, n)
                held = claims.get(key)
                if held is None or (gt.area(), gi) < (held[0], held[1]):
                    claims[key] = (gt.area(), gi, dist)

    if ensure_coverage:
        covered = {gi for _, gi, _ in claims.values()}
        for gi, gt in enumerate(gts):
            if gi not in covered and not _claim_nearest(claims, gi, gt, pyramid):
                logger.debug("gt %d (%s) has no free interior cell", gi, gt.as_xywh())

    return [LocationTarget(level, m, n, gi, dist)
            for (level, m, n), (_, gi, dist) in sorted(claims.items(),
                                                       key=lambda kv: (kv[0][0], kv[0][2], kv[0][1]))]
