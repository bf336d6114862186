"""
Seeded synthetic aerial scenes.

Object areas are drawn from four bands (tiny / small / medium / large) with a
configurable tiny share; a fraction of objects get an extreme (>5:1) aspect.
Every scene comes with oracle anchor-free vectors (exact encodes of the ground
truth, optionally perturbed) and jittered proposals standing in for the
anchor-based branch. Large or extreme-ratio objects get degraded anchor-free
vectors and tighter proposals.
"""
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigurationError
from ..engine.engine_anchors import PyramidConfig
from ..engine.engine_codec import DEFAULT_AF_RANGES, PredVector, assign_af_targets, centerness_target
from ..engine.engine_geometry import HBox, iou_hbb
from ..datasets.datasets_dota import DOTA_CLASSES

logger = logging.getLogger(__name__)

BANDS = ('tiny', 'small', 'medium', 'large')
BAND_AREAS = {
    'tiny': (64.0, 512.0),
    'small': (512.0, 4096.0),
    'medium': (4096.0, 16384.0),
    'large': (16384.0, 65536.0),
}
MIN_SIDE = 8.0
EXTREME_RATIO = (5.0, 8.0)
REGULAR_RATIO = (1.0 / 3.0, 3.0)
DEGRADED_AF_NOISE = 0.25
PLACEMENT_TRIES = 50


@dataclass(frozen=True)
class SyntheticSceneSpec:
    seed: int = 0
    image_w: int = 1024
    image_h: int = 1024
    objects_min: int = 4
    objects_max: int = 24
    tiny_fraction: float = 0.3
    extreme_fraction: float = 0.1
    band_counts: tuple[int, int, int, int] | None = None
    af_noise: float = 0.0
    proposal_jitter: float = 0.05
    proposals_per_object: int = 4
    n_classes: int = len(DOTA_CLASSES)
    max_same_class_iou: float = 1.0
    af_ranges: tuple[tuple[float, float], ...] = DEFAULT_AF_RANGES

    def __post_init__(self):
        if self.image_w < 64 or self.image_h < 64:
            raise ConfigurationError("synthetic images must be at least 64x64")
        if not 0 <= self.objects_min <= self.objects_max:
            raise ConfigurationError("need 0 <= objects_min <= objects_max")
        if not 0.0 <= self.tiny_fraction <= 1.0 or not 0.0 <= self.extreme_fraction <= 1.0:
            raise ConfigurationError("fractions must lie in [0, 1]")
        if self.band_counts is not None and (len(self.band_counts) != 4 or min(self.band_counts) < 0):
            raise ConfigurationError("band_counts needs four non-negative counts")
        if self.af_noise < 0 or self.proposal_jitter < 0 or self.proposals_per_object < 0:
            raise ConfigurationError("noise levels and proposal counts must be non-negative")
        if self.n_classes < 1:
            raise ConfigurationError("need at least one class")
        if not 0.0 < self.max_same_class_iou <= 1.0:
            raise ConfigurationError("max_same_class_iou must lie in (0, 1]")
        if any(not 0.0 <= lo < hi for lo, hi in self.af_ranges):
            raise ConfigurationError("af_ranges need 0 <= lo < hi per level")

    def band_weights(self) -> tuple[float, ...]:
        rest = (1.0 - self.tiny_fraction) / 3.0
        return (self.tiny_fraction, rest, rest, rest)


@dataclass(frozen=True)
class SyntheticScene:
    image_id: str
    image_w: int
    image_h: int
    gts: tuple[HBox, ...]
    bands: tuple[str, ...]
    af_vectors: tuple[PredVector, ...] = field(default_factory=tuple)
    proposals: tuple[HBox, ...] = field(default_factory=tuple)


def _draw_bands(spec: SyntheticSceneSpec, rng: np.random.Generator) -> list[str]:
    if spec.band_counts is not None:
        bands = [band for band, count in zip(BANDS, spec.band_counts) for _ in range(count)]
        rng.shuffle(bands)
        return bands
    n = int(rng.integers(spec.objects_min, spec.objects_max + 1))
    picks = rng.choice(len(BANDS), size=n, p=np.array(spec.band_weights()))
    return [BANDS[int(i)] for i in picks]


def _draw_box(band: str, extreme: bool, spec: SyntheticSceneSpec, rng: np.random.Generator) -> HBox:
    lo, hi = BAND_AREAS[band]
    area = float(rng.uniform(lo, hi))
    ratio_lo, ratio_hi = EXTREME_RATIO if extreme else REGULAR_RATIO
    ratio = math.exp(rng.uniform(math.log(ratio_lo), math.log(ratio_hi)))
    if rng.random() < 0.5:
        ratio = 1.0 / ratio
    # sisi pendek minimal MIN_SIDE
    limit = area / (MIN_SIDE * MIN_SIDE)
    ratio = min(max(ratio, 1.0 / limit), limit)
    w, h = math.sqrt(area / ratio), math.sqrt(area * ratio)
    shrink = min(1.0, spec.image_w / w, spec.image_h / h)
    w, h = w * shrink, h * shrink
    x = float(rng.uniform(0.0, spec.image_w - w))
    y = float(rng.uniform(0.0, spec.image_h - h))
    return HBox(x, y, w, h, int(rng.integers(spec.n_classes)))


def _place_objects(bands: Sequence[str], spec: SyntheticSceneSpec,
                   rng: np.random.Generator) -> tuple[list[HBox], list[str]]:
    """Draw one box per band; with max_same_class_iou < 1 a box overlapping a
    placed box of its class too much is redrawn, and dropped after
    PLACEMENT_TRIES failures."""
    gts: list[HBox] = []
    kept: list[str] = []
    for band in bands:
        extreme = rng.random() < spec.extreme_fraction
        for _ in range(PLACEMENT_TRIES):
            box = _draw_box(band, extreme, spec, rng)
            if spec.max_same_class_iou >= 1.0 or all(
                    iou_hbb(box, other) < spec.max_same_class_iou
                    for other in gts if other.class_id == box.class_id):
                gts.append(box)
                kept.append(band)
                break
        else:
            logger.debug("dropping a %s object after %d placement tries", band, PLACEMENT_TRIES)
    return gts, kept


def _is_extreme(box: HBox) -> bool:
    return max(box.w / box.h, box.h / box.w) > EXTREME_RATIO[0]


def is_degraded(band: str, box: HBox) -> bool:
    """Large or extreme-ratio objects get noisy anchor-free vectors and tight proposals."""
    return band == 'large' or _is_extreme(box)


def oracle_vectors(gts: Sequence[HBox], pyramid: PyramidConfig, n_classes: int,
                   noise: Sequence[float] = (), rng: np.random.Generator | None = None,
                   ranges=DEFAULT_AF_RANGES) -> list[PredVector]:
    """Anchor-free vectors that encode each gt exactly, perturbed by a per-gt relative noise."""
    vectors = []
    for target in assign_af_targets(gts, pyramid, ranges, ensure_coverage=True):
        gt = gts[target.gt_index]
        sigma = noise[target.gt_index] if noise else 0.0
        dist = target.distances
        if sigma > 0.0 and rng is not None:
            factors = 1.0 + rng.normal(0.0, sigma, size=4)
            dist = tuple(max(1e-3, d * float(f)) for d, f in zip(dist, factors))
        class_id = gt.class_id if gt.class_id is not None else 0
        scores = tuple(1.0 if k == class_id else 0.0 for k in range(n_classes))
        vectors.append(PredVector(target.m, target.n, target.level, *dist,
                                  class_scores=scores, centerness=centerness_target(dist)))
    return vectors


def _proposals(gts: Sequence[HBox], degraded: Sequence[bool], spec: SyntheticSceneSpec,
               rng: np.random.Generator) -> list[HBox]:
    boxes = []
    for gt, tight in zip(gts, degraded):
        sigma = spec.proposal_jitter * (0.5 if tight else 1.0)
        for _ in range(spec.proposals_per_object):
            dx, dy, dw, dh = rng.normal(0.0, sigma, size=4)
            w, h = gt.w * math.exp(dw), gt.h * math.exp(dh)
            cx, cy = gt.cx + dx * gt.w, gt.cy + dy * gt.h
            boxes.append(HBox(cx - 0.5 * w, cy - 0.5 * h, w, h, gt.class_id))
    return boxes


def generate_scene(spec: SyntheticSceneSpec, index: int = 0,
                   pyramid: PyramidConfig | None = None) -> SyntheticScene:
    rng = np.random.default_rng([spec.seed, index])
    gts, bands = _place_objects(_draw_bands(spec, rng), spec, rng)
    degraded = [is_degraded(band, box) for band, box in zip(bands, gts)]
    noise = [max(spec.af_noise, DEGRADED_AF_NOISE) if bad else spec.af_noise for bad in degraded]

    pyramid = (pyramid or PyramidConfig()).for_image(spec.image_w, spec.image_h)
    vectors = oracle_vectors(gts, pyramid, spec.n_classes, noise, rng, spec.af_ranges)
    proposals = _proposals(gts, degraded, spec, rng)

    scene = SyntheticScene(f"syn{spec.seed}_{index:05d}", spec.image_w, spec.image_h,
                           tuple(gts), tuple(bands), tuple(vectors), tuple(proposals))
    logger.debug("%s: %d objects, %d vectors, %d proposals", scene.image_id,
                 len(gts), len(vectors), len(proposals))
    return scene


def generate_corpus(spec: SyntheticSceneSpec, n_scenes: int,
                    pyramid: PyramidConfig | None = None) -> list[SyntheticScene]:
    return [generate_scene(spec, i, pyramid) for i in range(n_scenes)]
