"""
Dense horizontal anchor grid over the feature-pyramid levels P_2..P_6.

Layout per level: cells are enumerated row-major (n outer, m inner) and each
cell holds one anchor per (scale, ratio) pair, scale-major. An anchor at cell
(m, n) is centered at ((m + 0.5) * stride, (n + 0.5) * stride) and for ratio
r = h / w has w = size / sqrt(r), h = size * sqrt(r), size = scale * stride.
"""
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigurationError
from .engine_geometry import HBox, boxes_to_array, iou_matrix_hbb

logger = logging.getLogger(__name__)

PLUS_ANCHOR_SCALES = (2.0, 4.0)


def _frozen(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class PyramidConfig:
    strides: tuple[int, ...] = (4, 8, 16, 32, 64)
    base_scale: float = 8.0
    ratios: tuple[float, ...] = (0.5, 1.0, 2.0)
    image_w: int = 1024
    image_h: int = 1024
    extra_scales: tuple[float, ...] = ()
    clip_border: bool = False
    first_level: int = 2

    def __post_init__(self):
        object.__setattr__(self, 'strides', tuple(int(s) for s in self.strides))
        object.__setattr__(self, 'ratios', tuple(float(r) for r in self.ratios))
        object.__setattr__(self, 'extra_scales', tuple(float(s) for s in self.extra_scales))
        object.__setattr__(self, 'base_scale', float(self.base_scale))

        if not self.strides:
            raise ConfigurationError("at least one pyramid stride is required")
        if any(s <= 0 for s in self.strides):
            raise ConfigurationError(f"strides must be positive, got {self.strides}")
        if any(b <= a for a, b in zip(self.strides, self.strides[1:])):
            raise ConfigurationError(f"strides must be strictly increasing, got {self.strides}")
        if self.base_scale <= 0 or any(s <= 0 for s in self.extra_scales):
            raise ConfigurationError("anchor scales must be positive")
        if not self.ratios or any(r <= 0 for r in self.ratios):
            raise ConfigurationError(f"aspect ratios must be positive, got {self.ratios}")
        if self.image_w <= 0 or self.image_h <= 0:
            raise ConfigurationError(
                f"image dimensions must be positive, got {self.image_w}x{self.image_h}")

    @property
    def scales(self) -> tuple[float, ...]:
        return tuple(sorted(set(self.extra_scales) | {self.base_scale}))

    @property
    def level_ids(self) -> tuple[int, ...]:
        return tuple(range(self.first_level, self.first_level + len(self.strides)))

    @property
    def anchors_per_cell(self) -> int:
        return len(self.scales) * len(self.ratios)

    def stride_of(self, level: int) -> int:
        index = level - self.first_level
        if not 0 <= index < len(self.strides):
            raise ConfigurationError(f"pyramid level P_{level} is not configured")
        return self.strides[index]

    def grid_shape(self, level: int) -> tuple[int, int]:
        """(cols, rows) of the feature map at a level."""
        stride = self.stride_of(level)
        return (math.ceil(self.image_w / stride), math.ceil(self.image_h / stride))

    def for_image(self, image_w: int, image_h: int) -> 'PyramidConfig':
        return replace(self, image_w=int(image_w), image_h=int(image_h))


def plus_anchor_preset(cfg: PyramidConfig | None = None) -> PyramidConfig:
    """Ablation preset with scales {2, 4, 8} on every level."""
    return replace(cfg or PyramidConfig(), extra_scales=PLUS_ANCHOR_SCALES)


@dataclass(frozen=True)
class AnchorLevel:
    level_id: int
    stride: int
    cols: int
    rows: int
    boxes: np.ndarray  # (N, 4) x, y, w, h
    cells: np.ndarray  # (N, 2) m, n
    anchor_idx: np.ndarray  # (N,) slot within the cell

    def __len__(self) -> int:
        return int(self.boxes.shape[0])


@dataclass(frozen=True)
class AnchorSet:
    """Flat view of candidate boxes: grid anchors or an arbitrary proposal list."""

    boxes: np.ndarray
    level_ids: np.ndarray
    indices: np.ndarray

    def __len__(self) -> int:
        return int(self.boxes.shape[0])

    def box(self, i: int) -> HBox:
        x, y, w, h = self.boxes[i]
        return HBox(x, y, w, h)

    @classmethod
    def from_boxes(cls, boxes: Sequence[HBox], level: int = 0) -> 'AnchorSet':
        arr = boxes_to_array(boxes)
        n = arr.shape[0]
        return cls(_frozen(arr),
                   _frozen(np.full(n, level, dtype=np.int64)),
                   _frozen(np.arange(n, dtype=np.int64)))


@dataclass(frozen=True)
class AnchorGrid:
    config: PyramidConfig
    levels: tuple[AnchorLevel, ...] = field(default_factory=tuple)

    def count(self) -> int:
        return sum(len(level) for level in self.levels)

    def level(self, level_id: int) -> AnchorLevel:
        for level in self.levels:
            if level.level_id == level_id:
                return level
        raise KeyError(f"no anchors for level P_{level_id}")

    def index_of(self, level_id: int, m: int, n: int, slot: int) -> int:
        level = self.level(level_id)
        per_cell = self.config.anchors_per_cell
        if not (0 <= m < level.cols and 0 <= n < level.rows and 0 <= slot < per_cell):
            raise IndexError(f"cell ({m}, {n}) slot {slot} outside P_{level_id}")
        return (n * level.cols + m) * per_cell + slot

    def box(self, level_id: int, idx: int) -> HBox:
        x, y, w, h = self.level(level_id).boxes[idx]
        return HBox(x, y, w, h)

    def flatten(self) -> AnchorSet:
        if not self.levels:
            return AnchorSet.from_boxes([])
        boxes = np.concatenate([lvl.boxes for lvl in self.levels])
        level_ids = np.concatenate([np.full(len(lvl), lvl.level_id, dtype=np.int64)
                                    for lvl in self.levels])
        indices = np.concatenate([np.arange(len(lvl), dtype=np.int64) for lvl in self.levels])
        return AnchorSet(_frozen(boxes), _frozen(level_ids), _frozen(indices))


def _level_anchors(cfg: PyramidConfig, level_id: int) -> AnchorLevel:
    stride = cfg.stride_of(level_id)
    cols, rows = cfg.grid_shape(level_id)
    templates = np.array([(scale * stride / math.sqrt(r), scale * stride * math.sqrt(r))
                          for scale in cfg.scales for r in cfg.ratios], dtype=np.float64)
    k = templates.shape[0]

    nn, mm = np.meshgrid(np.arange(rows), np.arange(cols), indexing='ij')
    mm, nn = mm.ravel(), nn.ravel()
    cx = np.repeat((mm + 0.5) * stride, k)
    cy = np.repeat((nn + 0.5) * stride, k)
    w = np.tile(templates[:, 0], cols * rows)
    h = np.tile(templates[:, 1], cols * rows)
    x1, y1 = cx - 0.5 * w, cy - 0.5 * h

    if cfg.clip_border:
        x2 = np.minimum(x1 + w, float(cfg.image_w))
        y2 = np.minimum(y1 + h, float(cfg.image_h))
        x1, y1 = np.maximum(x1, 0.0), np.maximum(y1, 0.0)
        w, h = x2 - x1, y2 - y1

    boxes = np.stack([x1, y1, w, h], axis=1)
    cells = np.stack([np.repeat(mm, k), np.repeat(nn, k)], axis=1).astype(np.int64)
    slots = np.tile(np.arange(k, dtype=np.int64), cols * rows)
    return AnchorLevel(level_id, stride, cols, rows, _frozen(boxes), _frozen(cells), _frozen(slots))


def generate_anchors(cfg: PyramidConfig) -> AnchorGrid:
    levels = tuple(_level_anchors(cfg, level_id) for level_id in cfg.level_ids)
    grid = AnchorGrid(cfg, levels)
    logger.debug("generated %d anchors for %dx%d over %d levels",
                 grid.count(), cfg.image_w, cfg.image_h, len(levels))
    return grid


def anchors_overlapping(grid: AnchorGrid, gt: HBox, min_iou: float) -> list[tuple[int, int, float]]:
    """Every anchor with IoU >= min_iou (and > 0) against gt, best first.

    Ties are ordered by level then index so the listing is deterministic.
    """
    gt_arr = boxes_to_array([gt])
    hits: list[tuple[int, int, float]] = []
    for level in grid.levels:
        ious = iou_matrix_hbb(gt_arr, level.boxes)[0]
        keep = np.nonzero((ious >= min_iou) & (ious > 0.0))[0]
        hits.extend((level.level_id, int(i), float(ious[i])) for i in keep)
    hits.sort(key=lambda hit: (-hit[2], hit[0], hit[1]))
    return hits
