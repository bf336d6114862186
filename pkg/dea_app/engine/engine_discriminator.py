"""
Interactive sample screening between the anchor-based and anchor-free branches.

For every ground truth g the decoded anchor-free boxes B and the anchors A are
scored by IoU against g. A decoded box joins the enhanced set S_E when it
reaches t_pos and is at least as good as the best anchor for g. Anchors reaching
t_pos join S_P, anchors at or below t_neg against every gt join S_N, and the
rest are discarded. S_E is finally merged into S_P.
"""
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from ..errors import CodecError, ConfigurationError
from .engine_anchors import AnchorGrid, AnchorSet, PyramidConfig
from .engine_codec import PredVector, decode_af
from .engine_geometry import HBox, OBox, boxes_to_array, hbb_of, iou_matrix_hbb, iou_obb

logger = logging.getLogger(__name__)

LABEL_POSITIVE = 1
LABEL_NEGATIVE = 0
LABEL_DISCARD = -1

IOU_MODES = ('hbb', 'obb')
WIRINGS = ('rpn', 'roi', 'both')
ANCHOR_RULES = ('keep', 'compete')

IOU_BIN_WIDTH = 0.05

SAMPLE_COLUMNS = ['image_id', 'level', 'idx', 'label', 'gt_idx', 'iou', 'x', 'y', 'w', 'h']

AF_LEVEL = -1
AF_TAG = 'AF'


@dataclass(frozen=True)
class Thresholds:
    t_pos: float = 0.5
    t_neg: float = 0.3

    def __post_init__(self):
        if not 0.0 <= self.t_neg < self.t_pos <= 1.0:
            raise ConfigurationError(
                f"thresholds need 0 <= t_neg < t_pos <= 1, got t_neg={self.t_neg}, t_pos={self.t_pos}")


@dataclass(frozen=True)
class ScreenOptions:
    iou_mode: str = 'hbb'
    low_quality_rescue: bool = False
    enhanced_wiring: str = 'both'
    anchor_rule: str = 'keep'

    def __post_init__(self):
        if self.iou_mode not in IOU_MODES:
            raise ConfigurationError(f"iou_mode must be one of {IOU_MODES}, got {self.iou_mode!r}")
        if self.enhanced_wiring not in WIRINGS:
            raise ConfigurationError(
                f"enhanced_wiring must be one of {WIRINGS}, got {self.enhanced_wiring!r}")
        if self.anchor_rule not in ANCHOR_RULES:
            raise ConfigurationError(
                f"anchor_rule must be one of {ANCHOR_RULES}, got {self.anchor_rule!r}")


@dataclass(frozen=True)
class EnhancedSample:
    box: HBox
    gt_index: int
    iou: float
    vector_index: int
    level: int


@dataclass(frozen=True)
class SampleRef:
    """Member of the final positive set: an anchor index or an enhanced-sample index."""

    source: str  # 'anchor' | 'af'
    index: int


@dataclass(frozen=True)
class AssignmentResult:
    anchors: AnchorSet
    labels: np.ndarray
    matched_gt: np.ndarray
    anchor_iou: np.ndarray
    s_enhanced: tuple[EnhancedSample, ...]
    s_positive: tuple[SampleRef, ...]
    s_negative: tuple[int, ...]
    wiring: str = 'both'
    skipped_vectors: int = 0

    @property
    def anchor_positives(self) -> tuple[int, ...]:
        return tuple(ref.index for ref in self.s_positive if ref.source == 'anchor')

    @property
    def n_positive(self) -> int:
        return len(self.s_positive)

    def positive_ious(self) -> np.ndarray:
        anchor_part = self.anchor_iou[list(self.anchor_positives)]
        af_part = np.array([s.iou for s in self.s_enhanced], dtype=np.float64)
        return np.concatenate([anchor_part, af_part])

    def _anchor_positive_boxes(self) -> list[tuple[HBox, int]]:
        return [(self.anchors.box(i), int(self.matched_gt[i])) for i in self.anchor_positives]

    def rpn_positives(self) -> list[tuple[HBox, int]]:
        """Positive (box, gt index) pairs fed to the region proposal loss."""
        extra = [(s.box, s.gt_index) for s in self.s_enhanced] if self.wiring in ('rpn', 'both') else []
        return self._anchor_positive_boxes() + extra

    def roi_positives(self) -> list[tuple[HBox, int]]:
        """Positive (box, gt index) pairs handed to RoI-head sampling."""
        extra = [(s.box, s.gt_index) for s in self.s_enhanced] if self.wiring in ('roi', 'both') else []
        return self._anchor_positive_boxes() + extra

    def _rows(self, image_id: str, positives_only: bool):
        for i in range(len(self.anchors)):
            label = int(self.labels[i])
            if label == LABEL_DISCARD or (positives_only and label != LABEL_POSITIVE):
                continue
            gt = int(self.matched_gt[i]) if label == LABEL_POSITIVE else -1
            x, y, w, h = (float(v) for v in self.anchors.boxes[i])
            yield (image_id, int(self.anchors.level_ids[i]), str(int(self.anchors.indices[i])),
                   label, gt, float(self.anchor_iou[i]), x, y, w, h)
        for s in self.s_enhanced:
            yield (image_id, AF_LEVEL, AF_TAG, LABEL_POSITIVE, s.gt_index, s.iou) + s.box.as_xywh()

    def to_lines(self, image_id: str, positives_only: bool = False) -> list[str]:
        return [f"{img} {level} {idx} {label} {gt} {iou:.6f} {x:.4f} {y:.4f} {w:.4f} {h:.4f}"
                for img, level, idx, label, gt, iou, x, y, w, h in self._rows(image_id, positives_only)]

    def assignment_frame(self, image_id: str, positives_only: bool = False) -> pd.DataFrame:
        return pd.DataFrame(list(self._rows(image_id, positives_only)), columns=SAMPLE_COLUMNS)


@dataclass(frozen=True)
class AssignmentStats:
    positives_per_gt: tuple[int, ...]
    histogram: tuple[int, ...]
    n_anchor_based: int
    n_anchor_free: int
    positive_ious: tuple[float, ...] = field(default_factory=tuple)

    @property
    def n_positive(self) -> int:
        return self.n_anchor_based + self.n_anchor_free


AnchorSource = AnchorGrid | AnchorSet | Sequence[HBox]


def as_anchor_set(anchors: AnchorSource) -> AnchorSet:
    if isinstance(anchors, AnchorSet):
        return anchors
    if isinstance(anchors, AnchorGrid):
        return anchors.flatten()
    return AnchorSet.from_boxes(list(anchors))


def _decode_vectors(vectors: Sequence[PredVector], pyramid: PyramidConfig | None):
    boxes, kept = [], []
    for j, v in enumerate(vectors):
        try:
            boxes.append(decode_af(v, pyramid))
        except CodecError as exc:
            logger.debug("skipping anchor-free vector %d: %s", j, exc)
            continue
        kept.append(j)
    return boxes, kept


def _iou_table(gts: Sequence[HBox | OBox], candidates: np.ndarray, iou_mode: str) -> np.ndarray:
    if iou_mode == 'hbb':
        envelopes = [g if isinstance(g, HBox) else hbb_of(g) for g in gts]
        return iou_matrix_hbb(boxes_to_array(envelopes), candidates)

    oriented = [g if isinstance(g, OBox) else OBox.from_hbox(g) for g in gts]
    envelopes = boxes_to_array([hbb_of(g) for g in oriented])
    table = np.zeros((len(oriented), candidates.shape[0]), dtype=np.float64)
    # exact polygon IoU only where envelopes overlap
    rows, cols = np.nonzero(iou_matrix_hbb(envelopes, candidates) > 0.0)
    for g, j in zip(rows, cols):
        x, y, w, h = candidates[j]
        table[g, j] = iou_obb(oriented[g], OBox(x + 0.5 * w, y + 0.5 * h, w, h))
    return table


def screen(gts: Sequence[HBox | OBox], anchors: AnchorSource,
           af_vectors: Sequence[PredVector], th: Thresholds = Thresholds(),
           options: ScreenOptions = ScreenOptions(),
           pyramid: PyramidConfig | None = None) -> AssignmentResult:
    anchor_set = as_anchor_set(anchors)
    n_anchors = len(anchor_set)
    decoded, vector_ids = _decode_vectors(af_vectors, pyramid)
    skipped = len(af_vectors) - len(decoded)

    labels = np.full(n_anchors, LABEL_NEGATIVE, dtype=np.int8)
    matched = np.full(n_anchors, -1, dtype=np.int64)
    anchor_iou = np.zeros(n_anchors, dtype=np.float64)

    if not gts:
        negatives = tuple(range(n_anchors))
        return AssignmentResult(anchor_set, _ro(labels), _ro(matched), _ro(anchor_iou),
                                (), (), negatives, options.enhanced_wiring, skipped)

    ia = _iou_table(gts, anchor_set.boxes, options.iou_mode)
    ib = _iou_table(gts, boxes_to_array(decoded), options.iou_mode)
    n_gts = len(gts)
    best_ia = ia.max(axis=1) if n_anchors else np.zeros(n_gts)
    best_ib = ib.max(axis=1) if decoded else np.zeros(n_gts)

    if n_anchors:
        a_match = ia.argmax(axis=0)
        anchor_iou = ia[a_match, np.arange(n_anchors)]
        positive = anchor_iou >= th.t_pos
        if options.anchor_rule == 'compete':
            positive &= anchor_iou >= best_ib[a_match]
        if options.low_quality_rescue:
            # anchor terbaik tiap gt pindah ke gt itu; gt yang lebih akhir menang untuk anchor bersama
            for g in range(n_gts):
                if best_ia[g] > 0.0:
                    best = ia[g] == best_ia[g]
                    positive |= best
                    a_match = np.where(best, g, a_match)
                    anchor_iou = np.where(best, ia[g], anchor_iou)
        labels = np.where(positive, LABEL_POSITIVE,
                          np.where(anchor_iou <= th.t_neg, LABEL_NEGATIVE, LABEL_DISCARD)).astype(np.int8)
        matched = np.where(positive, a_match, -1).astype(np.int64)

    enhanced: list[EnhancedSample] = []
    if decoded:
        # satu kotak masuk S_E sekali saja, untuk gt lolos dengan IoU terbesar
        passing = (ib >= th.t_pos) & (ib >= best_ia[:, None])
        b_match = np.where(passing, ib, -1.0).argmax(axis=0)
        b_iou = ib[b_match, np.arange(len(decoded))]
        for j in np.nonzero(passing.any(axis=0))[0]:
            v = af_vectors[vector_ids[j]]
            enhanced.append(EnhancedSample(decoded[j], int(b_match[j]), float(b_iou[j]),
                                           vector_ids[j], v.level))

    s_positive = tuple(SampleRef('anchor', int(i)) for i in np.nonzero(labels == LABEL_POSITIVE)[0])
    s_positive += tuple(SampleRef('af', k) for k in range(len(enhanced)))
    s_negative = tuple(int(i) for i in np.nonzero(labels == LABEL_NEGATIVE)[0])

    logger.debug("screened %d gts: %d anchor positives, %d enhanced, %d negatives",
                 n_gts, len(s_positive) - len(enhanced), len(enhanced), len(s_negative))
    return AssignmentResult(anchor_set, _ro(labels), _ro(matched), _ro(anchor_iou),
                            tuple(enhanced), s_positive, s_negative,
                            options.enhanced_wiring, skipped)


def _ro(array: np.ndarray) -> np.ndarray:
    array = np.array(array, copy=True)
    array.setflags(write=False)
    return array


def iou_histogram(ious, bin_width: float = IOU_BIN_WIDTH) -> np.ndarray:
    """Counts per [k*w, (k+1)*w) bin over [0, 1]; IoU 1.0 lands in the last bin."""
    n_bins = int(round(1.0 / bin_width))
    counts = np.zeros(n_bins, dtype=np.int64)
    values = np.asarray(ious, dtype=np.float64)
    if values.size:
        # rounding keeps values like 0.7 in their own bin despite float error
        bins = np.floor(np.round(values / bin_width, 9)).astype(np.int64)
        np.add.at(counts, np.clip(bins, 0, n_bins - 1), 1)
    return counts


def assignment_stats(result: AssignmentResult, gts: Sequence, bin_width: float = IOU_BIN_WIDTH) -> AssignmentStats:
    per_gt = [0] * len(gts)
    for i in result.anchor_positives:
        per_gt[int(result.matched_gt[i])] += 1
    for s in result.s_enhanced:
        per_gt[s.gt_index] += 1
    ious = result.positive_ious()
    return AssignmentStats(
        positives_per_gt=tuple(per_gt),
        histogram=tuple(int(c) for c in iou_histogram(ious, bin_width)),
        n_anchor_based=len(result.anchor_positives),
        n_anchor_free=len(result.s_enhanced),
        positive_ious=tuple(float(v) for v in ious),
    )
