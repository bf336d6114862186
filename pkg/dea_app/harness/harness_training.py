"""
Training-loss dry run over a screened tile.

The rows of a tile's prediction file stand in for the network outputs and the
discriminator's labels supply the targets, so the loss of a prediction source
can be measured without a training loop.
"""
import logging
from collections.abc import Sequence

from ..errors import PredictionFormatError
from ..engine.engine_anchors import AnchorGrid, PyramidConfig
from ..engine.engine_codec import DEFAULT_AF_RANGES, DeltaVector, PredVector, assign_af_targets, encode_delta
from ..engine.engine_discriminator import LABEL_DISCARD, LABEL_POSITIVE, AssignmentResult
from ..engine.engine_geometry import HBox
from ..engine.engine_losses import AnchorSample, LocationSample, LossConfig, LossReport, total_loss
from .harness_predictions import AnchorPrediction, PredictionSet

logger = logging.getLogger(__name__)

LOSS_COLUMNS = ['l_ab_cls', 'l_ab_reg', 'l_af_cls', 'l_af_reg', 'l_af_center', 'l_total']

ZERO_DELTA = DeltaVector(0.0, 0.0, 0.0, 0.0)
MIN_DISTANCE = 1e-3


def _fit(scores: Sequence[float], n_classes: int) -> tuple[float, ...]:
    return tuple(scores[:n_classes]) + (0.0,) * max(0, n_classes - len(scores))


def _rows_by_anchor(grid: AnchorGrid, predictions: Sequence[AnchorPrediction]):
    rows: dict[tuple[int, int], AnchorPrediction] = {}
    for p in predictions:
        try:
            key = (p.level, grid.index_of(p.level, p.m, p.n, p.anchor_idx))
        except (KeyError, IndexError) as exc:
            raise PredictionFormatError(f"anchor reference out of range: {exc}")
        held = rows.get(key)
        if held is None or p.score > held.score:
            rows[key] = p
    return rows


def anchor_samples(result: AssignmentResult, grid: AnchorGrid, predictions: Sequence[AnchorPrediction],
                   gts: Sequence[HBox], n_classes: int) -> list[AnchorSample]:
    """Labeled anchors of `result` scored by the AB rows; discarded anchors are left out.

    An anchor without a row predicts background with zero deltas.
    """
    rows = _rows_by_anchor(grid, predictions)
    anchors = result.anchors
    samples = []
    for i in range(len(anchors)):
        label = int(result.labels[i])
        if label == LABEL_DISCARD:
            continue
        p = rows.get((int(anchors.level_ids[i]), int(anchors.indices[i])))
        scores = tuple(p.score if p is not None and k == p.class_id else 0.0 for k in range(n_classes))
        if label != LABEL_POSITIVE:
            samples.append(AnchorSample(scores))
            continue
        gt = gts[int(result.matched_gt[i])]
        samples.append(AnchorSample(scores, gt.class_id or 0,
                                    p.delta if p is not None else ZERO_DELTA,
                                    encode_delta(anchors.box(i), gt)))
    return samples


def location_samples(vectors: Sequence[PredVector], gts: Sequence[HBox], pyramid: PyramidConfig,
                     n_classes: int, ranges=DEFAULT_AF_RANGES) -> list[LocationSample]:
    """Every AF row as a location sample; rows on a target cell of some gt are positives."""
    targets = {(t.level, t.m, t.n): t for t in assign_af_targets(gts, pyramid, ranges)}
    samples = []
    for v in vectors:
        scores = _fit(v.class_scores, n_classes)
        target = targets.get((v.level, v.m, v.n))
        if target is None:
            samples.append(LocationSample(scores))
            continue
        dist = tuple(max(MIN_DISTANCE, d) for d in v.distances())
        samples.append(LocationSample(scores, gts[target.gt_index].class_id or 0, dist,
                                      target.distances, v.centerness))
    return samples


def tile_loss(result: AssignmentResult, grid: AnchorGrid, predictions: PredictionSet,
              gts: Sequence[HBox], n_classes: int, ranges=DEFAULT_AF_RANGES,
              cfg: LossConfig = LossConfig()) -> LossReport:
    ab = anchor_samples(result, grid, predictions.ab, gts, n_classes)
    af = location_samples(predictions.af, gts, grid.config, n_classes, ranges)
    return total_loss(ab, af, cfg)


def loss_row(report: LossReport) -> tuple[float, ...]:
    values = report.as_dict()
    return tuple(values[column] for column in LOSS_COLUMNS)
