"""
Inference post-processing: decode per-tile predictions, suppress, merge tiles.

In `freeze` mode only the anchor-based stream is decoded and the anchor-free
rows of a prediction file are ignored. `fuse` also decodes the anchor-free
vectors (score = class score x centerness) and runs one joint suppression
over the union.
"""
import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

from ..errors import CodecError, ConfigurationError
from ..engine.engine_anchors import AnchorGrid, PyramidConfig, generate_anchors
from ..engine.engine_codec import DEFAULT_MAX_LOG_RATIO, PredVector, decode_af, decode_delta
from ..engine.engine_nms import DEFAULT_NMS_IOU, DEFAULT_SCORE_THRESH, Detection, IouCounter, nms
from ..datasets.datasets_tiling import Offset, merge_detections
from .harness_predictions import AnchorPrediction, PredictionSet, anchor_box

logger = logging.getLogger(__name__)

INFERENCE_MODES = ('freeze', 'fuse')


@dataclass(frozen=True)
class InferenceConfig:
    nms_iou: float = DEFAULT_NMS_IOU
    score_thresh: float = DEFAULT_SCORE_THRESH
    mode: str = 'freeze'

    def __post_init__(self):
        if self.mode not in INFERENCE_MODES:
            raise ConfigurationError(f"inference mode must be one of {INFERENCE_MODES}, got {self.mode!r}")
        if not 0.0 <= self.nms_iou <= 1.0 or not 0.0 <= self.score_thresh <= 1.0:
            raise ConfigurationError("nms_iou and score_thresh must lie in [0, 1]")


def decode_ab_predictions(preds: Sequence[AnchorPrediction], grid: AnchorGrid) -> list[Detection]:
    dets = []
    for p in preds:
        box = decode_delta(anchor_box(grid, p), p.delta, p.class_id,
                           max_log_ratio=DEFAULT_MAX_LOG_RATIO)
        dets.append(Detection(box, p.score, p.class_id))
    return dets


def decode_af_predictions(vectors: Sequence[PredVector],
                          pyramid: PyramidConfig | None = None) -> list[Detection]:
    dets = []
    for v in vectors:
        try:
            box = decode_af(v, pyramid)
        except CodecError as exc:
            logger.debug("dropping anchor-free row at P_%d (%d, %d): %s", v.level, v.m, v.n, exc)
            continue
        dets.append(Detection(box, v.score * v.centerness, v.class_id))
    return dets


def infer_tile(predictions: PredictionSet, grid: AnchorGrid,
               config: InferenceConfig = InferenceConfig(),
               counter: IouCounter | None = None) -> list[Detection]:
    dets = decode_ab_predictions(predictions.ab, grid)
    if config.mode == 'fuse':
        dets += decode_af_predictions(predictions.af, grid.config)
    return nms(dets, config.nms_iou, config.score_thresh, counter)


def infer_scene(per_tile: Mapping[Offset, PredictionSet], tile_size: Mapping[Offset, tuple],
                pyramid: PyramidConfig = PyramidConfig(),
                config: InferenceConfig = InferenceConfig(),
                counter: IouCounter | None = None) -> list[Detection]:
    """Detections of one image in image coordinates.

    `tile_size` gives (w, h) per tile offset; the anchor grid of each tile is
    built for that size.
    """
    grids: dict[tuple, AnchorGrid] = {}
    per_offset: dict[Offset, list[Detection]] = {}
    for offset in sorted(per_tile):
        size = tuple(tile_size[offset])
        if size not in grids:
            grids[size] = generate_anchors(pyramid.for_image(*size))
        per_offset[offset] = infer_tile(per_tile[offset], grids[size], config, counter)
    return merge_detections(per_offset, config.nms_iou, counter)
