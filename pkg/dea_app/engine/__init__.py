# Re-export the engine surface so callers import from dea_app.engine
from .engine_geometry import (
    HBox,
    OBox,
    Polygon,
    normalize_angle,
    obox_to_polygon,
    hbb_of,
    clip_convex,
    iou_hbb,
    iou_obb,
    iou_any,
    obb_intersection_area,
    boxes_to_array,
    iou_matrix_hbb,
    min_area_rect,
)

from .engine_anchors import (
    PyramidConfig,
    AnchorLevel,
    AnchorSet,
    AnchorGrid,
    plus_anchor_preset,
    generate_anchors,
    anchors_overlapping,
)

from .engine_codec import (
    DEFAULT_AF_RANGES,
    PredVector,
    DeltaVector,
    LocationTarget,
    cell_center,
    decode_distances,
    decode_af,
    encode_af,
    encode_delta,
    decode_delta,
    centerness_target,
    assign_af_targets,
)

from .engine_discriminator import (
    LABEL_POSITIVE,
    LABEL_NEGATIVE,
    LABEL_DISCARD,
    Thresholds,
    ScreenOptions,
    EnhancedSample,
    SampleRef,
    AssignmentResult,
    AssignmentStats,
    as_anchor_set,
    screen,
    iou_histogram,
    assignment_stats,
)

from .engine_losses import (
    LossConfig,
    LossReport,
    AnchorSample,
    LocationSample,
    cross_entropy,
    cross_entropy_grad,
    smooth_l1,
    smooth_l1_grad,
    focal_loss,
    focal_loss_grad,
    iou_loss,
    iou_loss_distances,
    iou_loss_distances_grad,
    total_loss,
)

from .engine_nms import (
    DEFAULT_NMS_IOU,
    DEFAULT_SCORE_THRESH,
    Detection,
    IouCounter,
    nms,
)

__all__ = [
    # Geometry
    'HBox', 'OBox', 'Polygon', 'normalize_angle', 'obox_to_polygon', 'hbb_of',
    'clip_convex', 'iou_hbb', 'iou_obb', 'iou_any', 'obb_intersection_area',
    'boxes_to_array', 'iou_matrix_hbb', 'min_area_rect',
    # Anchors
    'PyramidConfig', 'AnchorLevel', 'AnchorSet', 'AnchorGrid', 'plus_anchor_preset',
    'generate_anchors', 'anchors_overlapping',
    # Codec
    'DEFAULT_AF_RANGES', 'PredVector', 'DeltaVector', 'LocationTarget', 'cell_center',
    'decode_distances', 'decode_af', 'encode_af', 'encode_delta', 'decode_delta',
    'centerness_target', 'assign_af_targets',
    # Discriminator
    'LABEL_POSITIVE', 'LABEL_NEGATIVE', 'LABEL_DISCARD', 'Thresholds', 'ScreenOptions',
    'EnhancedSample', 'SampleRef', 'AssignmentResult', 'AssignmentStats', 'as_anchor_set',
    'screen', 'iou_histogram', 'assignment_stats',
    # Losses
    'LossConfig', 'LossReport', 'AnchorSample', 'LocationSample', 'cross_entropy',
    'cross_entropy_grad', 'smooth_l1', 'smooth_l1_grad', 'focal_loss', 'focal_loss_grad',
    'iou_loss', 'iou_loss_distances', 'iou_loss_distances_grad', 'total_loss',
    # Suppression
    'DEFAULT_NMS_IOU', 'DEFAULT_SCORE_THRESH', 'Detection', 'IouCounter', 'nms',
]
