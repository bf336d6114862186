from .datasets_dota import (
    DOTA_CLASSES,
    DOTA_ABBREVIATIONS,
    DOTA_VOCABULARY,
    Vocabulary,
    ParseIssue,
    AnnotatedObject,
    SceneAnnotation,
    quad_to_obox,
    make_object,
    object_from_hbox,
    obox_quad,
    parse_annotations,
    read_annotation_file,
    format_annotations,
    write_annotation_file,
    format_detection,
    write_detection_file,
    parse_detections,
)

from .datasets_tiling import (
    TilingConfig,
    TilePlan,
    axis_offsets,
    plan_tiles,
    tile_id,
    parse_tile_id,
    to_global,
    to_tile,
    tile_share,
    crop_object,
    crop_annotations,
    crop_scene,
    merge_detections,
)

__all__ = [
    # DOTA format
    'DOTA_CLASSES', 'DOTA_ABBREVIATIONS', 'DOTA_VOCABULARY', 'Vocabulary', 'ParseIssue',
    'AnnotatedObject', 'SceneAnnotation', 'quad_to_obox', 'make_object', 'object_from_hbox',
    'obox_quad', 'parse_annotations', 'read_annotation_file', 'format_annotations',
    'write_annotation_file', 'format_detection', 'write_detection_file', 'parse_detections',
    # Tiling
    'TilingConfig', 'TilePlan', 'axis_offsets', 'plan_tiles', 'tile_id', 'parse_tile_id',
    'to_global', 'to_tile', 'tile_share', 'crop_object', 'crop_annotations', 'crop_scene',
    'merge_detections',
]
