"""
Patch tiling of large aerial images and the way back.

Tiles are `patch_size` squares laid every `stride` pixels; the last offset on
each axis is clamped so the final tile ends on the image edge. Images smaller
than a patch get one tile at offset 0 (padded downstream).
"""
import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

from ..errors import ConfigurationError, GeometryError
from ..engine.engine_geometry import HBox, Polygon, clip_convex, min_area_rect, obox_to_polygon
from ..engine.engine_nms import DEFAULT_NMS_IOU, Detection, IouCounter, nms
from .datasets_dota import AnnotatedObject, SceneAnnotation, make_object, obox_quad

logger = logging.getLogger(__name__)

Offset = tuple[int, int]

TILE_SEPARATOR = '__'


@dataclass(frozen=True)
class TilingConfig:
    patch_size: int = 1024
    stride: int = 824
    crop_retention: float = 0.5

    def __post_init__(self):
        if not self.patch_size >= self.stride > 0:
            raise ConfigurationError(
                f"tiling needs patch_size >= stride > 0, got {self.patch_size}/{self.stride}")
        if not 0.0 < self.crop_retention <= 1.0:
            raise ConfigurationError(f"crop_retention must lie in (0, 1], got {self.crop_retention}")


@dataclass(frozen=True)
class TilePlan:
    image_w: int
    image_h: int
    patch_size: int
    stride: int
    x_offsets: tuple[int, ...]
    y_offsets: tuple[int, ...]

    @property
    def offsets(self) -> list[Offset]:
        return [(ox, oy) for oy in self.y_offsets for ox in self.x_offsets]

    def __len__(self) -> int:
        return len(self.x_offsets) * len(self.y_offsets)

    @property
    def tile_size(self) -> tuple[int, int]:
        """(w, h) of every tile; images smaller than a patch keep their own extent."""
        return (min(self.patch_size, self.image_w) or self.patch_size,
                min(self.patch_size, self.image_h) or self.patch_size)


def axis_offsets(dim: int, patch: int, stride: int) -> list[int]:
    offsets = [0]
    while offsets[-1] + patch < dim:
        offsets.append(min(offsets[-1] + stride, dim - patch))
    return offsets


def plan_tiles(image_w: int, image_h: int, patch: int = 1024, stride: int = 824) -> TilePlan:
    if not patch >= stride > 0:
        raise ConfigurationError(f"tiling needs patch >= stride > 0, got {patch}/{stride}")
    return TilePlan(int(image_w), int(image_h), int(patch), int(stride),
                    tuple(axis_offsets(image_w, patch, stride)),
                    tuple(axis_offsets(image_h, patch, stride)))


def tile_id(image_id: str, offset: Offset, single: bool = False) -> str:
    """Name of a tile; a plan with a single tile at the origin keeps the image id."""
    if single and offset == (0, 0):
        return image_id
    return f"{image_id}{TILE_SEPARATOR}{offset[0]}{TILE_SEPARATOR}{offset[1]}"


def parse_tile_id(name: str) -> tuple[str, Offset]:
    parts = name.rsplit(TILE_SEPARATOR, 2)
    if len(parts) == 3 and parts[1].isdigit() and parts[2].isdigit():
        return parts[0], (int(parts[1]), int(parts[2]))
    return name, (0, 0)


def to_global(point: tuple[float, float], offset: Offset) -> tuple[float, float]:
    return (point[0] + offset[0], point[1] + offset[1])


def to_tile(point: tuple[float, float], offset: Offset) -> tuple[float, float]:
    return (point[0] - offset[0], point[1] - offset[1])


def _shift_quad(quad: Sequence[float], dx: float, dy: float) -> tuple[float, ...]:
    return tuple(v + (dx if i % 2 == 0 else dy) for i, v in enumerate(quad))


def _window(offset: Offset, size: tuple[int, int]) -> Polygon:
    return Polygon.from_hbox(HBox(offset[0], offset[1], size[0], size[1]))


def tile_share(obj: AnnotatedObject, offset: Offset, size: tuple[int, int]) -> float:
    """Fraction of the object area inside the tile."""
    shape = obox_to_polygon(obj.obox)
    return clip_convex(shape, _window(offset, size)).area() / shape.area()


def crop_object(obj: AnnotatedObject, offset: Offset, size: tuple[int, int],
                retention: float = 0.5) -> AnnotatedObject | None:
    """The object in tile coordinates, clipped to the tile, or None when too little of it is inside."""
    window = _window(offset, size)
    shape = obox_to_polygon(obj.obox)
    dx, dy = -offset[0], -offset[1]
    x1, y1, x2, y2 = shape.bounds()
    wx1, wy1, wx2, wy2 = window.bounds()
    if wx1 <= x1 and wy1 <= y1 and x2 <= wx2 and y2 <= wy2:
        return make_object(_shift_quad(obj.quad, dx, dy), obj.category, obj.difficult)
    inside = clip_convex(shape, window)
    if inside.is_empty or inside.area() < retention * shape.area():
        return None
    try:
        clipped = min_area_rect(inside.vertices)
    except GeometryError:
        return None
    return make_object(_shift_quad(obox_quad(clipped), dx, dy), obj.category, obj.difficult)


def crop_annotations(scene: SceneAnnotation, offset: Offset, patch: int = 1024,
                     retention: float = 0.5, single: bool = False) -> SceneAnnotation:
    """Objects of one tile in tile coordinates.

    An object is kept when at least `retention` of its area falls inside the
    tile; partially covered objects are clipped to the tile first.
    """
    tile_w = min(patch, scene.image_w) or patch
    tile_h = min(patch, scene.image_h) or patch
    kept = []
    for obj in scene.objects:
        cropped = crop_object(obj, offset, (tile_w, tile_h), retention)
        if cropped is not None:
            kept.append(cropped)
    return SceneAnnotation(tile_id(scene.image_id, offset, single), tile_w, tile_h, tuple(kept))


def crop_scene(scene: SceneAnnotation, config: TilingConfig = TilingConfig()) -> list[SceneAnnotation]:
    plan = plan_tiles(scene.image_w, scene.image_h, config.patch_size, config.stride)
    single = len(plan) == 1
    tiles = [crop_annotations(scene, offset, config.patch_size, config.crop_retention, single)
             for offset in plan.offsets]
    logger.debug("%s: %d tiles, %d objects in, %d kept across tiles", scene.image_id,
                 len(tiles), len(scene.objects), sum(len(t.objects) for t in tiles))
    return tiles


def merge_detections(per_tile: Mapping[Offset, Sequence[Detection]],
                     nms_iou: float = DEFAULT_NMS_IOU,
                     counter: IouCounter | None = None) -> list[Detection]:
    """Translate tile detections to image coordinates and suppress cross-tile duplicates."""
    merged: list[Detection] = []
    for offset in sorted(per_tile):
        merged.extend(det.translated(offset[0], offset[1]) for det in per_tile[offset])
    return nms(merged, iou_thresh=nms_iou, score_thresh=0.0, counter=counter)
