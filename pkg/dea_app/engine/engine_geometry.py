"""
Box representations and exact intersection-over-union.

Coordinates follow the annotation convention: origin at the image top-left,
x to the right, y downward. Oriented boxes carry their angle in radians,
measured from the +x axis to the w edge, normalized into [-pi/4, 3pi/4).

All values are immutable; every function here is pure and safe to call from
any number of workers.
"""
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace

import numpy as np

from ..errors import GeometryError

logger = logging.getLogger(__name__)

Point = tuple[float, float]

ANGLE_LOW = -math.pi / 4
ANGLE_HIGH = 3 * math.pi / 4

# vertices closer than this (px) are merged while clipping
MERGE_EPS = 1e-9
# |sin| of the turn angle below which a vertex is treated as collinear
COLLINEAR_EPS = 1e-12


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise GeometryError(f"{name} must be finite, got {value!r}")


def _require_extent(w: float, h: float) -> None:
    if w <= 0 or h <= 0:
        raise GeometryError(f"box extents must be positive, got w={w}, h={h}")


def normalize_angle(angle: float) -> float:
    """Fold an angle into [-pi/4, 3pi/4). Values already in range are returned untouched."""
    if not math.isfinite(angle):
        raise GeometryError(f"angle must be finite, got {angle!r}")
    if ANGLE_LOW <= angle < ANGLE_HIGH:
        return angle
    folded = math.fmod(angle - ANGLE_LOW, math.pi)
    if folded < 0:
        folded += math.pi
    result = folded + ANGLE_LOW
    if result >= ANGLE_HIGH:
        result = ANGLE_LOW
    return result


@dataclass(frozen=True)
class HBox:
    """Horizontal box given by its top-left corner and extents."""

    x: float
    y: float
    w: float
    h: float
    class_id: int | None = None

    def __post_init__(self):
        for name in ('x', 'y', 'w', 'h'):
            object.__setattr__(self, name, float(getattr(self, name)))
        _require_finite(x=self.x, y=self.y, w=self.w, h=self.h)
        _require_extent(self.w, self.h)

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    @property
    def cx(self) -> float:
        return self.x + 0.5 * self.w

    @property
    def cy(self) -> float:
        return self.y + 0.5 * self.h

    def area(self) -> float:
        return self.w * self.h

    def as_xywh(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)

    def translated(self, dx: float, dy: float) -> 'HBox':
        return replace(self, x=self.x + dx, y=self.y + dy)

    def with_class(self, class_id: int | None) -> 'HBox':
        return replace(self, class_id=class_id)

    def contains_point(self, px: float, py: float, strict: bool = True) -> bool:
        if strict:
            return self.x < px < self.x2 and self.y < py < self.y2
        return self.x <= px <= self.x2 and self.y <= py <= self.y2

    @classmethod
    def from_corners(cls, x1: float, y1: float, x2: float, y2: float,
                     class_id: int | None = None) -> 'HBox':
        return cls(x1, y1, x2 - x1, y2 - y1, class_id)


@dataclass(frozen=True)
class OBox:
    """Oriented box: center, extents and the angle of the w edge."""

    cx: float
    cy: float
    w: float
    h: float
    angle: float = 0.0
    class_id: int | None = None

    def __post_init__(self):
        for name in ('cx', 'cy', 'w', 'h', 'angle'):
            object.__setattr__(self, name, float(getattr(self, name)))
        _require_finite(cx=self.cx, cy=self.cy, w=self.w, h=self.h)
        _require_extent(self.w, self.h)
        object.__setattr__(self, 'angle', normalize_angle(self.angle))

    def area(self) -> float:
        return self.w * self.h

    def canonical(self) -> 'OBox':
        """Same rectangle with the angle folded into [-pi/4, pi/4), swapping w and h when folding."""
        if self.angle < math.pi / 4:
            return self
        return OBox(self.cx, self.cy, self.h, self.w, self.angle - math.pi / 2, self.class_id)

    def translated(self, dx: float, dy: float) -> 'OBox':
        return replace(self, cx=self.cx + dx, cy=self.cy + dy)

    def with_class(self, class_id: int | None) -> 'OBox':
        return replace(self, class_id=class_id)

    @classmethod
    def from_hbox(cls, box: HBox) -> 'OBox':
        return cls(box.cx, box.cy, box.w, box.h, 0.0, box.class_id)


def _signed_area(vertices: Sequence[Point]) -> float:
    n = len(vertices)
    if n < 3:
        return 0.0
    # shifted to the first vertex to keep the cross terms small
    ox, oy = vertices[0]
    terms = []
    for i in range(1, n - 1):
        ax, ay = vertices[i][0] - ox, vertices[i][1] - oy
        bx, by = vertices[i + 1][0] - ox, vertices[i + 1][1] - oy
        terms.append(ax * by - ay * bx)
    return 0.5 * math.fsum(terms)


@dataclass(frozen=True)
class Polygon:
    """Counter-clockwise polygon. Clockwise input is reversed on construction."""

    vertices: tuple[Point, ...] = ()

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        if _signed_area(verts) < 0:
            verts = tuple(reversed(verts))
        object.__setattr__(self, 'vertices', verts)

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def is_empty(self) -> bool:
        return len(self.vertices) < 3

    def signed_area(self) -> float:
        return _signed_area(self.vertices)

    def area(self) -> float:
        return abs(self.signed_area())

    def centroid(self) -> Point:
        verts = self.vertices
        if not verts:
            raise GeometryError("empty polygon has no centroid")
        ox, oy = verts[0]
        area2 = 0.0
        sx = sy = 0.0
        for i in range(1, len(verts) - 1):
            ax, ay = verts[i][0] - ox, verts[i][1] - oy
            bx, by = verts[i + 1][0] - ox, verts[i + 1][1] - oy
            cross = ax * by - ay * bx
            area2 += cross
            sx += (ax + bx) * cross
            sy += (ay + by) * cross
        if area2 == 0.0:
            n = len(verts)
            return (math.fsum(v[0] for v in verts) / n, math.fsum(v[1] for v in verts) / n)
        return (ox + sx / (3.0 * area2), oy + sy / (3.0 * area2))

    def bounds(self) -> tuple[float, float, float, float]:
        xs = [v[0] for v in self.vertices]
        ys = [v[1] for v in self.vertices]
        return (min(xs), min(ys), max(xs), max(ys))

    @classmethod
    def empty(cls) -> 'Polygon':
        return cls(())

    @classmethod
    def from_hbox(cls, box: HBox) -> 'Polygon':
        return cls(((box.x, box.y), (box.x2, box.y), (box.x2, box.y2), (box.x, box.y2)))


def obox_to_polygon(a: OBox) -> Polygon:
    """Four CCW corners of an oriented box."""
    c, s = math.cos(a.angle), math.sin(a.angle)
    ux, uy = 0.5 * a.w * c, 0.5 * a.w * s
    vx, vy = -0.5 * a.h * s, 0.5 * a.h * c
    return Polygon((
        (a.cx - ux - vx, a.cy - uy - vy),
        (a.cx + ux - vx, a.cy + uy - vy),
        (a.cx + ux + vx, a.cy + uy + vy),
        (a.cx - ux + vx, a.cy - uy + vy),
    ))


def hbb_of(a: OBox) -> HBox:
    """Minimal axis-aligned envelope of an oriented box."""
    x1, y1, x2, y2 = obox_to_polygon(a).bounds()
    return HBox(x1, y1, x2 - x1, y2 - y1, a.class_id)


def _cleanup(vertices: list[Point]) -> Polygon:
    merged: list[Point] = []
    for p in vertices:
        if merged and math.hypot(p[0] - merged[-1][0], p[1] - merged[-1][1]) < MERGE_EPS:
            continue
        merged.append(p)
    while len(merged) > 1 and math.hypot(merged[0][0] - merged[-1][0],
                                          merged[0][1] - merged[-1][1]) < MERGE_EPS:
        merged.pop()

    changed = True
    while changed and len(merged) >= 3:
        changed = False
        n = len(merged)
        for i in range(n):
            ax, ay = merged[i - 1]
            bx, by = merged[i]
            cx, cy = merged[(i + 1) % n]
            abx, aby = bx - ax, by - ay
            bcx, bcy = cx - bx, cy - by
            cross = abx * bcy - aby * bcx
            if abs(cross) <= COLLINEAR_EPS * math.hypot(abx, aby) * math.hypot(bcx, bcy):
                del merged[i]
                changed = True
                break

    if len(merged) < 3:
        return Polygon.empty()
    result = Polygon(tuple(merged))
    if result.area() <= 0.0:
        return Polygon.empty()
    return result


def _crossing(p: Point, q: Point, side_p: float, side_q: float) -> Point:
    t = side_p / (side_p - side_q)
    return (p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1]))


def clip_convex(subject: Polygon, clip: Polygon) -> Polygon:
    """Sutherland-Hodgman clipping of a convex subject by a convex clip polygon.

    Both inputs are CCW; the result is convex, CCW and possibly empty.
    """
    if subject.is_empty or clip.is_empty:
        return Polygon.empty()

    output: list[Point] = list(subject.vertices)
    clip_vertices = clip.vertices
    for i in range(len(clip_vertices)):
        if not output:
            break
        ax, ay = clip_vertices[i - 1]
        bx, by = clip_vertices[i]
        ex, ey = bx - ax, by - ay

        candidates = output
        output = []
        prev = candidates[-1]
        prev_side = ex * (prev[1] - ay) - ey * (prev[0] - ax)
        for cur in candidates:
            cur_side = ex * (cur[1] - ay) - ey * (cur[0] - ax)
            if cur_side >= 0:
                if prev_side < 0:
                    output.append(_crossing(prev, cur, prev_side, cur_side))
                output.append(cur)
            elif prev_side >= 0:
                output.append(_crossing(prev, cur, prev_side, cur_side))
            prev, prev_side = cur, cur_side

    return _cleanup(output)


def iou_hbb(a: HBox, b: HBox) -> float:
    iw = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    ih = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if iw <= 0 or ih <= 0:
        return 0.0
    inter = iw * ih
    union = a.w * a.h + b.w * b.h - inter
    return inter / union


def _obox_key(box: OBox) -> tuple[float, ...]:
    return (box.cx, box.cy, box.w, box.h, box.angle)


def obb_intersection_area(a: OBox, b: OBox) -> float:
    # fixed operand order keeps iou_obb(a, b) == iou_obb(b, a) bit for bit
    first, second = (a, b) if _obox_key(a) <= _obox_key(b) else (b, a)
    inter = clip_convex(obox_to_polygon(first), obox_to_polygon(second)).area()
    return min(inter, a.area(), b.area())


def iou_obb(a: OBox, b: OBox) -> float:
    inter = obb_intersection_area(a, b)
    if inter <= 0.0:
        return 0.0
    union = a.area() + b.area() - inter
    return min(1.0, inter / union)


def iou_any(a, b) -> float:
    """IoU dispatch for mixed inputs: HBox pairs stay horizontal, anything oriented goes through iou_obb."""
    if isinstance(a, HBox) and isinstance(b, HBox):
        return iou_hbb(a, b)
    oa = a if isinstance(a, OBox) else OBox.from_hbox(a)
    ob = b if isinstance(b, OBox) else OBox.from_hbox(b)
    return iou_obb(oa, ob)


def boxes_to_array(boxes: Iterable[HBox]) -> np.ndarray:
    """(N, 4) float64 array of x, y, w, h."""
    rows = [b.as_xywh() for b in boxes]
    if not rows:
        return np.zeros((0, 4), dtype=np.float64)
    return np.asarray(rows, dtype=np.float64)


def iou_matrix_hbb(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Pairwise IoU between (N, 4) and (M, 4) x, y, w, h arrays.

    Uses the same operation order as iou_hbb so entries agree with it exactly.
    """
    a = np.asarray(a, dtype=np.float64).reshape(-1, 4)
    b = np.asarray(b, dtype=np.float64).reshape(-1, 4)
    ax1, ay1 = a[:, 0:1], a[:, 1:2]
    ax2, ay2 = a[:, 0:1] + a[:, 2:3], a[:, 1:2] + a[:, 3:4]
    bx1, by1 = b[None, :, 0], b[None, :, 1]
    bx2, by2 = b[None, :, 0] + b[None, :, 2], b[None, :, 1] + b[None, :, 3]

    iw = np.minimum(ax2, bx2) - np.maximum(ax1, bx1)
    ih = np.minimum(ay2, by2) - np.maximum(ay1, by1)
    overlap = (iw > 0) & (ih > 0)
    inter = np.where(overlap, iw * ih, 0.0)
    union = (a[:, 2:3] * a[:, 3:4]) + (b[None, :, 2] * b[None, :, 3]) - inter
    return np.where(overlap, inter / np.where(overlap, union, 1.0), 0.0)


def _convex_hull(points: Sequence[Point]) -> list[Point]:
    pts = sorted(set((float(x), float(y)) for x, y in points))
    if len(pts) <= 2:
        return pts

    def cross(o, p, q):
        return (p[0] - o[0]) * (q[1] - o[1]) - (p[1] - o[1]) * (q[0] - o[0])

    lower: list[Point] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[Point] = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def min_area_rect(points: Sequence[Point]) -> OBox:
    """Minimum-area enclosing rectangle (rotating calipers over the convex hull)."""
    hull = _convex_hull(points)
    if len(hull) < 3 or _signed_area(hull) <= 0:
        raise GeometryError("points span zero area; no enclosing rectangle")

    best = None
    n = len(hull)
    for i in range(n):
        (px, py), (qx, qy) = hull[i], hull[(i + 1) % n]
        length = math.hypot(qx - px, qy - py)
        if length == 0.0:
            continue
        c, s = (qx - px) / length, (qy - py) / length
        us = [c * x + s * y for x, y in hull]
        vs = [-s * x + c * y for x, y in hull]
        w, h = max(us) - min(us), max(vs) - min(vs)
        area = w * h
        if best is None or area < best[0]:
            um, vm = 0.5 * (max(us) + min(us)), 0.5 * (max(vs) + min(vs))
            best = (area, c * um - s * vm, s * um + c * vm, w, h, math.atan2(s, c))
    _, cx, cy, w, h, angle = best
    return OBox(cx, cy, w, h, angle)
