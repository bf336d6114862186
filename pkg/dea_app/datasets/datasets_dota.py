"""
DOTA-style annotation files.

One object per line: `x1 y1 x2 y2 x3 y3 x4 y4 category difficult`. Header
lines `imagesource:` and `gsd:` are skipped, and an optional `imagesize: W H`
header fixes the image extent (otherwise it is inferred from the quads).
Quads become oriented boxes through the minimum-area enclosing rectangle.
"""
import logging
import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import AnnotationParseError, GeometryError
from ..engine.engine_geometry import HBox, OBox, hbb_of, min_area_rect, obox_to_polygon
from ..engine.engine_nms import Detection

logger = logging.getLogger(__name__)

# urutan kelas mengikuti tabel hasil DOTA yang umum
DOTA_CLASSES: tuple[str, ...] = (
    'plane', 'baseball-diamond', 'bridge', 'ground-track-field', 'small-vehicle',
    'large-vehicle', 'ship', 'tennis-court', 'basketball-court', 'storage-tank',
    'soccer-ball-field', 'roundabout', 'harbor', 'swimming-pool', 'helicopter',
)

DOTA_ABBREVIATIONS = {
    'plane': 'PL', 'baseball-diamond': 'BD', 'bridge': 'BR', 'ground-track-field': 'GTF',
    'small-vehicle': 'SV', 'large-vehicle': 'LV', 'ship': 'SH', 'tennis-court': 'TC',
    'basketball-court': 'BC', 'storage-tank': 'ST', 'soccer-ball-field': 'SBF',
    'roundabout': 'RA', 'harbor': 'HA', 'swimming-pool': 'SP', 'helicopter': 'HC',
}

SKIPPED_HEADERS = ('imagesource:', 'gsd:')
SIZE_HEADER = 'imagesize:'

Quad = tuple[float, float, float, float, float, float, float, float]


@dataclass(frozen=True)
class Vocabulary:
    names: tuple[str, ...] = DOTA_CLASSES

    def __len__(self) -> int:
        return len(self.names)

    def __contains__(self, name: str) -> bool:
        return name in self.names

    def index(self, name: str) -> int:
        return self.names.index(name)

    def resolve(self, token: str) -> int:
        """Class id for a category name or a plain integer index."""
        if token in self.names:
            return self.names.index(token)
        if token.lstrip('-').isdigit():
            idx = int(token)
            if 0 <= idx < len(self.names):
                return idx
        raise KeyError(token)

    def name(self, class_id: int) -> str:
        return self.names[class_id]

    def extended(self, extra: Iterable[str]) -> 'Vocabulary':
        added = sorted(set(extra) - set(self.names))
        return Vocabulary(self.names + tuple(added)) if added else self


DOTA_VOCABULARY = Vocabulary()


@dataclass(frozen=True)
class ParseIssue:
    line_no: int
    message: str


@dataclass(frozen=True)
class AnnotatedObject:
    quad: Quad
    category: str
    difficult: int
    obox: OBox

    @property
    def hbox(self) -> HBox:
        return hbb_of(self.obox)


@dataclass(frozen=True)
class SceneAnnotation:
    image_id: str
    image_w: int
    image_h: int
    objects: tuple[AnnotatedObject, ...] = field(default_factory=tuple)

    def categories(self) -> list[str]:
        return [obj.category for obj in self.objects]

    def gt_hboxes(self, vocabulary: Vocabulary = DOTA_VOCABULARY) -> list[HBox]:
        return [obj.hbox.with_class(vocabulary.index(obj.category)) for obj in self.objects]

    def gt_oboxes(self, vocabulary: Vocabulary = DOTA_VOCABULARY) -> list[OBox]:
        return [obj.obox.with_class(vocabulary.index(obj.category)) for obj in self.objects]


def quad_to_obox(quad: Sequence[float]) -> OBox:
    points = list(zip(quad[0::2], quad[1::2]))
    return min_area_rect(points).canonical()


def make_object(quad: Sequence[float], category: str, difficult: int = 0) -> AnnotatedObject:
    quad = tuple(float(v) for v in quad)
    return AnnotatedObject(quad, category, int(difficult), quad_to_obox(quad))


def object_from_hbox(box: HBox, category: str, difficult: int = 0) -> AnnotatedObject:
    quad = (box.x, box.y, box.x2, box.y, box.x2, box.y2, box.x, box.y2)
    return AnnotatedObject(quad, category, int(difficult), OBox.from_hbox(box).canonical())


def obox_quad(box: OBox) -> Quad:
    return tuple(c for vertex in obox_to_polygon(box).vertices for c in vertex)


def _parse_size(tokens: list[str]) -> tuple[int, int]:
    w, h = int(tokens[0]), int(tokens[1])
    if w <= 0 or h <= 0:
        raise ValueError("image size must be positive")
    return w, h


def parse_annotations(text: str | bytes, image_id: str = '', strict: bool = False,
                      vocabulary: Vocabulary = DOTA_VOCABULARY) -> SceneAnnotation:
    """Parse one annotation file.

    Raises AnnotationParseError carrying every issue and the partial scene when
    any line is malformed; never raises anything else.
    """
    if isinstance(text, (bytes, bytearray)):
        text = bytes(text).decode('utf-8', errors='replace')

    objects: list[AnnotatedObject] = []
    issues: list[ParseIssue] = []
    size: tuple[int, int] | None = None

    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        lowered = line.lower()
        if lowered.startswith(SKIPPED_HEADERS):
            continue
        if lowered.startswith(SIZE_HEADER):
            try:
                size = _parse_size(line[len(SIZE_HEADER):].split())
            except (ValueError, IndexError):
                issues.append(ParseIssue(line_no, f"bad image size header: {line!r}"))
            continue

        tokens = line.split()
        if len(tokens) not in (9, 10):
            issues.append(ParseIssue(line_no, f"expected 9 or 10 fields, got {len(tokens)}"))
            continue
        try:
            quad = tuple(float(t) for t in tokens[:8])
        except ValueError:
            issues.append(ParseIssue(line_no, "non-numeric coordinate"))
            continue
        if not all(math.isfinite(v) for v in quad):
            issues.append(ParseIssue(line_no, "non-finite coordinate"))
            continue

        category = tokens[8]
        if strict and category not in vocabulary:
            issues.append(ParseIssue(line_no, f"unknown category {category!r}"))
            continue

        difficult = 0
        if len(tokens) == 10:
            if tokens[9] not in ('0', '1'):
                issues.append(ParseIssue(line_no, f"difficult flag must be 0 or 1, got {tokens[9]!r}"))
                continue
            difficult = int(tokens[9])

        try:
            objects.append(make_object(quad, category, difficult))
        except (GeometryError, ValueError, OverflowError) as exc:
            issues.append(ParseIssue(line_no, f"degenerate quad: {exc}"))

    if size is None:
        xs = [v for obj in objects for v in obj.quad[0::2]]
        ys = [v for obj in objects for v in obj.quad[1::2]]
        size = (max(0, math.ceil(max(xs))) if xs else 0, max(0, math.ceil(max(ys))) if ys else 0)

    scene = SceneAnnotation(image_id, size[0], size[1], tuple(objects))
    if issues:
        raise AnnotationParseError(issues, scene)
    return scene


def read_annotation_file(path: str | Path, strict: bool = False,
                         vocabulary: Vocabulary = DOTA_VOCABULARY) -> SceneAnnotation:
    path = Path(path)
    return parse_annotations(path.read_bytes(), path.stem, strict, vocabulary)


def _fmt(value: float) -> str:
    return f"{value:.6f}".rstrip('0').rstrip('.') or '0'


def format_annotations(scene: SceneAnnotation) -> str:
    lines = [f"{SIZE_HEADER} {scene.image_w} {scene.image_h}"]
    for obj in scene.objects:
        coords = ' '.join(_fmt(v) for v in obj.quad)
        lines.append(f"{coords} {obj.category} {obj.difficult}")
    return '\n'.join(lines) + '\n'


def write_annotation_file(scene: SceneAnnotation, directory: str | Path) -> Path:
    path = Path(directory) / f"{scene.image_id}.txt"
    path.write_text(format_annotations(scene), encoding='utf-8')
    return path


# ---- detection result files -----------------------------------------------

def format_detection(image_id: str, det: Detection, vocabulary: Vocabulary = DOTA_VOCABULARY,
                     oriented: bool = False) -> str:
    """`image_id score x y w h class` or, oriented, `image_id score x1 y1 .. x4 y4 class`."""
    category = vocabulary.name(det.class_id)
    if oriented:
        box = det.box if isinstance(det.box, OBox) else OBox.from_hbox(det.box)
        coords = ' '.join(_fmt(v) for v in obox_quad(box))
    else:
        box = det.box if isinstance(det.box, HBox) else hbb_of(det.box)
        coords = ' '.join(_fmt(v) for v in box.as_xywh())
    return f"{image_id} {det.score:.6f} {coords} {category}"


def write_detection_file(path: str | Path, detections: dict[str, Sequence[Detection]],
                         vocabulary: Vocabulary = DOTA_VOCABULARY, oriented: bool = False) -> Path:
    path = Path(path)
    lines = [format_detection(image_id, det, vocabulary, oriented)
             for image_id in sorted(detections) for det in detections[image_id]]
    path.write_text(''.join(line + '\n' for line in lines), encoding='utf-8')
    return path


def parse_detections(text: str | bytes,
                     vocabulary: Vocabulary = DOTA_VOCABULARY) -> tuple[dict[str, list[Detection]], list[ParseIssue]]:
    """Detections grouped by image id, plus any malformed lines."""
    if isinstance(text, (bytes, bytearray)):
        text = bytes(text).decode('utf-8', errors='replace')
    grouped: dict[str, list[Detection]] = {}
    issues: list[ParseIssue] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split()
        if not tokens:
            continue
        if len(tokens) not in (7, 11):
            issues.append(ParseIssue(line_no, f"expected 7 or 11 fields, got {len(tokens)}"))
            continue
        try:
            score = float(tokens[1])
            coords = [float(t) for t in tokens[2:-1]]
            class_id = vocabulary.resolve(tokens[-1])
            if len(coords) == 4:
                box = HBox(*coords, class_id=class_id)
            else:
                box = quad_to_obox(coords).with_class(class_id)
            det = Detection(box, score, class_id)
        except KeyError:
            issues.append(ParseIssue(line_no, f"unknown category {tokens[-1]!r}"))
            continue
        except (ValueError, OverflowError) as exc:
            issues.append(ParseIssue(line_no, str(exc)))
            continue
        grouped.setdefault(tokens[0], []).append(det)
    return grouped, issues
