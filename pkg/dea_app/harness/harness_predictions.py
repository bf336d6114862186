"""
Per-tile prediction files shared by synthetic sources and network exporters.

Each non-comment row is tagged by branch:

    AB level m n anchor_idx class score dx dy dw dh
    AF level m n class score v_t v_l v_b v_r centerness

`anchor_idx` is the slot of the anchor inside cell (m, n); `class` is a
category name or a plain class index.
"""
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import CodecError, PredictionFormatError
from ..engine.engine_anchors import AnchorGrid
from ..engine.engine_codec import DeltaVector, PredVector, encode_delta
from ..engine.engine_geometry import HBox, iou_matrix_hbb, boxes_to_array
from ..datasets.datasets_dota import DOTA_VOCABULARY, Vocabulary

logger = logging.getLogger(__name__)

AB_TAG = 'AB'
AF_TAG = 'AF'


@dataclass(frozen=True)
class AnchorPrediction:
    level: int
    m: int
    n: int
    anchor_idx: int
    class_id: int
    score: float
    delta: DeltaVector


@dataclass(frozen=True)
class PredictionSet:
    ab: tuple[AnchorPrediction, ...] = field(default_factory=tuple)
    af: tuple[PredVector, ...] = field(default_factory=tuple)

    def __len__(self) -> int:
        return len(self.ab) + len(self.af)


def _unit(value: float, what: str, line_no: int) -> float:
    if not 0.0 <= value <= 1.0:
        raise PredictionFormatError(f"{what} must lie in [0, 1], got {value}", line_no)
    return value


def _parse_row(tokens: list[str], line_no: int, vocabulary: Vocabulary):
    tag = tokens[0]
    expected = {AB_TAG: 11, AF_TAG: 11}.get(tag)
    if expected is None:
        raise PredictionFormatError(f"unknown row tag {tag!r}", line_no)
    if len(tokens) != expected:
        raise PredictionFormatError(f"{tag} row needs {expected} fields, got {len(tokens)}", line_no)
    try:
        if tag == AB_TAG:
            level, m, n, slot = (int(t) for t in tokens[1:5])
            class_id = vocabulary.resolve(tokens[5])
            score = _unit(float(tokens[6]), 'score', line_no)
            delta = DeltaVector(*(float(t) for t in tokens[7:11]))
            return AnchorPrediction(level, m, n, slot, class_id, score, delta)
        level, m, n = (int(t) for t in tokens[1:4])
        class_id = vocabulary.resolve(tokens[4])
        score = _unit(float(tokens[5]), 'score', line_no)
        v_t, v_l, v_b, v_r = (float(t) for t in tokens[6:10])
        centerness = _unit(float(tokens[10]), 'centerness', line_no)
        scores = tuple(score if k == class_id else 0.0 for k in range(len(vocabulary)))
        return PredVector(m, n, level, v_t, v_l, v_b, v_r, scores, centerness)
    except KeyError:
        raise PredictionFormatError(f"unknown class {tokens[5 if tag == AB_TAG else 4]!r}", line_no)
    except (ValueError, CodecError) as exc:
        raise PredictionFormatError(str(exc), line_no)


def parse_predictions(text: str | bytes, vocabulary: Vocabulary = DOTA_VOCABULARY) -> PredictionSet:
    if isinstance(text, (bytes, bytearray)):
        text = bytes(text).decode('utf-8', errors='replace')
    ab: list[AnchorPrediction] = []
    af: list[PredVector] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        tokens = raw.split()
        if not tokens or tokens[0].startswith('#'):
            continue
        row = _parse_row(tokens, line_no, vocabulary)
        (ab if isinstance(row, AnchorPrediction) else af).append(row)
    return PredictionSet(tuple(ab), tuple(af))


def read_prediction_file(path: str | Path, vocabulary: Vocabulary = DOTA_VOCABULARY) -> PredictionSet:
    return parse_predictions(Path(path).read_bytes(), vocabulary)


def format_predictions(predictions: PredictionSet, vocabulary: Vocabulary = DOTA_VOCABULARY) -> str:
    lines = ['# AB level m n anchor_idx class score dx dy dw dh',
             '# AF level m n class score v_t v_l v_b v_r centerness']
    for p in predictions.ab:
        d = p.delta
        lines.append(f"{AB_TAG} {p.level} {p.m} {p.n} {p.anchor_idx} {vocabulary.name(p.class_id)} "
                     f"{p.score:.6f} {d.dx:.9f} {d.dy:.9f} {d.dw:.9f} {d.dh:.9f}")
    for v in predictions.af:
        lines.append(f"{AF_TAG} {v.level} {v.m} {v.n} {vocabulary.name(v.class_id)} {v.score:.6f} "
                     f"{v.v_t:.6f} {v.v_l:.6f} {v.v_b:.6f} {v.v_r:.6f} {v.centerness:.6f}")
    return '\n'.join(lines) + '\n'


def write_prediction_file(path: str | Path, predictions: PredictionSet,
                          vocabulary: Vocabulary = DOTA_VOCABULARY) -> Path:
    path = Path(path)
    path.write_text(format_predictions(predictions, vocabulary), encoding='utf-8')
    return path


def anchor_box(grid: AnchorGrid, p: AnchorPrediction) -> HBox:
    try:
        return grid.box(p.level, grid.index_of(p.level, p.m, p.n, p.anchor_idx))
    except (KeyError, IndexError) as exc:
        raise PredictionFormatError(f"anchor reference out of range: {exc}")


def oracle_anchor_predictions(gts: Sequence[HBox], grid: AnchorGrid,
                              score: float = 1.0) -> list[AnchorPrediction]:
    """One prediction per gt: the best-overlapping grid anchor regressed onto the gt."""
    flat = grid.flatten()
    preds = []
    if not gts or len(flat) == 0:
        return preds
    table = iou_matrix_hbb(boxes_to_array(gts), flat.boxes)
    for gi, gt in enumerate(gts):
        best = int(table[gi].argmax())
        level_id, idx = int(flat.level_ids[best]), int(flat.indices[best])
        level = grid.level(level_id)
        m, n = (int(v) for v in level.cells[idx])
        anchor = grid.box(level_id, idx)
        class_id = gt.class_id if gt.class_id is not None else 0
        preds.append(AnchorPrediction(level_id, m, n, int(level.anchor_idx[idx]), class_id, score,
                                      encode_delta(anchor, gt)))
    return preds
