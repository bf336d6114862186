"""
VOC-style average precision.

Detections of a class are ranked by score over the whole corpus and matched
greedily against the gts of their image: the best-overlapping gt is a hit
when its IoU reaches the threshold and it has not been claimed yet. Hits on
difficult gts count neither way, and difficult gts are left out of the
recall denominator.
"""
import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pandas as pd

from ..errors import ConfigurationError
from ..engine.engine_geometry import HBox, OBox, boxes_to_array, iou_any, iou_matrix_hbb
from ..engine.engine_nms import Detection
from ..datasets.datasets_dota import DOTA_ABBREVIATIONS, DOTA_VOCABULARY, SceneAnnotation, Vocabulary

logger = logging.getLogger(__name__)

VOC07_RECALL_POINTS = [i / 10.0 for i in range(11)]

SUMMARY_COLUMNS = ['class_id', 'class', 'abbr', 'n_gt', 'n_det', 'n_tp', 'ap']
CURVE_COLUMNS = ['class', 'rank', 'image_id', 'score', 'tp', 'fp', 'recall', 'precision']


@dataclass(frozen=True)
class GroundTruth:
    box: HBox | OBox
    class_id: int
    difficult: bool = False


@dataclass(frozen=True)
class EvalConfig:
    iou_thresh: float = 0.5
    voc07: bool = False

    def __post_init__(self):
        if not 0.0 < self.iou_thresh <= 1.0:
            raise ConfigurationError(f"eval iou threshold must lie in (0, 1], got {self.iou_thresh}")


@dataclass(frozen=True)
class ClassCurve:
    class_id: int
    n_gt: int
    image_ids: tuple[str, ...]
    scores: np.ndarray
    tp: np.ndarray
    fp: np.ndarray
    ap: float

    @property
    def recall(self) -> np.ndarray:
        return np.cumsum(self.tp) / max(self.n_gt, 1)

    @property
    def precision(self) -> np.ndarray:
        tp, fp = np.cumsum(self.tp), np.cumsum(self.fp)
        return tp / np.maximum(tp + fp, np.finfo(np.float64).eps)


@dataclass(frozen=True)
class EvalReport:
    curves: dict[int, ClassCurve]
    config: EvalConfig
    vocabulary: Vocabulary = DOTA_VOCABULARY
    n_images: int = 0

    @property
    def ap(self) -> dict[int, float]:
        return {cid: c.ap for cid, c in self.curves.items()}

    @property
    def mAP(self) -> float:
        scored = [c.ap for c in self.curves.values() if c.n_gt > 0]
        return float(np.mean(scored)) if scored else 0.0

    def class_ap(self, name: str) -> float:
        return self.curves[self.vocabulary.index(name)].ap

    def summary_frame(self) -> pd.DataFrame:
        rows = []
        for cid in sorted(self.curves):
            c = self.curves[cid]
            name = self.vocabulary.name(cid)
            rows.append((cid, name, DOTA_ABBREVIATIONS.get(name, name), c.n_gt, int(c.scores.size),
                         int(c.tp.sum()), c.ap))
        return pd.DataFrame(rows, columns=SUMMARY_COLUMNS)

    def curve_frame(self) -> pd.DataFrame:
        frames = []
        for cid in sorted(self.curves):
            c = self.curves[cid]
            if not c.scores.size:
                continue
            frames.append(pd.DataFrame({
                'class': self.vocabulary.name(cid),
                'rank': np.arange(1, c.scores.size + 1),
                'image_id': list(c.image_ids),
                'score': c.scores,
                'tp': c.tp.astype(np.int64),
                'fp': c.fp.astype(np.int64),
                'recall': c.recall,
                'precision': c.precision,
            }))
        if not frames:
            return pd.DataFrame(columns=CURVE_COLUMNS)
        return pd.concat(frames, ignore_index=True)[CURVE_COLUMNS]

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        frame = self.summary_frame()
        total = pd.DataFrame([(-1, 'mAP', 'mAP', int(frame['n_gt'].sum()), int(frame['n_det'].sum()),
                               int(frame['n_tp'].sum()), self.mAP)], columns=SUMMARY_COLUMNS)
        pd.concat([frame, total], ignore_index=True).to_csv(path, index=False, float_format='%.6f')
        return path

    def to_xlsx(self, path: str | Path) -> Path:
        path = Path(path)
        with pd.ExcelWriter(path, engine='openpyxl') as writer:
            self.summary_frame().to_excel(writer, index=False, sheet_name='Summary')
            self.curve_frame().to_excel(writer, index=False, sheet_name='Curves')
        return path


def voc_ap(recall: Sequence[float], precision: Sequence[float], voc07: bool = False) -> float:
    rec = np.asarray(recall, dtype=np.float64)
    prec = np.asarray(precision, dtype=np.float64)
    if voc07:
        total = 0.0
        for t in VOC07_RECALL_POINTS:
            reached = prec[rec >= t]
            total += float(reached.max()) if reached.size else 0.0
        return total / len(VOC07_RECALL_POINTS)

    mrec = np.concatenate(([0.0], rec, [1.0]))
    mpre = np.concatenate(([0.0], prec, [0.0]))
    for i in range(mpre.size - 1, 0, -1):
        mpre[i - 1] = max(mpre[i - 1], mpre[i])
    steps = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def _iou_row(det_box, gt_boxes: Sequence) -> np.ndarray:
    if isinstance(det_box, HBox) and all(isinstance(g, HBox) for g in gt_boxes):
        return iou_matrix_hbb(boxes_to_array([det_box]), boxes_to_array(gt_boxes))[0]
    return np.array([iou_any(det_box, g) for g in gt_boxes], dtype=np.float64)


def _class_curve(class_id: int, dets: list[tuple[str, Detection]],
                 gts: Mapping[str, list[GroundTruth]], config: EvalConfig) -> ClassCurve:
    n_gt = sum(1 for items in gts.values() for g in items if not g.difficult)
    order = sorted(range(len(dets)), key=lambda k: -dets[k][1].score)
    claimed = {image_id: np.zeros(len(items), dtype=bool) for image_id, items in gts.items()}

    image_ids, scores, tp, fp = [], [], [], []
    for k in order:
        image_id, det = dets[k]
        candidates = gts.get(image_id, [])
        hit, miss = 0.0, 1.0
        if candidates:
            ious = _iou_row(det.box, [g.box for g in candidates])
            best = int(ious.argmax())
            if ious[best] >= config.iou_thresh:
                if candidates[best].difficult:
                    continue
                if not claimed[image_id][best]:
                    claimed[image_id][best] = True
                    hit, miss = 1.0, 0.0
        image_ids.append(image_id)
        scores.append(det.score)
        tp.append(hit)
        fp.append(miss)

    tp_arr, fp_arr = np.array(tp, dtype=np.float64), np.array(fp, dtype=np.float64)
    curve = ClassCurve(class_id, n_gt, tuple(image_ids), np.array(scores, dtype=np.float64),
                       tp_arr, fp_arr, 0.0)
    ap = voc_ap(curve.recall, curve.precision, config.voc07) if n_gt and scores else 0.0
    return ClassCurve(class_id, n_gt, curve.image_ids, curve.scores, tp_arr, fp_arr, ap)


def evaluate(dets_by_image: Mapping[str, Sequence[Detection]],
             gts_by_image: Mapping[str, Sequence[GroundTruth]],
             config: EvalConfig = EvalConfig(),
             vocabulary: Vocabulary = DOTA_VOCABULARY) -> EvalReport:
    """Per-class AP and their mean over classes that have non-difficult gts."""
    class_dets: dict[int, list[tuple[str, Detection]]] = {}
    for image_id in sorted(dets_by_image):
        for det in dets_by_image[image_id]:
            class_dets.setdefault(det.class_id, []).append((image_id, det))

    class_gts: dict[int, dict[str, list[GroundTruth]]] = {}
    for image_id in sorted(gts_by_image):
        for g in gts_by_image[image_id]:
            class_gts.setdefault(g.class_id, {}).setdefault(image_id, []).append(g)

    curves = {cid: _class_curve(cid, class_dets.get(cid, []), class_gts.get(cid, {}), config)
              for cid in sorted(set(class_dets) | set(class_gts))}
    report = EvalReport(curves, config, vocabulary, len(set(dets_by_image) | set(gts_by_image)))
    logger.info("evaluated %d images, %d classes: mAP %.4f (%s)", report.n_images, len(curves),
                report.mAP, 'VOC07 11-point' if config.voc07 else 'continuous')
    return report


def ground_truths(scene: SceneAnnotation, vocabulary: Vocabulary = DOTA_VOCABULARY,
                  oriented: bool = False) -> list[GroundTruth]:
    items = []
    for obj in scene.objects:
        cid = vocabulary.index(obj.category)
        box = obj.obox.with_class(cid) if oriented else obj.hbox.with_class(cid)
        items.append(GroundTruth(box, cid, bool(obj.difficult)))
    return items
