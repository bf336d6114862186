"""
Scored detections and class-wise greedy non-maximum suppression.
"""
import logging
import threading
from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np

from ..errors import GeometryError
from .engine_geometry import HBox, OBox, boxes_to_array, iou_any, iou_matrix_hbb

logger = logging.getLogger(__name__)

DEFAULT_NMS_IOU = 0.1
DEFAULT_SCORE_THRESH = 0.05


@dataclass(frozen=True)
class Detection:
    box: HBox | OBox
    score: float
    class_id: int

    def __post_init__(self):
        object.__setattr__(self, 'score', float(self.score))
        if not 0.0 <= self.score <= 1.0:
            raise GeometryError(f"detection score must lie in [0, 1], got {self.score}")

    def translated(self, dx: float, dy: float) -> 'Detection':
        return replace(self, box=self.box.translated(dx, dy))


class IouCounter:
    """Counts pairwise IoU evaluations; shared by the workers of one run."""

    def __init__(self):
        self._lock = threading.Lock()
        self.count = 0

    def add(self, n: int) -> None:
        with self._lock:
            self.count += int(n)


def _greedy_hbb(boxes: np.ndarray, iou_thresh: float, counter: IouCounter | None) -> list[int]:
    keep = []
    order = np.arange(boxes.shape[0])
    while order.size > 0:
        i = order[0]
        keep.append(int(i))
        rest = order[1:]
        if rest.size == 0:
            break
        ious = iou_matrix_hbb(boxes[i:i + 1], boxes[rest])[0]
        if counter is not None:
            counter.add(rest.size)
        order = rest[ious < iou_thresh]
    return keep


def _greedy_any(boxes: Sequence, iou_thresh: float, counter: IouCounter | None) -> list[int]:
    keep: list[int] = []
    alive = list(range(len(boxes)))
    while alive:
        i = alive.pop(0)
        keep.append(i)
        if counter is not None:
            counter.add(len(alive))
        alive = [j for j in alive if iou_any(boxes[i], boxes[j]) < iou_thresh]
    return keep


def nms(dets: Sequence[Detection], iou_thresh: float = DEFAULT_NMS_IOU,
        score_thresh: float = DEFAULT_SCORE_THRESH,
        counter: IouCounter | None = None) -> list[Detection]:
    """Class-wise greedy suppression in descending score order.

    A detection is dropped when its IoU with an already kept detection of the
    same class reaches iou_thresh. Equal scores keep their input order.
    """
    ranked = sorted((d for d in dets if d.score >= score_thresh), key=lambda d: -d.score)
    by_class: dict[int, list[int]] = {}
    for pos, det in enumerate(ranked):
        by_class.setdefault(det.class_id, []).append(pos)

    survivors: list[int] = []
    for members in by_class.values():
        boxes = [ranked[p].box for p in members]
        if all(isinstance(b, HBox) for b in boxes):
            kept = _greedy_hbb(boxes_to_array(boxes), iou_thresh, counter)
        else:
            kept = _greedy_any(boxes, iou_thresh, counter)
        survivors.extend(members[k] for k in kept)

    survivors.sort()
    logger.debug("nms kept %d of %d detections (%d above score %.3f)",
                 len(survivors), len(dets), len(ranked), score_thresh)
    return [ranked[p] for p in survivors]
