"""
Multi-task training losses with analytic gradients.

L = L_ab + L_af, where the anchor-based part is cross entropy plus smooth L1 on
delta targets and the anchor-free part is focal loss, IoU loss on side
distances and a centerness cross entropy. Regression and centerness terms only
count for positive samples. Reductions use math.fsum so totals do not depend on
summation order.
"""
import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass

from ..errors import ConfigurationError, LossError
from .engine_codec import DeltaVector, Distances, centerness_target
from .engine_geometry import HBox, iou_hbb

logger = logging.getLogger(__name__)

EPS = 1e-12

Vector4 = DeltaVector | Sequence[float]


@dataclass(frozen=True)
class LossConfig:
    gamma: float = 2.0
    alpha: float = 0.25
    smooth_l1_beta: float = 1.0
    ab_weight: float = 1.0
    af_weight: float = 1.0

    def __post_init__(self):
        if self.gamma < 0:
            raise ConfigurationError(f"gamma must be >= 0, got {self.gamma}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.smooth_l1_beta <= 0:
            raise ConfigurationError(f"smooth_l1_beta must be > 0, got {self.smooth_l1_beta}")
        if self.ab_weight < 0 or self.af_weight < 0:
            raise ConfigurationError("branch weights must be non-negative")


@dataclass(frozen=True)
class LossReport:
    l_ab_cls: float
    l_ab_reg: float
    l_af_cls: float
    l_af_reg: float
    l_af_center: float
    ab_weight: float = 1.0
    af_weight: float = 1.0

    @property
    def l_ab(self) -> float:
        return self.ab_weight * (self.l_ab_cls + self.l_ab_reg)

    @property
    def l_af(self) -> float:
        return self.af_weight * (self.l_af_cls + self.l_af_reg + self.l_af_center)

    @property
    def l_total(self) -> float:
        return self.l_ab + self.l_af

    def as_dict(self) -> dict:
        return {
            'l_ab_cls': self.l_ab_cls, 'l_ab_reg': self.l_ab_reg,
            'l_af_cls': self.l_af_cls, 'l_af_reg': self.l_af_reg, 'l_af_center': self.l_af_center,
            'l_ab': self.l_ab, 'l_af': self.l_af, 'l_total': self.l_total,
        }


def _clamp(p: float) -> float:
    return min(max(p, EPS), 1.0 - EPS)


def _components(v: Vector4) -> tuple[float, float, float, float]:
    if isinstance(v, DeltaVector):
        return v.as_tuple()
    values = tuple(float(x) for x in v)
    if len(values) != 4:
        raise LossError(f"expected 4 components, got {len(values)}")
    return values


# ---- cross entropy ---------------------------------------------------------

def cross_entropy(p: float, target: float) -> float:
    """Binary cross entropy; target may be soft (centerness)."""
    p = _clamp(p)
    return -(target * math.log(p) + (1.0 - target) * math.log(1.0 - p))


def cross_entropy_grad(p: float, target: float) -> float:
    p = _clamp(p)
    return -target / p + (1.0 - target) / (1.0 - p)


# ---- smooth L1 -------------------------------------------------------------

def smooth_l1(pred: Vector4, target: Vector4, beta: float = 1.0) -> float:
    terms = []
    for a, b in zip(_components(pred), _components(target)):
        x = abs(a - b)
        terms.append(0.5 * x * x / beta if x < beta else x - 0.5 * beta)
    return math.fsum(terms)


def smooth_l1_grad(pred: Vector4, target: Vector4, beta: float = 1.0) -> tuple[float, ...]:
    grads = []
    for a, b in zip(_components(pred), _components(target)):
        x = a - b
        grads.append(x / beta if abs(x) < beta else math.copysign(1.0, x))
    return tuple(grads)


# ---- focal -----------------------------------------------------------------

def focal_loss(p: float, target: int, cfg: LossConfig = LossConfig()) -> float:
    p = _clamp(p)
    if target:
        return -cfg.alpha * (1.0 - p) ** cfg.gamma * math.log(p)
    return -(1.0 - cfg.alpha) * p ** cfg.gamma * math.log(1.0 - p)


def focal_loss_grad(p: float, target: int, cfg: LossConfig = LossConfig()) -> float:
    p = _clamp(p)
    g = cfg.gamma
    if target:
        lead = g * (1.0 - p) ** (g - 1.0) * math.log(p) if g else 0.0
        return cfg.alpha * (lead - (1.0 - p) ** g / p)
    lead = g * p ** (g - 1.0) * math.log(1.0 - p) if g else 0.0
    return -(1.0 - cfg.alpha) * (lead - p ** g / (1.0 - p))


# ---- IoU loss --------------------------------------------------------------

def iou_loss(pred: HBox, target: HBox) -> float:
    iou = iou_hbb(pred, target)
    if iou <= 0.0:
        raise LossError("IoU loss on a non-overlapping positive sample")
    return -math.log(iou)


def _distance_overlap(pred: Distances, target: Distances):
    t, l, b, r = pred
    gt, gl, gb, gr = target
    if min(pred) < 0 or min(target) < 0:
        raise LossError("side distances must be non-negative")
    iw = min(l, gl) + min(r, gr)
    ih = min(t, gt) + min(b, gb)
    inter = iw * ih
    union = (t + b) * (l + r) + (gt + gb) * (gl + gr) - inter
    if inter <= 0.0:
        raise LossError("IoU loss on a non-overlapping positive sample")
    return iw, ih, inter, union


def iou_loss_distances(pred: Distances, target: Distances) -> float:
    """-ln IoU of two boxes decoded from the same location."""
    _, _, inter, union = _distance_overlap(pred, target)
    return -math.log(inter / union)


def iou_loss_distances_grad(pred: Distances, target: Distances) -> tuple[float, float, float, float]:
    """Gradient w.r.t. the predicted (v_t, v_l, v_b, v_r)."""
    iw, ih, inter, union = _distance_overlap(pred, target)
    t, l, b, r = pred
    gt, gl, gb, gr = target
    d_area = (l + r, t + b, l + r, t + b)
    d_inter = (
        iw if t < gt else 0.0,
        ih if l < gl else 0.0,
        iw if b < gb else 0.0,
        ih if r < gr else 0.0,
    )
    return tuple(-di / inter + (da - di) / union for da, di in zip(d_area, d_inter))


# ---- samples and the total -------------------------------------------------

def _class_targets(n_classes: int, gt_class: int) -> tuple[int, ...]:
    return tuple(1 if k == gt_class else 0 for k in range(n_classes))


@dataclass(frozen=True)
class AnchorSample:
    """A sampled anchor: per-class scores, gt_class -1 for background."""

    scores: tuple[float, ...]
    gt_class: int = -1
    delta_pred: DeltaVector | None = None
    delta_target: DeltaVector | None = None

    def __post_init__(self):
        object.__setattr__(self, 'scores', tuple(float(s) for s in self.scores))
        if self.gt_class >= len(self.scores):
            raise LossError(f"gt_class {self.gt_class} outside {len(self.scores)} scores")
        if self.is_positive and (self.delta_pred is None or self.delta_target is None):
            raise LossError("positive anchor sample needs predicted and target deltas")

    @property
    def is_positive(self) -> bool:
        return self.gt_class >= 0


@dataclass(frozen=True)
class LocationSample:
    """A feature-map location of the anchor-free branch."""

    scores: tuple[float, ...]
    gt_class: int = -1
    dist_pred: Distances | None = None
    dist_target: Distances | None = None
    centerness_pred: float | None = None

    def __post_init__(self):
        object.__setattr__(self, 'scores', tuple(float(s) for s in self.scores))
        if self.gt_class >= len(self.scores):
            raise LossError(f"gt_class {self.gt_class} outside {len(self.scores)} scores")
        if self.is_positive and (self.dist_pred is None or self.dist_target is None
                                 or self.centerness_pred is None):
            raise LossError("positive location needs distances and a centerness prediction")

    @property
    def is_positive(self) -> bool:
        return self.gt_class >= 0


def _mean(terms, count: int) -> float:
    return math.fsum(terms) / count if count else 0.0


def total_loss(ab_samples: Sequence[AnchorSample], af_samples: Sequence[LocationSample],
               cfg: LossConfig = LossConfig()) -> LossReport:
    ab_pos = [s for s in ab_samples if s.is_positive]
    af_pos = [s for s in af_samples if s.is_positive]

    ab_cls = [cross_entropy(p, t) for s in ab_samples
              for p, t in zip(s.scores, _class_targets(len(s.scores), s.gt_class))]
    ab_reg = [smooth_l1(s.delta_pred, s.delta_target, cfg.smooth_l1_beta) for s in ab_pos]
    af_cls = [focal_loss(p, t, cfg) for s in af_samples
              for p, t in zip(s.scores, _class_targets(len(s.scores), s.gt_class))]
    af_reg = [iou_loss_distances(s.dist_pred, s.dist_target) for s in af_pos]
    af_center = [cross_entropy(s.centerness_pred, centerness_target(s.dist_target)) for s in af_pos]

    report = LossReport(
        l_ab_cls=_mean(ab_cls, len(ab_samples)),
        l_ab_reg=_mean(ab_reg, len(ab_pos)),
        l_af_cls=math.fsum(af_cls) / max(1, len(af_pos)),
        l_af_reg=_mean(af_reg, len(af_pos)),
        l_af_center=_mean(af_center, len(af_pos)),
        ab_weight=cfg.ab_weight,
        af_weight=cfg.af_weight,
    )
    logger.debug("loss over %d anchors (%d pos) and %d locations (%d pos): %.6f",
                 len(ab_samples), len(ab_pos), len(af_samples), len(af_pos), report.l_total)
    return report
