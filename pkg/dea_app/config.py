"""
Run configuration.

Values start from `settings.DEA_DEFAULTS`, are overridden by an optional
plain-text `key = value` file and finally by command-line flags, then get
converted into the frozen config objects of the engine and harness layers.
"""
import configparser
import logging
import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from pathlib import Path

from django.conf import settings

from .errors import ConfigurationError
from .engine.engine_anchors import PyramidConfig, plus_anchor_preset
from .engine.engine_codec import DEFAULT_AF_RANGES
from .engine.engine_discriminator import ScreenOptions, Thresholds
from .engine.engine_losses import LossConfig
from .datasets.datasets_tiling import TilingConfig
from .harness.harness_eval import EvalConfig
from .harness.harness_inference import InferenceConfig
from .harness.harness_scenes import SyntheticSceneSpec
from .harness.harness_study import ANCHOR_SOURCES

logger = logging.getLogger(__name__)

SECTION = 'dea'
PRESETS = ('default', 'plus_anchor')
TRUE_WORDS = ('1', 'true', 'yes', 'on')
FALSE_WORDS = ('0', 'false', 'no', 'off')


def _float(key: str, raw: str) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise ConfigurationError(f"{key}: expected a number, got {raw!r}")
    if math.isnan(value):
        raise ConfigurationError(f"{key}: NaN is not allowed")
    return value


def _int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigurationError(f"{key}: expected an integer, got {raw!r}")


def _bool(key: str, raw: str) -> bool:
    word = raw.strip().lower()
    if word in TRUE_WORDS:
        return True
    if word in FALSE_WORDS:
        return False
    raise ConfigurationError(f"{key}: expected true/false, got {raw!r}")


def _items(raw: str):
    return [t for t in raw.replace(',', ' ').split() if t]


def _floats(key: str, raw: str) -> tuple[float, ...]:
    return tuple(_float(key, t) for t in _items(raw))


def _ints(key: str, raw: str) -> tuple[int, ...]:
    return tuple(_int(key, t) for t in _items(raw))


def _choice(key: str, raw: str, choices) -> str:
    value = raw.strip()
    if value not in choices:
        raise ConfigurationError(f"{key}: expected one of {', '.join(choices)}, got {raw!r}")
    return value


def _ranges(key: str, raw: str) -> tuple[tuple[float, float], ...]:
    """`0-64, 64-128, ..., 512-inf` -> ((0, 64), (64, 128), ..., (512, inf))."""
    pairs = []
    for chunk in (c.strip() for c in raw.split(',') if c.strip()):
        lo, sep, hi = chunk.partition('-')
        if not sep:
            raise ConfigurationError(f"{key}: expected lo-hi, got {chunk!r}")
        lo_v, hi_v = _float(key, lo), _float(key, hi)
        if not 0.0 <= lo_v < hi_v:
            raise ConfigurationError(f"{key}: range {chunk!r} must satisfy 0 <= lo < hi")
        pairs.append((lo_v, hi_v))
    return tuple(pairs)


@dataclass(frozen=True)
class DeaConfig:
    pyramid: PyramidConfig = field(default_factory=PyramidConfig)
    af_ranges: tuple[tuple[float, float], ...] = DEFAULT_AF_RANGES
    thresholds: Thresholds = field(default_factory=Thresholds)
    screen: ScreenOptions = field(default_factory=ScreenOptions)
    loss: LossConfig = field(default_factory=LossConfig)
    tiling: TilingConfig = field(default_factory=TilingConfig)
    inference: InferenceConfig = field(default_factory=InferenceConfig)
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    scenes: SyntheticSceneSpec = field(default_factory=SyntheticSceneSpec)
    study_anchors: str = 'grid'
    strict: bool = False
    threads: int = 1
    values: dict[str, str] = field(default_factory=dict, compare=False)


def read_config_file(path: str | Path) -> dict[str, str]:
    path = Path(path)
    try:
        text = path.read_text(encoding='utf-8')
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc}")
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=('#',),
                                       comment_prefixes=('#',), delimiters=('=',))
    parser.optionxform = str
    try:
        parser.read_string(f"[{SECTION}]\n{text}", source=str(path))
    except configparser.Error as exc:
        raise ConfigurationError(f"{path}: {exc}")
    if parser.sections() != [SECTION]:
        raise ConfigurationError(f"{path}: section headers are not allowed")
    return dict(parser.items(SECTION))


def _merge(values: dict[str, str], extra: Mapping[str, object], origin: str) -> None:
    for key, value in extra.items():
        if key not in values:
            raise ConfigurationError(f"unknown configuration key {key!r} ({origin})")
        if value is None:
            continue
        if isinstance(value, bool):
            value = 'true' if value else 'false'
        elif isinstance(value, (list, tuple)):
            value = ', '.join(str(v) for v in value)
        values[key] = str(value)


def build_config(values: Mapping[str, str]) -> DeaConfig:
    v = dict(values)
    pyramid = PyramidConfig(
        strides=_ints('strides', v['strides']),
        base_scale=_float('base_scale', v['base_scale']),
        ratios=_floats('ratios', v['ratios']),
        extra_scales=_floats('extra_scales', v['extra_scales']),
        clip_border=_bool('clip_border', v['clip_border']),
    )
    if _choice('preset', v['preset'], PRESETS) == 'plus_anchor':
        pyramid = plus_anchor_preset(pyramid)

    af_ranges = _ranges('af_ranges', v['af_ranges'])
    if len(af_ranges) != len(pyramid.strides):
        raise ConfigurationError(
            f"af_ranges: {len(af_ranges)} ranges for {len(pyramid.strides)} pyramid levels")

    size = _ints('image_size', v['image_size'])
    if len(size) not in (1, 2):
        raise ConfigurationError("image_size: expected W or W H")
    image_w, image_h = (size[0], size[0]) if len(size) == 1 else size

    seed = _int('seed', v['seed'])
    threads = _int('threads', v['threads'])
    if threads < 1:
        raise ConfigurationError("threads: must be at least 1")

    return DeaConfig(
        pyramid=pyramid,
        af_ranges=af_ranges,
        thresholds=Thresholds(_float('t_pos', v['t_pos']), _float('t_neg', v['t_neg'])),
        screen=ScreenOptions(
            iou_mode=v['iou_mode'].strip(),
            low_quality_rescue=_bool('low_quality_rescue', v['low_quality_rescue']),
            enhanced_wiring=v['enhanced_wiring'].strip(),
            anchor_rule=v['anchor_rule'].strip(),
        ),
        loss=LossConfig(
            gamma=_float('gamma', v['gamma']),
            alpha=_float('alpha', v['alpha']),
            smooth_l1_beta=_float('smooth_l1_beta', v['smooth_l1_beta']),
            ab_weight=_float('ab_weight', v['ab_weight']),
            af_weight=_float('af_weight', v['af_weight']),
        ),
        tiling=TilingConfig(
            patch_size=_int('patch_size', v['patch_size']),
            stride=_int('tile_stride', v['tile_stride']),
            crop_retention=_float('crop_retention', v['crop_retention']),
        ),
        inference=InferenceConfig(
            nms_iou=_float('nms_iou', v['nms_iou']),
            score_thresh=_float('score_thresh', v['score_thresh']),
            mode=v['inference'].strip(),
        ),
        evaluation=EvalConfig(
            iou_thresh=_float('eval_iou', v['eval_iou']),
            voc07=_bool('voc07', v['voc07']),
        ),
        scenes=SyntheticSceneSpec(
            seed=seed,
            image_w=image_w,
            image_h=image_h,
            objects_min=_int('objects_min', v['objects_min']),
            objects_max=_int('objects_max', v['objects_max']),
            tiny_fraction=_float('tiny_fraction', v['tiny_fraction']),
            extreme_fraction=_float('extreme_fraction', v['extreme_fraction']),
            af_noise=_float('af_noise', v['af_noise']),
            proposal_jitter=_float('proposal_jitter', v['proposal_jitter']),
            proposals_per_object=_int('proposals_per_object', v['proposals_per_object']),
            max_same_class_iou=_float('max_same_class_iou', v['max_same_class_iou']),
            af_ranges=af_ranges,
        ),
        study_anchors=_choice('study_anchors', v['study_anchors'], ANCHOR_SOURCES),
        strict=_bool('strict', v['strict']),
        threads=threads,
        values=v,
    )


def load_config(path: str | Path | None = None,
                overrides: Mapping[str, object] | None = None) -> DeaConfig:
    """Defaults, then the file at `path`, then `overrides` (None values are skipped)."""
    values = dict(settings.DEA_DEFAULTS)
    if path is not None:
        _merge(values, read_config_file(path), str(path))
    if overrides:
        _merge(values, overrides, 'command line')
    config = build_config(values)
    logger.debug("configuration: %s", values)
    return config
