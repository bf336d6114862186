"""
Positive-sample IoU distribution: anchor-only assignment against the
dynamic-enhancement assignment, averaged per image.
"""
import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd
import plotly.graph_objects as go

from ..errors import ConfigurationError
from ..engine.engine_anchors import PyramidConfig, generate_anchors
from ..engine.engine_codec import PredVector
from ..engine.engine_discriminator import (
    IOU_BIN_WIDTH, ScreenOptions, Thresholds, assignment_stats, screen,
)
from ..engine.engine_geometry import HBox, OBox
from .harness_pool import run_parallel
from .harness_scenes import SyntheticScene

logger = logging.getLogger(__name__)

ANCHOR_SOURCES = ('grid', 'proposals')

HISTOGRAM_FILE = 'iou_histogram.csv'
PER_IMAGE_FILE = 'iou_per_image.csv'
PLOT_FILE = 'iou_plot.json'

HISTOGRAM_COLUMNS = ['bin_lo', 'bin_hi', 'baseline', 'dea']
PER_IMAGE_COLUMNS = ['image_id', 'n_gt', 'baseline', 'dea', 'enhanced', 'gts_without_anchor']


@dataclass(frozen=True)
class StudyScene:
    image_id: str
    image_w: int
    image_h: int
    gts: tuple[HBox | OBox, ...]
    af_vectors: tuple[PredVector, ...] = field(default_factory=tuple)
    proposals: tuple[HBox, ...] = field(default_factory=tuple)

    @classmethod
    def from_synthetic(cls, scene: SyntheticScene) -> 'StudyScene':
        return cls(scene.image_id, scene.image_w, scene.image_h, scene.gts,
                   scene.af_vectors, scene.proposals)


@dataclass(frozen=True)
class SceneCounts:
    image_id: str
    n_gt: int
    baseline: np.ndarray
    dea: np.ndarray
    enhanced: int
    gts_without_anchor: int


@dataclass(frozen=True)
class StudyResult:
    n_scenes: int
    baseline: np.ndarray  # summed bin counts
    dea: np.ndarray
    per_image: tuple[SceneCounts, ...] = field(default_factory=tuple)
    bin_width: float = IOU_BIN_WIDTH

    def _average(self, counts: np.ndarray) -> np.ndarray:
        return counts / self.n_scenes if self.n_scenes else np.zeros(counts.shape, dtype=np.float64)

    @property
    def baseline_per_image(self) -> np.ndarray:
        return self._average(self.baseline)

    @property
    def dea_per_image(self) -> np.ndarray:
        return self._average(self.dea)

    def total(self, which: str) -> int:
        return int(getattr(self, which).sum())

    def count_at_least(self, which: str, iou: float) -> int:
        first = int(round(iou / self.bin_width))
        return int(getattr(self, which)[first:].sum())

    def histogram_frame(self) -> pd.DataFrame:
        n_bins = self.baseline.size
        lo = np.arange(n_bins) * self.bin_width
        return pd.DataFrame({
            'bin_lo': np.round(lo, 6),
            'bin_hi': np.round(lo + self.bin_width, 6),
            'baseline': self.baseline_per_image,
            'dea': self.dea_per_image,
        }, columns=HISTOGRAM_COLUMNS)

    def per_image_frame(self) -> pd.DataFrame:
        rows = [(s.image_id, s.n_gt, int(s.baseline.sum()), int(s.dea.sum()), s.enhanced,
                 s.gts_without_anchor) for s in self.per_image]
        return pd.DataFrame(rows, columns=PER_IMAGE_COLUMNS)

    def figure(self) -> go.Figure:
        frame = self.histogram_frame()
        centers = (frame['bin_lo'] + frame['bin_hi']) / 2.0
        fig = go.Figure()
        fig.add_trace(go.Bar(x=centers, y=frame['baseline'], name='anchor-based', width=self.bin_width))
        fig.add_trace(go.Bar(x=centers, y=frame['dea'], name='DEA', width=self.bin_width))
        fig.update_layout(barmode='group', xaxis_title='IoU with ground truth',
                          yaxis_title='positive samples per image')
        return fig

    def write(self, out_dir: str | Path) -> list[Path]:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        paths = [out / HISTOGRAM_FILE, out / PER_IMAGE_FILE, out / PLOT_FILE]
        self.histogram_frame().to_csv(paths[0], index=False, float_format='%.6f')
        self.per_image_frame().to_csv(paths[1], index=False)
        paths[2].write_text(self.figure().to_json(), encoding='utf-8')
        return paths


def _scene_counts(scene: StudyScene, pyramid: PyramidConfig, th: Thresholds,
                  options: ScreenOptions, anchor_source: str) -> SceneCounts:
    tile_pyramid = pyramid.for_image(scene.image_w, scene.image_h)
    anchors = generate_anchors(tile_pyramid) if anchor_source == 'grid' else list(scene.proposals)
    gts = list(scene.gts)

    baseline = screen(gts, anchors, [], th, options, tile_pyramid)
    dea = screen(gts, baseline.anchors, list(scene.af_vectors), th, options, tile_pyramid)
    base_stats = assignment_stats(baseline, gts)
    dea_stats = assignment_stats(dea, gts)
    return SceneCounts(scene.image_id, len(gts),
                       np.asarray(base_stats.histogram, dtype=np.int64),
                       np.asarray(dea_stats.histogram, dtype=np.int64),
                       dea_stats.n_anchor_free,
                       sum(1 for n in base_stats.positives_per_gt if n == 0))


def run_iou_study(scenes: Sequence[StudyScene | SyntheticScene],
                  pyramid: PyramidConfig | None = None,
                  th: Thresholds = Thresholds(),
                  options: ScreenOptions = ScreenOptions(),
                  anchor_source: str = 'grid',
                  threads: int = 1) -> StudyResult:
    if anchor_source not in ANCHOR_SOURCES:
        raise ConfigurationError(f"anchor_source must be one of {ANCHOR_SOURCES}, got {anchor_source!r}")
    pyramid = pyramid or PyramidConfig()
    items = [s if isinstance(s, StudyScene) else StudyScene.from_synthetic(s) for s in scenes]
    n_bins = int(round(1.0 / IOU_BIN_WIDTH))

    if not items:
        logger.warning("empty corpus: writing zero histograms")
        zeros = np.zeros(n_bins, dtype=np.int64)
        return StudyResult(0, zeros, zeros.copy())

    counts = run_parallel(lambda s: _scene_counts(s, pyramid, th, options, anchor_source), items, threads)
    baseline = np.sum([c.baseline for c in counts], axis=0)
    dea = np.sum([c.dea for c in counts], axis=0)
    result = StudyResult(len(counts), baseline, dea, tuple(counts))
    logger.info("study over %d scenes: %d anchor-only positives, %d with enhancement",
                result.n_scenes, result.total('baseline'), result.total('dea'))
    return result
