"""
Synthetic corpus on disk: image-level annotation files plus one prediction
file per tile, in the layout the screening and inference commands read.

    <out>/annotations/<image_id>.txt
    <out>/predictions/<tile_id>.txt
"""
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..engine.engine_anchors import PyramidConfig, generate_anchors
from ..engine.engine_geometry import HBox
from ..datasets.datasets_dota import (
    DOTA_VOCABULARY, SceneAnnotation, Vocabulary, format_annotations, object_from_hbox, parse_annotations,
)
from ..datasets.datasets_tiling import TilingConfig, crop_object, plan_tiles, tile_id, tile_share
from .harness_pool import run_parallel
from .harness_predictions import PredictionSet, oracle_anchor_predictions, write_prediction_file
from .harness_scenes import (
    DEGRADED_AF_NOISE, SyntheticSceneSpec, generate_scene, is_degraded, oracle_vectors,
)

logger = logging.getLogger(__name__)

ANNOTATION_DIR = 'annotations'
PREDICTION_DIR = 'predictions'


@dataclass(frozen=True)
class CorpusSummary:
    n_scenes: int
    n_tiles: int
    n_objects: int


def synthetic_annotation(image_id: str, image_w: int, image_h: int, gts,
                         vocabulary: Vocabulary = DOTA_VOCABULARY) -> SceneAnnotation:
    """Annotation of a synthetic scene, passed once through the text format so
    later readers see exactly the written coordinates."""
    scene = SceneAnnotation(image_id, image_w, image_h,
                            tuple(object_from_hbox(g, vocabulary.name(g.class_id)) for g in gts))
    return parse_annotations(format_annotations(scene), image_id, vocabulary=vocabulary)


def _write_scene(index: int, out: Path, spec: SyntheticSceneSpec, pyramid: PyramidConfig,
                 tiling: TilingConfig, vocabulary: Vocabulary) -> tuple[int, int]:
    synthetic = generate_scene(spec, index, pyramid)
    annotation = synthetic_annotation(synthetic.image_id, spec.image_w, spec.image_h,
                                      synthetic.gts, vocabulary)
    (out / ANNOTATION_DIR / f"{annotation.image_id}.txt").write_text(
        format_annotations(annotation), encoding='utf-8')

    plan = plan_tiles(annotation.image_w, annotation.image_h, tiling.patch_size, tiling.stride)
    size = plan.tile_size
    offsets = plan.offsets
    gts = annotation.gt_hboxes(vocabulary)
    noisy = [is_degraded(band, box) for band, box in zip(synthetic.bands, synthetic.gts)]

    # setiap objek diprediksi di tiap tile yang menyimpannya, kalau tidak ada di tile terbaiknya
    homes: list[list[int]] = [[] for _ in offsets]
    for i, obj in enumerate(annotation.objects):
        shares = [tile_share(obj, offset, size) for offset in offsets]
        kept = [t for t, share in enumerate(shares) if share >= tiling.crop_retention]
        for t in kept or [int(np.argmax(shares))]:
            homes[t].append(i)

    grid = generate_anchors(pyramid.for_image(*size))
    rng = np.random.default_rng([spec.seed, index, 1])
    single = len(plan) == 1
    for t, offset in enumerate(offsets):
        full = [gts[i].translated(-offset[0], -offset[1]) for i in homes[t]]
        ab = oracle_anchor_predictions(full, grid)

        cropped: list[HBox] = []
        noise: list[float] = []
        for i, obj in enumerate(annotation.objects):
            piece = crop_object(obj, offset, size, tiling.crop_retention)
            if piece is not None:
                cropped.append(piece.hbox.with_class(gts[i].class_id))
                noise.append(max(spec.af_noise, DEGRADED_AF_NOISE) if noisy[i] else spec.af_noise)
        af = oracle_vectors(cropped, grid.config, spec.n_classes, noise, rng, spec.af_ranges)

        name = tile_id(annotation.image_id, offset, single)
        write_prediction_file(out / PREDICTION_DIR / f"{name}.txt", PredictionSet(tuple(ab), tuple(af)),
                              vocabulary)
    logger.debug("%s: %d objects over %d tiles", annotation.image_id, len(gts), len(offsets))
    return len(offsets), len(gts)


def write_synthetic_corpus(out_dir: str | Path, spec: SyntheticSceneSpec, n_scenes: int,
                           pyramid: PyramidConfig | None = None,
                           tiling: TilingConfig = TilingConfig(),
                           vocabulary: Vocabulary = DOTA_VOCABULARY,
                           threads: int = 1) -> CorpusSummary:
    out = Path(out_dir)
    (out / ANNOTATION_DIR).mkdir(parents=True, exist_ok=True)
    (out / PREDICTION_DIR).mkdir(parents=True, exist_ok=True)
    pyramid = pyramid or PyramidConfig()

    counts = run_parallel(lambda i: _write_scene(i, out, spec, pyramid, tiling, vocabulary),
                         range(n_scenes), threads)
    summary = CorpusSummary(n_scenes, sum(c[0] for c in counts), sum(c[1] for c in counts))
    logger.info("wrote %d synthetic scenes (%d tiles) to %s", n_scenes, summary.n_tiles, out)
    return summary
