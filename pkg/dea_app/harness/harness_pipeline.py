"""
Directory-level runs behind the management commands.

An annotation directory holds one DOTA-style file per image; a prediction
directory holds one file per tile named after the tile. Problems with single
files are collected as FileError records and the run goes on without them.
"""
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING

import pandas as pd

from ..errors import AnnotationParseError, DeaError, PredictionFormatError
from ..engine.engine_anchors import generate_anchors
from ..engine.engine_discriminator import assignment_stats, screen
from ..engine.engine_nms import Detection, IouCounter
from ..datasets.datasets_dota import (
    DOTA_VOCABULARY, SceneAnnotation, Vocabulary, read_annotation_file, write_annotation_file,
)
from ..datasets.datasets_tiling import crop_scene, parse_tile_id, plan_tiles, tile_id
from .harness_eval import EvalReport, evaluate, ground_truths
from .harness_inference import infer_scene
from .harness_pool import run_parallel
from .harness_predictions import PredictionSet, read_prediction_file
from .harness_study import StudyScene
from .harness_training import LOSS_COLUMNS, loss_row, tile_loss

if TYPE_CHECKING:
    from ..config import DeaConfig

logger = logging.getLogger(__name__)

PathLike = str | Path

TILE_COLUMNS = ['tile_id', 'n_gt', 'n_anchor_positive', 'n_enhanced', 'n_negative',
                'skipped_vectors'] + LOSS_COLUMNS


@dataclass(frozen=True)
class FileError:
    path: str
    message: str
    line_no: int = 0

    def __str__(self) -> str:
        where = f"{self.path}:{self.line_no}" if self.line_no else self.path
        return f"{where}: {self.message}"


def load_annotation_dir(directory: PathLike, strict: bool = False,
                        vocabulary: Vocabulary = DOTA_VOCABULARY) -> tuple[list[SceneAnnotation], list[FileError]]:
    """Every `*.txt` annotation file, sorted by name.

    A file with malformed lines contributes its well-formed objects unless
    `strict` is set, in which case it is left out.
    """
    scenes: list[SceneAnnotation] = []
    errors: list[FileError] = []
    for path in sorted(Path(directory).glob('*.txt')):
        try:
            scenes.append(read_annotation_file(path, strict, vocabulary))
        except AnnotationParseError as exc:
            errors.extend(FileError(str(path), issue.message, issue.line_no) for issue in exc.issues)
            if not strict and exc.scene is not None:
                scenes.append(exc.scene)
        except OSError as exc:
            errors.append(FileError(str(path), f"unreadable: {exc}"))
    return scenes, errors


def corpus_vocabulary(scenes: list[SceneAnnotation], base: Vocabulary = DOTA_VOCABULARY) -> Vocabulary:
    return base.extended(c for scene in scenes for c in scene.categories())


def load_tile_predictions(predictions_dir: PathLike, name: str,
                          vocabulary: Vocabulary) -> tuple[PredictionSet | None, FileError | None]:
    path = Path(predictions_dir) / f"{name}.txt"
    try:
        return read_prediction_file(path, vocabulary), None
    except FileNotFoundError:
        return None, FileError(str(path), "missing prediction file")
    except PredictionFormatError as exc:
        return None, FileError(str(path), str(exc), exc.line_no)
    except OSError as exc:
        return None, FileError(str(path), f"unreadable: {exc}")


# ---- inference + evaluation -----------------------------------------------

@dataclass(frozen=True)
class PipelineResult:
    detections: dict[str, list[Detection]]
    report: EvalReport
    errors: tuple[FileError, ...] = field(default_factory=tuple)
    iou_evaluations: int = 0
    vocabulary: Vocabulary = DOTA_VOCABULARY

    @property
    def partial(self) -> bool:
        return bool(self.errors)


def _infer_image(scene: SceneAnnotation, predictions_dir: PathLike, config: 'DeaConfig',
                 vocabulary: Vocabulary, counter: IouCounter) -> tuple[list[Detection], list[FileError]]:
    tiling = config.tiling
    plan = plan_tiles(scene.image_w, scene.image_h, tiling.patch_size, tiling.stride)
    single = len(plan) == 1
    per_tile, errors = {}, []
    for offset in plan.offsets:
        preds, error = load_tile_predictions(predictions_dir, tile_id(scene.image_id, offset, single), vocabulary)
        if error is not None:
            errors.append(error)
            continue
        per_tile[offset] = preds
    sizes = {offset: plan.tile_size for offset in per_tile}
    dets = infer_scene(per_tile, sizes, config.pyramid, config.inference, counter)
    return dets, errors


def run_inference(annotations_dir: PathLike, predictions_dir: PathLike, config: 'DeaConfig'):
    scenes, errors = load_annotation_dir(annotations_dir, config.strict)
    vocabulary = corpus_vocabulary(scenes)
    counter = IouCounter()
    outcomes = run_parallel(lambda s: _infer_image(s, predictions_dir, config, vocabulary, counter),
                            scenes, config.threads)
    detections = {}
    for scene, (dets, tile_errors) in zip(scenes, outcomes):
        detections[scene.image_id] = dets
        errors.extend(tile_errors)
    return scenes, detections, errors, counter.count, vocabulary


def run_pipeline(annotations_dir: PathLike, predictions_dir: PathLike, config: 'DeaConfig') -> PipelineResult:
    """Tile, decode, suppress and merge the predictions of every annotated image, then evaluate."""
    scenes, detections, errors, n_iou, vocabulary = run_inference(annotations_dir, predictions_dir, config)
    gts = {scene.image_id: ground_truths(scene, vocabulary) for scene in scenes}
    report = evaluate(detections, gts, config.evaluation, vocabulary)
    if errors:
        logger.warning("%d file problem(s) during inference", len(errors))
    return PipelineResult(detections, report, tuple(errors), n_iou, vocabulary)


# ---- screening ------------------------------------------------------------

@dataclass(frozen=True)
class ScreenRun:
    lines: tuple[str, ...]
    tiles: pd.DataFrame
    errors: tuple[FileError, ...] = field(default_factory=tuple)


def _tile_inputs(scene: SceneAnnotation, predictions_dir: PathLike, config: 'DeaConfig',
                 vocabulary: Vocabulary):
    oriented = config.screen.iou_mode == 'obb'
    for tile in crop_scene(scene, config.tiling):
        preds, error = load_tile_predictions(predictions_dir, tile.image_id, vocabulary)
        gts = tile.gt_oboxes(vocabulary) if oriented else tile.gt_hboxes(vocabulary)
        yield tile, gts, preds, error


def _screen_image(scene, predictions_dir, config, vocabulary, positives_only):
    lines, rows, errors = [], [], []
    for tile, gts, preds, error in _tile_inputs(scene, predictions_dir, config, vocabulary):
        if error is not None:
            errors.append(error)
            continue
        grid = generate_anchors(config.pyramid.for_image(tile.image_w, tile.image_h))
        result = screen(gts, grid, list(preds.af), config.thresholds, config.screen, grid.config)
        stats = assignment_stats(result, gts)
        try:
            loss = tile_loss(result, grid, preds, tile.gt_hboxes(vocabulary), len(vocabulary),
                             config.af_ranges, config.loss)
        except DeaError as exc:
            errors.append(FileError(tile.image_id, f"loss: {exc}"))
            continue
        lines.extend(result.to_lines(tile.image_id, positives_only))
        rows.append((tile.image_id, len(gts), stats.n_anchor_based, stats.n_anchor_free,
                     len(result.s_negative), result.skipped_vectors) + loss_row(loss))
    return lines, rows, errors


def screen_corpus(annotations_dir: PathLike, predictions_dir: PathLike, config: 'DeaConfig',
                  positives_only: bool = False) -> ScreenRun:
    scenes, errors = load_annotation_dir(annotations_dir, config.strict)
    vocabulary = corpus_vocabulary(scenes)
    outcomes = run_parallel(
        lambda s: _screen_image(s, predictions_dir, config, vocabulary, positives_only),
        scenes, config.threads)
    lines, rows = [], []
    for image_lines, image_rows, image_errors in outcomes:
        lines.extend(image_lines)
        rows.extend(image_rows)
        errors.extend(image_errors)
    return ScreenRun(tuple(lines), pd.DataFrame(rows, columns=TILE_COLUMNS), tuple(errors))


def study_scenes(annotations_dir: PathLike, predictions_dir: PathLike,
                 config: 'DeaConfig') -> tuple[list[StudyScene], list[FileError]]:
    """Tile-level scenes with their anchor-free vectors, for the distribution study."""
    scenes, errors = load_annotation_dir(annotations_dir, config.strict)
    vocabulary = corpus_vocabulary(scenes)
    items = []
    for scene in scenes:
        for tile, gts, preds, error in _tile_inputs(scene, predictions_dir, config, vocabulary):
            if error is not None:
                errors.append(error)
                continue
            items.append(StudyScene(tile.image_id, tile.image_w, tile.image_h, tuple(gts), preds.af))
    return items, errors


def tile_corpus(annotations_dir: PathLike, out_dir: PathLike,
                config: 'DeaConfig') -> tuple[pd.DataFrame, list[FileError]]:
    """Write per-tile annotation files and return the tile listing."""
    scenes, errors = load_annotation_dir(annotations_dir, config.strict)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    for scene in scenes:
        for tile in crop_scene(scene, config.tiling):
            write_annotation_file(tile, out)
            _, (ox, oy) = parse_tile_id(tile.image_id)
            rows.append((tile.image_id, scene.image_id, ox, oy, tile.image_w, tile.image_h, len(tile.objects)))
    listing = pd.DataFrame(rows, columns=['tile_id', 'image_id', 'ox', 'oy', 'w', 'h', 'n_objects'])
    return listing, errors
