# Re-export the harness surface used by the management commands
from .harness_scenes import (
    BANDS,
    BAND_AREAS,
    SyntheticSceneSpec,
    SyntheticScene,
    is_degraded,
    oracle_vectors,
    generate_scene,
    generate_corpus,
)

from .harness_predictions import (
    AnchorPrediction,
    PredictionSet,
    parse_predictions,
    read_prediction_file,
    format_predictions,
    write_prediction_file,
    anchor_box,
    oracle_anchor_predictions,
)

from .harness_inference import (
    INFERENCE_MODES,
    InferenceConfig,
    decode_ab_predictions,
    decode_af_predictions,
    infer_tile,
    infer_scene,
)

from .harness_eval import (
    GroundTruth,
    EvalConfig,
    ClassCurve,
    EvalReport,
    voc_ap,
    evaluate,
    ground_truths,
)

from .harness_study import (
    ANCHOR_SOURCES,
    StudyScene,
    SceneCounts,
    StudyResult,
    run_iou_study,
)

from .harness_pool import run_parallel

from .harness_corpus import (
    ANNOTATION_DIR,
    PREDICTION_DIR,
    CorpusSummary,
    synthetic_annotation,
    write_synthetic_corpus,
)

from .harness_training import (
    LOSS_COLUMNS,
    anchor_samples,
    location_samples,
    tile_loss,
    loss_row,
)

from .harness_pipeline import (
    FileError,
    PipelineResult,
    ScreenRun,
    load_annotation_dir,
    corpus_vocabulary,
    load_tile_predictions,
    run_inference,
    run_pipeline,
    screen_corpus,
    study_scenes,
    tile_corpus,
)

__all__ = [
    # Synthetic scenes
    'BANDS', 'BAND_AREAS', 'SyntheticSceneSpec', 'SyntheticScene', 'is_degraded',
    'oracle_vectors', 'generate_scene', 'generate_corpus',
    # Prediction files
    'AnchorPrediction', 'PredictionSet', 'parse_predictions', 'read_prediction_file',
    'format_predictions', 'write_prediction_file', 'anchor_box', 'oracle_anchor_predictions',
    # Inference
    'INFERENCE_MODES', 'InferenceConfig', 'decode_ab_predictions', 'decode_af_predictions',
    'infer_tile', 'infer_scene',
    # Evaluation
    'GroundTruth', 'EvalConfig', 'ClassCurve', 'EvalReport', 'voc_ap', 'evaluate', 'ground_truths',
    # Distribution study
    'ANCHOR_SOURCES', 'StudyScene', 'SceneCounts', 'StudyResult', 'run_iou_study',
    # Worker pool
    'run_parallel',
    # Corpus writer
    'ANNOTATION_DIR', 'PREDICTION_DIR', 'CorpusSummary', 'synthetic_annotation',
    'write_synthetic_corpus',
    # Loss dry run
    'LOSS_COLUMNS', 'anchor_samples', 'location_samples', 'tile_loss', 'loss_row',
    # Directory runs
    'FileError', 'PipelineResult', 'ScreenRun', 'load_annotation_dir', 'corpus_vocabulary',
    'load_tile_predictions', 'run_inference', 'run_pipeline', 'screen_corpus', 'study_scenes',
    'tile_corpus',
]
