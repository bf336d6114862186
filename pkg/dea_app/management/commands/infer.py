from pathlib import Path

import pandas as pd

from dea_app.datasets.datasets_dota import write_detection_file
from dea_app.harness.harness_pipeline import run_inference

from ._base import DeaCommand

DETECTION_FILE = 'detections.txt'
SUMMARY_FILE = 'inference_summary.csv'


class Command(DeaCommand):
    help = 'Decode per-tile predictions, suppress, merge tiles and write image-level detections'

    def add_command_arguments(self, parser):
        parser.add_argument('--annotations', required=True,
                            help='directory of image annotation files (image ids and sizes)')
        parser.add_argument('--predictions', required=True, help='directory of per-tile prediction files')
        parser.add_argument('--out', required=True, help='output directory')
        parser.add_argument('--fuse', action='store_true',
                            help='also decode anchor-free rows and suppress them jointly')

    def overrides(self, options):
        return {'inference': 'fuse' if options.get('fuse') else None}

    def run(self, config, **options):
        annotations = self.require_dir(options['annotations'], '--annotations')
        predictions = self.require_dir(options['predictions'], '--predictions')
        scenes, detections, problems, n_iou, vocabulary = run_inference(annotations, predictions, config)

        out = Path(options['out'])
        out.mkdir(parents=True, exist_ok=True)
        write_detection_file(out / DETECTION_FILE, detections, vocabulary)
        n_dets = sum(len(d) for d in detections.values())
        pd.DataFrame([{
            'images': len(scenes),
            'detections': n_dets,
            'mode': config.inference.mode,
            'nms_iou': config.inference.nms_iou,
            'score_thresh': config.inference.score_thresh,
            'iou_evaluations': n_iou,
        }]).to_csv(out / SUMMARY_FILE, index=False)

        self.stdout.write(self.style.SUCCESS(
            f"{len(scenes)} images, {n_dets} detections ({config.inference.mode}, "
            f"{n_iou} IoU evaluations) -> {out / DETECTION_FILE}"))
        return problems
