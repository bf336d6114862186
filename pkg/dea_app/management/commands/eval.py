from pathlib import Path

from dea_app.datasets.datasets_dota import parse_detections
from dea_app.harness.harness_eval import evaluate, ground_truths
from dea_app.harness.harness_pipeline import FileError, corpus_vocabulary, load_annotation_dir

from ._base import DeaCommand


class Command(DeaCommand):
    help = 'VOC-style per-class AP and mAP of a detection file against image annotations'

    def add_command_arguments(self, parser):
        parser.add_argument('--annotations', required=True, help='directory of image annotation files')
        parser.add_argument('--detections', required=True, help='detection file written by infer')
        parser.add_argument('--out', required=True, help='per-class AP table to write')
        parser.add_argument('--voc07', action='store_true', help='11-point interpolated AP')
        parser.add_argument('--xlsx', help='also write the summary and PR curves as a workbook')

    def overrides(self, options):
        return {'voc07': True if options.get('voc07') else None}

    def run(self, config, **options):
        annotations = self.require_dir(options['annotations'], '--annotations')
        scenes, problems = load_annotation_dir(annotations, config.strict)
        vocabulary = corpus_vocabulary(scenes)

        det_path = Path(options['detections'])
        detections, issues = parse_detections(det_path.read_bytes(), vocabulary)
        problems.extend(FileError(str(det_path), issue.message, issue.line_no) for issue in issues)
        known = {scene.image_id for scene in scenes}
        for image_id in sorted(set(detections) - known):
            problems.append(FileError(str(det_path), f"detections for unannotated image {image_id!r}"))

        gts = {scene.image_id: ground_truths(scene, vocabulary) for scene in scenes}
        report = evaluate(detections, gts, config.evaluation, vocabulary)
        report.to_csv(options['out'])
        if options.get('xlsx'):
            report.to_xlsx(options['xlsx'])

        frame = report.summary_frame()
        for row in frame.itertuples(index=False):
            if row.n_gt:
                self.stdout.write(f"{row.abbr:>4} {row.ap:.4f}")
        self.stdout.write(self.style.SUCCESS(
            f"mAP {report.mAP:.4f} over {len(known)} images "
            f"({'VOC07 11-point' if config.evaluation.voc07 else 'continuous'})"))
        return problems
