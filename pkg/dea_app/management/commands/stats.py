from django.core.management.base import CommandError

from dea_app.harness.harness_pipeline import study_scenes
from dea_app.harness.harness_scenes import generate_corpus
from dea_app.harness.harness_study import run_iou_study

from ._base import EXIT_USAGE, DeaCommand


class Command(DeaCommand):
    help = 'Positive-sample IoU histograms, anchor-only against dynamic enhancement'

    def add_command_arguments(self, parser):
        parser.add_argument('--out', required=True, help='directory for the histogram and plot files')
        parser.add_argument('--scenes', type=int, help='study a fresh synthetic corpus of this size')
        parser.add_argument('--annotations', help='directory of image annotation files')
        parser.add_argument('--predictions', help='directory of per-tile prediction files')

    def run(self, config, **options):
        problems = []
        if options.get('scenes') is not None:
            if options['scenes'] < 0:
                raise CommandError('--scenes must be non-negative', returncode=EXIT_USAGE)
            scenes = generate_corpus(config.scenes, options['scenes'], config.pyramid)
        elif options.get('annotations') or options.get('predictions'):
            annotations = self.require_dir(options.get('annotations'), '--annotations')
            predictions = self.require_dir(options.get('predictions'), '--predictions')
            scenes, problems = study_scenes(annotations, predictions, config)
        else:
            raise CommandError('give --scenes N or --annotations DIR --predictions DIR', returncode=EXIT_USAGE)

        if not scenes:
            self.stderr.write(self.style.WARNING('empty corpus: histograms are all zero'))
        result = run_iou_study(scenes, config.pyramid, config.thresholds, config.screen,
                               config.study_anchors, config.threads)
        paths = result.write(options['out'])
        self.stdout.write(self.style.SUCCESS(
            f"{result.n_scenes} scenes: {result.total('baseline')} anchor-only positives, "
            f"{result.total('dea')} with enhancement -> {', '.join(p.name for p in paths)}"))
        return problems
