from django.core.management.base import CommandError

from dea_app.harness.harness_corpus import write_synthetic_corpus

from ._base import EXIT_USAGE, DeaCommand


class Command(DeaCommand):
    help = 'Write a seeded synthetic corpus: image annotations plus per-tile oracle predictions'

    def add_command_arguments(self, parser):
        parser.add_argument('--out', required=True, help='output directory')
        parser.add_argument('--scenes', type=int, default=10, help='number of images')
        parser.add_argument('--image-size', type=int, nargs=2, metavar=('W', 'H'))
        parser.add_argument('--tiny-fraction', type=float)
        parser.add_argument('--af-noise', type=float)

    def overrides(self, options):
        return {
            'image_size': options.get('image_size'),
            'tiny_fraction': options.get('tiny_fraction'),
            'af_noise': options.get('af_noise'),
        }

    def run(self, config, **options):
        n_scenes = options['scenes']
        if n_scenes < 0:
            raise CommandError('--scenes must be non-negative', returncode=EXIT_USAGE)
        summary = write_synthetic_corpus(options['out'], config.scenes, n_scenes, config.pyramid,
                                         config.tiling, threads=config.threads)
        self.stdout.write(self.style.SUCCESS(
            f"wrote {summary.n_scenes} scenes, {summary.n_objects} objects, "
            f"{summary.n_tiles} prediction files to {options['out']}"))
        return []
