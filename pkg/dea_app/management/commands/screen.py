from pathlib import Path

from dea_app.engine.engine_discriminator import SAMPLE_COLUMNS
from dea_app.harness.harness_pipeline import screen_corpus

from ._base import DeaCommand


class Command(DeaCommand):
    help = 'Label anchors and anchor-free samples of every tile with the sample discriminator'

    def add_command_arguments(self, parser):
        parser.add_argument('--annotations', required=True, help='directory of image annotation files')
        parser.add_argument('--predictions', required=True, help='directory of per-tile prediction files')
        parser.add_argument('--out', required=True, help='sample table to write')
        parser.add_argument('--positives-only', action='store_true',
                            help='leave negatives out of the sample table')
        parser.add_argument('--summary', help='optional per-tile summary CSV')

    def run(self, config, **options):
        annotations = self.require_dir(options['annotations'], '--annotations')
        predictions = self.require_dir(options['predictions'], '--predictions')
        result = screen_corpus(annotations, predictions, config, options['positives_only'])

        out = Path(options['out'])
        with out.open('w', encoding='utf-8') as fh:
            fh.write(' '.join(SAMPLE_COLUMNS) + '\n')
            for line in result.lines:
                fh.write(line + '\n')
        if options.get('summary'):
            result.tiles.to_csv(options['summary'], index=False)

        tiles = result.tiles
        mean_loss = float(tiles['l_total'].mean()) if len(tiles) else 0.0
        self.stdout.write(self.style.SUCCESS(
            f"{len(tiles)} tiles: {int(tiles['n_anchor_positive'].sum())} anchor positives, "
            f"{int(tiles['n_enhanced'].sum())} enhanced samples, mean loss {mean_loss:.4f} -> {out}"))
        return list(result.errors)
