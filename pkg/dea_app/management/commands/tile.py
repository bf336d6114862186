from pathlib import Path

from dea_app.harness.harness_pipeline import tile_corpus

from ._base import DeaCommand

LISTING_FILE = 'tiles.csv'


class Command(DeaCommand):
    help = 'Cut image annotations into patch-sized tile annotations'

    def add_command_arguments(self, parser):
        parser.add_argument('--annotations', required=True, help='directory of image annotation files')
        parser.add_argument('--out', required=True, help='directory for tile annotation files')

    def run(self, config, **options):
        annotations = self.require_dir(options['annotations'], '--annotations')
        listing, problems = tile_corpus(annotations, options['out'], config)
        listing.to_csv(Path(options['out']) / LISTING_FILE, index=False)
        self.stdout.write(self.style.SUCCESS(
            f"{listing['image_id'].nunique()} images -> {len(listing)} tiles "
            f"({int(listing['n_objects'].sum())} objects) in {options['out']}"))
        return problems
