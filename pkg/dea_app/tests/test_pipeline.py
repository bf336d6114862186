"""
Directory-level runs: synthetic corpus on disk, screening, study inputs,
tiling and the inference + evaluation pipeline.

Format Tabel:
No | Fungsi | Kondisi dan Alur Logika | Masukan Data | Hasil yang Diharapkan | Keterangan
"""
import math
import shutil
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from dea_app.config import load_config
from dea_app.harness.harness_corpus import ANNOTATION_DIR, PREDICTION_DIR, write_synthetic_corpus
from dea_app.harness.harness_pipeline import (
    TILE_COLUMNS, corpus_vocabulary, load_annotation_dir, run_pipeline, screen_corpus, study_scenes,
    tile_corpus,
)
from dea_app.harness.harness_study import run_iou_study

SMALL = {'image_size': '256', 'objects_min': 2, 'objects_max': 6, 'tiny_fraction': 0.5}
WIDE = {'image_size': '1200 900', 'objects_min': 4, 'objects_max': 8, 'tiny_fraction': 0.3}


def write_corpus(out, overrides, n_scenes, threads=1):
    config = load_config(overrides=overrides)
    summary = write_synthetic_corpus(out, config.scenes, n_scenes, config.pyramid, config.tiling,
                                     threads=threads)
    return config, summary


def tree_bytes(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(Path(root).rglob('*.txt'))}


# ============================================================================
# SKENARIO 14: DIRECTORY PIPELINE
# ============================================================================

class TestScenario14_Pipeline(SimpleTestCase):
    """
    No   | Fungsi | Kondisi dan Alur Logika | Masukan Data | Hasil yang Diharapkan | Keterangan
    -----|--------|-------------------------|--------------|----------------------|------------
    14.1 | write_synthetic_corpus() / run_pipeline() | Oracle corpus, one tile per image | 4 scenes 256x256 | mAP 1.0, no file problems | Byte-identical reruns and thread counts
    14.2 | run_pipeline() | Two tiles per image | 3 scenes 1200x900 | tile-named files; mAP 1.0 | Cross-tile merge
    14.3 | run_pipeline() | Missing prediction file | one file deleted | FileError, partial, mAP < 1 | Rest of the corpus used
    14.4 | load_annotation_dir() | Malformed and unknown-category files | strict on / off | partial scene kept / file dropped | Errors carry line numbers
    14.5 | screen_corpus() | Sample table and tile summary | 4 scenes | one row per tile; positives-only lines | Losses per tile
    14.6 | study_scenes() | Tile scenes for the study | 3 wide scenes | DEA >= baseline bin-wise | AF rows from files
    14.7 | tile_corpus() | Tile annotation files | 3 wide scenes | listing with offsets; files per tile | Objects below retention dropped
    """

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls._tmp = tempfile.TemporaryDirectory()
        root = Path(cls._tmp.name)
        cls.small_dir = root / 'small'
        cls.wide_dir = root / 'wide'
        cls.small_config, cls.small_summary = write_corpus(cls.small_dir, SMALL, 4)
        cls.wide_config, cls.wide_summary = write_corpus(cls.wide_dir, WIDE, 3)

    @classmethod
    def tearDownClass(cls):
        cls._tmp.cleanup()
        super().tearDownClass()

    def test_14_1_single_tile_pipeline(self):
        """Test korpus oracle dari ujung ke ujung"""
        print("\n[TEST 14.1] write_synthetic_corpus / run_pipeline - Single Tile")
        self.assertEqual(self.small_summary.n_scenes, 4)
        self.assertEqual(self.small_summary.n_tiles, 4)
        names = sorted(p.name for p in (self.small_dir / PREDICTION_DIR).glob('*.txt'))
        self.assertEqual(names, [f'syn0_{k:05d}.txt' for k in range(4)])

        result = run_pipeline(self.small_dir / ANNOTATION_DIR, self.small_dir / PREDICTION_DIR,
                              self.small_config)
        self.assertFalse(result.partial)
        self.assertAlmostEqual(result.report.mAP, 1.0, places=9)
        n_dets = sum(len(d) for d in result.detections.values())
        self.assertEqual(n_dets, self.small_summary.n_objects)

        with tempfile.TemporaryDirectory() as tmp:
            write_corpus(Path(tmp) / 'again', SMALL, 4)
            write_corpus(Path(tmp) / 'pooled', SMALL, 4, threads=3)
            first = tree_bytes(self.small_dir)
            self.assertEqual(tree_bytes(Path(tmp) / 'again'), first)
            self.assertEqual(tree_bytes(Path(tmp) / 'pooled'), first)
        print(f"[PASS] mAP {result.report.mAP:.4f} over {n_dets} detections; reruns identical")

    def test_14_2_two_tile_pipeline(self):
        """Test tiling, penggabungan dan evaluasi pada citra yang lebih lebar dari patch"""
        print("\n[TEST 14.2] run_pipeline - Two Tiles")
        self.assertEqual(self.wide_summary.n_tiles, 6)
        names = sorted(p.stem for p in (self.wide_dir / PREDICTION_DIR).glob('*.txt'))
        self.assertEqual(names[:2], ['syn0_00000__0__0', 'syn0_00000__176__0'])
        result = run_pipeline(self.wide_dir / ANNOTATION_DIR, self.wide_dir / PREDICTION_DIR,
                              self.wide_config)
        self.assertFalse(result.partial)
        self.assertAlmostEqual(result.report.mAP, 1.0, places=9)
        for image_id, dets in result.detections.items():
            self.assertTrue(image_id.startswith('syn0_'))
            for det in dets:
                self.assertLessEqual(det.box.x2, 1200 + 1e-6)
        print(f"[PASS] mAP {result.report.mAP:.4f} after merging tiles")

    def test_14_3_missing_prediction_file(self):
        """Test file prediksi yang hilang dilaporkan dan sisanya tetap dievaluasi"""
        print("\n[TEST 14.3] run_pipeline - Missing Prediction File")
        with tempfile.TemporaryDirectory() as tmp:
            copy = Path(tmp) / 'corpus'
            shutil.copytree(self.small_dir, copy)
            (copy / PREDICTION_DIR / 'syn0_00001.txt').unlink()
            result = run_pipeline(copy / ANNOTATION_DIR, copy / PREDICTION_DIR, self.small_config)
        self.assertTrue(result.partial)
        self.assertEqual(len(result.errors), 1)
        self.assertIn('missing prediction file', str(result.errors[0]))
        self.assertEqual(result.detections['syn0_00001'], [])
        self.assertLess(result.report.mAP, 1.0)
        print(f"[PASS] partial run, mAP {result.report.mAP:.4f}")

    def test_14_4_strict_and_lenient_loading(self):
        """Test file anotasi rusak dengan dan tanpa parsing strict"""
        print("\n[TEST 14.4] load_annotation_dir - Strict vs Lenient")
        with tempfile.TemporaryDirectory() as tmp:
            folder = Path(tmp)
            (folder / 'good.txt').write_text('imagesize: 64 64\n0 0 10 0 10 10 0 10 ship 0\n', encoding='utf-8')
            (folder / 'odd.txt').write_text('imagesize: 64 64\n0 0 10 0 10 10 0 10 plane 0\n'
                                            '1 2 3 a 5 6 7 8 ship 0\n'
                                            '20 20 30 20 30 30 20 30 zebra 0\n', encoding='utf-8')
            lenient, lenient_errors = load_annotation_dir(folder)
            strict, strict_errors = load_annotation_dir(folder, strict=True)
        self.assertEqual([s.image_id for s in lenient], ['good', 'odd'])
        self.assertEqual(lenient[1].categories(), ['plane', 'zebra'])
        self.assertEqual([e.line_no for e in lenient_errors], [3])
        self.assertIn('odd.txt:3:', str(lenient_errors[0]))
        self.assertEqual(corpus_vocabulary(lenient).name(15), 'zebra')

        self.assertEqual([s.image_id for s in strict], ['good'])
        self.assertEqual([e.line_no for e in strict_errors], [3, 4])
        print("[PASS] Lenient keeps the partial scene; strict drops the file")

    def test_14_5_screen_corpus(self):
        """Test tabel sampel dan ringkasan per tile"""
        print("\n[TEST 14.5] screen_corpus")
        run = screen_corpus(self.small_dir / ANNOTATION_DIR, self.small_dir / PREDICTION_DIR,
                            self.small_config)
        self.assertEqual(run.errors, ())
        tiles = run.tiles
        self.assertEqual(list(tiles.columns), TILE_COLUMNS)
        self.assertEqual(len(tiles), 4)
        self.assertEqual(int(tiles['n_gt'].sum()), self.small_summary.n_objects)
        self.assertGreater(int(tiles['n_enhanced'].sum()), 0)
        self.assertTrue(all(math.isfinite(v) and v >= 0.0 for v in tiles['l_total']))
        self.assertEqual(tiles['skipped_vectors'].tolist(), [0, 0, 0, 0])

        positives = screen_corpus(self.small_dir / ANNOTATION_DIR, self.small_dir / PREDICTION_DIR,
                                  self.small_config, positives_only=True)
        self.assertLess(len(positives.lines), len(run.lines))
        self.assertTrue(all(line.split()[3] == '1' for line in positives.lines))
        n_positive = int(tiles['n_anchor_positive'].sum() + tiles['n_enhanced'].sum())
        self.assertEqual(len(positives.lines), n_positive)
        print(f"[PASS] {len(run.lines)} sample rows, {n_positive} positives")

    def test_14_6_study_scenes(self):
        """Test studi atas tile yang dibaca ulang dari disk"""
        print("\n[TEST 14.6] study_scenes")
        scenes, errors = study_scenes(self.wide_dir / ANNOTATION_DIR, self.wide_dir / PREDICTION_DIR,
                                      self.wide_config)
        self.assertEqual(errors, [])
        self.assertEqual(len(scenes), 6)
        self.assertTrue(all(scene.af_vectors for scene in scenes if scene.gts))
        result = run_iou_study(scenes, self.wide_config.pyramid)
        self.assertTrue(np.all(result.dea >= result.baseline))
        self.assertGreater(result.total('dea'), result.total('baseline'))
        print(f"[PASS] {len(scenes)} tiles: {result.total('baseline')} -> {result.total('dea')}")

    def test_14_7_tile_corpus(self):
        """Test file anotasi tile dan daftarnya"""
        print("\n[TEST 14.7] tile_corpus")
        with tempfile.TemporaryDirectory() as tmp:
            listing, errors = tile_corpus(self.wide_dir / ANNOTATION_DIR, tmp, self.wide_config)
            written = sorted(p.stem for p in Path(tmp).glob('*.txt'))
        self.assertEqual(errors, [])
        self.assertEqual(list(listing.columns), ['tile_id', 'image_id', 'ox', 'oy', 'w', 'h', 'n_objects'])
        self.assertEqual(len(listing), 6)
        self.assertEqual(sorted(listing['tile_id']), written)
        self.assertEqual(sorted(set(listing['ox'])), [0, 176])
        self.assertEqual(set(listing['oy']), {0})
        self.assertEqual(set(zip(listing['w'], listing['h'])), {(1024, 900)})
        print(f"[PASS] {len(listing)} tiles listed and written")
