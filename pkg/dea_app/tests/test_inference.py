"""
Prediction files and inference post-processing (decode, suppress, merge).

Format Tabel:
No | Fungsi | Kondisi dan Alur Logika | Masukan Data | Hasil yang Diharapkan | Keterangan
"""
import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from dea_app.engine.engine_anchors import PyramidConfig, generate_anchors
from dea_app.engine.engine_codec import DeltaVector, PredVector
from dea_app.engine.engine_geometry import HBox, iou_hbb
from dea_app.errors import ConfigurationError, PredictionFormatError
from dea_app.harness.harness_inference import (
    InferenceConfig, decode_ab_predictions, decode_af_predictions, infer_scene, infer_tile,
)
from dea_app.harness.harness_predictions import (
    AnchorPrediction, PredictionSet, anchor_box, format_predictions, oracle_anchor_predictions,
    parse_predictions, read_prediction_file, write_prediction_file,
)

AB_ROW = 'AB 2 3 4 1 ship 0.900000 0.1 -0.2 0.05 0.0'
AF_ROW = 'AF 3 5 6 plane 0.800000 4.0 5.0 6.0 7.0 0.500000'


# ============================================================================
# SKENARIO 10: PREDICTIONS AND INFERENCE
# ============================================================================

class TestScenario10_Inference(SimpleTestCase):
    """
    No   | Fungsi | Kondisi dan Alur Logika | Masukan Data | Hasil yang Diharapkan | Keterangan
    -----|--------|-------------------------|--------------|----------------------|------------
    10.1 | parse_predictions() | AB and AF rows, comments | two rows | one row per branch | Class names or indices
    10.2 | parse_predictions() | Malformed rows | bad tag, count, score, class | PredictionFormatError with line number | Whole file rejected
    10.3 | write_prediction_file() / read_prediction_file() | File round trip | two rows | same rows back | Header comments written
    10.4 | oracle_anchor_predictions() / decode_ab_predictions() | Oracle deltas decode onto the gts | three gts | IoU 1.0 per gt | Network rows clamped at ln(1000/16)
    10.5 | infer_tile() | freeze vs fuse | AB for gt A, AF for gt B | freeze: A only; fuse: A and B | AF score x centerness
    10.6 | infer_scene() | Straddling object over two tiles | two tiles | one merged detection | Per-tile grids by tile size
    """

    def test_10_1_parse_rows(self):
        """Test parsing kedua jenis baris"""
        print("\n[TEST 10.1] parse_predictions - Rows")
        preds = parse_predictions('\n'.join(['# header', '', AB_ROW, AF_ROW, 'AB 2 0 0 0 3 0.5 0 0 0 0']))
        self.assertEqual(len(preds), 3)
        ab = preds.ab[0]
        self.assertEqual((ab.level, ab.m, ab.n, ab.anchor_idx, ab.class_id), (2, 3, 4, 1, 6))
        self.assertEqual(ab.delta, DeltaVector(0.1, -0.2, 0.05, 0.0))
        self.assertEqual(preds.ab[1].class_id, 3)
        af = preds.af[0]
        self.assertEqual((af.level, af.m, af.n, af.class_id), (3, 5, 6, 0))
        self.assertEqual(af.distances(), (4.0, 5.0, 6.0, 7.0))
        self.assertEqual((af.score, af.centerness), (0.8, 0.5))
        print("[PASS] AB and AF rows parsed")

    def test_10_2_malformed_rows(self):
        """Test error terstruktur untuk baris prediksi rusak"""
        print("\n[TEST 10.2] parse_predictions - Malformed Rows")
        cases = [
            'XX 2 3 4 1 ship 0.9 0 0 0 0',
            'AB 2 3 4 ship 0.9 0 0 0 0',
            'AB 2 3 4 1 ship 1.5 0 0 0 0',
            'AB 2 3 4 1 zebra 0.9 0 0 0 0',
            'AF 3 5 6 plane 0.8 4 5 6 7 1.2',
            'AF 3 5 x plane 0.8 4 5 6 7 0.5',
        ]
        for bad in cases:
            with self.assertRaises(PredictionFormatError) as ctx:
                parse_predictions(AB_ROW + '\n' + bad + '\n')
            self.assertEqual(ctx.exception.line_no, 2)
            self.assertIn('line 2', str(ctx.exception))
        print(f"[PASS] {len(cases)} malformed rows rejected at line 2")

    def test_10_3_file_round_trip(self):
        """Test menulis dan membaca file prediksi"""
        print("\n[TEST 10.3] write_prediction_file / read_prediction_file")
        preds = parse_predictions(AB_ROW + '\n' + AF_ROW)
        text = format_predictions(preds)
        self.assertTrue(text.startswith('# AB level m n anchor_idx class score dx dy dw dh\n'))
        with tempfile.TemporaryDirectory() as tmp:
            path = write_prediction_file(Path(tmp) / 'tile.txt', preds)
            back = read_prediction_file(path)
        self.assertEqual(back.ab, preds.ab)
        self.assertEqual(back.af[0].distances(), preds.af[0].distances())
        self.assertEqual(back.af[0].class_id, preds.af[0].class_id)
        print("[PASS] Rows survive a file round trip")

    def test_10_4_oracle_anchor_predictions(self):
        """Test prediksi anchor oracle ter-decode tepat ke gt"""
        print("\n[TEST 10.4] oracle_anchor_predictions / decode_ab_predictions")
        grid = generate_anchors(PyramidConfig(image_w=256, image_h=256))
        gts = [HBox(10, 20, 30, 40, 0), HBox(100, 100, 90, 20, 4), HBox(200, 30, 12, 12, 2)]
        preds = oracle_anchor_predictions(gts, grid, score=0.95)
        self.assertEqual(len(preds), 3)
        dets = decode_ab_predictions(preds, grid)
        for det, gt in zip(dets, gts):
            self.assertGreaterEqual(iou_hbb(det.box, gt), 1.0 - 1e-9)
            self.assertEqual((det.class_id, det.score), (gt.class_id, 0.95))
        self.assertEqual(oracle_anchor_predictions([], grid), [])

        wild = AnchorPrediction(2, 0, 0, 0, 0, 0.5, DeltaVector(0.0, 0.0, 10.0, 10.0))
        anchor = anchor_box(grid, wild)
        decoded = decode_ab_predictions([wild], grid)[0].box
        self.assertAlmostEqual(decoded.w, anchor.w * 62.5, places=6)
        self.assertAlmostEqual(decoded.h, anchor.h * 62.5, places=6)

        stray = AnchorPrediction(2, 999, 0, 0, 0, 0.5, DeltaVector(0, 0, 0, 0))
        with self.assertRaises(PredictionFormatError):
            anchor_box(grid, stray)
        print("[PASS] Oracle deltas decode at IoU 1.0, extreme rows clamped")

    def test_10_5_freeze_and_fuse(self):
        """Test mode inferensi freeze dan fuse"""
        print("\n[TEST 10.5] infer_tile - freeze vs fuse")
        pyramid = PyramidConfig(image_w=128, image_h=128)
        grid = generate_anchors(pyramid)
        gt_a = HBox(10, 10, 30, 30, 0)
        ab = oracle_anchor_predictions([gt_a], grid, score=0.9)
        # B = (70, 70, 20, 20) from the P_2 cell centered at (78, 78)
        af = (PredVector(19, 19, 2, 8.0, 8.0, 12.0, 12.0, class_scores=(0.0, 0.8), centerness=0.5),
              PredVector(0, 0, 2, 0.0, 0.0, 0.0, 0.0))
        preds = PredictionSet(tuple(ab), af)

        frozen = infer_tile(preds, grid, InferenceConfig(mode='freeze'))
        self.assertEqual(len(frozen), 1)
        self.assertGreaterEqual(iou_hbb(frozen[0].box, gt_a), 1.0 - 1e-9)

        fused = infer_tile(preds, grid, InferenceConfig(mode='fuse'))
        self.assertEqual(len(fused), 2)
        extra = fused[1]
        self.assertEqual(extra.box.as_xywh(), (70.0, 70.0, 20.0, 20.0))
        self.assertEqual((extra.class_id, extra.score), (1, 0.4))

        self.assertEqual(len(decode_af_predictions(af, pyramid)), 1)
        with self.assertRaises(ConfigurationError):
            InferenceConfig(mode='joint')
        with self.assertRaises(ConfigurationError):
            InferenceConfig(nms_iou=1.5)
        print("[PASS] freeze ignores AF rows; fuse adds them")

    def test_10_6_infer_scene(self):
        """Test penggabungan deteksi tile ke koordinat citra"""
        print("\n[TEST 10.6] infer_scene - Tile Merge")
        pyramid = PyramidConfig()
        obj = HBox(1000, 100, 60, 40, 0)
        size = {(0, 0): (1024, 1024), (824, 0): (1024, 1024)}
        grid = generate_anchors(pyramid.for_image(1024, 1024))
        left = oracle_anchor_predictions([HBox(1000, 100, 24, 40, 0)], grid, score=0.8)
        right = oracle_anchor_predictions([obj.translated(-824, 0)], grid, score=0.9)
        per_tile = {(0, 0): PredictionSet(tuple(left)), (824, 0): PredictionSet(tuple(right))}
        dets = infer_scene(per_tile, size, pyramid)
        self.assertEqual(len(dets), 1)
        self.assertEqual(dets[0].score, 0.9)
        self.assertGreaterEqual(iou_hbb(dets[0].box, obj), 1.0 - 1e-9)
        print("[PASS] Straddling object merged into one detection")
