"""
Anchor-free distance codec, anchor-based delta codec, centerness and the
per-level anchor-free target assignment.

Format Tabel:
No | Fungsi | Kondisi dan Alur Logika | Masukan Data | Hasil yang Diharapkan | Keterangan
"""
import math

import numpy as np
from django.test import SimpleTestCase

from dea_app.engine.engine_anchors import PyramidConfig
from dea_app.engine.engine_codec import (
    DEFAULT_AF_RANGES, DEFAULT_MAX_LOG_RATIO, DeltaVector, PredVector, assign_af_targets, cell_center, centerness_target,
    decode_af, decode_delta, decode_distances, encode_af, encode_delta,
)
from dea_app.engine.engine_geometry import HBox, iou_hbb
from dea_app.errors import CodecError, ConfigurationError

UNIT_STRIDE = PyramidConfig(strides=(1,), image_w=64, image_h=64)


# ============================================================================
# SKENARIO 3: BOX CODECS
# ============================================================================

class TestScenario3_BoxCodec(SimpleTestCase):
    """
    No  | Fungsi | Kondisi dan Alur Logika | Masukan Data | Hasil yang Diharapkan | Keterangan
    ----|--------|-------------------------|--------------|----------------------|------------
    3.1 | decode_distances() | Direct substitution at a location | (10,10), v=(3,2,5,4) | x=8, y=7, w=6, h=8 | Exact
    3.2 | decode_af() | Cell location at the vector's level; class argmax | m=n=2 at stride 8 | box around (20, 20) | Zero-area vectors rejected
    3.3 | encode_af() | Center, off-center, boundary | box (0,0,10,10) | (5,5,5,5); (8,2,2,8); CodecError | Strict interior only
    3.4 | encode_delta() / decode_delta() | Identity, doubled extents, random and 100x round trips | anchor a | (0,0,0,0); 2x box; 1e-6 relative | Clamp only when asked for
    3.5 | centerness_target() | Centered, closed form, monotone sweep | (1,4,1,4) | 1.0; 0.25; non-decreasing to center | Non-positive distances rejected
    3.6 | encode_af() / decode_af() | Random round trips and interior property | 2000 random boxes | inverse within 1e-9; IoU 1.0 | Decoded box contains its location
    3.7 | assign_af_targets() | Range gating and smallest-area tie rule | two nested gts | each location goes to the smaller gt | ensure_coverage rescues tiny gts
    """

    def test_3_1_decode_hand_case(self):
        """Test kasus decode yang dihitung manual"""
        print("\n[TEST 3.1] decode_distances - Hand Case")
        box = decode_distances((10.0, 10.0), (3.0, 2.0, 5.0, 4.0))
        self.assertEqual(box.as_xywh(), (8.0, 7.0, 6.0, 8.0))
        centered = decode_distances((20.0, 20.0), (5.0, 5.0, 5.0, 5.0))
        self.assertEqual((centered.cx, centered.cy, centered.w, centered.h), (20.0, 20.0, 10.0, 10.0))
        with self.assertRaises(CodecError):
            decode_distances((0.0, 0.0), (0.0, 0.0, 0.0, 0.0))
        with self.assertRaises(CodecError):
            decode_distances((0.0, 0.0), (1.0, -1.0, 1.0, 1.0))
        print("[PASS] (8, 7, 6, 8) exact")

    def test_3_2_decode_af_levels(self):
        """Test decode pada lokasi citra dari sel pyramid"""
        print("\n[TEST 3.2] decode_af - Pyramid Cells")
        pyramid = PyramidConfig()
        self.assertEqual(cell_center(2, 2, 8), (20.0, 20.0))
        v = PredVector(2, 2, 3, 5.0, 5.0, 5.0, 5.0, class_scores=(0.1, 0.7, 0.2))
        box = decode_af(v, pyramid)
        self.assertEqual(box.as_xywh(), (15.0, 15.0, 10.0, 10.0))
        self.assertEqual(box.class_id, 1)
        self.assertEqual(v.score, 0.7)
        # ties resolve to the lower class index
        self.assertEqual(PredVector(0, 0, 2, 1, 1, 1, 1, class_scores=(0.5, 0.5)).class_id, 0)
        with self.assertRaises(CodecError):
            PredVector(0, 0, 2, 1, 1, 1, 1, centerness=1.5)
        with self.assertRaises(CodecError):
            decode_af(PredVector(0, 0, 2, 0.0, 0.0, 0.0, 0.0), pyramid)
        print("[PASS] Cell (2, 2) at stride 8 decodes around (20, 20)")

    def test_3_3_encode_af_cases(self):
        """Test encode_af di pusat, di luar pusat dan di tepi"""
        print("\n[TEST 3.3] encode_af - Interior Locations")
        box = HBox(0, 0, 10, 10)
        self.assertEqual(encode_af(box, (5.0, 5.0)), (5.0, 5.0, 5.0, 5.0))
        self.assertEqual(encode_af(box, (2.0, 8.0)), (8.0, 2.0, 2.0, 8.0))
        for location in ((0.0, 5.0), (10.0, 5.0), (5.0, 0.0), (11.0, 5.0)):
            with self.assertRaises(CodecError):
                encode_af(box, location)
        print("[PASS] (5,5,5,5) / (8,2,2,8) / boundary rejected")

    def test_3_4_delta_codec(self):
        """Test codec delta anchor-based"""
        print("\n[TEST 3.4] encode_delta / decode_delta")
        anchor = HBox(10, 20, 32, 16)
        self.assertEqual(encode_delta(anchor, anchor).as_tuple(), (0.0, 0.0, 0.0, 0.0))
        doubled = decode_delta(anchor, DeltaVector(0.0, 0.0, math.log(2), math.log(2)))
        self.assertAlmostEqual(doubled.w, 64.0, places=9)
        self.assertAlmostEqual(doubled.h, 32.0, places=9)
        self.assertAlmostEqual(doubled.cx, anchor.cx, places=9)
        self.assertAlmostEqual(doubled.cy, anchor.cy, places=9)

        rng = np.random.default_rng(4)
        for _ in range(2000):
            a = HBox(*rng.uniform(-500, 500, size=2), *rng.uniform(1, 400, size=2))
            g = HBox(*rng.uniform(-500, 500, size=2), *rng.uniform(1, 400, size=2))
            back = decode_delta(a, encode_delta(a, g))
            for got, want, scale in ((back.cx, g.cx, g.w), (back.cy, g.cy, g.h), (back.w, g.w, g.w),
                                     (back.h, g.h, g.h)):
                self.assertLessEqual(abs(got - want), 1e-6 * max(scale, abs(want)))

        tiny, large = HBox(99, 99, 2, 2), HBox(0, 0, 200, 200)
        delta = encode_delta(tiny, large)
        back = decode_delta(tiny, delta)
        for got, want in zip(back.as_xywh(), large.as_xywh()):
            self.assertAlmostEqual(got, want, places=9)
        clamped = decode_delta(tiny, delta, max_log_ratio=DEFAULT_MAX_LOG_RATIO)
        self.assertAlmostEqual(clamped.w, 125.0, places=9)
        self.assertAlmostEqual(clamped.cx, 100.0, places=9)
        print("[PASS] Identity, 2x extents, 2000 round trips and a 100x extent ratio")

    def test_3_5_centerness(self):
        """Test target centerness"""
        print("\n[TEST 3.5] centerness_target")
        self.assertEqual(centerness_target((3.0, 2.0, 3.0, 2.0)), 1.0)
        # (v_t, v_l, v_b, v_r) = (1, 1, 4, 4)
        self.assertAlmostEqual(centerness_target((1.0, 1.0, 4.0, 4.0)), 0.25, places=12)
        with self.assertRaises(CodecError):
            centerness_target((0.0, 1.0, 1.0, 1.0))

        box = HBox(0, 0, 40, 20)
        previous = 0.0
        for step in range(1, 20):
            x = step  # walk from the left edge toward the center x = 20
            value = centerness_target(encode_af(box, (float(x), 10.0)))
            self.assertGreaterEqual(value, previous)
            previous = value
        self.assertAlmostEqual(previous, math.sqrt(19.0 / 21.0), places=12)
        print("[PASS] 1.0 / 0.25 / monotone toward the center")

    def test_3_6_af_round_trips(self):
        """Test round trip anchor-free acak"""
        print("\n[TEST 3.6] encode_af / decode_af - Round Trips")
        rng = np.random.default_rng(6)
        for _ in range(2000):
            stride = 1
            m, n = int(rng.integers(0, 60)), int(rng.integers(0, 60))
            px, py = cell_center(m, n, stride)
            dist = tuple(float(d) for d in rng.uniform(0.01, 50.0, size=4))
            v = PredVector(m, n, 2, *dist)
            box = decode_af(v, UNIT_STRIDE)
            self.assertTrue(box.contains_point(px, py, strict=True))
            back = encode_af(box, (px, py))
            for got, want in zip(back, dist):
                self.assertAlmostEqual(got, want, delta=1e-9 * max(1.0, want))
            self.assertAlmostEqual(iou_hbb(decode_distances((px, py), back), box), 1.0, delta=1e-12)
        print("[PASS] 2000 inverse pairs")

    def test_3_7_af_target_assignment(self):
        """Test penugasan target anchor-free per level"""
        print("\n[TEST 3.7] assign_af_targets - Ranges and Ties")
        pyramid = PyramidConfig(image_w=256, image_h=256)
        outer = HBox(8, 8, 100, 100, 0)
        inner = HBox(40, 40, 30, 30, 1)
        targets = assign_af_targets([outer, inner], pyramid)
        self.assertTrue(targets)
        for t in targets:
            lo, hi = DEFAULT_AF_RANGES[t.level - 2]
            self.assertTrue(lo < max(t.distances) <= hi)
            loc = cell_center(t.m, t.n, pyramid.stride_of(t.level))
            self.assertEqual(t.distances, encode_af([outer, inner][t.gt_index], loc))
            if t.gt_index == 0 and inner.contains_point(*loc):
                # the smaller gt claims a location only when its range fits the level
                self.assertFalse(max(encode_af(inner, loc)) <= hi and max(encode_af(inner, loc)) > lo)
        keys = [(t.level, t.m, t.n) for t in targets]
        self.assertEqual(len(keys), len(set(keys)))

        # no stride-4 or stride-8 cell center falls inside (103, 105)
        tiny = HBox(103.0, 103.0, 2.0, 2.0, 0)
        self.assertEqual(assign_af_targets([tiny], pyramid), [])
        rescued = assign_af_targets([tiny], pyramid, ensure_coverage=True)
        self.assertEqual(len(rescued), 1)
        self.assertEqual((rescued[0].level, rescued[0].m, rescued[0].n), (4, 6, 6))
        self.assertEqual(rescued[0].distances, (1.0, 1.0, 1.0, 1.0))
        with self.assertRaises(ConfigurationError):
            assign_af_targets([outer], pyramid, ranges=((0.0, 64.0),))
        print(f"[PASS] {len(targets)} locations, each within its level range")
