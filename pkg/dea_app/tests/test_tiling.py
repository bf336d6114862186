"""
Patch tiling, tile-space annotation crops and cross-tile merging.

Format Tabel:
No | Fungsi | Kondisi dan Alur Logika | Masukan Data | Hasil yang Diharapkan | Keterangan
"""
import numpy as np
from django.test import SimpleTestCase

from dea_app.datasets.datasets_dota import SceneAnnotation, object_from_hbox
from dea_app.datasets.datasets_tiling import (
    TilingConfig, axis_offsets, crop_annotations, crop_scene, merge_detections, parse_tile_id,
    plan_tiles, tile_id, tile_share, to_global, to_tile,
)
from dea_app.engine.engine_geometry import HBox
from dea_app.engine.engine_nms import Detection, IouCounter
from dea_app.errors import ConfigurationError


# ============================================================================
# SKENARIO 8: TILING
# ============================================================================

class TestScenario8_Tiling(SimpleTestCase):
    """
    No  | Fungsi | Kondisi dan Alur Logika | Masukan Data | Hasil yang Diharapkan | Keterangan
    ----|--------|-------------------------|--------------|----------------------|------------
    8.1 | axis_offsets() | Clamped last offset | 4000 / 1024 / 800 px | [0,824,1648,2472,2976]; [0]; [0] | patch 1024, stride 824
    8.2 | axis_offsets() | Coverage and overlap on random sizes | 500 widths | every pixel covered, overlap >= patch - stride | Last tile ends on the edge
    8.3 | plan_tiles() / tile_id() | Plan layout, names and validation | 2000x1024; 800x600 | 3 tiles; single tile keeps the image id | patch >= stride > 0
    8.4 | to_global() / to_tile() | Coordinate round trip | random points and offsets | inverse within 1e-9 | Tile to image and back
    8.5 | crop_annotations() | Retention rule for straddling objects | shares 0.4 and 0.6 | dropped; clipped to the tile | Fully inside kept as is
    8.6 | merge_detections() | Straddling and single-tile objects | detections per tile | one detection per object | Cross-tile NMS at IoU 0.1
    """

    def test_8_1_offsets(self):
        """Test offset yang dijepit ke tepi"""
        print("\n[TEST 8.1] axis_offsets - Clamping")
        self.assertEqual(axis_offsets(4000, 1024, 824), [0, 824, 1648, 2472, 2976])
        self.assertEqual(axis_offsets(1024, 1024, 824), [0])
        self.assertEqual(axis_offsets(800, 1024, 824), [0])
        self.assertEqual(axis_offsets(1025, 1024, 824), [0, 1])
        print("[PASS] [0, 824, 1648, 2472, 2976]")

    def test_8_2_coverage(self):
        """Test tile menutup sumbu dengan overlap minimal sesuai konfigurasi"""
        print("\n[TEST 8.2] axis_offsets - Coverage")
        rng = np.random.default_rng(82)
        for _ in range(500):
            patch = int(rng.integers(64, 1100))
            stride = int(rng.integers(1, patch + 1))
            dim = int(rng.integers(1, 6000))
            offsets = axis_offsets(dim, patch, stride)
            self.assertEqual(offsets[0], 0)
            self.assertEqual(offsets, sorted(set(offsets)))
            if dim > patch:
                self.assertEqual(offsets[-1] + patch, dim)
            covered = np.zeros(dim, dtype=bool)
            for o in offsets:
                covered[o:o + patch] = True
            self.assertTrue(covered.all())
            for a, b in zip(offsets, offsets[1:]):
                self.assertGreaterEqual(a + patch - b, patch - stride)
        print("[PASS] 500 random axes fully covered")

    def test_8_3_plan_and_names(self):
        """Test rencana tile, nama tile dan validasi konfigurasi"""
        print("\n[TEST 8.3] plan_tiles / tile_id")
        plan = plan_tiles(2000, 1024)
        self.assertEqual(plan.x_offsets, (0, 824, 976))
        self.assertEqual(plan.y_offsets, (0,))
        self.assertEqual(len(plan), 3)
        self.assertEqual(plan.offsets, [(0, 0), (824, 0), (976, 0)])
        self.assertEqual(plan.tile_size, (1024, 1024))
        self.assertEqual(plan_tiles(800, 600).tile_size, (800, 600))
        self.assertEqual(plan_tiles(0, 0).tile_size, (1024, 1024))

        self.assertEqual(tile_id('P0001', (824, 0)), 'P0001__824__0')
        self.assertEqual(tile_id('P0001', (0, 0), single=True), 'P0001')
        self.assertEqual(parse_tile_id('P0001__824__0'), ('P0001', (824, 0)))
        self.assertEqual(parse_tile_id('a__b__976__0'), ('a__b', (976, 0)))
        self.assertEqual(parse_tile_id('P0001'), ('P0001', (0, 0)))

        with self.assertRaises(ConfigurationError):
            plan_tiles(100, 100, patch=512, stride=600)
        with self.assertRaises(ConfigurationError):
            TilingConfig(stride=0)
        with self.assertRaises(ConfigurationError):
            TilingConfig(crop_retention=0.0)
        print("[PASS] 3 tiles; single tile keeps the image id")

    def test_8_4_coordinate_round_trip(self):
        """Test transformasi koordinat tile ke citra"""
        print("\n[TEST 8.4] to_global / to_tile")
        rng = np.random.default_rng(84)
        for _ in range(1000):
            point = tuple(float(v) for v in rng.uniform(0, 1024, size=2))
            offset = (int(rng.integers(0, 5000)), int(rng.integers(0, 5000)))
            there = to_global(point, offset)
            back = to_tile(there, offset)
            self.assertAlmostEqual(back[0], point[0], delta=1e-9)
            self.assertAlmostEqual(back[1], point[1], delta=1e-9)
            self.assertEqual(there, (point[0] + offset[0], point[1] + offset[1]))
        print("[PASS] 1000 points map back exactly")

    def test_8_5_crop_retention(self):
        """Test aturan retensi luas saat memotong anotasi"""
        print("\n[TEST 8.5] crop_annotations - Retention")
        mostly_out = object_from_hbox(HBox(1000, 100, 60, 40), 'ship')
        mostly_in = object_from_hbox(HBox(988, 300, 60, 40), 'plane')
        scene = SceneAnnotation('big', 2000, 1024, (mostly_out, mostly_in))
        self.assertAlmostEqual(tile_share(mostly_out, (0, 0), (1024, 1024)), 0.4, places=9)
        self.assertAlmostEqual(tile_share(mostly_in, (0, 0), (1024, 1024)), 0.6, places=9)

        first = crop_annotations(scene, (0, 0))
        self.assertEqual(first.image_id, 'big__0__0')
        self.assertEqual(first.categories(), ['plane'])
        for got, want in zip(first.objects[0].hbox.as_xywh(), (988.0, 300.0, 36.0, 40.0)):
            self.assertAlmostEqual(got, want, places=6)

        tiles = crop_scene(scene, TilingConfig())
        self.assertEqual([t.image_id for t in tiles], ['big__0__0', 'big__824__0', 'big__976__0'])
        self.assertEqual(tiles[1].categories(), ['ship', 'plane'])
        for got, want in zip(tiles[1].objects[0].hbox.as_xywh(), (176.0, 100.0, 60.0, 40.0)):
            self.assertAlmostEqual(got, want, places=9)

        lenient = crop_annotations(scene, (0, 0), retention=0.3)
        self.assertEqual(lenient.categories(), ['ship', 'plane'])

        small = crop_scene(SceneAnnotation('tiny', 800, 600, (object_from_hbox(HBox(10, 10, 5, 5), 'ship'),)))
        self.assertEqual(len(small), 1)
        self.assertEqual((small[0].image_id, small[0].image_w, small[0].image_h), ('tiny', 800, 600))
        print("[PASS] 0.4 share dropped, 0.6 share clipped to the tile")

    def test_8_6_merge(self):
        """Test penggabungan antar tile"""
        print("\n[TEST 8.6] merge_detections - Cross-Tile NMS")
        full = Detection(HBox(176, 100, 60, 40, 0), 0.9, 0)
        partial = Detection(HBox(1000, 100, 24, 40, 0), 0.8, 0)
        inside = Detection(HBox(100, 500, 20, 20, 1), 0.7, 1)
        counter = IouCounter()
        merged = merge_detections({(824, 0): [full], (0, 0): [partial, inside]}, counter=counter)
        self.assertEqual(len(merged), 2)
        self.assertEqual(merged[0].box.as_xywh(), (1000.0, 100.0, 60.0, 40.0))
        self.assertEqual(merged[0].score, 0.9)
        self.assertEqual(merged[1].box.as_xywh(), (100.0, 500.0, 20.0, 20.0))
        self.assertGreater(counter.count, 0)

        self.assertEqual(len(merge_detections({(0, 0): [inside], (824, 0): []})), 1)
        # low scores survive the merge; filtering happens per tile
        faint = Detection(HBox(0, 0, 4, 4, 0), 0.01, 0)
        self.assertEqual(merge_detections({(0, 0): [faint]}), [faint])
        print("[PASS] One detection per object after merging")
