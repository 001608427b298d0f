import math
import os
import shutil
import sys
import tempfile
import unittest
from pathlib import Path

import numpy as np

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), '../src')))

from splatnav.camera import Camera
from splatnav.core import Pose
from splatnav.errors import SplatParseError
from splatnav.splats import (
    MAX_ALPHA, SCREEN_DILATION, SH_C0, GaussianCloud, Gaussian3D, load_splats, quaternion_to_matrix,
    render_splats, render_with_alpha, write_splats,
)

BACKGROUND = (0.2, 0.3, 0.4)
REQUIRED = ["x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity",
            "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"]


def reference_render(cloud, camera, pose, background):
    """Per-pixel front-to-back compositing written out one splat and one pixel at a time."""
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    world_to_cam = np.array([[s, -c, 0.0], [0.0, 0.0, -1.0], [c, s, 0.0]])
    splats = []
    for g in cloud:
        p = world_to_cam @ (np.array(g.mean) - pose.position)
        if p[2] <= 0.05:
            continue
        rot = quaternion_to_matrix(np.array([g.rotation]))[0]
        m = rot @ np.diag(g.scale)
        cov = world_to_cam @ (m @ m.T) @ world_to_cam.T
        jac = np.array([
            [camera.fx / p[2], 0.0, -camera.fx * p[0] / p[2] ** 2],
            [0.0, camera.fy / p[2], -camera.fy * p[1] / p[2] ** 2],
        ])
        cov2 = jac @ cov @ jac.T + SCREEN_DILATION * np.eye(2)
        center = np.array([camera.fx * p[0] / p[2] + camera.cx, camera.fy * p[1] / p[2] + camera.cy])
        splats.append((p[2], center, np.linalg.inv(cov2), g.opacity, np.array(g.color)))
    splats.sort(key=lambda item: item[0])

    image = np.zeros((camera.height, camera.width, 3))
    weights = np.zeros((camera.height, camera.width))
    for v in range(camera.height):
        for u in range(camera.width):
            t = 1.0
            color = np.zeros(3)
            for _, center, conic, opacity, rgb in splats:
                d = np.array([u, v], dtype=float) - center
                d2 = float(d @ conic @ d)
                if d2 > 9.0:
                    continue
                alpha = min(opacity * math.exp(-0.5 * d2), MAX_ALPHA)
                color += t * alpha * rgb
                weights[v, u] += t * alpha
                t *= 1.0 - alpha
            image[v, u] = color + t * np.array(background)
    return np.clip(image, 0.0, 1.0), weights


class TestSplatRendering(unittest.TestCase):

    def setUp(self):
        self.camera = Camera.default(32, 24)
        self.pose = Pose(0.0, 0.0, 1.0, 0.0)

    def test_empty_cloud_renders_background(self):
        image = render_splats(GaussianCloud.empty(), self.camera, self.pose, BACKGROUND)
        np.testing.assert_allclose(image.pixels, np.broadcast_to(BACKGROUND, (24, 32, 3)))

    def test_single_splat_matches_reference(self):
        cloud = GaussianCloud.from_gaussians([
            Gaussian3D((2.0, 0.1, 1.05), (0.2, 0.1, 0.15), (1.0, 0.0, 0.0, 0.0), 0.8, (0.9, 0.2, 0.1)),
        ])
        image = render_splats(cloud, self.camera, self.pose, BACKGROUND)
        expected, _ = reference_render(cloud, self.camera, self.pose, BACKGROUND)
        np.testing.assert_allclose(image.pixels, expected, atol=1e-5)

    def test_two_rotated_splats_match_reference(self):
        q = np.array([math.cos(0.3), 0.2, math.sin(0.3), 0.1])
        q = tuple(q / np.linalg.norm(q))
        cloud = GaussianCloud.from_gaussians([
            Gaussian3D((3.0, -0.2, 1.0), (0.4, 0.2, 0.3), q, 0.7, (0.1, 0.8, 0.3)),
            Gaussian3D((1.5, 0.1, 0.9), (0.1, 0.1, 0.1), (1.0, 0.0, 0.0, 0.0), 0.9, (0.9, 0.9, 0.1)),
        ])
        image = render_splats(cloud, self.camera, self.pose, BACKGROUND)
        expected, _ = reference_render(cloud, self.camera, self.pose, BACKGROUND)
        np.testing.assert_allclose(image.pixels, expected, atol=1e-5)

    def test_on_axis_splat_peaks_at_principal_point(self):
        cloud = GaussianCloud.from_gaussians([
            Gaussian3D((2.0, 0.0, 1.0), (0.1, 0.1, 0.1), (1.0, 0.0, 0.0, 0.0), 1.0, (1.0, 0.0, 0.0)),
        ])
        _, weights, _ = render_with_alpha(cloud, self.camera, self.pose, BACKGROUND)
        cy, cx = int(self.camera.cy), int(self.camera.cx)
        self.assertEqual(np.unravel_index(np.argmax(weights), weights.shape), (cy, cx))

    def test_nearer_saturated_splat_hides_farther(self):
        near_color, far_color = (0.1, 0.9, 0.2), (0.8, 0.1, 0.7)
        cloud = GaussianCloud.from_gaussians([
            Gaussian3D((2.0, 0.0, 1.0), (0.2, 0.2, 0.2), (1.0, 0.0, 0.0, 0.0), 1.0, far_color),
            Gaussian3D((1.0, 0.0, 1.0), (0.1, 0.1, 0.1), (1.0, 0.0, 0.0, 0.0), 1.0, near_color),
        ])
        image = render_splats(cloud, self.camera, self.pose, BACKGROUND)
        np.testing.assert_allclose(image.pixels[int(self.camera.cy), int(self.camera.cx)], near_color, atol=1e-9)

    def test_compositing_conserves_weight(self):
        rng = np.random.default_rng(11)
        gaussians = [
            Gaussian3D(
                tuple(rng.uniform([1.0, -1.0, 0.5], [4.0, 1.0, 1.5])),
                tuple(rng.uniform(0.05, 0.4, size=3)),
                (1.0, 0.0, 0.0, 0.0),
                float(rng.uniform(0.1, 1.0)),
                tuple(rng.uniform(0.0, 1.0, size=3)),
            )
            for _ in range(40)
        ]
        cloud = GaussianCloud.from_gaussians(gaussians)
        _, weights, transmittance = render_with_alpha(cloud, self.camera, self.pose, BACKGROUND)
        np.testing.assert_allclose(weights + transmittance, 1.0, atol=1e-9)
        _, reference_weights = reference_render(cloud, self.camera, self.pose, BACKGROUND)
        np.testing.assert_allclose(weights, reference_weights, atol=1e-9)

    def test_transparent_cloud_renders_like_empty(self):
        rng = np.random.default_rng(6)
        gaussians = [
            Gaussian3D(tuple(rng.uniform([1.0, -1.0, 0.5], [4.0, 1.0, 1.5])), (0.2, 0.2, 0.2),
                       (1.0, 0.0, 0.0, 0.0), 0.0, tuple(rng.uniform(0.0, 1.0, size=3)))
            for _ in range(10)
        ]
        image, weights, transmittance = render_with_alpha(GaussianCloud.from_gaussians(gaussians), self.camera,
                                                          self.pose, BACKGROUND)
        empty = render_splats(GaussianCloud.empty(), self.camera, self.pose, BACKGROUND)
        np.testing.assert_array_equal(image.pixels, empty.pixels)
        np.testing.assert_array_equal(weights, 0.0)
        np.testing.assert_array_equal(transmittance, 1.0)

    def test_splats_around_the_frustum_edges_match_reference(self):
        rng = np.random.default_rng(19)
        gaussians = []
        for _ in range(60):
            bearing = rng.uniform(-1.2, 1.2)
            distance = rng.uniform(0.3, 5.0)
            q = rng.normal(size=4)
            gaussians.append(Gaussian3D(
                (distance * math.cos(bearing), distance * math.sin(bearing), float(rng.uniform(-0.5, 2.5))),
                tuple(rng.uniform(0.02, 0.5, size=3)),
                tuple(q / np.linalg.norm(q)),
                float(rng.uniform(0.2, 1.0)),
                tuple(rng.uniform(0.0, 1.0, size=3)),
            ))
        cloud = GaussianCloud.from_gaussians(gaussians)
        image, weights, transmittance = render_with_alpha(cloud, self.camera, self.pose, BACKGROUND)
        expected, reference_weights = reference_render(cloud, self.camera, self.pose, BACKGROUND)
        np.testing.assert_allclose(image.pixels, expected, atol=1e-5)
        np.testing.assert_allclose(weights, reference_weights, atol=1e-9)
        np.testing.assert_allclose(weights + transmittance, 1.0, atol=1e-9)

    def test_world_covariances(self):
        q = np.array([0.8, 0.1, -0.3, 0.5])
        q = tuple(q / np.linalg.norm(q))
        cloud = GaussianCloud.from_gaussians([
            Gaussian3D((0.0, 0.0, 0.0), (0.3, 0.2, 0.1), q, 0.5, (0.5, 0.5, 0.5)),
        ])
        rot = quaternion_to_matrix(np.array([q]))[0]
        expected = rot @ np.diag([0.09, 0.04, 0.01]) @ rot.T
        np.testing.assert_allclose(cloud.covariances[0], expected, atol=1e-12)
        self.assertIs(cloud.covariances, cloud.covariances)
        np.testing.assert_array_equal(cloud.max_scales, [0.3])

    def test_splat_behind_camera_is_ignored(self):
        cloud = GaussianCloud.from_gaussians([
            Gaussian3D((-2.0, 0.0, 1.0), (0.3, 0.3, 0.3), (1.0, 0.0, 0.0, 0.0), 1.0, (1.0, 1.0, 1.0)),
        ])
        image = render_splats(cloud, self.camera, self.pose, BACKGROUND)
        np.testing.assert_allclose(image.pixels, np.broadcast_to(BACKGROUND, (24, 32, 3)))


class TestSplatFiles(unittest.TestCase):

    def setUp(self):
        self.test_dir = Path(tempfile.mkdtemp(prefix="splat_test_"))

    def tearDown(self):
        shutil.rmtree(self.test_dir)

    def _write_raw(self, name, rows, names=REQUIRED, declared=None, body_bytes=None):
        dtype = np.dtype([(n, "<f4") for n in names])
        records = np.array([tuple(r) for r in rows], dtype=dtype) if rows else np.zeros(0, dtype=dtype)
        header = ["ply", "format binary_little_endian 1.0",
                  f"element vertex {len(rows) if declared is None else declared}"]
        header += [f"property float {n}" for n in names]
        header.append("end_header")
        body = records.tobytes() if body_bytes is None else body_bytes
        path = self.test_dir / name
        path.write_bytes(("\n".join(header) + "\n").encode("ascii") + body)
        return path

    def test_zero_records(self):
        self.assertEqual(len(load_splats(self._write_raw("empty.ply", []))), 0)

    def test_activations_applied(self):
        raw = [1.0, 2.0, 3.0, 0.5, -0.5, 0.0, 0.0, math.log(0.5), 0.0, math.log(2.0), 2.0, 0.0, 0.0, 0.0]
        cloud = load_splats(self._write_raw("one.ply", [raw]))
        g = cloud[0]
        np.testing.assert_allclose(g.mean, (1.0, 2.0, 3.0))
        np.testing.assert_allclose(g.color, (0.5 + SH_C0 * 0.5, 0.5 - SH_C0 * 0.5, 0.5), atol=1e-7)
        self.assertAlmostEqual(g.opacity, 0.5)
        np.testing.assert_allclose(g.scale, (0.5, 1.0, 2.0), rtol=1e-6)
        np.testing.assert_allclose(g.rotation, (1.0, 0.0, 0.0, 0.0))

    def test_nan_mean_names_record(self):
        good = [0.0] * 10 + [1.0, 0.0, 0.0, 0.0]
        bad = [math.nan] + [0.0] * 9 + [1.0, 0.0, 0.0, 0.0]
        with self.assertRaises(SplatParseError) as ctx:
            load_splats(self._write_raw("nan.ply", [good, good, bad]))
        self.assertEqual(ctx.exception.record, 2)
        self.assertIn("record 2", str(ctx.exception))

    def test_zero_quaternion_names_record(self):
        bad = [0.0] * 14
        with self.assertRaises(SplatParseError) as ctx:
            load_splats(self._write_raw("zeroq.ply", [bad]))
        self.assertEqual(ctx.exception.record, 0)

    def test_truncated_body(self):
        row = [0.0] * 10 + [1.0, 0.0, 0.0, 0.0]
        full = np.array([tuple(row)] * 2, dtype=np.dtype([(n, "<f4") for n in REQUIRED])).tobytes()
        path = self._write_raw("short.ply", [row, row], declared=3, body_bytes=full)
        with self.assertRaises(SplatParseError) as ctx:
            load_splats(path)
        self.assertEqual(ctx.exception.record, 2)

    def test_missing_property_rejected(self):
        names = [n for n in REQUIRED if n != "opacity"]
        with self.assertRaises(SplatParseError):
            load_splats(self._write_raw("missing.ply", [[0.0] * 9 + [1.0, 0.0, 0.0, 0.0]], names=names))

    def test_bad_magic_rejected(self):
        path = self.test_dir / "bad.ply"
        path.write_bytes(b"not a ply file")
        with self.assertRaises(SplatParseError):
            load_splats(path)

    def test_write_then_load_preserves_gaussians(self):
        cloud = GaussianCloud.from_gaussians([
            Gaussian3D((1.0, -2.0, 0.5), (0.3, 0.1, 0.2), (0.6, 0.8, 0.0, 0.0), 0.7, (0.2, 0.4, 0.9)),
            Gaussian3D((0.0, 0.0, 2.0), (1.0, 1.0, 1.0), (1.0, 0.0, 0.0, 0.0), 0.25, (0.5, 0.5, 0.5)),
        ])
        path = self.test_dir / "round.ply"
        write_splats(path, cloud)
        loaded = load_splats(path)
        self.assertEqual(len(loaded), 2)
        np.testing.assert_allclose(loaded.means, cloud.means, atol=1e-6)
        np.testing.assert_allclose(loaded.scales, cloud.scales, rtol=1e-5)
        np.testing.assert_allclose(loaded.rotations, cloud.rotations, atol=1e-6)
        np.testing.assert_allclose(loaded.opacities, cloud.opacities, atol=1e-6)
        np.testing.assert_allclose(loaded.colors, cloud.colors, atol=1e-6)


class TestGaussianValidation(unittest.TestCase):

    def test_rejects_bad_parameters(self):
        unit = (1.0, 0.0, 0.0, 0.0)
        with self.assertRaises(ValueError):
            Gaussian3D((0, 0, 0), (0.0, 1.0, 1.0), unit, 0.5, (0.5, 0.5, 0.5))
        with self.assertRaises(ValueError):
            Gaussian3D((0, 0, 0), (1.0, 1.0, 1.0), (2.0, 0.0, 0.0, 0.0), 0.5, (0.5, 0.5, 0.5))
        with self.assertRaises(ValueError):
            Gaussian3D((0, 0, 0), (1.0, 1.0, 1.0), unit, 1.5, (0.5, 0.5, 0.5))


if __name__ == '__main__':
    unittest.main()
