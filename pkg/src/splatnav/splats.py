# -*- coding: utf-8 -*-
"""
splats.py - 3D Gaussian splat scene prior: PLY I/O and a forward-only renderer.

The PLY layout matches the common splatting export: binary little-endian vertex
records carrying the mean (x, y, z), degree-0 spherical harmonic color
(f_dc_0..2), opacity as a logit, log-space scales (scale_0..2) and a rotation
quaternion (rot_0..3, w first). Higher-order SH coefficients (f_rest_*) and
normals are read and ignored, so colors are view independent.

Rendering projects each Gaussian's covariance through the pinhole Jacobian,
truncates the 2-D footprint at 3 sigma, sorts globally by camera depth and
alpha-composites front to back.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterator, Sequence, Union

import numpy as np

from splatnav.camera import Camera
from splatnav.core import Image, Pose
from splatnav.errors import SplatParseError

logger = logging.getLogger(__name__)

SH_C0 = 0.28209479177387814
NEAR_PLANE = 0.05
# low-pass dilation of projected covariances, in pixels^2
SCREEN_DILATION = 0.3
TRUNCATION_SIGMA = 3.0
# keeps log(1 - alpha) finite; a fully opaque splat leaves 1e-12 transmittance
MAX_ALPHA = 1.0 - 1e-12

_PLY_TYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "<i2", "int16": "<i2", "ushort": "<u2", "uint16": "<u2",
    "int": "<i4", "int32": "<i4", "uint": "<u4", "uint32": "<u4",
    "float": "<f4", "float32": "<f4", "double": "<f8", "float64": "<f8",
}
_REQUIRED = ("x", "y", "z", "f_dc_0", "f_dc_1", "f_dc_2", "opacity",
             "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3")


@dataclass(frozen=True)
class Gaussian3D:
    mean: tuple[float, float, float]
    scale: tuple[float, float, float]
    rotation: tuple[float, float, float, float]
    opacity: float
    color: tuple[float, float, float]

    def __post_init__(self):
        if any(not s > 0 for s in self.scale):
            raise ValueError(f"Gaussian scales must be positive, got {self.scale}")
        if abs(math.sqrt(sum(q * q for q in self.rotation)) - 1.0) > 1e-6:
            raise ValueError(f"Gaussian rotation must be a unit quaternion, got {self.rotation}")
        if not 0.0 <= self.opacity <= 1.0:
            raise ValueError(f"Gaussian opacity must be in [0, 1], got {self.opacity}")
        if any(not 0.0 <= c <= 1.0 for c in self.color):
            raise ValueError(f"Gaussian color must be in [0, 1], got {self.color}")


def _readonly(array, shape_tail: tuple[int, ...]) -> np.ndarray:
    array = np.array(array, dtype=float, copy=True).reshape((-1,) + shape_tail)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class GaussianCloud:
    """An immutable set of Gaussians stored column-wise for vectorized rendering."""
    means: np.ndarray = field(repr=False)
    scales: np.ndarray = field(repr=False)
    rotations: np.ndarray = field(repr=False)
    opacities: np.ndarray = field(repr=False)
    colors: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "means", _readonly(self.means, (3,)))
        object.__setattr__(self, "scales", _readonly(self.scales, (3,)))
        object.__setattr__(self, "rotations", _readonly(self.rotations, (4,)))
        object.__setattr__(self, "opacities", _readonly(self.opacities, ()))
        object.__setattr__(self, "colors", _readonly(self.colors, (3,)))
        n = len(self.means)
        if not all(len(a) == n for a in (self.scales, self.rotations, self.opacities, self.colors)):
            raise ValueError("GaussianCloud arrays must share their first dimension")

    @classmethod
    def empty(cls) -> "GaussianCloud":
        return cls(np.zeros((0, 3)), np.ones((0, 3)), np.zeros((0, 4)), np.zeros(0), np.zeros((0, 3)))

    @classmethod
    def from_gaussians(cls, gaussians: Sequence[Gaussian3D]) -> "GaussianCloud":
        if not gaussians:
            return cls.empty()
        return cls(
            means=[g.mean for g in gaussians],
            scales=[g.scale for g in gaussians],
            rotations=[g.rotation for g in gaussians],
            opacities=[g.opacity for g in gaussians],
            colors=[g.color for g in gaussians],
        )

    @cached_property
    def covariances(self) -> np.ndarray:
        """(n, 3, 3) world covariances R S S^T R^T, computed once per cloud."""
        m = quaternion_to_matrix(self.rotations) * self.scales[:, None, :]
        cov = np.einsum("nij,nkj->nik", m, m)
        cov.setflags(write=False)
        return cov

    @cached_property
    def max_scales(self) -> np.ndarray:
        return self.scales.max(axis=1, initial=0.0)

    def __len__(self) -> int:
        return len(self.means)

    def __getitem__(self, i: int) -> Gaussian3D:
        return Gaussian3D(
            mean=tuple(self.means[i]),
            scale=tuple(self.scales[i]),
            rotation=tuple(self.rotations[i]),
            opacity=float(self.opacities[i]),
            color=tuple(self.colors[i]),
        )

    def __iter__(self) -> Iterator[Gaussian3D]:
        return (self[i] for i in range(len(self)))


# --- PLY I/O ---

def _parse_header(data: bytes) -> tuple[int, np.dtype, int]:
    """Returns (vertex count, record dtype, offset of the binary body)."""
    marker = b"end_header\n"
    end = data.find(marker)
    if not data.startswith(b"ply\n") or end < 0:
        raise SplatParseError("missing 'ply' magic or 'end_header' line")
    lines = data[:end].decode("ascii", errors="replace").splitlines()[1:]
    count = None
    fields: list[tuple[str, str]] = []
    in_vertex = False
    for line in lines:
        parts = line.split()
        if not parts or parts[0] in ("comment", "obj_info"):
            continue
        if parts[0] == "format":
            if parts[1:2] != ["binary_little_endian"]:
                raise SplatParseError(f"unsupported PLY format '{' '.join(parts[1:])}'")
        elif parts[0] == "element":
            if len(parts) != 3 or not parts[2].isdigit():
                raise SplatParseError(f"malformed element line '{line}'")
            if count is not None and in_vertex and int(parts[2]) > 0:
                raise SplatParseError(f"unsupported extra element '{parts[1]}' after vertex data")
            in_vertex = parts[1] == "vertex"
            if in_vertex:
                count = int(parts[2])
        elif parts[0] == "property":
            if not in_vertex:
                continue
            if len(parts) != 3 or parts[1] == "list":
                raise SplatParseError(f"unsupported property line '{line}'")
            if parts[1] not in _PLY_TYPES:
                raise SplatParseError(f"unknown property type '{parts[1]}'")
            fields.append((parts[2], _PLY_TYPES[parts[1]]))
        else:
            raise SplatParseError(f"unexpected header line '{line}'")
    if count is None:
        raise SplatParseError("no 'element vertex' declared")
    names = [name for name, _ in fields]
    missing = [name for name in _REQUIRED if name not in names]
    if missing:
        raise SplatParseError(f"missing vertex properties {missing}")
    return count, np.dtype(fields), end + len(marker)


def load_splats(path: Union[str, Path]) -> GaussianCloud:
    """
    Loads a splat PLY file and applies the activation conventions.

    scale = exp(raw), opacity = sigmoid(raw), color = clip(0.5 + C0 * f_dc, 0, 1),
    rotation normalized to a unit quaternion.

    Raises:
        SplatParseError: On a malformed header, truncated body, non-finite values or
            zero-norm rotations; the message names the offending record.
    """
    path = Path(path)
    try:
        cloud = _decode_splats(path.read_bytes())
    except SplatParseError as e:
        logger.error(f"Could not parse splat file {path}: {e}")
        raise
    logger.info(f"Loaded {len(cloud)} splats from {path}")
    return cloud


def _decode_splats(data: bytes) -> GaussianCloud:
    count, dtype, offset = _parse_header(data)
    body = data[offset:]
    available = len(body) // dtype.itemsize
    if available < count:
        raise SplatParseError(f"truncated body: header declares {count} records, found {available}", record=available)
    records = np.frombuffer(body, dtype=dtype, count=count)

    def column(name: str) -> np.ndarray:
        return records[name].astype(float)

    means = np.stack([column("x"), column("y"), column("z")], axis=1)
    f_dc = np.stack([column(f"f_dc_{i}") for i in range(3)], axis=1)
    raw_opacity = column("opacity")
    raw_scale = np.stack([column(f"scale_{i}") for i in range(3)], axis=1)
    rot = np.stack([column(f"rot_{i}") for i in range(4)], axis=1)

    raw = np.concatenate([means, f_dc, raw_opacity[:, None], raw_scale, rot], axis=1)
    bad = np.flatnonzero(~np.all(np.isfinite(raw), axis=1))
    if bad.size:
        raise SplatParseError("non-finite value", record=int(bad[0]))
    norms = np.linalg.norm(rot, axis=1)
    zero = np.flatnonzero(norms <= 1e-12)
    if zero.size:
        raise SplatParseError("zero-norm rotation quaternion", record=int(zero[0]))

    with np.errstate(over="ignore"):
        scales = np.exp(raw_scale)
    tiny = np.flatnonzero(~np.all((scales > 0) & np.isfinite(scales), axis=1))
    if tiny.size:
        raise SplatParseError("scale underflows or overflows after exp()", record=int(tiny[0]))

    return GaussianCloud(
        means=means,
        scales=scales,
        rotations=rot / norms[:, None],
        opacities=1.0 / (1.0 + np.exp(-raw_opacity)),
        colors=np.clip(0.5 + SH_C0 * f_dc, 0.0, 1.0),
    )


def write_splats(path: Union[str, Path], cloud: GaussianCloud) -> None:
    """Writes a cloud in the documented PLY layout by inverting the load activations."""
    names = ["x", "y", "z", "nx", "ny", "nz", "f_dc_0", "f_dc_1", "f_dc_2", "opacity",
             "scale_0", "scale_1", "scale_2", "rot_0", "rot_1", "rot_2", "rot_3"]
    dtype = np.dtype([(name, "<f4") for name in names])
    records = np.zeros(len(cloud), dtype=dtype)
    for i, axis in enumerate("xyz"):
        records[axis] = cloud.means[:, i]
        records[f"scale_{i}"] = np.log(cloud.scales[:, i])
        records[f"f_dc_{i}"] = (cloud.colors[:, i] - 0.5) / SH_C0
    opacity = np.clip(cloud.opacities, 1e-7, 1.0 - 1e-7)
    records["opacity"] = np.log(opacity / (1.0 - opacity))
    for i in range(4):
        records[f"rot_{i}"] = cloud.rotations[:, i]
    header = ["ply", "format binary_little_endian 1.0", f"element vertex {len(cloud)}"]
    header += [f"property float {name}" for name in names]
    header.append("end_header")
    path = Path(path)
    with open(path, "wb") as f:
        f.write(("\n".join(header) + "\n").encode("ascii"))
        f.write(records.tobytes())
    logger.info(f"Wrote {len(cloud)} splats to {path}")


# --- Rendering ---

def quaternion_to_matrix(q: np.ndarray) -> np.ndarray:
    """(n, 4) quaternions (w, x, y, z) to (n, 3, 3) rotation matrices."""
    w, x, y, z = q[:, 0], q[:, 1], q[:, 2], q[:, 3]
    return np.stack([
        np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], axis=1),
        np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], axis=1),
        np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], axis=1),
    ], axis=1)


@dataclass(frozen=True)
class ProjectedSplats:
    """Screen-space footprints of the splats in front of the camera, sorted near to far."""
    index: np.ndarray    # source indices into the cloud
    depth: np.ndarray
    center: np.ndarray   # (n, 2) pixel coordinates (u, v)
    conic: np.ndarray    # (n, 3) inverse 2-D covariance entries (a, b, c)
    extent: np.ndarray   # (n, 2) half-widths of the 3-sigma ellipse's bounding box, in pixels
    opacity: np.ndarray
    color: np.ndarray


def _reaches_screen(center_u, center_v, reach_u, reach_v, camera: Camera) -> np.ndarray:
    return ((center_u + reach_u >= 0) & (center_u - reach_u <= camera.width - 1)
            & (center_v + reach_v >= 0) & (center_v - reach_v <= camera.height - 1))


def project_splats(cloud: GaussianCloud, camera: Camera, pose: Pose) -> ProjectedSplats:
    """
    Projects the splats that can touch the image.

    A cheap bound on every footprint (largest world sigma through the Frobenius norm
    of the projection Jacobian) drops off-screen splats before any covariance work.
    """
    rot_wc = camera.rotation(pose)
    pc = (cloud.means - pose.position) @ rot_wc.T
    z = pc[:, 2]
    ahead = np.flatnonzero((z > NEAR_PLANE) & (cloud.opacities > 0))
    x, y, z = pc[ahead, 0], pc[ahead, 1], z[ahead]
    u = camera.fx * x / z + camera.cx
    v = camera.fy * y / z + camera.cy
    jac_sq = (camera.fx ** 2 + camera.fy ** 2) / z ** 2 + (camera.fx ** 2 * x * x + camera.fy ** 2 * y * y) / z ** 4
    bound = TRUNCATION_SIGMA * np.sqrt(cloud.max_scales[ahead] ** 2 * jac_sq + SCREEN_DILATION)
    near = np.flatnonzero(_reaches_screen(u, v, bound, bound, camera))
    idx = ahead[near]
    x, y, z, u, v = x[near], y[near], z[near], u[near], v[near]

    # rows of J @ R_wc, the world-to-pixel Jacobian
    t0 = (camera.fx / z)[:, None] * rot_wc[0] - (camera.fx * x / z ** 2)[:, None] * rot_wc[2]
    t1 = (camera.fy / z)[:, None] * rot_wc[1] - (camera.fy * y / z ** 2)[:, None] * rot_wc[2]
    cov = cloud.covariances[idx]
    s0 = np.einsum("nij,nj->ni", cov, t0)
    s1 = np.einsum("nij,nj->ni", cov, t1)
    a = np.einsum("ni,ni->n", t0, s0) + SCREEN_DILATION
    b = np.einsum("ni,ni->n", t1, s0)
    c = np.einsum("ni,ni->n", t1, s1) + SCREEN_DILATION
    det = a * c - b * b
    conic = np.stack([c / det, -b / det, a / det], axis=1)
    reach_u = TRUNCATION_SIGMA * np.sqrt(a)
    reach_v = TRUNCATION_SIGMA * np.sqrt(c)

    on_screen = np.flatnonzero(_reaches_screen(u, v, reach_u, reach_v, camera))
    sel = on_screen[np.argsort(z[on_screen], kind="stable")]
    src = idx[sel]
    return ProjectedSplats(
        index=src,
        depth=z[sel],
        center=np.stack([u[sel], v[sel]], axis=1),
        conic=conic[sel],
        extent=np.stack([reach_u[sel], reach_v[sel]], axis=1),
        opacity=cloud.opacities[src],
        color=cloud.colors[src],
    )


def _footprint_pairs(proj: ProjectedSplats, camera: Camera) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(splat rank, u, v) for every pixel inside each splat's clipped bounding box, rank-major."""
    u0 = np.clip(np.ceil(proj.center[:, 0] - proj.extent[:, 0]), 0, camera.width - 1).astype(np.int64)
    u1 = np.clip(np.floor(proj.center[:, 0] + proj.extent[:, 0]), 0, camera.width - 1).astype(np.int64)
    v0 = np.clip(np.ceil(proj.center[:, 1] - proj.extent[:, 1]), 0, camera.height - 1).astype(np.int64)
    v1 = np.clip(np.floor(proj.center[:, 1] + proj.extent[:, 1]), 0, camera.height - 1).astype(np.int64)
    cols = np.maximum(u1 - u0 + 1, 0)
    rows = np.maximum(v1 - v0 + 1, 0)
    counts = cols * rows
    total = int(counts.sum())
    rank = np.repeat(np.arange(len(counts)), counts)
    k = np.arange(total) - np.repeat(np.cumsum(counts) - counts, counts)
    width = np.repeat(np.maximum(cols, 1), counts)
    row, col = np.divmod(k, width)
    return rank, np.repeat(u0, counts) + col, np.repeat(v0, counts) + row


def render_with_alpha(
    cloud: GaussianCloud, camera: Camera, pose: Pose, background
) -> tuple[Image, np.ndarray, np.ndarray]:
    """
    Renders the cloud and also returns per-pixel accumulated blend weight and
    residual transmittance, both shaped (height, width).

    Per-pixel weight of a splat is opacity * exp(-d^2 / 2) with d the Mahalanobis
    distance of the pixel center to the projected mean, zero beyond 3 sigma.
    """
    n_pix = camera.width * camera.height
    background = np.asarray(background, dtype=float)
    proj = project_splats(cloud, camera, pose)
    rgb = np.zeros((n_pix, 3))
    accumulated = np.zeros(n_pix)
    log_t = np.zeros(n_pix)

    if len(proj.depth):
        rank, u, v = _footprint_pairs(proj, camera)
        du = u - proj.center[rank, 0]
        dv = v - proj.center[rank, 1]
        conic = proj.conic[rank]
        d2 = conic[:, 0] * du * du + 2.0 * conic[:, 1] * du * dv + conic[:, 2] * dv * dv
        live = np.flatnonzero(d2 <= TRUNCATION_SIGMA ** 2)
        rank = rank[live]
        alpha = np.minimum(proj.opacity[rank] * np.exp(-0.5 * d2[live]), MAX_ALPHA)
        pix = v[live] * camera.width + u[live]

        # stable sort by pixel keeps the near-to-far rank order within each pixel
        key = pix.astype(np.uint16 if n_pix <= 1 << 16 else np.uint32)
        order = np.argsort(key, kind="stable")
        rank, pix, alpha = rank[order], pix[order], alpha[order]
        log_keep = np.log1p(-alpha)
        csum = np.cumsum(log_keep)
        first = np.ones(len(pix), dtype=bool)
        first[1:] = pix[1:] != pix[:-1]
        seg_start = np.maximum.accumulate(np.where(first, np.arange(len(pix)), 0))
        before_segment = np.where(seg_start > 0, csum[seg_start - 1], 0.0)
        weight = alpha * np.exp(csum - log_keep - before_segment)

        accumulated = np.bincount(pix, weights=weight, minlength=n_pix)
        log_t = np.bincount(pix, weights=log_keep, minlength=n_pix)
        colors = proj.color[rank]
        for ch in range(3):
            rgb[:, ch] = np.bincount(pix, weights=weight * colors[:, ch], minlength=n_pix)

    transmittance = np.exp(log_t)
    rgb += transmittance[:, None] * background[None, :]
    image = Image(np.clip(rgb, 0.0, 1.0).reshape(camera.height, camera.width, 3))
    shape = (camera.height, camera.width)
    return image, accumulated.reshape(shape), transmittance.reshape(shape)


def render_splats(cloud: GaussianCloud, camera: Camera, pose: Pose, background) -> Image:
    return render_with_alpha(cloud, camera, pose, background)[0]
