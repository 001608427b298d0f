# -*- coding: utf-8 -*-
"""
similarity.py - Global image descriptor and the dissimilarity/detection pair.

The descriptor is a deterministic desk-scale stand-in for a learned place
recognition embedding: a 16x16 box-averaged RGB thumbnail with per-channel mean
removed, flattened and L2-normalized. Anything implementing `Describer` can
replace it.
"""

import logging
from functools import lru_cache
from typing import Callable

import numpy as np

from splatnav.core import Descriptor, Image
from splatnav.errors import DimensionMismatchError

logger = logging.getLogger(__name__)

THUMBNAIL_SIZE = 16
# thumbnail variation (RMS over entries) below which a view carries no structure
TEXTURE_FLOOR = 1e-3

Describer = Callable[[Image], Descriptor]


@lru_cache(maxsize=32)
def _averaging_matrix(n_in: int, n_out: int) -> np.ndarray:
    """(n_out, n_in) exact box-filter weights: overlap of each input pixel with each output bin."""
    edges = np.arange(n_out + 1) * (n_in / n_out)
    start = np.maximum(edges[:-1, None], np.arange(n_in)[None, :])
    stop = np.minimum(edges[1:, None], np.arange(n_in)[None, :] + 1)
    weights = np.clip(stop - start, 0.0, None)
    weights /= weights.sum(axis=1, keepdims=True)
    weights.setflags(write=False)
    return weights


def thumbnail(image: Image, size: int = THUMBNAIL_SIZE) -> np.ndarray:
    """Box-averaged (size, size, 3) thumbnail."""
    rows = _averaging_matrix(image.height, size)
    cols = _averaging_matrix(image.width, size)
    # rows first: (size, H) @ (H, W*3), then columns per channel
    partial = (rows @ image.pixels.reshape(image.height, -1)).reshape(size, image.width, 3)
    return np.matmul(cols, partial)


def describe(image: Image, size: int = THUMBNAIL_SIZE) -> Descriptor:
    """
    Thumbnail descriptor of dimension 3 * size * size.

    A constant image has zero variation after mean removal and maps to the first basis vector.
    """
    thumb = thumbnail(image, size)
    centered = thumb - thumb.mean(axis=(0, 1), keepdims=True)
    return Descriptor(centered.ravel())


def dissimilarity(a: Descriptor, b: Descriptor) -> float:
    """(1 - <a, b>) / 2 clamped to [0, 1]; symmetric, zero on identical descriptors."""
    if a.dim != b.dim:
        raise DimensionMismatchError(f"Descriptor dimensions differ: {a.dim} vs {b.dim}")
    if a is b or np.array_equal(a.values, b.values):
        return 0.0
    # sum of elementwise products is order-symmetric, unlike a BLAS dot
    cosine = float(np.sum(a.values * b.values))
    return min(max((1.0 - cosine) / 2.0, 0.0), 1.0)


def detection_prob(goal: Descriptor, observed: Descriptor) -> float:
    """Probability of detecting the goal from the observed view: 1 - dissimilarity."""
    return 1.0 - dissimilarity(goal, observed)


def texture_of(image: Image, size: int = THUMBNAIL_SIZE) -> float:
    """RMS thumbnail variation about the per-channel mean; 0 for a constant view."""
    thumb = thumbnail(image, size)
    centered = thumb - thumb.mean(axis=(0, 1), keepdims=True)
    return float(np.sqrt(np.mean(centered * centered)))


def is_textureless(image: Image, size: int = THUMBNAIL_SIZE) -> bool:
    """True when the view's descriptor would be the constant-image fallback or close to it."""
    return texture_of(image, size) < TEXTURE_FLOOR
