"""scikit-learn style transformers over collections of tiles.

Each transformer maps a sequence of :class:`~rectixform.geometry.Tile` to a
coefficient matrix with one row per tile, so they compose with
``sklearn.pipeline.Pipeline``. The discrete transformers also accept a stack
of images of shape ``(n_tiles, N_x, N_y)``.
"""
from __future__ import annotations

from typing import Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .fourier import BACKENDS, fcfs_transform, fft_discrete
from .geometry import Tile, rasterize
from .haar import dht_transform, pcht_transform


def check_tiles(X, *, square: bool = False, power_of_two: bool = False) -> tuple[list[Tile], tuple[int, int]]:
    """Validate a non-empty collection of equally sized tiles; returns ``(tiles, (n_x, n_y))``."""
    if isinstance(X, Tile):
        X = [X]
    tiles = list(X)
    if not tiles:
        raise ValueError("expected at least one tile")
    bad = [i for i, t in enumerate(tiles) if not isinstance(t, Tile)]
    if bad:
        raise TypeError(f"element {bad[0]} is {type(tiles[bad[0]]).__name__}, expected Tile")
    shapes = {(t.n_x, t.n_y) for t in tiles}
    if len(shapes) != 1:
        raise ValueError(f"tiles must share one size, got {sorted(shapes)}")
    shape = shapes.pop()
    if square and shape[0] != shape[1]:
        raise ValueError(f"tiles must be square, got {shape[0]}x{shape[1]}")
    if power_of_two and shape[0] & (shape[0] - 1):
        raise ValueError(f"tile side {shape[0]} is not a power of two")
    return tiles, shape


def check_images(X, *, square: bool = False, power_of_two: bool = False) -> np.ndarray:
    """Stack of images ``(n, N_x, N_y)``; tiles are rasterized."""
    if isinstance(X, np.ndarray):
        img = np.asarray(X, dtype=np.float64)
        if img.ndim == 2:
            img = img[None]
        if img.ndim != 3 or img.shape[0] == 0:
            raise ValueError(f"expected images of shape (n, N_x, N_y), got {X.shape}")
    else:
        tiles, _ = check_tiles(X)
        img = np.stack([rasterize(t) for t in tiles]).astype(np.float64)
    n = img.shape[1]
    if square and img.shape[1] != img.shape[2]:
        raise ValueError(f"images must be square, got {img.shape[1:]}")
    if power_of_two and n & (n - 1):
        raise ValueError(f"image side {n} is not a power of two")
    return img


class _TileTransformer(TransformerMixin, BaseEstimator):
    _square = False
    _pow2 = False
    _images = False

    def _validate(self, X):
        if self._images:
            img = check_images(X, square=self._square, power_of_two=self._pow2)
            return img, img.shape[1:]
        return check_tiles(X, square=self._square, power_of_two=self._pow2)

    def fit(self, X, y=None):
        _, shape = self._validate(X)
        self.tile_shape_ = tuple(int(s) for s in shape)
        self._fit_extra()
        return self

    def _fit_extra(self):
        pass

    def transform(self, X):
        check_is_fitted(self, "tile_shape_")
        items, shape = self._validate(X)
        if tuple(shape) != self.tile_shape_:
            raise ValueError(f"fitted on {self.tile_shape_} tiles, got {tuple(shape)}")
        rows = [self._one(x) for x in items]
        return np.stack(rows)


class PCHTTransformer(_TileTransformer):
    """Pruned continuous Haar coefficients, root first then level-major wavelets.

    Parameters
    ----------
    levels : int or None
        Number of wavelet levels; ``None`` means all of them.
    """

    _square = True
    _pow2 = True

    def __init__(self, levels: int | None = None):
        self.levels = levels

    def _fit_extra(self):
        jmax = self.tile_shape_[0].bit_length() - 1
        self.levels_ = jmax if self.levels is None else int(self.levels)
        if not 0 <= self.levels_ <= jmax:
            raise ValueError(f"levels must be in [0, {jmax}]")
        self.n_features_out_ = 4**self.levels_

    def _one(self, t):
        return pcht_transform(t, self.levels_).to_vector()


class DHTTransformer(PCHTTransformer):
    """Discrete Haar transform of the rasterized tiles (or of given images)."""

    _images = True

    def _one(self, img):
        return dht_transform(img, self.levels_).to_vector()


class FCFSTransformer(_TileTransformer):
    """Continuous Fourier series coefficients, row-major over ``(k, l)``.

    Parameters
    ----------
    backend : {"pruned", "dense", "goertzel"}
    plan : "tuned", "model" or an explicit ``FcfsPlan``; pruned backend only.
    """

    def __init__(self, backend: str = "pruned", plan="tuned"):
        self.backend = backend
        self.plan = plan

    def _fit_extra(self):
        if self.backend not in BACKENDS:
            raise ValueError(f"backend must be one of {BACKENDS}, got {self.backend!r}")
        self.n_features_out_ = self.tile_shape_[0] * self.tile_shape_[1]

    def _one(self, t):
        return fcfs_transform(t, self.backend, self.plan).to_vector()


class FFTTransformer(_TileTransformer):
    """Scaled 2D FFT of the rasterized tiles, row-major over ``(k, l)``."""

    _images = True

    def _fit_extra(self):
        self.n_features_out_ = self.tile_shape_[0] * self.tile_shape_[1]

    def _one(self, img):
        return fft_discrete(img).reshape(-1)


TRANSFORMERS: dict[str, type[_TileTransformer]] = {
    "pcht": PCHTTransformer,
    "dht": DHTTransformer,
    "fcfs": FCFSTransformer,
    "fft": FFTTransformer,
}


def make_transformer(name: str, **params) -> _TileTransformer:
    if name not in TRANSFORMERS:
        raise ValueError(f"unknown transform {name!r}; expected one of {sorted(TRANSFORMERS)}")
    return TRANSFORMERS[name](**params)


def transform_tiles(name: str, tiles: Sequence[Tile], **params) -> np.ndarray:
    return make_transformer(name, **params).fit_transform(tiles)
