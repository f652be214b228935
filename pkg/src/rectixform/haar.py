"""Continuous Haar transform of tiles: pruned recursion (PCHT) and the discrete FWT.

Coefficients carry the orthonormal scaling, so for an indicator image the
squared coefficients sum to the covered area. Band naming: ``hg`` applies the
high-pass filter along x, ``gh`` along y, ``hh`` along both. Children of node
``(j, kx, ky)`` are indexed ``(n, m)`` with ``n`` the x offset and ``m`` the y
offset::

    X_j  = (X00 + X01 + X10 + X11) / 2
    C_hg = ((X00 + X01) - (X10 + X11)) / 2
    C_gh = ((X00 - X01) + (X10 - X11)) / 2
    C_hh = (X00 - X01 - X10 + X11) / 2
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from .geometry import Polygon, Rect, Tile, area, perimeter


class NonSquareTile(ValueError):
    pass


class NonPowerOfTwoTile(ValueError):
    pass


class NonPowerOfTwoImage(ValueError):
    pass


def _log2_exact(n: int) -> int | None:
    if n < 1 or n & (n - 1):
        return None
    return n.bit_length() - 1


def level_offset(j: int) -> int:
    """Start of level ``j`` in the flat wavelet array (three bands of ``4**j``)."""
    return 4**j - 1


@dataclass
class HaarSpectrum:
    """Haar coefficients of an ``n`` by ``n`` tile down to ``levels`` levels.

    ``wavelets`` is flat: for each level ``j`` the bands hg, gh, hh, each a
    row-major ``2**j`` by ``2**j`` block indexed ``[kx, ky]``. ``leaf`` holds
    the level-``levels`` scaling coefficients when the decomposition stops
    short of single pixels, and is ``None`` otherwise.
    """

    n: int
    levels: int
    root_scaling: float
    wavelets: np.ndarray
    leaf: np.ndarray | None = None

    @property
    def n_x(self) -> int:
        return self.n

    @property
    def n_y(self) -> int:
        return self.n

    def band(self, j: int, name: str) -> np.ndarray:
        b = "hg gh hh".split().index(name)
        s = 4**j
        start = level_offset(j) + b * s
        return self.wavelets[start : start + s].reshape(2**j, 2**j)

    @property
    def C_hg(self) -> list[np.ndarray]:
        return [self.band(j, "hg") for j in range(self.levels)]

    @property
    def C_gh(self) -> list[np.ndarray]:
        return [self.band(j, "gh") for j in range(self.levels)]

    @property
    def C_hh(self) -> list[np.ndarray]:
        return [self.band(j, "hh") for j in range(self.levels)]

    def to_vector(self) -> np.ndarray:
        """Root first, then level-major, band-major, row-major wavelets."""
        return np.concatenate(([self.root_scaling], self.wavelets))

    def energy(self) -> float:
        return float(self.root_scaling**2 + np.dot(self.wavelets, self.wavelets))

    def __add__(self, other: "HaarSpectrum") -> "HaarSpectrum":
        if (self.n, self.levels) != (other.n, other.levels):
            raise ValueError("spectra of different shapes")
        leaf = None if self.leaf is None else self.leaf + other.leaf
        return HaarSpectrum(self.n, self.levels, self.root_scaling + other.root_scaling,
                            self.wavelets + other.wavelets, leaf)

    def reconstruct(self) -> np.ndarray:
        """Inverse FWT back to the finest level available (pixels when full depth)."""
        X = np.array([[self.root_scaling]])
        for j in range(self.levels):
            hg, gh, hh = self.band(j, "hg"), self.band(j, "gh"), self.band(j, "hh")
            up = np.empty((2 * X.shape[0], 2 * X.shape[1]))
            up[0::2, 0::2] = 0.5 * (X + hg + gh + hh)
            up[0::2, 1::2] = 0.5 * (X + hg - gh - hh)
            up[1::2, 0::2] = 0.5 * (X - hg + gh - hh)
            up[1::2, 1::2] = 0.5 * (X - hg - gh + hh)
            X = up
        return X


@dataclass
class HaarOpCount:
    additions: int = 0
    multiplications: int = 0
    comparisons: int = 0
    recursive_calls: int = 0

    @property
    def total(self) -> int:
        return self.additions + self.multiplications + self.comparisons


def _check_tile(t: Tile) -> int:
    if t.n_x != t.n_y:
        raise NonSquareTile(f"Haar transforms need square tiles, got {t.n_x}x{t.n_y}")
    jmax = _log2_exact(t.n_x)
    if jmax is None:
        raise NonPowerOfTwoTile(f"tile side {t.n_x} is not a power of two")
    return jmax


def _resolve_levels(J: int | None, jmax: int) -> int:
    if J is None:
        return jmax
    if not 0 <= J <= jmax:
        raise ValueError(f"levels must lie in [0, {jmax}], got {J}")
    return J


# ---------------------------------------------------------------- compiled kernels


@njit(cache=True, nogil=True)
def _ia_kernel(hx0, hx1, hy, lo, hi, a1, b1, a2, b2):
    total = 0
    for e in range(lo, hi):
        xs = hx0[e]
        xe = hx1[e]
        y = hy[e]
        if xs < xe:
            u = xs
            v = xe
        else:
            u = xe
            v = xs
        if a2 <= u or v <= a1 or y <= b1:
            continue
        w = (v if v < a2 else a2) - (u if u > a1 else a1)
        h = (y if y < b2 else b2) - b1
        if xe > xs:
            total += w * h
        else:
            total -= w * h
    return total


@njit(cache=True, nogil=True)
def _fill_leaf(leaf, J, j, kx, ky, value):
    s = 1 << (J - j)
    for a in range(kx * s, (kx + 1) * s):
        for b in range(ky * s, (ky + 1) * s):
            leaf[a, b] = value


@njit(cache=True, nogil=True)
def _pcht_kernel(hx0, hx1, hy, edge_ptr, n, J, out, leaf, hg_sign):
    """Breadth-first pruned sweep; returns the total covered area.

    Only polygons that partially cover a node are carried to its children, so
    the per-node cost scales with the local boundary, not with the tile size.
    """
    M = edge_ptr.shape[0] - 1
    use_leaf = leaf.shape[0] > 0
    cur_kx = np.zeros(1, np.int64)
    cur_ky = np.zeros(1, np.int64)
    cur_ptr = np.zeros(2, np.int64)
    cur_poly = np.empty(M, np.int64)
    A = 0
    cnt = 0
    for m in range(M):
        a = _ia_kernel(hx0, hx1, hy, edge_ptr[m], edge_ptr[m + 1], 0, 0, n, n)
        if a != 0:
            cur_poly[cnt] = m
            cnt += 1
            A += a
    cur_ptr[1] = cnt
    full_leaf = n / (1 << J)
    if A == 0:
        return A
    if A == n * n or J == 0:
        if use_leaf:
            _fill_leaf(leaf, J, 0, 0, 0, full_leaf if A == n * n else A / n)
        return A
    n_nodes = 1
    for j in range(J):
        h = n >> (j + 1)
        hh_area = h * h
        coef = 0.5 * (1 << (j + 1)) / n
        side = 1 << j
        base = (1 << (2 * j)) - 1
        band = 1 << (2 * j)
        last = j + 1 == J
        nxt_kx = np.empty(4 * n_nodes, np.int64)
        nxt_ky = np.empty(4 * n_nodes, np.int64)
        nxt_ptr = np.zeros(4 * n_nodes + 1, np.int64)
        nxt_poly = np.empty(4 * cur_ptr[n_nodes], np.int64)
        n_next = 0
        q = 0
        for i in range(n_nodes):
            kx = cur_kx[i]
            ky = cur_ky[i]
            x0 = kx * 2 * h
            y0 = ky * 2 * h
            p0 = cur_ptr[i]
            p1 = cur_ptr[i + 1]
            np_i = p1 - p0
            part = np.empty((np_i, 4), np.int64)
            A00 = 0
            A01 = 0
            A10 = 0
            A11 = 0
            for t in range(np_i):
                m = cur_poly[p0 + t]
                lo = edge_ptr[m]
                hi = edge_ptr[m + 1]
                a00 = _ia_kernel(hx0, hx1, hy, lo, hi, x0, y0, x0 + h, y0 + h)
                a01 = _ia_kernel(hx0, hx1, hy, lo, hi, x0, y0 + h, x0 + h, y0 + 2 * h)
                a10 = _ia_kernel(hx0, hx1, hy, lo, hi, x0 + h, y0, x0 + 2 * h, y0 + h)
                a11 = _ia_kernel(hx0, hx1, hy, lo, hi, x0 + h, y0 + h, x0 + 2 * h, y0 + 2 * h)
                part[t, 0] = a00
                part[t, 1] = a01
                part[t, 2] = a10
                part[t, 3] = a11
                A00 += a00
                A01 += a01
                A10 += a10
                A11 += a11
            k = kx * side + ky
            out[base + k] = hg_sign * coef * ((A00 + A01) - (A10 + A11))
            out[base + band + k] = coef * ((A00 - A01) + (A10 - A11))
            out[base + 2 * band + k] = coef * (A00 - A01 - A10 + A11)
            for c in range(4):
                cx = 2 * kx + (c >> 1)
                cy = 2 * ky + (c & 1)
                Ac = A00 if c == 0 else (A01 if c == 1 else (A10 if c == 2 else A11))
                if last:
                    if use_leaf:
                        leaf[cx, cy] = 2.0 * coef * Ac
                elif Ac == hh_area:
                    if use_leaf:
                        _fill_leaf(leaf, J, j + 1, cx, cy, full_leaf)
                elif Ac != 0:
                    nxt_kx[n_next] = cx
                    nxt_ky[n_next] = cy
                    for t in range(np_i):
                        if part[t, c] != 0:
                            nxt_poly[q] = cur_poly[p0 + t]
                            q += 1
                    n_next += 1
                    nxt_ptr[n_next] = q
        if n_next == 0:
            break
        cur_kx = nxt_kx
        cur_ky = nxt_ky
        cur_ptr = nxt_ptr
        cur_poly = nxt_poly
        n_nodes = n_next
    return A


@njit(cache=True, nogil=True)
def _dht_kernel(img, jmax, J, out, leaf, hg_sign):
    X = img
    size = 1 << jmax
    if J == jmax and leaf.shape[0] > 0:
        leaf[:, :] = X
    for j in range(jmax - 1, -1, -1):
        half = size >> 1
        Y = np.empty((half, half))
        keep = j < J
        base = (1 << (2 * j)) - 1
        band = 1 << (2 * j)
        for kx in range(half):
            for ky in range(half):
                x00 = X[2 * kx, 2 * ky]
                x01 = X[2 * kx, 2 * ky + 1]
                x10 = X[2 * kx + 1, 2 * ky]
                x11 = X[2 * kx + 1, 2 * ky + 1]
                a = x00 + x01
                b = x10 + x11
                c = x00 - x01
                d = x10 - x11
                Y[kx, ky] = 0.5 * (a + b)
                if keep:
                    k = base + kx * half + ky
                    out[k] = hg_sign * 0.5 * (a - b)
                    out[k + band] = 0.5 * (c + d)
                    out[k + 2 * band] = 0.5 * (c - d)
        X = Y
        size = half
        if j == J and leaf.shape[0] > 0:
            leaf[:, :] = X
    return X[0, 0]


_EMPTY_LEAF = np.zeros((0, 0))


# ---------------------------------------------------------------- public transforms


def pcht_transform(t: Tile, J: int | None = None, counter: HaarOpCount | None = None,
                   *, _butterfly_sign: float = 1.0) -> HaarSpectrum:
    """Pruned continuous Haar transform of a square power-of-two tile.

    With ``counter`` the instrumented pure-Python recursion runs instead of the
    compiled sweep; both produce the same coefficients.
    """
    jmax = _check_tile(t)
    J = _resolve_levels(J, jmax)
    if counter is not None:
        return pcht_reference(t, J, counter=counter, _butterfly_sign=_butterfly_sign)
    n = t.n_x
    out = np.zeros(4**J - 1)
    leaf = np.zeros((2**J, 2**J)) if J < jmax else _EMPTY_LEAF
    pk = t.packed
    A = _pcht_kernel(pk.hx0, pk.hx1, pk.hy, pk.edge_ptr, n, J, out, leaf, _butterfly_sign)
    return HaarSpectrum(n, J, A / n, out, leaf if J < jmax else None)


def dht_transform(image: np.ndarray, J: int | None = None, counter: HaarOpCount | None = None,
                  *, _butterfly_sign: float = 1.0) -> HaarSpectrum:
    """Full discrete 2D Haar FWT of an ``N`` by ``N`` image, ``image[x, y]``."""
    image = np.asarray(image)
    if image.ndim != 2 or image.shape[0] != image.shape[1]:
        raise NonPowerOfTwoImage(f"expected a square image, got shape {image.shape}")
    n = image.shape[0]
    jmax = _log2_exact(n)
    if jmax is None:
        raise NonPowerOfTwoImage(f"image side {n} is not a power of two")
    J = _resolve_levels(J, jmax)
    out = np.zeros(4**J - 1)
    leaf = np.zeros((2**J, 2**J)) if J < jmax else _EMPTY_LEAF
    root = _dht_kernel(np.ascontiguousarray(image, dtype=np.float64), jmax, J, out, leaf, _butterfly_sign)
    if counter is not None:
        butterflies = (4**jmax - 1) // 3
        counter.additions += 8 * butterflies
        counter.multiplications += 4 * butterflies
    return HaarSpectrum(n, J, float(root), out, leaf if J < jmax else None)


# ---------------------------------------------------------------- instrumented reference


def _ia_counted(p: Polygon, a1, b1, a2, b2, c: HaarOpCount):
    total = 0
    for xs, xe, y in p.horizontal_edges():
        c.comparisons += 1
        u, v = (xs, xe) if xs < xe else (xe, xs)
        c.comparisons += 1
        if a2 <= u:
            continue
        c.comparisons += 1
        if v <= a1:
            continue
        c.comparisons += 1
        if y <= b1:
            continue
        c.comparisons += 4
        c.additions += 3
        c.multiplications += 1
        term = (min(v, a2) - max(u, a1)) * (min(y, b2) - b1)
        total += term if xe > xs else -term
    return total


def pcht_reference(t: Tile, J: int | None = None, counter: HaarOpCount | None = None,
                   pruned: list | None = None, *, _butterfly_sign: float = 1.0) -> HaarSpectrum:
    """Literal divide-and-conquer PCHT in pure Python.

    Each call computes the intersection area of its support, returns early when
    the support is empty or fully covered, and otherwise recurses into its four
    children and combines them with one butterfly. Nodes returning early below
    the last level are appended to ``pruned`` as ``(j, kx, ky)``.
    """
    jmax = _check_tile(t)
    J = _resolve_levels(J, jmax)
    c = counter if counter is not None else HaarOpCount()
    n = t.n_x
    out = np.zeros(4**J - 1)
    leaf = np.zeros((2**J, 2**J)) if J < jmax else None

    def fill(j, kx, ky, value):
        if leaf is not None:
            s = 2 ** (J - j)
            leaf[kx * s : (kx + 1) * s, ky * s : (ky + 1) * s] = value

    def node(j, kx, ky, active):
        c.recursive_calls += 1
        side = n >> j
        a1, b1 = kx * side, ky * side
        a2, b2 = a1 + side, b1 + side
        c.multiplications += 2
        c.additions += 2
        A = 0
        inside = []
        for p in active:
            a = _ia_counted(p, a1, b1, a2, b2, c)
            if a:
                inside.append(p)
                A += a
                c.additions += 1
        X = A * 2**j / n
        c.multiplications += 1
        c.comparisons += 3
        if A == 0 or A == side * side:
            if j < J and pruned is not None:
                pruned.append((j, kx, ky))
            fill(j, kx, ky, X)
            return X
        if j == J:
            fill(j, kx, ky, X)
            return X
        x00 = node(j + 1, 2 * kx, 2 * ky, inside)
        x01 = node(j + 1, 2 * kx, 2 * ky + 1, inside)
        x10 = node(j + 1, 2 * kx + 1, 2 * ky, inside)
        x11 = node(j + 1, 2 * kx + 1, 2 * ky + 1, inside)
        a, b, d0, d1 = x00 + x01, x10 + x11, x00 - x01, x10 - x11
        k = level_offset(j) + kx * 2**j + ky
        band = 4**j
        out[k] = _butterfly_sign * 0.5 * (a - b)
        out[k + band] = 0.5 * (d0 + d1)
        out[k + 2 * band] = 0.5 * (d0 - d1)
        c.additions += 8
        c.multiplications += 4
        return 0.5 * (a + b)

    root = node(0, 0, 0, list(t.polygons))
    return HaarSpectrum(n, J, float(root), out, leaf)


# ---------------------------------------------------------------- complexity models


def lambda_ia(K: int) -> int:
    """Operation count of one intersection-area evaluation for a K-vertex polygon."""
    if K < 4 or K % 2:
        raise ValueError(f"K must be even and >= 4, got {K}")
    return 11 if K == 4 else 6 * K - 1


def pcht_complexity_estimate(stats: Sequence[tuple[int, int]], N: int, J: int | None = None) -> float:
    """Modeled PCHT operations for polygons given as ``(perimeter, K)`` pairs."""
    if J is None:
        J = int(math.log2(N))
    total = 0
    for P, K in stats:
        lam = lambda_ia(K) + 26
        total += sum(-(-(2**j * P) // N) for j in range(J)) * lam
    return total + len(stats)


def tile_complexity_stats(t: Tile) -> list[tuple[int, int]]:
    return [(perimeter(p), p.K) for p in t.polygons]


def dht_complexity(N: int) -> float:
    return 8 * (N * N - 1) / 3


def covered_area(t: Tile) -> int:
    return sum(area(p) for p in t.polygons)


def support_rect(n: int, j: int, kx: int, ky: int) -> Rect:
    side = n >> j
    return Rect(kx * side, ky * side, (kx + 1) * side, (ky + 1) * side)
