"""Invariant suite shared by ``rectixform verify`` and the tests.

Every check compares a fast path against an independent oracle and reports
mismatches as :class:`Failure` records instead of raising.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .fourier import BACKENDS, BackendUnavailable, build_sparse_signals, cfs_by_rectangles, cfs_direct, fcfs_transform
from .geometry import Tile, rasterize
from .haar import dht_transform, level_offset, pcht_reference, pcht_transform
from .layout_io import Layout, TilingSpec, tile_layout


@dataclass
class Failure:
    check: str
    tile_id: int
    index: object
    got: object
    expected: object

    @property
    def delta(self) -> float:
        try:
            return float(abs(complex(self.got) - complex(self.expected)))
        except (TypeError, ValueError):
            return math.nan

    def __str__(self) -> str:
        return (f"FAIL {self.check} tile={self.tile_id} index={self.index} "
                f"got={self.got!r} expected={self.expected!r} delta={self.delta:.3e}")


def _mismatch(got, expected, rtol, atol):
    got, expected = np.asarray(got), np.asarray(expected)
    bad = ~np.isclose(got, expected, rtol=rtol, atol=atol)
    return np.argwhere(bad)


def _report(out, check, t, got, expected, rtol, atol, index_fn=lambda i: tuple(int(a) for a in i)):
    for i in _mismatch(got, expected, rtol, atol)[:5]:
        i = tuple(i)
        out.append(Failure(check, t.tile_id, index_fn(i), complex(got[i]) if np.iscomplexobj(got) else float(got[i]),
                           complex(expected[i]) if np.iscomplexobj(expected) else float(expected[i])))


def _is_pow2_square(t: Tile) -> bool:
    return t.n_x == t.n_y and t.n_x & (t.n_x - 1) == 0


def check_haar(t: Tile, rtol=1e-9, atol=1e-12, fault=False, exhaustive_max=64) -> list[Failure]:
    out: list[Failure] = []
    if not _is_pow2_square(t):
        return out
    sign = -1.0 if fault else 1.0
    p = pcht_transform(t, _butterfly_sign=sign).to_vector()
    d = dht_transform(rasterize(t)).to_vector()
    _report(out, "pcht_vs_dht", t, p, d, rtol, atol, lambda i: int(i[0]))
    if not math.isclose(float(np.dot(d, d)), t.area, rel_tol=rtol, abs_tol=atol):
        out.append(Failure("parseval", t.tile_id, "-", float(np.dot(d, d)), t.area))
    if t.n_x <= exhaustive_max:
        pruned: list = []
        pcht_reference(t, pruned=pruned, _butterfly_sign=sign)
        w = d[1:]
        J = t.n_x.bit_length() - 1
        for j, kx, ky in pruned:
            for jj in range(j, J):
                s = 2 ** (jj - j)
                for b in range(3):
                    base = level_offset(jj) + b * 4**jj
                    for x in range(kx * s, (kx + 1) * s):
                        seg = w[base + x * 2**jj + ky * s: base + x * 2**jj + (ky + 1) * s]
                        nz = np.flatnonzero(np.abs(seg) > atol)
                        if len(nz):
                            out.append(Failure("pruning_soundness", t.tile_id, (j, kx, ky, jj, b),
                                               float(seg[nz[0]]), 0.0))
    return out


def check_fourier(t: Tile, rtol=1e-9, atol=1e-12, cases=50, rng=None, exhaustive_max=64) -> list[Failure]:
    out: list[Failure] = []
    rng = np.random.default_rng(t.tile_id) if rng is None else rng
    Nx, Ny = t.n_x, t.n_y
    if Nx <= exhaustive_max and Ny <= exhaustive_max:
        k, l = np.meshgrid(np.arange(Nx), np.arange(Ny), indexing="ij")
    else:
        k, l = rng.integers(0, Nx, cases), rng.integers(0, Ny, cases)
    ref = cfs_direct(t, k, l)
    for b in BACKENDS:
        try:
            F = fcfs_transform(t, b).F
        except BackendUnavailable:
            continue
        _report(out, f"fcfs_{b}_vs_direct", t, F[k, l], ref, rtol, atol)
    sig = build_sparse_signals(t)
    if sig.area != t.area:
        out.append(Failure("dc_area", t.tile_id, (0, 0), sig.area, t.area))
    spec = fcfs_transform(t, "dense")
    if spec.area != t.area or spec.F[0, 0] != t.area / math.sqrt(Nx * Ny):
        out.append(Failure("dc_identity", t.tile_id, (0, 0), spec.F[0, 0] * math.sqrt(Nx * Ny), t.area))
    for name, s in (("f_x", sig.f_x), ("f_y", sig.f_y), ("f_xy", sig.f_xy)):
        if s.values.sum() != 0:
            out.append(Failure("sparse_sum", t.tile_id, name, float(s.values.sum()), 0.0))
    ks = rng.integers(-3 * Nx, 3 * Nx + 1, cases)
    ls = rng.integers(-3 * Ny, 3 * Ny + 1, cases)
    q = spec.query(ks, ls)
    _report(out, "conjugate_symmetry", t, q, np.conj(spec.query(-ks, -ls)), rtol, atol,
            lambda i: (int(ks[i]), int(ls[i])))
    _report(out, "query_vs_direct", t, q, cfs_direct(t, ks, ls), rtol, atol, lambda i: (int(ks[i]), int(ls[i])))
    ks, ls = ks[:max(10, cases // 5)], ls[:max(10, cases // 5)]
    _report(out, "quadrature", t, cfs_direct(t, ks, ls), cfs_by_rectangles(t, ks, ls), rtol, atol,
            lambda i: (int(ks[i]), int(ls[i])))
    return out


def check_tiling(layout: Layout, spec: TilingSpec) -> list[Failure]:
    if not spec.disjoint:
        return []
    total = sum(t.area for t in tile_layout(layout, spec))
    if total != layout.area:
        return [Failure("tiling_area", -1, (spec.n_x, spec.n_y), total, layout.area)]
    return []


def run_suite(tiles: Iterable[Tile], rtol=1e-9, atol=1e-12, cases=50, fault=False, seed=0) -> list[Failure]:
    out: list[Failure] = []
    for t in tiles:
        out += check_haar(t, rtol, atol, fault)
        out += check_fourier(t, rtol, atol, cases, np.random.default_rng([seed, t.tile_id]))
    return out
