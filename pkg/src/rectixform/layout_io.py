"""Layout files, synthetic layout generators and tiling.

File format, one polygon per line::

    rectixform-layout v1 unit=nm
    # comment
    0 2 3 2 3 0 0 0

Vertices are integer ``x y`` pairs; polygons are validated and normalized on
read, so counter-clockwise input is repaired silently.
"""
from __future__ import annotations

import math
import os
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .geometry import (
    GeometryError,
    Polygon,
    Rect,
    Tile,
    area,
    clip_to_window,
    find_overlap,
    validate_polygon,
)

HEADER = "rectixform-layout v1"
KINDS = ("contact_array", "random_rects", "staircase_mix")


class LayoutError(ValueError):
    pass


class ParseError(LayoutError):
    def __init__(self, message: str, line: int, offset: int = 0):
        super().__init__(f"line {line}, col {offset}: {message}")
        self.line = line
        self.offset = offset


class ValidationError(LayoutError):
    def __init__(self, index: int, invariant: str, message: str = ""):
        super().__init__(f"polygon {index} violates {invariant}" + (f": {message}" if message else ""))
        self.index = index
        self.invariant = invariant


class OverlapError(LayoutError):
    def __init__(self, i: int, j: int):
        super().__init__(f"polygons {i} and {j} overlap")
        self.pair = (i, j)


class ParamError(LayoutError):
    pass


@dataclass(frozen=True)
class Layout:
    polygons: tuple[Polygon, ...] = ()
    unit: str = "nm"

    @property
    def bbox(self) -> Rect | None:
        if not self.polygons:
            return None
        b = np.array([p.bbox for p in self.polygons])
        return Rect(int(b[:, 0].min()), int(b[:, 1].min()), int(b[:, 2].max()), int(b[:, 3].max()))

    @property
    def area(self) -> int:
        return sum(area(p) for p in self.polygons)

    @property
    def stats(self) -> dict:
        hist = Counter(p.K for p in self.polygons)
        return {
            "polygons": len(self.polygons),
            "rectangles": hist.get(4, 0),
            "vertices": sum(k * c for k, c in hist.items()),
            "area": self.area,
            "vertex_histogram": dict(sorted(hist.items())),
        }

    def validate(self) -> "Layout":
        pair = find_overlap(self.polygons)
        if pair is not None:
            raise OverlapError(*pair)
        return self

    def __len__(self) -> int:
        return len(self.polygons)


# ---------------------------------------------------------------- file io


def parse_layout(text: str) -> Layout:
    lines = text.splitlines()
    unit = None
    polygons = []
    for ln, raw in enumerate(lines, 1):
        body = raw.split("#", 1)[0]
        if not body.strip():
            continue
        if unit is None:
            head = body.split()
            if " ".join(head[:2]) != HEADER or len(head) != 3 or not head[2].startswith("unit="):
                raise ParseError(f"expected header '{HEADER} unit=<label>'", ln, 0)
            unit = head[2][len("unit="):]
            continue
        values, pos = [], 0
        for tok in body.split():
            col = body.index(tok, pos)
            pos = col + len(tok)
            try:
                values.append(int(tok))
            except ValueError:
                raise ParseError(f"not an integer: {tok!r}", ln, col) from None
        if len(values) % 2:
            raise ParseError("odd number of coordinates", ln, len(body.rstrip()))
        try:
            polygons.append(validate_polygon(zip(values[::2], values[1::2])))
        except GeometryError as e:
            raise ValidationError(len(polygons), e.invariant, f"line {ln}: {e}") from None
    if unit is None:
        raise ParseError("missing header", 1, 0)
    return Layout(tuple(polygons), unit).validate()


def read_layout(path: str | os.PathLike) -> Layout:
    with open(path, encoding="utf-8") as fh:
        return parse_layout(fh.read())


def format_layout(layout: Layout) -> str:
    out = [f"{HEADER} unit={layout.unit}"]
    out.extend(" ".join(map(str, p.as_flat())) for p in layout.polygons)
    return "\n".join(out) + "\n"


def write_layout(layout: Layout, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_layout(layout))


# ---------------------------------------------------------------- generators


class _BoxPacker:
    """Rejection sampler for bounding boxes, hashed on a coarse grid."""

    def __init__(self, cell: int):
        self.cell = max(1, cell)
        self.grid: dict[tuple[int, int], list[Rect]] = {}

    def _cells(self, r: Rect):
        c = self.cell
        for i in range(r.x1 // c, (r.x2 - 1) // c + 1):
            for j in range(r.y1 // c, (r.y2 - 1) // c + 1):
                yield i, j

    def try_add(self, r: Rect, gap: int = 0) -> bool:
        g = Rect(r.x1 - gap, r.y1 - gap, r.x2 + gap, r.y2 + gap)
        for key in self._cells(g):
            for o in self.grid.get(key, ()):
                if g.intersection_area(o) > 0:
                    return False
        for key in self._cells(r):
            self.grid.setdefault(key, []).append(r)
        return True


def _pair(v, name: str) -> tuple[int, int]:
    if isinstance(v, str):
        parts = v.lower().split("x")
        if len(parts) == 1:
            parts = parts * 2
        try:
            v = tuple(int(p) for p in parts)
        except ValueError:
            raise ParamError(f"{name} must look like 16x16, got {v!r}") from None
    elif np.isscalar(v):
        v = (int(v), int(v))
    v = tuple(int(a) for a in v)
    if len(v) != 2:
        raise ParamError(f"{name} needs two values")
    return v


def staircase(widths: Sequence[int], heights: Sequence[int]) -> list[tuple[int, int]]:
    """Vertices of a staircase anchored at the origin; ``heights`` strictly decreasing.

    ``n`` steps give ``2n + 2`` vertices.
    """
    xs = np.cumsum(widths)
    v = [(0, heights[0])]
    for i in range(len(widths) - 1):
        v += [(int(xs[i]), heights[i]), (int(xs[i]), heights[i + 1])]
    v += [(int(xs[-1]), heights[-1]), (int(xs[-1]), 0), (0, 0)]
    return v


def _contact_array(p: dict, rng: np.random.Generator) -> list[Polygon]:
    gx, gy = _pair(p.get("grid", (16, 16)), "grid")
    pitch = _pair(p.get("pitch", 8), "pitch")
    w, h = _pair(p.get("size", 2), "size")
    dropout = float(p.get("dropout", 0.0))
    ox, oy = _pair(p.get("origin", 0), "origin")
    if min(gx, gy, w, h) < 1 or w > pitch[0] or h > pitch[1]:
        raise ParamError("need grid >= 1 and 1 <= size <= pitch")
    if not 0 <= dropout < 1:
        raise ParamError("dropout must be in [0, 1)")
    keep = rng.random((gy, gx)) >= dropout
    out = []
    for j in range(gy):
        for i in range(gx):
            if keep[j, i]:
                x, y = ox + i * pitch[0], oy + j * pitch[1]
                out.append(Polygon.from_rect(Rect(x, y, x + w, y + h)))
    return out


def _random_rects(p: dict, rng: np.random.Generator) -> list[Polygon]:
    W, H = _pair(p.get("extent", 1024), "extent")
    count = int(p.get("count", 100))
    lo, hi = int(p.get("min_size", 1)), int(p.get("max_size", 32))
    tries = int(p.get("max_tries", 50 * max(count, 1)))
    if not 1 <= lo <= hi or hi > min(W, H) or count < 0:
        raise ParamError("need 1 <= min_size <= max_size <= extent and count >= 0")
    pack = _BoxPacker(hi)
    out = []
    for _ in range(tries):
        if len(out) == count:
            break
        w, h = rng.integers(lo, hi + 1, 2)
        x, y = rng.integers(0, W - w + 1), rng.integers(0, H - h + 1)
        r = Rect(int(x), int(y), int(x + w), int(y + h))
        if pack.try_add(r):
            out.append(Polygon.from_rect(r))
    return out


def _staircase_mix(p: dict, rng: np.random.Generator) -> list[Polygon]:
    W, H = _pair(p.get("extent", 1024), "extent")
    count = int(p.get("count", 100))
    K = p.get("k", 8)
    ks = [int(k) for k in (K if isinstance(K, (list, tuple)) else [K])]
    rect_fraction = float(p.get("rect_fraction", 0.5))
    step = int(p.get("max_step", 8))
    mirror = bool(p.get("mirror", True))
    tries = int(p.get("max_tries", 50 * max(count, 1)))
    if any(k < 6 or k % 2 for k in ks):
        raise ParamError("staircase vertex counts must be even and >= 6")
    if step < 1 or not 0 <= rect_fraction <= 1 or count < 0:
        raise ParamError("need max_step >= 1, 0 <= rect_fraction <= 1, count >= 0")
    n_max = (max(ks) - 2) // 2
    if n_max * step > min(W, H) or n_max + 1 > min(W, H):
        raise ParamError("extent too small for the requested staircases")
    pack = _BoxPacker(n_max * step)
    out = []
    for _ in range(tries):
        if len(out) == count:
            break
        if rng.random() < rect_fraction:
            w, h = (int(a) for a in rng.integers(1, step * 2 + 1, 2))
            verts = [(0, h), (w, h), (w, 0), (0, 0)]
        else:
            n = (int(rng.choice(ks)) - 2) // 2
            widths = rng.integers(1, step + 1, n)
            drops = rng.integers(1, step + 1, n)
            heights = np.cumsum(drops[::-1])[::-1]
            verts = staircase(widths, [int(a) for a in heights])
            w, h = int(widths.sum()), int(heights[0])
            if mirror:
                if rng.random() < 0.5:
                    verts = [(w - x, y) for x, y in verts]
                if rng.random() < 0.5:
                    verts = [(x, h - y) for x, y in verts]
        if w > W or h > H:
            continue
        x, y = int(rng.integers(0, W - w + 1)), int(rng.integers(0, H - h + 1))
        if pack.try_add(Rect(x, y, x + w, y + h)):
            out.append(validate_polygon([(a + x, b + y) for a, b in verts]))
    return out


_GENERATORS = {"contact_array": _contact_array, "random_rects": _random_rects, "staircase_mix": _staircase_mix}


def generate_layout(kind: str, params: dict | None = None, seed: int = 0, unit: str = "nm") -> Layout:
    """Deterministic synthetic layout.

    ``contact_array``: ``grid``, ``pitch``, ``size``, ``dropout``, ``origin``.
    ``random_rects``: ``extent``, ``count``, ``min_size``, ``max_size``.
    ``staircase_mix``: ``extent``, ``count``, ``k`` (int or list), ``rect_fraction``,
    ``max_step``, ``mirror``. Rejection samplers stop after ``max_tries``.
    """
    kind = kind.replace("-", "_")
    if kind not in _GENERATORS:
        raise ParamError(f"unknown layout kind {kind!r}; expected one of {KINDS}")
    rng = np.random.default_rng(seed)
    return Layout(tuple(_GENERATORS[kind](dict(params or {}), rng)), unit)


# ---------------------------------------------------------------- tiling


@dataclass(frozen=True)
class TilingSpec:
    """Tile windows of ``n_x`` by ``n_y`` placed every ``stride`` (``None`` means disjoint)."""

    n_x: int
    n_y: int | None = None
    stride: tuple[int, int] | int | None = None
    _stride: tuple[int, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.n_y is None:
            object.__setattr__(self, "n_y", self.n_x)
        s = (self.n_x, self.n_y) if self.stride is None else _pair(self.stride, "stride")
        if self.n_x < 1 or self.n_y < 1:
            raise ParamError("tile side must be a positive integer")
        if not (1 <= s[0] <= self.n_x and 1 <= s[1] <= self.n_y):
            raise ParamError("stride must be in [1, tile side]")
        object.__setattr__(self, "_stride", s)

    @property
    def disjoint(self) -> bool:
        return self._stride == (self.n_x, self.n_y)

    def grid(self, bbox: Rect) -> tuple[int, int]:
        sx, sy = self._stride
        return max(1, math.ceil((bbox.x2 - bbox.x1) / sx)), max(1, math.ceil((bbox.y2 - bbox.y1) / sy))


def tile_layout(layout: Layout, spec: TilingSpec) -> Iterator[Tile]:
    """Chop a layout into tiles, row-major from the lower-left bbox corner.

    Polygons lying entirely in a window keep their vertices (translated);
    polygons crossing a window edge contribute the window's share of their
    disjoint rectangles. Empty tiles are skipped. ``tile_id = iy * ncols + ix``.
    """
    bbox = layout.bbox
    if bbox is None:
        return
    sx, sy = spec._stride
    nx, ny = spec.n_x, spec.n_y
    ncols, nrows = spec.grid(bbox)
    contents: dict[tuple[int, int], list[Polygon]] = {}
    for p in layout.polygons:
        b = p.bbox
        ix0 = max(0, -(-(b.x1 - bbox.x1 - nx + 1) // sx))
        ix1 = min(ncols - 1, (b.x2 - 1 - bbox.x1) // sx)
        iy0 = max(0, -(-(b.y1 - bbox.y1 - ny + 1) // sy))
        iy1 = min(nrows - 1, (b.y2 - 1 - bbox.y1) // sy)
        for iy in range(iy0, iy1 + 1):
            for ix in range(ix0, ix1 + 1):
                x0, y0 = bbox.x1 + ix * sx, bbox.y1 + iy * sy
                w = Rect(x0, y0, x0 + nx, y0 + ny)
                if w.x1 <= b.x1 and w.y1 <= b.y1 and b.x2 <= w.x2 and b.y2 <= w.y2:
                    pieces = [p.translate(-x0, -y0)]
                else:
                    pieces = clip_to_window(p, w).polygons()
                if pieces:
                    contents.setdefault((iy, ix), []).extend(pieces)
    for iy, ix in sorted(contents):
        yield Tile(
            nx, ny, tuple(contents[iy, ix]),
            origin=(bbox.x1 + ix * sx, bbox.y1 + iy * sy),
            index=(ix, iy),
            tile_id=iy * ncols + ix,
            check=False,
        )
