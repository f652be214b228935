"""Integer-lattice rectilinear polygons.

Polygons are stored clockwise (y axis pointing up) with the first edge
horizontal, so even-indexed edges ``i -> i+1`` are horizontal and odd-indexed
edges are vertical. Point membership follows the half-open convention of
``[x1, x2) x [y1, y2)`` rectangles: a lattice cell ``[m, m+1) x [n, n+1)`` is
identified with its lower-left corner ``(m, n)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class GeometryError(ValueError):
    """Base class for invalid polygon input."""

    invariant = "polygon"


class RejectOddVertexCount(GeometryError):
    invariant = "even_vertex_count"


class RejectNonRectilinear(GeometryError):
    invariant = "rectilinear"


class RejectZeroEdge(GeometryError):
    invariant = "nonzero_edge"


class RejectSelfIntersection(GeometryError):
    invariant = "simple"


class Point(NamedTuple):
    x: int
    y: int


class Rect(NamedTuple):
    """Half-open rectangle ``[x1, x2) x [y1, y2)``."""

    x1: int
    y1: int
    x2: int
    y2: int

    @property
    def area(self):
        return (self.x2 - self.x1) * (self.y2 - self.y1)

    def intersect(self, other: "Rect") -> "Rect | None":
        x1, y1 = max(self.x1, other.x1), max(self.y1, other.y1)
        x2, y2 = min(self.x2, other.x2), min(self.y2, other.y2)
        if x1 >= x2 or y1 >= y2:
            return None
        return Rect(x1, y1, x2, y2)

    def intersection_area(self, other: "Rect"):
        w = min(self.x2, other.x2) - max(self.x1, other.x1)
        h = min(self.y2, other.y2) - max(self.y1, other.y1)
        return w * h if w > 0 and h > 0 else 0

    def contains_point(self, x, y) -> bool:
        return self.x1 <= x < self.x2 and self.y1 <= y < self.y2

    def translate(self, dx: int, dy: int) -> "Rect":
        return Rect(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)


class SignedRect(NamedTuple):
    rect: Rect
    sign: int


@dataclass(frozen=True)
class Polygon:
    """A validated, start-normalized, clockwise rectilinear lattice polygon.

    Build instances with :func:`validate_polygon` (or :meth:`Polygon.from_rect`);
    the constructor trusts its input.
    """

    vertices: tuple[Point, ...]

    @classmethod
    def from_rect(cls, r: Rect) -> "Polygon":
        x1, y1, x2, y2 = r
        if x1 >= x2 or y1 >= y2:
            raise RejectZeroEdge(f"degenerate rectangle {tuple(r)}")
        return cls((Point(x1, y2), Point(x2, y2), Point(x2, y1), Point(x1, y1)))

    def __len__(self) -> int:
        return len(self.vertices)

    @property
    def K(self) -> int:
        return len(self.vertices)

    @property
    def is_rectangle(self) -> bool:
        return len(self.vertices) == 4

    def horizontal_edges(self) -> Iterable[tuple[int, int, int]]:
        """Yield ``(x_start, x_end, y)`` for every horizontal edge in traversal order."""
        v = self.vertices
        for i in range(0, len(v), 2):
            yield v[i].x, v[i + 1].x, v[i].y

    @cached_property
    def bbox(self) -> Rect:
        xs = [p.x for p in self.vertices]
        ys = [p.y for p in self.vertices]
        return Rect(min(xs), min(ys), max(xs), max(ys))

    @cached_property
    def rects(self) -> tuple[Rect, ...]:
        """Disjoint rectangles covering the polygon (cached slab decomposition)."""
        if self.is_rectangle:
            return (self.bbox,)
        return disjoint_decomposition(self).rects

    def translate(self, dx: int, dy: int) -> "Polygon":
        return Polygon(tuple(Point(p.x + dx, p.y + dy) for p in self.vertices))

    def as_flat(self) -> list[int]:
        return [c for p in self.vertices for c in p]


@dataclass(frozen=True)
class Region:
    """Pairwise-disjoint positive rectangles."""

    rects: tuple[Rect, ...] = ()

    @property
    def area(self) -> int:
        return sum(r.area for r in self.rects)

    def __len__(self) -> int:
        return len(self.rects)

    def __iter__(self):
        return iter(self.rects)

    def polygons(self) -> list[Polygon]:
        return [Polygon.from_rect(r) for r in self.rects]


def _orientation_sum(v: Sequence[Point]) -> int:
    return sum(v[i].y * (v[i + 1].x - v[i].x) for i in range(0, len(v), 2))


def _start_normalize(v: list[Point]) -> list[Point]:
    if v[0].x == v[1].x:
        v = v[1:] + v[:1]
    return v


def _segments_touch(a: tuple[Point, Point], b: tuple[Point, Point]) -> bool:
    # closed axis-aligned segments
    ax1, ax2 = sorted((a[0].x, a[1].x))
    ay1, ay2 = sorted((a[0].y, a[1].y))
    bx1, bx2 = sorted((b[0].x, b[1].x))
    by1, by2 = sorted((b[0].y, b[1].y))
    return ax1 <= bx2 and bx1 <= ax2 and ay1 <= by2 and by1 <= ay2


def validate_polygon(vertices: Iterable[Sequence[int]]) -> Polygon:
    """Check a vertex list and return the canonical clockwise :class:`Polygon`.

    Counter-clockwise input is reversed and a list starting on a vertical edge
    is rotated by one, so the result always starts with a horizontal edge.
    """
    v: list[Point] = []
    for p in vertices:
        x, y = p
        if int(x) != x or int(y) != y:
            raise RejectNonRectilinear(f"non-integer vertex {tuple(p)}")
        v.append(Point(int(x), int(y)))
    K = len(v)
    if K % 2 or K < 4:
        raise RejectOddVertexCount(f"need an even vertex count >= 4, got {K}")

    for i in range(K):
        a, b = v[i], v[(i + 1) % K]
        if a == b:
            raise RejectZeroEdge(f"zero-length edge at vertex {i}")
        if a.x != b.x and a.y != b.y:
            raise RejectNonRectilinear(f"edge {i} {tuple(a)}->{tuple(b)} is not axis-parallel")
    horizontal = [v[i].y == v[(i + 1) % K].y for i in range(K)]
    for i in range(K):
        if horizontal[i] == horizontal[(i + 1) % K]:
            raise RejectNonRectilinear(f"edges {i} and {(i + 1) % K} are collinear")

    edges = [(v[i], v[(i + 1) % K]) for i in range(K)]
    for i, j in combinations(range(K), 2):
        if j == i + 1 or (i == 0 and j == K - 1):
            continue
        if _segments_touch(edges[i], edges[j]):
            raise RejectSelfIntersection(f"edges {i} and {j} intersect")

    v = _start_normalize(v)
    if _orientation_sum(v) < 0:
        v = _start_normalize(v[::-1])
    return Polygon(tuple(v))


def area(p: Polygon) -> int:
    return _orientation_sum(p.vertices)


def perimeter(p: Polygon) -> int:
    v = p.vertices
    K = len(v)
    return sum(abs(v[(i + 1) % K].x - v[i].x) + abs(v[(i + 1) % K].y - v[i].y) for i in range(K))


def signed_rect_decomposition(p: Polygon) -> list[SignedRect]:
    """Rectangles anchored on the x axis, added or subtracted per horizontal edge.

    Edges on ``y = 0`` give empty rectangles and are dropped; edges below the
    axis give rectangles ``[y, 0)`` with the sign flipped.
    """
    out = []
    for xs, xe, y in p.horizontal_edges():
        if y == 0:
            continue
        s = 1 if xe > xs else -1
        x1, x2 = min(xs, xe), max(xs, xe)
        if y > 0:
            out.append(SignedRect(Rect(x1, 0, x2, y), s))
        else:
            out.append(SignedRect(Rect(x1, y, x2, 0), -s))
    return out


def disjoint_decomposition(p: Polygon) -> Region:
    """Slab sweep over the sorted x coordinates; adjacent equal slabs are merged."""
    edges = [(min(a, b), max(a, b), y) for a, b, y in p.horizontal_edges()]
    xs = sorted({p.x for p in p.vertices})
    open_: dict[tuple[int, int], int] = {}
    done: list[Rect] = []
    for xa, xb in zip(xs, xs[1:]):
        ys = sorted(y for u, v, y in edges if u <= xa and xb <= v)
        spans = list(zip(ys[0::2], ys[1::2]))
        nxt = {span: open_.pop(span, xa) for span in spans}
        for (y1, y2), x0 in open_.items():
            done.append(Rect(x0, y1, xa, y2))
        open_ = nxt
    for (y1, y2), x0 in open_.items():
        done.append(Rect(x0, y1, xs[-1], y2))
    done.sort(key=lambda r: (r.x1, r.y1))
    return Region(tuple(done))


def intersection_area(p: Polygon, support: Rect):
    """Area of ``p`` intersected with an axis-aligned rectangle (signed edge sweep)."""
    a1, b1, a2, b2 = support
    total = 0
    for xs, xe, y in p.horizontal_edges():
        u, v = (xs, xe) if xs < xe else (xe, xs)
        if a2 <= u or v <= a1 or y <= b1:
            continue
        term = (min(v, a2) - max(u, a1)) * (min(y, b2) - b1)
        total += term if xe > xs else -term
    return total


def clip_to_window(p: Polygon, window: Rect) -> Region:
    """Pieces of ``p`` inside ``window``, in window-local coordinates."""
    out = []
    for r in p.rects:
        c = r.intersect(window)
        if c is not None:
            out.append(c.translate(-window.x1, -window.y1))
    return Region(tuple(out))


def contains_point(p: Polygon, x, y) -> bool:
    """Half-open membership by ray casting towards +x (independent of the decompositions)."""
    v = p.vertices
    K = len(v)
    crossings = 0
    for i in range(K):
        a, b = v[i], v[(i + 1) % K]
        if a.x != b.x:
            continue
        lo, hi = (a.y, b.y) if a.y < b.y else (b.y, a.y)
        if lo <= y < hi and a.x > x:
            crossings += 1
    return crossings % 2 == 1


def polygons_overlap(p: Polygon, q: Polygon) -> bool:
    """True when the interiors share positive area."""
    if p.bbox.intersection_area(q.bbox) == 0:
        return False
    return any(r.intersection_area(s) > 0 for r in p.rects for s in q.rects)


@dataclass(frozen=True)
class Tile:
    """A ``n_x`` by ``n_y`` window with disjoint polygon contents in local coordinates.

    ``origin`` and ``index`` locate the tile in its layout and are informational.
    """

    n_x: int
    n_y: int
    polygons: tuple[Polygon, ...] = ()
    origin: tuple[int, int] = (0, 0)
    index: tuple[int, int] = (0, 0)
    tile_id: int = 0
    check: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        if self.n_x <= 0 or self.n_y <= 0:
            raise ValueError(f"tile dimensions must be positive, got {self.n_x}x{self.n_y}")
        object.__setattr__(self, "polygons", tuple(self.polygons))
        if self.check:
            for m, p in enumerate(self.polygons):
                b = p.bbox
                if b.x1 < 0 or b.y1 < 0 or b.x2 > self.n_x or b.y2 > self.n_y:
                    raise ValueError(f"polygon {m} with bbox {tuple(b)} leaves the tile")

    @property
    def M(self) -> int:
        return len(self.polygons)

    @property
    def K(self) -> int:
        return sum(p.K for p in self.polygons)

    @property
    def area(self) -> int:
        return sum(area(p) for p in self.polygons)

    @cached_property
    def packed(self) -> "PackedTile":
        return PackedTile.from_polygons(self.polygons)

    def check_disjoint(self) -> None:
        i_j = find_overlap(self.polygons)
        if i_j is not None:
            raise ValueError(f"polygons {i_j[0]} and {i_j[1]} overlap")


@dataclass(frozen=True)
class PackedTile:
    """Flat numpy view of a tile's vertices for the vectorized kernels.

    ``xy`` holds every vertex, ``nxt`` the index of the following vertex of the
    same polygon, and ``hx0, hx1, hy`` the horizontal edges grouped by polygon
    (``edge_ptr[m]:edge_ptr[m+1]`` belong to polygon ``m``).
    """

    xy: np.ndarray
    nxt: np.ndarray
    hx0: np.ndarray
    hx1: np.ndarray
    hy: np.ndarray
    edge_ptr: np.ndarray

    @classmethod
    def from_polygons(cls, polygons: Sequence[Polygon]) -> "PackedTile":
        counts = [p.K for p in polygons]
        total = sum(counts)
        xy = np.array([c for p in polygons for c in p.as_flat()], dtype=np.int64).reshape(total, 2)
        starts = np.concatenate(([0], np.cumsum(counts)[:-1])).astype(np.int64) if counts else np.zeros(0, np.int64)
        nxt = np.arange(1, total + 1, dtype=np.int64)
        for s, c in zip(starts, counts):
            nxt[s + c - 1] = s
        even = np.concatenate([np.arange(s, s + c, 2) for s, c in zip(starts, counts)]) if counts else np.zeros(0, np.int64)
        even = even.astype(np.int64)
        edge_ptr = np.zeros(len(counts) + 1, dtype=np.int64)
        edge_ptr[1:] = np.cumsum(np.asarray(counts, dtype=np.int64) // 2)
        return cls(
            xy=xy,
            nxt=nxt,
            hx0=np.ascontiguousarray(xy[even, 0]),
            hx1=np.ascontiguousarray(xy[nxt[even], 0]),
            hy=np.ascontiguousarray(xy[even, 1]),
            edge_ptr=edge_ptr,
        )


def find_overlap(polygons: Sequence[Polygon]) -> tuple[int, int] | None:
    """First overlapping pair ``(i, j)``, using a sweep over bounding boxes."""
    order = sorted(range(len(polygons)), key=lambda i: polygons[i].bbox.x1)
    active: list[int] = []
    for i in order:
        b = polygons[i].bbox
        active = [j for j in active if polygons[j].bbox.x2 > b.x1]
        for j in active:
            if polygons_overlap(polygons[i], polygons[j]):
                return (min(i, j), max(i, j))
        active.append(i)
    return None


def rasterize(t: Tile) -> np.ndarray:
    """Sample the tile at lattice points; ``image[m, n]`` covers cell ``(m, n)``."""
    img = np.zeros((t.n_x, t.n_y), dtype=np.int64)
    for p in t.polygons:
        for x1, y1, x2, y2 in p.rects:
            img[x1:x2, y1:y2] += 1
    return img
