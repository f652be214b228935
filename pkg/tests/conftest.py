import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from rectixform.geometry import Polygon, Tile, validate_polygon
from rectixform.layout_io import TilingSpec, generate_layout, tile_layout

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

UNIT_SQUARE = [(0, 1), (1, 1), (1, 0), (0, 0)]
L_SHAPE = [(0, 2), (2, 2), (2, 1), (3, 1), (3, 0), (0, 0)]
RECT_4x3 = [(0, 3), (4, 3), (4, 0), (0, 0)]


def ray_cast(vertices, px, py) -> bool:
    """Even-odd crossing test of a horizontal ray from ``(px, py)``; uses raw vertices only."""
    v = [tuple(p) for p in vertices]
    inside = False
    for (x0, y0), (x1, y1) in zip(v, v[1:] + v[:1]):
        if x0 == x1 and x0 > px and min(y0, y1) <= py < max(y0, y1):
            inside = not inside
    return inside


def cell_mask(vertices, w, h) -> np.ndarray:
    """Membership of cell centres ``(m + 1/2, n + 1/2)`` by ray casting."""
    return np.array([[ray_cast(vertices, m + 0.5, n + 0.5) for n in range(h)] for m in range(w)])


@st.composite
def raw_polygons(draw, max_side=12):
    """Vertex lists of assorted rectilinear shapes, randomly shifted, reversed and rotated."""
    kind = draw(st.sampled_from(["rect", "notch", "stairs", "plus"]))
    if kind == "rect":
        w, h = draw(st.integers(1, max_side)), draw(st.integers(1, max_side))
        v = [(0, h), (w, h), (w, 0), (0, 0)]
    elif kind == "notch":
        w = draw(st.integers(3, max_side))
        h = draw(st.integers(2, max_side))
        a = draw(st.integers(1, w - 2))
        b = draw(st.integers(a + 1, w - 1))
        c = draw(st.integers(1, h - 1))
        v = [(0, h), (a, h), (a, c), (b, c), (b, h), (w, h), (w, 0), (0, 0)]
    elif kind == "stairs":
        n = draw(st.integers(2, 5))
        step = min(3, max(1, max_side // n))
        widths = draw(st.lists(st.integers(1, step), min_size=n, max_size=n))
        drops = draw(st.lists(st.integers(1, step), min_size=n, max_size=n))
        heights = list(np.cumsum(drops[::-1])[::-1])
        xs = list(np.cumsum(widths))
        v = [(0, heights[0])]
        for i in range(n - 1):
            v += [(xs[i], heights[i]), (xs[i], heights[i + 1])]
        v += [(xs[-1], heights[-1]), (xs[-1], 0), (0, 0)]
    else:
        arm = min(3, max(1, max_side // 3))
        a, b = draw(st.integers(1, arm)), draw(st.integers(1, arm))
        c = draw(st.integers(1, arm))
        s = a + b + c
        v = [(a, s), (a + b, s), (a + b, a + b), (s, a + b), (s, a), (a + b, a),
             (a + b, 0), (a, 0), (a, a), (0, a), (0, a + b), (a, a + b)]
    dx, dy = draw(st.integers(0, 6)), draw(st.integers(0, 6))
    v = [(int(x) + dx, int(y) + dy) for x, y in v]
    if draw(st.booleans()):
        v = v[::-1]
    r = draw(st.integers(0, len(v) - 1))
    return v[r:] + v[:r]


@st.composite
def polygons(draw, max_side=12) -> Polygon:
    return validate_polygon(draw(raw_polygons(max_side)))


GENERATORS = {
    "contact_array": lambda n: {"grid": (6, 6), "pitch": max(2, n // 3), "size": max(1, n // 5), "dropout": 0.3},
    "random_rects": lambda n: {"extent": 2 * n, "count": 40, "max_size": max(1, n // 4)},
    "staircase_mix": lambda n: {"extent": 2 * n, "count": 30, "k": [6, 8, 12], "max_step": max(1, n // 16)},
}


def generated_tiles(kind: str, n: int, seed: int) -> list[Tile]:
    layout = generate_layout(kind, GENERATORS[kind](n), seed)
    return list(tile_layout(layout, TilingSpec(n)))


def tile_pool(sizes, count, seed=0) -> list[Tile]:
    """At least ``count`` non-empty tiles cycling over generators, sizes and seeds."""
    out: list[Tile] = []
    s = seed
    while len(out) < count:
        for kind in GENERATORS:
            for n in sizes:
                out += generated_tiles(kind, n, s)
        s += 1
    return out


@st.composite
def tiles(draw, sizes=(8, 16, 32)) -> Tile:
    kind = draw(st.sampled_from(sorted(GENERATORS)))
    n = draw(st.sampled_from(sizes))
    ts = generated_tiles(kind, n, draw(st.integers(0, 10_000)))
    if not ts:
        return Tile(n, n)
    return ts[draw(st.integers(0, len(ts) - 1))]


@pytest.fixture
def unit_square():
    return validate_polygon(UNIT_SQUARE)


@pytest.fixture
def l_shape():
    return validate_polygon(L_SHAPE)


@pytest.fixture
def rect43():
    return validate_polygon(RECT_4x3)


# ---------------------------------------------------------------- acceptance report

_CRITERIA: dict[int, tuple[str, str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion checked by the test")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    rep = (yield).get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or (rep.when != "call" and rep.passed):
        return
    number, title = mark.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    if rep.failed:
        msg = rep.longrepr.reprcrash.message if hasattr(rep.longrepr, "reprcrash") else str(rep.longrepr)
        detail = (detail + "; " if detail else "") + msg.splitlines()[0]
    _CRITERIA[number] = (title, "FAIL" if rep.failed else "PASS" if rep.passed else "SKIP", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_CRITERIA):
        title, outcome, detail = _CRITERIA[number]
        terminalreporter.write_line(f"{outcome} [{number:2d}] {title}" + (f": {detail}" if detail else ""))
