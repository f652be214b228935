"""Continuous Fourier series of rectilinear tiles.

Coefficients use the orthonormal basis ``exp(i(w_x k x + w_y l y)) / sqrt(N_x N_y)``
with ``w = 2 pi / N``. Every coefficient except the DC term is a scaled DFT of a
sparse signal built from the vertices, because lattice coordinates make the
exponentials periodic in the coordinates. Arrays are indexed ``[k, l]`` with
``k`` along x.
"""
from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import NamedTuple

import numpy as np
import scipy.fft as sfft
from numba import njit

from .geometry import Tile
from .pruned_dft import (
    InvalidPlan,
    PrunedPlan1D,
    PrunedPlan2D,
    SparseSignal1D,
    SparseSignal2D,
    _roots,
    divisors,
    td_fft_1d,
    td_fft_2d,
)

BACKENDS = ("dense", "pruned", "goertzel")


class BackendUnavailable(ValueError):
    pass


def alpha(k, l, N_x: int, N_y: int):
    """Scale factor of the closed-form coefficient formulas; vectorizes over ``k, l``."""
    k = np.asarray(k)
    l = np.asarray(l)
    scalar = k.ndim == 0 and l.ndim == 0
    k, l = np.broadcast_arrays(k, l)
    out = np.empty(k.shape, dtype=complex)
    kz, lz = k == 0, l == 0
    sk = np.where(kz, 1, k)
    sl = np.where(lz, 1, l)
    out[kz & lz] = 1 / math.sqrt(N_x * N_y)
    m = ~kz & lz
    out[m] = 1j / (2 * np.pi * sk[m]) * math.sqrt(N_x / N_y)
    m = kz & ~lz
    out[m] = 1j / (2 * np.pi * sl[m]) * math.sqrt(N_y / N_x)
    m = ~kz & ~lz
    out[m] = -math.sqrt(N_x * N_y) / (4 * np.pi**2 * sk[m] * sl[m])
    return complex(out) if scalar else out


@lru_cache(maxsize=32)
def _alpha_grid(N_x: int, N_y: int) -> np.ndarray:
    g = alpha(np.arange(N_x)[:, None], np.arange(N_y)[None, :], N_x, N_y)
    g.flags.writeable = False
    return g


class SparseSignals(NamedTuple):
    f_x: SparseSignal1D
    f_y: SparseSignal1D
    f_xy: SparseSignal2D
    area: int


@njit(cache=True, nogil=True)
def _sparse_kernel(xy, nxt, Nx, Ny):
    K = xy.shape[0]
    H = K // 2
    fx_i = np.empty(H, np.int64)
    fx_v = np.empty(H)
    fy_i = np.empty(H, np.int64)
    fy_v = np.empty(H)
    xy_c = np.empty((K, 2), np.int64)
    xy_v = np.empty(K)
    nv = 0
    nh = 0
    area = 0
    for i in range(K):
        x, y = xy[i, 0], xy[i, 1]
        xn, yn = xy[nxt[i], 0], xy[nxt[i], 1]
        if x == xn:
            fx_i[nv] = x % Nx
            fx_v[nv] = y - yn
            nv += 1
        else:
            yr = y % Ny
            fy_i[nh] = yr
            fy_v[nh] = xn - x
            xy_c[2 * nh, 0] = xn % Nx
            xy_c[2 * nh, 1] = yr
            xy_v[2 * nh] = 1.0
            xy_c[2 * nh + 1, 0] = x % Nx
            xy_c[2 * nh + 1, 1] = yr
            xy_v[2 * nh + 1] = -1.0
            area += y * (xn - x)
            nh += 1
    return fx_i[:nv], fx_v[:nv], fy_i[:nh], fy_v[:nh], xy_c[:2 * nh], xy_v[:2 * nh], area


def build_sparse_signals(t: Tile) -> SparseSignals:
    """Vertical edge lengths on x, horizontal edge lengths on y, and +-1 at edge ends."""
    pk = t.packed
    fx_i, fx_v, fy_i, fy_v, c, v, a = _sparse_kernel(pk.xy, pk.nxt, t.n_x, t.n_y)
    return SparseSignals(
        SparseSignal1D(t.n_x, fx_i, fx_v),
        SparseSignal1D(t.n_y, fy_i, fy_v),
        SparseSignal2D(t.n_x, t.n_y, c, v),
        int(a),
    )


@dataclass
class FourierSpectrum:
    """First ``N_x`` by ``N_y`` coefficients plus what :meth:`query` needs.

    ``dft_x`` and ``dft_y`` are the 1D sparse-signal DFTs. The 2D layer is
    recovered lazily from the interior coefficients; its ``l = 0`` column is
    recomputed from the sparse signal and its ``k = 0`` row vanishes because
    every horizontal edge puts ``+1`` and ``-1`` on the same row.
    """

    n_x: int
    n_y: int
    coefficients: np.ndarray
    area: int
    dft_x: np.ndarray = field(repr=False)
    dft_y: np.ndarray = field(repr=False)
    signals: SparseSignals = field(repr=False)

    @property
    def F(self) -> np.ndarray:
        return self.coefficients

    @cached_property
    def dft_xy(self) -> np.ndarray:
        a = _alpha_grid(self.n_x, self.n_y)
        d = np.zeros((self.n_x, self.n_y), dtype=complex)
        d[1:, 1:] = self.coefficients[1:, 1:] / a[1:, 1:]
        f = self.signals.f_xy
        d[:, 0] = _direct_dft_1d(SparseSignal1D(self.n_x, f.coords[:, 0], f.values))
        return d

    def query(self, k, l):
        return cfs_query(self, k, l)

    def to_vector(self) -> np.ndarray:
        return self.coefficients.reshape(-1)


def _direct_dft_1d(s: SparseSignal1D) -> np.ndarray:
    n = np.mod(s.indices, s.N)
    return _roots(s.N)[np.outer(np.arange(s.N), n) % s.N] @ s.values


def _direct_dft_2d(s: SparseSignal2D) -> np.ndarray:
    c = np.mod(s.coords, (s.N_x, s.N_y)).reshape(-1, 2)
    ex = _roots(s.N_x)[np.outer(np.arange(s.N_x), c[:, 0]) % s.N_x] * s.values
    ey = _roots(s.N_y)[np.outer(np.arange(s.N_y), c[:, 1]) % s.N_y]
    return ex @ ey.T


def _is_prime(n: int) -> bool:
    return n >= 2 and all(n % d for d in range(2, math.isqrt(n) + 1))


@lru_cache(maxsize=32)
def _inv_index(N: int) -> np.ndarray:
    r = 1.0 / np.maximum(np.arange(N), 1)
    r.flags.writeable = False
    return r


def resolve_plan(plan, K: int, N_x: int, N_y: int) -> "FcfsPlan":
    """``"tuned"`` (measured lookup), ``"model"`` (operation-count model) or an explicit plan."""
    if isinstance(plan, FcfsPlan):
        if (plan.N_x, plan.N_y) != (N_x, N_y):
            raise InvalidPlan("plan was built for a different tile size")
        return plan
    if plan is None or plan == "tuned":
        return tune_plan(K, N_x, N_y)
    if plan == "model":
        return choose_plan(K, N_x, N_y)
    raise ValueError(f"unknown plan {plan!r}")


def fcfs_transform(t: Tile, backend: str = "pruned", plan=None) -> FourierSpectrum:
    """Fast continuous Fourier series over the selected sparse-DFT backend.

    ``plan`` only matters for the pruned backend, see :func:`resolve_plan`.
    """
    if backend not in BACKENDS:
        raise ValueError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    Nx, Ny = t.n_x, t.n_y
    sig = build_sparse_signals(t)
    if backend == "pruned":
        if _is_prime(Nx) or _is_prime(Ny):
            raise BackendUnavailable(f"pruned backend needs composite sides, got {Nx}x{Ny}")
        plan = resolve_plan(plan, t.K, Nx, Ny)
        dx = td_fft_1d(sig.f_x.indices, sig.f_x.values, PrunedPlan1D(Nx, plan.P_x1))
        dy = td_fft_1d(sig.f_y.indices, sig.f_y.values, PrunedPlan1D(Ny, plan.P_y1))
        c = -math.sqrt(Nx * Ny) / (4 * math.pi**2)
        F = td_fft_2d(sig.f_xy.coords, sig.f_xy.values, PrunedPlan2D(Nx, Ny, plan.P_x2, plan.P_y2),
                      (c, _inv_index(Nx), _inv_index(Ny)))
    else:
        if backend == "dense":
            dx = sfft.fft(sig.f_x.dense())
            dy = sfft.fft(sig.f_y.dense())
            dxy = sfft.fft2(sig.f_xy.dense())
        else:
            dx = _direct_dft_1d(sig.f_x)
            dy = _direct_dft_1d(sig.f_y)
            dxy = _direct_dft_2d(sig.f_xy)
        F = _alpha_grid(Nx, Ny) * dxy
    a = _alpha_grid(Nx, Ny)
    F[1:, 0] = a[1:, 0] * dx[1:]
    F[0, 1:] = a[0, 1:] * dy[1:]
    F[0, 0] = sig.area / math.sqrt(Nx * Ny)
    return FourierSpectrum(Nx, Ny, F, sig.area, dx, dy, sig)


def cfs_query(source, k, l):
    """Coefficient at arbitrary signed ``(k, l)`` from cached DFT layers.

    ``source`` is a :class:`FourierSpectrum` or a :class:`Tile` (transformed on
    the fly with the dense backend).
    """
    s = source if isinstance(source, FourierSpectrum) else fcfs_transform(source, "dense")
    k = np.asarray(k)
    l = np.asarray(l)
    scalar = k.ndim == 0 and l.ndim == 0
    k, l = np.broadcast_arrays(k, l)
    kr, lr = np.mod(k, s.n_x), np.mod(l, s.n_y)
    raw = np.where(
        (k == 0) & (l == 0),
        s.area,
        np.where(l == 0, s.dft_x[kr], np.where(k == 0, s.dft_y[lr], s.dft_xy[kr, lr])),
    )
    out = alpha(k, l, s.n_x, s.n_y) * raw
    return complex(out) if scalar else out


def cfs_direct(t: Tile, k, l):
    """Closed-form coefficient straight from the vertex lists, any signed ``(k, l)``."""
    Nx, Ny = t.n_x, t.n_y
    k = np.asarray(k, dtype=np.int64)
    l = np.asarray(l, dtype=np.int64)
    scalar = k.ndim == 0 and l.ndim == 0
    k, l = np.broadcast_arrays(k, l)
    pk = t.packed
    x0, x1, y = pk.hx0, pk.hx1, pk.hy
    xy = pk.xy
    vert = xy[:, 0] == xy[pk.nxt, 0] if len(xy) else np.zeros(0, bool)
    vx = xy[vert, 0]
    vdy = (xy[vert, 1] - xy[pk.nxt[vert], 1]).astype(float)

    def ex(kk, xx, N):
        return _roots(N)[np.mod(kk[..., None] * xx, N)]

    area_ = float(np.dot(y, x1 - x0)) if len(y) else 0.0
    s_k0 = (ex(k, vx, Nx) * vdy).sum(-1)
    s_0l = (ex(l, y, Ny) * (x1 - x0)).sum(-1)
    s_kl = (ex(l, y, Ny) * (ex(k, x1, Nx) - ex(k, x0, Nx))).sum(-1)
    raw = np.where((k == 0) & (l == 0), area_, np.where(l == 0, s_k0, np.where(k == 0, s_0l, s_kl)))
    out = alpha(k, l, Nx, Ny) * raw
    return complex(out) if scalar else out


def cfs_by_rectangles(t: Tile, k, l):
    """Sum of exact basis-function integrals over each polygon's disjoint rectangles.

    Shares nothing with the vertex formulas, so it serves as an oracle.
    """
    Nx, Ny = t.n_x, t.n_y
    k = np.asarray(k, dtype=float)
    l = np.asarray(l, dtype=float)
    scalar = k.ndim == 0 and l.ndim == 0
    k, l = np.broadcast_arrays(k, l)
    wx, wy = 2 * np.pi / Nx, 2 * np.pi / Ny

    def integral(freq, w, a, b):
        safe = np.where(freq == 0, 1.0, freq)
        val = (np.exp(-1j * w * safe * b) - np.exp(-1j * w * safe * a)) / (-1j * w * safe)
        return np.where(freq == 0, b - a, val)

    total = np.zeros(k.shape, dtype=complex)
    for p in t.polygons:
        for x1, y1, x2, y2 in p.rects:
            total += integral(k, wx, x1, x2) * integral(l, wy, y1, y2)
    out = total / math.sqrt(Nx * Ny)
    return complex(out) if scalar else out


@njit(cache=True, nogil=True)
def _hermitian_fill(R, out, scale):
    Nx, Ny = out.shape
    h = R.shape[1]
    for k in range(Nx):
        nk = (Nx - k) % Nx
        for l in range(h):
            out[k, l] = R[k, l] * scale
        for l in range(h, Ny):
            out[k, l] = np.conj(R[nk, Ny - l]) * scale


def fft_discrete(image: np.ndarray) -> np.ndarray:
    """Full 2D FFT of the sampled tile, scaled to be comparable with the CFS.

    The image is real, so a real-input FFT supplies half the spectrum and
    Hermitian symmetry fills in the rest.
    """
    image = np.asarray(image, dtype=np.float64)
    R = sfft.rfft2(image)
    out = np.empty(image.shape, dtype=complex)
    _hermitian_fill(R, out, 1.0 / math.sqrt(image.shape[0] * image.shape[1]))
    return out


# ---------------------------------------------------------------- complexity models


def c_fft1d(N: int) -> float:
    return 4 * N * math.log2(N) - 6 * N + 8


def c_fft2d(N_x: int, N_y: int) -> float:
    return 4 * N_x * N_y * math.log2(N_x * N_y) - 12 * N_x * N_y + 8 * N_x + 8 * N_y


@dataclass(frozen=True)
class FcfsPlan:
    """Sub-FFT lengths: ``(x1, y1)`` for the two 1D steps, ``(x2, y2)`` for the 2D step."""

    N_x: int
    N_y: int
    P_x1: int
    P_y1: int
    P_x2: int
    P_y2: int

    def __post_init__(self):
        for N, P in ((self.N_x, self.P_x1), (self.N_y, self.P_y1), (self.N_x, self.P_x2), (self.N_y, self.P_y2)):
            if P < 1 or N % P:
                raise InvalidPlan(f"P={P} does not divide N={N}")


@dataclass(frozen=True)
class FcfsComplexityReport:
    K: int
    M: int
    N_x: int
    N_y: int
    plan: FcfsPlan
    Q_x1: int
    Q_y1: int
    Q_x2: int
    Q_y2: int
    step1: float
    step2: float
    step3: float
    step4: float
    total: float
    goertzel_total: float
    fft_baseline: float


def _step_1d(K: int, N: int, P: int) -> float:
    Q = N // P
    return (2.5 + 1.5 * Q) * K + (0.5 * Q + 1) * c_fft1d(P)


def _step_2d(K: int, N_x: int, N_y: int, P_x: int, P_y: int) -> float:
    Qx, Qy = N_x // P_x, N_y // P_y
    return (-8.5 + 9.5 * Qx + 2.5 * Qx * Qy) * K + Qx * (0.5 * Qy + 1) * c_fft2d(P_x, P_y)


def goertzel_complexity(K: int, M: int, N_x: int, N_y: int) -> float:
    return ((N_x + 0.25) * (N_y + 1.25) + 19 / 16) * K - M


def fft_complexity(N_x: int, N_y: int) -> float:
    return 0.5 * c_fft2d(N_x, N_y)


def fcfs_complexity(K: int, M: int, N_x: int, N_y: int, plan: FcfsPlan | None = None) -> FcfsComplexityReport:
    if plan is None:
        plan = choose_plan(K, N_x, N_y)
    if (plan.N_x, plan.N_y) != (N_x, N_y):
        raise InvalidPlan("plan was built for a different tile size")
    s1 = 1.5 * K - M
    s2 = _step_1d(K, N_x, plan.P_x1)
    s3 = _step_1d(K, N_y, plan.P_y1)
    s4 = _step_2d(K, N_x, N_y, plan.P_x2, plan.P_y2)
    return FcfsComplexityReport(
        K, M, N_x, N_y, plan,
        N_x // plan.P_x1, N_y // plan.P_y1, N_x // plan.P_x2, N_y // plan.P_y2,
        s1, s2, s3, s4, s1 + s2 + s3 + s4,
        goertzel_complexity(K, M, N_x, N_y),
        fft_complexity(N_x, N_y),
    )


@lru_cache(maxsize=1024)
def choose_plan(K: int, N_x: int, N_y: int) -> FcfsPlan:
    """Divisor search minimizing the modeled FCFS cost; ties go to the smallest P."""

    def best_1d(N):
        best, arg = None, None
        for P in divisors(N):
            c = _step_1d(K, N, P)
            if best is None or c < best:
                best, arg = c, P
        return arg

    best, arg = None, None
    for Px in divisors(N_x):
        for Py in divisors(N_y):
            c = _step_2d(K, N_x, N_y, Px, Py)
            if best is None or c < best:
                best, arg = c, (Px, Py)
    return FcfsPlan(N_x, N_y, best_1d(N_x), best_1d(N_y), *arg)


# ---------------------------------------------------------------- measured plans

_TUNED: dict[tuple[int, int, int], FcfsPlan] = {}
_TUNE_LOCK = threading.Lock()


def _k_bucket(K: int) -> int:
    return 1 << max(2, int(K - 1).bit_length())


def _time_2d(coords, values, plan: PrunedPlan2D, reps: int = 3) -> float:
    td_fft_2d(coords, values, plan)
    best = math.inf
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        td_fft_2d(coords, values, plan)
        best = min(best, time.perf_counter_ns() - t0)
    return best


def tune_plan(K: int, N_x: int, N_y: int) -> FcfsPlan:
    """Runtime-optimal 2D sub-FFT lengths on this machine, memoized per K bucket.

    Operation counts ignore cache behaviour and per-call overhead of the FFT
    library, so the 2D step is timed on a synthetic signal with the bucket's
    vertex count. The search is a greedy descent that moves ``P_x`` and
    ``P_y`` to neighbouring divisors, starting from the faster of the modeled optimum
    and the direct-x plan ``P_x = 1, P_y = N_y``.
    The cheap 1D steps keep their modeled lengths.
    """
    key = (_k_bucket(K), N_x, N_y)
    plan = _TUNED.get(key)
    if plan is not None:
        return plan
    with _TUNE_LOCK:
        plan = _TUNED.get(key)
        if plan is None:
            plan = _tune(key[0], N_x, N_y)
            _TUNED[key] = plan
    return plan


def _tune(K: int, N_x: int, N_y: int) -> FcfsPlan:
    model = choose_plan(K, N_x, N_y)
    if N_x * N_y <= 64 * 64:
        return model
    rng = np.random.default_rng(K * 7919 + N_x * 31 + N_y)
    # horizontal edges: +1 and -1 on a shared row
    h = K // 2
    rows = rng.integers(0, N_y, h)
    coords = np.stack([rng.integers(0, N_x, K), np.repeat(rows, 2)], 1)
    values = np.tile([1.0, -1.0], h)
    dx, dy = divisors(N_x), divisors(N_y)
    cost: dict[tuple[int, int], float] = {}

    def measure(ix, iy):
        if (ix, iy) not in cost:
            cost[ix, iy] = _time_2d(coords, values, PrunedPlan2D(N_x, N_y, dx[ix], dy[iy]))
        return cost[ix, iy]

    # descend from the faster of the modeled plan and the direct-x plan
    starts = [(dx.index(model.P_x2), dy.index(model.P_y2)), (0, len(dy) - 1)]
    cur = min(starts, key=lambda ij: measure(*ij))
    while True:
        best = cur
        for sx, sy in ((1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (-1, -1)):
            nb = (cur[0] + sx, cur[1] + sy)
            if 0 <= nb[0] < len(dx) and 0 <= nb[1] < len(dy) and measure(*nb) < measure(*best):
                best = nb
        if best == cur:
            break
        cur = best
    return FcfsPlan(N_x, N_y, model.P_x1, model.P_y1, dx[cur[0]], dy[cur[1]])


def tuned_plans() -> dict[tuple[int, int, int], FcfsPlan]:
    """Snapshot of the lookup table, keyed by ``(K bucket, N_x, N_y)``."""
    return dict(_TUNED)
