"""Input-pruned DFTs by transform decomposition.

An ``N``-point DFT with ``N = P * Q`` is split on the output index
``k = q + Q * p``::

    X[q + Q p] = sum_m z_q[m] exp(-2i pi m p / P),
    z_q[m]     = sum_{n = m mod P} x[n] exp(-2i pi n q / N)

so a K-sparse input costs ``K * Q`` twiddle accumulations plus ``Q`` dense
FFTs of length ``P``. ``P = N`` is one dense FFT, ``P = 1`` is direct
evaluation of every output. The 2D transform applies the same split on both
axes and, for real input, only evaluates half of the ``q_y`` offsets; the
rest follow from conjugate symmetry. When the input occupies few residues
along y, the first pass of each 2D sub-FFT skips the empty columns.

With ``P_x = 1`` the x axis is evaluated directly. Entries are grouped by
row, each occupied row gets a sparse DFT over half of the x frequencies, and
only the y axis goes through the decomposition. Inputs whose entries share
few rows, like the vertex signals of rectilinear polygons, favour this path.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft as sfft
from numba import njit


class InvalidPlan(ValueError):
    pass


@dataclass(frozen=True)
class PrunedPlan1D:
    N: int
    P: int

    def __post_init__(self):
        if self.N < 1 or self.P < 1 or self.N % self.P:
            raise InvalidPlan(f"P={self.P} does not divide N={self.N}")

    @property
    def Q(self) -> int:
        return self.N // self.P


@dataclass(frozen=True)
class PrunedPlan2D:
    N_x: int
    N_y: int
    P_x: int
    P_y: int

    def __post_init__(self):
        PrunedPlan1D(self.N_x, self.P_x)
        PrunedPlan1D(self.N_y, self.P_y)

    @property
    def Q_x(self) -> int:
        return self.N_x // self.P_x

    @property
    def Q_y(self) -> int:
        return self.N_y // self.P_y


@dataclass(frozen=True)
class SparseSignal1D:
    """Length-``N`` signal given by ``(index, value)`` entries; repeats accumulate."""

    N: int
    indices: np.ndarray
    values: np.ndarray

    @classmethod
    def from_pairs(cls, N: int, pairs) -> "SparseSignal1D":
        pairs = list(pairs)
        idx = np.array([i for i, _ in pairs], dtype=np.int64)
        val = np.array([v for _, v in pairs], dtype=np.float64)
        return cls(N, idx, val)

    def canonical(self) -> "SparseSignal1D":
        """Unique sorted indices reduced mod ``N``, zero entries dropped."""
        idx = np.mod(self.indices, self.N)
        u, inv = np.unique(idx, return_inverse=True)
        v = np.zeros(len(u))
        np.add.at(v, inv, self.values)
        keep = v != 0
        return SparseSignal1D(self.N, u[keep], v[keep])

    def to_dict(self) -> dict[int, float]:
        c = self.canonical()
        return {int(i): float(v) for i, v in zip(c.indices, c.values)}

    def dense(self) -> np.ndarray:
        x = np.zeros(self.N)
        np.add.at(x, np.mod(self.indices, self.N), self.values)
        return x

    @property
    def nnz(self) -> int:
        return len(self.canonical().indices)


@dataclass(frozen=True)
class SparseSignal2D:
    N_x: int
    N_y: int
    coords: np.ndarray  # (nnz, 2) int
    values: np.ndarray

    @classmethod
    def from_pairs(cls, N_x: int, N_y: int, pairs) -> "SparseSignal2D":
        pairs = list(pairs)
        coords = np.array([c for c, _ in pairs], dtype=np.int64).reshape(-1, 2)
        return cls(N_x, N_y, coords, np.array([v for _, v in pairs], dtype=np.float64))

    def canonical(self) -> "SparseSignal2D":
        c = np.mod(self.coords, (self.N_x, self.N_y)).reshape(-1, 2)
        lin = c[:, 0] * self.N_y + c[:, 1]
        u, inv = np.unique(lin, return_inverse=True)
        v = np.zeros(len(u))
        np.add.at(v, inv, self.values)
        keep = v != 0
        u = u[keep]
        return SparseSignal2D(self.N_x, self.N_y, np.stack([u // self.N_y, u % self.N_y], axis=1), v[keep])

    def to_dict(self) -> dict[tuple[int, int], float]:
        c = self.canonical()
        return {(int(a), int(b)): float(v) for (a, b), v in zip(c.coords, c.values)}

    def dense(self) -> np.ndarray:
        x = np.zeros((self.N_x, self.N_y))
        c = np.mod(self.coords, (self.N_x, self.N_y)).reshape(-1, 2)
        np.add.at(x, (c[:, 0], c[:, 1]), self.values)
        return x

    @property
    def nnz(self) -> int:
        return len(self.canonical().values)


@lru_cache(maxsize=64)
def _roots(N: int) -> np.ndarray:
    r = np.exp(-2j * np.pi * np.arange(N) / N)
    r.flags.writeable = False
    return r


@lru_cache(maxsize=64)
def _arange(N: int) -> np.ndarray:
    r = np.arange(N, dtype=np.int64)
    r.flags.writeable = False
    return r


@lru_cache(maxsize=64)
def _ones(N: int) -> np.ndarray:
    r = np.ones(N)
    r.flags.writeable = False
    return r


@njit(cache=True, nogil=True)
def _td_accumulate_1d(n, v, N, P, Q, r, z):
    for i in range(n.shape[0]):
        a = n[i] % P
        for q in range(Q):
            z[a, q] += v[i] * r[(n[i] * q) % N]


def td_fft_1d(indices: np.ndarray, values: np.ndarray, plan: PrunedPlan1D) -> np.ndarray:
    """Pruned DFT of a sparse signal given as index and value arrays."""
    N, P, Q = plan.N, plan.P, plan.Q
    z = np.zeros((P, Q), dtype=complex)
    if len(values):
        _td_accumulate_1d(np.mod(indices, N), np.asarray(values, dtype=np.float64), N, P, Q, _roots(N), z)
    # Z[p, q] = X[q + Q p]
    return sfft.fft(z, axis=0, overwrite_x=True).reshape(N)


def pruned_dft_1d(s: SparseSignal1D, plan: PrunedPlan1D) -> np.ndarray:
    if plan.N != s.N:
        raise InvalidPlan(f"plan length {plan.N} does not match signal length {s.N}")
    return td_fft_1d(s.indices, s.values, plan)


@njit(cache=True, nogil=True)
def _td_accumulate(m, n, v, Nx, Ny, Px, Py, Qx, Qyh, rx, ry, bmap, z):
    ty = np.empty(Qyh, dtype=np.complex128)
    for i in range(m.shape[0]):
        a = m[i] % Px
        b = bmap[n[i] % Py]
        j = 0
        for qy in range(Qyh):
            ty[qy] = ry[j]
            j += n[i]
            if j >= Ny:
                j -= Ny
        j = 0
        for qx in range(Qx):
            t = v[i] * rx[j]
            j += m[i]
            if j >= Nx:
                j -= Nx
            for qy in range(Qyh):
                z[qx, a, b, qy] += t * ty[qy]


@njit(cache=True, nogil=True)
def _td_scatter(Z, Nx, Ny, Px, Py, Qx, Qy, Qyh, sk, sl, c, out):
    """Write ``out[k, l] = c * sk[k] * sl[l] * X[k, l]`` row by row.

    ``Z[qx, px, py, qy]`` holds ``X[qx + Qx px, qy + Qy py]``. Offsets
    ``qy >= Qyh`` were not computed; they come from ``conj(X[-k, -l])``, which
    sits at ``(Py - 1 - py, Qy - qy)`` in the mirrored row.
    """
    for k in range(Nx):
        qx = k % Qx
        px = k // Qx
        nk = (Nx - k) % Nx
        qxn = nk % Qx
        pxn = nk // Qx
        ck = c * sk[k]
        for py in range(Py):
            b = py * Qy
            for qy in range(Qyh):
                out[k, b + qy] = (ck * sl[b + qy]) * Z[qx, px, py, qy]
            pyn = Py - 1 - py
            for qy in range(Qyh, Qy):
                out[k, b + qy] = (ck * sl[b + qy]) * np.conj(Z[qxn, pxn, pyn, Qy - qy])


@njit(cache=True, nogil=True)
def _rows_accumulate(m, v, row, yr, Nx, Nh, Ny, Py, Qy, rx, ry, z):
    """``z[k, q, b] = sum over rows y = b mod Py of G[row, k] exp(-2i pi y q / Ny)``."""
    R = yr.shape[0]
    G = np.zeros((R, Nh), dtype=np.complex128)
    for i in range(m.shape[0]):
        g = G[row[i]]
        j = 0
        for k in range(Nh):
            g[k] += v[i] * rx[j]
            j += m[i]
            if j >= Nx:
                j -= Nx
    T = np.empty((R, Qy), dtype=np.complex128)
    b = np.empty(R, dtype=np.int64)
    for r in range(R):
        j = 0
        for q in range(Qy):
            T[r, q] = ry[j]
            j += yr[r]
            if j >= Ny:
                j -= Ny
        b[r] = yr[r] % Py
    for k in range(Nh):
        zk = z[k]
        for r in range(R):
            g = G[r, k]
            for q in range(Qy):
                zk[q, b[r]] += g * T[r, q]


@njit(cache=True, nogil=True)
def _rows_scatter(Z, Nx, Nh, Py, Qy, sk, sl, c, out):
    """``Z[k, q, p]`` holds ``X[k, q + Qy p]`` for ``k < Nh``; other rows mirror ``conj(X[-k, -l])``."""
    for k in range(Nh):
        ck = c * sk[k]
        zk = Z[k]
        ok = out[k]
        for q in range(Qy):
            l = q
            for p in range(Py):
                ok[l] = (ck * sl[l]) * zk[q, p]
                l += Qy
    for k in range(Nh, Nx):
        ck = c * sk[k]
        zk = Z[Nx - k]
        ok = out[k]
        for q in range(Qy):
            qn = Qy - q if q else 0
            l = q
            for p in range(Py):
                pn = Py - 1 - p if q else (Py - p if p else 0)
                ok[l] = (ck * sl[l]) * np.conj(zk[qn, pn])
                l += Qy


def _td_rows(m, n, v, plan: PrunedPlan2D, sk, sl, c) -> np.ndarray:
    Nx, Ny, Py, Qy = plan.N_x, plan.N_y, plan.P_y, plan.Q_y
    Nh = Nx // 2 + 1
    yr, row = np.unique(n, return_inverse=True)
    z = np.zeros((Nh, Qy, Py), dtype=complex)
    _rows_accumulate(m, v, row.astype(np.int64).reshape(-1), yr.astype(np.int64), Nx, Nh, Ny, Py, Qy,
                     _roots(Nx), _roots(Ny), z)
    Z = sfft.fft(z, axis=2, overwrite_x=True)
    out = np.empty((Nx, Ny), dtype=complex)
    _rows_scatter(Z, Nx, Nh, Py, Qy, sk, sl, c, out)
    return out


def td_fft_2d(coords: np.ndarray, values: np.ndarray, plan: PrunedPlan2D,
              scale: tuple[float, np.ndarray, np.ndarray] | None = None) -> np.ndarray:
    """Pruned 2D DFT of real sparse input, optionally scaled by real ``c * sk[k] * sl[l]``."""
    Nx, Ny = plan.N_x, plan.N_y
    Px, Py, Qx, Qy = plan.P_x, plan.P_y, plan.Q_x, plan.Q_y
    if scale is None:
        scale = (1.0, _ones(Nx), _ones(Ny))
    c = np.mod(coords, (Nx, Ny)).reshape(-1, 2)
    m, n = np.ascontiguousarray(c[:, 0]), np.ascontiguousarray(c[:, 1])
    v = np.asarray(values, dtype=np.float64)
    if Px == 1:
        return _td_rows(m, n, v, plan, scale[1], scale[2], float(scale[0]))
    Qyh = Qy // 2 + 1 if Qy > 1 else 1
    cols = np.unique(n % Py)
    if 2 * len(cols) <= Py:
        # few occupied columns: run the first sub-FFT pass on those only
        bmap = np.zeros(Py, dtype=np.int64)
        bmap[cols] = np.arange(len(cols))
        zc = np.zeros((Qx, Px, len(cols), Qyh), dtype=complex)
        _td_accumulate(m, n, v, Nx, Ny, Px, Py, Qx, Qyh, _roots(Nx), _roots(Ny), bmap, zc)
        z = np.zeros((Qx, Px, Py, Qyh), dtype=complex)
        z[:, :, cols, :] = sfft.fft(zc, axis=1, overwrite_x=True)
        Z = sfft.fft(z, axis=2, overwrite_x=True)
    else:
        z = np.zeros((Qx, Px, Py, Qyh), dtype=complex)
        _td_accumulate(m, n, v, Nx, Ny, Px, Py, Qx, Qyh, _roots(Nx), _roots(Ny), _arange(Py), z)
        Z = sfft.fft2(z, axes=(1, 2), overwrite_x=True)
    out = np.empty((Nx, Ny), dtype=complex)
    _td_scatter(Z, Nx, Ny, Px, Py, Qx, Qy, Qyh, scale[1], scale[2], float(scale[0]), out)
    return out


def pruned_dft_2d(s: SparseSignal2D, plan: PrunedPlan2D) -> np.ndarray:
    if (plan.N_x, plan.N_y) != (s.N_x, s.N_y):
        raise InvalidPlan("plan shape does not match signal shape")
    return td_fft_2d(s.coords, s.values, plan)


def divisors(N: int) -> list[int]:
    return [d for d in range(1, N + 1) if N % d == 0]


def dense_dft_oracle(x: np.ndarray) -> np.ndarray:
    """Matrix-product DFT, independent of any FFT routine."""
    x = np.asarray(x)
    if x.ndim == 1:
        N = len(x)
        k = np.arange(N)
        return np.exp(-2j * np.pi * np.outer(k, k) / N) @ x
    Nx, Ny = x.shape
    Fx = np.exp(-2j * np.pi * np.outer(np.arange(Nx), np.arange(Nx)) / Nx)
    Fy = np.exp(-2j * np.pi * np.outer(np.arange(Ny), np.arange(Ny)) / Ny)
    return Fx @ x @ Fy.T
