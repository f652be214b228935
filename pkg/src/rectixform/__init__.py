"""Continuous Haar and Fourier transforms of rectilinear polygons in tiles."""
from .estimators import DHTTransformer, FCFSTransformer, FFTTransformer, PCHTTransformer
from .fourier import (
    BackendUnavailable,
    FcfsPlan,
    FourierSpectrum,
    alpha,
    build_sparse_signals,
    cfs_by_rectangles,
    cfs_direct,
    cfs_query,
    choose_plan,
    fcfs_complexity,
    fcfs_transform,
    fft_discrete,
    tune_plan,
)
from .geometry import (
    GeometryError,
    Point,
    Polygon,
    Rect,
    Region,
    Tile,
    area,
    clip_to_window,
    disjoint_decomposition,
    intersection_area,
    perimeter,
    rasterize,
    signed_rect_decomposition,
    validate_polygon,
)
from .haar import (
    HaarOpCount,
    HaarSpectrum,
    dht_complexity,
    dht_transform,
    lambda_ia,
    pcht_complexity_estimate,
    pcht_transform,
)
from .layout_io import Layout, TilingSpec, generate_layout, read_layout, tile_layout, write_layout
from .pruned_dft import PrunedPlan1D, PrunedPlan2D, SparseSignal1D, SparseSignal2D, pruned_dft_1d, pruned_dft_2d

__version__ = "0.1.0"
