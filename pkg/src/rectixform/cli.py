"""Command-line harness: ``gen``, ``transform``, ``verify``, ``bench``, ``complexity``.

Exit codes: 0 success, 1 a check failed, 2 usage or input error.
"""
from __future__ import annotations

import argparse
import csv
import statistics
import sys
import time
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .checks import check_tiling, run_suite
from .fourier import c_fft2d, choose_plan, fcfs_complexity, fcfs_transform, fft_complexity, fft_discrete, resolve_plan
from .geometry import rasterize
from .haar import dht_complexity, dht_transform, lambda_ia, pcht_complexity_estimate, pcht_transform, tile_complexity_stats
from .layout_io import LayoutError, TilingSpec, generate_layout, read_layout, tile_layout, write_layout

BENCH_HEADER = ["tile_id", "K", "M", "t_pcht_ns", "t_dht_ns", "t_fcfs_ns", "t_fft_ns",
                "c_pcht", "c_dht", "c_fcfs", "c_fft"]
SUMMARY_HEADER = ["layout", "N", "tiles",
                  "median_t_pcht_ns", "median_t_dht_ns", "median_t_fcfs_ns", "median_t_fft_ns",
                  "mean_t_pcht_ns", "mean_t_dht_ns", "mean_t_fcfs_ns", "mean_t_fft_ns",
                  "speedup_haar", "speedup_fourier", "median_speedup_haar", "median_speedup_fourier"]


class TileError(ValueError):
    pass


class UsageError(Exception):
    pass


def _size(s: str) -> tuple[int, int]:
    parts = s.lower().split("x")
    try:
        v = tuple(int(p) for p in parts)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N or NxM, got {s!r}") from None
    if len(v) == 1:
        v = v * 2
    if len(v) != 2 or min(v) < 1:
        raise argparse.ArgumentTypeError(f"expected N or NxM, got {s!r}")
    return v


def _ints(s: str) -> list[int]:
    try:
        return [int(a) for a in s.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {s!r}") from None


# ---------------------------------------------------------------- gen


def cmd_gen(a) -> int:
    kind = a.kind.replace("-", "_")
    if kind == "contact_array":
        params = {"grid": a.grid, "pitch": a.pitch, "size": a.size, "dropout": a.dropout}
    elif kind == "random_rects":
        params = {"extent": a.extent, "count": a.count, "min_size": a.min_size, "max_size": a.max_size}
    else:
        params = {"extent": a.extent, "count": a.count, "k": a.k, "rect_fraction": a.rect_fraction,
                  "max_step": a.max_step, "mirror": not a.no_mirror}
    layout = generate_layout(kind, params, a.seed, unit=a.unit)
    write_layout(layout, a.output)
    st = layout.stats
    print(f"{a.output}: {st['polygons']} polygons, {st['rectangles']} rectangles, "
          f"{st['vertices']} vertices, area {st['area']}")
    print("vertex histogram: " + " ".join(f"{k}:{c}" for k, c in st["vertex_histogram"].items()))
    return 0


# ---------------------------------------------------------------- transform


def _run_one(t, a):
    if a.xform == "pcht":
        return pcht_transform(t, a.levels).to_vector()
    if a.xform == "dht":
        return dht_transform(rasterize(t), a.levels).to_vector()
    if a.xform == "fcfs":
        return fcfs_transform(t, a.backend, a.plan).to_vector()
    return fft_discrete(rasterize(t)).reshape(-1)


def _map(fn, items, jobs):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(jobs) as ex:
        return list(ex.map(fn, items))


def cmd_transform(a) -> int:
    layout = read_layout(a.layout)
    tiles = list(tile_layout(layout, TilingSpec(*a.tile, stride=a.stride)))

    def work(t):
        try:
            return _run_one(t, a)
        except Exception as e:
            raise TileError(f"tile {t.tile_id}: {e}") from e

    coeffs = _map(work, tiles, a.jobs)
    ids = np.array([t.tile_id for t in tiles], dtype=np.int64)
    out = Path(a.out)
    if out.suffix == ".npz":
        n = coeffs[0].size if coeffs else 0
        arr = np.stack(coeffs) if coeffs else np.zeros((0, n))
        np.savez(out, tile_id=ids, coefficients=arr, origin=np.array([t.origin for t in tiles]).reshape(-1, 2))
        return 0
    fourier = a.xform in ("fcfs", "fft")
    with open(out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["tile_id", "k", "l", "real", "imag"] if fourier else ["tile_id", "index", "value"])
        for t, c in zip(tiles, coeffs):
            if fourier:
                for i, v in enumerate(c):
                    k, l = divmod(i, t.n_y)
                    w.writerow([t.tile_id, k, l, repr(float(v.real)), repr(float(v.imag))])
            else:
                for i, v in enumerate(c):
                    w.writerow([t.tile_id, i, repr(float(v))])
    print(f"{out}: {len(tiles)} tiles, {a.xform}")
    return 0


# ---------------------------------------------------------------- verify


def cmd_verify(a) -> int:
    layouts = [(p, read_layout(p)) for p in a.layout]
    for seed in range(a.seeds):
        n = a.tile[0]
        layouts += [
            (f"contact_array#{seed}", generate_layout(
                "contact_array", {"grid": (6, 6), "pitch": max(2, n // 3), "size": max(1, n // 5), "dropout": 0.3}, seed)),
            (f"random_rects#{seed}", generate_layout(
                "random_rects", {"extent": 2 * n, "count": 40, "max_size": max(1, n // 4)}, seed)),
            (f"staircase_mix#{seed}", generate_layout(
                "staircase_mix", {"extent": 2 * n, "count": 30, "k": [6, 8, 12],
                                  "max_step": max(1, n // 16)}, seed)),
        ]
    spec = TilingSpec(*a.tile)
    failures, n_tiles = [], 0
    for name, layout in layouts:
        failures += check_tiling(layout, spec)
        tiles = list(tile_layout(layout, spec))
        n_tiles += len(tiles)
        chunks = _map(lambda t: run_suite([t], a.rtol, a.atol, a.cases, a.inject_fault), tiles, a.jobs)
        for f in (f for c in chunks for f in c):
            print(f"{name}: {f}")
            failures.append(f)
    status = "FAIL" if failures else "PASS"
    print(f"{status}: {n_tiles} tiles from {len(layouts)} layouts, {len(failures)} failures "
          f"(rtol={a.rtol:g}, atol={a.atol:g})")
    return 1 if failures else 0


# ---------------------------------------------------------------- bench


@dataclass
class BenchRecord:
    tile_id: int
    K: int
    M: int
    t_pcht_ns: int
    t_dht_ns: int
    t_fcfs_ns: int
    t_fft_ns: int
    c_pcht: float
    c_dht: float
    c_fcfs: float
    c_fft: float

    @property
    def speedup_haar(self) -> float:
        return self.t_dht_ns / self.t_pcht_ns

    @property
    def speedup_fourier(self) -> float:
        return self.t_fft_ns / self.t_fcfs_ns


def time_call(fn, reps: int = 10, warmups: int = 2) -> tuple[int, list[int]]:
    """Median wall time in ns over ``reps`` runs after ``warmups`` untimed runs."""
    for _ in range(warmups):
        fn()
    runs = []
    for _ in range(reps):
        t0 = time.perf_counter_ns()
        fn()
        runs.append(time.perf_counter_ns() - t0)
    return max(1, int(statistics.median(runs))), runs


def bench_tiles(tiles, reps=10, warmups=2, plan="tuned", raw=None) -> list[BenchRecord]:
    """Time the four transforms on each tile; discrete paths include rasterization."""
    recs = []
    for t in tiles:
        N = t.n_x
        fplan = resolve_plan(plan, t.K, t.n_x, t.n_y)
        fns = {
            "pcht": lambda: pcht_transform(t),
            "dht": lambda: dht_transform(rasterize(t)),
            "fcfs": lambda: fcfs_transform(t, "pruned", fplan),
            "fft": lambda: fft_discrete(rasterize(t)),
        }
        med = {}
        for name, fn in fns.items():
            med[name], runs = time_call(fn, reps, warmups)
            if raw is not None:
                raw.extend((t.tile_id, name, i, r) for i, r in enumerate(runs))
        recs.append(BenchRecord(
            t.tile_id, t.K, t.M, med["pcht"], med["dht"], med["fcfs"], med["fft"],
            pcht_complexity_estimate(tile_complexity_stats(t), N),
            dht_complexity(N),
            fcfs_complexity(t.K, t.M, t.n_x, t.n_y, choose_plan(t.K, t.n_x, t.n_y)).total,
            fft_complexity(t.n_x, t.n_y),
        ))
    return recs


def summarize(label: str, N: int, recs: list[BenchRecord]) -> dict:
    col = {k: np.array([getattr(r, k) for r in recs], dtype=float) for k in BENCH_HEADER}
    med = {k: float(np.median(col[k])) for k in ("t_pcht_ns", "t_dht_ns", "t_fcfs_ns", "t_fft_ns")}
    mean = {k: float(np.mean(col[k])) for k in med}
    return {
        "layout": label, "N": N, "tiles": len(recs),
        **{f"median_{k}": round(v, 1) for k, v in med.items()},
        **{f"mean_{k}": round(v, 1) for k, v in mean.items()},
        "speedup_haar": round(mean["t_dht_ns"] / mean["t_pcht_ns"], 6),
        "speedup_fourier": round(mean["t_fft_ns"] / mean["t_fcfs_ns"], 6),
        "median_speedup_haar": round(med["t_dht_ns"] / med["t_pcht_ns"], 6),
        "median_speedup_fourier": round(med["t_fft_ns"] / med["t_fcfs_ns"], 6),
    }


def by_k_table(recs: list[BenchRecord]) -> list[dict]:
    groups = defaultdict(list)
    for r in recs:
        groups[r.K].append(r)
    rows = []
    for K in sorted(groups):
        g = groups[K]
        row = {"K": K, "tiles": len(g)}
        for k in BENCH_HEADER[3:]:
            row[f"median_{k}"] = float(np.median([getattr(r, k) for r in g]))
        rows.append(row)
    return rows


def _write_rows(path, header, rows, append=False):
    path = Path(path)
    exists = append and path.exists() and path.stat().st_size > 0
    with open(path, "a" if append else "w", newline="") as fh:
        w = csv.DictWriter(fh, header, lineterminator="\n")
        if not exists:
            w.writeheader()
        w.writerows(rows)


GNUPLOT = """set datafile separator ','
set key autotitle columnhead
set logscale y
set xlabel 'K'
set ylabel 'median runtime [ns]'
plot '{f}' using 1:3 with linespoints title 'PCHT', \\
     '' using 1:4 with linespoints title 'DHT', \\
     '' using 1:5 with linespoints title 'FCFS', \\
     '' using 1:6 with linespoints title 'FFT'
"""


def cmd_bench(a) -> int:
    out = Path(a.out)
    combos = [(p, n) for p in a.layout for n in a.tile]
    summaries = []
    for path, n in combos:
        if n & (n - 1):
            raise UsageError(f"bench needs power-of-two tiles, got {n}")
        layout = read_layout(path)
        tiles = list(tile_layout(layout, TilingSpec(n)))
        if a.max_tiles:
            tiles = tiles[: a.max_tiles]
        raw = [] if a.raw else None
        recs = bench_tiles(tiles, a.reps, a.warmups, a.plan, raw)
        stem = out if len(combos) == 1 else out.with_name(f"{out.stem}_{Path(path).stem}_{n}{out.suffix}")
        _write_rows(stem, BENCH_HEADER, [asdict(r) for r in recs])
        by_k = by_k_table(recs)
        kfile = stem.with_name(stem.stem + "_by_k.csv")
        if by_k:
            _write_rows(kfile, list(by_k[0]), by_k)
        hist = Counter(r.K for r in recs)
        _write_rows(stem.with_name(stem.stem + "_k_hist.csv"), ["K", "tiles"],
                    [{"K": k, "tiles": c} for k, c in sorted(hist.items())])
        if raw is not None:
            with open(stem.with_name(stem.stem + "_raw.csv"), "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(["tile_id", "transform", "rep", "t_ns"])
                w.writerows(raw)
        if a.gnuplot:
            stem.with_name(stem.stem + ".gp").write_text(GNUPLOT.format(f=kfile.name))
        if recs:
            s = summarize(Path(path).stem, n, recs)
            summaries.append(s)
            print(f"{s['layout']} N={n}: {s['tiles']} tiles, haar speed-up {s['speedup_haar']:.3f}, "
                  f"fourier speed-up {s['speedup_fourier']:.3f}")
        else:
            print(f"{Path(path).stem} N={n}: no tiles")
    if a.summary and summaries:
        _write_rows(a.summary, SUMMARY_HEADER, summaries, append=a.append)
    return 0


# ---------------------------------------------------------------- complexity


def cmd_complexity(a) -> int:
    nx, ny = a.n
    if a.layout:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["tile_id", "K", "M", "c_pcht", "c_dht", "c_fcfs", "c_fft"])
        for t in tile_layout(read_layout(a.layout), TilingSpec(nx, ny)):
            cp = pcht_complexity_estimate(tile_complexity_stats(t), nx) if nx == ny and not nx & (nx - 1) else ""
            w.writerow([t.tile_id, t.K, t.M, cp, dht_complexity(nx) if cp != "" else "",
                        fcfs_complexity(t.K, t.M, nx, ny).total, fft_complexity(nx, ny)])
        return 0
    K, M = a.k, a.m
    plan = None
    if a.plan:
        from .fourier import FcfsPlan
        plan = FcfsPlan(nx, ny, *a.plan)
    r = fcfs_complexity(K, M, nx, ny, plan)
    p = r.plan
    print(f"K={K} M={M} tile={nx}x{ny}")
    print(f"lambda_ia(K)           {lambda_ia(K)}")
    if nx == ny and not nx & (nx - 1):
        print(f"dht                    {dht_complexity(nx):.0f}")
    print(f"plan                   P1=({p.P_x1},{p.P_y1}) P2=({p.P_x2},{p.P_y2}) "
          f"Q1=({r.Q_x1},{r.Q_y1}) Q2=({r.Q_x2},{r.Q_y2})")
    print(f"step 1 (areas)         {r.step1:g}")
    print(f"step 2 (1D along x)    {r.step2:g}")
    print(f"step 3 (1D along y)    {r.step3:g}")
    print(f"step 4 (2D)            {r.step4:g}")
    print(f"fcfs total             {r.total:g}")
    print(f"goertzel total         {r.goertzel_total:g}")
    print(f"fft baseline           {r.fft_baseline:g}  (complex 2D: {c_fft2d(nx, ny):g})")
    return 0


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rectixform", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a synthetic layout")
    g.add_argument("kind", choices=["contact-array", "random-rects", "staircase-mix"])
    g.add_argument("--grid", type=_size, default=(16, 16))
    g.add_argument("--pitch", type=_size, default=(8, 8))
    g.add_argument("--size", type=_size, default=(2, 2))
    g.add_argument("--dropout", type=float, default=0.0)
    g.add_argument("--extent", type=_size, default=(1024, 1024))
    g.add_argument("--count", type=int, default=200)
    g.add_argument("--min-size", type=int, default=1)
    g.add_argument("--max-size", type=int, default=32)
    g.add_argument("--k", type=_ints, default=[8], help="staircase vertex counts, e.g. 6,8,12")
    g.add_argument("--rect-fraction", type=float, default=0.5)
    g.add_argument("--max-step", type=int, default=8)
    g.add_argument("--no-mirror", action="store_true")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--unit", default="nm")
    g.add_argument("-o", "--output", required=True)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("transform", help="transform every tile of a layout")
    t.add_argument("layout")
    t.add_argument("--tile", type=_size, required=True)
    t.add_argument("--stride", type=_size, default=None)
    t.add_argument("--xform", choices=["pcht", "dht", "fcfs", "fft"], required=True)
    t.add_argument("--backend", choices=["pruned", "dense", "goertzel"], default="pruned")
    t.add_argument("--plan", choices=["tuned", "model"], default="tuned")
    t.add_argument("--levels", type=int, default=None)
    t.add_argument("--out", required=True, help=".csv (long format) or .npz")
    t.add_argument("--jobs", type=int, default=1)
    t.set_defaults(func=cmd_transform)

    v = sub.add_parser("verify", help="run the invariant suite")
    v.add_argument("layout", nargs="*")
    v.add_argument("--tile", type=_size, default=(32, 32))
    v.add_argument("--seeds", type=int, default=2)
    v.add_argument("--cases", type=int, default=50)
    v.add_argument("--rtol", type=float, default=1e-9)
    v.add_argument("--atol", type=float, default=1e-12)
    v.add_argument("--jobs", type=int, default=1)
    v.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_verify)

    b = sub.add_parser("bench", help="time transforms per tile")
    b.add_argument("layout", nargs="+")
    b.add_argument("--tile", type=int, action="append", required=True)
    b.add_argument("--reps", type=int, default=10)
    b.add_argument("--warmups", type=int, default=2)
    b.add_argument("--plan", choices=["tuned", "model"], default="tuned")
    b.add_argument("--max-tiles", type=int, default=0)
    b.add_argument("--out", required=True, help="per-tile CSV")
    b.add_argument("--summary", help="aggregate CSV with speed-ups")
    b.add_argument("--append", action="store_true", help="append to an existing summary")
    b.add_argument("--raw", action="store_true", help="also write every repetition")
    b.add_argument("--gnuplot", action="store_true", help="write a gnuplot script for the by-K table")
    b.set_defaults(func=cmd_bench)

    c = sub.add_parser("complexity", help="print modeled operation counts")
    c.add_argument("--k", type=int, default=4)
    c.add_argument("--m", type=int, default=1)
    c.add_argument("--n", type=_size, default=(256, 256))
    c.add_argument("--plan", type=_ints, default=None, help="P_x1,P_y1,P_x2,P_y2")
    c.add_argument("--layout", default=None, help="emit per-tile modeled counts as CSV")
    c.set_defaults(func=cmd_complexity)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    a = ap.parse_args(argv)
    if getattr(a, "jobs", 1) < 1 or getattr(a, "reps", 1) < 1 or getattr(a, "warmups", 0) < 0:
        ap.error("--jobs and --reps must be >= 1, --warmups >= 0")
    try:
        return a.func(a)
    except (UsageError, LayoutError, OSError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
