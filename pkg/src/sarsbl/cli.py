"""Command-line interface: ``simulate``, ``form``, ``composite`` and ``stats``."""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import io
from .baseline import AdmmConfig, nufft_baseline, nufft_l1
from .composite import composite_alpha, composite_max, composite_mean, composite_std
from .config import ConfigError, RunConfig
from .core import ComplexImage, SceneGrid, plan_subapertures
from .metrics import RegionSpec, TimedRun, log_histogram, region_variance, timing_report
from .regularizers import make_operator
from .simulator import (AcquisitionSpec, Scatterer, SceneSpec, cartesian_acquisition,
                        make_scene, polar_acquisition, synthesize)
from .solver import SolverConfig, WindowError, map_windows, run_window, window_operator

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_MALFORMED = 3
EXIT_VERSION = 4
EXIT_DIMENSION = 5

_REG_KIND = {"identity": "identity", "tv": "tv2d-anisotropic"}


def _grid(cfg: RunConfig) -> SceneGrid:
    return SceneGrid(cfg.nx, cfg.ny, cfg.extent)


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _save_config(cfg: RunConfig, out: Path) -> None:
    (out / "run_config.json").write_text(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))


# -- simulate ----------------------------------------------------------------

def _scene_from(cfg: RunConfig, grid: SceneGrid) -> tuple[SceneSpec, AcquisitionSpec]:
    sim = cfg.simulation
    try:
        scatterers = []
        for s in sim.get("scatterers", []):
            vis = s.get("visible_deg")
            amp = s.get("amplitude", 1.0)
            amp = complex(amp[0], amp[1]) if isinstance(amp, (list, tuple)) else complex(amp)
            scatterers.append(Scatterer(int(s["ix"]), int(s["iy"]), amp,
                                        None if vis is None else tuple(np.deg2rad(vis))))
        beta_true = float(sim.get("beta_true", np.inf))
        scene = SceneSpec(grid, scatterers, float(sim.get("alpha_bg", 0.0)), cfg.seed)
        acq = dict(sim.get("acquisition", {}))
        kind = acq.pop("kind", "polar")
        if kind == "polar":
            acq_spec = polar_acquisition(
                grid, int(acq.pop("n_pulses", 360)), int(acq.pop("n_samples", grid.nx)),
                tuple(acq.pop("k_band", (0.5, 0.95))), float(acq.pop("start_deg", 0.0)),
                float(acq.pop("coverage_deg", 360.0)), beta_true)
        elif kind == "cartesian":
            acq_spec = cartesian_acquisition(grid, int(acq.pop("oversample", 2)), beta_true)
        else:
            raise ConfigError(f"unknown acquisition kind {kind!r}")
        if acq:
            raise ConfigError(f"unknown acquisition keys: {', '.join(sorted(acq))}")
    except ConfigError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid simulation block: {exc}") from None
    return scene, acq_spec


def cmd_simulate(cfg: RunConfig) -> int:
    grid = _grid(cfg)
    scene, acq = _scene_from(cfg, grid)
    ph = synthesize(scene, acq)
    out = _out_dir(cfg)
    io.write_phase_history(out / "phase_history.sph", ph)
    truth = make_scene(scene)
    io.write_image(out / "truth.img", grid, truth.as_array(), {"kind": "truth"})
    io.write_db_image(out / "truth_db.pgm", truth)
    _save_config(cfg, out)
    print(f"wrote {ph.n_pulses} pulses x {ph.n_samples} samples to {out}")
    return EXIT_OK


# -- form ----------------------------------------------------------------------

def cmd_form(cfg: RunConfig, ph_path: str) -> int:
    import time

    ph = io.read_phase_history(ph_path)
    grid = _grid(cfg)
    plan = plan_subapertures(ph.azimuths, cfg.span, cfg.overlap)
    T = make_operator(_REG_KIND[cfg.regularizer], grid)
    scfg = SolverConfig(eps=cfg.eps, max_iters=cfg.max_iters, seed=cfg.seed)
    acfg = AdmmConfig(lam=cfg.lam, beta=cfg.admm_beta, rho=cfg.admm_rho, iters=cfg.admm_iters)

    def solve(w):
        op = window_operator(ph, w, grid)
        data = ph.window_data(w)
        if cfg.method == "nufft":
            return nufft_baseline(data, op)
        if cfg.method == "l1":
            return nufft_l1(data, op, T, acfg)
        post = run_window(data, op, T, scfg, window=w.index)
        if cfg.covariance == "always" or (cfg.covariance == "auto" and post.path == "diagonal"):
            post.covariance_diagonal()
        return post

    t0 = time.perf_counter()
    results = map_windows(solve, plan, cfg.workers)
    seconds = time.perf_counter() - t0

    out = _out_dir(cfg)
    for w, res in zip(plan, results):
        cov = getattr(res, "_cov_diag", None)
        io.write_posterior(out / f"window_{w.index:03d}.post", res, cfg.method, cov)
        io.write_db_image(out / f"window_{w.index:03d}_db.pgm", getattr(res, "mu", res))
    label = cfg.method if cfg.method != "bcd" else f"bcd-eps{cfg.eps:g}"
    (out / "timing.json").write_text(json.dumps(
        {"method": label, "seconds": seconds, "workers": cfg.workers, "windows": plan.L}))
    _save_config(cfg, out)
    if plan.uncovered.size:
        print(f"warning: {plan.uncovered.size} pulses fall outside every window", file=sys.stderr)
    print(f"formed {plan.L} windows with {cfg.method} in {seconds:.3f} s")
    return EXIT_OK


# -- composite ---------------------------------------------------------------

def cmd_composite(cfg: RunConfig, paths: list[str]) -> int:
    if not paths:
        raise ConfigError("composite needs at least one posterior file")
    items = [io.read_posterior(p) for p in paths]
    grids = {getattr(it, "mu", it).grid for it in items}
    if len(grids) != 1:
        raise io.DimensionError("posterior files are on different grids")
    grid = grids.pop()
    out = _out_dir(cfg)

    def save(name, values):
        io.write_image(out / f"{name}.img", grid, values, {"kind": name, "L": len(items)})
        io.write_db_image(out / f"{name}_db.pgm", np.asarray(values).reshape(grid.shape))

    save("max", composite_max(items).as_array())
    bayes = all(not isinstance(it, ComplexImage) for it in items)
    if bayes and all(it._cov_diag is not None for it in items):
        mean, cov = composite_mean(items)
        save("std", composite_std(cov))
    else:
        mean = ComplexImage(grid, np.mean([getattr(it, "mu", it).values for it in items], axis=0))
        print("note: std composite skipped (window covariances not stored)", file=sys.stderr)
    save("mean", mean.as_array())
    if bayes and all(it.regularizer == "identity" for it in items):
        save("alpha", composite_alpha(items))
    print(f"composited {len(items)} windows into {out}")
    return EXIT_OK


# -- stats -------------------------------------------------------------------

def cmd_stats(cfg: RunConfig, paths: list[str], region: str | None, bins: int,
              timings: list[str]) -> int:
    if not paths and not timings:
        raise ConfigError("stats needs image files or timing files")
    try:
        user_region = RegionSpec.parse(region) if region else None
    except ValueError as exc:
        raise ConfigError(f"invalid --region {region!r}: {exc}") from None
    out = _out_dir(cfg)
    with open(out / "stats.csv", "w", newline="") as fh, \
            open(out / "histograms.csv", "w", newline="") as hh:
        sw, hw = csv.writer(fh), csv.writer(hh)
        sw.writerow(["file", "region", "variance", "log10_mode", "underflow"])
        hw.writerow(["file", "bin_lo", "bin_hi", "count"])
        for p in paths:
            grid, values, _ = io.read_image(p)
            reg = user_region or RegionSpec(0, 0, grid.nx, grid.ny)
            try:
                var = region_variance(values, reg)
            except ValueError as exc:
                raise io.DimensionError(f"{p}: {exc}") from None
            hist = log_histogram(values, bins)
            sw.writerow([p, f"{reg.x0},{reg.y0},{reg.w},{reg.h}", repr(var),
                         repr(hist.mode_center()), hist.underflow])
            for lo, hi, c in zip(hist.edges[:-1], hist.edges[1:], hist.counts):
                hw.writerow([p, repr(float(lo)), repr(float(hi)), int(c)])
    if timings:
        runs = []
        for t in timings:
            try:
                d = json.loads(Path(t).read_text())
                runs.append(TimedRun(d["method"], float(d["seconds"]), int(d.get("workers", 1)),
                                     int(d.get("windows", 1))))
            except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise io.FormatError(f"{t}: unreadable timing file ({exc})") from None
        rep = timing_report(runs)
        with open(out / "timings.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["method", "seconds", "workers", "windows"])
            for r in rep["rows"]:
                w.writerow([r["method"], repr(r["seconds"]), r["workers"], r["windows"]])
        print("expected ordering " + " < ".join(rep["expected_order"]) +
              (" holds" if rep["ordering_holds"] else " does NOT hold"))
    print(f"wrote statistics to {out}")
    return EXIT_OK


# -- entry point -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--workers", type=int)

    solve = argparse.ArgumentParser(add_help=False)
    solve.add_argument("--method", choices=("nufft", "l1", "bcd"))
    solve.add_argument("--regularizer", choices=("identity", "tv"))
    solve.add_argument("--span", type=float, help="window span in degrees")
    solve.add_argument("--overlap", type=float, help="window overlap in degrees")
    solve.add_argument("--eps", type=float, help="relative-change stopping tolerance")
    solve.add_argument("--lambda", dest="lam", type=float, help="l1 weight")

    p = argparse.ArgumentParser(prog="sarsbl", description="Sub-aperture SAR image formation")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="synthesize a phase history")
    f = sub.add_parser("form", parents=[common, solve], help="form per-window images")
    f.add_argument("phase_history")
    c = sub.add_parser("composite", parents=[common], help="combine window results")
    c.add_argument("posteriors", nargs="+")
    s = sub.add_parser("stats", parents=[common], help="image statistics as CSV")
    s.add_argument("images", nargs="*")
    s.add_argument("--region", help="x0,y0,w,h in pixels")
    s.add_argument("--bins", type=int, default=100)
    s.add_argument("--timing", action="append", default=[], help="timing.json from form")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    overrides = {k: getattr(args, k, None) for k in
                 ("out", "seed", "workers", "method", "regularizer", "span", "overlap", "eps", "lam")}
    try:
        cfg = RunConfig.load(args.config, overrides)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "form":
            return cmd_form(cfg, args.phase_history)
        if args.command == "composite":
            return cmd_composite(cfg, args.posteriors)
        return cmd_stats(cfg, args.images, args.region, args.bins, args.timing)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except io.VersionError as exc:
        print(f"version error: {exc}", file=sys.stderr)
        return EXIT_VERSION
    except io.FormatError as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except io.DimensionError as exc:
        print(f"dimension conflict: {exc}", file=sys.stderr)
        return EXIT_DIMENSION
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (WindowError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
