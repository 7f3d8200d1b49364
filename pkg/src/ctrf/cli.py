"""Command-line pipeline: synth, simulate, fuse, evaluate, signatures, check.

Exit codes: 0 success, 2 usage error, 3 data/shape error, 4 numerical failure.
``CTRF_OUTPUT_DIR`` sets the default output directory.
"""

import argparse
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import io as tio
from .checks import run_checks
from .degradation import (
    DegradationModel,
    SimulationConfig,
    build_model,
    load_spectral_operator,
    simulate,
)
from .metrics import evaluate
from .numerics import CGBreakdown, CGConfig
from .solver import RANK_PRESETS, FusionProblem, SolverConfig, SolverError, solve
from .synthetic import demo_scene

log = logging.getLogger("ctrf")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
OUTPUT_ENV = "CTRF_OUTPUT_DIR"


class UsageError(Exception):
    pass


def _out_dir(arg):
    return Path(arg or os.environ.get(OUTPUT_ENV) or ".")


def parse_band_groups(text):
    """``"0-22,23-45,46-67,68-89"`` -> list of index lists (0-based, inclusive ranges)."""
    groups = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = (int(v) for v in part.split("-", 1))
            groups.append(list(range(lo, hi + 1)))
        else:
            groups.append([int(part)])
    if not groups:
        raise UsageError("empty --band-groups")
    return groups


def _snr(text):
    if text.lower() in ("inf", "infinity", "none"):
        return math.inf
    return float(text)


# ---------------------------------------------------------------- commands


def cmd_synth(args):
    x = demo_scene(tuple(args.shape), n_materials=args.materials, seed=args.seed)
    tio.write_tensor(args.output, x)
    print(f"wrote {args.output} {x.shape}")


def cmd_simulate(args):
    x = tio.read_tensor(args.hr)
    if x.ndim != 3:
        raise ValueError(f"HR cube must be order 3, got shape {x.shape}")
    kernel = args.kernel if args.kernel is not None else max(8, args.factor)
    p3 = None
    groups = None
    if args.spectral_response:
        p3 = load_spectral_operator(args.spectral_response)
    elif args.band_groups:
        groups = parse_band_groups(args.band_groups)
    model = build_model(x.shape, args.factor, kernel, n_msi_bands=args.msi_bands, band_groups=groups, p3=p3)
    cfg = SimulationConfig(snr_db=args.snr, seed=args.seed, scale_max=args.scale_max)
    xs, y, z = simulate(x, model, cfg)

    out = _out_dir(args.out)
    for name, t in (("x_ref", xs), ("y", y), ("z", z), ("p1", model.p1), ("p2", model.p2), ("p3", model.p3)):
        tio.write_hten(out / f"{name}.hten", t)
    manifest = {
        "hr_input": str(args.hr),
        "hr_shape": list(xs.shape),
        "hsi_shape": list(y.shape),
        "msi_shape": list(z.shape),
        "spatial_factor": args.factor,
        "kernel_size": kernel,
        "band_groups": model.band_groups,
        "spectral_response": str(args.spectral_response) if args.spectral_response else None,
        "snr_db": None if math.isinf(args.snr) else args.snr,
        "seed": args.seed,
        "scale_max": args.scale_max,
        "files": {k: f"{k}.hten" for k in ("x_ref", "y", "z", "p1", "p2", "p3")},
    }
    tio.write_manifest(out / "manifest.json", manifest)
    print(f"HR {xs.shape} -> HSI {y.shape}, MSI {z.shape}; wrote {out}")


def load_model(manifest_path):
    """Rebuild a :class:`DegradationModel` from a simulate manifest."""
    manifest_path = Path(manifest_path)
    man = tio.read_manifest(manifest_path)
    base = manifest_path.parent
    files = man["files"]
    model = DegradationModel(
        tio.read_hten(base / files["p1"]),
        tio.read_hten(base / files["p2"]),
        tio.read_hten(base / files["p3"]),
        man.get("spatial_factor", 1),
        man.get("kernel_size", 1),
        man.get("band_groups"),
    )
    return model, man


def _resolve_ranks(args, man):
    if args.ranks:
        return tuple(args.ranks)
    if args.preset:
        return RANK_PRESETS[args.preset]
    snr = man.get("snr_db") if man else None
    key = f"snr{int(snr)}" if snr is not None and float(snr).is_integer() else None
    if key in RANK_PRESETS:
        return RANK_PRESETS[key]
    raise UsageError("give --ranks or --preset (no preset matches the manifest SNR)")


def cmd_fuse(args):
    model, man = load_model(args.model)
    base = Path(args.model).parent
    y = tio.read_tensor(args.y or base / man["files"]["y"])
    z = tio.read_tensor(args.z or base / man["files"]["z"])
    ranks = _resolve_ranks(args, man)
    problem = FusionProblem(y, z, model, ranks)
    cfg = SolverConfig(
        lam=args.lam,
        rho=args.rho,
        mu0=args.mu0,
        mu_max=args.mu_max,
        outer_iters=args.iters,
        cg=CGConfig(tol=args.cg_tol, max_iter=args.cg_max_iter),
        seed=args.seed,
        mode=args.mode,
        cg_start=args.cg_start,
    )
    reference = tio.read_tensor(args.reference) if args.reference else None
    log.info("fusing %s + %s with ranks %s (%s, %d sweeps)", y.shape, z.shape, ranks, cfg.mode, cfg.outer_iters)
    result = solve(problem, cfg, reference=reference)
    out = _out_dir(args.out)
    tio.write_hten(out / "x_hat.hten", result.x_hat)
    tio.write_trace(out / "trace.csv", result.trace, cfg.mode)
    last = result.trace[-1] if result.trace else {}
    print(f"wrote {out / 'x_hat.hten'} {result.x_hat.shape}; final objective {last.get('objective', float('nan')):.6g}")


def cmd_evaluate(args):
    x_hat = tio.read_tensor(args.x_hat)
    x_ref = tio.read_tensor(args.x_ref)
    report = evaluate(x_hat, x_ref, args.ratio, peak=args.peak)
    print(report.to_text())
    if args.csv:
        tio.append_report_csv(args.csv, report, label=args.label)


def _read_labels(path):
    if Path(path).suffix.lower() in (".hten", ".npy", ".csv"):
        return tio.read_tensor(path).ravel().astype(int)
    return np.array(Path(path).read_text().replace(",", " ").split())


def cmd_signatures(args):
    from .signatures import signature_analysis

    pixels = tio.read_tensor(args.pixels)
    if pixels.ndim != 2:
        raise ValueError(f"pixel file must hold a (pixels x bands) matrix, got {pixels.shape}")
    labels = _read_labels(args.labels)
    report = signature_analysis(
        pixels,
        labels,
        tuple(args.ranks),
        spatial_shape=tuple(args.spatial_shape) if args.spatial_shape else None,
        iters=args.iters,
        restarts=args.restarts,
        seed=args.seed,
    )
    print("class,angles_deg,max_angle_deg")
    for cls in report:
        angles = " ".join(f"{a:.4f}" for a in cls.angles_deg)
        print(f"{cls.label},{angles},{cls.max_angle:.4f}")


def cmd_check(args):
    results = run_checks(corrupt_unfolding=args.corrupt_unfolding)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed")
    return EXIT_NUMERIC if failed else EXIT_OK


# ---------------------------------------------------------------- parser


def build_parser():
    p = argparse.ArgumentParser(prog="ctrf", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="write a synthetic HR cube")
    s.add_argument("output")
    s.add_argument("--shape", type=int, nargs=3, default=[64, 64, 31], metavar=("M", "N", "B"))
    s.add_argument("--materials", type=int, default=5)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("simulate", help="degrade an HR cube into HSI/MSI observations")
    s.add_argument("hr")
    s.add_argument("--out")
    s.add_argument("--factor", type=int, default=4)
    s.add_argument("--kernel", type=int, help="average-kernel size (default max(8, factor))")
    s.add_argument("--msi-bands", type=int, default=4)
    g = s.add_mutually_exclusive_group()
    g.add_argument("--band-groups", help='e.g. "0-22,23-45,46-67,68-89"')
    g.add_argument("--spectral-response", help="text file, b rows of B values")
    s.add_argument("--snr", type=_snr, default=math.inf, help="dB, or inf")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--scale-max", type=float, default=255.0)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("fuse", help="estimate the HR cube with CTRF/NCTRF")
    s.add_argument("--model", required=True, help="manifest.json written by simulate")
    s.add_argument("--y", help="HSI file (default from manifest)")
    s.add_argument("--z", help="MSI file (default from manifest)")
    s.add_argument("--out")
    s.add_argument("--mode", choices=("ctrf", "nctrf"), default="nctrf")
    rg = s.add_mutually_exclusive_group()
    rg.add_argument("--ranks", type=int, nargs=3, metavar=("R1", "R2", "R3"))
    rg.add_argument("--preset", choices=sorted(RANK_PRESETS))
    s.add_argument("--iters", type=int, default=50)
    s.add_argument("--lam", type=float, default=1e-3)
    s.add_argument("--rho", type=float, default=1.5)
    s.add_argument("--mu0", type=float, default=1e-4)
    s.add_argument("--mu-max", type=float, default=1e6)
    s.add_argument("--cg-tol", type=float, default=1e-8)
    s.add_argument("--cg-max-iter", type=int, default=300)
    s.add_argument(
        "--cg-start",
        choices=("warm", "zero"),
        default="warm",
        help="initial CG iterate; 'zero' with a small --cg-max-iter damps noise fitting",
    )
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--reference", help="ground truth; adds an rmse column to trace.csv")
    s.set_defaults(func=cmd_fuse)

    s = sub.add_parser("evaluate", help="PSNR, RMSE, ERGAS, SAM, SSIM")
    s.add_argument("x_hat")
    s.add_argument("x_ref")
    s.add_argument("--ratio", type=float, required=True, help="spatial downsampling factor")
    s.add_argument("--peak", type=float, default=255.0)
    s.add_argument("--csv", help="append a row to this CSV")
    s.add_argument("--label")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("signatures", help="TR vs per-class SVD spectral subspaces")
    s.add_argument("pixels", help="(pixels x bands) tensor file")
    s.add_argument("labels", help="one label per pixel (text or tensor file)")
    s.add_argument("--ranks", type=int, nargs=3, default=[2, 10, 2], metavar=("R1", "R2", "R3"))
    s.add_argument("--spatial-shape", type=int, nargs=2, metavar=("ROWS", "COLS"))
    s.add_argument("--iters", type=int, default=300)
    s.add_argument("--restarts", type=int, default=3)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_signatures)

    s = sub.add_parser("check", help="run the invariant self-test")
    s.add_argument("--corrupt-unfolding", action="store_true", help=argparse.SUPPRESS)
    s.set_defaults(func=cmd_check)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        code = args.func(args)
    except UsageError as exc:
        parser.error(str(exc))  # exits with 2
    except (SolverError, CGBreakdown, FloatingPointError) as exc:
        print(f"ctrf: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError, OSError) as exc:
        print(f"ctrf: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK if code is None else code


if __name__ == "__main__":
    sys.exit(main())
