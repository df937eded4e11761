"""``dts`` command line: filter, stereo, superres, defocus, confidence, bench, verify.

Exit codes: 1 usage, 2 I/O, 3 numeric failure. Any long flag can also be set
through an environment variable ``DTS_<FLAG>`` (``--sigma-x`` -> ``DTS_SIGMA_X``);
explicit flags win.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np

from . import formats
from .domain_transform import DtParams, confidence_from_variance, edge_aware_mean, edge_aware_variance
from .image import ImageError, normalize_rgb
from .solver import SolverConfig, StabilityError

log = logging.getLogger("dts")

EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _positive(v):
    x = float(v)
    if not (np.isfinite(x) and x > 0):
        raise argparse.ArgumentTypeError(f"must be positive, got {v}")
    return x


def _nonneg(v):
    x = float(v)
    if not (np.isfinite(x) and x >= 0):
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return x


def _count(v):
    x = int(v)
    if x < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {v}")
    return x


def _add_dt_flags(p, sigma_default=64.0, sigma_note="Middlebury grid-search value"):
    p.add_argument("--sigma-x", type=_positive, default=sigma_default,
                   help=f"horizontal spatial scale in px (default {sigma_default}; {sigma_note})")
    p.add_argument("--sigma-y", type=_positive, default=sigma_default,
                   help=f"vertical spatial scale in px (default {sigma_default}; {sigma_note})")
    p.add_argument("--sigma-r", type=_positive, default=0.25,
                   help="range scale in [0,1] color units (default 0.25; Middlebury grid-search value)")
    p.add_argument("--radius-scale", type=_nonneg, default=float(np.sqrt(3.0)),
                   help="box radius as a multiple of sigma (default sqrt(3); artifact choice, "
                        "matches the variance of a Gaussian of std sigma)")


def _add_solver_flags(p, iterations=3000, iter_note="Middlebury stereo setting"):
    p.add_argument("--lambda", dest="lam", type=_nonneg, default=0.99,
                   help="smoothness weight (default 0.99; Middlebury grid-search value)")
    p.add_argument("--step", type=_positive, default=0.99,
                   help="gradient step multiplier (default 0.99; published solver setting)")
    p.add_argument("--iterations", type=_count, default=iterations,
                   help=f"gradient descent iterations (default {iterations}; {iter_note})")
    p.add_argument("--sigma-c", type=_positive, default=16.0,
                   help="confidence scale for target variance, disparity units (default 16; artifact default)")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dts", description="Edge-aware gradient-descent refinement of depth and disparity maps.")
    p.add_argument("--workers", type=int, default=0,
                   help="worker threads for scanline passes (default 0 = all cores)")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("filter", help="one edge-aware mean pass (zero-confidence solve)")
    f.add_argument("--guide", required=True, help="color guide image (PNG/PPM)")
    f.add_argument("--input", required=True, help="single-channel map (PFM/PGM)")
    f.add_argument("--out", required=True, help="output map (.pfm, .pgm, or .png preview)")
    _add_dt_flags(f)

    s = sub.add_parser("stereo", help="refine a disparity map against a rectified pair")
    s.add_argument("--left", required=True, help="left color image, also the guide")
    s.add_argument("--right", required=True, help="right color image")
    s.add_argument("--target", required=True, help="input disparity (PFM; Inf = unknown)")
    s.add_argument("--out", required=True, help="refined disparity (.pfm, .pgm or .png preview)")
    s.add_argument("--preview", help="optional 8-bit PNG preview path")
    _add_dt_flags(s)
    _add_solver_flags(s)
    s.add_argument("--gamma", type=_nonneg, default=0.001,
                   help="photometric weight (default 0.001; Middlebury grid-search value)")
    s.add_argument("--epsilon", type=_positive, default=0.001,
                   help="Charbonnier constant on the target term (default 0.001; published setting)")
    s.add_argument("--min-disp", type=float, default=0.0, help="lower disparity clamp (default 0)")
    s.add_argument("--max-disp", type=float, default=float("inf"), help="upper disparity clamp (default none)")

    r = sub.add_parser("superres", help="guided depth upsampling")
    r.add_argument("--low-depth", required=True, help="low-resolution depth (PGM16 or PFM)")
    r.add_argument("--guide", required=True, help="high-resolution color guide")
    r.add_argument("--factor", type=int, required=True, help="integer upsampling factor")
    r.add_argument("--out", required=True, help="output depth (.pfm, .pgm or .png preview)")
    r.add_argument("--preview", help="optional 8-bit PNG preview path")
    _add_dt_flags(r, sigma_default=None, sigma_note="None = 20 px x factor, published super-resolution setting")
    _add_solver_flags(r, iterations=10, iter_note="published super-resolution setting")

    d = sub.add_parser("defocus", help="render shallow depth of field")
    d.add_argument("--color", required=True)
    d.add_argument("--disparity", required=True)
    d.add_argument("--focal", type=float, required=True, help="in-focus disparity")
    d.add_argument("--aperture", type=_nonneg, default=0.5, help="blur radius per disparity unit (default 0.5)")
    d.add_argument("--layers", type=int, default=32, help="disparity layers (default 32; artifact default)")
    d.add_argument("--out", required=True, help="output color image")

    c = sub.add_parser("confidence", help="confidence from edge-aware variance")
    c.add_argument("--input", required=True, help="single-channel map (PFM/PGM)")
    c.add_argument("--guide", required=True)
    c.add_argument("--sigma-c", type=_positive, default=16.0,
                   help="confidence scale (default 16; artifact default)")
    c.add_argument("--out", required=True, help="output confidence (.pfm or .png)")
    _add_dt_flags(c)

    b = sub.add_parser("bench", help="timing / convergence sweeps on synthetic scenes")
    b.add_argument("--mode", choices=["pixels", "sigma-x", "sigma-r", "iters"], required=True)
    b.add_argument("--out", required=True, help="CSV output path")
    b.add_argument("--iterations", type=_count, default=20,
                   help="iterations per timed solve, not used by iters mode (default 20)")
    b.add_argument("--repeats", type=int, default=5, help="interleaved timing repeats, best kept (default 5)")

    v = sub.add_parser("verify", help="reproducible oracle/residual report")
    v.add_argument("--seed", type=int, default=0)
    v.add_argument("--out", required=True, help="JSON report path")
    return p


def _apply_env(parser: argparse.ArgumentParser, argv):
    """Use DTS_<FLAG> variables as defaults for the chosen subcommand."""
    sub_action = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for sp in [parser, *sub_action.choices.values()]:
        for action in sp._actions:
            for opt in action.option_strings:
                if not opt.startswith("--"):
                    continue
                env = "DTS_" + opt[2:].upper().replace("-", "_")
                if env in os.environ:
                    raw = os.environ[env]
                    try:
                        val = action.type(raw) if action.type else raw
                    except (argparse.ArgumentTypeError, ValueError) as e:
                        parser.error(f"{env}: {e}")
                    if action.choices is not None and val not in action.choices:
                        parser.error(f"{env}: invalid choice {val!r}")
                    action.default = val
                    action.required = False


def _dt_params(args, default_sigma=None) -> DtParams:
    sx = args.sigma_x if args.sigma_x is not None else default_sigma
    sy = args.sigma_y if args.sigma_y is not None else default_sigma
    return DtParams(sigma_x=sx, sigma_y=sy, sigma_r=args.sigma_r, radius_scale=args.radius_scale)


def _solver_config(args, dt, **extra) -> SolverConfig:
    try:
        return SolverConfig(lam=args.lam, step=args.step, iterations=args.iterations,
                            sigma_c=args.sigma_c, dt=dt, **extra)
    except StabilityError as e:
        raise UsageError(str(e)) from None


def _read_guide(path):
    g = formats.read_image(path)
    return normalize_rgb(g)


def _write_map(img, path):
    ext = os.path.splitext(path)[1].lower()
    if ext == ".pfm":
        formats.write_pfm(img, path)
    elif ext == ".pgm":
        formats.write_pgm16(img, path)
    elif ext in (".png", ".ppm"):
        formats.write_preview(img, path)
    else:
        raise UsageError(f"unsupported output extension {ext!r}")


def cmd_filter(args):
    guide = _read_guide(args.guide)
    values = formats.read_depth(args.input)
    mean, _ = edge_aware_mean(values, guide, _dt_params(args))
    _write_map(mean, args.out)


def cmd_stereo(args):
    from .stereo import StereoInputs, refine_disparity

    left = _read_guide(args.left)
    right = _read_guide(args.right)
    if os.path.splitext(args.target)[1].lower() == ".pfm":
        target, valid = formats.read_pfm(args.target, return_mask=True)
        if target.ndim == 3:
            target, valid = target[:, :, 0], valid
    else:
        target, valid = formats.read_depth(args.target), None
    cfg = _solver_config(args, _dt_params(args), epsilon=args.epsilon, use_charbonnier=True)
    inputs = StereoInputs(left, right, target, gamma=args.gamma,
                          disparity_range=(args.min_disp, args.max_disp), valid=valid)
    out = refine_disparity(inputs, cfg)
    _write_map(out, args.out)
    if args.preview:
        formats.write_preview(out, args.preview)


def cmd_superres(args):
    from .superres import SuperresInputs, superresolve

    if args.factor < 1:
        raise UsageError("--factor must be >= 1")
    low = formats.read_depth(args.low_depth)
    guide = _read_guide(args.guide)
    dt = _dt_params(args, default_sigma=20.0 * args.factor)
    cfg = _solver_config(args, dt, use_charbonnier=False)
    out = superresolve(SuperresInputs(low, guide, args.factor), cfg)
    _write_map(out, args.out)
    if args.preview:
        formats.write_preview(out, args.preview)


def cmd_defocus(args):
    from .defocus import DefocusParams, render_defocus

    color = _read_guide(args.color)
    disp = formats.read_depth(args.disparity)
    try:
        params = DefocusParams(focal_disparity=args.focal, aperture=args.aperture, layers=args.layers)
    except ValueError as e:
        raise UsageError(str(e)) from None
    formats.write_image(render_defocus(color, disp, params), args.out)


def cmd_confidence(args):
    guide = _read_guide(args.guide)
    values = formats.read_depth(args.input)
    var = edge_aware_variance(values, guide, _dt_params(args))
    conf = confidence_from_variance(var, args.sigma_c)
    if os.path.splitext(args.out)[1].lower() in (".png", ".ppm"):
        formats.write_image(conf, args.out)
    else:
        _write_map(conf, args.out)


def cmd_bench(args):
    from . import bench

    if args.mode == "iters":
        rows = bench.sweep_iterations()
    else:
        rows = bench.MODES[args.mode](iterations=args.iterations, repeats=args.repeats)
    formats.write_csv(rows, args.out)
    for row in rows:
        log.info("%s", row)


def cmd_verify(args):
    from .verify import build_report

    report = build_report(args.seed)
    with open(args.out, "w") as f:
        json.dump(report, f, indent=2, sort_keys=True)
        f.write("\n")


COMMANDS = {
    "filter": cmd_filter,
    "stereo": cmd_stereo,
    "superres": cmd_superres,
    "defocus": cmd_defocus,
    "confidence": cmd_confidence,
    "bench": cmd_bench,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    _apply_env(parser, argv)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.workers > 0:
        import numba

        numba.set_num_threads(min(args.workers, numba.config.NUMBA_NUM_THREADS))
    try:
        COMMANDS[args.command](args)
    except UsageError as e:
        print(f"dts: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, formats.FormatError) as e:
        print(f"dts: I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    except (ImageError, ValueError, FloatingPointError) as e:
        print(f"dts: numeric error: {e}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
