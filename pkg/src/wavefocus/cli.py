"""Command line front end.

Subcommands mirror the pipeline stages: ``design`` runs the synthesis leg,
``verify`` forward-solves a stored bundle, ``sweep-t`` scans clip bounds,
``analyze`` expands sampled sphere data, ``plot`` re-renders a figure.
Every package failure type carries its own exit code so batch drivers can
tell a configuration typo from a solver stall without parsing stderr.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

from .config import DesignConfig, load_config, parse_number
from .errors import WaveFocusError
from .pipeline import run_analyze, run_design, run_plot, run_sweep, run_verify

OUTPUT_ENV_VAR = "WAVEFOCUS_OUTPUT_DIR"
DEFAULT_OUTPUT = "wavefocus_run"


def _resolve_output(config: DesignConfig | None, flag: str | None) -> Path:
    """Output directory precedence: --output flag, env var, config, default."""
    if flag:
        return Path(flag)
    env = os.environ.get(OUTPUT_ENV_VAR)
    if env:
        return Path(env)
    if config is not None and config.output_directory:
        return Path(config.output_directory)
    return Path(DEFAULT_OUTPUT)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavefocus",
        description=(
            "Design a scattering potential and particle density that focus "
            "an incident plane wave into a prescribed far-field pattern, "
            "then verify the design by an independent forward solve."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_design = sub.add_parser("design", help="run the design leg of a config")
    p_design.add_argument("config", help="INI config file")
    p_design.add_argument("--output", help="output directory (overrides env and config)")

    p_verify = sub.add_parser("verify", help="forward-solve a stored design bundle")
    p_verify.add_argument("bundle", help="output directory of a design run")

    p_sweep = sub.add_parser("sweep-t", help="scan clip bounds, design + verify each")
    p_sweep.add_argument("config", help="INI config file")
    p_sweep.add_argument(
        "--values",
        nargs="+",
        required=True,
        help="clip bounds to scan (at least two; pi suffix allowed)",
    )
    p_sweep.add_argument("--output", help="output directory (overrides env and config)")

    p_analyze = sub.add_parser("analyze", help="expand sampled sphere data")
    p_analyze.add_argument("samples", help="CSV with columns theta,phi,re,im")
    p_analyze.add_argument(
        "--band-limit", type=int, default=6, help="expansion degree cutoff"
    )
    p_analyze.add_argument("--coefficients", help="write the coefficient table here")

    p_plot = sub.add_parser("plot", help="re-render a figure from stored sections")
    p_plot.add_argument("bundle", help="output directory of a design/verify run")
    p_plot.add_argument(
        "--figure", choices=("pattern", "contour"), required=True
    )
    return parser


def _cmd_design(args) -> int:
    config = load_config(args.config)
    out_dir = _resolve_output(config, args.output)
    bundle = run_design(config, out_dir)
    report = bundle.design_report
    print(f"design written to {bundle.directory}")
    print(f"  max |q|          {report['max_abs_q']:.6g}")
    print(f"  min denominator  {report['min_denominator']:.6g}")
    print(f"  clipped coeffs   {report['clipped_count']}")
    print(f"  perturbation     {'applied' if report['perturbation']['applied'] else 'not needed'}")
    print(f"  max density      {report['density']['max_density']:.6g}")
    return 0


def _cmd_verify(args) -> int:
    report = run_verify(args.bundle)
    print(f"verification written to {args.bundle}")
    print(f"  relative misfit  {report['relative_misfit']:.6g}")
    print(f"  misfit bound ok  {report['bound']['cs_satisfied']}")
    print(f"  solver residual  {report['solver']['residual']:.3g}"
          f" in {report['solver']['iterations']} iterations")
    focusing = report["focusing"]
    if focusing is not None:
        print(f"  in-cone fraction {focusing['in_cone_fraction']:.4f}"
              f" (isotropic {focusing['isotropic_fraction']:.4f})")
    return 0


def _cmd_sweep(args) -> int:
    config = load_config(args.config)
    values = [parse_number(v) for v in args.values]
    out_dir = _resolve_output(config, args.output)
    rows = run_sweep(config, values, out_dir)
    print(f"sweep written to {out_dir}")
    for row in rows:
        if row["status"] == "ok":
            print(
                f"  T={row['clip_bound']:<10g} max|q|={row['max_abs_q']:<12.6g}"
                f" misfit={row['relative_misfit']:.4g}"
            )
        else:
            print(f"  T={row['clip_bound']:<10g} {row['status']}: {row['message']}")
    return 0


def _cmd_analyze(args) -> int:
    summary = run_analyze(args.samples, args.band_limit, args.coefficients)
    print(f"analyzed {args.samples} at band limit {summary['band_limit']}")
    print(f"  field norm     {summary['field_norm']:.8g}")
    print(f"  captured norm  {summary['captured_norm']:.8g}")
    print(f"  residual norm  {summary['residual_norm']:.4g}")
    if args.coefficients:
        print(f"  coefficients   {args.coefficients}")
    return 0


def _cmd_plot(args) -> int:
    path = run_plot(args.bundle, args.figure)
    print(f"figure written to {path}")
    return 0


_HANDLERS = {
    "design": _cmd_design,
    "verify": _cmd_verify,
    "sweep-t": _cmd_sweep,
    "analyze": _cmd_analyze,
    "plot": _cmd_plot,
}


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except WaveFocusError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
