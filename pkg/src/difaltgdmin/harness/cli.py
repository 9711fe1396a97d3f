"""Command-line entry point.

Exit status: 0 on success, 1 on invalid configuration or arguments,
2 when the run itself fails (including every trial aborting).
"""

import argparse
import sys
from pathlib import Path

from ..errors import ConfigError, DifAltGDminError, MissingColumns
from .config import PRESETS, SweepSpec, load_config, parse_values, preset
from .experiment import run_experiment, run_sweep
from .plots import MODES, emit_plot

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def build_parser():
    parser = argparse.ArgumentParser(
        prog="difaltgdmin",
        description="Simulate decentralized multi-task representation learning.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment (or the sweep a config/preset defines)")
    run_p.add_argument("--config", required=True,
                       help=f"INI file or preset name ({', '.join(sorted(PRESETS))})")
    run_p.add_argument("--paper-scale", action="store_true", help="use a preset's full-size values")
    run_p.add_argument("--out", help="output directory (default runs/<config name>)")
    run_p.add_argument("--threads", type=int, default=1, help="worker processes for the trials")
    run_p.add_argument("--no-plots", action="store_true", help="skip the SVG charts")

    sweep_p = sub.add_parser("sweep", help="run one experiment per value of a config field")
    sweep_p.add_argument("--config", required=True, help="INI file or preset name")
    sweep_p.add_argument("--axis", required=True, help="config field to vary, e.g. p or graph.p")
    sweep_p.add_argument("--values", required=True, help="comma-separated values")
    sweep_p.add_argument("--paper-scale", action="store_true")
    sweep_p.add_argument("--out")
    sweep_p.add_argument("--threads", type=int, default=1)
    sweep_p.add_argument("--no-plots", action="store_true")

    plot_p = sub.add_parser("plot", help="render a summary CSV as an SVG chart")
    plot_p.add_argument("--summary", required=True)
    plot_p.add_argument("--mode", required=True, choices=MODES)
    plot_p.add_argument("--out", required=True)
    plot_p.add_argument("--title")
    return parser


def _resolve(config, paper_scale):
    """``(ExperimentConfig, SweepSpec or None, name)`` for a file path or preset name."""
    path = Path(config)
    if path.is_file():
        if paper_scale:
            raise ConfigError("paper_scale: only presets have a paper-scale variant")
        cfg, spec = load_config(path)
        return cfg, spec, path.stem
    if config in PRESETS:
        spec = preset(config, paper_scale)
        return spec.base, spec, config + ("_paper" if paper_scale else "")
    raise ConfigError(f"config: {config!r} is neither a file nor a preset")


def _plots(summary_csv, out_dir, title):
    for mode in MODES:
        emit_plot(summary_csv, mode, Path(out_dir) / f"sd_{mode}.svg", title=title)


def _cmd_run(args, spec_override=None):
    cfg, spec, name = _resolve(args.config, args.paper_scale)
    if spec_override is not None:
        spec = SweepSpec(base=cfg, axis=spec_override[0], values=spec_override[1])
    if args.threads < 1:
        raise ConfigError(f"threads: must be >= 1, got {args.threads}")
    out_dir = Path(args.out or Path("runs") / name)
    if spec is None:
        outputs = [run_experiment(cfg, out_dir, args.threads)]
    else:
        outputs = run_sweep(spec, out_dir, args.threads)
    if not args.no_plots:
        _plots(out_dir / "summary.csv", out_dir, name)
    total = sum(len(o.results) for o in outputs)
    aborted = sum(o.n_aborted for o in outputs)
    print(f"wrote {out_dir} ({total - aborted}/{total} runs completed)")
    if aborted:
        print(f"{aborted} run(s) aborted; see aborts.csv", file=sys.stderr)
    return EXIT_RUNTIME if aborted == total else EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "sweep":
            return _cmd_run(args, spec_override=(args.axis, parse_values(args.values)))
        emit_plot(args.summary, args.mode, args.out, title=args.title)
        print(f"wrote {args.out}")
        return EXIT_OK
    except (ConfigError, MissingColumns) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (DifAltGDminError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
