"""Command-line interface.

Subcommands: simulate, extreme, analyze, sync-check, metrics.
Exit codes: 0 success, 1 domain error, 2 usage error. Machine-readable
output (CSV/JSON/metric lines) goes to stdout or files; diagnostics go to
stderr.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import ContainmentError
from .harness import (
    analyze_directory,
    load_config,
    run_day_sweep,
    run_extreme,
    with_overrides,
)
from .illumination import FlashUnit
from .capture import flash_overlap, schedule_stereo
from .metrics import PSNR_CAP_DB, SsimParams, psnr, ssim
from .ppm import read_ppm, write_ppm


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flashcam",
        description="Radiometric flash-camera simulator and image-consistency tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run the simulated noon-to-sunset sweep")
    p.add_argument("config", help="JSON sweep config (see docs/config.md)")
    p.add_argument("out_dir", help="output directory for frames and reports")
    p.add_argument("--seed", type=int, default=None, help="override config seed")
    p.add_argument("--conditions", nargs="+", choices=["AL", "NL", "HDR"],
                   default=None, help="capture only these conditions")
    p.add_argument("--no-figures", action="store_true",
                   help="skip the PNG time-series figures")

    p = sub.add_parser("extreme", help="sun-in-frame AL vs NL comparison")
    p.add_argument("config", help="JSON sweep config with an emitter scene")
    p.add_argument("out_dir", help="output directory")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("analyze", help="consistency report over image files")
    p.add_argument("reference", help="reference PPM image")
    p.add_argument("images", nargs="+",
                   help="image files, or a single directory of .ppm files")
    p.add_argument("--window", type=int, default=8, help="SSIM window size")
    p.add_argument("--condition", default="AL", help="condition label for the rows")
    p.add_argument("--out", default=None,
                   help="directory for report files; prints CSV to stdout if omitted")
    p.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("sync-check", help="flash/shutter trigger feasibility")
    p.add_argument("--rate", type=float, default=20.0, help="stereo rate in Hz")
    p.add_argument("--flash-us", type=float, default=250.0,
                   help="flash pulse duration in microseconds")
    p.add_argument("--shutter-us", type=float, default=11.0,
                   help="shutter time in microseconds")

    p = sub.add_parser("metrics", help="SSIM/PSNR of one image pair")
    p.add_argument("reference")
    p.add_argument("image")
    p.add_argument("--window", type=int, default=8)
    p.add_argument("--report", default=None, help="also write a JSON report here")
    return parser


def _cmd_simulate(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    config = with_overrides(config, seed=args.seed,
                            conditions=tuple(args.conditions) if args.conditions else None)
    result = run_day_sweep(config)

    out_dir = Path(args.out_dir)
    frames_dir = out_dir / "frames"
    frames_dir.mkdir(parents=True, exist_ok=True)
    for (t, cond), frame in sorted(result.frames.items()):
        write_ppm(frame, frames_dir / f"{cond}_{t:07.1f}min.ppm")

    report = result.merged_report()
    (out_dir / "report.csv").write_text(report.to_csv())
    (out_dir / "report.json").write_text(report.to_json())
    sat_lines = ["time_min,condition,saturated_fraction"]
    for (t, cond) in sorted(result.saturation_stats):
        sat_lines.append(f"{t!r},{cond},{result.saturation_stats[(t, cond)]!r}")
    (out_dir / "saturation.csv").write_text("\n".join(sat_lines) + "\n")

    if not args.no_figures:
        from .plots import save_report_figures
        save_report_figures(report.rows, out_dir)

    for cond in result.conditions:
        rows = result.reports[cond].rows
        ssim_vals = [r.ssim_pct for r in rows]
        psnr_vals = [r.psnr_db for r in rows]
        print(f"condition={cond} frames={len(rows)} "
              f"min_ssim_pct={min(ssim_vals):.2f} "
              f"mean_ssim_pct={sum(ssim_vals) / len(ssim_vals):.2f} "
              f"mean_psnr_db={sum(psnr_vals) / len(psnr_vals):.2f}")
    return 0


def _cmd_extreme(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    config = with_overrides(config, seed=args.seed)
    result = run_extreme(config)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = ["condition,shutter_time_s,saturated_fraction,foreground_contrast"]
    for cond, frame in sorted(result.frames.items()):
        write_ppm(frame, out_dir / f"extreme_{cond}.ppm")
        st = result.stats[cond]
        lines.append(f"{cond},{st.shutter_time!r},{st.saturated_fraction!r},"
                     f"{st.foreground_contrast!r}")
    (out_dir / "extreme.csv").write_text("\n".join(lines) + "\n")

    print(f"sun_area_fraction={result.sun_area_fraction:.4f}")
    for cond in ("AL", "NL"):
        st = result.stats[cond]
        print(f"condition={cond} shutter_us={st.shutter_time * 1e6:.1f} "
              f"saturated_fraction={st.saturated_fraction:.4f} "
              f"foreground_contrast={st.foreground_contrast:.2f}")
    return 0


def _expand_images(paths: list[str]) -> list[str]:
    if len(paths) == 1 and Path(paths[0]).is_dir():
        found = sorted(str(p) for p in Path(paths[0]).glob("*.ppm"))
        if not found:
            raise ValueError(f"no .ppm files in directory {paths[0]}")
        return found
    return paths


def _cmd_analyze(args: argparse.Namespace) -> int:
    params = SsimParams(window=args.window)
    images = _expand_images(args.images)
    report = analyze_directory(args.reference, images, params,
                               condition=args.condition)
    if args.out is None:
        sys.stdout.write(report.to_csv())
    else:
        out_dir = Path(args.out)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "report.csv").write_text(report.to_csv())
        (out_dir / "report.json").write_text(report.to_json())
        if not args.no_figures:
            from .plots import save_report_figures
            save_report_figures(report.rows, out_dir)
        print(f"wrote {out_dir / 'report.csv'} ({len(report.rows)} rows)")
    return 0


def _cmd_sync_check(args: argparse.Namespace) -> int:
    flash = FlashUnit(pulse_duration=args.flash_us * 1e-6)
    try:
        schedule = schedule_stereo(args.rate, flash, args.shutter_us * 1e-6)
    except (ContainmentError, ValueError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 1
    overlap = flash_overlap(schedule.shutter_window, schedule.flash_window)
    print(f"period_s={schedule.frame_period!r} "
          f"shutter_window_us=[{schedule.shutter_window[0] * 1e6:.3f},"
          f"{schedule.shutter_window[1] * 1e6:.3f}] "
          f"flash_window_us=[{schedule.flash_window[0] * 1e6:.3f},"
          f"{schedule.flash_window[1] * 1e6:.3f}] "
          f"overlap_us={overlap * 1e6:.3f} cameras={schedule.n_cameras}")
    return 0


def _cmd_metrics(args: argparse.Namespace) -> int:
    params = SsimParams(window=args.window)
    x = read_ppm(args.reference)
    y = read_ppm(args.image)
    ssim_pct = 100.0 * ssim(x, y, params)
    psnr_db = min(psnr(x, y), PSNR_CAP_DB)
    print(f"ssim_pct={ssim_pct:.2f} psnr_db={psnr_db:.2f}")
    if args.report is not None:
        import json
        Path(args.report).write_text(json.dumps(
            {"reference": args.reference, "image": args.image,
             "ssim_pct": ssim_pct, "psnr_db": psnr_db}, indent=2) + "\n")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "extreme": _cmd_extreme,
    "analyze": _cmd_analyze,
    "sync-check": _cmd_sync_check,
    "metrics": _cmd_metrics,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
