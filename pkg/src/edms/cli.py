"""Command-line entry point: ``edms validate|run|report|synth``.

Exit codes: 0 success, 1 configuration or data error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from contextlib import nullcontext
from pathlib import Path

from .config import load_config, with_overrides
from .errors import DataError, EdmsError
from .evaluation import DENOMINATOR_MODES
from .synth import KINDS, synth_panel, write_suite
from .timeseries import FREQUENCIES, write_panel_csv

log = logging.getLogger("edms")

EXIT_OK, EXIT_DATA, EXIT_RUNTIME = 0, 1, 2


def _schedule(text: str):
    text = text.strip()
    if text in ("", "none", "[]"):
        return ()
    try:
        return tuple(int(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"schedule must be comma-separated integers, got {text!r}") from None


def _workers() -> int:
    raw = os.environ.get("EDMS_THREADS")
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            log.warning("ignoring non-integer EDMS_THREADS=%r", raw)
    return os.cpu_count() or 1


def _load(args):
    cfg = load_config(args.config)
    return with_overrides(
        cfg,
        seed=getattr(args, "seed", None),
        schedule=getattr(args, "schedule", None),
        mape_denominator=getattr(args, "mape_denominator", None),
        global_lstm=True if getattr(args, "global_lstm", False) else None,
        output_dir=Path(args.out) if getattr(args, "out", None) else None,
    )


def cmd_validate(args) -> int:
    from .experiment import prepare_panel

    cfg = _load(args)
    for spec in cfg.datasets:
        prep = prepare_panel(spec, cfg)
        p = prep.panel
        print(f"{spec.label}: frequency={p.frequency} M={len(p)} N={p.length} cutoff={prep.cutoff} "
              f"horizon={cfg.horizon_for(p.length)}")
        for sid, reason in sorted(prep.dropped.items()):
            print(f"  dropped {sid}: {reason}")
    return EXIT_OK


def cmd_run(args) -> int:
    from .experiment import run_dataset

    cfg = _load(args)
    workers = _workers()
    ok_total = 0
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else nullcontext()
    with pool as executor:
        for spec in cfg.datasets:
            res = run_dataset(spec, cfg, args.method, Path(cfg.output_dir) / spec.label, executor)
            ok_total += res.n_ok
            line = f"{spec.label}: {res.n_ok} series forecast -> {res.out_dir}"
            if res.report is not None:
                r = res.report
                line += (f"  EIMS MAPE {100 * r.eims_mape:.4f}%  EDMS MAPE {100 * r.edms_mape:.4f}%  "
                         f"delta {r.delta_percent:.2f}%")
            print(line)
    if ok_total == 0:
        log.error("every series failed")
        return EXIT_RUNTIME
    return EXIT_OK


def cmd_report(args) -> int:
    from .experiment import write_report

    out = Path(args.out) if args.out else Path("report")
    written = write_report(args.run_dirs, out, figures=not args.no_figures)
    print((out / "report.txt").read_text(encoding="utf-8"))
    for freq, path in written.items():
        print(f"{freq}: {path}")
    return EXIT_OK


def cmd_synth(args) -> int:
    if args.suite:
        config = write_suite(args.out, seed=args.seed)
        print(f"wrote synthetic suite; config at {config}")
        return EXIT_OK
    series = synth_panel(args.kind, args.n_series, args.length, args.frequency, seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    write_panel_csv(out, series)
    print(f"wrote {len(series)} {args.kind} series of length {args.length} to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="edms", description="Ensembled direct multi-step forecasting")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="load, align and prune datasets without forecasting")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="forecast held-out horizons with EIMS and/or EDMS")
    p.add_argument("--config", required=True)
    p.add_argument("--method", choices=("eims", "edms", "both"), default="both")
    p.add_argument("--schedule", type=_schedule, help="retrain steps, e.g. 12,60 (empty for none)")
    p.add_argument("--seed", type=int)
    p.add_argument("--mape-denominator", choices=DENOMINATOR_MODES)
    p.add_argument("--global-lstm", action="store_true", help="train one LSTM on all panel series")
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="merge run directories into comparison tables and plots")
    p.add_argument("run_dirs", nargs="+")
    p.add_argument("--out", help="report directory (default ./report)")
    p.add_argument("--no-figures", action="store_true", help="skip rendering PNG figures")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("synth", help="write synthetic panels")
    p.add_argument("--suite", action="store_true", help="write the bundled suite and its config into --out")
    p.add_argument("--kind", choices=KINDS, default="affine")
    p.add_argument("--n-series", type=int, default=3)
    p.add_argument("--length", type=int, default=60)
    p.add_argument("--frequency", choices=FREQUENCIES, default="annual")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except EdmsError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
