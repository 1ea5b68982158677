"""Command-line harness for the drift experiment.

``run`` executes the feedback loop and writes epochs.csv, summary.csv,
telemetry_<run-id>.jsonl and config.resolved.json into an output directory;
``summarize`` recomputes summary.csv for an existing run directory.

Exit codes: 0 success, 2 configuration error, 3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import HypercausalError, InvalidConfig
from .experiment import (
    BACKEND_CHOICES,
    ExperimentConfig,
    read_epochs_csv,
    run_experiment,
    summarize,
    write_run,
    write_summary_csv,
)
from .runtime import TelemetryLogger

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypercausal",
        description="Drift experiment harness with scalar feedback control.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the drift experiment")
    run.add_argument("--config", type=Path, help="JSON config file (defaults apply otherwise)")
    run.add_argument("--out", type=Path, required=True, help="output directory")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--epochs", type=int, help="override the epoch count")
    run.add_argument("--shots", type=int, help="override shots per evaluation")
    run.add_argument("--phi-max", type=float, help="override the peak phase drift (radians)")
    run.add_argument("--eps", type=float, help="override the per-epoch detuning slope")
    run.add_argument("--b-max", type=float, help="override the peak readout-bias mix")
    run.add_argument("--backend", choices=BACKEND_CHOICES, help="override the engine")
    run.add_argument("--freeze-alpha", action="store_true",
                     help="disable feedback updates (alpha stays at alpha0)")
    run.add_argument("--window", type=int, default=11, help="summary smoothing window")

    summ = sub.add_parser("summarize", help="recompute summary.csv for a run directory")
    summ.add_argument("run_dir", type=Path, help="directory containing epochs.csv")
    summ.add_argument("--window", type=int, default=11, help="summary smoothing window")
    return parser


def _resolve_config(args) -> ExperimentConfig:
    data: dict = {}
    if args.config is not None:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise InvalidConfig(f"config file not found: {args.config}") from None
        except json.JSONDecodeError as err:
            raise InvalidConfig(f"config file is not valid JSON: {err}") from None
        if not isinstance(data, dict):
            raise InvalidConfig("config file must hold a JSON object")
    overrides = {
        "seed": args.seed,
        "epochs": args.epochs,
        "shots": args.shots,
        "backend": args.backend,
    }
    data.update({k: v for k, v in overrides.items() if v is not None})
    drift = dict(data.get("drift", {}))
    for key, value in (("phi_max", args.phi_max), ("eps", args.eps), ("b_max", args.b_max)):
        if value is not None:
            drift[key] = value
    if drift:
        data["drift"] = drift
    if args.freeze_alpha:
        data["freeze_alpha"] = True
    return ExperimentConfig.from_dict(data)


def _cmd_run(args) -> int:
    config = _resolve_config(args)
    telemetry = TelemetryLogger()
    logs = run_experiment(config, telemetry)
    paths = write_run(args.out, config, logs, telemetry, window=args.window)
    final = logs[-1]
    print(f"run {config.run_id()}: {len(logs)} epochs, backend={config.backend}")
    print(f"  final alpha={final.alpha:.6f} loss_total={final.loss_total:.6f}")
    for label, path in paths.items():
        print(f"  {label}: {path}")
    return EXIT_OK


def _cmd_summarize(args) -> int:
    epochs_path = Path(args.run_dir) / "epochs.csv"
    if not epochs_path.exists():
        raise InvalidConfig(f"no epochs.csv in {args.run_dir}")
    logs = read_epochs_csv(epochs_path)
    rows = summarize(logs, window=args.window)
    out = Path(args.run_dir) / "summary.csv"
    write_summary_csv(out, rows)
    print(f"wrote {out} ({len(rows)} rows, window={args.window})")
    return EXIT_OK


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_summarize(args)
    except InvalidConfig as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except HypercausalError as err:
        print(f"runtime error: {err}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as err:
        print(f"runtime error: {err}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
