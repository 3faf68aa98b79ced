"""Command-line entry point: run scenarios, compare methods, list builtins.

Errors surface as a single JSON object on stderr with a nonzero exit code so
wrapping tools can parse failures.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .calibration import SlidingWindowConfig
from .exceptions import LfmCalError
from .io_utils import read_json
from .scenarios import (
    builtin_scenario,
    builtin_scenario_names,
    compare_methods,
    config_from_dict,
    run_scenario,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lfmcal",
        description="Sliding-window matched-filter calibration of wideband LFM arrays",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a built-in scenario or a config file")
    run_p.add_argument("scenario", help="built-in scenario name or path to a config JSON")
    run_p.add_argument("--seed", type=int, default=None, help="override master seed")
    run_p.add_argument("--out-dir", default=None, help="artifact directory")
    run_p.add_argument("--window-len", type=int, default=None,
                       help="override the primary window length (samples)")
    run_p.add_argument("--overlap", type=float, default=None,
                       help="override the primary window overlap ratio [0,1)")
    run_p.add_argument("--subbands", type=int, default=None,
                       help="also run the sub-band estimator with this many bands")

    cmp_p = sub.add_parser("compare", help="compare estimator outputs in a manifest")
    cmp_p.add_argument("manifest", help="path to a scenario manifest.json")

    sub.add_parser("list-scenarios", help="list built-in scenario names")
    return parser


def _load_config(name_or_path: str):
    path = Path(name_or_path)
    if path.suffix == ".json" or path.is_file():
        return config_from_dict(read_json(path))
    return builtin_scenario(name_or_path)


def _cmd_run(args) -> int:
    cfg = _load_config(args.scenario)
    if args.seed is not None:
        cfg.master_seed = args.seed
    if args.window_len is not None or args.overlap is not None:
        primary = cfg.windows[0]
        cfg.windows[0] = SlidingWindowConfig(
            args.window_len if args.window_len is not None else primary.window_len,
            args.overlap if args.overlap is not None else primary.overlap_ratio,
        )
    if args.subbands is not None:
        cfg.subbands = args.subbands
    out_dir = args.out_dir if args.out_dir is not None else (cfg.out_dir or ".")
    manifest = run_scenario(cfg, out_dir=out_dir)
    print(f"scenario {cfg.name}: {len(manifest['files'])} artifacts in {out_dir}")
    print(str(Path(out_dir) / "manifest.json"))
    return 0


def _cmd_compare(args) -> int:
    result = compare_methods(args.manifest)
    print(f"scenario: {result['scenario']}")
    print(f"{'method':<24}{'trm_id':>8}{'amp_rmse_db':>16}{'phase_rmse_deg':>16}")
    for row in result["calibration"]:
        print(f"{row['method']:<24}{row['trm_id']:>8}"
              f"{row['amp_rmse_db']:>16.9g}{row['phase_rmse_deg']:>16.9g}")
    if result.get("beam"):
        print("beam metrics:")
        for tag, vals in sorted(result["beam"].items()):
            if isinstance(vals, dict):
                detail = ", ".join(f"{k}={v:.6g}" for k, v in sorted(vals.items()))
                print(f"  {tag}: {detail}")
            else:
                print(f"  {tag}: {vals:.6g}")
    return 0


def _cmd_list() -> int:
    for name, blurb in builtin_scenario_names().items():
        print(f"{name:<18}{blurb}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return _cmd_run(args)
        if args.command == "compare":
            return _cmd_compare(args)
        return _cmd_list()
    except LfmCalError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)},
                  sys.stderr, sort_keys=True)
        sys.stderr.write("\n")
        return 2
    except OSError as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)},
                  sys.stderr, sort_keys=True)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
