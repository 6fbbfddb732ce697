"""Command line entry points: run, gp-slice, validate.

Exit codes: 0 on success, 1 for configuration problems (including usage
errors), 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from bora.errors import ConfigError
from bora.harness import gp_slice_svg, load_config, resolve_out_dir, run_and_emit


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bora",
        description="Budgeted resource allocation experiments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment and write its outputs")
    run_p.add_argument("--config", required=True, help="TOML experiment config")
    run_p.add_argument("--out", default=None, help="output directory override")
    run_p.add_argument("--seed", type=int, default=None, help="master seed override")

    slice_p = sub.add_parser("gp-slice", help="render a policy's posterior slice")
    slice_p.add_argument("--config", required=True, help="TOML experiment config")
    slice_p.add_argument("--policy", required=True, help="which BO policy to inspect")
    slice_p.add_argument("--t", required=True, type=int, help="round to inspect")
    slice_p.add_argument("--out", default=None, help="output directory override")

    val_p = sub.add_parser("validate", help="check a config without running it")
    val_p.add_argument("--config", required=True, help="TOML experiment config")
    return parser


def _cmd_run(args) -> int:
    config = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed must be nonnegative")
        config = replace(config, master_seed=args.seed)
    out_dir = resolve_out_dir(config, args.out)
    for path in run_and_emit(config, out_dir):
        print(f"wrote {path}")
    return 0


def _cmd_gp_slice(args) -> int:
    config = load_config(args.config)
    svg = gp_slice_svg(config, args.policy, args.t)
    out_dir = resolve_out_dir(config, args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"gp_slice_{args.policy}_t{args.t}.svg"
    path.write_text(svg + "\n")
    print(f"wrote {path}")
    return 0


def _cmd_validate(args) -> int:
    config = load_config(args.config)
    print(
        f"config ok: case={config.case} m={config.m} T={config.horizon} "
        f"runs={config.runs} policies={','.join(config.policies)}"
    )
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "gp-slice": _cmd_gp_slice,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; those are config problems here.
        return 0 if exc.code in (0, None) else 1
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
