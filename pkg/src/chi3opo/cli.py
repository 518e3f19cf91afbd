"""Command-line front end for parameter sweeps.

Examples
--------
::

    chi3opo steady --f2 0:60:121 --d3 -8 --out steady.csv
    chi3opo duan-rot --config recipes/duan_rotated.toml --format json
    chi3opo verify --f2 40 --d3 -8
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .sweeps import Axis, ConfigError, SweepConfig, dumps_csv, dumps_json, emit_csv, emit_json, run_sweep, verify

VERBS = {
    "steady": "steady",
    "duan": "duan",
    "duan-rot": "duan_rotated",
    "vlf": "vlf",
    "oracle": "oracle",
    "verify": "oracle",
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="chi3opo", description="Steady states, noise spectra and entanglement witnesses.")
    p.add_argument("verb", choices=sorted(VERBS))
    p.add_argument("--config", help="TOML sweep recipe; flags override its values")
    p.add_argument("--out", help="output path (stdout when omitted)")
    p.add_argument("--format", choices=("csv", "json"))
    p.add_argument("--f2", help="value or start:stop:count")
    p.add_argument("--delta-p", dest="delta_p", help="value or start:stop:count")
    p.add_argument("--d3", help="value or start:stop:count")
    p.add_argument("--omega", type=float)
    p.add_argument("--gamma-ratio", dest="gamma_ratio", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--trajectories", type=int, help="SDE ensemble size")
    p.add_argument("--duration", type=float, help="SDE record length per trajectory")
    p.add_argument("--dt", type=float, help="SDE step")
    return p


def build_config(args: argparse.Namespace) -> SweepConfig:
    base = SweepConfig.from_toml(args.config).to_dict() if args.config else {}
    base["mode"] = VERBS[args.verb]
    if args.verb in ("oracle", "verify") and not args.config:
        # a single point unless a grid is requested
        base.setdefault("F2", Axis.fixed(0.0))
    for key, flag in (("F2", args.f2), ("delta_p", args.delta_p), ("d3", args.d3)):
        if flag is not None:
            base[key] = Axis.parse(flag)
    for key in ("omega", "gamma_ratio", "seed", "workers", "trajectories", "duration", "dt", "format"):
        value = getattr(args, key)
        if value is not None:
            base[key] = value
    if args.out is not None:
        base["output"] = args.out
    for key in ("F2", "delta_p", "d3"):
        if key in base:
            base[key] = Axis.parse(base[key])
    return SweepConfig(**base)


_VALUE_FLAGS = ("--f2", "--delta-p", "--d3", "--omega")


def _attach_negative_values(argv: list[str]) -> list[str]:
    """Let ``--d3 -10:-6:3`` through; argparse would read the range as an option."""
    out: list[str] = []
    it = iter(argv)
    for tok in it:
        if tok in _VALUE_FLAGS:
            nxt = next(it, None)
            if nxt is None:
                out.append(tok)
            else:
                out.append(f"{tok}={nxt}")
        else:
            out.append(tok)
    return out


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = _parser().parse_args(_attach_negative_values(argv))
    try:
        cfg = build_config(args)
    except (ConfigError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.verb == "verify":
        report = verify(cfg)
        for line in report.lines():
            print(line)
        print("verify: " + ("PASS" if report.passed else "FAIL"))
        return 0 if report.passed else 1

    data = run_sweep(cfg)
    try:
        if cfg.output:
            (emit_json if cfg.format == "json" else emit_csv)(data, cfg.output)
        else:
            sys.stdout.write(dumps_json(data) if cfg.format == "json" else dumps_csv(data))
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
